//! One-dimensional quadrature helpers on top of Gauss–Legendre rules.

use gauss_quad::legendre::GaussLegendre;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(points: usize) -> Self {
        let rule = GaussLegendre::new(points.max(2)).expect("at least two points");
        let (nodes, weights) = rule.as_node_weight_pairs().iter().copied().unzip();
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (h, c) = (0.5 * (b - a), 0.5 * (b + a));
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (c + h * x, h * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// Adaptive bisection with a fixed Gauss rule: an interval is accepted when
/// the whole-interval estimate and the sum over its halves agree to
/// `max(abs_tol, rel_tol * |estimate|)` scaled by the interval's share of the
/// range. Returns the estimate and the accumulated error bound.
pub fn adaptive_integrate<F>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    const MAX_INTERVALS: usize = 200_000;
    let rule = GaussRule::new(10);
    let total = (b - a).abs();
    let whole = rule.integrate(a, b, &f);
    let mut stack = vec![(a, b, whole)];
    let mut sum = 0.0;
    let mut err = 0.0;
    let mut processed = 0;
    while let Some((lo, hi, est)) = stack.pop() {
        processed += 1;
        let mid = 0.5 * (lo + hi);
        let left = rule.integrate(lo, mid, &f);
        let right = rule.integrate(mid, hi, &f);
        let refined = left + right;
        let diff = (refined - est).abs();
        let share = (hi - lo).abs() / total;
        let tol = abs_tol.max(rel_tol * refined.abs()) * share;
        if diff <= tol || processed >= MAX_INTERVALS || (hi - lo).abs() < 1e-12 * total {
            sum += refined;
            err += diff;
        } else {
            stack.push((mid, hi, right));
            stack.push((lo, mid, left));
        }
    }
    (sum, err)
}
