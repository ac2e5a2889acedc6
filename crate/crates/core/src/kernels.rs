//! Closed-form layer kernels and a sampling check for Mikhlin-type symbol
//! bounds `|d^a m(xi')| <= C |xi'|^{-|a|}`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::quadrature::adaptive_integrate;

/// `(int e^{i a s}/(s^2+xi^2) ds, int i s e^{i a s}/(s^2+xi^2) ds)` over the
/// real line, by residues: `(pi e^{-|a| xi}/xi, -pi e^{-|a| xi} sign a)`.
pub fn residue_kernel_pair(a: f64, xi_mag: f64) -> Result<(f64, f64)> {
    if a == 0.0 || !a.is_finite() {
        return Err(Error::InvalidArgument(format!("a = {a} must be finite and nonzero")));
    }
    if !(xi_mag > 0.0 && xi_mag.is_finite()) {
        return Err(Error::InvalidArgument(format!("|xi'| = {xi_mag} must be positive")));
    }
    let e = (-a.abs() * xi_mag).exp();
    Ok((PI * e / xi_mag, -PI * e * a.signum()))
}

/// Truncation point of the numerical evaluation in [`residue_kernel_quadrature`].
pub const QUADRATURE_CUTOFF: f64 = 200.0;

/// `int_R^inf e^{i a s} f(s) ds` for `f = sum_p c_p / (s - p)`, by the
/// integration-by-parts expansion `-(e^{iaR}/(ia)) sum_k (i/a)^k f^(k)(R)`.
fn oscillatory_tail(a: f64, r: f64, poles: &[(Complex64, Complex64)]) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    let ratio = i / a;
    let mut total = Complex64::new(0.0, 0.0);
    let mut prev = f64::INFINITY;
    let mut fact = 1.0;
    let mut ratio_k = Complex64::new(1.0, 0.0);
    for k in 0..60 {
        if k > 0 {
            fact *= k as f64;
            ratio_k *= ratio;
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let deriv: Complex64 = poles
            .iter()
            .map(|(c, p)| c * sign * fact / (r - p).powi(k + 1))
            .sum();
        let term = ratio_k * deriv;
        let mag = term.norm();
        if mag > prev {
            break;
        }
        total += term;
        if mag < 1e-20 * total.norm() {
            break;
        }
        prev = mag;
    }
    -(i * a * r).exp() / (i * a) * total
}

/// Numerical evaluation of the two integrals in [`residue_kernel_pair`]:
/// adaptive Gauss quadrature on `[-200, 200]` plus the asymptotic tails.
pub fn residue_kernel_quadrature(a: f64, xi_mag: f64) -> Result<(f64, f64)> {
    residue_kernel_pair(a, xi_mag)?;
    let c = xi_mag;
    let r = QUADRATURE_CUTOFF;
    let g1 = |s: f64| (a * s).cos() / (s * s + c * c);
    let g2 = |s: f64| -s * (a * s).sin() / (s * s + c * c);
    let (body1, _) = adaptive_integrate(g1, 0.0, r, 1e-15, 1e-13);
    let (body2, _) = adaptive_integrate(g2, 0.0, r, 1e-15, 1e-13);
    let ic = Complex64::new(0.0, c);
    let half = Complex64::new(0.5, 0.0);
    let f1 = [(1.0 / (2.0 * ic), ic), (-1.0 / (2.0 * ic), -ic)];
    let f2 = [(half, ic), (half, -ic)];
    let tail1 = oscillatory_tail(a, r, &f1).re;
    let tail2 = -oscillatory_tail(a, r, &f2).im;
    Ok((2.0 * (body1 + tail1), 2.0 * (body2 + tail2)))
}

/// `e^{-xi (y + (-1)^k x_N)} / (1 + e^{-2 xi d})` for branch `k` in `{1, 2}`.
pub fn layer_harmonic_kernel(branch: u8, x_n: f64, y: f64, xi_mag: f64, depth: f64) -> Result<f64> {
    let shift = match branch {
        1 => y - x_n,
        2 => y + x_n,
        _ => return Err(Error::InvalidArgument(format!("kernel branch {branch} is not 1 or 2"))),
    };
    if shift < 0.0 || depth <= 0.0 || xi_mag < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "inadmissible kernel arguments (shift {shift}, depth {depth}, |xi'| {xi_mag})"
        )));
    }
    Ok((-xi_mag * shift).exp() / (1.0 + (-2.0 * xi_mag * depth).exp()))
}

/// Outcome of [`symbol_bound_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolReport {
    /// `sup |d^a m(xi')| |xi'|^{|a|}` over samples, for `|a| = 0..=max_order`.
    pub worst_ratio: Vec<f64>,
    pub cap: f64,
    pub pass: bool,
}

/// Smallest and largest sampled `|xi'|`.
pub const SYMBOL_RANGE: (f64, f64) = (1e-3, 1e3);

fn stencil(order: usize) -> &'static [(i32, f64)] {
    match order {
        0 => &[(0, 1.0)],
        1 => &[(-1, -0.5), (1, 0.5)],
        2 => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
        _ => &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
    }
}

fn multi_indices(n_h: usize, order: usize) -> Vec<Vec<usize>> {
    match n_h {
        1 => vec![vec![order]],
        _ => (0..=order).map(|a| vec![a, order - a]).collect(),
    }
}

/// Sample `symbol` at `sample_count` log-spaced magnitudes in
/// [`SYMBOL_RANGE`] along seeded random directions of `R^{n_h}` and estimate
/// the scaled derivatives by central differences with step `1e-2 |xi'|`.
/// PASS iff every ratio is finite and below `cap_factor` times the order-0
/// supremum.
pub fn symbol_bound_check<F>(
    symbol: F,
    n_h: usize,
    max_order: usize,
    sample_count: usize,
    seed: u64,
    cap_factor: f64,
) -> Result<SymbolReport>
where
    F: Fn(&[f64]) -> Complex64,
{
    if max_order > 3 {
        return Err(Error::UnsupportedOrder(max_order));
    }
    if !(1..=2).contains(&n_h) || sample_count < 2 {
        return Err(Error::InvalidArgument(format!(
            "need 1 or 2 horizontal directions and at least 2 samples (got {n_h}, {sample_count})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (SYMBOL_RANGE.0.ln(), SYMBOL_RANGE.1.ln());
    let mut worst = vec![0.0f64; max_order + 1];
    for s in 0..sample_count {
        let r = (lo + (hi - lo) * s as f64 / (sample_count - 1) as f64).exp();
        let dir: Vec<f64> = if n_h == 1 {
            vec![if rng.gen_bool(0.5) { 1.0 } else { -1.0 }]
        } else {
            let t = rng.gen_range(0.0..2.0 * PI);
            vec![t.cos(), t.sin()]
        };
        let xi: Vec<f64> = dir.iter().map(|d| r * d).collect();
        let h = 1e-2 * r;
        for (order, w) in worst.iter_mut().enumerate() {
            for alpha in multi_indices(n_h, order) {
                let mut acc = Complex64::new(0.0, 0.0);
                let s0 = stencil(alpha[0]);
                let s1 = if n_h == 2 { stencil(alpha[1]) } else { stencil(0) };
                for &(o0, c0) in s0 {
                    for &(o1, c1) in s1 {
                        let mut p = xi.clone();
                        p[0] += o0 as f64 * h;
                        if n_h == 2 {
                            p[1] += o1 as f64 * h;
                        }
                        let v = symbol(&p);
                        if !v.re.is_finite() || !v.im.is_finite() {
                            return Err(Error::InvalidArgument(format!("symbol not finite at {p:?}")));
                        }
                        acc += v * (c0 * c1);
                    }
                }
                let ratio = acc.norm() / h.powi(order as i32) * r.powi(order as i32);
                *w = w.max(ratio);
            }
        }
    }
    let cap = cap_factor * worst[0];
    let pass = worst.iter().all(|w| w.is_finite() && *w <= cap);
    Ok(SymbolReport {
        worst_ratio: worst,
        cap,
        pass,
    })
}
