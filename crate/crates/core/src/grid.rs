//! Layer grid: a periodic horizontal torus times Chebyshev–Gauss–Lobatto
//! collocation on `[0, d]`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// One horizontal Fourier mode `k'` with frequency `2 pi k' / L`.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizontalMode {
    pub index: Vec<i64>,
    pub frequency: Vec<f64>,
    pub magnitude: f64,
    /// True if any component sits on the Nyquist index `-n/2`.
    pub nyquist: bool,
}

impl HorizontalMode {
    pub fn is_zero(&self) -> bool {
        self.index.iter().all(|&k| k == 0)
    }
}

pub(crate) struct FftPlans {
    pub forward: Arc<dyn Fft<f64>>,
    pub inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for FftPlans {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FftPlans(len = {})", self.forward.len())
    }
}

/// Discretization of the layer `Omega = T^{N-1}_L x (0, d)`.
#[derive(Debug)]
pub struct LayerGrid {
    dim: usize,
    depth: f64,
    period: f64,
    n_horizontal: usize,
    nodes: Vec<f64>,
    d1: DMatrix<f64>,
    d2: DMatrix<f64>,
    cc_weights: Vec<f64>,
    bary_weights: Vec<f64>,
    modes: Vec<HorizontalMode>,
    pub(crate) plans: FftPlans,
}

impl PartialEq for LayerGrid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.depth == other.depth
            && self.period == other.period
            && self.n_horizontal == other.n_horizontal
            && self.nodes.len() == other.nodes.len()
    }
}

/// Build a layer grid. `n_vertical` is the number of collocation nodes
/// (including both endpoints).
pub fn make_grid(
    dim: usize,
    depth: f64,
    period: f64,
    n_horizontal: usize,
    n_vertical: usize,
) -> Result<Arc<LayerGrid>> {
    LayerGrid::new(dim, depth, period, n_horizontal, n_vertical).map(Arc::new)
}

impl LayerGrid {
    pub fn new(
        dim: usize,
        depth: f64,
        period: f64,
        n_horizontal: usize,
        n_vertical: usize,
    ) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in {{2, 3}}")));
        }
        if !(depth > 0.0 && depth.is_finite()) {
            return Err(Error::InvalidGrid(format!("depth {depth} must be positive")));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidGrid(format!("period {period} must be positive")));
        }
        if n_horizontal == 0 || !n_horizontal.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "n_horizontal {n_horizontal} must be even and positive"
            )));
        }
        if n_vertical < 3 {
            return Err(Error::InvalidGrid(format!(
                "n_vertical {n_vertical} must be at least 3"
            )));
        }

        let m = n_vertical - 1;
        // x_j = cos(j pi / M) runs from 1 to -1; z = d (1 - x) / 2 runs from 0 to d.
        let x: Vec<f64> = (0..=m).map(|j| (j as f64 * PI / m as f64).cos()).collect();
        let mut nodes: Vec<f64> = x.iter().map(|&xj| 0.5 * depth * (1.0 - xj)).collect();
        nodes[0] = 0.0;
        nodes[m] = depth;
        // Exact symmetry about d/2 for odd node counts.
        if m.is_multiple_of(2) {
            nodes[m / 2] = 0.5 * depth;
        }

        let dx = chebyshev_diff_matrix(&x);
        let d1 = dx * (-2.0 / depth);
        let d2 = &d1 * &d1;
        let cc_weights = clenshaw_curtis_weights(m)
            .into_iter()
            .map(|w| w * 0.5 * depth)
            .collect();
        let bary_weights = (0..=m)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == m {
                    0.5 * s
                } else {
                    s
                }
            })
            .collect();

        let modes = build_modes(dim, period, n_horizontal);
        let mut planner = FftPlanner::new();
        let plans = FftPlans {
            forward: planner.plan_fft_forward(n_horizontal),
            inverse: planner.plan_fft_inverse(n_horizontal),
        };

        Ok(Self {
            dim,
            depth,
            period,
            n_horizontal,
            nodes,
            d1,
            d2,
            cc_weights,
            bary_weights,
            modes,
            plans,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> f64 {
        self.depth
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Horizontal resolution per direction.
    pub fn n_horizontal(&self) -> usize {
        self.n_horizontal
    }

    pub fn n_vertical(&self) -> usize {
        self.nodes.len()
    }

    /// Number of horizontal grid points (= number of horizontal modes).
    pub fn n_points(&self) -> usize {
        self.n_horizontal.pow(self.dim as u32 - 1)
    }

    pub fn vertical_nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn modes(&self) -> &[HorizontalMode] {
        &self.modes
    }

    /// First-derivative collocation matrix in `z`.
    pub fn d1(&self) -> &DMatrix<f64> {
        &self.d1
    }

    /// Second-derivative collocation matrix in `z`.
    pub fn d2(&self) -> &DMatrix<f64> {
        &self.d2
    }

    /// Clenshaw–Curtis weights on `[0, d]`.
    pub fn cc_weights(&self) -> &[f64] {
        &self.cc_weights
    }

    /// Area of one horizontal cell of the torus.
    pub fn cell_area(&self) -> f64 {
        self.period.powi(self.dim as i32 - 1) / self.n_points() as f64
    }

    /// Horizontal coordinates of point `p` (length `dim - 1`).
    pub fn point_coords(&self, p: usize) -> Vec<f64> {
        let h = self.period / self.n_horizontal as f64;
        match self.dim {
            2 => vec![p as f64 * h],
            _ => {
                let (i1, i2) = (p / self.n_horizontal, p % self.n_horizontal);
                vec![i1 as f64 * h, i2 as f64 * h]
            }
        }
    }

    /// Storage index of the mode with integer index `k` (per direction),
    /// if it is representable on this grid.
    pub fn mode_position(&self, k: &[i64]) -> Option<usize> {
        if k.len() != self.dim - 1 {
            return None;
        }
        let n = self.n_horizontal as i64;
        let mut pos = 0usize;
        for &kk in k {
            if kk < -n / 2 || kk >= n / 2 {
                return None;
            }
            let i = if kk >= 0 { kk } else { kk + n } as usize;
            pos = pos * self.n_horizontal + i;
        }
        Some(pos)
    }

    /// Storage index of the mode `-k` for the mode stored at `pos`.
    pub fn conjugate_position(&self, pos: usize) -> usize {
        let n = self.n_horizontal;
        match self.dim {
            2 => (n - pos) % n,
            _ => {
                let (i1, i2) = (pos / n, pos % n);
                ((n - i1) % n) * n + (n - i2) % n
            }
        }
    }

    /// Lagrange basis values `l_j(z)`, so that `sum_j l_j(z) f_j` is the
    /// interpolant at `z`.
    pub fn interpolation_row(&self, z: f64) -> Vec<f64> {
        let mut row: Vec<f64> = Vec::with_capacity(self.nodes.len());
        for (j, (&zj, &wj)) in self.nodes.iter().zip(&self.bary_weights).enumerate() {
            let diff = z - zj;
            if diff == 0.0 {
                let mut e = vec![0.0; self.nodes.len()];
                e[j] = 1.0;
                return e;
            }
            row.push(wj / diff);
        }
        let den: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= den);
        row
    }

    /// Evaluate the polynomial interpolant through `values` (one per node)
    /// at `z`, by the barycentric formula.
    pub fn interpolate<T>(&self, values: &[T], z: f64) -> T
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T> + std::ops::Div<f64, Output = T>,
    {
        let mut num: Option<T> = None;
        let mut den = 0.0;
        for (j, (&zj, &wj)) in self.nodes.iter().zip(&self.bary_weights).enumerate() {
            let diff = z - zj;
            if diff == 0.0 {
                return values[j];
            }
            let c = wj / diff;
            num = Some(match num {
                None => values[j] * c,
                Some(acc) => acc + values[j] * c,
            });
            den += c;
        }
        num.expect("grid has nodes") / den
    }
}

fn build_modes(dim: usize, period: f64, n: usize) -> Vec<HorizontalMode> {
    let signed = |i: usize| -> i64 {
        if i < n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    };
    let nyq = -(n as i64) / 2;
    let count = n.pow(dim as u32 - 1);
    (0..count)
        .map(|pos| {
            let index: Vec<i64> = match dim {
                2 => vec![signed(pos)],
                _ => vec![signed(pos / n), signed(pos % n)],
            };
            let frequency: Vec<f64> = index
                .iter()
                .map(|&k| 2.0 * PI * k as f64 / period)
                .collect();
            let magnitude = if index.iter().all(|&k| k == 0) {
                0.0
            } else {
                frequency.iter().map(|f| f * f).sum::<f64>().sqrt()
            };
            let nyquist = n > 1 && index.contains(&nyq);
            HorizontalMode {
                index,
                frequency,
                magnitude,
                nyquist,
            }
        })
        .collect()
}

/// Chebyshev collocation differentiation matrix on the nodes
/// `x_j = cos(j pi / M)`, with the negative-sum trick on the diagonal.
fn chebyshev_diff_matrix(x: &[f64]) -> DMatrix<f64> {
    let np1 = x.len();
    let n = np1 - 1;
    let c = |i: usize| if i == 0 || i == n { 2.0 } else { 1.0 };
    let mut d = DMatrix::zeros(np1, np1);
    for i in 0..np1 {
        for j in 0..np1 {
            if i != j {
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                d[(i, j)] = c(i) / c(j) * sign / (x[i] - x[j]);
            }
        }
    }
    for i in 0..np1 {
        let s: f64 = (0..np1).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
        d[(i, i)] = -s;
    }
    d
}

/// Clenshaw–Curtis weights on `[-1, 1]` for the nodes `cos(j pi / M)`.
fn clenshaw_curtis_weights(m: usize) -> Vec<f64> {
    let nf = m as f64;
    let theta: Vec<f64> = (0..=m).map(|j| j as f64 * PI / nf).collect();
    let mut w = vec![0.0; m + 1];
    let mut v = vec![1.0; m.saturating_sub(1)];
    if m.is_multiple_of(2) {
        w[0] = 1.0 / (nf * nf - 1.0);
        w[m] = w[0];
        for k in 1..m / 2 {
            let kf = k as f64;
            for (vi, th) in v.iter_mut().zip(&theta[1..m]) {
                *vi -= 2.0 * (2.0 * kf * th).cos() / (4.0 * kf * kf - 1.0);
            }
        }
        for (vi, th) in v.iter_mut().zip(&theta[1..m]) {
            *vi -= (nf * th).cos() / (nf * nf - 1.0);
        }
    } else {
        w[0] = 1.0 / (nf * nf);
        w[m] = w[0];
        for k in 1..=(m - 1) / 2 {
            let kf = k as f64;
            for (vi, th) in v.iter_mut().zip(&theta[1..m]) {
                *vi -= 2.0 * (2.0 * kf * th).cos() / (4.0 * kf * kf - 1.0);
            }
        }
    }
    for (j, vi) in v.into_iter().enumerate() {
        w[j + 1] = 2.0 * vi / nf;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_are_symmetric_lobatto_points() {
        let g = make_grid(2, 1.0, 2.0 * PI, 8, 9).unwrap();
        let z = g.vertical_nodes();
        assert_eq!(z.len(), 9);
        assert_eq!(z[0], 0.0);
        assert_eq!(z[8], 1.0);
        assert_eq!(z[4], 0.5);
        assert!(z.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn three_dimensional_grid_echoes_sizes() {
        let g = make_grid(3, 1.0, 2.0 * PI, 4, 5).unwrap();
        assert_eq!(g.n_points(), 16);
        assert_eq!(g.modes().len(), 16);
        assert_eq!(g.n_vertical(), 5);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(make_grid(2, 1.0, 2.0 * PI, 7, 9).is_err());
        assert!(make_grid(2, 0.0, 2.0 * PI, 8, 9).is_err());
        assert!(make_grid(2, 1.0, -1.0, 8, 9).is_err());
        assert!(make_grid(4, 1.0, 1.0, 8, 9).is_err());
    }

    #[test]
    fn mode_frequencies() {
        let g = make_grid(3, 1.0, 2.0, 4, 5).unwrap();
        let zero = &g.modes()[0];
        assert!(zero.is_zero());
        assert_eq!(zero.magnitude, 0.0);
        let pos = g.mode_position(&[1, -1]).unwrap();
        let m = &g.modes()[pos];
        assert_eq!(m.index, vec![1, -1]);
        assert!((m.magnitude - (2.0f64).sqrt() * PI).abs() < 1e-14);
        let conj = g.conjugate_position(pos);
        assert_eq!(g.modes()[conj].index, vec![-1, 1]);
        assert!(g.modes()[g.mode_position(&[-2, 0]).unwrap()].nyquist);
    }

    #[test]
    fn clenshaw_curtis_integrates_polynomials() {
        for m in [8usize, 9, 16] {
            let g = make_grid(2, 2.0, 1.0, 2, m + 1).unwrap();
            for deg in 0..=m {
                let s: f64 = g
                    .vertical_nodes()
                    .iter()
                    .zip(g.cc_weights())
                    .map(|(z, w)| w * z.powi(deg as i32))
                    .sum();
                let exact = 2.0f64.powi(deg as i32 + 1) / (deg as f64 + 1.0);
                assert!((s - exact).abs() < 1e-12 * exact.max(1.0), "m={m} deg={deg}");
            }
        }
    }

    #[test]
    fn barycentric_interpolation_is_exact_on_polynomials() {
        let g = make_grid(2, 1.0, 1.0, 2, 7).unwrap();
        let vals: Vec<f64> = g.vertical_nodes().iter().map(|z| z.powi(5) - 2.0 * z).collect();
        let z = 0.3137;
        let v = g.interpolate(&vals, z);
        assert!((v - (z.powi(5) - 2.0 * z)).abs() < 1e-13);
    }
}
