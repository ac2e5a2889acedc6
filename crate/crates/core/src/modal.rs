//! Per-mode dense solves shared by the vertical boundary-value solvers.

use nalgebra::{DMatrix, DVector, LU};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::field::{Rank, SpectralField};
use crate::grid::LayerGrid;

/// Pivot ratio below which a per-mode matrix is reported as singular.
pub const PIVOT_RATIO: f64 = 1e-14;

fn pivot_ratio<T: nalgebra::ComplexField<RealField = f64>>(lu: &LU<T, nalgebra::Dyn, nalgebra::Dyn>) -> f64 {
    let u = lu.u();
    let diag: Vec<f64> = (0..u.nrows()).map(|i| u[(i, i)].clone().abs()).collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        0.0
    } else {
        min / max
    }
}

/// LU factors of a real matrix, applied to complex right-hand sides.
#[derive(Debug, Clone)]
pub struct RealLu(LU<f64, nalgebra::Dyn, nalgebra::Dyn>);

impl RealLu {
    /// `None` if the pivot ratio is below [`PIVOT_RATIO`].
    pub fn new(mat: DMatrix<f64>) -> Option<Self> {
        let lu = mat.lu();
        (pivot_ratio(&lu) >= PIVOT_RATIO).then_some(Self(lu))
    }

    pub fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let n = rhs.len();
        let b = DMatrix::from_fn(n, 2, |i, j| if j == 0 { rhs[i].re } else { rhs[i].im });
        let x = self.0.solve(&b).expect("factor checked nonsingular");
        (0..n).map(|i| Complex64::new(x[(i, 0)], x[(i, 1)])).collect()
    }
}

/// LU factors of a complex matrix.
#[derive(Debug, Clone)]
pub struct ComplexLu(LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>);

impl ComplexLu {
    pub fn new(mat: DMatrix<Complex64>) -> Option<Self> {
        let lu = mat.lu();
        (pivot_ratio(&lu) >= PIVOT_RATIO).then_some(Self(lu))
    }

    pub fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let b = DVector::from_column_slice(rhs);
        self.0.solve(&b).expect("factor checked nonsingular").as_slice().to_vec()
    }
}

/// Evaluate `f` on every horizontal mode in parallel, keeping mode order.
pub fn map_modes<T, F>(grid: &LayerGrid, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..grid.n_points()).into_par_iter().map(f).collect()
}

/// Assemble a field from per-mode profiles `profiles[m][c]`.
pub fn assemble(grid: &std::sync::Arc<LayerGrid>, rank: Rank, profiles: Vec<Vec<Vec<Complex64>>>) -> SpectralField {
    let mut out = SpectralField::zeros(grid, rank);
    for (m, comps) in profiles.into_iter().enumerate() {
        for (c, p) in comps.into_iter().enumerate() {
            out.profile_mut(c, m).copy_from_slice(&p);
        }
    }
    out
}
