//! The weak Dirichlet–Neumann problem on the layer: find `u` with `u = 0` on
//! the top and `(grad u, grad phi) = (f, grad phi)` for all `phi` vanishing on
//! the top. In strong form, `Delta u = div f` with `d_N u = f_N` at the
//! bottom.
//!
//! Two constructions are provided. [`solve_weak_dn`] solves the per-mode
//! two-point problem by collocation. [`solve_weak_dn_kernel_path`] builds the
//! solution from the explicit half-line kernels plus a harmonic correction,
//! for forcing that vanishes at both boundaries.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{divergence, horizontal_symbol, laplacian, partial, Rank, SpectralField};
use crate::grid::LayerGrid;
use crate::kernels::{layer_harmonic_kernel, residue_kernel_pair};
use crate::modal::{assemble, map_modes, RealLu};
use crate::norms::{discrete_lq_norm, sobolev_norm};
use crate::quadrature::GaussRule;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Factored per-mode operators `d_z^2 - |xi'|^2` with a Neumann row at the
/// bottom and a Dirichlet row at the top. Nyquist modes are left out.
#[derive(Debug, Clone)]
pub struct DnSolver {
    grid: Arc<LayerGrid>,
    factors: Vec<Option<RealLu>>,
}

impl DnSolver {
    pub fn new(grid: &Arc<LayerGrid>) -> Result<Self> {
        let nz = grid.n_vertical();
        let factors = map_modes(grid, |m| {
            let mode = &grid.modes()[m];
            if mode.nyquist {
                return Ok(None);
            }
            let xi2 = mode.magnitude * mode.magnitude;
            let mut mat = grid.d2().clone() - DMatrix::identity(nz, nz) * xi2;
            mat.row_mut(0).copy_from(&grid.d1().row(0));
            mat.row_mut(nz - 1).fill(0.0);
            mat[(nz - 1, nz - 1)] = 1.0;
            RealLu::new(mat).map(Some).ok_or(Error::Singular {
                mode: m,
                lambda: ZERO,
            })
        });
        Ok(Self {
            grid: grid.clone(),
            factors: factors.into_iter().collect::<Result<_>>()?,
        })
    }

    pub fn grid(&self) -> &Arc<LayerGrid> {
        &self.grid
    }

    /// Solve `Delta u = source` in the interior, `d_z u(0) = bottom_flux`,
    /// `u(d) = top_value`, one boundary value per mode.
    pub fn solve(
        &self,
        source: &SpectralField,
        bottom_flux: &[Complex64],
        top_value: &[Complex64],
    ) -> Result<SpectralField> {
        crate::field::same_grid(&self.grid, source.grid())?;
        let np = self.grid.n_points();
        if source.rank() != Rank::Scalar || bottom_flux.len() != np || top_value.len() != np {
            return Err(Error::ShapeMismatch {
                expected: format!("scalar source and {np} boundary values"),
                found: format!("{:?} source, {} / {} values", source.rank(), bottom_flux.len(), top_value.len()),
            });
        }
        let nz = self.grid.n_vertical();
        let profiles = map_modes(&self.grid, |m| match &self.factors[m] {
            None => vec![vec![ZERO; nz]],
            Some(lu) => {
                let mut rhs = source.profile(0, m).to_vec();
                rhs[0] = bottom_flux[m];
                rhs[nz - 1] = top_value[m];
                vec![lu.solve(&rhs)]
            }
        });
        Ok(assemble(&self.grid, Rank::Scalar, profiles))
    }

    /// The weak Dirichlet–Neumann solution for forcing `f`.
    pub fn solve_weak(&self, f: &SpectralField) -> Result<SpectralField> {
        if f.rank() != Rank::Vector {
            return Err(Error::InvalidArgument("weak DN forcing must be a vector field".into()));
        }
        let div = divergence(f)?;
        let n = self.grid.dim() - 1;
        let bottom: Vec<Complex64> = (0..self.grid.n_points()).map(|m| f.profile(n, m)[0]).collect();
        let top = vec![ZERO; self.grid.n_points()];
        self.solve(&div, &bottom, &top)
    }
}

/// Weak Dirichlet–Neumann solution by per-mode collocation.
pub fn solve_weak_dn(f: &SpectralField) -> Result<SpectralField> {
    DnSolver::new(f.grid())?.solve_weak(f)
}

/// `Delta u = source`, `d_z u(0) = bottom_flux`, `u(d) = top_value`.
pub fn solve_dn_poisson(
    source: &SpectralField,
    bottom_flux: &[Complex64],
    top_value: &[Complex64],
) -> Result<SpectralField> {
    DnSolver::new(source.grid())?.solve(source, bottom_flux, top_value)
}

fn non_nyquist(grid: &LayerGrid) -> impl Iterator<Item = usize> + '_ {
    (0..grid.n_points()).filter(|&m| !grid.modes()[m].nyquist)
}

/// Largest defect of the strong form of the weak identity: interior
/// `Delta u - div f`, bottom `d_N u - f_N` and top `u`, relative to the
/// largest coefficient of `f` (absolute if `f = 0`).
pub fn weak_dn_residual(u: &SpectralField, f: &SpectralField) -> Result<f64> {
    u.check_compatible(&SpectralField::zeros(f.grid(), Rank::Scalar))?;
    let grid = f.grid().clone();
    let nz = grid.n_vertical();
    let n = grid.dim() - 1;
    let lap = laplacian(u);
    let div = divergence(f)?;
    let du = partial(u, n);
    let mut worst: f64 = 0.0;
    for m in non_nyquist(&grid) {
        let (l, d) = (lap.profile(0, m), div.profile(0, m));
        for i in 1..nz - 1 {
            worst = worst.max((l[i] - d[i]).norm());
        }
        worst = worst.max((du.profile(0, m)[0] - f.profile(n, m)[0]).norm());
        worst = worst.max(u.profile(0, m)[nz - 1].norm());
    }
    let scale = f.max_abs();
    Ok(if scale > 0.0 { worst / scale } else { worst })
}

/// Largest defect of weak solenoidality: interior `div p` and the bottom
/// normal trace `p_N(0)`. Absolute; callers normalize.
pub fn weak_divergence_defect(p: &SpectralField) -> Result<f64> {
    let grid = p.grid().clone();
    let nz = grid.n_vertical();
    let n = grid.dim() - 1;
    let div = divergence(p)?;
    let mut worst: f64 = 0.0;
    for m in non_nyquist(&grid) {
        for v in &div.profile(0, m)[1..nz - 1] {
            worst = worst.max(v.norm());
        }
        worst = worst.max(p.profile(n, m)[0].norm());
    }
    Ok(worst)
}

/// `||u||_{W^1_q} / ||f||_{L_q}` for the weak DN solution of `f`.
pub fn stability_ratio(f: &SpectralField, q: f64) -> Result<f64> {
    let u = solve_weak_dn(f)?;
    Ok(sobolev_norm(&u, 1, q)? / discrete_lq_norm(f, q)?)
}

/// Kernel-path solution `u = v + w` with its two parts.
#[derive(Debug, Clone)]
pub struct KernelPathSolution {
    pub u: SpectralField,
    /// Half-line part built from the residue kernels.
    pub v: SpectralField,
    /// Harmonic correction enforcing `u(d) = 0`.
    pub w: SpectralField,
}

/// Relative size of boundary values tolerated by the kernel path.
pub const SUPPORT_TOLERANCE: f64 = 1e-10;

/// Gauss points per subinterval of the kernel-path integrals.
const KERNEL_POINTS: usize = 64;

struct QuadPoint {
    y: f64,
    weight: f64,
    row: Vec<f64>,
}

fn quadrature_points(grid: &LayerGrid, rule: &GaussRule, a: f64, b: f64) -> Vec<QuadPoint> {
    if b <= a {
        return Vec::new();
    }
    rule.mapped(a, b)
        .map(|(y, weight)| QuadPoint {
            y,
            weight,
            row: grid.interpolation_row(y),
        })
        .collect()
}

fn interpolate(row: &[f64], profile: &[Complex64]) -> Complex64 {
    row.iter().zip(profile).map(|(l, v)| v * l).sum()
}

/// Weak DN solution from the explicit kernels, for `f` vanishing at both
/// boundaries.
pub fn solve_weak_dn_kernel_path(f: &SpectralField) -> Result<KernelPathSolution> {
    if f.rank() != Rank::Vector {
        return Err(Error::InvalidArgument("weak DN forcing must be a vector field".into()));
    }
    let grid = f.grid().clone();
    let nz = grid.n_vertical();
    let dim = grid.dim();
    let n = dim - 1;
    let depth = grid.depth();
    let scale = f.max_abs();
    let mut boundary: f64 = 0.0;
    for c in 0..dim {
        for m in 0..grid.n_points() {
            let p = f.profile(c, m);
            boundary = boundary.max(p[0].norm()).max(p[nz - 1].norm());
        }
    }
    if boundary > SUPPORT_TOLERANCE * scale {
        return Err(Error::SupportViolation {
            boundary,
            limit: SUPPORT_TOLERANCE * scale,
        });
    }

    let rule = GaussRule::new(KERNEL_POINTS);
    let nodes = grid.vertical_nodes().to_vec();
    // per target node: points below and above it
    let points: Vec<(Vec<QuadPoint>, Vec<QuadPoint>)> = nodes
        .iter()
        .map(|&x| (quadrature_points(&grid, &rule, 0.0, x), quadrature_points(&grid, &rule, x, depth)))
        .collect();

    let parts = map_modes(&grid, |m| -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        let mode = &grid.modes()[m];
        if mode.nyquist {
            return Ok((vec![ZERO; nz], vec![ZERO; nz]));
        }
        let xi = mode.magnitude;
        let fn_profile = f.profile(n, m);
        let mut v = vec![ZERO; nz];
        if mode.is_zero() {
            for (i, (_, above)) in points.iter().enumerate() {
                v[i] = -above.iter().map(|q| interpolate(&q.row, fn_profile) * q.weight).sum::<Complex64>();
            }
            return Ok((v, vec![ZERO; nz]));
        }
        // tangential forcing enters through i xi' . f'
        let tangential = |row: &[f64]| -> Complex64 {
            (0..n)
                .map(|j| horizontal_symbol(&grid, m, j) * interpolate(row, f.profile(j, m)))
                .sum()
        };
        for (i, &x) in nodes.iter().enumerate() {
            let (below, above) = &points[i];
            let mut acc = ZERO;
            for q in below.iter().chain(above) {
                let (r1m, r2m) = residue_kernel_pair(x - q.y, xi)?;
                let (r1p, r2p) = residue_kernel_pair(x + q.y, xi)?;
                let ft = tangential(&q.row);
                let fv = interpolate(&q.row, fn_profile);
                acc += (ft * (r1m + r1p) + fv * (r2m - r2p)) * q.weight;
            }
            v[i] = -acc / (2.0 * PI);
        }
        let top = v[nz - 1];
        let mut w = vec![ZERO; nz];
        for (i, &x) in nodes.iter().enumerate() {
            let k = layer_harmonic_kernel(1, x, depth, xi, depth)? + layer_harmonic_kernel(2, x, depth, xi, depth)?;
            w[i] = -top * k;
        }
        Ok((v, w))
    });
    let mut vs = Vec::with_capacity(parts.len());
    let mut ws = Vec::with_capacity(parts.len());
    for p in parts {
        let (v, w) = p?;
        vs.push(vec![v]);
        ws.push(vec![w]);
    }
    let v = assemble(&grid, Rank::Scalar, vs);
    let w = assemble(&grid, Rank::Scalar, ws);
    Ok(KernelPathSolution { u: &v + &w, v, w })
}
