//! The layer Stokes problem: no-slip bottom, stress-free top.
//!
//! [`ResolventSolver`] solves, per horizontal mode,
//!
//! ```text
//! lambda v - Div T(v, q) = f,   div v = g,   v(0) = 0,   T(v, q) e_N = h at z = d
//! ```
//!
//! by Chebyshev collocation. Since `Div T(v, q) = mu Delta v + mu grad div v
//! - grad q`, the term `mu grad div v` is replaced by the data `mu grad g`.
//! Implicit Euler steps of the evolution problem and the Duhamel recurrence
//! are single resolvent solves at `lambda = 1/tau`.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{
    divergence, gradient, horizontal_symbol, laplacian, partial, same_grid, Rank, SpectralField,
};
use crate::grid::LayerGrid;
use crate::modal::{assemble, map_modes, ComplexLu, RealLu};
use crate::norms::{discrete_lq_norm, sobolev_norm, Trajectory};
use crate::weak_dn::{weak_divergence_defect, DnSolver};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `T(v, q) = mu (grad v + grad v^T) - q I`.
pub fn stress_tensor(v: &SpectralField, q: &SpectralField, mu: f64) -> Result<SpectralField> {
    same_grid(v.grid(), q.grid())?;
    let dim = v.grid().dim();
    let jac = gradient(v)?;
    let mut comps = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            let mut t = (&jac.component(i * dim + j) + &jac.component(j * dim + i)).scaled(mu);
            if i == j {
                t.axpy(-1.0, q)?;
            }
            comps.push(t);
        }
    }
    SpectralField::from_components(&comps)
}

/// `e_N`-column of a matrix field at the top boundary, per component and mode.
fn top_normal_column(t: &SpectralField) -> Vec<Vec<Complex64>> {
    let grid = t.grid();
    let dim = grid.dim();
    let nz = grid.n_vertical();
    (0..dim)
        .map(|i| {
            (0..grid.n_points())
                .map(|m| t.profile(i * dim + dim - 1, m)[nz - 1])
                .collect()
        })
        .collect()
}

/// Data of one resolvent problem. `g` is the divergence and `h` the top
/// stress; both default to zero.
#[derive(Debug, Clone)]
pub struct ResolventData {
    pub lambda: Complex64,
    pub f: SpectralField,
    pub g: SpectralField,
    pub h: SpectralField,
}

impl ResolventData {
    pub fn new(lambda: Complex64, f: SpectralField) -> Self {
        let grid = f.grid().clone();
        Self {
            lambda,
            g: SpectralField::zeros(&grid, Rank::Scalar),
            h: SpectralField::zeros(&grid, Rank::Vector),
            f,
        }
    }

    pub fn with_divergence(mut self, g: SpectralField) -> Self {
        self.g = g;
        self
    }

    pub fn with_stress(mut self, h: SpectralField) -> Self {
        self.h = h;
        self
    }

    fn validate(&self) -> Result<()> {
        same_grid(self.f.grid(), self.g.grid())?;
        same_grid(self.f.grid(), self.h.grid())?;
        if self.f.rank() != Rank::Vector || self.g.rank() != Rank::Scalar || self.h.rank() != Rank::Vector {
            return Err(Error::InvalidArgument("resolvent data needs vector f, scalar g, vector h".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum ModeFactor {
    Nyquist,
    /// `k' = 0`: tangential, vertical-velocity and pressure problems decouple.
    Mean {
        tangential: ComplexLu,
        vertical: RealLu,
        pressure: RealLu,
    },
    Full(ComplexLu),
}

/// Factored per-mode resolvent systems for fixed `lambda` and `mu`.
#[derive(Debug, Clone)]
pub struct ResolventSolver {
    grid: Arc<LayerGrid>,
    mu: f64,
    lambda: Complex64,
    factors: Vec<ModeFactor>,
}

impl ResolventSolver {
    pub fn new(grid: &Arc<LayerGrid>, mu: f64, lambda: Complex64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidArgument(format!("viscosity {mu} must be positive")));
        }
        let factors = map_modes(grid, |m| factor_mode(grid, mu, lambda, m));
        Ok(Self {
            grid: grid.clone(),
            mu,
            lambda,
            factors: factors.into_iter().collect::<Result<_>>()?,
        })
    }

    pub fn grid(&self) -> &Arc<LayerGrid> {
        &self.grid
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn lambda(&self) -> Complex64 {
        self.lambda
    }

    /// Velocity and pressure for `f`, `g`, `h`.
    pub fn solve_parts(
        &self,
        f: &SpectralField,
        g: &SpectralField,
        h: &SpectralField,
    ) -> Result<(SpectralField, SpectralField)> {
        same_grid(&self.grid, f.grid())?;
        let data = ResolventData {
            lambda: self.lambda,
            f: f.clone(),
            g: g.clone(),
            h: h.clone(),
        };
        data.validate()?;
        let grid = &self.grid;
        let dim = grid.dim();
        let n = dim - 1;
        let nz = grid.n_vertical();
        let mu = self.mu;
        // mu grad g enters the momentum rows as data
        let grad_g = gradient(g)?;
        let profiles = map_modes(grid, |m| -> Vec<Vec<Complex64>> {
            match &self.factors[m] {
                ModeFactor::Nyquist => vec![vec![ZERO; nz]; dim + 1],
                ModeFactor::Full(lu) => {
                    let mut rhs = vec![ZERO; (dim + 1) * nz];
                    for j in 0..dim {
                        let fj = f.profile(j, m);
                        let gj = grad_g.profile(j, m);
                        for i in 1..nz - 1 {
                            rhs[j * nz + i] = fj[i] + gj[i] * mu;
                        }
                        rhs[j * nz + nz - 1] = h.profile(j, m)[nz - 1];
                    }
                    rhs[dim * nz..].copy_from_slice(g.profile(0, m));
                    let x = lu.solve(&rhs);
                    x.chunks(nz).map(|s| s.to_vec()).collect()
                }
                ModeFactor::Mean {
                    tangential,
                    vertical,
                    pressure,
                } => {
                    let mut out = Vec::with_capacity(dim + 1);
                    for j in 0..n {
                        let mut rhs = f.profile(j, m).to_vec();
                        rhs[0] = ZERO;
                        rhs[nz - 1] = h.profile(j, m)[nz - 1];
                        out.push(tangential.solve(&rhs));
                    }
                    let gp = g.profile(0, m);
                    let mut rhs = gp.to_vec();
                    rhs[0] = ZERO;
                    let vn = vertical.solve(&rhs);
                    let d1 = grid.d1();
                    let d2 = grid.d2();
                    let apply = |mat: &DMatrix<f64>, x: &[Complex64], i: usize| -> Complex64 {
                        (0..nz).map(|k| x[k] * mat[(i, k)]).sum()
                    };
                    let fnp = f.profile(n, m);
                    let mut rq = vec![ZERO; nz];
                    for i in 0..nz - 1 {
                        rq[i] = fnp[i] + apply(d1, gp, i) * mu - self.lambda * vn[i] + apply(d2, &vn, i) * mu;
                    }
                    rq[nz - 1] = apply(d1, &vn, nz - 1) * (2.0 * mu) - h.profile(n, m)[nz - 1];
                    let q = pressure.solve(&rq);
                    out.push(vn);
                    out.push(q);
                    out
                }
            }
        });
        let mut v_prof = Vec::with_capacity(profiles.len());
        let mut q_prof = Vec::with_capacity(profiles.len());
        for mut p in profiles {
            let q = p.pop().expect("pressure block");
            v_prof.push(p);
            q_prof.push(vec![q]);
        }
        Ok((assemble(grid, Rank::Vector, v_prof), assemble(grid, Rank::Scalar, q_prof)))
    }

    /// Velocity and pressure for `f` with zero divergence and stress data.
    pub fn solve(&self, f: &SpectralField) -> Result<(SpectralField, SpectralField)> {
        let g = SpectralField::zeros(&self.grid, Rank::Scalar);
        let h = SpectralField::zeros(&self.grid, Rank::Vector);
        self.solve_parts(f, &g, &h)
    }
}

fn factor_mode(grid: &LayerGrid, mu: f64, lambda: Complex64, m: usize) -> Result<ModeFactor> {
    let mode = &grid.modes()[m];
    let singular = || Error::Singular { mode: m, lambda };
    if mode.nyquist {
        return Ok(ModeFactor::Nyquist);
    }
    let nz = grid.n_vertical();
    let d1 = grid.d1();
    let d2 = grid.d2();
    let dim = grid.dim();
    let n = dim - 1;
    if mode.is_zero() {
        let mut t = DMatrix::<Complex64>::zeros(nz, nz);
        for i in 1..nz - 1 {
            for k in 0..nz {
                t[(i, k)] = c(-mu * d2[(i, k)]);
            }
            t[(i, i)] += lambda;
        }
        t[(0, 0)] = c(1.0);
        for k in 0..nz {
            t[(nz - 1, k)] = c(mu * d1[(nz - 1, k)]);
        }
        let mut vert = d1.clone();
        vert.row_mut(0).fill(0.0);
        vert[(0, 0)] = 1.0;
        let mut pres = d1.clone();
        pres.row_mut(nz - 1).fill(0.0);
        pres[(nz - 1, nz - 1)] = 1.0;
        return Ok(ModeFactor::Mean {
            tangential: ComplexLu::new(t).ok_or_else(singular)?,
            vertical: RealLu::new(vert).ok_or_else(singular)?,
            pressure: RealLu::new(pres).ok_or_else(singular)?,
        });
    }
    let size = (dim + 1) * nz;
    let idx = |comp: usize, i: usize| comp * nz + i;
    let xi2 = mode.magnitude * mode.magnitude;
    let sym: Vec<Complex64> = (0..n).map(|j| horizontal_symbol(grid, m, j)).collect();
    let mut a = DMatrix::<Complex64>::zeros(size, size);
    let last = nz - 1;
    for j in 0..dim {
        a[(idx(j, 0), idx(j, 0))] = c(1.0);
        for i in 1..last {
            let r = idx(j, i);
            for k in 0..nz {
                a[(r, idx(j, k))] += c(-mu * d2[(i, k)]);
            }
            a[(r, idx(j, i))] += lambda + mu * xi2;
            if j < n {
                a[(r, idx(dim, i))] += sym[j];
            } else {
                for k in 0..nz {
                    a[(r, idx(dim, k))] += c(d1[(i, k)]);
                }
            }
        }
        let r = idx(j, last);
        if j < n {
            for k in 0..nz {
                a[(r, idx(j, k))] += c(mu * d1[(last, k)]);
            }
            a[(r, idx(n, last))] += sym[j] * mu;
        } else {
            for k in 0..nz {
                a[(r, idx(n, k))] += c(2.0 * mu * d1[(last, k)]);
            }
            a[(r, idx(dim, last))] += c(-1.0);
        }
    }
    for i in 0..nz {
        let r = idx(dim, i);
        for (j, s) in sym.iter().enumerate() {
            a[(r, idx(j, i))] += *s;
        }
        for k in 0..nz {
            a[(r, idx(n, k))] += c(d1[(i, k)]);
        }
    }
    Ok(ModeFactor::Full(ComplexLu::new(a).ok_or_else(singular)?))
}

/// Solve one resolvent problem.
pub fn solve_resolvent(data: &ResolventData, mu: f64) -> Result<(SpectralField, SpectralField)> {
    data.validate()?;
    ResolventSolver::new(data.f.grid(), mu, data.lambda)?.solve_parts(&data.f, &data.g, &data.h)
}

fn data_scale(data: &ResolventData) -> f64 {
    data.f.max_abs().max(data.g.max_abs()).max(data.h.max_abs())
}

/// Largest defect of the collocated resolvent equations (interior momentum,
/// continuity, bottom velocity, top stress), relative to the largest data
/// coefficient (absolute for zero data). Nyquist modes are skipped.
pub fn resolvent_residual(data: &ResolventData, mu: f64, v: &SpectralField, q: &SpectralField) -> Result<f64> {
    data.validate()?;
    let grid = data.f.grid().clone();
    let dim = grid.dim();
    let nz = grid.n_vertical();
    let lap = laplacian(v);
    let grad_q = gradient(q)?;
    let grad_g = gradient(&data.g)?;
    let div = divergence(v)?;
    let t_top = top_normal_column(&stress_tensor(v, q, mu)?);
    let mut worst: f64 = 0.0;
    for m in 0..grid.n_points() {
        if grid.modes()[m].nyquist {
            continue;
        }
        for j in 0..dim {
            let (vj, lj, qj, fj, gj) = (
                v.profile(j, m),
                lap.profile(j, m),
                grad_q.profile(j, m),
                data.f.profile(j, m),
                grad_g.profile(j, m),
            );
            for i in 1..nz - 1 {
                let r = data.lambda * vj[i] - lj[i] * mu + qj[i] - fj[i] - gj[i] * mu;
                worst = worst.max(r.norm());
            }
            worst = worst.max(vj[0].norm());
            worst = worst.max((t_top[j][m] - data.h.profile(j, m)[nz - 1]).norm());
        }
        for (d, g) in div.profile(0, m).iter().zip(data.g.profile(0, m)) {
            worst = worst.max((d - g).norm());
        }
    }
    let scale = data_scale(data);
    Ok(if scale > 0.0 { worst / scale } else { worst })
}

/// Resolvent estimate quantities for one solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventBound {
    pub lambda: Complex64,
    /// `|lambda| ||v|| / ||f||`.
    pub velocity_ratio: f64,
    /// `(|lambda| ||v|| + |lambda|^{1/2} ||grad v|| + ||v||_{W^2} + ||q||_{W^1}) / ||f||`.
    pub full_ratio: f64,
}

/// Solve with `g = h = 0` and measure both resolvent ratios in `L_q`.
pub fn resolvent_bound(f: &SpectralField, lambda: Complex64, mu: f64, q: f64) -> Result<ResolventBound> {
    let (v, p) = ResolventSolver::new(f.grid(), mu, lambda)?.solve(f)?;
    let nf = discrete_lq_norm(f, q)?;
    let nv = discrete_lq_norm(&v, q)?;
    let ngv = discrete_lq_norm(&gradient(&v)?, q)?;
    let r = lambda.norm();
    Ok(ResolventBound {
        lambda,
        velocity_ratio: r * nv / nf,
        full_ratio: (r * nv + r.sqrt() * ngv + sobolev_norm(&v, 2, q)? + sobolev_norm(&p, 1, q)?) / nf,
    })
}

/// The pressure operator `K(v)` with its factored Poisson solver.
#[derive(Debug, Clone)]
pub struct PressureOperator {
    dn: DnSolver,
    mu: f64,
}

impl PressureOperator {
    pub fn new(grid: &Arc<LayerGrid>, mu: f64) -> Result<Self> {
        Ok(Self {
            dn: DnSolver::new(grid)?,
            mu,
        })
    }

    /// `F = Div(mu D(v)) - grad div v`.
    fn forcing(&self, v: &SpectralField) -> Result<SpectralField> {
        let t = stress_tensor(v, &SpectralField::zeros(v.grid(), Rank::Scalar), self.mu)?;
        let div_t = divergence(&t)?;
        Ok(&div_t - &gradient(&divergence(v)?)?)
    }

    /// `Delta K = div F` inside, `d_N K(0) = F_N(0)`,
    /// `K(d) = e_N . mu D(v) e_N - div v` on the top.
    pub fn apply(&self, v: &SpectralField) -> Result<SpectralField> {
        if v.rank() != Rank::Vector {
            return Err(Error::InvalidArgument("K acts on vector fields".into()));
        }
        let grid = v.grid().clone();
        let n = grid.dim() - 1;
        let nz = grid.n_vertical();
        let f = self.forcing(v)?;
        let div_f = divergence(&f)?;
        let dvn = partial(&v.component(n), n);
        let div_v = divergence(v)?;
        let bottom: Vec<Complex64> = (0..grid.n_points()).map(|m| f.profile(n, m)[0]).collect();
        let top: Vec<Complex64> = (0..grid.n_points())
            .map(|m| dvn.profile(0, m)[nz - 1] * (2.0 * self.mu) - div_v.profile(0, m)[nz - 1])
            .collect();
        self.dn.solve(&div_f, &bottom, &top)
    }

    /// `A v = Div T(v, K(v))`.
    pub fn reduced_stokes(&self, v: &SpectralField) -> Result<SpectralField> {
        let k = self.apply(v)?;
        divergence(&stress_tensor(v, &k, self.mu)?)
    }

    /// `A v` assembled as `mu Delta v + mu grad div v - grad K(v)`.
    pub fn reduced_stokes_expanded(&self, v: &SpectralField) -> Result<SpectralField> {
        let k = self.apply(v)?;
        let mut out = laplacian(v).scaled(self.mu);
        out.axpy(self.mu, &gradient(&divergence(v)?)?)?;
        out.axpy(-1.0, &gradient(&k)?)?;
        Ok(out)
    }
}

pub fn pressure_operator_k(v: &SpectralField, mu: f64) -> Result<SpectralField> {
    PressureOperator::new(v.grid(), mu)?.apply(v)
}

pub fn apply_reduced_stokes(v: &SpectralField, mu: f64) -> Result<SpectralField> {
    PressureOperator::new(v.grid(), mu)?.reduced_stokes(v)
}

/// Violations of the discrete domain of the Stokes operator (absolute).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainDefect {
    /// `max |v(0)|`.
    pub bottom: f64,
    /// `max |(mu D(v) e_N)_tau|` on the top.
    pub tangential_stress: f64,
    /// Weak divergence defect.
    pub divergence: f64,
}

impl DomainDefect {
    pub fn max(&self) -> f64 {
        self.bottom.max(self.tangential_stress).max(self.divergence)
    }
}

pub fn domain_defect(v: &SpectralField, mu: f64) -> Result<DomainDefect> {
    let grid = v.grid().clone();
    let dim = grid.dim();
    let top = top_normal_column(&stress_tensor(v, &SpectralField::zeros(&grid, Rank::Scalar), mu)?);
    let mut bottom: f64 = 0.0;
    let mut stress: f64 = 0.0;
    for m in 0..grid.n_points() {
        if grid.modes()[m].nyquist {
            continue;
        }
        for j in 0..dim {
            bottom = bottom.max(v.profile(j, m)[0].norm());
            if j < dim - 1 {
                stress = stress.max(top[j][m].norm());
            }
        }
    }
    Ok(DomainDefect {
        bottom,
        tangential_stress: stress,
        divergence: weak_divergence_defect(v)?,
    })
}

/// Implicit Euler for `d_t u = A u`: `u' = (I - tau A)^{-1} u`.
#[derive(Debug, Clone)]
pub struct Semigroup {
    solver: ResolventSolver,
    tau: f64,
}

impl Semigroup {
    pub fn new(grid: &Arc<LayerGrid>, tau: f64, mu: f64) -> Result<Self> {
        Self::shifted(grid, tau, mu, 0.0)
    }

    /// Steps of `d_t u + shift u = A u`.
    pub fn shifted(grid: &Arc<LayerGrid>, tau: f64, mu: f64, shift: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidArgument(format!("time step {tau} must be positive")));
        }
        Ok(Self {
            solver: ResolventSolver::new(grid, mu, c(1.0 / tau + shift))?,
            tau,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn solver(&self) -> &ResolventSolver {
        &self.solver
    }

    /// One step; returns the new velocity and its pressure.
    pub fn step(&self, u: &SpectralField) -> Result<(SpectralField, SpectralField)> {
        self.solver.solve(&u.scaled(1.0 / self.tau))
    }

    /// `steps` steps from `u0`, recorded as a trajectory with norm exponent `q`.
    pub fn evolve(&self, u0: &SpectralField, steps: usize, q: f64) -> Result<Trajectory> {
        let mut traj = Trajectory::new(self.tau, q)?;
        let mut u = u0.clone();
        traj.push(u.clone(), SpectralField::zeros(u0.grid(), Rank::Scalar))?;
        for _ in 0..steps {
            let (next, p) = self.step(&u)?;
            traj.push(next.clone(), p)?;
            u = next;
        }
        Ok(traj)
    }
}

pub fn semigroup_step(u: &SpectralField, tau: f64, mu: f64) -> Result<SpectralField> {
    Ok(Semigroup::new(u.grid(), tau, mu)?.step(u)?.0)
}

/// Tolerance on the relative weak divergence of Duhamel forcing.
pub const SOLENOIDAL_TOLERANCE: f64 = 1e-6;

/// `u^{n+1} = S(u^n) + tau S(F^{n+1})`, `u^0 = 0`, for forcing samples
/// `F^0 .. F^K` (the first is not used).
pub fn duhamel_convolve(forcing: &[SpectralField], tau: f64, mu: f64, q: f64) -> Result<Trajectory> {
    let first = forcing.first().ok_or(Error::EmptyTrajectory)?;
    let semigroup = Semigroup::new(first.grid(), tau, mu)?;
    duhamel_with(&semigroup, forcing, q)
}

pub fn duhamel_with(semigroup: &Semigroup, forcing: &[SpectralField], q: f64) -> Result<Trajectory> {
    let first = forcing.first().ok_or(Error::EmptyTrajectory)?;
    for f in forcing {
        let scale = f.max_abs();
        let defect = weak_divergence_defect(f)?;
        if defect > SOLENOIDAL_TOLERANCE * scale.max(f64::MIN_POSITIVE) && defect > 1e-300 {
            return Err(Error::NotSolenoidal(defect / scale));
        }
    }
    let grid = first.grid().clone();
    let tau = semigroup.tau();
    let mut traj = Trajectory::new(tau, q)?;
    let mut u = SpectralField::zeros(&grid, Rank::Vector);
    traj.push(u.clone(), SpectralField::zeros(&grid, Rank::Scalar))?;
    for f in &forcing[1..] {
        let mut rhs = u.clone();
        rhs.axpy(tau, f)?;
        let (next, p) = semigroup.step(&rhs)?;
        traj.push(next.clone(), p)?;
        u = next;
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::global::decay_fit;
    use crate::grid::make_grid;
    use crate::helmholtz::project;
    use crate::random::{random_smooth_field, random_solenoidal_field, solenoidal_from_potential};
    use std::f64::consts::PI;

    /// Stream function `p(z) sin(k x)` with `p = z^2 + c z^3` chosen so that
    /// the top tangential stress vanishes.
    fn domain_field(grid: &Arc<LayerGrid>, k: f64) -> SpectralField {
        let d = grid.depth();
        let kk = 2.0 * PI * k / grid.period();
        let cc = -(2.0 + kk * kk * d * d) / (6.0 * d + kk * kk * d * d * d);
        let psi = SpectralField::from_fn(grid, Rank::Scalar, |x, z| {
            vec![(z * z + cc * z * z * z) * (kk * x[0]).sin()]
        });
        solenoidal_from_potential(&psi)
    }

    #[test]
    fn stress_tensor_examples() {
        let g = make_grid(2, 1.0, 2.0 * PI, 8, 9).unwrap();
        let v = SpectralField::zeros(&g, Rank::Vector);
        let q = SpectralField::from_fn(&g, Rank::Scalar, |_, _| vec![1.0]);
        let t = stress_tensor(&v, &q, 1.0).unwrap();
        let expect = SpectralField::from_fn(&g, Rank::Matrix, |_, _| vec![-1.0, 0.0, 0.0, -1.0]);
        assert!((&t - &expect).max_abs() < 1e-15);
        let shear = SpectralField::from_fn(&g, Rank::Vector, |_, z| vec![z, 0.0]);
        let t = stress_tensor(&shear, &SpectralField::zeros(&g, Rank::Scalar), 1.0).unwrap();
        let expect = SpectralField::from_fn(&g, Rank::Matrix, |_, _| vec![0.0, 1.0, 1.0, 0.0]);
        assert!((&t - &expect).max_abs() < 1e-12);
        let g3 = make_grid(3, 1.0, 2.0, 8, 7).unwrap();
        let v = random_smooth_field(&g3, Rank::Vector, 1, 2);
        let q = random_smooth_field(&g3, Rank::Scalar, 2, 2);
        let t = stress_tensor(&v, &q, 0.7).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((&t.component(i * 3 + j) - &t.component(j * 3 + i)).max_abs() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_data_gives_zero() {
        let g = make_grid(2, 1.0, 2.0 * PI, 8, 9).unwrap();
        let data = ResolventData::new(c(1.0), SpectralField::zeros(&g, Rank::Vector));
        let (v, q) = solve_resolvent(&data, 1.0).unwrap();
        assert_eq!(v.max_abs(), 0.0);
        assert_eq!(q.max_abs(), 0.0);
    }

    #[test]
    fn residual_is_small_for_random_forcing() {
        for dim in [2, 3] {
            let g = make_grid(dim, 1.0, 2.0 * PI, 8, 17).unwrap();
            for lambda in [c(1.0), Complex64::from_polar(10.0, 0.75 * PI), c(0.0)] {
                let data = ResolventData::new(lambda, random_smooth_field(&g, Rank::Vector, 3, 2))
                    .with_divergence(random_smooth_field(&g, Rank::Scalar, 4, 2))
                    .with_stress(random_smooth_field(&g, Rank::Vector, 5, 2));
                let (v, q) = solve_resolvent(&data, 0.8).unwrap();
                let r = resolvent_residual(&data, 0.8, &v, &q).unwrap();
                assert!(r < 1e-8, "dim {dim} lambda {lambda}: {r}");
            }
        }
    }

    #[test]
    fn manufactured_solution_is_recovered() {
        let g = make_grid(2, 1.0, 2.0 * PI, 16, 25).unwrap();
        let mu = 0.5;
        let lambda = c(2.0);
        let v_star = SpectralField::from_fn(&g, Rank::Vector, |x, z| {
            vec![z * (1.0 + z) * x[0].sin() + z * z, z * z * (2.0 * x[0]).cos()]
        });
        let q_star = SpectralField::from_fn(&g, Rank::Scalar, |x, z| vec![(1.0 + z * z) * x[0].cos() + z]);
        let t = stress_tensor(&v_star, &q_star, mu).unwrap();
        let mut f = v_star.scaled(lambda.re);
        f.axpy(-1.0, &divergence(&t).unwrap()).unwrap();
        let gd = divergence(&v_star).unwrap();
        let mut h = SpectralField::zeros(&g, Rank::Vector);
        for j in 0..2 {
            h.set_component(j, &t.component(j * 2 + 1)).unwrap();
        }
        let data = ResolventData::new(lambda, f).with_divergence(gd).with_stress(h);
        let (v, q) = solve_resolvent(&data, mu).unwrap();
        assert!((&v - &v_star).max_abs() < 1e-8 * v_star.max_abs());
        assert!((&q - &q_star).max_abs() < 1e-8 * q_star.max_abs());
    }

    #[test]
    fn resolvent_pressure_equals_k_of_velocity() {
        let g = make_grid(2, 1.0, 2.0 * PI, 16, 25).unwrap();
        let f = random_solenoidal_field(&g, 21, 3);
        let (v, q) = ResolventSolver::new(&g, 1.0, c(1.0)).unwrap().solve(&f).unwrap();
        let k = pressure_operator_k(&v, 1.0).unwrap();
        assert!((&k - &q).max_abs() < 1e-6 * q.max_abs(), "{}", (&k - &q).max_abs() / q.max_abs());
    }

    #[test]
    fn k_vanishes_on_zero_and_constant_fields() {
        let g = make_grid(3, 1.0, 2.0, 8, 9).unwrap();
        assert_eq!(pressure_operator_k(&SpectralField::zeros(&g, Rank::Vector), 1.0).unwrap().max_abs(), 0.0);
        let cst = SpectralField::from_fn(&g, Rank::Vector, |_, _| vec![1.0, -2.0, 0.5]);
        assert!(pressure_operator_k(&cst, 1.0).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn k_satisfies_its_weak_problem() {
        let g = make_grid(2, 1.0, 2.0 * PI, 16, 17).unwrap();
        let mu = 1.3;
        let v = random_smooth_field(&g, Rank::Vector, 8, 3);
        let op = PressureOperator::new(&g, mu).unwrap();
        let k = op.apply(&v).unwrap();
        let f = op.forcing(&v).unwrap();
        // strong form of (grad K - F, grad phi) = 0: interior and bottom rows
        let lap = laplacian(&k);
        let divf = divergence(&f).unwrap();
        let dk = partial(&k, 1);
        let nz = g.n_vertical();
        let scale = f.max_abs();
        for m in 0..g.n_points() {
            if g.modes()[m].nyquist {
                continue;
            }
            for i in 1..nz - 1 {
                assert!((lap.profile(0, m)[i] - divf.profile(0, m)[i]).norm() < 1e-8 * scale);
            }
            assert!((dk.profile(0, m)[0] - f.profile(1, m)[0]).norm() < 1e-8 * scale);
        }
    }

    #[test]
    fn reduced_operator_is_solenoidal_and_assemblies_agree() {
        let g = make_grid(2, 1.0, 2.0 * PI, 16, 21).unwrap();
        let v = domain_field(&g, 1.0);
        let d = domain_defect(&v, 1.0).unwrap();
        assert!(d.max() < 1e-10 * v.max_abs(), "{d:?}");
        let op = PressureOperator::new(&g, 1.0).unwrap();
        let a = op.reduced_stokes(&v).unwrap();
        let b = op.reduced_stokes_expanded(&v).unwrap();
        assert!((&a - &b).max_abs() < 1e-8 * a.max_abs());
        assert!(weak_divergence_defect(&a).unwrap() < 1e-6 * a.max_abs());
        let split = project(&a).unwrap();
        assert!(split.potential.max_abs() < 1e-6 * a.max_abs());
        assert_eq!(apply_reduced_stokes(&SpectralField::zeros(&g, Rank::Vector), 1.0).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn semigroup_decays_and_preserves_divergence() {
        let g = make_grid(2, 1.0, 2.0 * PI, 16, 17).unwrap();
        let sg = Semigroup::new(&g, 0.05, 1.0).unwrap();
        let u0 = random_solenoidal_field(&g, 2, 3);
        let traj = sg.evolve(&u0, 100, 2.0).unwrap();
        for s in traj.samples() {
            assert!(weak_divergence_defect(&s.velocity).unwrap() < 1e-6 * u0.max_abs());
        }
        let norms: Vec<f64> = traj.norms().iter().map(|n| n.lq).collect();
        let fit = decay_fit(&traj.times(), &norms, 0.2).unwrap();
        assert!(fit.rate > 0.0 && fit.r_squared > 0.99, "{fit:?}");
        assert_eq!(semigroup_step(&SpectralField::zeros(&g, Rank::Vector), 0.1, 1.0).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn step_halving_is_second_order_consistent() {
        let g = make_grid(2, 1.0, 2.0 * PI, 8, 13).unwrap();
        // parabolic smoothing puts the data in the domain of every power of A
        let rough = random_solenoidal_field(&g, 6, 2);
        let u = Semigroup::new(&g, 0.05, 1.0).unwrap().evolve(&rough, 10, 2.0).unwrap().velocity(10).clone();
        let taus = [0.1, 0.05, 0.025, 0.0125, 0.00625, 0.003125];
        let diffs: Vec<f64> = taus
            .iter()
            .map(|&tau| {
                let one = semigroup_step(&u, tau, 1.0).unwrap();
                let half = Semigroup::new(&g, tau / 2.0, 1.0).unwrap();
                let two = half.step(&half.step(&u).unwrap().0).unwrap().0;
                (&one - &two).max_abs()
            })
            .collect();
        let orders: Vec<f64> = diffs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
        assert!(orders.windows(2).all(|w| w[1] > w[0]), "{orders:?}");
        assert!(*orders.last().unwrap() > 1.85, "{orders:?}");
    }

    #[test]
    fn duhamel_examples() {
        let g = make_grid(2, 1.0, 2.0 * PI, 8, 13).unwrap();
        let (tau, mu) = (0.05, 1.0);
        let zero = vec![SpectralField::zeros(&g, Rank::Vector); 5];
        let t = duhamel_convolve(&zero, tau, mu, 2.0).unwrap();
        assert!(t.samples().iter().all(|s| s.velocity.max_abs() == 0.0));

        // impulse at n = 1 then free evolution
        let f = random_solenoidal_field(&g, 9, 2);
        let mut forcing = vec![SpectralField::zeros(&g, Rank::Vector); 30];
        forcing[1] = f.clone();
        let t = duhamel_convolve(&forcing, tau, mu, 2.0).unwrap();
        let sg = Semigroup::new(&g, tau, mu).unwrap();
        let free = sg.evolve(&t.velocity(1).clone(), 28, 2.0).unwrap();
        for n in 1..30 {
            assert!((t.velocity(n) - free.velocity(n - 1)).max_abs() < 1e-8 * f.max_abs());
        }

        // constant forcing approaches the stationary solve
        let forcing = vec![f.clone(); 201];
        let t = duhamel_convolve(&forcing, tau, mu, 2.0).unwrap();
        let (stat, _) = ResolventSolver::new(&g, mu, c(0.0)).unwrap().solve(&f).unwrap();
        let gap = (t.velocity(200) - &stat).max_abs() / stat.max_abs();
        assert!(gap < 0.05, "{gap}");

        let bad = vec![random_smooth_field(&g, Rank::Vector, 1, 2); 3];
        assert!(matches!(duhamel_convolve(&bad, tau, mu, 2.0), Err(Error::NotSolenoidal(_))));
    }
}
