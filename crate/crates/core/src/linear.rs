//! The inhomogeneous linear problem
//!
//! ```text
//! d_t u - Div T(u, p) = f,   div u = g,   u(0) = 0 at z = 0,   T(u, p) e_N = h at z = d,   u(t=0) = a
//! ```
//!
//! by implicit Euler, its time-shifted variant, and the four-part splitting
//! `u = u1 + u2 + u3 + u4` (initial data; boundary/divergence data in a
//! shifted problem; gradient forcing in a shifted problem; solenoidal
//! forcing through Duhamel's formula).

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{gradient, same_grid, Rank, SpectralField};
use crate::global::decay_fit;
use crate::grid::LayerGrid;
use crate::helmholtz::project_with;
use crate::norms::{discrete_lq_norm, sobolev_norm, weighted_pressure_norm, weighted_series_norm, weighted_trajectory_norm, Trajectory};
use crate::random::random_solenoidal_field;
use crate::stokes::{duhamel_with, resolvent_residual, ResolventData, ResolventSolver, Semigroup};
use crate::weak_dn::DnSolver;

/// Time samples `t_n = n tau`, `n = 0..=steps`, of the data of the linear problem.
#[derive(Debug, Clone)]
pub struct LinearData {
    pub tau: f64,
    pub f: Vec<SpectralField>,
    pub g: Vec<SpectralField>,
    pub h: Vec<SpectralField>,
    pub a: SpectralField,
    /// Vector field with `div G = g`, used by the data norm when known.
    pub g_vector: Option<Vec<SpectralField>>,
}

impl LinearData {
    /// All data zero.
    pub fn zeros(grid: &Arc<LayerGrid>, tau: f64, steps: usize) -> Self {
        Self {
            tau,
            f: vec![SpectralField::zeros(grid, Rank::Vector); steps + 1],
            g: vec![SpectralField::zeros(grid, Rank::Scalar); steps + 1],
            h: vec![SpectralField::zeros(grid, Rank::Vector); steps + 1],
            a: SpectralField::zeros(grid, Rank::Vector),
            g_vector: None,
        }
    }

    /// Sample `data(t) = (f, g, h)` at `t_n`.
    pub fn sample<F>(a: SpectralField, tau: f64, steps: usize, data: F) -> Self
    where
        F: Fn(f64) -> (SpectralField, SpectralField, SpectralField),
    {
        let mut out = Self::zeros(a.grid(), tau, steps);
        for n in 0..=steps {
            let (f, g, h) = data(n as f64 * tau);
            out.f[n] = f;
            out.g[n] = g;
            out.h[n] = h;
        }
        out.a = a;
        out
    }

    pub fn steps(&self) -> usize {
        self.f.len() - 1
    }

    pub fn grid(&self) -> &Arc<LayerGrid> {
        self.a.grid()
    }

    fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidArgument(format!("time step {} must be positive", self.tau)));
        }
        let k = self.f.len();
        if k == 0 || self.g.len() != k || self.h.len() != k {
            return Err(Error::ShapeMismatch {
                expected: "equal nonempty f, g, h series".into(),
                found: format!("{} / {} / {}", k, self.g.len(), self.h.len()),
            });
        }
        let grid = self.grid();
        for x in self.f.iter().chain(&self.g).chain(&self.h) {
            same_grid(grid, x.grid())?;
        }
        Ok(())
    }

    /// Sample-wise `self + other`.
    pub fn sum(&self, other: &LinearData) -> Result<LinearData> {
        if self.f.len() != other.f.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} samples", self.f.len()),
                found: other.f.len().to_string(),
            });
        }
        let add = |x: &[SpectralField], y: &[SpectralField]| x.iter().zip(y).map(|(a, b)| a + b).collect();
        Ok(LinearData {
            tau: self.tau,
            f: add(&self.f, &other.f),
            g: add(&self.g, &other.g),
            h: add(&self.h, &other.h),
            a: &self.a + &other.a,
            g_vector: None,
        })
    }
}

/// Implicit Euler with `lambda = 1/tau + shift`; `u^0 = a`.
fn step_linear(data: &LinearData, mu: f64, shift: f64, q: f64) -> Result<Trajectory> {
    data.validate()?;
    let grid = data.grid().clone();
    let tau = data.tau;
    let solver = ResolventSolver::new(&grid, mu, Complex64::new(1.0 / tau + shift, 0.0))?;
    let mut traj = Trajectory::new(tau, q)?;
    let mut u = data.a.clone();
    traj.push(u.clone(), SpectralField::zeros(&grid, Rank::Scalar))?;
    for n in 0..data.steps() {
        let mut f = data.f[n + 1].clone();
        f.axpy(1.0 / tau, &u)?;
        let (next, p) = solver.solve_parts(&f, &data.g[n + 1], &data.h[n + 1])?;
        traj.push(next.clone(), p)?;
        u = next;
    }
    Ok(traj)
}

/// Monolithic implicit-Euler solve of the linear problem. The pressure
/// sample at `t = 0` is zero.
pub fn solve_linear_ibvp(data: &LinearData, mu: f64, q: f64) -> Result<Trajectory> {
    step_linear(data, mu, 0.0, q)
}

/// `d_t u + 2 delta u - Div T(u, p) = f` with zero initial data (the
/// initial field of `data` is ignored).
pub fn solve_time_shifted(delta: f64, data: &LinearData, mu: f64, q: f64) -> Result<Trajectory> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidArgument(format!("shift {delta} must be nonnegative")));
    }
    let mut zeroed = data.clone();
    zeroed.a = SpectralField::zeros(data.grid(), Rank::Vector);
    step_linear(&zeroed, mu, 2.0 * delta, q)
}

/// Largest per-step residual of the collocated equations along a
/// trajectory produced with shift `2 delta`.
pub fn linear_residual(traj: &Trajectory, data: &LinearData, mu: f64, delta: f64) -> Result<f64> {
    let tau = data.tau;
    let lambda = Complex64::new(1.0 / tau + 2.0 * delta, 0.0);
    let mut worst: f64 = 0.0;
    for n in 0..data.steps().min(traj.len().saturating_sub(1)) {
        let mut f = data.f[n + 1].clone();
        f.axpy(1.0 / tau, traj.velocity(n))?;
        let step = ResolventData::new(lambda, f)
            .with_divergence(data.g[n + 1].clone())
            .with_stress(data.h[n + 1].clone());
        worst = worst.max(resolvent_residual(&step, mu, traj.velocity(n + 1), traj.pressure(n + 1))?);
    }
    Ok(worst)
}

/// Linear solution split into its four parts.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub total: Trajectory,
    /// `u1` (initial data), `u2` (divergence and stress data), `u3`
    /// (gradient forcing), `u4` (solenoidal forcing).
    pub parts: [Trajectory; 4],
}

pub fn solve_linear_decomposed(data: &LinearData, sigma0: f64, mu: f64, q: f64) -> Result<Decomposition> {
    data.validate()?;
    if !(sigma0 > 0.0 && sigma0.is_finite()) {
        return Err(Error::InvalidArgument(format!("shift sigma0 = {sigma0} must be positive")));
    }
    let grid = data.grid().clone();
    let tau = data.tau;
    let steps = data.steps();
    let zero_v = SpectralField::zeros(&grid, Rank::Vector);
    let zero_s = SpectralField::zeros(&grid, Rank::Scalar);

    let u1 = Semigroup::new(&grid, tau, mu)?.evolve(&data.a, steps, q)?;

    let mut d2 = data.clone();
    d2.f = vec![zero_v.clone(); steps + 1];
    let u2 = solve_time_shifted(sigma0, &d2, mu, q)?;

    let dn = DnSolver::new(&grid)?;
    let mut grad_part = Vec::with_capacity(steps + 1);
    let mut sol_part = Vec::with_capacity(steps + 1);
    for n in 0..=steps {
        let mut ft = data.f[n].clone();
        ft.axpy(2.0 * sigma0, u2.velocity(n))?;
        let split = project_with(&dn, &ft)?;
        grad_part.push(split.gradient_part());
        sol_part.push(split.p_part);
    }

    let d3 = LinearData {
        tau,
        f: grad_part,
        g: vec![zero_s; steps + 1],
        h: vec![zero_v; steps + 1],
        a: data.a.clone(),
        g_vector: None,
    };
    let u3 = solve_time_shifted(sigma0, &d3, mu, q)?;

    let forcing: Vec<SpectralField> = sol_part
        .iter()
        .enumerate()
        .map(|(n, p)| {
            let mut x = p.clone();
            x.axpy(2.0 * sigma0, u3.velocity(n)).expect("same grid");
            x
        })
        .collect();
    let u4 = duhamel_with(&Semigroup::new(&grid, tau, mu)?, &forcing, q)?;

    let total = u1.sum(&u2)?.sum(&u3)?.sum(&u4)?;
    Ok(Decomposition {
        total,
        parts: [u1, u2, u3, u4],
    })
}

/// Relative gap `|||a - b||| / |||b|||` in the weighted trajectory norm.
pub fn relative_trajectory_gap(a: &Trajectory, b: &Trajectory, p: f64, q: f64, gamma: f64) -> Result<f64> {
    let diff = a.difference(b)?;
    let nb = weighted_trajectory_norm(b, p, q, gamma)?;
    let nd = weighted_trajectory_norm(&diff, p, q, gamma)?;
    Ok(if nb > 0.0 { nd / nb } else { nd })
}

/// Decay rate of the semigroup on this grid: fitted rate of the `L_2` norm
/// of random solenoidal data over `steps` steps.
pub fn measure_decay_rate(grid: &Arc<LayerGrid>, mu: f64, tau: f64, steps: usize, seed: u64) -> Result<f64> {
    let u0 = random_solenoidal_field(grid, seed, 2);
    let traj = Semigroup::new(grid, tau, mu)?.evolve(&u0, steps, 2.0)?;
    let norms: Vec<f64> = traj.norms().iter().map(|n| n.lq).collect();
    Ok(decay_fit(&traj.times(), &norms, 0.3)?.rate)
}

/// Default `sigma0`: half the measured decay rate.
pub fn default_sigma0(grid: &Arc<LayerGrid>, mu: f64, tau: f64, seed: u64) -> Result<f64> {
    Ok(0.5 * measure_decay_rate(grid, mu, tau, 100, seed)?)
}

/// Discrete maximal-regularity ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MrReport {
    /// Weighted norm of `(d_t u, u, grad u, grad^2 u)` plus weighted pressure `W^1_q` norm.
    pub left_norm: f64,
    /// Weighted data norms plus `||a||_{W^2_q}`.
    pub right_norm: f64,
    /// `left / right`; `None` when the data vanish.
    pub ratio: Option<f64>,
}

fn backward_difference(series: &[SpectralField], n: usize, tau: f64) -> SpectralField {
    match (series.len(), n) {
        (0 | 1, _) => series[n].scaled(0.0),
        (_, 0) => (&series[1] - &series[0]).scaled(1.0 / tau),
        _ => (&series[n] - &series[n - 1]).scaled(1.0 / tau),
    }
}

/// Vector representative with divergence `g`: `grad psi`, `Delta psi = g`,
/// `psi(d) = 0`, `d_N psi(0) = 0`.
fn divergence_potential(dn: &DnSolver, g: &SpectralField) -> Result<SpectralField> {
    let np = g.grid().n_points();
    let zero = vec![Complex64::new(0.0, 0.0); np];
    gradient(&dn.solve(g, &zero, &zero)?)
}

/// Left and right sides of the discrete maximal-regularity estimate. Time
/// regularity of `g`, `G` and `h` is measured by `W^1`-in-time surrogates.
pub fn mr_estimate_report(traj: &Trajectory, data: &LinearData, p: f64, q: f64, gamma: f64) -> Result<MrReport> {
    data.validate()?;
    let left = weighted_trajectory_norm(traj, p, q, gamma)? + weighted_pressure_norm(traj, p, q, gamma)?;
    let tau = data.tau;
    let gvec = match &data.g_vector {
        Some(v) => v.clone(),
        None => {
            let dn = DnSolver::new(data.grid())?;
            data.g.iter().map(|g| divergence_potential(&dn, g)).collect::<Result<_>>()?
        }
    };
    let values: Vec<f64> = (0..data.f.len())
        .map(|n| -> Result<f64> {
            Ok(discrete_lq_norm(&data.f[n], q)?
                + sobolev_norm(&data.g[n], 1, q)?
                + discrete_lq_norm(&backward_difference(&data.g, n, tau), q)?
                + discrete_lq_norm(&backward_difference(&gvec, n, tau), q)?
                + sobolev_norm(&data.h[n], 1, q)?
                + discrete_lq_norm(&backward_difference(&data.h, n, tau), q)?)
        })
        .collect::<Result<_>>()?;
    let right = weighted_series_norm(&values, tau, p, gamma)? + sobolev_norm(&data.a, 2, q)?;
    Ok(MrReport {
        left_norm: left,
        right_norm: right,
        ratio: (right > 0.0).then(|| left / right),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::divergence;
    use crate::grid::make_grid;
    use crate::random::random_smooth_field;
    use crate::stokes::stress_tensor;
    use std::f64::consts::PI;

    fn grid() -> Arc<LayerGrid> {
        make_grid(2, 1.0, 2.0 * PI, 8, 13).unwrap()
    }

    /// Data of the exact solution `u* = e^{-beta t} U`, `p* = e^{-beta t} P`.
    fn manufactured(g: &Arc<LayerGrid>, tau: f64, steps: usize, mu: f64) -> (LinearData, SpectralField, SpectralField) {
        let beta = 0.3;
        let u = SpectralField::from_fn(g, Rank::Vector, |x, z| {
            vec![z * (1.0 + z) * x[0].sin(), z * z * (1.0 + x[0].cos())]
        });
        let p = SpectralField::from_fn(g, Rank::Scalar, |x, z| vec![(1.0 + z) * x[0].cos()]);
        let t = stress_tensor(&u, &p, mu).unwrap();
        let mut f0 = u.scaled(-beta);
        f0.axpy(-1.0, &divergence(&t).unwrap()).unwrap();
        let g0 = divergence(&u).unwrap();
        let h0 = SpectralField::from_components(&[t.component(1), t.component(3)]).unwrap();
        let data = LinearData::sample(u.clone(), tau, steps, |s| {
            let e = (-beta * s).exp();
            (f0.scaled(e), g0.scaled(e), h0.scaled(e))
        });
        (data, u, p)
    }

    fn max_rel_error(traj: &Trajectory, u: &SpectralField, beta: f64) -> f64 {
        (0..traj.len())
            .map(|n| {
                let exact = u.scaled((-beta * n as f64 * traj.step()).exp());
                (traj.velocity(n) - &exact).max_abs() / exact.max_abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn zero_data_gives_zero_trajectory() {
        let g = grid();
        let data = LinearData::zeros(&g, 0.1, 5);
        let t = solve_linear_ibvp(&data, 1.0, 2.0).unwrap();
        assert!(t.samples().iter().all(|s| s.velocity.max_abs() == 0.0 && s.pressure.max_abs() == 0.0));
        let t = solve_time_shifted(0.5, &data, 1.0, 2.0).unwrap();
        assert!(t.samples().iter().all(|s| s.velocity.max_abs() == 0.0));
    }

    #[test]
    fn initial_data_only_matches_semigroup() {
        let g = grid();
        let mut data = LinearData::zeros(&g, 0.05, 20);
        data.a = random_solenoidal_field(&g, 3, 2);
        let t = solve_linear_ibvp(&data, 1.0, 2.0).unwrap();
        let s = Semigroup::new(&g, 0.05, 1.0).unwrap().evolve(&data.a, 20, 2.0).unwrap();
        for n in 0..=20 {
            assert!((t.velocity(n) - s.velocity(n)).max_abs() <= 1e-10 * data.a.max_abs());
        }
    }

    #[test]
    fn manufactured_solution_converges_first_order() {
        let g = grid();
        let mu = 1.0;
        let (d1, u, _) = manufactured(&g, 0.02, 50, mu);
        let (d2, _, _) = manufactured(&g, 0.01, 100, mu);
        let t1 = solve_linear_ibvp(&d1, mu, 2.0).unwrap();
        let t2 = solve_linear_ibvp(&d2, mu, 2.0).unwrap();
        let (e1, e2) = (max_rel_error(&t1, &u, 0.3), max_rel_error(&t2, &u, 0.3));
        assert!(e2 < 1e-3, "{e2}");
        let order = (e1 / e2).log2();
        assert!((order - 1.0).abs() < 0.2, "{order}");
        assert!(linear_residual(&t2, &d2, mu, 0.0).unwrap() < 1e-6);
    }

    #[test]
    fn divergence_follows_data() {
        let g = grid();
        let gd = random_smooth_field(&g, Rank::Scalar, 4, 1);
        let data = LinearData::sample(SpectralField::zeros(&g, Rank::Vector), 0.05, 10, |t| {
            (SpectralField::zeros(&g, Rank::Vector), gd.scaled(t.sin()), SpectralField::zeros(&g, Rank::Vector))
        });
        let traj = solve_time_shifted(0.5, &data, 1.0, 2.0).unwrap();
        for n in 1..traj.len() {
            let d = divergence(traj.velocity(n)).unwrap();
            assert!((&d - &data.g[n]).max_abs() < 1e-6 * gd.max_abs());
        }
    }

    #[test]
    fn shifted_run_decays_faster_by_twice_the_shift() {
        let g = grid();
        let (tau, steps, delta) = (0.05, 120, 0.5);
        let mut data = LinearData::zeros(&g, tau, steps);
        data.f[1] = random_solenoidal_field(&g, 8, 2);
        let rate = |traj: &Trajectory| {
            let norms: Vec<f64> = traj.norms().iter().map(|n| n.lq).collect();
            decay_fit(&traj.times()[1..], &norms[1..], 0.3).unwrap().rate
        };
        let plain = rate(&solve_time_shifted(0.0, &data, 1.0, 2.0).unwrap());
        let shifted = rate(&solve_time_shifted(delta, &data, 1.0, 2.0).unwrap());
        let gain = shifted - plain;
        assert!((gain - 2.0 * delta).abs() < 0.2 * 2.0 * delta, "{plain} {shifted}");
    }

    #[test]
    fn solution_is_linear_in_data() {
        let g = grid();
        let (d1, _, _) = manufactured(&g, 0.05, 10, 1.0);
        let mut d2 = LinearData::zeros(&g, 0.05, 10);
        d2.a = random_solenoidal_field(&g, 1, 2);
        d2.f[3] = random_smooth_field(&g, Rank::Vector, 2, 2);
        let sum = solve_linear_ibvp(&d1.sum(&d2).unwrap(), 1.0, 2.0).unwrap();
        let parts = solve_linear_ibvp(&d1, 1.0, 2.0).unwrap().sum(&solve_linear_ibvp(&d2, 1.0, 2.0).unwrap()).unwrap();
        assert!(relative_trajectory_gap(&sum, &parts, 2.0, 2.0, 0.0).unwrap() < 1e-10);
    }

    #[test]
    fn decomposition_reproduces_monolithic_solve() {
        let g = grid();
        let (tau, steps, sigma0) = (0.05, 40, 1.0);
        // initial data only
        let mut data = LinearData::zeros(&g, tau, steps);
        data.a = random_solenoidal_field(&g, 5, 2);
        let dec = solve_linear_decomposed(&data, sigma0, 1.0, 2.0).unwrap();
        for part in &dec.parts[1..] {
            assert!(part.samples().iter().all(|s| s.velocity.max_abs() == 0.0));
        }
        // full data
        let (mut data, _, _) = manufactured(&g, tau, steps, 1.0);
        for n in 0..=steps {
            data.f[n].axpy((n as f64 * tau).cos(), &random_smooth_field(&g, Rank::Vector, 6, 2)).unwrap();
        }
        let mono = solve_linear_ibvp(&data, 1.0, 2.0).unwrap();
        let dec = solve_linear_decomposed(&data, sigma0, 1.0, 2.0).unwrap();
        let gap = relative_trajectory_gap(&dec.total, &mono, 2.0, 2.0, 0.0).unwrap();
        assert!(gap < 1e-4, "{gap}");
        for n in 0..=steps {
            assert!((dec.total.pressure(n) - mono.pressure(n)).max_abs() < 1e-8 * (1.0 + mono.pressure(n).max_abs()));
        }
    }

    #[test]
    fn mr_report_examples() {
        let g = grid();
        let data = LinearData::zeros(&g, 0.1, 4);
        let t = solve_linear_ibvp(&data, 1.0, 2.0).unwrap();
        let r = mr_estimate_report(&t, &data, 2.0, 2.0, 0.0).unwrap();
        assert_eq!(r.ratio, None);
        let ratios: Vec<f64> = [(0.04, 25), (0.02, 50)]
            .iter()
            .map(|&(tau, steps)| {
                let (d, _, _) = manufactured(&g, tau, steps, 1.0);
                let t = solve_linear_ibvp(&d, 1.0, 2.0).unwrap();
                mr_estimate_report(&t, &d, 2.0, 2.0, 0.5).unwrap().ratio.unwrap()
            })
            .collect();
        assert!((ratios[1] / ratios[0] - 1.0).abs() < 0.2, "{ratios:?}");
    }
}
