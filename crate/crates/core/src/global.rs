//! Smallness gate, Picard iteration for the nonlinear problem, and decay fits.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{divergence, gradient, Rank, SpectralField};
use crate::grid::LayerGrid;
use crate::lagrangian::{deformation_history, nonlinear_f, nonlinear_g, nonlinear_g_vector, nonlinear_h_trace};
use crate::linear::{mr_estimate_report, solve_linear_ibvp, LinearData};
use crate::norms::{sobolev_norm, weighted_pressure_norm, weighted_trajectory_norm, Trajectory};
use crate::random::random_smooth_field;

/// `delta_0 = 1/(16 c0 M4)`, `eps_0 = delta_0/(2 c0)`: the equality case of
/// `4 c0 M4 delta_0^2 <= delta_0/4` and `c0 eps_0 <= delta_0/2`.
pub fn smallness_gate(c0: f64, m4: f64) -> Result<(f64, f64)> {
    if !(c0 > 0.0 && m4 > 0.0 && c0.is_finite() && m4.is_finite()) {
        return Err(Error::InvalidArgument(format!("constants must be positive (c0 = {c0}, M4 = {m4})")));
    }
    let delta = 1.0 / (16.0 * c0 * m4);
    Ok((delta, delta / (2.0 * c0)))
}

/// Least-squares fit of `log y = b - rate t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub rate: f64,
    pub r_squared: f64,
    pub samples: usize,
}

/// Minimum number of samples left after the burn-in.
pub const MIN_FIT_SAMPLES: usize = 10;

/// Fit the tail of a positive series after dropping the first
/// `burn_in` fraction of the samples.
pub fn decay_fit(times: &[f64], values: &[f64], burn_in: f64) -> Result<DecayFit> {
    if times.len() != values.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} values", times.len()),
            found: values.len().to_string(),
        });
    }
    if !(0.0..1.0).contains(&burn_in) {
        return Err(Error::InvalidArgument(format!("burn-in fraction {burn_in} must be in [0, 1)")));
    }
    let start = (burn_in * times.len() as f64).floor() as usize;
    let (t, y) = (&times[start..], &values[start..]);
    if t.len() < MIN_FIT_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "{} samples after burn-in; need {MIN_FIT_SAMPLES}",
            t.len()
        )));
    }
    if let Some((i, &v)) = y.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::NonPositive { index: start + i, value: v });
    }
    let logs: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let lm = logs.iter().sum::<f64>() / n;
    let stt: f64 = t.iter().map(|x| (x - tm).powi(2)).sum();
    let stl: f64 = t.iter().zip(&logs).map(|(x, l)| (x - tm) * (l - lm)).sum();
    let sll: f64 = logs.iter().map(|l| (l - lm).powi(2)).sum();
    let slope = stl / stt;
    let r_squared = if sll == 0.0 { 1.0 } else { stl * stl / (stt * sll) };
    Ok(DecayFit {
        rate: -slope,
        r_squared,
        samples: t.len(),
    })
}

/// Parameters of the fixed-point iteration and of its `X` norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardConfig {
    pub mu: f64,
    pub tau: f64,
    pub steps: usize,
    pub tolerance: f64,
    pub max_iter: usize,
    /// Time exponent of the `X` norm.
    pub p: f64,
    /// Space exponent of the `X` norm.
    pub q: f64,
    /// Exponential weight `e^{gamma t}` of the `X` norm.
    pub gamma: f64,
    /// Warn when `||a||_{W^2_q}` exceeds this.
    pub amplitude_limit: Option<f64>,
}

impl PicardConfig {
    pub fn new(mu: f64, tau: f64, horizon: f64) -> Self {
        Self {
            mu,
            tau,
            steps: (horizon / tau).round() as usize,
            tolerance: 1e-8,
            max_iter: 30,
            p: 2.0,
            q: 2.0,
            gamma: 0.0,
            amplitude_limit: None,
        }
    }

    pub fn horizon(&self) -> f64 {
        self.steps as f64 * self.tau
    }
}

/// Course of the fixed-point iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionReport {
    /// Number of nonlinear iterates after the linear warm start.
    pub iterates: usize,
    /// `X` norm of the warm start and of every iterate.
    pub x_norms: Vec<f64>,
    /// `X` norm of successive differences `u^{k} - u^{k-1}`, `k >= 1`.
    pub differences: Vec<f64>,
    /// `differences[k+1] / differences[k]`.
    pub ratios: Vec<f64>,
    pub converged: bool,
    /// Last difference relative to the last iterate.
    pub final_gap: f64,
    pub warnings: Vec<String>,
}

/// `X` norm: weighted parabolic norm of the velocity plus weighted `W^1_q` norm of the pressure.
pub fn x_norm(traj: &Trajectory, cfg: &PicardConfig) -> Result<f64> {
    Ok(weighted_trajectory_norm(traj, cfg.p, cfg.q, cfg.gamma)? + weighted_pressure_norm(traj, cfg.p, cfg.q, cfg.gamma)?)
}

/// Data `F(u)`, `G(u)`, `H(u) e_N` (and `G`-vector) along a trajectory, with initial field `a`.
pub fn nonlinear_data(traj: &Trajectory, a: &SpectralField, mu: f64) -> Result<LinearData> {
    let states = deformation_history(traj)?;
    let mut data = LinearData::zeros(a.grid(), traj.step(), traj.len() - 1);
    let mut gvec = Vec::with_capacity(traj.len());
    for (n, st) in states.iter().enumerate() {
        let u = traj.velocity(n);
        data.f[n] = nonlinear_f(st, &traj.time_derivative(n), u, mu)?;
        data.g[n] = nonlinear_g(st, u)?;
        data.h[n] = nonlinear_h_trace(st, u, mu)?;
        gvec.push(nonlinear_g_vector(st, u)?);
    }
    data.a = a.clone();
    data.g_vector = Some(gvec);
    Ok(data)
}

fn zero_data(a: &SpectralField, cfg: &PicardConfig) -> LinearData {
    let mut data = LinearData::zeros(a.grid(), cfg.tau, cfg.steps);
    data.a = a.clone();
    data
}

/// One application of the fixed-point map: solve the linear problem with the
/// nonlinear data of `traj`.
pub fn picard_step(a: &SpectralField, traj: &Trajectory, cfg: &PicardConfig) -> Result<Trajectory> {
    solve_linear_ibvp(&nonlinear_data(traj, a, cfg.mu)?, cfg.mu, cfg.q)
}

/// Fixed-point iteration from the linear warm start. Stops when the relative
/// `X`-norm gap drops below the tolerance or after `max_iter` iterates.
pub fn picard_solve(a: &SpectralField, cfg: &PicardConfig) -> Result<(Trajectory, ContractionReport)> {
    if a.rank() != Rank::Vector {
        return Err(Error::InvalidArgument("initial data must be a vector field".into()));
    }
    if cfg.steps == 0 || cfg.max_iter == 0 {
        return Err(Error::InvalidArgument("need at least one step and one iterate".into()));
    }
    let mut warnings = Vec::new();
    if let Some(limit) = cfg.amplitude_limit {
        let size = sobolev_norm(a, 2, cfg.q)?;
        if size > limit * (1.0 + 1e-9) {
            warnings.push(format!("||a||_W2q = {size:.3e} exceeds the smallness bound {limit:.3e}"));
        }
    }
    let mut current = solve_linear_ibvp(&zero_data(a, cfg), cfg.mu, cfg.q)?;
    let mut x_norms = vec![x_norm(&current, cfg)?];
    let mut differences = Vec::new();
    let mut ratios = Vec::new();
    let mut converged = false;
    let mut final_gap = f64::INFINITY;
    let mut first_norm = None;
    for k in 1..=cfg.max_iter {
        let next = picard_step(a, &current, cfg)?;
        let xn = x_norm(&next, cfg)?;
        let reference = *first_norm.get_or_insert(xn);
        if !xn.is_finite() || (reference > 0.0 && xn > 10.0 * reference) {
            return Err(Error::Diverged { iterate: k, norm: xn });
        }
        let diff = x_norm(&next.difference(&current)?, cfg)?;
        if let Some(&prev) = differences.last() {
            ratios.push(if prev > 0.0 { diff / prev } else { 0.0 });
        }
        differences.push(diff);
        x_norms.push(xn);
        final_gap = if xn > 0.0 { diff / xn } else { diff };
        current = next;
        if final_gap <= cfg.tolerance {
            converged = true;
            break;
        }
    }
    Ok((
        current,
        ContractionReport {
            iterates: differences.len(),
            x_norms,
            differences,
            ratios,
            converged,
            final_gap,
            warnings,
        },
    ))
}

/// Largest `|div u - G(u)|` over the samples, relative to `max |grad u|`.
pub fn divergence_consistency(traj: &Trajectory) -> Result<f64> {
    let states = deformation_history(traj)?;
    let mut worst: f64 = 0.0;
    for (n, st) in states.iter().enumerate() {
        let u = traj.velocity(n);
        let scale = gradient(u)?.max_abs();
        if scale > 0.0 {
            let d = &divergence(u)? - &nonlinear_g(st, u)?;
            worst = worst.max(d.max_abs() / scale);
        }
    }
    Ok(worst)
}

/// Measured constants of the smallness gate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateConstants {
    /// Linear solution-operator constant, at least 1.
    pub c0: f64,
    /// Quadratic constant of the nonlinear terms, at least 1.
    pub m4: f64,
    pub delta0: f64,
    pub eps0: f64,
}

/// Measure `c0` from linear solves (initial data `a`, then random forcing)
/// and `M4` from the nonlinear data of the linear evolution of `a`; both are
/// clamped to at least 1 before the gate is applied.
pub fn measure_gate_constants(grid: &Arc<LayerGrid>, a: &SpectralField, cfg: &PicardConfig, seed: u64) -> Result<GateConstants> {
    let (p, q, gamma) = (cfg.p, cfg.q, cfg.gamma);
    let free = solve_linear_ibvp(&zero_data(a, cfg), cfg.mu, q)?;
    let mut c0: f64 = 1.0;
    if let Some(r) = mr_estimate_report(&free, &zero_data(a, cfg), p, q, gamma)?.ratio {
        c0 = c0.max(r);
    }
    let mut forced = LinearData::zeros(grid, cfg.tau, cfg.steps);
    let f = random_smooth_field(grid, Rank::Vector, seed, 2);
    for (n, fn_) in forced.f.iter_mut().enumerate() {
        *fn_ = f.scaled((-(n as f64) * cfg.tau).exp());
    }
    let traj = solve_linear_ibvp(&forced, cfg.mu, q)?;
    if let Some(r) = mr_estimate_report(&traj, &forced, p, q, gamma)?.ratio {
        c0 = c0.max(r);
    }
    let xn = x_norm(&free, cfg)?;
    let mut m4: f64 = 1.0;
    if xn > 0.0 {
        let mut data = nonlinear_data(&free, a, cfg.mu)?;
        data.a = SpectralField::zeros(grid, Rank::Vector);
        let nonlinear = mr_estimate_report(&free, &data, p, q, gamma)?.right_norm;
        m4 = m4.max(nonlinear / (xn * xn));
    }
    let (delta0, eps0) = smallness_gate(c0, m4)?;
    Ok(GateConstants { c0, m4, delta0, eps0 })
}

/// Rescale `a` to `||a||_{W^2_q} = size`.
pub fn scale_to_norm(a: &SpectralField, size: f64, q: f64) -> Result<SpectralField> {
    let n = sobolev_norm(a, 2, q)?;
    if n == 0.0 {
        return Ok(a.clone());
    }
    Ok(a.scaled(size / n))
}
