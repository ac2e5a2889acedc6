//! Discrete Lebesgue/Sobolev norms and the time-weighted trajectory norms.
//!
//! Space integrals use uniform weights horizontally and Clenshaw–Curtis
//! weights vertically. Pointwise magnitudes of vector and matrix fields are
//! Euclidean (Frobenius) norms over the components.

use crate::error::{Error, Result};
use crate::field::{gradient, inverse_transform, same_grid, PhysicalField, Rank, SpectralField};

fn check_exponent(q: f64) -> Result<()> {
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::InvalidArgument(format!("exponent {q} must be finite and >= 1")));
    }
    Ok(())
}

/// `int |f|^q` for a physical field.
pub fn physical_lq_pow(field: &PhysicalField, q: f64) -> f64 {
    let grid = field.grid();
    let nz = grid.n_vertical();
    let w = grid.cc_weights();
    let cell = grid.cell_area();
    let nc = field.n_components();
    let mut total = 0.0;
    for p in 0..grid.n_points() {
        for (i, wi) in w.iter().enumerate().take(nz) {
            let mag2: f64 = (0..nc).map(|c| field.get(c, p, i).powi(2)).sum();
            total += wi * mag2.powf(0.5 * q);
        }
    }
    total * cell
}

/// `int |f|^q` for a spectral field.
pub fn lq_pow(field: &SpectralField, q: f64) -> f64 {
    physical_lq_pow(&inverse_transform(field), q)
}

/// Discrete `L_q(Omega)` norm.
pub fn discrete_lq_norm(field: &SpectralField, q: f64) -> Result<f64> {
    check_exponent(q)?;
    Ok(lq_pow(field, q).powf(1.0 / q))
}

/// `int |grad^2 f|^q` summed over components of `f`.
fn hessian_lq_pow(field: &SpectralField, q: f64) -> Result<f64> {
    let mut total = 0.0;
    for c in field.components() {
        total += lq_pow(&gradient(&gradient(&c)?)?, q);
    }
    Ok(total)
}

/// Discrete `W^k_q` norm for `k` in `0..=2`: the `q`-sum of the `L_q` norms
/// of `f, grad f, grad^2 f`.
pub fn sobolev_norm(field: &SpectralField, order: usize, q: f64) -> Result<f64> {
    check_exponent(q)?;
    if order > 2 {
        return Err(Error::UnsupportedOrder(order));
    }
    let mut total = lq_pow(field, q);
    if order >= 1 && field.rank() != Rank::Matrix {
        total += lq_pow(&gradient(field)?, q);
    }
    if order >= 2 {
        total += hessian_lq_pow(field, q)?;
    }
    Ok(total.powf(1.0 / q))
}

/// `(sum_n tau (e^{gamma t_n} x_n)^p)^{1/p}` over the left endpoints `n < K`.
pub fn weighted_series_norm(values: &[f64], step: f64, p: f64, gamma: f64) -> Result<f64> {
    check_exponent(p)?;
    if values.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let s: f64 = values[..values.len() - 1]
        .iter()
        .enumerate()
        .map(|(n, x)| step * ((gamma * n as f64 * step).exp() * x).powf(p))
        .sum();
    Ok(s.powf(1.0 / p))
}

/// One time sample of a trajectory.
#[derive(Debug, Clone)]
pub struct Sample {
    pub time: f64,
    pub velocity: SpectralField,
    pub pressure: SpectralField,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleNorms {
    pub lq: f64,
    pub w2q: f64,
}

/// Velocity/pressure time series at the uniform times `n * step`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    step: f64,
    exponent: f64,
    samples: Vec<Sample>,
    norms: Vec<SampleNorms>,
}

impl Trajectory {
    /// Empty trajectory; sample norms are recorded with exponent `q`.
    pub fn new(step: f64, q: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidArgument(format!("step {step} must be positive")));
        }
        check_exponent(q)?;
        Ok(Self {
            step,
            exponent: q,
            samples: Vec::new(),
            norms: Vec::new(),
        })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn norms(&self) -> &[SampleNorms] {
        &self.norms
    }

    pub fn velocity(&self, n: usize) -> &SpectralField {
        &self.samples[n].velocity
    }

    pub fn pressure(&self, n: usize) -> &SpectralField {
        &self.samples[n].pressure
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.time).collect()
    }

    /// Append the next sample at time `len * step`.
    pub fn push(&mut self, velocity: SpectralField, pressure: SpectralField) -> Result<()> {
        if velocity.rank() != Rank::Vector || pressure.rank() != Rank::Scalar {
            return Err(Error::InvalidArgument(
                "samples need a vector velocity and a scalar pressure".into(),
            ));
        }
        same_grid(velocity.grid(), pressure.grid())?;
        if let Some(first) = self.samples.first() {
            same_grid(first.velocity.grid(), velocity.grid())?;
        }
        let norms = SampleNorms {
            lq: discrete_lq_norm(&velocity, self.exponent)?,
            w2q: sobolev_norm(&velocity, 2, self.exponent)?,
        };
        let time = self.samples.len() as f64 * self.step;
        self.samples.push(Sample {
            time,
            velocity,
            pressure,
        });
        self.norms.push(norms);
        Ok(())
    }

    /// Backward-difference time derivative at sample `n` (forward at `n = 0`).
    pub fn time_derivative(&self, n: usize) -> SpectralField {
        let len = self.samples.len();
        if len < 2 {
            return self.samples[n].velocity.scaled(0.0);
        }
        let (a, b) = if n == 0 { (1, 0) } else { (n, n - 1) };
        (&self.samples[a].velocity - &self.samples[b].velocity).scaled(1.0 / self.step)
    }

    /// Pointwise sum of two trajectories on the same time grid.
    pub fn sum(&self, other: &Trajectory) -> Result<Trajectory> {
        if self.len() != other.len() || (self.step - other.step).abs() > 1e-14 * self.step {
            return Err(Error::ShapeMismatch {
                expected: format!("{} samples at step {}", self.len(), self.step),
                found: format!("{} samples at step {}", other.len(), other.step),
            });
        }
        let mut out = Trajectory::new(self.step, self.exponent)?;
        for (a, b) in self.samples.iter().zip(&other.samples) {
            out.push(&a.velocity + &b.velocity, &a.pressure + &b.pressure)?;
        }
        Ok(out)
    }

    /// Sample-wise difference `self - other`.
    pub fn difference(&self, other: &Trajectory) -> Result<Trajectory> {
        let neg = other.map(|v, p| (v.scaled(-1.0), p.scaled(-1.0)))?;
        self.sum(&neg)
    }

    pub fn map<F>(&self, f: F) -> Result<Trajectory>
    where
        F: Fn(&SpectralField, &SpectralField) -> (SpectralField, SpectralField),
    {
        let mut out = Trajectory::new(self.step, self.exponent)?;
        for s in &self.samples {
            let (v, p) = f(&s.velocity, &s.pressure);
            out.push(v, p)?;
        }
        Ok(out)
    }
}

/// Per-sample `L_q` norm of `(d_t u, u, grad u, grad^2 u)`.
pub fn parabolic_sample_norms(trajectory: &Trajectory, q: f64) -> Result<Vec<f64>> {
    check_exponent(q)?;
    (0..trajectory.len())
        .map(|n| {
            let u = trajectory.velocity(n);
            let dt = trajectory.time_derivative(n);
            let s = lq_pow(&dt, q) + sobolev_norm(u, 2, q)?.powf(q);
            Ok(s.powf(1.0 / q))
        })
        .collect()
}

/// `|| e^{gamma t} (d_t u, u, grad u, grad^2 u) ||_{L_p(0,T; L_q)}`.
pub fn weighted_trajectory_norm(trajectory: &Trajectory, p: f64, q: f64, gamma: f64) -> Result<f64> {
    if trajectory.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let values = parabolic_sample_norms(trajectory, q)?;
    weighted_series_norm(&values, trajectory.step(), p, gamma)
}

/// `|| e^{gamma t} pressure ||_{L_p(0,T; W^1_q)}`.
pub fn weighted_pressure_norm(trajectory: &Trajectory, p: f64, q: f64, gamma: f64) -> Result<f64> {
    if trajectory.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let values: Vec<f64> = trajectory
        .samples()
        .iter()
        .map(|s| sobolev_norm(&s.pressure, 1, q))
        .collect::<Result<_>>()?;
    weighted_series_norm(&values, trajectory.step(), p, gamma)
}
