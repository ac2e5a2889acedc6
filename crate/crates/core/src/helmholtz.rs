//! Helmholtz decomposition `f = P f + grad Q f` on the layer.
//!
//! `Q f` is the weak Dirichlet–Neumann solution for `f`, so it vanishes on
//! the top and `P f` is weakly solenoidal with zero normal trace at the
//! bottom. The top trace of `P f` is unconstrained.

use crate::error::{Error, Result};
use crate::field::{gradient, Rank, SpectralField};
use crate::norms::{discrete_lq_norm, sobolev_norm};
use crate::weak_dn::{weak_divergence_defect, DnSolver};

/// Solenoidal part and potential of a vector field.
#[derive(Debug, Clone)]
pub struct HelmholtzSplit {
    pub p_part: SpectralField,
    pub potential: SpectralField,
}

impl HelmholtzSplit {
    pub fn gradient_part(&self) -> SpectralField {
        gradient(&self.potential).expect("scalar potential")
    }
}

/// Split `f` using an already factored solver.
pub fn project_with(solver: &DnSolver, f: &SpectralField) -> Result<HelmholtzSplit> {
    if f.rank() != Rank::Vector {
        return Err(Error::InvalidArgument("Helmholtz projection needs a vector field".into()));
    }
    let potential = solver.solve_weak(f)?;
    let p_part = f - &gradient(&potential)?;
    Ok(HelmholtzSplit { p_part, potential })
}

pub fn project(f: &SpectralField) -> Result<HelmholtzSplit> {
    project_with(&DnSolver::new(f.grid())?, f)
}

/// Diagnostics of one projection, all relative to `max |f|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionReport {
    /// `|f - P f - grad Q f|`.
    pub reconstruction: f64,
    /// `|P P f - P f|`.
    pub idempotency: f64,
    /// Weak divergence and bottom normal trace of `P f`.
    pub divergence: f64,
}

/// Apply the projection twice and measure reconstruction, idempotency and
/// solenoidality.
pub fn idempotency_check(f: &SpectralField) -> Result<ProjectionReport> {
    let solver = DnSolver::new(f.grid())?;
    let first = project_with(&solver, f)?;
    let second = project_with(&solver, &first.p_part)?;
    let scale = f.max_abs();
    let rel = |x: f64| if scale > 0.0 { x / scale } else { x };
    let rebuilt = &first.p_part + &first.gradient_part();
    Ok(ProjectionReport {
        reconstruction: rel((f - &rebuilt).max_abs()),
        idempotency: rel((&second.p_part - &first.p_part).max_abs()),
        divergence: rel(weak_divergence_defect(&first.p_part)?),
    })
}

/// `(||P f||_{L_q} + ||Q f||_{W^1_q}) / ||f||_{L_q}`.
pub fn boundedness_ratio(f: &SpectralField, q: f64) -> Result<f64> {
    let s = project(f)?;
    Ok((discrete_lq_norm(&s.p_part, q)? + sobolev_norm(&s.potential, 1, q)?) / discrete_lq_norm(f, q)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::random::{random_smooth_field, random_solenoidal_field};
    use std::f64::consts::PI;

    #[test]
    fn gradient_input_has_no_solenoidal_part() {
        let g = make_grid(2, 1.0, 2.0 * PI, 32, 33).unwrap();
        let phi = SpectralField::from_fn(&g, Rank::Scalar, |x, z| {
            vec![x[0].sin() * (PI * z / 2.0).cos()]
        });
        let f = gradient(&phi).unwrap();
        let s = project(&f).unwrap();
        assert!(s.p_part.max_abs() < 1e-8);
        let again = project(&s.p_part).unwrap();
        assert!(again.p_part.max_abs() < 1e-8);
    }

    #[test]
    fn solenoidal_input_is_kept() {
        for dim in [2, 3] {
            let g = make_grid(dim, 1.0, 2.0 * PI, 8, 13).unwrap();
            let f = random_solenoidal_field(&g, 4, 2);
            let s = project(&f).unwrap();
            assert!((&s.p_part - &f).max_abs() < 1e-8 * f.max_abs());
            assert!(s.potential.max_abs() < 1e-8 * f.max_abs());
        }
    }

    #[test]
    fn zero_is_a_fixpoint() {
        let g = make_grid(2, 1.0, 1.0, 8, 9).unwrap();
        let r = idempotency_check(&SpectralField::zeros(&g, Rank::Vector)).unwrap();
        assert_eq!(r.reconstruction, 0.0);
        assert_eq!(r.idempotency, 0.0);
        assert_eq!(r.divergence, 0.0);
    }

    #[test]
    fn random_fields_split_cleanly() {
        let g = make_grid(2, 1.0, 2.0 * PI, 16, 17).unwrap();
        for seed in 0..5 {
            let f = random_smooth_field(&g, Rank::Vector, seed, 3);
            let r = idempotency_check(&f).unwrap();
            assert!(r.reconstruction < 1e-10, "{r:?}");
            assert!(r.idempotency < 1e-10, "{r:?}");
            assert!(r.divergence < 1e-8, "{r:?}");
        }
    }

    #[test]
    fn boundedness_ratio_is_stable() {
        for q in [2.0, 4.0] {
            let r: Vec<f64> = [13, 17, 25]
                .iter()
                .map(|&nz| {
                    let g = make_grid(2, 1.0, 2.0 * PI, 16, nz).unwrap();
                    boundedness_ratio(&random_smooth_field(&g, Rank::Vector, 2, 3), q).unwrap()
                })
                .collect();
            for w in r.windows(2) {
                assert!((w[1] - w[0]).abs() <= 0.1 * w[0], "{r:?}");
            }
        }
    }
}
