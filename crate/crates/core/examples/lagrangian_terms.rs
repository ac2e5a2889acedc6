//! Nonlinear terms along the flow map of a shear flow, and the Piola defect
//! as the time step shrinks.

use std::f64::consts::PI;
use std::sync::Arc;

use layerflow::field::{divergence, gradient, Rank, SpectralField};
use layerflow::grid::{make_grid, LayerGrid};
use layerflow::lagrangian::{accumulate_deformation, nonlinear_g, nonlinear_g_vector, nonlinear_h, DeformationState};
use layerflow::random::random_smooth_field;

fn velocity(g: &Arc<LayerGrid>, t: f64) -> SpectralField {
    SpectralField::from_fn(g, Rank::Vector, move |x, z| {
        let a = 0.3 * z * z;
        let y = x[0] + t * a;
        vec![a, 0.2 * y.sin() + t * a * 0.2 * y.cos()]
    })
}

fn main() -> layerflow::error::Result<()> {
    let grid = make_grid(2, 1.0, 2.0 * PI, 32, 33)?;
    let u = random_smooth_field(&grid, Rank::Vector, 4, 2);
    for tau in [0.1_f64, 0.05, 0.025] {
        let mut state = DeformationState::identity(&grid);
        let mut prev = gradient(&velocity(&grid, 0.0))?;
        for k in 1..=(1.0 / tau).round() as usize {
            let next = gradient(&velocity(&grid, k as f64 * tau))?;
            state = accumulate_deformation(&state, &prev, &next, tau)?;
            prev = next;
        }
        let g = nonlinear_g(&state, &u)?;
        let defect = (&divergence(&nonlinear_g_vector(&state, &u)?)? - &g).max_abs() / g.max_abs();
        println!(
            "tau {tau:<6} det defect {:.2e}  piola defect {defect:.2e}  |H| {:.3e}",
            state.max_det_defect(),
            nonlinear_h(&state, &u, 1.0)?.max_abs()
        );
    }
    Ok(())
}
