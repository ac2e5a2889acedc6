//! Small-data Picard solve with the contraction history and flow-map checks.

use std::f64::consts::PI;

use layerflow::global::{picard_solve, scale_to_norm, PicardConfig};
use layerflow::grid::make_grid;
use layerflow::lagrangian::{flow_map, jacobian_diagnostics};
use layerflow::random::single_mode_solenoidal;

fn main() -> layerflow::error::Result<()> {
    let grid = make_grid(2, 1.0, 2.0 * PI, 16, 17)?;
    let size = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1e-2);
    let a = scale_to_norm(&single_mode_solenoidal(&grid, 1), size, 2.0)?;
    let (traj, rep) = picard_solve(&a, &PicardConfig::new(1.0, 0.05, 5.0))?;
    println!("|a| = {size:e}, converged = {} after {} iterates", rep.converged, rep.iterates);
    for (k, r) in rep.ratios.iter().enumerate() {
        println!("  ratio {k}: {r:.3e}");
    }
    let jac = jacobian_diagnostics(&flow_map(&traj)?);
    println!(
        "min singular value {:.6}  det defect {:.2e}  integrated gradient {:.3e}",
        jac.min_singular_value, jac.max_det_defect, jac.integrated_gradient
    );
    Ok(())
}
