//! Exponential decay of the free Stokes evolution from random solenoidal data.

use std::f64::consts::PI;

use layerflow::global::decay_fit;
use layerflow::grid::make_grid;
use layerflow::random::random_solenoidal_field;
use layerflow::stokes::Semigroup;

fn main() -> layerflow::error::Result<()> {
    let grid = make_grid(2, 1.0, 2.0 * PI, 16, 17)?;
    let a = random_solenoidal_field(&grid, 5, 2);
    let traj = Semigroup::new(&grid, 0.05, 1.0)?.evolve(&a, 200, 2.0)?;
    let times = traj.times();
    let norms: Vec<f64> = traj.norms().iter().map(|n| n.lq).collect();
    for n in (0..traj.len()).step_by(40) {
        println!("t = {:>5.2}  |u| = {:.6e}", times[n], norms[n]);
    }
    let fit = decay_fit(&times, &norms, 0.3)?;
    println!("rate {:.4}  r^2 {:.6}", fit.rate, fit.r_squared);
    Ok(())
}
