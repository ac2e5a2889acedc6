//! Weak Dirichlet-Neumann problem solved by the modal factorisation, and the
//! kernel path for a forcing supported inside the layer.

use std::f64::consts::PI;

use layerflow::field::{Rank, SpectralField};
use layerflow::grid::make_grid;
use layerflow::random::random_smooth_field;
use layerflow::weak_dn::{solve_weak_dn, solve_weak_dn_kernel_path, stability_ratio, weak_dn_residual};

fn main() -> layerflow::error::Result<()> {
    let grid = make_grid(2, 1.0, 2.0 * PI, 32, 33)?;
    let f = random_smooth_field(&grid, Rank::Vector, 3, 4);
    let u = solve_weak_dn(&f)?;
    println!("weak residual        {:.3e}", weak_dn_residual(&u, &f)?);
    println!("|grad u| / |f| (q=2) {:.4}", stability_ratio(&f, 2.0)?);

    // the kernel path needs forcing that vanishes on both boundaries
    let bump = SpectralField::from_fn(&grid, Rank::Vector, |x, z| {
        let s = 256.0 * (z * (1.0 - z)).powi(4);
        vec![x[0].cos() * s, (2.0 * x[0]).sin() * s]
    });
    let modal = solve_weak_dn(&bump)?;
    let kernel = solve_weak_dn_kernel_path(&bump)?;
    println!("kernel path gap      {:.3e}", (&modal - &kernel.u).max_abs() / modal.max_abs());
    Ok(())
}
