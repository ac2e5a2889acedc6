//! Resolvent ratios `|lambda| |v| / |f|` over a sweep of complex `lambda`.

use std::f64::consts::PI;

use layerflow::field::Rank;
use layerflow::grid::make_grid;
use layerflow::random::random_smooth_field;
use layerflow::stokes::resolvent_bound;
use num_complex::Complex64;

fn main() -> layerflow::error::Result<()> {
    let grid = make_grid(2, 1.0, 2.0 * PI, 16, 17)?;
    let f = random_smooth_field(&grid, Rank::Vector, 11, 3);
    let mu = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.05);
    println!("mu = {mu}");
    println!("{:>10} {:>8} {:>12} {:>12}", "|lambda|", "arg", "velocity", "full");
    for r in [0.1, 1.0, 10.0, 100.0] {
        for arg in [0.0, 0.5 * PI, 0.9 * PI] {
            let b = resolvent_bound(&f, Complex64::from_polar(r, arg), mu, 2.0)?;
            println!("{r:>10} {arg:>8.3} {:>12.4} {:>12.4}", b.velocity_ratio, b.full_ratio);
        }
    }
    Ok(())
}
