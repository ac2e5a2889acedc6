//! Split random vector fields into solenoidal and gradient parts.

use std::f64::consts::PI;

use layerflow::field::Rank;
use layerflow::grid::make_grid;
use layerflow::helmholtz::{boundedness_ratio, idempotency_check};
use layerflow::random::random_smooth_field;

fn main() -> layerflow::error::Result<()> {
    let grid = make_grid(2, 1.0, 2.0 * PI, 32, 33)?;
    println!("seed reconstruction idempotency  divergence  bound(q=3)");
    for seed in 0..5 {
        let f = random_smooth_field(&grid, Rank::Vector, seed, 4);
        let r = idempotency_check(&f)?;
        let b = boundedness_ratio(&f, 3.0)?;
        println!("{seed:>4} {:>14.2e} {:>11.2e} {:>11.2e} {b:>11.4}", r.reconstruction, r.idempotency, r.divergence);
    }
    Ok(())
}
