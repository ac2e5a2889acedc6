//! Four-way split of a forced linear problem and its maximal-regularity ratio.

use std::f64::consts::PI;

use layerflow::field::{Rank, SpectralField};
use layerflow::grid::make_grid;
use layerflow::linear::{mr_estimate_report, solve_linear_ibvp, relative_trajectory_gap, solve_linear_decomposed, LinearData};
use layerflow::random::{random_smooth_field, random_solenoidal_field};

fn main() -> layerflow::error::Result<()> {
    let grid = make_grid(2, 1.0, 2.0 * PI, 16, 17)?;
    let (tau, steps, mu) = (0.05, 60, 1.0);
    let f0 = random_smooth_field(&grid, Rank::Vector, 1, 2);
    let h0 = random_smooth_field(&grid, Rank::Vector, 2, 2);
    let a = random_solenoidal_field(&grid, 3, 2).scaled(0.1);
    let data = LinearData::sample(a, tau, steps, |t| {
        let w = (-t).exp();
        (f0.scaled(w), SpectralField::zeros(&grid, Rank::Scalar), h0.scaled(0.1 * w))
    });
    let dec = solve_linear_decomposed(&data, 1.0, mu, 2.0)?;
    let mut sum = dec.parts[0].clone();
    for part in &dec.parts[1..] {
        sum = sum.sum(part)?;
    }
    let direct = solve_linear_ibvp(&data, mu, 2.0)?;
    println!("sum of parts vs direct solve  {:.3e}", relative_trajectory_gap(&sum, &direct, 2.0, 2.0, 0.0)?);
    let mr = mr_estimate_report(&dec.total, &data, 2.0, 2.0, 0.0)?;
    println!("solution norm {:.4e}  data norm {:.4e}  ratio {:?}", mr.left_norm, mr.right_norm, mr.ratio);
    Ok(())
}
