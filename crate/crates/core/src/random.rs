//! Seeded smooth random fields for tests, examples and scenario presets.
//!
//! Fields are built from a few low horizontal harmonics with polynomial
//! vertical profiles, so they are resolved to round-off on modest grids and
//! have no Nyquist content.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::field::{partial, PhysicalField, Rank, SpectralField};
use crate::grid::LayerGrid;

/// Highest Chebyshev degree of the random vertical profiles.
const PROFILE_DEGREE: usize = 3;

struct Term {
    k: Vec<i64>,
    cos: f64,
    sin: f64,
    cheb: [f64; PROFILE_DEGREE + 1],
}

fn chebyshev(n: usize, x: f64) -> f64 {
    (n as f64 * x.clamp(-1.0, 1.0).acos()).cos()
}

fn random_terms(rng: &mut ChaCha8Rng, dim: usize, max_mode: i64) -> Vec<Term> {
    let ks: Vec<Vec<i64>> = match dim {
        2 => (0..=max_mode).map(|k| vec![k]).collect(),
        _ => (0..=max_mode)
            .flat_map(|k1| (-max_mode..=max_mode).map(move |k2| vec![k1, k2]))
            .filter(|k| k[0] > 0 || k[1] >= 0)
            .collect(),
    };
    ks.into_iter()
        .map(|k| {
            let decay = 1.0 / (1.0 + k.iter().map(|x| x * x).sum::<i64>() as f64);
            let mut cheb = [0.0; PROFILE_DEGREE + 1];
            for (j, c) in cheb.iter_mut().enumerate() {
                *c = rng.gen_range(-1.0..1.0) * decay / (1.0 + j as f64);
            }
            Term {
                cos: rng.gen_range(-1.0..1.0),
                sin: if k.iter().all(|&x| x == 0) { 0.0 } else { rng.gen_range(-1.0..1.0) },
                k,
                cheb,
            }
        })
        .collect()
}

fn evaluate(terms: &[Term], period: f64, depth: f64, x: &[f64], z: f64) -> f64 {
    let s = 2.0 * z / depth - 1.0;
    terms
        .iter()
        .map(|t| {
            let phase: f64 = t.k.iter().zip(x).map(|(&k, &xi)| 2.0 * PI * k as f64 * xi / period).sum();
            let profile: f64 = t.cheb.iter().enumerate().map(|(j, c)| c * chebyshev(j, s)).sum();
            (t.cos * phase.cos() + t.sin * phase.sin()) * profile
        })
        .sum()
}

/// Random real field with horizontal modes up to `max_mode` per direction.
pub fn random_smooth_field(grid: &Arc<LayerGrid>, rank: Rank, seed: u64, max_mode: i64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_mode = max_mode.clamp(0, grid.n_horizontal() as i64 / 2 - 1);
    let nc = rank.components(grid.dim());
    let terms: Vec<Vec<Term>> = (0..nc).map(|_| random_terms(&mut rng, grid.dim(), max_mode)).collect();
    let (period, depth) = (grid.period(), grid.depth());
    let phys = PhysicalField::from_fn(grid, rank, |x, z| {
        terms.iter().map(|t| evaluate(t, period, depth, x, z)).collect()
    });
    let mut out = crate::field::forward_transform(&phys);
    out.zero_nyquist();
    out
}

/// Velocity from a stream function (2D) or vector potential (3D) `z^2 r`.
/// The result is exactly divergence-free under the discrete operators and
/// vanishes at `z = 0`.
pub fn solenoidal_from_potential(potential: &SpectralField) -> SpectralField {
    let grid = potential.grid();
    let dim = grid.dim();
    match dim {
        2 => {
            let psi = potential.component(0);
            let u0 = partial(&psi, 1);
            let u1 = partial(&psi, 0).scaled(-1.0);
            SpectralField::from_components(&[u0, u1]).expect("same grid")
        }
        _ => {
            let p: Vec<SpectralField> = potential.components();
            let d = |c: usize, axis: usize| partial(&p[c], axis);
            let u0 = &d(2, 1) - &d(1, 2);
            let u1 = &d(0, 2) - &d(2, 0);
            let u2 = &d(1, 0) - &d(0, 1);
            SpectralField::from_components(&[u0, u1, u2]).expect("same grid")
        }
    }
}

fn times_z_squared(field: &SpectralField) -> SpectralField {
    let grid = field.grid().clone();
    let mut out = field.clone();
    let nodes = grid.vertical_nodes().to_vec();
    for c in 0..field.n_components() {
        for m in 0..grid.n_points() {
            for (v, z) in out.profile_mut(c, m).iter_mut().zip(&nodes) {
                *v *= z * z;
            }
        }
    }
    out
}

/// Random smooth solenoidal velocity vanishing at the bottom.
pub fn random_solenoidal_field(grid: &Arc<LayerGrid>, seed: u64, max_mode: i64) -> SpectralField {
    let rank = if grid.dim() == 2 { Rank::Scalar } else { Rank::Vector };
    let r = random_smooth_field(grid, rank, seed, max_mode);
    solenoidal_from_potential(&times_z_squared(&r))
}

/// Solenoidal single-mode field from the potential `z^2 sin(2 pi k x_1 / L)`.
pub fn single_mode_solenoidal(grid: &Arc<LayerGrid>, k: i64) -> SpectralField {
    let period = grid.period();
    let dim = grid.dim();
    let rank = if dim == 2 { Rank::Scalar } else { Rank::Vector };
    let pot = SpectralField::from_fn(grid, rank, |x, z| {
        let s = z * z * (2.0 * PI * k as f64 * x[0] / period).sin();
        if dim == 2 {
            vec![s]
        } else {
            vec![0.0, s, 0.0]
        }
    });
    let mut u = solenoidal_from_potential(&pot);
    u.zero_nyquist();
    u
}
