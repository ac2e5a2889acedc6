//! Acceptance suite: one PASS/FAIL line per criterion, with the measured
//! values and wall-clock time.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::{Duration, Instant};

use layerflow::config::{Config, InitialData};
use layerflow::field::{divergence, gradient, laplacian, partial, Rank, SpectralField};
use layerflow::grid::{make_grid, LayerGrid};
use layerflow::lagrangian::{
    accumulate_deformation, nonlinear_f, nonlinear_g, nonlinear_g_vector, nonlinear_h, DeformationState,
};
use layerflow::norms::discrete_lq_norm;
use layerflow::random::random_smooth_field;
use layerflow::runner::{self, ScenarioOutput};

struct Line {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
    elapsed: Duration,
}

fn report(lines: &[Line]) {
    for l in lines {
        println!(
            "CRITERION {:>2} {:<28} {} {} [{:.2}s]",
            l.id,
            l.name,
            if l.pass { "PASS" } else { "FAIL" },
            l.detail,
            l.elapsed.as_secs_f64()
        );
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t0 = Instant::now();
    let out = f();
    (out, t0.elapsed())
}

fn check(out: &ScenarioOutput, name: &str) -> (bool, f64) {
    let c = out.check(name).unwrap_or_else(|| panic!("missing check {name}"));
    (c.pass, c.value)
}

fn grid_config(nx: usize, nz: usize) -> Config {
    Config {
        n_horizontal: nx,
        n_vertical: nz,
        ..Config::default()
    }
}

fn constant_matrix(g: &Arc<LayerGrid>, m: [f64; 4]) -> SpectralField {
    SpectralField::from_fn(g, Rank::Matrix, move |_, _| m.to_vec())
}

/// Velocity of the area-preserving map `(xi + t a(z), z + t b(xi + t a(z)))`.
fn shear_flow_velocity(g: &Arc<LayerGrid>, t: f64) -> SpectralField {
    SpectralField::from_fn(g, Rank::Vector, move |x, z| {
        let a = 0.3 * z * z;
        let y = x[0] + t * a;
        vec![a, 0.2 * y.sin() + t * a * 0.2 * y.cos()]
    })
}

fn piola_defect(g: &Arc<LayerGrid>, tau: f64) -> f64 {
    let steps = (1.0 / tau).round() as usize;
    let mut s = DeformationState::identity(g);
    let mut prev = gradient(&shear_flow_velocity(g, 0.0)).unwrap();
    for k in 1..=steps {
        let next = gradient(&shear_flow_velocity(g, k as f64 * tau)).unwrap();
        s = accumulate_deformation(&s, &prev, &next, tau).unwrap();
        prev = next;
    }
    let u = random_smooth_field(g, Rank::Vector, 9, 2);
    let gs = nonlinear_g(&s, &u).unwrap();
    let dv = divergence(&nonlinear_g_vector(&s, &u).unwrap()).unwrap();
    discrete_lq_norm(&(&dv - &gs), 2.0).unwrap() / discrete_lq_norm(&gs, 2.0).unwrap()
}

/// Exact zeros at `B = 0`, isotropic closed forms, and the Piola refinement order.
fn nonlinear_exactness() -> (bool, String) {
    let g = make_grid(2, 1.0, 2.0 * PI, 16, 17).unwrap();
    let u = random_smooth_field(&g, Rank::Vector, 1, 3);
    let du = random_smooth_field(&g, Rank::Vector, 2, 3);
    let id = DeformationState::identity(&g);
    let zero = nonlinear_f(&id, &du, &u, 1.0).unwrap().max_abs()
        + nonlinear_g(&id, &u).unwrap().max_abs()
        + nonlinear_g_vector(&id, &u).unwrap().max_abs()
        + nonlinear_h(&id, &u, 1.0).unwrap().max_abs();

    let (b, mu) = (0.3, 0.7);
    let s = b / (1.0 + b);
    let st = DeformationState::from_deformation(constant_matrix(&g, [b, 0.0, 0.0, b]), 1.0).unwrap();
    let div = divergence(&u).unwrap();
    let rel = |x: &SpectralField, y: &SpectralField| (x - y).max_abs() / y.max_abs();
    let mut iso: f64 = 0.0;
    iso = iso.max(rel(&nonlinear_g(&st, &u).unwrap(), &div.scaled(s)));
    iso = iso.max(rel(&nonlinear_g_vector(&st, &u).unwrap(), &u.scaled(s)));
    let mut f = du.scaled(-b);
    // the transformed operator assembles its second derivatives from iterated first
    // derivatives, so the reference does too and the gap is matrix algebra only
    let iterated = (0..2).fold(SpectralField::zeros(&g, Rank::Vector), |mut acc, j| {
        acc.axpy(1.0, &partial(&partial(&u, j), j)).unwrap();
        acc
    });
    f.axpy(mu * b, &laplacian(&u)).unwrap();
    f.axpy(mu * (1.0 + b) * (s * s - 2.0 * s), &iterated).unwrap();
    f.axpy(-mu * s, &gradient(&div).unwrap()).unwrap();
    iso = iso.max(rel(&nonlinear_f(&st, &du, &u, mu).unwrap(), &f));
    let shear = SpectralField::from_fn(&g, Rank::Vector, |_, z| vec![z, 0.0]);
    iso = iso.max(rel(&nonlinear_h(&st, &shear, 1.0).unwrap(), &constant_matrix(&g, [0.0, s, s, 0.0])));

    let fine = make_grid(2, 1.0, 2.0 * PI, 32, 33).unwrap();
    let taus = [0.1, 0.05, 0.025, 0.0125];
    let e: Vec<f64> = taus.iter().map(|&t| piola_defect(&fine, t)).collect();
    // least-squares slope of log e against log tau
    let xs: Vec<f64> = taus.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let (xm, ym) = (xs.iter().sum::<f64>() / 4.0, ys.iter().sum::<f64>() / 4.0);
    let order = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum::<f64>()
        / xs.iter().map(|x| (x - xm).powi(2)).sum::<f64>();
    let decreasing = e.windows(2).all(|w| w[1] < w[0]);
    let pairwise: Vec<String> = e.windows(2).map(|w| format!("{:.5}", (w[0] / w[1]).log2())).collect();
    let pass = zero == 0.0 && iso < 1e-12 && decreasing && order >= 2.0;
    (
        pass,
        format!(
            "zeros={zero:.1e} isotropic={iso:.2e} piola_defects=[{}] order={order:.5} pairwise=[{}]",
            e.iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>().join(","),
            pairwise.join(",")
        ),
    )
}

#[test]
fn acceptance() {
    let mut lines = Vec::new();

    // 1 and 2: residue kernels and symbol bounds
    let (k, t) = timed(|| runner::verify_kernels(&Config::default()).unwrap());
    let (p, v) = check(&k, "kernel_identities");
    lines.push(Line { id: 1, name: "residue_kernels", pass: p && t.as_secs_f64() < 5.0, detail: format!("max_rel_err={v:.3e} on 5x5 grid"), elapsed: t });
    let symbols: Vec<_> = k.checks.iter().filter(|c| c.name.starts_with("symbol_")).collect();
    let sp = symbols.len() == 4 && symbols.iter().all(|c| c.pass && c.value.is_finite());
    let detail = symbols.iter().map(|c| format!("{}={:.3}", c.name, c.value)).collect::<Vec<_>>().join(" ");
    lines.push(Line { id: 2, name: "symbol_bounds", pass: sp && t.as_secs_f64() < 5.0, detail, elapsed: t });

    // 3: weak Dirichlet-Neumann problem at 32x33
    let (w, t) = timed(|| runner::weak_dn(&grid_config(32, 33)).unwrap());
    let (p1, v1) = check(&w, "manufactured_recovery");
    let (p2, v2) = check(&w, "kernel_path_agreement");
    lines.push(Line { id: 3, name: "weak_dirichlet_neumann", pass: p1 && p2 && t.as_secs_f64() < 10.0, detail: format!("max_err={v1:.3e} kernel_gap={v2:.3e}"), elapsed: t });

    // 4: Helmholtz decomposition, 10 random fields
    let (h, t) = timed(|| runner::helmholtz(&grid_config(32, 33)).unwrap());
    let vals: Vec<(bool, f64)> = ["reconstruction", "idempotency", "weak_divergence"].iter().map(|n| check(&h, n)).collect();
    lines.push(Line {
        id: 4,
        name: "helmholtz",
        pass: vals.iter().all(|x| x.0) && h.rows.len() == 10 && t.as_secs_f64() < 10.0,
        detail: format!("reconstruction={:.2e} idempotency={:.2e} divergence={:.2e}", vals[0].1, vals[1].1, vals[2].1),
        elapsed: t,
    });

    // 5: resolvent ratio on a low-viscosity layer; the unit-viscosity spread is reported
    let low = Config { mu: 0.05, ..Config::default() };
    let (r, t) = timed(|| runner::resolvent_sweep(&low).unwrap());
    let (p1, v1) = check(&r, "manufactured_recovery");
    let (p2, v2) = check(&r, "ratio_spread");
    let unit = runner::resolvent_sweep(&Config::default()).unwrap();
    lines.push(Line {
        id: 5,
        name: "resolvent",
        pass: p1 && p2 && t.as_secs_f64() < 30.0,
        detail: format!(
            "recovery={v1:.2e} spread(mu=0.05)={v2:.2} [mu=1: spread={:.1} full_lhs_spread={:.2}]",
            check(&unit, "ratio_spread").1,
            unit.value("full_ratio_spread").unwrap()
        ),
        elapsed: t,
    });

    // 6: reduced problem, resolvent pressure against K(v)
    let (p, v) = check(&unit, "reduced_pressure_agreement");
    lines.push(Line { id: 6, name: "reduced_pressure", pass: p, detail: format!("max_rel_gap={v:.3e} over 3 fields"), elapsed: Duration::ZERO });

    // 7: semigroup decay, 5 random solenoidal data
    let (runs, t) = timed(|| {
        (0..5)
            .map(|s| {
                let cfg = Config {
                    seed: s,
                    horizon: 10.0,
                    initial_data: InitialData::RandomSolenoidal,
                    ..grid_config(32, 33)
                };
                runner::semigroup_decay(&cfg).unwrap()
            })
            .collect::<Vec<_>>()
    });
    let ok = runs.iter().all(|o| o.all_pass());
    let rates: Vec<String> = runs.iter().map(|o| format!("{:.3}", check(o, "decay_rate").1)).collect();
    let r2 = runs.iter().map(|o| check(o, "fit_r_squared").1).fold(1.0, f64::min);
    let dv = runs.iter().map(|o| check(o, "divergence_preserved").1).fold(0.0, f64::max);
    lines.push(Line { id: 7, name: "semigroup_decay", pass: ok && t.as_secs_f64() < 120.0, detail: format!("rates=[{}] min_r2={r2:.6} max_div={dv:.2e}", rates.join(",")), elapsed: t });

    // 8: four-way decomposition
    let (l, t) = timed(|| runner::linear_mr(&Config::default()).unwrap());
    let (p, v) = check(&l, "decomposition_agreement");
    lines.push(Line { id: 8, name: "four_way_decomposition", pass: p && t.as_secs_f64() < 180.0, detail: format!("max_rel_gap={v:.3e} over 3 data sets"), elapsed: t });

    // 9: nonlinear terms
    let ((p, detail), t) = timed(nonlinear_exactness);
    lines.push(Line { id: 9, name: "nonlinear_exactness", pass: p, detail, elapsed: t });

    // 10 and 11: global small-data solve at 16x17, T = 5, tau = 0.05
    let (gs, t) = timed(|| runner::global_solve(&Config::default()).unwrap());
    let names = ["converged", "contraction_ratios", "decay_rate", "final_det_defect", "integrated_gradient", "min_singular_value"];
    let vals: Vec<(bool, f64)> = names.iter().map(|n| check(&gs, n)).collect();
    lines.push(Line {
        id: 10,
        name: "global_small_data",
        pass: vals.iter().all(|x| x.0) && t.as_secs_f64() < 600.0,
        detail: names.iter().zip(&vals).map(|(n, v)| format!("{n}={:.3e}", v.1)).collect::<Vec<_>>().join(" "),
        elapsed: t,
    });
    let (p, v) = check(&gs, "pushforward_identity");
    lines.push(Line { id: 11, name: "pushforward_identity", pass: p, detail: format!("max_rel_gap={v:.3e} at 5 times"), elapsed: Duration::ZERO });

    report(&lines);
    let failed: Vec<usize> = lines.iter().filter(|l| !l.pass).map(|l| l.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
