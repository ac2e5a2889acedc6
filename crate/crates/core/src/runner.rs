//! Scenario driver behind the `layerflow` binary: each subcommand runs one
//! scenario, collects a CSV table and a list of named checks, and writes
//! `<name>.csv` plus `summary.txt`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;

use crate::config::{Config, InitialData};
use crate::error::{Error, Result};
use crate::field::{divergence, gradient, Rank, SpectralField};
use crate::global::{decay_fit, divergence_consistency, measure_gate_constants, picard_solve, PicardConfig};
use crate::grid::LayerGrid;
use crate::helmholtz::{boundedness_ratio, idempotency_check};
use crate::kernels::{residue_kernel_pair, residue_kernel_quadrature, symbol_bound_check};
use crate::lagrangian::{flow_map, jacobian_diagnostics, push_forward};
use crate::linear::{
    default_sigma0, linear_residual, measure_decay_rate, mr_estimate_report, relative_trajectory_gap,
    solve_linear_decomposed, solve_linear_ibvp, LinearData,
};
use crate::norms::discrete_lq_norm;
use crate::random::{random_smooth_field, random_solenoidal_field};
use crate::stokes::{pressure_operator_k, resolvent_bound, solve_resolvent, stress_tensor, ResolventData, ResolventSolver, Semigroup};
use crate::weak_dn::{solve_weak_dn, solve_weak_dn_kernel_path, stability_ratio, weak_divergence_defect, weak_dn_residual};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    VerifyKernels,
    WeakDn,
    Helmholtz,
    ResolventSweep,
    SemigroupDecay,
    LinearMr,
    GlobalSolve,
}

impl Subcommand {
    pub const ALL: [Subcommand; 7] = [
        Self::VerifyKernels,
        Self::WeakDn,
        Self::Helmholtz,
        Self::ResolventSweep,
        Self::SemigroupDecay,
        Self::LinearMr,
        Self::GlobalSolve,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::VerifyKernels => "verify-kernels",
            Self::WeakDn => "weak-dn",
            Self::Helmholtz => "helmholtz",
            Self::ResolventSweep => "resolvent-sweep",
            Self::SemigroupDecay => "semigroup-decay",
            Self::LinearMr => "linear-mr",
            Self::GlobalSolve => "global-solve",
        }
    }

    /// Name of the CSV table written by the subcommand.
    pub fn csv_name(self) -> String {
        match self {
            Self::VerifyKernels => "kernels.csv".into(),
            Self::SemigroupDecay => "decay.csv".into(),
            other => format!("{}.csv", other.name()),
        }
    }
}

impl FromStr for Subcommand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown subcommand '{s}'")))
    }
}

/// One named pass/fail assertion with the measured value.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
}

impl Check {
    fn below(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            pass: value < limit,
            value,
        }
    }

    fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            pass: value <= limit,
            value,
        }
    }

    fn above(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            pass: value > limit,
            value,
        }
    }

    fn flag(name: &str, pass: bool, value: f64) -> Self {
        Self {
            name: name.into(),
            pass,
            value,
        }
    }
}

/// Table, checks and diagnostic values of one scenario run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutput {
    pub csv_name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub checks: Vec<Check>,
    /// Measured quantities that are reported but not asserted.
    pub values: Vec<(String, f64)>,
    pub warnings: Vec<String>,
}

impl ScenarioOutput {
    fn new(cmd: Subcommand, header: &[&str]) -> Self {
        Self {
            csv_name: cmd.csv_name(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            checks: Vec::new(),
            values: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    fn note(&mut self, name: &str, value: f64) {
        self.values.push((name.into(), value));
    }

    pub fn csv_text(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    pub fn summary_text(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let _ = writeln!(s, "CHECK {} {} {:.16e}", c.name, if c.pass { "PASS" } else { "FAIL" }, c.value);
        }
        for (n, v) in &self.values {
            let _ = writeln!(s, "VALUE {n} {v:.16e}");
        }
        for w in &self.warnings {
            let _ = writeln!(s, "WARN {w}");
        }
        s
    }
}

/// Write the CSV table and `summary.txt` into `dir` (created if missing).
pub fn write_outputs(out: &ScenarioOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(&out.csv_name), out.csv_text())?;
    fs::write(dir.join("summary.txt"), out.summary_text())?;
    Ok(())
}

/// Run a scenario, honouring `workers`.
pub fn run_scenario(cmd: Subcommand, cfg: &Config) -> Result<ScenarioOutput> {
    cfg.validate()?;
    let go = || match cmd {
        Subcommand::VerifyKernels => verify_kernels(cfg),
        Subcommand::WeakDn => weak_dn(cfg),
        Subcommand::Helmholtz => helmholtz(cfg),
        Subcommand::ResolventSweep => resolvent_sweep(cfg),
        Subcommand::SemigroupDecay => semigroup_decay(cfg),
        Subcommand::LinearMr => linear_mr(cfg),
        Subcommand::GlobalSolve => global_solve(cfg),
    };
    match cfg.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?
            .install(go),
        None => go(),
    }
}

/// `(a, |xi'|)` sample values of the residue-kernel table.
pub const KERNEL_SAMPLES: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

pub fn verify_kernels(cfg: &Config) -> Result<ScenarioOutput> {
    let mut out = ScenarioOutput::new(
        Subcommand::VerifyKernels,
        &["a", "xi_mag", "closed_form_1", "quadrature_1", "rel_err_1", "closed_form_2", "quadrature_2", "rel_err_2"],
    );
    let mut worst: f64 = 0.0;
    for &a in &KERNEL_SAMPLES {
        for &xi in &KERNEL_SAMPLES {
            let (c1, c2) = residue_kernel_pair(a, xi)?;
            let (q1, q2) = residue_kernel_quadrature(a, xi)?;
            let (e1, e2) = ((c1 - q1).abs() / c1.abs(), (c2 - q2).abs() / c2.abs());
            worst = worst.max(e1).max(e2);
            out.rows.push(vec![a, xi, c1, q1, e1, c2, q2, e2]);
        }
    }
    out.checks.push(Check::below("kernel_identities", worst, 1e-4));

    let n_h = cfg.dim - 1;
    let depth = cfg.depth;
    let norm = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut symbols: Vec<(String, Box<dyn Fn(&[f64]) -> Complex64>)> = Vec::new();
    for j in 0..n_h {
        symbols.push((format!("symbol_riesz_{}", j + 1), Box::new(move |x: &[f64]| Complex64::new(0.0, x[j] / norm(x)))));
    }
    for a in [0.0, 1.0] {
        symbols.push((format!("symbol_exp_a{a}"), Box::new(move |x: &[f64]| Complex64::new((-a * norm(x)).exp(), 0.0))));
    }
    symbols.push((
        "symbol_layer".into(),
        Box::new(move |x: &[f64]| Complex64::new(1.0 / (1.0 + (-2.0 * norm(x) * depth).exp()), 0.0)),
    ));
    for (name, m) in &symbols {
        let rep = symbol_bound_check(m, n_h, 3, 40, cfg.seed, 10.0)?;
        let value = rep.worst_ratio.iter().cloned().fold(0.0, f64::max);
        out.checks.push(Check::flag(name, rep.pass, value));
    }
    Ok(out)
}

fn bump_forcing(grid: &Arc<LayerGrid>) -> SpectralField {
    let (l, d) = (grid.period(), grid.depth());
    let dim = grid.dim();
    SpectralField::from_fn(grid, Rank::Vector, |x, z| {
        let b = 16.0 * (z * (d - z) / (d * d)).powi(4);
        let t = 2.0 * PI * x[0] / l;
        let mut v = vec![b * t.sin(), 0.7 * b * t.cos()];
        if dim == 3 {
            v.insert(1, 0.3 * b * (t + 2.0 * PI * x[1] / l).cos());
        }
        v
    })
}

pub fn weak_dn(cfg: &Config) -> Result<ScenarioOutput> {
    let grid = cfg.grid()?;
    let dim = grid.dim();
    let mut header: Vec<&str> = if dim == 2 { vec!["x1"] } else { vec!["x1", "x2"] };
    header.extend(["z", "exact", "computed", "abs_error"]);
    let mut out = ScenarioOutput::new(Subcommand::WeakDn, &header);
    let (l, d) = (grid.period(), grid.depth());
    let exact = |x: &[f64], z: f64| (2.0 * PI * x[0] / l).sin() * (PI * z / (2.0 * d)).cos();
    let u0 = SpectralField::from_fn(&grid, Rank::Scalar, |x, z| vec![exact(x, z)]);
    let f = gradient(&u0)?;
    let u = solve_weak_dn(&f)?;
    let up = crate::field::inverse_transform(&u);
    let mut worst: f64 = 0.0;
    for p in 0..grid.n_points() {
        let x = grid.point_coords(p);
        for (i, &z) in grid.vertical_nodes().iter().enumerate() {
            let (e, c) = (exact(&x, z), up.get(0, p, i));
            worst = worst.max((e - c).abs());
            let mut row = x.clone();
            row.extend([z, e, c, (e - c).abs()]);
            out.rows.push(row);
        }
    }
    out.checks.push(Check::below("manufactured_recovery", worst, 1e-8));
    out.checks.push(Check::below("strong_form_residual", weak_dn_residual(&u, &f)?, 1e-8));
    let bump = bump_forcing(&grid);
    let a = solve_weak_dn(&bump)?;
    let b = solve_weak_dn_kernel_path(&bump)?;
    out.checks.push(Check::below("kernel_path_agreement", (&a - &b.u).max_abs() / a.max_abs(), 1e-6));
    out.note("stability_ratio", stability_ratio(&random_smooth_field(&grid, Rank::Vector, cfg.seed, 3), cfg.q)?);
    Ok(out)
}

/// Number of random fields in the Helmholtz scenario.
pub const HELMHOLTZ_FIELDS: u64 = 10;

pub fn helmholtz(cfg: &Config) -> Result<ScenarioOutput> {
    let grid = cfg.grid()?;
    let mut out = ScenarioOutput::new(
        Subcommand::Helmholtz,
        &["seed", "reconstruction", "idempotency", "divergence", "boundedness_ratio"],
    );
    let (mut rec, mut idem, mut div) = (0.0f64, 0.0f64, 0.0f64);
    for seed in cfg.seed..cfg.seed + HELMHOLTZ_FIELDS {
        let f = random_smooth_field(&grid, Rank::Vector, seed, 3);
        let r = idempotency_check(&f)?;
        let b = boundedness_ratio(&f, cfg.q)?;
        rec = rec.max(r.reconstruction);
        idem = idem.max(r.idempotency);
        div = div.max(r.divergence);
        out.rows.push(vec![seed as f64, r.reconstruction, r.idempotency, r.divergence, b]);
    }
    out.checks.push(Check::below("reconstruction", rec, 1e-10));
    out.checks.push(Check::below("idempotency", idem, 1e-10));
    out.checks.push(Check::below("weak_divergence", div, 1e-8));
    Ok(out)
}

/// Spectral parameters of the resolvent sweep: two rays at `arg = +-3 pi/4`
/// with `|lambda|` from `1e-2` to `1e2`, plus two small real values.
pub fn resolvent_lambdas() -> Vec<Complex64> {
    let mut out = Vec::new();
    for m in [1e-2, 1e-1, 1.0, 1e1, 1e2] {
        for s in [1.0, -1.0] {
            out.push(Complex64::from_polar(m, s * 0.75 * PI));
        }
    }
    out.extend([Complex64::new(0.01, 0.0), Complex64::new(0.1, 0.0)]);
    out
}

fn manufactured_resolvent(grid: &Arc<LayerGrid>, lambda: f64, mu: f64) -> Result<(ResolventData, SpectralField, SpectralField)> {
    let dim = grid.dim();
    let k = 2.0 * PI / grid.period();
    let v_star = SpectralField::from_fn(grid, Rank::Vector, |x, z| {
        let mut v = vec![z * (1.0 + z) * (k * x[0]).sin() + z * z, z * z * (2.0 * k * x[0]).cos()];
        if dim == 3 {
            v.insert(1, z * z * (k * x[1]).sin());
        }
        v
    });
    let q_star = SpectralField::from_fn(grid, Rank::Scalar, |x, z| vec![(1.0 + z * z) * (k * x[0]).cos() + z]);
    let t = stress_tensor(&v_star, &q_star, mu)?;
    let mut f = v_star.scaled(lambda);
    f.axpy(-1.0, &divergence(&t)?)?;
    let g = divergence(&v_star)?;
    let mut h = SpectralField::zeros(grid, Rank::Vector);
    for j in 0..dim {
        h.set_component(j, &t.component(j * dim + dim - 1))?;
    }
    Ok((ResolventData::new(Complex64::new(lambda, 0.0), f).with_divergence(g).with_stress(h), v_star, q_star))
}

pub fn resolvent_sweep(cfg: &Config) -> Result<ScenarioOutput> {
    let grid = cfg.grid()?;
    let mu = cfg.mu;
    let mut out = ScenarioOutput::new(
        Subcommand::ResolventSweep,
        &["lambda_re", "lambda_im", "lambda_abs", "velocity_ratio", "full_ratio"],
    );
    let f = random_smooth_field(&grid, Rank::Vector, cfg.seed, 3);
    let (mut lo, mut hi, mut flo, mut fhi) = (f64::INFINITY, 0.0f64, f64::INFINITY, 0.0f64);
    for lambda in resolvent_lambdas() {
        let b = resolvent_bound(&f, lambda, mu, cfg.q)?;
        lo = lo.min(b.velocity_ratio);
        hi = hi.max(b.velocity_ratio);
        flo = flo.min(b.full_ratio);
        fhi = fhi.max(b.full_ratio);
        out.rows.push(vec![lambda.re, lambda.im, lambda.norm(), b.velocity_ratio, b.full_ratio]);
    }
    let mut rec: f64 = 0.0;
    for lam in [0.0, 1.0, 10.0] {
        let (data, v_star, q_star) = manufactured_resolvent(&grid, lam, mu)?;
        let (v, q) = solve_resolvent(&data, mu)?;
        rec = rec.max((&v - &v_star).max_abs() / v_star.max_abs());
        rec = rec.max((&q - &q_star).max_abs() / q_star.max_abs());
    }
    out.checks.push(Check::below("manufactured_recovery", rec, 1e-8));
    out.checks.push(Check::flag("ratio_finite", hi.is_finite() && lo > 0.0, hi));
    out.checks.push(Check::below("ratio_spread", hi / lo, 50.0));
    out.note("full_ratio_spread", fhi / flo);
    let solver = ResolventSolver::new(&grid, mu, Complex64::new(1.0, 0.0))?;
    let mut gap: f64 = 0.0;
    for s in 0..3 {
        let fs = random_solenoidal_field(&grid, cfg.seed + s, 3);
        let (v, q) = solver.solve(&fs)?;
        let k = pressure_operator_k(&v, mu)?;
        gap = gap.max((&k - &q).max_abs() / q.max_abs());
    }
    out.checks.push(Check::below("reduced_pressure_agreement", gap, 1e-6));
    Ok(out)
}

pub fn semigroup_decay(cfg: &Config) -> Result<ScenarioOutput> {
    let grid = cfg.grid()?;
    let mut out = ScenarioOutput::new(Subcommand::SemigroupDecay, &["t", "l2_norm", "lq_norm"]);
    let a = match cfg.initial_data {
        InitialData::SingleMode => cfg.initial_field(&grid, cfg.amplitude.unwrap_or(1.0))?,
        _ => {
            let base = random_solenoidal_field(&grid, cfg.seed, 2);
            match cfg.amplitude {
                Some(s) => crate::global::scale_to_norm(&base, s, cfg.q)?,
                None => base,
            }
        }
    };
    if cfg.initial_data == InitialData::Zero || a.max_abs() == 0.0 {
        return Err(Error::Config("semigroup-decay needs nonzero initial data".into()));
    }
    let traj = Semigroup::new(&grid, cfg.tau, cfg.mu)?.evolve(&a, cfg.steps(), cfg.q)?;
    let mut l2 = Vec::with_capacity(traj.len());
    let mut div: f64 = 0.0;
    let scale = a.max_abs();
    for (n, t) in traj.times().into_iter().enumerate() {
        let u = traj.velocity(n);
        let (a2, aq) = (discrete_lq_norm(u, 2.0)?, discrete_lq_norm(u, cfg.q)?);
        div = div.max(weak_divergence_defect(u)? / scale);
        l2.push(a2);
        out.rows.push(vec![t, a2, aq]);
    }
    let fit = decay_fit(&traj.times(), &l2, 0.3)?;
    out.checks.push(Check::above("decay_rate", fit.rate, 0.0));
    out.checks.push(Check::above("fit_r_squared", fit.r_squared, 0.99));
    out.checks.push(Check::below("divergence_preserved", div, 1e-6));
    Ok(out)
}

/// Random data of the linear problem: smooth `f`, `g`, `h` with simple time
/// profiles and solenoidal initial data of `W^2_q` size `amplitude`.
pub fn random_linear_data(grid: &Arc<LayerGrid>, tau: f64, steps: usize, seed: u64, amplitude: f64, q: f64) -> Result<LinearData> {
    let a = crate::global::scale_to_norm(&random_solenoidal_field(grid, seed, 2), amplitude, q)?;
    let f0 = random_smooth_field(grid, Rank::Vector, seed.wrapping_add(101), 2);
    let g0 = random_smooth_field(grid, Rank::Scalar, seed.wrapping_add(202), 2);
    let h0 = random_smooth_field(grid, Rank::Vector, seed.wrapping_add(303), 2);
    Ok(LinearData::sample(a, tau, steps, |t| {
        (f0.scaled(t.cos()), g0.scaled(t.sin() * (-t).exp()), h0.scaled(t * (-t).exp()))
    }))
}

/// Number of random data sets in the linear scenario.
pub const LINEAR_SETS: u64 = 3;

pub fn linear_mr(cfg: &Config) -> Result<ScenarioOutput> {
    let grid = cfg.grid()?;
    let (mu, q) = (cfg.mu, cfg.q);
    let mut out = ScenarioOutput::new(
        Subcommand::LinearMr,
        &["set", "t", "monolithic_l2", "decomposed_l2", "u1_l2", "u2_l2", "u3_l2", "u4_l2"],
    );
    let sigma0 = match cfg.sigma0 {
        Some(s) => s,
        None => default_sigma0(&grid, mu, cfg.tau, cfg.seed)?,
    };
    let gamma = cfg.gamma0.unwrap_or(0.0);
    out.note("sigma0", sigma0);
    let (mut gap, mut resid, mut ratio) = (0.0f64, 0.0f64, 0.0f64);
    for set in 0..LINEAR_SETS {
        let data = random_linear_data(&grid, cfg.tau, cfg.steps(), cfg.seed + set, cfg.amplitude.unwrap_or(1.0), q)?;
        let mono = solve_linear_ibvp(&data, mu, q)?;
        let dec = solve_linear_decomposed(&data, sigma0, mu, q)?;
        gap = gap.max(relative_trajectory_gap(&dec.total, &mono, 2.0, q, gamma)?);
        resid = resid.max(linear_residual(&mono, &data, mu, 0.0)?);
        let rep = mr_estimate_report(&mono, &data, 2.0, q, gamma)?;
        ratio = ratio.max(rep.ratio.unwrap_or(0.0));
        for (n, t) in mono.times().into_iter().enumerate() {
            let mut row = vec![set as f64, t, discrete_lq_norm(mono.velocity(n), 2.0)?, discrete_lq_norm(dec.total.velocity(n), 2.0)?];
            for part in &dec.parts {
                row.push(discrete_lq_norm(part.velocity(n), 2.0)?);
            }
            out.rows.push(row);
        }
    }
    out.checks.push(Check::below("decomposition_agreement", gap, 1e-4));
    out.checks.push(Check::below("step_residual", resid, 1e-6));
    out.checks.push(Check::flag("mr_ratio_finite", ratio.is_finite() && ratio > 0.0, ratio));
    Ok(out)
}

/// Sample indices used for the push-forward identity.
pub fn pushforward_samples(steps: usize) -> [usize; 5] {
    [0, steps / 4, steps / 2, (3 * steps) / 4, steps]
}

pub fn global_solve(cfg: &Config) -> Result<ScenarioOutput> {
    let grid = cfg.grid()?;
    let (mu, q) = (cfg.mu, cfg.q);
    let mut out = ScenarioOutput::new(
        Subcommand::GlobalSolve,
        &["t", "l2_norm", "lq_norm", "det_defect", "eulerian_lq_norm", "lagrangian_lq_norm"],
    );
    let gamma = match cfg.gamma0 {
        Some(g) => g,
        None => 0.5 * measure_decay_rate(&grid, mu, cfg.tau, 100, cfg.seed)?,
    };
    let mut pc = PicardConfig::new(mu, cfg.tau, cfg.horizon);
    pc.tolerance = cfg.tolerance;
    pc.max_iter = cfg.max_iter;
    pc.q = q;
    pc.gamma = gamma;
    out.note("gamma0", gamma);

    let a = if cfg.initial_data == InitialData::Zero {
        SpectralField::zeros(&grid, Rank::Vector)
    } else {
        let probe = cfg.initial_field(&grid, 1e-2)?;
        let k = measure_gate_constants(&grid, &probe, &pc, cfg.seed)?;
        out.note("c0", k.c0);
        out.note("m4", k.m4);
        out.note("delta0", k.delta0);
        out.note("eps0", k.eps0);
        pc.amplitude_limit = Some(k.eps0);
        cfg.initial_field(&grid, cfg.amplitude.unwrap_or(k.eps0))?
    };
    let (traj, rep) = picard_solve(&a, &pc)?;
    let max_ratio = rep.ratios.iter().cloned().fold(0.0, f64::max);
    out.note("iterates", rep.iterates as f64);
    out.note("final_gap", rep.final_gap);
    for (k, r) in rep.ratios.iter().enumerate() {
        out.note(&format!("ratio_{}", k + 1), *r);
    }
    out.checks.push(Check::flag("converged", rep.converged, rep.final_gap));
    out.checks.push(Check::at_most("contraction_ratios", max_ratio, 0.6));

    let flow = flow_map(&traj)?;
    let jr = jacobian_diagnostics(&flow);
    let mut l2 = Vec::with_capacity(traj.len());
    let mut push_gap: f64 = 0.0;
    let samples = pushforward_samples(traj.len() - 1);
    for (n, t) in traj.times().into_iter().enumerate() {
        let u = traj.velocity(n);
        let lag = discrete_lq_norm(u, q)?;
        let eul = push_forward(&traj, &flow, n)?.velocity_lq_norm(q);
        if samples.contains(&n) {
            push_gap = push_gap.max(if lag > 0.0 { (eul / lag - 1.0).abs() } else { eul });
        }
        let n2 = discrete_lq_norm(u, 2.0)?;
        l2.push(n2);
        out.rows.push(vec![t, n2, lag, flow.det_defect(n), eul, lag]);
    }
    let trivial = l2.iter().all(|&v| v == 0.0);
    if trivial {
        out.checks.push(Check::flag("zero_solution", rep.iterates == 1, rep.iterates as f64));
    } else {
        let fit = decay_fit(&traj.times(), &l2, 0.3)?;
        out.note("fit_r_squared", fit.r_squared);
        out.checks.push(Check::above("decay_rate", fit.rate, 0.0));
    }
    out.checks.push(Check::at_most("final_det_defect", flow.det_defect(traj.len() - 1), 1e-4));
    out.checks.push(Check::at_most("integrated_gradient", jr.integrated_gradient, 0.25));
    out.checks.push(Check::flag("min_singular_value", jr.min_singular_value >= 0.75, jr.min_singular_value));
    out.checks.push(Check::below("pushforward_identity", push_gap, 1e-6));
    out.checks.push(Check::below("divergence_consistency", divergence_consistency(&traj)?, 1e-5));
    out.warnings.extend(rep.warnings);
    Ok(out)
}
