//! The four subcommands. Each returns a value for `main` to report; the
//! exit code follows from the error class.

use std::path::{Path, PathBuf};
use std::time::Instant;

use memwave_core::diagnostics::{
    check_coercivity_and_bounds, check_integrated_energy, check_monotone, check_strong_energy_identity,
    derivative_residual, energy_report, EnergyReport,
};
use memwave_core::domain::make_multiplier_field;
use memwave_core::kernels::{
    certify_positive_definite, certify_strongly_pd, check_exp_decay_condition, check_sign_profile, log_grid,
};
use memwave_core::nonlinearity::check_smallness;
use memwave_core::solver::{run, RunSummary, Trajectory};
use memwave_core::trace::{
    deconvolve_trace, direct_inequality_report, extract_trace, hidden_quantity, multiplier_identity_residual,
    IdentityLedger, TraceRun, TraceSeries, IDENTITY_TERMS,
};
use memwave_core::Error as CoreError;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Format, InitialKind, RunConfig, Setup};
use crate::error::{CliError, Result};
use crate::output::{self, fmt_float, fresh_dir, RunDir};

/// Relative tolerance per record for the monotonicity check.
pub const MONOTONE_TOL: f64 = 1e-6;

/// Empirical constants and flags written to `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub steps: usize,
    pub t_final: f64,
    pub records: usize,
    pub record_dt: f64,
    pub max_abs: f64,
    pub max_l2: f64,
    pub e_history_initial: f64,
    pub e_history_final: f64,
    #[serde(rename = "coercivity_C")]
    pub coercivity_c: f64,
    pub bound_313: f64,
    pub c0_420: Option<f64>,
    pub monotone_pass: bool,
    pub coercivity_pass: bool,
    pub coercivity_informational: bool,
    pub c0_420_uniform: Option<bool>,
    pub smallness_pass: bool,
    pub lambda_1: f64,
    pub growth_c0: f64,
    pub dissipation_sup: f64,
    pub derivative_residual: f64,
    pub strong_identity_residual: f64,
    pub hidden_ratio: Option<f64>,
    pub history_truncated: bool,
    pub identity_residual: Option<f64>,
}

/// A finished simulation with its diagnostics.
pub struct Analysis {
    pub traj: Trajectory,
    pub run: RunSummary,
    pub energy: EnergyReport,
    pub trace: TraceSeries,
    pub identity: Option<IdentityLedger>,
    pub summary: Summary,
}

fn optional<T>(r: memwave_core::Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(CoreError::DegenerateData(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

pub fn analyse(s: &Setup, with_identity: bool) -> Result<Analysis> {
    let (traj, rs) = run(&s.grid, &s.kernel, &s.nl, &s.ic, &s.solver)?;
    let energy = energy_report(&traj, &s.grid, &s.kernel, &s.nl)?;
    let trace = extract_trace(&traj, &s.grid, &s.kernel)?;
    let lambda = s.grid.smallest_eigenvalue()?;
    let small = check_smallness(&s.nl, &s.kernel, lambda);
    let coer = check_coercivity_and_bounds(&energy, lambda, small.c0);
    let mono = check_monotone(&energy.e_history, MONOTONE_TOL);
    let integrated = optional(check_integrated_energy(&energy.e_history, energy.record_dt))?;
    let strong = check_strong_energy_identity(&energy, &s.kernel);
    let horizon = trace.horizon();
    let hidden_ratio = if energy.data_norm > 0.0 && horizon > 0.0 {
        Some(hidden_quantity(&trace, horizon)? / energy.data_norm)
    } else {
        None
    };
    let identity = if with_identity {
        let h = make_multiplier_field(&s.grid);
        Some(multiplier_identity_residual(&traj, &s.grid, &s.kernel, &s.nl, &h, 0.0, horizon)?)
    } else {
        None
    };
    let summary = Summary {
        steps: rs.steps,
        t_final: rs.t_final,
        records: traj.len(),
        record_dt: traj.record_dt(),
        max_abs: rs.max_abs,
        max_l2: rs.max_l2,
        e_history_initial: energy.e_history.first().copied().unwrap_or(0.0),
        e_history_final: energy.e_history.last().copied().unwrap_or(0.0),
        coercivity_c: coer.coercivity_c,
        bound_313: coer.bound_313,
        c0_420: integrated.map(|i| i.c0),
        monotone_pass: mono.passed,
        coercivity_pass: coer.coercivity_pass,
        coercivity_informational: coer.informational,
        c0_420_uniform: integrated.map(|i| i.is_uniform),
        smallness_pass: small.passed,
        lambda_1: lambda,
        growth_c0: small.c0,
        dissipation_sup: coer.dissipation_sup,
        derivative_residual: derivative_residual(&energy),
        strong_identity_residual: strong.max_residual,
        hidden_ratio,
        history_truncated: energy.history_truncated,
        identity_residual: identity.as_ref().map(|l| l.residual),
    };
    Ok(Analysis { traj, run: rs, energy, trace, identity, summary })
}

fn identity_json(l: &IdentityLedger) -> Value {
    let terms: serde_json::Map<String, Value> =
        IDENTITY_TERMS.iter().zip(l.terms).map(|(n, v)| (n.to_string(), json!(v))).collect();
    json!({
        "s": l.s,
        "t": l.t,
        "lhs": l.lhs,
        "lhs_reduced": l.lhs_reduced,
        "rhs": l.rhs(),
        "residual": l.residual,
        "terms": terms,
    })
}

/// Where a run directory goes.
pub enum Placement<'a> {
    /// A fresh uniquely named directory under this root.
    Under(&'a Path),
    /// Exactly this path, which must not exist yet.
    At(PathBuf),
}

pub struct RunOutcome {
    pub dir: PathBuf,
    pub summary: Summary,
    pub final_u: Vec<f64>,
    pub cell_volume: f64,
}

pub fn execute_run(cfg: &RunConfig, place: Placement<'_>, check_identity: bool) -> Result<RunOutcome> {
    let started = chrono::Utc::now();
    let clock = Instant::now();
    let setup = cfg.build()?;
    let with_identity = check_identity || cfg.outputs.check_identity;
    if with_identity && setup.solver.history_window.is_some() {
        return Err(CliError::invalid("the identity check needs solver.history_window = none"));
    }
    let an = analyse(&setup, with_identity)?;

    let path = match place {
        Placement::Under(root) => fresh_dir(root, "run")?,
        Placement::At(p) => {
            std::fs::create_dir(&p).map_err(|e| CliError::io(&p, e))?;
            p
        }
    };
    let mut dir = RunDir::new(path, started, clock);
    output::write_text(&dir.file("config.cfg"), &cfg.serialize())?;
    if cfg.wants(Format::Csv) {
        output::write_energy_csv(&dir.file("energy.csv"), &an.energy)?;
        output::write_trace_csv(&dir.file("trace.csv"), &an.trace)?;
    }
    if cfg.wants(Format::Bin) {
        output::write_snapshots(&dir.file("snapshots.bin"), &an.traj, &setup.grid)?;
    }
    output::write_json(&dir.file("summary.json"), &an.summary)?;
    if let Some(l) = &an.identity {
        output::write_json(&dir.file("identity.json"), &identity_json(l))?;
    }
    let summary_value = serde_json::to_value(&an.summary).expect("summary serializes");
    let config_value = serde_json::to_value(cfg).expect("config serializes");
    let dir = dir.seal(config_value, summary_value)?;
    Ok(RunOutcome { dir, summary: an.summary, final_u: an.run.final_u, cell_volume: setup.grid.cell_volume() })
}

pub fn cmd_run(cfg: &RunConfig, check_identity: bool) -> Result<RunOutcome> {
    let root = output::output_root(&cfg.outputs.directory);
    execute_run(cfg, Placement::Under(&root), check_identity)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Kernel,
    Energy,
    Identity,
    Trace,
    All,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Kernel => "kernel",
            Suite::Energy => "energy",
            Suite::Identity => "identity",
            Suite::Trace => "trace",
            Suite::All => "all",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Informational checks never fail the suite.
    pub required: bool,
    pub value: Value,
    pub detail: String,
}

fn check(name: &str, passed: bool, required: bool, value: Value, detail: String) -> Check {
    Check { name: name.into(), passed, required, value, detail }
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub suite: Suite,
    pub passed: bool,
    pub first_failure: Option<String>,
    pub checks: Vec<Check>,
}

pub struct VerifyOutcome {
    pub dir: PathBuf,
    pub verdict: Verdict,
}

fn suite_kernel(cfg: &RunConfig, s: &Setup) -> Result<Vec<Check>> {
    let k = &s.kernel;
    let claims = !k.is_zero();
    let horizon = cfg.solver.t_final.max(1.0);
    let grid = log_grid(1e-6, 1e3, 400);
    let mut out = Vec::new();

    let sp = check_sign_profile(k, &grid);
    let failing: Vec<&str> = sp.conditions.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    out.push(check(
        "kernel.sign_profile",
        sp.all_passed(),
        claims,
        json!(failing),
        if failing.is_empty() {
            "all sign conditions hold".into()
        } else {
            format!("violated: {}", failing.join(", "))
        },
    ));

    let pd = certify_positive_definite(|t| k.a(t), horizon, 200)?;
    out.push(check(
        "kernel.positive_definite",
        pd.is_positive_definite(),
        true,
        json!(pd.min_eigenvalue),
        format!("min eigenvalue {:.3e}, tolerance {:.3e}, T = {horizon}, n = 200", pd.min_eigenvalue, pd.tolerance),
    ));

    let deltas = log_grid(1e-4, 1.0, 17);
    let spd = certify_strongly_pd(k, horizon, 200, &deltas)?;
    out.push(check(
        "kernel.strongly_positive_definite",
        spd.is_positive_definite() && spd.delta > 0.0,
        claims,
        json!(spd.delta),
        format!("largest accepted delta {:.3e}", spd.delta),
    ));

    let mut rate = None;
    for m in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0] {
        if check_exp_decay_condition(k, m, &grid)? {
            rate = Some(m);
            break;
        }
    }
    out.push(check(
        "kernel.exp_decay_rate",
        rate.is_some(),
        false,
        json!(rate),
        match rate {
            Some(m) => format!("-a'' <= m a' holds from m = {m}"),
            None => "no m up to 32 satisfies -a'' <= m a'".into(),
        },
    ));
    Ok(out)
}

/// Residual floor below which a refinement step counts as converged.
const FLOOR_REL: f64 = 1e-11;

/// Observed orders `log2(r_k / r_{k+1})`; a step passes if the order is at
/// least `min_order` or the finer residual is below `floor`.
fn refinement(residuals: &[f64], floor: f64, min_order: f64) -> (Vec<f64>, bool) {
    let orders: Vec<f64> = residuals.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let ok = residuals.windows(2).zip(&orders).all(|(w, &p)| w[1] <= floor || p >= min_order);
    (orders, ok)
}

fn fmt_series(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", ")
}

fn suite_energy(cfg: &RunConfig, s: &Setup) -> Result<Vec<Check>> {
    let mut reports = Vec::new();
    for level in 0..3 {
        let mut c = cfg.clone();
        c.solver.dt = cfg.solver.dt / f64::from(1u32 << level);
        let setup = c.build()?;
        let (traj, _) = run(&setup.grid, &setup.kernel, &setup.nl, &setup.ic, &setup.solver)?;
        reports.push(energy_report(&traj, &setup.grid, &setup.kernel, &setup.nl)?);
    }
    let base = &reports[0];
    let e0 = base.e_history.first().copied().unwrap_or(0.0).abs();
    let floor = FLOOR_REL * e0;
    let mut out = Vec::new();

    let mono = check_monotone(&base.e_history, MONOTONE_TOL);
    out.push(check(
        "energy.monotone",
        mono.passed,
        true,
        json!(mono.max_increase),
        match mono.first_violation {
            None => format!("E_history nonincreasing within {MONOTONE_TOL:e} E(0)"),
            Some(r) => format!("{} increases, first at t = {}", mono.violations, base.times[r]),
        },
    ));

    let der: Vec<f64> = reports.iter().map(derivative_residual).collect();
    let (orders, ok) = refinement(&der, floor, 1.0);
    out.push(check(
        "energy.derivative_identity",
        ok,
        true,
        json!({ "residuals": der, "orders": orders }),
        format!("residuals {} under dt halving", fmt_series(&der)),
    ));

    let strong: Vec<f64> = reports.iter().map(|r| check_strong_energy_identity(r, &s.kernel).max_residual).collect();
    let (orders, ok) = refinement(&strong, floor, 1.0);
    out.push(check(
        "energy.strong_identity",
        ok,
        true,
        json!({ "residuals": strong, "orders": orders }),
        format!("residuals {} under dt halving", fmt_series(&strong)),
    ));

    let lambda = s.grid.smallest_eigenvalue()?;
    let small = check_smallness(&s.nl, &s.kernel, lambda);
    let coer = check_coercivity_and_bounds(base, lambda, small.c0);
    out.push(check(
        "energy.coercivity",
        coer.coercivity_pass,
        !coer.informational,
        json!(coer.coercivity_c),
        format!(
            "C = {:.4}, min margin {:.3e}{}",
            coer.coercivity_c,
            coer.min_margin,
            if coer.informational { " (smallness fails, informational)" } else { "" }
        ),
    ));
    Ok(out)
}

fn refine_grid(cfg: &RunConfig, level: u32) -> RunConfig {
    let mut c = cfg.clone();
    let f = 1usize << level;
    c.domain.nodes = cfg.domain.nodes.iter().map(|&n| (n.saturating_sub(1)) * f + 1).collect();
    c.solver.dt = cfg.solver.dt / f as f64;
    c
}

fn identity_residual(cfg: &RunConfig) -> Result<IdentityLedger> {
    let s = cfg.build()?;
    let (traj, _) = run(&s.grid, &s.kernel, &s.nl, &s.ic, &s.solver)?;
    let h = make_multiplier_field(&s.grid);
    let t_end = traj.snapshots.last().map_or(0.0, |r| r.t);
    Ok(multiplier_identity_residual(&traj, &s.grid, &s.kernel, &s.nl, &h, 0.0, t_end)?)
}

fn suite_identity(cfg: &RunConfig) -> Result<Vec<Check>> {
    let mut full = cfg.clone();
    full.solver.history_window = None;
    if full.initial.kind == InitialKind::Custom {
        return Err(CliError::invalid("the identity refinement study cannot refine custom initial data"));
    }
    let ledgers = (0..3).map(|l| identity_residual(&refine_grid(&full, l))).collect::<Result<Vec<_>>>()?;
    let residuals: Vec<f64> = ledgers.iter().map(|l| l.residual.abs()).collect();
    let scale = ledgers.iter().map(|l| l.lhs.abs()).fold(0.0, f64::max);
    let (orders, ok) = refinement(&residuals, FLOOR_REL * scale, 1.0);
    let mut out = vec![check(
        "identity.convergence",
        ok,
        true,
        json!({ "residuals": residuals, "orders": orders }),
        format!("residuals {} under joint (dt, h) halving, orders {}", fmt_series(&residuals), fmt_series(&orders)),
    )];

    let mut zero = full.clone();
    zero.initial.kind = InitialKind::Zero;
    let z = identity_residual(&zero)?;
    out.push(check(
        "identity.zero_trajectory",
        z.residual == 0.0,
        true,
        json!(z.residual),
        format!("residual {:e}", z.residual),
    ));
    Ok(out)
}

/// Number of random data in the direct-inequality family.
pub const TRACE_FAMILY: u64 = 8;

fn trace_family(cfg: &RunConfig) -> Result<Vec<TraceRun>> {
    (0..TRACE_FAMILY)
        .into_par_iter()
        .map(|i| {
            let mut c = cfg.clone();
            c.seed = cfg.seed.wrapping_add(i);
            c.initial.kind = InitialKind::RandomSmooth;
            c.initial.cutoff = cfg.initial.cutoff.max(1);
            let s = c.build()?;
            let (traj, _) = run(&s.grid, &s.kernel, &s.nl, &s.ic, &s.solver)?;
            let trace = extract_trace(&traj, &s.grid, &s.kernel)?;
            let energy = energy_report(&traj, &s.grid, &s.kernel, &s.nl)?;
            Ok(TraceRun { trace, energy })
        })
        .collect()
}

fn suite_trace(cfg: &RunConfig, s: &Setup) -> Result<Vec<Check>> {
    let coarse = trace_family(cfg)?;
    let fine = trace_family(&refine_grid(cfg, 1))?;
    let horizon = coarse.iter().chain(&fine).map(|r| r.trace.horizon()).fold(f64::INFINITY, f64::min);
    let rc = direct_inequality_report(&coarse, &s.kernel, horizon)?;
    let rf = direct_inequality_report(&fine, &s.kernel, horizon)?;
    let change = (rf.max_ratio - rc.max_ratio).abs() / rc.max_ratio;
    let mut out = vec![check(
        "trace.refinement_stability",
        change < 0.2,
        true,
        json!({ "coarse": rc.max_ratio, "fine": rf.max_ratio, "relative_change": change }),
        format!("max ratio {:.4} -> {:.4} under 2x refinement ({:.1}%)", rc.max_ratio, rf.max_ratio, 100.0 * change),
    )];

    let tr = &coarse[0].trace;
    let back = deconvolve_trace(tr, &s.kernel)?;
    let (mut num, mut den) = (0.0, 0.0);
    for (a, b) in back.raw.iter().flatten().zip(tr.raw.iter().flatten()) {
        num += (a - b) * (a - b);
        den += b * b;
    }
    let rel = if den > 0.0 { (num / den).sqrt() } else { num.sqrt() };
    out.push(check(
        "trace.deconvolution",
        rel <= 1e-4,
        true,
        json!(rel),
        format!("relative L2 mismatch {rel:.3e} between deconvolved and raw trace"),
    ));

    out.push(check(
        "trace.energy_ratio",
        rc.max_energy_ratio.is_finite(),
        false,
        json!(rc.max_energy_ratio),
        format!("max hidden quantity over energy bound {:.4}", rc.max_energy_ratio),
    ));
    Ok(out)
}

pub fn cmd_verify(suite: Suite, cfg: &RunConfig) -> Result<VerifyOutcome> {
    let started = chrono::Utc::now();
    let clock = Instant::now();
    let setup = cfg.build()?;
    let mut checks = Vec::new();
    if matches!(suite, Suite::Kernel | Suite::All) {
        checks.extend(suite_kernel(cfg, &setup)?);
    }
    if matches!(suite, Suite::Energy | Suite::All) {
        checks.extend(suite_energy(cfg, &setup)?);
    }
    if matches!(suite, Suite::Identity | Suite::All) {
        checks.extend(suite_identity(cfg)?);
    }
    if matches!(suite, Suite::Trace | Suite::All) {
        checks.extend(suite_trace(cfg, &setup)?);
    }
    let first_failure = checks.iter().find(|c| c.required && !c.passed).map(|c| c.name.clone());
    let verdict = Verdict { suite, passed: first_failure.is_none(), first_failure, checks };

    let root = output::output_root(&cfg.outputs.directory);
    let mut dir = RunDir::new(fresh_dir(&root, &format!("verify-{}", suite.name()))?, started, clock);
    output::write_text(&dir.file("config.cfg"), &cfg.serialize())?;
    output::write_json(&dir.file("verdict.json"), &verdict)?;
    let summary = json!({ "suite": suite, "passed": verdict.passed, "first_failure": verdict.first_failure });
    let dir = dir.seal(serde_json::to_value(cfg).expect("config serializes"), summary)?;
    Ok(VerifyOutcome { dir, verdict })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub index: usize,
    pub value: String,
    pub directory: String,
    pub exit_code: u8,
    pub message: String,
    pub summary: Option<Summary>,
    /// Grid L² distance of the final field to the previous run's.
    pub diff_prev: Option<f64>,
    pub order: Option<f64>,
}

pub struct SweepOutcome {
    pub dir: PathBuf,
    pub rows: Vec<SweepRow>,
}

impl SweepOutcome {
    pub fn failed(&self) -> usize {
        self.rows.iter().filter(|r| r.exit_code != 0).count()
    }
}

/// Splits a `--values` argument on commas, dropping empty entries.
pub fn split_values(raw: &str) -> Vec<String> {
    raw.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

pub fn cmd_sweep(template: &RunConfig, axis: &str, values: &[String], jobs: usize) -> Result<SweepOutcome> {
    if values.is_empty() {
        return Err(CliError::invalid("sweep needs at least one value"));
    }
    if !template.resolves(axis) {
        return Err(CliError::invalid(format!("sweep axis `{axis}` does not resolve in the template")));
    }
    if jobs == 0 {
        return Err(CliError::invalid("--jobs must be at least 1"));
    }
    let started = chrono::Utc::now();
    let clock = Instant::now();
    let root = output::output_root(&template.outputs.directory);
    let sweep_dir = fresh_dir(&root, "sweep")?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Numerical(format!("thread pool: {e}")))?;
    let outcomes: Vec<Result<RunOutcome>> = pool.install(|| {
        values
            .par_iter()
            .enumerate()
            .map(|(i, v)| {
                let mut c = template.clone();
                c.set(axis, v)?;
                execute_run(&c, Placement::At(sweep_dir.join(format!("run-{i:03}"))), false)
            })
            .collect()
    });

    let mut rows = Vec::with_capacity(values.len());
    let mut finals: Vec<Option<(Vec<f64>, f64)>> = Vec::with_capacity(values.len());
    for (i, (v, o)) in values.iter().zip(outcomes).enumerate() {
        let directory = format!("run-{i:03}");
        match o {
            Ok(o) => {
                rows.push(SweepRow {
                    index: i,
                    value: v.clone(),
                    directory,
                    exit_code: 0,
                    message: String::new(),
                    summary: Some(o.summary),
                    diff_prev: None,
                    order: None,
                });
                finals.push(Some((o.final_u, o.cell_volume)));
            }
            Err(e) => {
                eprintln!("warning: sweep run {i} ({axis} = {v}) failed: {e}");
                rows.push(SweepRow {
                    index: i,
                    value: v.clone(),
                    directory,
                    exit_code: e.exit_code(),
                    message: e.to_string(),
                    summary: None,
                    diff_prev: None,
                    order: None,
                });
                finals.push(None);
            }
        }
    }
    for i in 1..rows.len() {
        if let (Some((a, w)), Some((b, _))) = (&finals[i - 1], &finals[i]) {
            if a.len() == b.len() {
                let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() * w;
                rows[i].diff_prev = Some(d.sqrt());
            }
        }
    }
    // successive differences shrink like (v_{i-1}/v_i)^p for a geometric axis
    for i in 2..rows.len() {
        let (d1, d2) = (rows[i - 1].diff_prev, rows[i].diff_prev);
        let (v0, v1) = (rows[i - 2].value.parse::<f64>(), rows[i - 1].value.parse::<f64>());
        if let (Some(d1), Some(d2), Ok(v0), Ok(v1)) = (d1, d2, v0, v1) {
            let ratio = v0 / v1;
            if d1 > 0.0 && d2 > 0.0 && ratio > 0.0 && ratio != 1.0 {
                rows[i].order = Some((d1 / d2).ln() / ratio.ln());
            }
        }
    }

    let mut dir = RunDir::new(sweep_dir, started, clock);
    write_sweep_csv(&dir.file("sweep.csv"), axis, &rows)?;
    let summary = json!({
        "axis": axis,
        "values": values,
        "runs": rows.len(),
        "failed": rows.iter().filter(|r| r.exit_code != 0).count(),
    });
    let path = dir.seal(serde_json::to_value(template).expect("config serializes"), summary)?;
    Ok(SweepOutcome { dir: path, rows })
}

fn write_sweep_csv(path: &Path, axis: &str, rows: &[SweepRow]) -> Result<()> {
    let io = |e: csv::Error| CliError::io(path, std::io::Error::other(e.to_string()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record([
        "index",
        axis,
        "status",
        "exit_code",
        "directory",
        "steps",
        "records",
        "max_l2",
        "E_history_final",
        "coercivity_C",
        "bound_313",
        "c0_420",
        "monotone_pass",
        "diff_prev",
        "order",
        "message",
    ])
    .map_err(io)?;
    let opt = |v: Option<f64>| v.map(fmt_float).unwrap_or_default();
    for r in rows {
        let s = r.summary.as_ref();
        w.write_record([
            r.index.to_string(),
            r.value.clone(),
            if r.exit_code == 0 { "ok".into() } else { "failed".into() },
            r.exit_code.to_string(),
            r.directory.clone(),
            s.map(|s| s.steps.to_string()).unwrap_or_default(),
            s.map(|s| s.records.to_string()).unwrap_or_default(),
            opt(s.map(|s| s.max_l2)),
            opt(s.map(|s| s.e_history_final)),
            opt(s.map(|s| s.coercivity_c)),
            opt(s.map(|s| s.bound_313)),
            opt(s.and_then(|s| s.c0_420)),
            s.map(|s| s.monotone_pass.to_string()).unwrap_or_default(),
            opt(r.diff_prev),
            opt(r.order),
            r.message.clone(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub struct PlotOutcome {
    pub script: String,
    pub warnings: Vec<String>,
}

fn trace_node_count(path: &Path) -> Result<usize> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
    let mut count = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
        let node: usize = rec
            .get(1)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| CliError::invalid(format!("{}: malformed node column", path.display())))?;
        count = count.max(node + 1);
    }
    Ok(count)
}

/// A gnuplot script drawing the energy curves and, when present, the boundary traces.
pub fn cmd_plot(dir: &Path) -> Result<PlotOutcome> {
    let energy = dir.join("energy.csv");
    if !energy.is_file() {
        return Err(CliError::invalid(format!("{}: energy.csv not found", dir.display())));
    }
    let dir = dir.canonicalize().map_err(|e| CliError::invalid(format!("{}: {e}", dir.display())))?;
    let q = |name: &str| format!("'{}'", dir.join(name).display().to_string().replace('\'', "''"));
    let mut warnings = Vec::new();
    let mut s = String::new();
    s.push_str(&format!("# plot script for {}\n", dir.display()));
    s.push_str("set datafile separator ','\n");
    s.push_str("set terminal pngcairo size 1100,700 noenhanced\n");
    s.push_str("set key outside right\nset grid\nset xlabel 't'\n\n");
    s.push_str(&format!("set output {}\nset title 'energy'\n", q("energy.png")));
    s.push_str(&format!(
        "plot {e} using 1:8 with lines title 'E_history', \\\n     {e} using 1:7 with lines title 'E_simple', \\\n     \
         {e} using 1:2 with lines title 'kinetic', \\\n     {e} using 1:9 with lines title 'memory_dissipation'\n",
        e = q("energy.csv")
    ));
    let trace = dir.join("trace.csv");
    if trace.is_file() {
        let nodes = trace_node_count(&trace)?;
        if nodes > 0 {
            s.push_str(&format!("\nset output {}\nset title 'boundary trace (raw)'\n", q("trace.png")));
            s.push_str(&format!(
                "plot for [n=0:{}] {} using 1:($2==n ? $3 : NaN) with lines title sprintf('node %d', n)\n",
                nodes - 1,
                q("trace.csv")
            ));
            s.push_str(&format!("\nset output {}\nset title 'boundary trace (convolved)'\n", q("trace_convolved.png")));
            s.push_str(&format!(
                "plot for [n=0:{}] {} using 1:($2==n ? $4 : NaN) with lines title sprintf('node %d', n)\n",
                nodes - 1,
                q("trace.csv")
            ));
        }
    } else {
        warnings.push(format!("{}: trace.csv not found, plotting energy only", dir.display()));
    }
    s.push_str("\nunset output\n");
    Ok(PlotOutcome { script: s, warnings })
}
