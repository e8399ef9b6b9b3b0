//! Command pipelines behind the CLI.

use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::discretize::{assemble, auto_truncation, transverse_modes, Grid, OperatorKind, Scenario};
use crate::distortion::DistortionParams;
use crate::error::{Error, Result};
use crate::fields::{FieldConfig, StarkField};
use crate::geometry::{check_hypotheses, BendingProfile, DistortionHint, GeometrySetup};
use crate::lab::config::RunConfig;
use crate::lab::fit::{fit_width, SweepRecord, WidthFit};
use crate::lab::output::{num, OutputSink};
use crate::lab::svg::{Chart, Scale, Series};
use crate::linalg::inertia::count_below;
use crate::linalg::ArnoldiOptions;
use crate::spectra::{bound_states, plateau_report, BoundStates, Cluster, ResonanceProblem, ResonanceSolve, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    /// Curvature hypotheses and field regime.
    Check,
    /// Transverse Dirichlet modes.
    Modes,
    /// Trapped modes of the field-free guide.
    Bound,
    /// Resonances of the distorted Stark operator at one `(F, β)`.
    Resonance,
    /// `Z(β)` at fixed `F` and the plateau verdict.
    SweepTheta,
    /// `Z(F)` along a field ladder and the width fit.
    SweepField,
    /// Eigenvalue counts below `λ₀ + cap` as the truncation grows.
    Confining,
    /// Width fit of an existing `sweep_field.csv`.
    FitWidth,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Modes => "modes",
            Command::Bound => "bound",
            Command::Resonance => "resonance",
            Command::SweepTheta => "sweep-theta",
            Command::SweepField => "sweep-field",
            Command::Confining => "confining",
            Command::FitWidth => "fit-width",
        }
    }
}

/// Field ladder of `sweep-field` when no `F_list` is given.
pub const DEFAULT_LADDER: [f64; 7] = [0.08, 0.06, 0.045, 0.034, 0.025, 0.019, 0.014];

/// `β` of `sweep-field` when none is given: the widest resonance on the
/// default ladder has `|Im Z| ≈ 0.077`, which must stay above `-β/2`.
pub const DEFAULT_SWEEP_BETA: f64 = 0.2;

/// Where a run writes, and an optional input table for `fit-width`.
#[derive(Debug, Clone, Default)]
pub struct RunContext {
    pub out_root: PathBuf,
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub dir: PathBuf,
    pub summary: toml::Table,
}

/// Field-free reference data every resonance run starts from.
#[derive(Debug, Clone)]
pub struct Baseline {
    pub setup: GeometrySetup,
    pub profile: BendingProfile,
    pub alpha0: f64,
    /// Discrete transverse threshold `λ₀ʰ` for the configured `Nu`.
    pub lambda0: f64,
    pub grid: Grid,
    pub states: BoundStates,
}

impl Baseline {
    pub fn e0(&self) -> Result<f64> {
        self.states
            .lowest()
            .ok_or_else(|| Error::invalid(format!("no trapped mode below λ₀ = {:.6} on {:?}", self.lambda0, self.grid)))
    }

    /// `min(E₁, λ₀) - E₀`.
    pub fn gap(&self) -> Result<f64> {
        let e0 = self.e0()?;
        let next = self.states.levels.get(1).map(|l| l.0).unwrap_or(self.lambda0);
        Ok(next.min(self.lambda0) - e0)
    }
}

pub fn solver_options(cfg: &RunConfig) -> SolverOptions {
    SolverOptions {
        method: cfg.solver.method,
        k: cfg.solver.k,
        tol: cfg.solver.tol,
        arnoldi: ArnoldiOptions { max_restarts: cfg.solver.max_iter, seed: cfg.solver.seed, ..Default::default() },
    }
}

fn grid_for(cfg: &RunConfig, half_length: f64) -> Result<Grid> {
    match cfg.grid.ns {
        Some(ns) => Grid::new(half_length, ns, cfg.grid.nu, cfg.geometry.d),
        None => Grid::with_spacing(half_length, cfg.grid.hs, cfg.grid.nu, cfg.geometry.d),
    }
}

/// Bound states of `H` on the preliminary grid (`bound_L`, spacing `hs`).
pub fn baseline(cfg: &RunConfig) -> Result<Baseline> {
    let grid = Grid::with_spacing(cfg.grid.bound_half_length, cfg.grid.hs, cfg.grid.nu, cfg.geometry.d)?;
    baseline_on(cfg, grid)
}

fn baseline_on(cfg: &RunConfig, grid: Grid) -> Result<Baseline> {
    let setup = cfg.setup()?;
    let profile = BendingProfile::new(setup.model)?;
    let alpha0 = profile.total();
    let lambda0 = grid.threshold();
    let scenario = Scenario { geometry: &setup, stark: None, distortion: None };
    let h = assemble(OperatorKind::Bare, &scenario, &grid)?;
    let states = bound_states(&h, lambda0, cfg.solver.k, cfg.solver.gap_tol, &solver_options(cfg))?;
    Ok(Baseline { setup, profile, alpha0, lambda0, grid, states })
}

/// Resolves `E` and `δE`.
///
/// `E = min(E₀ - λ₀, -depth·σ·β_max)`; the cutoff then keeps the plateau shift
/// `-iβ` clear of the continuum it rotates. `δE` defaults to
/// `min(0.45|E|, gap/4)`, or `0.45 min(1, |E|)` when `E` was pushed below the
/// binding energy (the gap no longer limits the window there).
pub fn resolve_distortion(cfg: &RunConfig, base: &Baseline, beta_max: f64) -> Result<DistortionParams> {
    let binding = base.e0()? - base.lambda0;
    let (energy, pushed) = match cfg.distortion.energy.value() {
        Some(e) => (e, false),
        None => {
            let floor = -cfg.distortion.depth * cfg.distortion.sharpness * beta_max;
            if floor < binding {
                (floor, true)
            } else {
                (binding, false)
            }
        }
    };
    let window = match cfg.distortion.window.value() {
        Some(w) => w,
        None if pushed => 0.45 * energy.abs().min(1.0),
        None => (0.45 * energy.abs()).min(0.25 * base.gap()?),
    };
    DistortionParams::with_sharpness(energy, window, beta_max, cfg.distortion.sharpness)
}

/// Truncated grid for the distorted operators at field `field`.
pub fn resonance_grid(cfg: &RunConfig, params: &DistortionParams, field: &FieldConfig, alpha0: f64) -> Result<Grid> {
    let half_length = match cfg.grid.half_length.value() {
        Some(l) => l,
        None => auto_truncation(params, field, alpha0, cfg.grid.margin.value())?,
    };
    grid_for(cfg, half_length)
}

/// Everything needed to solve at one field strength.
pub struct FieldPoint {
    pub strength: f64,
    pub stark: StarkField,
    pub grid: Grid,
}

pub fn field_point(cfg: &RunConfig, base: &Baseline, params: &DistortionParams, strength: f64) -> Result<FieldPoint> {
    let field = FieldConfig::new(strength, cfg.field.eta, base.alpha0)?;
    let grid = resonance_grid(cfg, params, &field, base.alpha0)?;
    let stark = StarkField::with_profile(base.profile.clone(), field)?;
    let dist = crate::distortion::DistortionField::new(*params, stark.field(), base.alpha0)?;
    grid.check_distortion(&dist)?;
    Ok(FieldPoint { strength, stark, grid })
}

pub fn problem<'a>(cfg: &RunConfig, base: &'a Baseline, point: &'a FieldPoint, params: DistortionParams) -> Result<ResonanceProblem<'a>> {
    Ok(ResonanceProblem {
        geometry: &base.setup,
        stark: &point.stark,
        params,
        grid: point.grid,
        e0: base.e0()?,
        expected: base.states.levels.first().map(|l| l.1).unwrap_or(1),
        solver: solver_options(cfg),
        tol_im: cfg.solver.tol_im,
    })
}

/// Solves at `(F, β)` and reduces the result to one row.
fn solve_record(
    cfg: &RunConfig,
    base: &Baseline,
    params: DistortionParams,
    point: &FieldPoint,
    beta: f64,
    target: Complex64,
) -> Result<(SweepRecord, ResonanceSolve)> {
    let start = Instant::now();
    let solve = problem(cfg, base, point, params)?.solve(beta, target)?;
    let (z, residual) = solve
        .selection
        .resonances
        .first()
        .map(|r| (r.z, r.residual))
        .unwrap_or((Complex64::new(f64::NAN, f64::NAN), f64::NAN));
    let wall_time = if cfg.output.record_timing { start.elapsed().as_secs_f64() } else { 0.0 };
    let record = SweepRecord {
        strength: point.strength,
        beta,
        re_z: z.re,
        im_z: z.im,
        residual,
        half_length: point.grid.half_length,
        ns: point.grid.ns,
        nu: point.grid.nu,
        wall_time,
    };
    Ok((record, solve))
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))
}

fn first_strength(cfg: &RunConfig) -> Result<f64> {
    cfg.strengths().first().copied().ok_or_else(|| Error::config("field.F", "this command needs a field strength"))
}

fn single_beta(cfg: &RunConfig) -> f64 {
    cfg.betas().first().copied().unwrap_or(0.05)
}

fn float(x: f64) -> toml::Value {
    toml::Value::Float(x)
}

fn record_rows(records: &[SweepRecord]) -> Vec<String> {
    records.iter().map(SweepRecord::csv_row).collect()
}

fn baseline_summary(base: &Baseline, params: Option<&DistortionParams>, t: &mut toml::Table) -> Result<()> {
    t.insert("lambda0".into(), float(base.lambda0));
    t.insert("E0".into(), float(base.e0()?));
    t.insert("alpha0".into(), float(base.alpha0));
    if let Some(p) = params {
        t.insert("E".into(), float(p.energy()));
        t.insert("deltaE".into(), float(p.window()));
    }
    Ok(())
}

/// Runs `cmd` and writes its run directory. The manifest is written even
/// when the pipeline fails, with the partial outputs it produced.
pub fn run_command(cmd: Command, cfg: &RunConfig, ctx: &RunContext) -> Result<RunReport> {
    let dir = ctx.out_root.join(&cfg.output.dir);
    let mut sink = OutputSink::create(&dir, &cfg.output.formats)?;
    let mut summary = toml::Table::new();
    let outcome = dispatch(cmd, cfg, ctx, &mut sink, &mut summary);

    let mut manifest = toml::Table::new();
    let mut run = toml::Table::new();
    run.insert("command".into(), toml::Value::String(cmd.name().into()));
    run.insert("version".into(), toml::Value::String(env!("CARGO_PKG_VERSION").into()));
    run.insert("status".into(), toml::Value::String(if outcome.is_ok() { "ok" } else { "error" }.into()));
    if let Err(e) = &outcome {
        run.insert("error".into(), toml::Value::String(e.to_string()));
    }
    if let Some(input) = &ctx.input {
        run.insert("input".into(), toml::Value::String(input.display().to_string()));
    }
    manifest.insert("run".into(), toml::Value::Table(run));
    let config = toml::Table::try_from(cfg).expect("configuration serializes");
    manifest.insert("config".into(), toml::Value::Table(config));
    manifest.insert("summary".into(), toml::Value::Table(summary.clone()));
    sink.manifest(manifest)?;
    outcome.map(|()| RunReport { dir, summary })
}

fn dispatch(cmd: Command, cfg: &RunConfig, ctx: &RunContext, sink: &mut OutputSink, summary: &mut toml::Table) -> Result<()> {
    match cmd {
        Command::Check => check(cfg, sink, summary),
        Command::Modes => modes(cfg, sink, summary),
        Command::Bound => bound(cfg, sink, summary),
        Command::Resonance => resonance(cfg, sink, summary),
        Command::SweepTheta => sweep_theta(cfg, sink, summary),
        Command::SweepField => sweep_field(cfg, sink, summary),
        Command::Confining => confining(cfg, sink, summary),
        Command::FitWidth => {
            let path = ctx.input.clone().unwrap_or_else(|| sink.dir().join("sweep_field.csv"));
            fit_from_file(&path, sink, summary)
        }
    }
}

fn check(cfg: &RunConfig, sink: &mut OutputSink, summary: &mut toml::Table) -> Result<()> {
    let setup = cfg.setup()?;
    let report = check_hypotheses(&setup, DistortionHint::SignPattern);
    let alpha0 = BendingProfile::new(setup.model)?.total();
    let regime = crate::fields::classify_regime(cfg.field.eta, alpha0)?;
    summary.insert("h1_ok".into(), toml::Value::Boolean(report.h1_ok));
    summary.insert("h2_ok".into(), toml::Value::Boolean(report.h2_ok));
    summary.insert("h3_surrogate_ok".into(), toml::Value::Boolean(report.h3_surrogate_ok));
    summary.insert("sup_abs_gamma".into(), float(report.sup_abs_gamma));
    summary.insert("fitted_decay_exponent".into(), float(report.fitted_decay_exponent));
    summary.insert("alpha0".into(), float(alpha0));
    summary.insert("regime".into(), toml::Value::String(format!("{regime:?}")));
    let rows: Vec<String> = report.violations.iter().map(|(h, s)| format!("{h},{}", num(*s))).collect();
    sink.csv("violations.csv", "hypothesis,s", &rows)
}

fn modes(cfg: &RunConfig, sink: &mut OutputSink, summary: &mut toml::Table) -> Result<()> {
    let modes = transverse_modes(cfg.geometry.d, cfg.grid.nu)?;
    let rows: Vec<String> = modes
        .iter()
        .map(|m| format!("{},{},{},{}", m.k, num(m.discrete), num(m.continuum), num((m.discrete - m.continuum).abs() / m.continuum)))
        .collect();
    summary.insert("lambda0".into(), float(modes[0].discrete));
    summary.insert("lambda0_relative_error".into(), float((modes[0].discrete - modes[0].continuum).abs() / modes[0].continuum));
    sink.csv("modes.csv", "k,discrete,continuum,relative_error", &rows)
}

fn bound(cfg: &RunConfig, sink: &mut OutputSink, summary: &mut toml::Table) -> Result<()> {
    let base = match cfg.grid.half_length.value() {
        Some(l) => baseline_on(cfg, grid_for(cfg, l)?)?,
        None => baseline(cfg)?,
    };
    summary.insert("lambda0".into(), float(base.lambda0));
    summary.insert("count".into(), toml::Value::Integer(base.states.count as i64));
    summary.insert("L".into(), float(base.grid.half_length));
    summary.insert("Ns".into(), toml::Value::Integer(base.grid.ns as i64));
    summary.insert("Nu".into(), toml::Value::Integer(base.grid.nu as i64));
    if let Some(e0) = base.states.lowest() {
        summary.insert("E0".into(), float(e0));
    }
    let mut rows = Vec::new();
    for (k, (e, mult)) in base.states.levels.iter().enumerate() {
        rows.push(format!("{k},{},{mult},{}", num(*e), num(e - base.lambda0)));
    }
    sink.csv("bound.csv", "index,E,multiplicity,binding", &rows)
}

fn resonance(cfg: &RunConfig, sink: &mut OutputSink, summary: &mut toml::Table) -> Result<()> {
    let strength = first_strength(cfg)?;
    let beta = single_beta(cfg);
    let base = baseline(cfg)?;
    let params = resolve_distortion(cfg, &base, beta)?;
    baseline_summary(&base, Some(&params), summary)?;
    let point = field_point(cfg, &base, &params, strength)?;
    let (record, solve) = solve_record(cfg, &base, params, &point, beta, Complex64::new(base.e0()?, 0.0))?;
    sink.csv("resonance.csv", SweepRecord::HEADER, &record_rows(std::slice::from_ref(&record)))?;
    let classify = |z: Complex64| {
        solve
            .selection
            .resonances
            .iter()
            .chain(&solve.selection.others)
            .find(|r| r.z == z)
            .map(|r| r.cluster)
            .unwrap_or(Cluster::Rejected)
    };
    let rows: Vec<String> = solve
        .candidates
        .iter()
        .map(|(z, r)| format!("{},{},{},{:?}", num(z.re), num(z.im), num(*r), classify(*z)))
        .collect();
    sink.csv("candidates.csv", "re,im,residual,cluster", &rows)?;
    let (sel, rest): (Vec<_>, Vec<_>) = solve.candidates.iter().map(|c| (c.0.re, c.0.im)).partition(|&(re, im)| {
        solve.selection.resonances.iter().any(|r| r.z.re == re && r.z.im == im)
    });
    sink.svg(
        "spectrum.svg",
        &Chart {
            title: format!("eigenvalues of the distorted operator, F = {strength}, beta = {beta}"),
            x_label: "Re z".into(),
            y_label: "Im z".into(),
            x_scale: Scale::Linear,
            y_scale: Scale::Linear,
            series: vec![
                Series { label: "continuum".into(), points: rest, line: false, color: "gray" },
                Series { label: "resonance".into(), points: sel, line: false, color: "crimson" },
            ],
        },
    )?;
    summary.insert("selected".into(), toml::Value::Integer(solve.selection.resonances.len() as i64));
    if let Some(w) = &solve.selection.warning {
        summary.insert("warning".into(), toml::Value::String(w.clone()));
    }
    if record.re_z.is_finite() {
        summary.insert("re_Z".into(), float(record.re_z));
        summary.insert("im_Z".into(), float(record.im_z));
    }
    Ok(())
}

fn sweep_theta(cfg: &RunConfig, sink: &mut OutputSink, summary: &mut toml::Table) -> Result<()> {
    let strength = first_strength(cfg)?;
    let betas = cfg.betas();
    if betas.is_empty() {
        return Err(Error::config("distortion.beta_list", "sweep-theta needs a list of β values"));
    }
    let beta_max = betas.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let base = baseline(cfg)?;
    let params = resolve_distortion(cfg, &base, beta_max)?;
    baseline_summary(&base, Some(&params), summary)?;
    let point = field_point(cfg, &base, &params, strength)?;
    let target = Complex64::new(base.e0()?, 0.0);
    let results: Vec<Result<(SweepRecord, ResonanceSolve)>> =
        pool(cfg.solver.workers)?.install(|| betas.par_iter().map(|&b| solve_record(cfg, &base, params, &point, b, target)).collect());
    let mut records = Vec::new();
    let mut values = Vec::new();
    let mut first_err = None;
    for r in results {
        match r {
            Ok((rec, _)) => {
                values.push(rec.re_z.is_finite().then(|| Complex64::new(rec.re_z, rec.im_z)));
                records.push(rec);
            }
            Err(e) => {
                values.push(None);
                first_err.get_or_insert(e);
            }
        }
    }
    sink.csv("sweep_theta.csv", SweepRecord::HEADER, &record_rows(&records))?;
    let drift_tol = cfg.solver.drift_rel * (base.e0()? - base.lambda0).abs();
    let report = plateau_report(&betas, &values, drift_tol);
    summary.insert("drift_tol".into(), float(drift_tol));
    summary.insert("max_drift".into(), float(report.max_drift));
    summary.insert("verdict".into(), toml::Value::String(format!("{:?}", report.verdict)));
    if let (Some((a, b)), Some(d)) = (report.plateau, report.plateau_drift) {
        summary.insert("plateau_betas".into(), toml::Value::Array(vec![float(betas[a]), float(betas[b])]));
        summary.insert("plateau_drift".into(), float(d));
    }
    match first_err {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

/// Solves along the field ladder. With one worker each solve is targeted at
/// the previous `Z(F)`; with more the targets are all `E₀`.
pub fn field_sweep(cfg: &RunConfig, base: &Baseline, params: DistortionParams, beta: f64) -> Result<Vec<SweepRecord>> {
    let strengths = match cfg.strengths() {
        s if s.is_empty() => DEFAULT_LADDER.to_vec(),
        s => s,
    };
    let e0 = Complex64::new(base.e0()?, 0.0);
    if cfg.solver.workers <= 1 {
        let mut target = e0;
        let mut out = Vec::with_capacity(strengths.len());
        for &f in &strengths {
            let point = field_point(cfg, base, &params, f)?;
            let (rec, _) = solve_record(cfg, base, params, &point, beta, target)?;
            if rec.re_z.is_finite() {
                target = Complex64::new(rec.re_z, rec.im_z);
            }
            out.push(rec);
        }
        Ok(out)
    } else {
        pool(cfg.solver.workers)?.install(|| {
            strengths
                .par_iter()
                .map(|&f| {
                    let point = field_point(cfg, base, &params, f)?;
                    Ok(solve_record(cfg, base, params, &point, beta, e0)?.0)
                })
                .collect()
        })
    }
}

fn sweep_field(cfg: &RunConfig, sink: &mut OutputSink, summary: &mut toml::Table) -> Result<()> {
    let beta = cfg.betas().first().copied().unwrap_or(DEFAULT_SWEEP_BETA);
    let base = baseline(cfg)?;
    let params = resolve_distortion(cfg, &base, beta)?;
    baseline_summary(&base, Some(&params), summary)?;
    let records = field_sweep(cfg, &base, params, beta)?;
    sink.csv("sweep_field.csv", SweepRecord::HEADER, &record_rows(&records))?;
    let e0 = base.e0()?;
    // surfaced, not enforced: |Z(F) - E₀| should shrink along the tail
    let dist: Vec<f64> = records.iter().map(|r| Complex64::new(r.re_z - e0, r.im_z).norm()).collect();
    let monotone = dist.windows(2).all(|w| w[1] < w[0]);
    summary.insert("distance_decreasing".into(), toml::Value::Boolean(monotone));
    sink.svg(
        "z_trajectory.svg",
        &Chart {
            title: "Z(F)".into(),
            x_label: "Re Z".into(),
            y_label: "Im Z".into(),
            x_scale: Scale::Linear,
            y_scale: Scale::Linear,
            series: vec![Series {
                label: "Z(F)".into(),
                points: records.iter().map(|r| (r.re_z, r.im_z)).collect(),
                line: true,
                color: "navy",
            }],
        },
    )?;
    let fit = fit_width(&records)?;
    width_outputs(&records, &fit, sink, summary)
}

fn width_outputs(records: &[SweepRecord], fit: &WidthFit, sink: &mut OutputSink, summary: &mut toml::Table) -> Result<()> {
    summary.insert("c1".into(), float(fit.c1));
    summary.insert("c2".into(), float(fit.c2));
    summary.insert("r_squared".into(), float(fit.r_squared));
    summary.insert("F_range".into(), toml::Value::Array(vec![float(fit.f_min), float(fit.f_max)]));
    summary.insert("points".into(), toml::Value::Integer(fit.points as i64));
    summary.insert("confirms_exponential_law".into(), toml::Value::Boolean(fit.confirms_exponential_law));
    let data: Vec<(f64, f64)> = records.iter().filter(|r| r.im_z < 0.0).map(|r| (1.0 / r.strength, -r.im_z)).collect();
    let (x0, x1) = (1.0 / fit.f_max, 1.0 / fit.f_min);
    sink.svg(
        "width_fit.svg",
        &Chart {
            title: format!("|Im Z| against 1/F, c2 = {:.4}, R2 = {:.4}", fit.c2, fit.r_squared),
            x_label: "1/F".into(),
            y_label: "|Im Z|".into(),
            x_scale: Scale::Linear,
            y_scale: Scale::Log,
            series: vec![
                Series { label: "data".into(), points: data, line: false, color: "black" },
                Series {
                    label: "fit".into(),
                    points: vec![(x0, fit.c1 * (-fit.c2 * x0).exp()), (x1, fit.c1 * (-fit.c2 * x1).exp())],
                    line: true,
                    color: "crimson",
                },
            ],
        },
    )
}

fn fit_from_file(path: &Path, sink: &mut OutputSink, summary: &mut toml::Table) -> Result<()> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
    let records = SweepRecord::parse_csv(&text)?;
    let fit = fit_width(&records)?;
    width_outputs(&records, &fit, sink, summary)
}

/// Counts of eigenvalues of `H(F)` below `λ₀ʰ + cap` for each truncation.
pub fn confining_counts(cfg: &RunConfig, eta: f64) -> Result<Vec<(f64, usize)>> {
    let setup = cfg.setup()?;
    let profile = BendingProfile::new(setup.model)?;
    let field = FieldConfig::new(cfg.confining.strength, eta, profile.total())?;
    let stark = StarkField::with_profile(profile, field)?;
    let results: Vec<Result<(f64, usize)>> = pool(cfg.solver.workers)?.install(|| {
        cfg.confining
            .half_lengths
            .par_iter()
            .map(|&l| {
                let grid = Grid::with_spacing(l, cfg.grid.hs, cfg.grid.nu, cfg.geometry.d)?;
                let scenario = Scenario { geometry: &setup, stark: Some(&stark), distortion: None };
                let h = assemble(OperatorKind::Stark, &scenario, &grid)?;
                Ok((l, count_below(&h.matrix, grid.nu, grid.threshold() + cfg.confining.cap)?))
            })
            .collect()
    });
    results.into_iter().collect()
}

fn confining(cfg: &RunConfig, sink: &mut OutputSink, summary: &mut toml::Table) -> Result<()> {
    let setup = cfg.setup()?;
    let alpha0 = BendingProfile::new(setup.model)?.total();
    let regime = crate::fields::classify_regime(cfg.confining.eta, alpha0)?;
    let counts = confining_counts(cfg, cfg.confining.eta)?;
    let contrast = confining_counts(cfg, cfg.confining.contrast_eta)?;
    let mut rows = Vec::new();
    for ((l, n), (_, m)) in counts.iter().zip(&contrast) {
        rows.push(format!("{},{n},{m}", num(*l)));
    }
    sink.csv("confining.csv", "L,count,contrast_count", &rows)?;
    let stable = counts.windows(2).last().is_some_and(|w| w[0].1 == w[1].1);
    let grows = contrast.windows(2).all(|w| w[1].1 > w[0].1);
    summary.insert("regime".into(), toml::Value::String(format!("{regime:?}")));
    summary.insert("counts".into(), toml::Value::Array(counts.iter().map(|c| toml::Value::Integer(c.1 as i64)).collect()));
    summary.insert("contrast_counts".into(), toml::Value::Array(contrast.iter().map(|c| toml::Value::Integer(c.1 as i64)).collect()));
    summary.insert("count_stabilizes".into(), toml::Value::Boolean(stable));
    summary.insert("contrast_grows".into(), toml::Value::Boolean(grows));
    Ok(())
}
