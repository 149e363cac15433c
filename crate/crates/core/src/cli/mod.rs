//! Commands behind the `ancilla-phase` binary.
//!
//! Exit codes: 0 on success, 1 when a check or computation fails, 2 on a
//! usage or configuration error. `ANCILLA_PHASE_THREADS` sets the worker count.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::adaptive::{AdaptiveEstimator, EnsembleStats, ThetaTable};
use crate::decoherence::depolarizing_kraus;
use crate::error::Error;
use crate::optics::{phase_grid, try_analysis_povm, ParameterSet, ValidatedConvention};
use crate::sensitivity::{
    check_derivatives, fisher_closed_form_bare, fisher_contributions, fisher_reference_phase, optimize_theta,
    supersensitivity_threshold, AncillaEvaluator, InterferometerModel, ProbabilityModel, SearchConfig, Strategy,
    ThetaOptimum, ThresholdReport,
};
use config::RunConfig;
use output::{csv, json, manifest_path, num, write_atomic, RunManifest};

pub const THREADS_ENV: &str = "ANCILLA_PHASE_THREADS";
pub const DEFAULT_CURVE_GRID: usize = 256;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failure(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Failure(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidProbability(_) => CliError::Usage(e.to_string()),
            other => CliError::Failure(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failure(format!("i/o error: {e}"))
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "ancilla-phase", version, about = "Two-photon phase estimation with a polarization ancilla")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Depolarizing probability.
    #[arg(long)]
    pub p: Option<f64>,
    /// Points of the phase grid over [0, pi).
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file or directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub detections: Option<usize>,
    #[arg(long)]
    pub final_fraction: Option<f64>,
    /// Any configuration key, as `key=value`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fisher information against phase.
    FisherCurve {
        #[arg(long, value_enum)]
        strategy: CurveStrategy,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Largest p keeping the Fisher information above 2 at every phase.
    Threshold {
        #[arg(long, value_parser = parse_strategy)]
        strategy: Strategy,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Best waveplate angles at one phase.
    OptimizeTheta {
        #[arg(long, default_value_t = 0.0)]
        phi: f64,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Adaptive estimation ensemble.
    Adaptive {
        /// Comma-separated true phases.
        #[arg(long)]
        phis: Option<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Convention and channel/measurement self-checks.
    Validate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Regenerates every curve, threshold and ensemble into one directory.
    ReproduceAll {
        /// Coarser search and a small ensemble.
        #[arg(long)]
        quick: bool,
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn parse_strategy(s: &str) -> std::result::Result<Strategy, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveStrategy {
    BareCoincidence,
    BareDouble,
    BareTotal,
    Reference,
    AncillaOptimized,
    ClosedForm,
}

/// One row of a Fisher curve; `theta` only for the optimized ancilla.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub phi: f64,
    pub fisher: f64,
    pub theta: Option<ParameterSet>,
}

pub fn fisher_curve(
    strategy: CurveStrategy,
    p: f64,
    grid: usize,
    conv: &ValidatedConvention,
    search: &SearchConfig,
) -> crate::Result<Vec<CurveRow>> {
    let phis = phase_grid(grid);
    let plain = |f: &dyn Fn(f64) -> f64| -> Vec<CurveRow> {
        phis.iter()
            .map(|&phi| CurveRow {
                phi,
                fisher: f(phi),
                theta: None,
            })
            .collect()
    };
    Ok(match strategy {
        CurveStrategy::ClosedForm => plain(&|phi| fisher_closed_form_bare(phi, p)),
        CurveStrategy::Reference => {
            let f = fisher_reference_phase(crate::decoherence::DepolarizingSpec::new(p)?.p());
            plain(&|_| f)
        }
        CurveStrategy::BareCoincidence | CurveStrategy::BareDouble | CurveStrategy::BareTotal => {
            let model = InterferometerModel::bare(conv, p)?;
            plain(&|phi| {
                let (terms, _) = fisher_contributions(&model, phi);
                match strategy {
                    CurveStrategy::BareCoincidence => terms[0],
                    CurveStrategy::BareDouble => terms[1],
                    _ => terms.iter().sum::<f64>().max(0.0),
                }
            })
        }
        CurveStrategy::AncillaOptimized => {
            let evaluator = AncillaEvaluator::new(conv, p)?;
            phis.iter()
                .map(|&phi| {
                    let best = optimize_theta(&evaluator, phi, search);
                    CurveRow {
                        phi,
                        fisher: best.f_opt,
                        theta: Some(best.theta_star),
                    }
                })
                .collect()
        }
    })
}

pub fn curve_csv(rows: &[CurveRow]) -> String {
    let with_theta = rows.iter().any(|r| r.theta.is_some());
    let header: &[&str] = if with_theta {
        &["phi", "fisher", "alpha1", "alpha2", "beta1", "beta2"]
    } else {
        &["phi", "fisher"]
    };
    csv(
        header,
        rows.iter().map(|r| {
            let mut row = vec![num(r.phi), num(r.fisher)];
            if let Some(t) = r.theta {
                row.extend(t.as_array().map(num));
            }
            row
        }),
    )
}

pub fn ensemble_csv(stats: &[EnsembleStats]) -> String {
    csv(
        &["phi_true", "mean", "variance", "sem", "trials", "detections"],
        stats.iter().map(|s| {
            vec![
                num(s.phi_true),
                num(s.mean_estimate),
                num(s.variance),
                num(s.standard_error_of_mean),
                s.trial_count.to_string(),
                s.detections.to_string(),
            ]
        }),
    )
}

pub fn trials_csv(stats: &[EnsembleStats]) -> String {
    csv(
        &["phi_index", "phi_true", "trial", "final_estimate"],
        stats.iter().enumerate().flat_map(|(i, s)| {
            s.final_estimates
                .iter()
                .enumerate()
                .map(move |(t, &x)| vec![i.to_string(), num(s.phi_true), t.to_string(), num(x)])
        }),
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdOutput {
    #[serde(flatten)]
    pub report: ThresholdReport,
    pub convention_fingerprint: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimumOutput {
    #[serde(flatten)]
    pub optimum: ThetaOptimum,
    pub convention_fingerprint: String,
}

/// One line of the `validate` summary.
#[derive(Debug, Clone, Serialize)]
pub struct CheckLine {
    pub suite: String,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Convention checks followed by the channel, measurement and derivative checks.
pub fn validation_checks(cfg: &RunConfig) -> CliResult<(Vec<CheckLine>, String)> {
    let conv = cfg.convention.build()?;
    let report = conv.validate();
    let mut lines: Vec<CheckLine> = report
        .checks
        .iter()
        .map(|c| CheckLine {
            suite: "validate_convention".into(),
            name: c.name.clone(),
            passed: c.passed,
            detail: format!("max deviation {:.3e} at phi = {:.6}", c.max_deviation, c.worst_phi),
        })
        .collect();
    let fingerprint = report.fingerprint.clone();
    let Ok(conv) = conv.into_validated() else {
        return Ok((lines, fingerprint));
    };

    let mut worst = 0.0f64;
    let mut ok = true;
    for k in 0..9 {
        match depolarizing_kraus(k as f64 / 8.0) {
            Ok(ch) => worst = worst.max(ch.completeness_defect()),
            Err(_) => ok = false,
        }
    }
    lines.push(CheckLine {
        suite: "properties".into(),
        name: "kraus-completeness".into(),
        passed: ok && worst <= 1e-12,
        detail: format!("max defect {worst:.3e} over 9 values of p"),
    });

    let betas = phase_grid(6);
    let povm_failures = betas
        .iter()
        .flat_map(|&b1| betas.iter().map(move |&b2| (b1, b2)))
        .filter(|&(b1, b2)| try_analysis_povm(&conv, b1, b2).is_err())
        .count();
    lines.push(CheckLine {
        suite: "properties".into(),
        name: "povm-completeness".into(),
        passed: povm_failures == 0,
        detail: format!("{povm_failures} of {} analysis settings rejected", betas.len() * betas.len()),
    });

    let thetas = [
        ParameterSet::new(0.3, 1.1, 0.7, 2.2),
        ParameterSet::new(std::f64::consts::FRAC_PI_4, 0.0, 0.2, 0.9),
    ];
    let mut norm_dev = 0.0f64;
    let mut deriv_dev = 0.0f64;
    let mut deriv_ok = true;
    for &p in &[0.0, 0.05, 0.3] {
        let mut models: Vec<Box<dyn ProbabilityModel>> = vec![Box::new(InterferometerModel::bare(&conv, p)?)];
        for t in &thetas {
            models.push(Box::new(InterferometerModel::ancilla(&conv, p, t)?));
        }
        for model in &models {
            for &phi in &[0.0, 0.4, 1.3, 2.9] {
                let total: f64 = model.probabilities(phi).iter().sum();
                norm_dev = norm_dev.max((total - 1.0).abs());
                match check_derivatives(model.as_ref(), phi) {
                    Ok(d) => deriv_dev = deriv_dev.max(d),
                    Err(_) => deriv_ok = false,
                }
            }
        }
    }
    lines.push(CheckLine {
        suite: "properties".into(),
        name: "probability-normalization".into(),
        passed: norm_dev <= 1e-10,
        detail: format!("max |sum P - 1| = {norm_dev:.3e}"),
    });
    lines.push(CheckLine {
        suite: "properties".into(),
        name: "analytic-derivatives".into(),
        passed: deriv_ok,
        detail: format!("max |dP - finite difference| = {deriv_dev:.3e}"),
    });
    Ok((lines, fingerprint))
}

struct Context {
    argv: Vec<String>,
    command: String,
    cfg: RunConfig,
    start: Instant,
}

impl Context {
    fn convention(&self) -> CliResult<ValidatedConvention> {
        self.cfg.convention.validated().map_err(|e| CliError::Failure(e.to_string()))
    }

    fn write_manifest(&self, out: &Path, is_dir: bool, outputs: Vec<PathBuf>, fingerprint: &str) -> CliResult<()> {
        let manifest = RunManifest {
            command_line: self.argv.clone(),
            command: self.command.clone(),
            config: self.cfg.to_map(),
            convention_fingerprint: fingerprint.to_string(),
            seed: self.cfg.adaptive.seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            duration_seconds: self.start.elapsed().as_secs_f64(),
            outputs,
        };
        write_atomic(&manifest_path(out, is_dir), json(&manifest).as_bytes())?;
        Ok(())
    }

    /// Writes one data file plus its manifest, or prints to stdout without `--out`.
    fn emit_file(&self, out: Option<&Path>, text: &str, fingerprint: &str) -> CliResult<()> {
        match out {
            Some(path) => {
                write_atomic(path, text.as_bytes())?;
                self.write_manifest(path, false, vec![path.to_path_buf()], fingerprint)
            }
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

fn load_config(common: &CommonArgs) -> CliResult<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(p) = common.p {
        cfg.set("p", &format!("{p:?}"))?;
    }
    if let Some(g) = common.grid {
        cfg.grid = Some(g);
    }
    if let Some(s) = common.seed {
        cfg.adaptive.seed = s;
    }
    if let Some(t) = common.trials {
        cfg.adaptive.trials = t;
    }
    if let Some(n) = common.detections {
        cfg.adaptive.detections = n;
    }
    if let Some(f) = common.final_fraction {
        cfg.adaptive.final_fraction = f;
    }
    for kv in &common.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn require_p(cfg: &RunConfig) -> CliResult<f64> {
    cfg.p.ok_or_else(|| CliError::Usage("missing --p".into()))
}

fn threshold_phases(strategy: Strategy, cfg: &RunConfig) -> Vec<f64> {
    match strategy {
        Strategy::Reference => Vec::new(),
        Strategy::Bare => phase_grid(cfg.grid.unwrap_or(DEFAULT_CURVE_GRID)),
        Strategy::Ancilla => phase_grid(cfg.grid.unwrap_or(cfg.search.threshold_phi_points)),
    }
}

fn cmd_fisher_curve(ctx: &Context, strategy: CurveStrategy, out: Option<&Path>) -> CliResult<i32> {
    let p = require_p(&ctx.cfg)?;
    let conv = ctx.convention()?;
    let rows = fisher_curve(strategy, p, ctx.cfg.grid.unwrap_or(DEFAULT_CURVE_GRID), &conv, &ctx.cfg.search)?;
    ctx.emit_file(out, &curve_csv(&rows), &conv.fingerprint())?;
    Ok(0)
}

fn cmd_threshold(ctx: &Context, strategy: Strategy, out: Option<&Path>) -> CliResult<i32> {
    let conv = ctx.convention()?;
    let phis = threshold_phases(strategy, &ctx.cfg);
    let report = supersensitivity_threshold(strategy, &phis, &conv, &ctx.cfg.search)?;
    let text = json(&ThresholdOutput {
        report,
        convention_fingerprint: conv.fingerprint(),
    });
    ctx.emit_file(out, &text, &conv.fingerprint())?;
    Ok(0)
}

fn cmd_optimize_theta(ctx: &Context, phi: f64, out: Option<&Path>) -> CliResult<i32> {
    let p = require_p(&ctx.cfg)?;
    let conv = ctx.convention()?;
    let evaluator = AncillaEvaluator::new(&conv, p)?;
    let optimum = optimize_theta(&evaluator, phi, &ctx.cfg.search);
    let text = json(&OptimumOutput {
        optimum,
        convention_fingerprint: conv.fingerprint(),
    });
    ctx.emit_file(out, &text, &conv.fingerprint())?;
    Ok(0)
}

/// Runs the ensemble and writes `ensemble.csv`, `trials.csv` and `manifest.json` into `dir`.
fn run_adaptive(ctx: &Context, dir: &Path) -> CliResult<Vec<EnsembleStats>> {
    let conv = ctx.convention()?;
    let cfg = &ctx.cfg;
    cfg.adaptive.validate()?;
    if cfg.phis.is_empty() {
        return Err(CliError::Usage("no true phases given".into()));
    }
    let table = Arc::new(ThetaTable::build(&conv, cfg.adaptive.p, &cfg.search)?);
    let estimator = AdaptiveEstimator::new(&conv, cfg.adaptive.clone(), table)?;
    let stats = estimator.ensemble_statistics(&cfg.phis);

    output::ensure_dir(dir)?;
    let mut outputs = vec![dir.join("ensemble.csv")];
    write_atomic(&outputs[0], ensemble_csv(&stats).as_bytes())?;
    if cfg.write_trials {
        outputs.push(dir.join("trials.csv"));
        write_atomic(&outputs[1], trials_csv(&stats).as_bytes())?;
    }
    ctx.write_manifest(dir, true, outputs, &conv.fingerprint())?;
    Ok(stats)
}

fn cmd_adaptive(ctx: &Context, out: Option<&Path>) -> CliResult<i32> {
    let dir = out.ok_or_else(|| CliError::Usage("adaptive needs --out <dir>".into()))?;
    let stats = run_adaptive(ctx, dir)?;
    let classical = 1.0 / (2.0 * ctx.cfg.adaptive.detections as f64);
    println!("{:>10} {:>12} {:>12} {:>12} {:>12}", "phi", "mean", "variance", "sem", "1/(2N)");
    for s in &stats {
        println!(
            "{:>10.6} {:>12.6} {:>12.4e} {:>12.4e} {:>12.4e}",
            s.phi_true, s.mean_estimate, s.variance, s.standard_error_of_mean, classical
        );
    }
    Ok(0)
}

fn cmd_validate(ctx: &Context) -> CliResult<i32> {
    let (lines, fingerprint) = validation_checks(&ctx.cfg)?;
    println!("convention fingerprint {fingerprint}");
    for l in &lines {
        println!(
            "{:<20} {:<26} {}  {}",
            l.suite,
            l.name,
            if l.passed { "PASS" } else { "FAIL" },
            l.detail
        );
    }
    if let Some(first) = lines.iter().find(|l| !l.passed) {
        eprintln!("first failing check: {} ({})", first.suite, first.name);
        return Ok(1);
    }
    Ok(0)
}

fn cmd_reproduce_all(ctx: &mut Context, quick: bool, out: Option<&Path>) -> CliResult<i32> {
    let dir = out
        .ok_or_else(|| CliError::Usage("reproduce-all needs --out <dir>".into()))?
        .to_path_buf();
    if quick {
        ctx.cfg.search = SearchConfig::quick();
        ctx.cfg.adaptive.trials = ctx.cfg.adaptive.trials.min(20);
    }
    output::ensure_dir(&dir)?;
    let conv = ctx.convention()?;
    let fp = conv.fingerprint();
    let grid = ctx.cfg.grid.unwrap_or(if quick { 64 } else { DEFAULT_CURVE_GRID });
    let curves = [
        ("fisher_closed_form_p0.csv", CurveStrategy::ClosedForm, 0.0),
        ("fisher_bare_coincidence_p0.005.csv", CurveStrategy::BareCoincidence, 0.005),
        ("fisher_bare_double_p0.005.csv", CurveStrategy::BareDouble, 0.005),
        ("fisher_bare_total_p0.005.csv", CurveStrategy::BareTotal, 0.005),
        ("fisher_bare_total_p0.05.csv", CurveStrategy::BareTotal, 0.05),
        ("fisher_reference_p0.05.csv", CurveStrategy::Reference, 0.05),
        ("fisher_ancilla_optimized_p0.05.csv", CurveStrategy::AncillaOptimized, 0.05),
    ];
    for (name, strategy, p) in curves {
        let path = dir.join(name);
        let rows = fisher_curve(strategy, p, grid, &conv, &ctx.cfg.search)?;
        write_atomic(&path, curve_csv(&rows).as_bytes())?;
        ctx.write_manifest(&path, false, vec![path.clone()], &fp)?;
        println!("wrote {}", path.display());
    }
    for strategy in [Strategy::Reference, Strategy::Bare, Strategy::Ancilla] {
        let path = dir.join(format!("threshold_{strategy}.json"));
        let report = supersensitivity_threshold(strategy, &threshold_phases(strategy, &ctx.cfg), &conv, &ctx.cfg.search)?;
        println!("threshold {strategy}: p* = {:.5}", report.p_star);
        let text = json(&ThresholdOutput {
            report,
            convention_fingerprint: fp.clone(),
        });
        write_atomic(&path, text.as_bytes())?;
        ctx.write_manifest(&path, false, vec![path.clone()], &fp)?;
    }
    let adaptive_dir = dir.join("adaptive");
    run_adaptive(ctx, &adaptive_dir)?;
    println!("wrote {}", adaptive_dir.display());
    Ok(0)
}

fn configure_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .map_err(|_| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
        // A second initialization in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn dispatch(cli: Cli, argv: Vec<String>) -> CliResult<i32> {
    configure_threads()?;
    let (name, common) = match &cli.command {
        Command::FisherCurve { common, .. } => ("fisher-curve", common),
        Command::Threshold { common, .. } => ("threshold", common),
        Command::OptimizeTheta { common, .. } => ("optimize-theta", common),
        Command::Adaptive { common, .. } => ("adaptive", common),
        Command::Validate { common } => ("validate", common),
        Command::ReproduceAll { common, .. } => ("reproduce-all", common),
    };
    let mut cfg = load_config(common)?;
    if let Command::Adaptive { phis: Some(list), .. } = &cli.command {
        cfg.set("phis", list)?;
    }
    let out = common.out.clone();
    let mut ctx = Context {
        argv,
        command: name.to_string(),
        cfg,
        start: Instant::now(),
    };
    let out = out.as_deref();
    match cli.command {
        Command::FisherCurve { strategy, .. } => cmd_fisher_curve(&ctx, strategy, out),
        Command::Threshold { strategy, .. } => cmd_threshold(&ctx, strategy, out),
        Command::OptimizeTheta { phi, .. } => cmd_optimize_theta(&ctx, phi, out),
        Command::Adaptive { .. } => cmd_adaptive(&ctx, out),
        Command::Validate { .. } => cmd_validate(&ctx),
        Command::ReproduceAll { quick, .. } => cmd_reproduce_all(&mut ctx, quick, out),
    }
}

/// Parses `args` (including the program name) and runs the command; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let argv = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli, argv) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
