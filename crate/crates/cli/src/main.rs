//! `ccentropy` batch front-end: one subcommand per analysis, a single JSON
//! report on stdout, exit code 0 (success), 1 (goodness-of-fit rejection)
//! or 2 (error).

mod data;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use ccentropy::empirical::{self, rank_with_random_ties, BetaCopula};
use ccentropy::gof::{self, Calibration, GofReport, ParamMode, DEFAULT_SEED, DEFAULT_TIE_SEED};
use ccentropy::{measures, CopulaModel, Family, IntegrationConfig, MeasureKind};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use report::Report;

const THREADS_ENV: &str = "CCENTROPY_THREADS";
const DEFAULT_CANDIDATES: &str = "clayton,frank,gumbel_hougaard,joe,gaussian,product";

#[derive(Parser)]
#[command(name = "ccentropy", version, about = "Copula entropy measures and goodness-of-fit tests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// A measure of a parametric copula.
    Measure(MeasureArgs),
    /// CCKL divergence between two parametric copulas.
    Cckl(CcklArgs),
    /// A plug-in measure of the empirical beta copula of a CSV file.
    Empirical(EmpiricalArgs),
    /// Parametric bootstrap goodness-of-fit test.
    Gof(GofArgs),
    /// Null percentile of T_N by simulation.
    Calibrate(CalibrateArgs),
    /// Rejection rate of a null model under a true model.
    Power(PowerArgs),
    /// Rank candidate families by CCKL distance to the data.
    Select(SelectArgs),
    /// Write a synthetic CSV sampled from a copula.
    Synth(SynthArgs),
}

#[derive(Args, Clone)]
struct ModelArgs {
    #[arg(long, value_parser = parse_family)]
    family: Family,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Comma-separated parameters in the family's documented order.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    params: Vec<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    /// Closed form when one exists, cubature otherwise.
    Auto,
    ClosedForm,
    Cubature,
}

#[derive(Args)]
struct MeasureArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// cce, fcce:<r>, ccigf:<s>, rho or bk.
    #[arg(long, value_parser = parse_stat)]
    stat: MeasureKind,
    /// Absolute cubature tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_enum, default_value = "auto")]
    method: MethodArg,
}

#[derive(Args)]
struct CcklArgs {
    #[arg(long, value_parser = parse_family)]
    family_a: Family,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    params_a: Vec<f64>,
    #[arg(long, value_parser = parse_family)]
    family_b: Family,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    params_b: Vec<f64>,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_enum, default_value = "auto")]
    method: MethodArg,
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    data: PathBuf,
    /// Comma-separated column names; all columns when omitted.
    #[arg(long, value_delimiter = ',')]
    cols: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_TIE_SEED)]
    tie_seed: u64,
}

#[derive(Args)]
struct EmpiricalArgs {
    #[command(flatten)]
    data: DataArgs,
    /// cce, fcce:<r>, ccigf:<s>, rho or bk.
    #[arg(long, value_parser = parse_stat, default_value = "cce")]
    stat: MeasureKind,
    #[arg(long)]
    tol: Option<f64>,
    /// Also evaluate the statistic on the first 50, 100, 200, … rows.
    #[arg(long)]
    dump_curve: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ParamModeArg {
    Estimate,
    Known,
}

impl From<ParamModeArg> for ParamMode {
    fn from(m: ParamModeArg) -> Self {
        match m {
            ParamModeArg::Estimate => ParamMode::EstimateEachRep,
            ParamModeArg::Known => ParamMode::KnownParams,
        }
    }
}

#[derive(Args)]
struct TestArgs {
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args)]
struct GofArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_parser = parse_family)]
    family: Family,
    /// Null parameters; required with `--param-mode known`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    params: Vec<f64>,
    #[command(flatten)]
    test: TestArgs,
    #[arg(long, value_enum, default_value = "estimate")]
    param_mode: ParamModeArg,
    /// Include every bootstrap statistic in the report.
    #[arg(long)]
    keep_replicates: bool,
}

#[derive(Args)]
struct CalibrateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 10_000)]
    reps: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, value_enum, default_value = "known")]
    param_mode: ParamModeArg,
    #[arg(long)]
    keep_statistics: bool,
}

#[derive(Args)]
struct PowerArgs {
    #[arg(long, value_parser = parse_family)]
    null_family: Family,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    null_params: Vec<f64>,
    #[arg(long, value_parser = parse_family)]
    true_family: Family,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    true_params: Vec<f64>,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    test: TestArgs,
    #[arg(long, value_enum, default_value = "known")]
    param_mode: ParamModeArg,
}

#[derive(Args)]
struct SelectArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_delimiter = ',', value_parser = parse_family, default_value = DEFAULT_CANDIDATES)]
    families: Vec<Family>,
    #[command(flatten)]
    test: TestArgs,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Round values to this many decimals (creates ties).
    #[arg(long)]
    round: Option<i32>,
    /// Output path; CSV goes to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse().map_err(|e: ccentropy::Error| e.to_string())
}

fn parse_stat(s: &str) -> Result<MeasureKind, String> {
    s.parse().map_err(|e: ccentropy::Error| e.to_string())
}

fn model(family: Family, dim: usize, params: &[f64]) -> Result<CopulaModel> {
    Ok(CopulaModel::new(family, dim, params)?)
}

fn integration(k: usize, tol: Option<f64>) -> IntegrationConfig {
    let cfg = IntegrationConfig::for_dim(k);
    match tol {
        Some(t) => cfg.with_abs_tol(t),
        None => cfg,
    }
}

fn estimate_json(value: f64, error: f64, method: &str, evals: u64) -> Value {
    json!({ "value": value, "error": error, "method": method, "evals": evals })
}

fn evaluate(
    closed: Option<f64>,
    method: MethodArg,
    numeric: impl FnOnce() -> ccentropy::Result<measures::MeasureEstimate>,
) -> Result<Value> {
    match (method, closed) {
        (MethodArg::Auto | MethodArg::ClosedForm, Some(v)) => Ok(estimate_json(v, 0.0, "closed_form", 0)),
        (MethodArg::ClosedForm, None) => bail!("no closed form available for this model and statistic"),
        _ => {
            let e = numeric()?;
            Ok(serde_json::to_value(e)?)
        }
    }
}

fn tolerance_warning(est: &Value, tol: f64, r: &mut Report) {
    if let Some(err) = est["error"].as_f64() {
        if err > tol {
            r.warnings.push(format!(
                "error estimate {err:e} exceeds requested tolerance {tol:e} (evaluation budget reached)"
            ));
        }
    }
}

fn run_measure(a: &MeasureArgs, r: &mut Report) -> Result<()> {
    let m = model(a.model.family, a.model.dim, &a.model.params)?;
    let cfg = integration(m.dim(), a.tol);
    r.input("model", &m)?;
    r.input("stat", a.stat.to_string())?;
    r.input("abs_tol", cfg.abs_tol)?;
    r.input("qmc_seed", cfg.qmc_seed)?;
    let closed = measures::closed_form(&m, a.stat).ok();
    let est = evaluate(closed, a.method, || measures::measure(&m, a.stat, &cfg))?;
    tolerance_warning(&est, cfg.abs_tol, r);
    r.output("estimate", est)?;
    r.warnings.extend(report::measure_warnings(&m, a.stat));
    Ok(())
}

fn run_cckl(a: &CcklArgs, r: &mut Report) -> Result<()> {
    let ma = model(a.family_a, a.dim, &a.params_a)?;
    let mb = model(a.family_b, a.dim, &a.params_b)?;
    let cfg = integration(a.dim, a.tol);
    r.input("model_a", &ma)?;
    r.input("model_b", &mb)?;
    r.input("abs_tol", cfg.abs_tol)?;
    r.input("qmc_seed", cfg.qmc_seed)?;
    let closed = measures::closed_form_cckl(&ma, &mb).ok();
    let est = evaluate(closed, a.method, || measures::cckl(&ma, &mb, &cfg))?;
    tolerance_warning(&est, cfg.abs_tol, r);
    r.output("estimate", est)?;
    r.warnings.extend(report::cckl_warnings(&ma, &mb));
    Ok(())
}

fn load(d: &DataArgs, r: &mut Report) -> Result<data::Dataset> {
    let ds = data::load_csv(&d.data, &d.cols)?;
    r.input("data", d.data.display().to_string())?;
    r.input("columns", &ds.columns)?;
    r.input("n", ds.n())?;
    r.input("rows_dropped", ds.rows_dropped)?;
    r.input("tie_seed", d.tie_seed)?;
    Ok(ds)
}

fn empirical_stat(
    values: &[f64],
    k: usize,
    tie_seed: u64,
    stat: MeasureKind,
    cfg: &IntegrationConfig,
) -> Result<Value> {
    let rs = rank_with_random_ties(values, k, tie_seed)?;
    let mut v = serde_json::to_value(measures::measure(&BetaCopula::new(&rs), stat, cfg)?)?;
    if stat == MeasureKind::BK {
        v["closed_form"] = json!(empirical::beta_copula_mean(&rs));
    }
    v["ties_broken"] = json!(rs.ties_broken());
    Ok(v)
}

fn run_empirical(a: &EmpiricalArgs, r: &mut Report) -> Result<()> {
    let ds = load(&a.data, r)?;
    let k = ds.k();
    let cfg = match a.tol {
        Some(t) => empirical::default_empirical_config(k).with_abs_tol(t),
        None => empirical::default_empirical_config(k),
    };
    r.input("stat", a.stat.to_string())?;
    r.input("abs_tol", cfg.abs_tol)?;
    r.input("qmc_seed", cfg.qmc_seed)?;
    let est = empirical_stat(&ds.values, k, a.data.tie_seed, a.stat, &cfg)?;
    tolerance_warning(&est, cfg.abs_tol, r);
    r.output("estimate", est)?;
    if a.dump_curve {
        let mut sizes = Vec::new();
        let mut n = 50;
        while n < ds.n() {
            sizes.push(n);
            n *= 2;
        }
        sizes.push(ds.n());
        let curve = sizes
            .into_iter()
            .filter(|&n| n >= 2)
            .map(|n| {
                let v = empirical_stat(ds.head(n), k, a.data.tie_seed, a.stat, &cfg)?;
                Ok(json!({ "n": n, "value": v["value"], "error": v["error"] }))
            })
            .collect::<Result<Vec<_>>>()?;
        r.output("curve", curve)?;
    }
    Ok(())
}

fn gof_config(t: &TestArgs, tie_seed: u64, mode: ParamModeArg) -> gof::GofConfig {
    gof::GofConfig {
        reps: t.reps,
        alpha: t.alpha,
        seed: t.seed,
        tie_seed,
        param_mode: mode.into(),
        ..gof::GofConfig::default()
    }
}

fn gof_json(g: &GofReport, keep: bool) -> Result<Value> {
    let mut v = serde_json::to_value(g)?;
    if !keep {
        v.as_object_mut().expect("report is an object").remove("replicates");
    }
    Ok(v)
}

fn run_gof(a: &GofArgs, r: &mut Report) -> Result<bool> {
    let ds = load(&a.data, r)?;
    let cfg = gof_config(&a.test, a.data.tie_seed, a.param_mode);
    r.input("family", a.family)?;
    r.input("gof_config", cfg)?;
    let rs = rank_with_random_ties(&ds.values, ds.k(), cfg.tie_seed)?;
    let report = match cfg.param_mode {
        ParamMode::KnownParams => {
            if a.params.is_empty() && a.family.param_count(ds.k()) > 0 {
                bail!("--params is required with --param-mode known");
            }
            let m = model(a.family, ds.k(), &a.params)?;
            gof::bootstrap_test_known(&rs, &m, &cfg)?
        }
        ParamMode::EstimateEachRep => gof::bootstrap_test_ranked(&rs, a.family, &cfg)?,
    };
    if report.fitted.clamped {
        r.warnings.push("fitted parameter was clamped to the family's admissible range".into());
    }
    r.output("gof", gof_json(&report, a.keep_replicates)?)?;
    Ok(report.reject)
}

fn run_calibrate(a: &CalibrateArgs, r: &mut Report) -> Result<()> {
    let m = model(a.model.family, a.model.dim, &a.model.params)?;
    let cfg = gof::GofConfig {
        reps: a.reps,
        alpha: a.alpha,
        seed: a.seed,
        param_mode: a.param_mode.into(),
        ..gof::GofConfig::default()
    };
    r.input("model", &m)?;
    r.input("n", a.n)?;
    r.input("gof_config", cfg)?;
    let c: Calibration = gof::calibrate_percentile(&m, a.n, &cfg)?;
    r.output("percentile", c.percentile)?;
    r.output("percentile_index", gof::percentile_index(c.reps, c.alpha))?;
    if a.keep_statistics {
        r.output("statistics", &c.statistics)?;
    }
    Ok(())
}

fn run_power(a: &PowerArgs, r: &mut Report) -> Result<()> {
    let null = model(a.null_family, a.dim, &a.null_params)?;
    let truth = model(a.true_family, a.dim, &a.true_params)?;
    let cfg = gof_config(&a.test, DEFAULT_TIE_SEED, a.param_mode);
    r.input("null", &null)?;
    r.input("truth", &truth)?;
    r.input("n", a.n)?;
    r.input("gof_config", cfg)?;
    let p = gof::power_study(&null, &truth, a.n, &cfg)?;
    r.output("percentile", p.percentile)?;
    r.output("rejections", p.rejections)?;
    r.output("rejection_rate", p.rejection_rate)?;
    Ok(())
}

fn run_select(a: &SelectArgs, r: &mut Report) -> Result<()> {
    let ds = load(&a.data, r)?;
    let cfg = gof_config(&a.test, a.data.tie_seed, ParamModeArg::Estimate);
    let integ = match a.tol {
        Some(t) => empirical::default_empirical_config(ds.k()).with_abs_tol(t),
        None => empirical::default_empirical_config(ds.k()),
    };
    r.input("families", &a.families)?;
    r.input("gof_config", cfg)?;
    r.input("abs_tol", integ.abs_tol)?;
    r.input("qmc_seed", integ.qmc_seed)?;
    let entries = gof::select_copula(&ds.values, ds.k(), &a.families, &cfg, &integ)?;
    let ranked: Vec<Value> = entries
        .iter()
        .map(|e| {
            json!({
                "family": e.family,
                "params": e.fitted.as_ref().map(|f| f.model.params().to_vec()),
                "clamped": e.fitted.as_ref().map(|f| f.clamped),
                "cckl": e.cckl.map(|c| c.value),
                "cckl_error": e.cckl.map(|c| c.error),
                "observed_t": e.gof.as_ref().map(|g| g.observed_t),
                "percentile": e.gof.as_ref().map(|g| g.percentile),
                "p_value": e.gof.as_ref().map(|g| g.p_value),
                "failure": e.failure,
            })
        })
        .collect();
    r.output("recommended", entries.first().filter(|e| e.cckl.is_some()).map(|e| e.family))?;
    r.output("ranking", ranked)?;
    Ok(())
}

fn run_synth(a: &SynthArgs, r: &mut Report) -> Result<bool> {
    let m = model(a.model.family, a.model.dim, &a.model.params)?;
    let sample = m.sample(a.n, a.seed)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record((1..=m.dim()).map(|j| format!("x{j}")))?;
    for i in 0..sample.rows() {
        w.write_record(sample.row(i).iter().map(|&v| match a.round {
            Some(d) => {
                let s = 10f64.powi(d);
                ((v * s).round() / s).to_string()
            }
            None => v.to_string(),
        }))?;
    }
    let bytes = w.into_inner().context("flushing csv")?;
    match &a.out {
        Some(path) => {
            std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
            r.input("model", &m)?;
            r.input("n", a.n)?;
            r.input("seed", a.seed)?;
            r.output("path", path.display().to_string())?;
            Ok(true)
        }
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&bytes)?;
            Ok(false)
        }
    }
}

/// Runs a parsed command; returns whether a report should be printed and
/// the exit code.
fn dispatch(cli: &Cli, r: &mut Report) -> Result<(bool, u8)> {
    match &cli.command {
        Command::Measure(a) => run_measure(a, r).map(|_| (true, 0)),
        Command::Cckl(a) => run_cckl(a, r).map(|_| (true, 0)),
        Command::Empirical(a) => run_empirical(a, r).map(|_| (true, 0)),
        Command::Gof(a) => run_gof(a, r).map(|reject| (true, u8::from(reject))),
        Command::Calibrate(a) => run_calibrate(a, r).map(|_| (true, 0)),
        Command::Power(a) => run_power(a, r).map(|_| (true, 0)),
        Command::Select(a) => run_select(a, r).map(|_| (true, 0)),
        Command::Synth(a) => run_synth(a, r).map(|print| (print, 0)),
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Ok(v) = std::env::var(THREADS_ENV) {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = ccentropy::exec::configure_threads(n) {
                    eprintln!("warning: {THREADS_ENV}: {e}");
                }
            }
            _ => {
                eprintln!("error: {THREADS_ENV} must be a positive integer, got '{v}'");
                return ExitCode::from(2);
            }
        }
    }
    let mut report = Report::new(&args[1..]);
    match dispatch(&cli, &mut report) {
        Ok((print, code)) => {
            if print {
                println!("{}", report.to_json());
            }
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
