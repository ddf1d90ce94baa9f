//! Command-line surface: ingest a price or return file, compute moment term
//! structures and limits, and run the density goodness-of-fit protocol.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on domain errors.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::density::{approximate_distribution, Method};
use crate::error::{Error, Result};
use crate::estimate::{rolling_fit, FitOptions, InnovationKind, ModelKind};
use crate::gof::{self, NullPipeline, StatKind};
use crate::innovation::Innovation;
use crate::limits::{limit_aggregated_returns, limit_forward_returns, limit_variance_moments, ExtendedMoment};
use crate::model::{DerivedConstants, ForecastOrigin, GjrParams};
use crate::moments_aggregated::{
    aggregated_return_moments, aggregated_variance_mean_variance, aggregated_variance_moments, AggregationCaps,
};
use crate::moments_forward::{forward_return_moments, forward_variance_mean_variance, forward_variance_moments};
use crate::simulate::{simulate, SimulationSpec};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "GJRMOMENTS_OUT";
/// Exit code for malformed command lines and configuration.
pub const EXIT_USAGE: i32 = 1;
/// Exit code for failures of the computation itself.
pub const EXIT_DOMAIN: i32 = 2;

/// Formats a number with 12 significant digits in scientific notation.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.11e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), fmt_num)
}

// ---------------------------------------------------------------- ingest

/// Reads a CSV with a header and either a `return` column or a `price`
/// column (log-differenced). Other columns, such as `date`, are ignored.
///
/// ```
/// let r = gjr_moments::cli::parse_returns_csv("date,price\n1,100\n2,101\n").unwrap();
/// assert!((r[0] - (101.0_f64 / 100.0).ln()).abs() < 1e-15);
/// ```
pub fn parse_returns_csv(text: &str) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| Error::Parse { line: 1, message: e.to_string() })?.clone();
    let find = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let (col, is_price) = match (find("return"), find("price")) {
        (Some(c), _) => (c, false),
        (None, Some(c)) => (c, true),
        (None, None) => {
            return Err(Error::Parse { line: 1, message: "header needs a `return` or `price` column".into() })
        }
    };
    let mut values = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let field = rec.get(col).ok_or_else(|| Error::Parse { line, message: "missing field".into() })?;
        let v: f64 = field.parse().map_err(|_| Error::Parse { line, message: format!("not a number: {field:?}") })?;
        if !v.is_finite() || (is_price && v <= 0.0) {
            return Err(Error::Parse { line, message: format!("invalid value {field:?}") });
        }
        values.push(v);
    }
    let out: Vec<f64> = if is_price { values.windows(2).map(|w| (w[1] / w[0]).ln()).collect() } else { values };
    if out.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(out)
}

/// Reads a return series from a file; see [`parse_returns_csv`].
pub fn cmd_ingest(path: &Path) -> Result<Vec<f64>> {
    parse_returns_csv(&fs::read_to_string(path)?)
}

// ---------------------------------------------------------------- config

/// Fully resolved settings of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub model: ModelKind,
    pub innovation: InnovationKind,
    /// Explicit parameters `(μ, ω, α, λ, β)`; estimated from `input` if absent.
    pub params: Option<GjrParams>,
    /// Student-t degrees of freedom for explicit parameters.
    pub nu: Option<f64>,
    /// One-step-ahead variance at the origin; defaults to the unconditional
    /// variance for explicit parameters.
    pub h1: Option<f64>,
    /// Longest forward horizon and aggregation length reported.
    pub horizon: usize,
    /// Cap on the aggregation length of the quadruple variance sums.
    pub max_n: usize,
    pub n_paths: usize,
    pub seed: u64,
    pub method: Method,
    pub out_dir: PathBuf,
    /// Forecast dates in the goodness-of-fit protocol.
    pub dates: usize,
    /// Estimation window of the goodness-of-fit protocol.
    pub window: usize,
    /// Forward horizon tested in the goodness-of-fit protocol.
    pub gof_horizon: usize,
    /// Trials for simulated critical values; 0 disables them.
    pub cv_trials: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: None,
            model: ModelKind::Gjr,
            innovation: InnovationKind::Normal,
            params: None,
            nu: None,
            h1: None,
            horizon: 22,
            max_n: AggregationCaps::default().variance_higher,
            n_paths: 10_000,
            seed: 1,
            method: Method::Auto,
            out_dir: PathBuf::from("."),
            dates: 50,
            window: 2520,
            gof_horizon: 5,
            cv_trials: 1000,
        }
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse { line: i + 1, message: format!("expected key = value, got {raw:?}") })?;
        map.insert(k.trim().replace('-', "_"), v.trim().to_string());
    }
    Ok(map)
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::InvalidParams(format!("invalid value {v:?} for {key}")))
}

fn parse_params(v: &str) -> Result<GjrParams> {
    let xs: Vec<f64> = v.split(',').map(|s| parse_value("params", s.trim())).collect::<Result<_>>()?;
    match xs.as_slice() {
        [mu, omega, alpha, lambda, beta] => Ok(GjrParams::new(*mu, *omega, *alpha, *lambda, *beta)),
        _ => Err(Error::InvalidParams(format!("params needs mu,omega,alpha,lambda,beta; got {v:?}"))),
    }
}

impl RunConfig {
    /// Applies one setting.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "input" => self.input = Some(PathBuf::from(v)),
            "model" => self.model = v.parse()?,
            "innovation" => self.innovation = v.parse()?,
            "params" => self.params = Some(parse_params(v)?),
            "nu" => self.nu = Some(parse_value(key, v)?),
            "h1" => self.h1 = Some(parse_value(key, v)?),
            "horizon" => self.horizon = parse_value(key, v)?,
            "max_n" => self.max_n = parse_value(key, v)?,
            "paths" => self.n_paths = parse_value(key, v)?,
            "seed" => self.seed = parse_value(key, v)?,
            "method" => self.method = v.parse()?,
            "out" => self.out_dir = PathBuf::from(v),
            "dates" => self.dates = parse_value(key, v)?,
            "window" => self.window = parse_value(key, v)?,
            "gof_horizon" => self.gof_horizon = parse_value(key, v)?,
            "cv_trials" => self.cv_trials = parse_value(key, v)?,
            other => return Err(Error::InvalidParams(format!("unknown configuration key {other:?}"))),
        }
        Ok(())
    }

    fn check(&self) -> Result<()> {
        if self.horizon == 0 || self.gof_horizon == 0 {
            return Err(Error::InvalidParams("horizons must be at least 1".into()));
        }
        if let Some(p) = &self.input {
            if !p.exists() {
                return Err(Error::Io(format!("input file {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    fn innovation_for(&self, nu: Option<f64>) -> Result<Innovation> {
        match self.innovation {
            InnovationKind::Normal => Ok(Innovation::normal()),
            InnovationKind::StudentT => Innovation::student_t(
                nu.ok_or_else(|| Error::InvalidParams("student_t needs nu".into()))?,
            ),
        }
    }
}

// ---------------------------------------------------------------- moments

/// Tables produced by [`cmd_moments`], as CSV text.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentsReport {
    pub forward_csv: String,
    pub aggregated_csv: String,
    pub limits_csv: String,
}

/// Model, innovation and forecast origin used by a run.
fn resolve_model(cfg: &RunConfig) -> Result<DerivedConstants> {
    let (params, nu, h1) = match (&cfg.params, &cfg.input) {
        (Some(p), _) => (*p, cfg.nu, cfg.h1),
        (None, Some(path)) => {
            let r = cmd_ingest(path)?;
            let opts = FitOptions::new(cfg.model, cfg.innovation);
            let f = rolling_fit(&r, r.len(), 1, opts)?.pop().expect("one window")?;
            (f.params, f.nu, Some(cfg.h1.unwrap_or(f.h_next)))
        }
        (None, None) => return Err(Error::InvalidParams("either params or input is required".into())),
    };
    let inn = cfg.innovation_for(nu)?;
    let f0 = inn.cdf_at_zero()?;
    params.validate(f0)?;
    let h1 = h1.unwrap_or(params.omega / (1.0 - params.persistence(f0)));
    DerivedConstants::new(&params, &inn, ForecastOrigin::new(h1)?)
}

fn limit_row(name: &str, m: Result<ExtendedMoment>) -> String {
    match m {
        Ok(m) => format!("{name},{},{}\n", m.value, m.region.label()),
        Err(e) => format!("{name},NA,{}\n", e.to_string().replace(',', ";")),
    }
}

/// Computes forward and aggregated term structures up to `cfg.horizon` and
/// the infinite-horizon limits.
pub fn cmd_moments(cfg: &RunConfig) -> Result<MomentsReport> {
    cfg.check()?;
    let dc = resolve_model(cfg)?;
    let caps = AggregationCaps { variance_higher: cfg.max_n, ..AggregationCaps::default() };

    let mut fwd = String::from(
        "s,return_mean,return_variance,return_skewness,return_kurtosis,variance_mean,variance_variance,variance_skewness,variance_kurtosis\n",
    );
    for s in 1..=cfg.horizon {
        let r = forward_return_moments(&dc, s).ok();
        let (vm, vv) = forward_variance_mean_variance(&dc, s)?;
        let v = forward_variance_moments(&dc, s).ok();
        fwd.push_str(&format!(
            "{s},{},{},{},{},{},{},{},{}\n",
            fmt_opt(r.map(|m| m.mean)),
            fmt_opt(r.map(|m| m.variance)),
            fmt_opt(r.map(|m| m.skewness)),
            fmt_opt(r.map(|m| m.kurtosis)),
            fmt_num(vm),
            fmt_num(vv),
            fmt_opt(v.map(|m| m.skewness)),
            fmt_opt(v.map(|m| m.kurtosis)),
        ));
    }

    let mut agg = String::from(
        "n,return_mean,return_variance,return_skewness,return_kurtosis,variance_mean,variance_variance,variance_skewness,variance_kurtosis\n",
    );
    for n in 1..=cfg.horizon {
        let r = aggregated_return_moments(&dc, n, caps).ok();
        let (vm, vv) = aggregated_variance_mean_variance(&dc, n)?;
        let v = if n >= 2 { aggregated_variance_moments(&dc, n, caps).ok() } else { None };
        agg.push_str(&format!(
            "{n},{},{},{},{},{},{},{},{}\n",
            fmt_opt(r.map(|m| m.mean)),
            fmt_opt(r.map(|m| m.variance)),
            fmt_opt(r.map(|m| m.skewness)),
            fmt_opt(r.map(|m| m.kurtosis)),
            fmt_num(vm),
            fmt_num(vv),
            fmt_opt(v.map(|m| m.skewness)),
            fmt_opt(v.map(|m| m.kurtosis)),
        ));
    }

    let mut lim = String::from("quantity,value,region\n");
    let f = limit_forward_returns(&dc);
    let a = limit_aggregated_returns(&dc);
    let v = limit_variance_moments(&dc);
    let rows: [(&str, Result<ExtendedMoment>); 10] = [
        ("forward_return_variance", f.clone().map(|l| l.variance)),
        ("forward_return_skewness", f.clone().map(|l| l.skewness)),
        ("forward_return_kurtosis", f.map(|l| l.kurtosis)),
        ("aggregated_return_variance_per_period", a.clone().map(|l| l.variance_per_period)),
        ("aggregated_return_skewness", a.clone().map(|l| l.skewness)),
        ("aggregated_return_kurtosis", a.map(|l| l.kurtosis)),
        ("forward_variance_variance", v.clone().map(|l| l.fwd_variance)),
        ("aggregated_variance_variance_per_period", v.clone().map(|l| l.agg_variance_per_period)),
        ("forward_variance_skewness", v.clone().map(|l| l.fwd_skewness)),
        ("aggregated_variance_skewness", v.map(|l| l.agg_skewness)),
    ];
    for (name, m) in rows {
        lim.push_str(&limit_row(name, m));
    }

    Ok(MomentsReport { forward_csv: fwd, aggregated_csv: agg, limits_csv: lim })
}

// ---------------------------------------------------------------- gof

/// Settings of the rolling density-forecast evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GofProtocol {
    pub fit: FitOptions,
    pub window: usize,
    pub dates: usize,
    /// Forward horizon `s` of the tested return `r_{t+s}`.
    pub horizon: usize,
    pub n_paths: usize,
    pub seed: u64,
    pub method: Method,
    /// Trials for simulated critical values; 0 disables them.
    pub cv_trials: usize,
}

/// Outcome at one forecast date.
#[derive(Debug, Clone, PartialEq)]
pub struct GofRecord {
    /// Index of the last observation in the estimation window.
    pub date: usize,
    pub params: GjrParams,
    pub nu: Option<f64>,
    pub h_next: f64,
    pub ks_distance: f64,
    pub ks: f64,
    pub cvm: f64,
    pub ad: f64,
    /// Johnson SU was infeasible and Edgeworth was used instead.
    pub fell_back: bool,
    /// The approximate cdf is monotone.
    pub monotone: bool,
}

/// Mean, standard deviation and rejection rates of one statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatSummary {
    pub mean: f64,
    pub std_dev: f64,
    pub rejection_rate_asymptotic: f64,
    pub simulated_cv: Option<f64>,
    pub rejection_rate_simulated: Option<f64>,
}

/// Records and summaries of a protocol run.
#[derive(Debug, Clone, PartialEq)]
pub struct GofReport {
    pub records: Vec<GofRecord>,
    /// Dates where estimation or approximation failed, with the reason.
    pub failures: Vec<(usize, String)>,
    /// Summary of the KS distance `D` (asymptotic rejections use `√T·D`).
    pub ks: StatSummary,
    pub cvm: StatSummary,
    pub ad: StatSummary,
}

fn summarize(values: &[f64], asymptotic_cv: f64, scale: f64, simulated_cv: Option<f64>) -> StatSummary {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let rate = |cv: f64| values.iter().filter(|&&v| v * scale > cv).count() as f64 / n;
    StatSummary {
        mean,
        std_dev: var.sqrt(),
        rejection_rate_asymptotic: rate(asymptotic_cv),
        simulated_cv,
        rejection_rate_simulated: simulated_cv.map(rate),
    }
}

/// Rolls an estimation window over the last `dates` positions of the series,
/// builds the approximate distribution of `r_{t+s}` from the analytic
/// moments of each fitted model, and tests it against paths simulated from
/// the same fitted model.
pub fn gof_protocol(returns: &[f64], p: &GofProtocol) -> Result<GofReport> {
    if p.dates == 0 {
        return Err(Error::InvalidParams("dates must be at least 1".into()));
    }
    let needed = p.window + p.dates - 1;
    if returns.len() < needed {
        return Err(Error::TooFewObservations { needed, got: returns.len() });
    }
    let start = returns.len() - needed;
    let fits = rolling_fit(&returns[start..], p.window, 1, p.fit)?;
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (k, fit) in fits.into_iter().enumerate() {
        let date = start + k + p.window - 1;
        let one = || -> Result<GofRecord> {
            let f = fit?;
            let inn = match f.nu {
                Some(nu) => Innovation::student_t(nu)?,
                None => Innovation::normal(),
            };
            let dc = DerivedConstants::new(&f.params, &inn, ForecastOrigin::new(f.h_next)?)?;
            let m = forward_return_moments(&dc, p.horizon)?;
            let approx = approximate_distribution(&m, p.method)?;
            let spec = SimulationSpec {
                params: f.params,
                innovation: inn,
                origin: ForecastOrigin::new(f.h_next)?,
                horizon: p.horizon,
                n_paths: p.n_paths,
                seed: p.seed.wrapping_add(date as u64),
            };
            let mut x = simulate(&spec)?.forward_returns.swap_remove(p.horizon - 1);
            x.sort_by(f64::total_cmp);
            let cdf = |v: f64| approx.dist.cdf(v);
            let ks = gof::ks_statistic(cdf, &x)?;
            Ok(GofRecord {
                date,
                params: f.params,
                nu: f.nu,
                h_next: f.h_next,
                ks_distance: ks.distance,
                ks: ks.statistic,
                cvm: gof::cvm_statistic(cdf, &x)?.statistic,
                ad: gof::ad_statistic_clamped(cdf, &x)?.statistic,
                fell_back: approx.fallback_reason.is_some(),
                monotone: approx.dist.is_monotone(),
            })
        };
        match one() {
            Ok(r) => records.push(r),
            Err(e) => failures.push((date, e.to_string())),
        }
    }
    if records.is_empty() {
        return Err(Error::InvalidParams(format!("every forecast date failed: {failures:?}")));
    }
    let cv = |kind: StatKind| -> Result<Option<f64>> {
        if p.cv_trials == 0 {
            return Ok(None);
        }
        gof::simulate_critical_values(NullPipeline::FullySpecified, kind, p.cv_trials, p.n_paths, 0.05, p.seed).map(Some)
    };
    let sqrt_t = (p.n_paths as f64).sqrt();
    let ks_cv = cv(StatKind::Ks)?.map(|c| c / sqrt_t);
    let d: Vec<f64> = records.iter().map(|r| r.ks_distance).collect();
    let cvm: Vec<f64> = records.iter().map(|r| r.cvm).collect();
    let ad: Vec<f64> = records.iter().map(|r| r.ad).collect();
    Ok(GofReport {
        ks: summarize(&d, gof::KS_CRITICAL_5PCT, sqrt_t, ks_cv.map(|c| c * sqrt_t)),
        cvm: summarize(&cvm, gof::CVM_CRITICAL_5PCT, 1.0, cv(StatKind::Cvm)?),
        ad: summarize(&ad, gof::AD_CRITICAL_5PCT, 1.0, cv(StatKind::Ad)?),
        records,
        failures,
    })
}

impl GofReport {
    /// One line per forecast date.
    pub fn records_csv(&self) -> String {
        let mut s = String::from("date,mu,omega,alpha,lambda,beta,nu,h_next,ks_distance,ks,cvm,ad,fell_back,monotone\n");
        for r in &self.records {
            let p = &r.params;
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.date,
                fmt_num(p.mu),
                fmt_num(p.omega),
                fmt_num(p.alpha),
                fmt_num(p.lambda),
                fmt_num(p.beta),
                fmt_opt(r.nu),
                fmt_num(r.h_next),
                fmt_num(r.ks_distance),
                fmt_num(r.ks),
                fmt_num(r.cvm),
                fmt_num(r.ad),
                r.fell_back,
                r.monotone
            ));
        }
        s
    }

    /// Summary row per statistic.
    pub fn summary_csv(&self, method: Method) -> String {
        let mut s = String::from(
            "method,statistic,mean,std_dev,rejections_asymptotic,simulated_cv,rejections_simulated,dates,failures\n",
        );
        let label = match method {
            Method::Edgeworth => "edgeworth",
            Method::JohnsonSu => "johnson_su",
            Method::Auto => "auto",
        };
        for (name, st) in [("KS_distance", &self.ks), ("CVM", &self.cvm), ("AD", &self.ad)] {
            s.push_str(&format!(
                "{label},{name},{},{},{},{},{},{},{}\n",
                fmt_num(st.mean),
                fmt_num(st.std_dev),
                fmt_num(st.rejection_rate_asymptotic),
                fmt_opt(st.simulated_cv),
                fmt_opt(st.rejection_rate_simulated),
                self.records.len(),
                self.failures.len()
            ));
        }
        s
    }
}

/// Runs the protocol on the configured input file.
pub fn cmd_gof(cfg: &RunConfig) -> Result<GofReport> {
    cfg.check()?;
    let path = cfg.input.as_ref().ok_or_else(|| Error::InvalidParams("gof needs an input file".into()))?;
    let r = cmd_ingest(path)?;
    gof_protocol(
        &r,
        &GofProtocol {
            fit: FitOptions::new(cfg.model, cfg.innovation),
            window: cfg.window,
            dates: cfg.dates,
            horizon: cfg.gof_horizon,
            n_paths: cfg.n_paths,
            seed: cfg.seed,
            method: cfg.method,
            cv_trials: cfg.cv_trials,
        },
    )
}

// ---------------------------------------------------------------- clap

#[derive(Debug, Parser)]
#[command(name = "gjr-moments", version, about = "Conditional moments, limits and density forecasts for GJR-GARCH(1,1)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Read a CSV with a `return` or `price` column and print the returns.
    Ingest {
        /// CSV file with a header row.
        input: PathBuf,
    },
    /// Write forward.csv, aggregated.csv and limits.csv to the output directory.
    Moments(RunArgs),
    /// Rolling density-forecast evaluation; writes gof_records.csv and gof_summary.csv.
    Gof(RunArgs),
}

/// Every flag can also be given in the file passed to `--config` as
/// `key = value` (keys as the long flag names, `-` or `_`). Flags win.
#[derive(Debug, Args)]
struct RunArgs {
    /// key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Return or price CSV to estimate the model from.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Variance equation: garch11 or gjr.
    #[arg(long)]
    model: Option<String>,
    /// Innovation family: normal or student_t.
    #[arg(long)]
    innovation: Option<String>,
    /// Explicit parameters mu,omega,alpha,lambda,beta (skips estimation).
    #[arg(long)]
    params: Option<String>,
    /// Student-t degrees of freedom for explicit parameters.
    #[arg(long)]
    nu: Option<String>,
    /// One-step-ahead variance at the origin (default: unconditional variance).
    #[arg(long)]
    h1: Option<String>,
    /// Longest horizon of the term-structure tables.
    #[arg(long)]
    horizon: Option<String>,
    /// Cap on the aggregation length for variance skewness and kurtosis.
    #[arg(long = "max-n")]
    max_n: Option<String>,
    /// Simulated paths per forecast date.
    #[arg(long)]
    paths: Option<String>,
    /// Random seed.
    #[arg(long)]
    seed: Option<String>,
    /// Approximation: edgeworth, johnson_su or auto.
    #[arg(long)]
    method: Option<String>,
    /// Output directory (default: $GJRMOMENTS_OUT or the current directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of forecast dates.
    #[arg(long)]
    dates: Option<String>,
    /// Estimation window length.
    #[arg(long)]
    window: Option<String>,
    /// Forward horizon tested by gof.
    #[arg(long = "gof-horizon")]
    gof_horizon: Option<String>,
    /// Trials for simulated critical values (0 disables).
    #[arg(long = "cv-trials")]
    cv_trials: Option<String>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Ok(dir) = std::env::var(OUT_ENV) {
            cfg.out_dir = PathBuf::from(dir);
        }
        if let Some(path) = &self.config {
            for (k, v) in parse_config_text(&fs::read_to_string(path)?)? {
                cfg.set(&k, &v)?;
            }
        }
        let flags: [(&str, Option<String>); 15] = [
            ("input", self.input.as_ref().map(|p| p.display().to_string())),
            ("model", self.model.clone()),
            ("innovation", self.innovation.clone()),
            ("params", self.params.clone()),
            ("nu", self.nu.clone()),
            ("h1", self.h1.clone()),
            ("horizon", self.horizon.clone()),
            ("max_n", self.max_n.clone()),
            ("paths", self.paths.clone()),
            ("seed", self.seed.clone()),
            ("method", self.method.clone()),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
            ("dates", self.dates.clone()),
            ("window", self.window.clone()),
            ("gof_horizon", self.gof_horizon.clone()),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                cfg.set(k, &v)?;
            }
        }
        if let Some(v) = &self.cv_trials {
            cfg.set("cv_trials", v)?;
        }
        Ok(cfg)
    }
}

fn write_outputs(dir: &Path, files: &[(&str, &str)]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (name, body) in files {
        fs::write(dir.join(name), body)?;
    }
    Ok(())
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn std::io::Write, stderr: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = if e.use_stderr() { write!(stderr, "{e}") } else { write!(stdout, "{e}") };
            return code;
        }
    };
    let cfg = match &cli.command {
        Command::Ingest { .. } => None,
        Command::Moments(a) | Command::Gof(a) => match a.resolve() {
            Ok(c) => Some(c),
            Err(e) => {
                let _ = writeln!(stderr, "error: {e}");
                return EXIT_USAGE;
            }
        },
    };
    let result: Result<()> = (|| match &cli.command {
        Command::Ingest { input } => {
            let r = cmd_ingest(input)?;
            let mut s = String::from("return\n");
            for v in r {
                s.push_str(&fmt_num(v));
                s.push('\n');
            }
            stdout.write_all(s.as_bytes())?;
            Ok(())
        }
        Command::Moments(_) => {
            let cfg = cfg.as_ref().expect("resolved above");
            let rep = cmd_moments(cfg)?;
            write_outputs(
                &cfg.out_dir,
                &[
                    ("forward.csv", &rep.forward_csv),
                    ("aggregated.csv", &rep.aggregated_csv),
                    ("limits.csv", &rep.limits_csv),
                ],
            )?;
            writeln!(stdout, "wrote forward.csv, aggregated.csv, limits.csv to {}", cfg.out_dir.display())?;
            Ok(())
        }
        Command::Gof(_) => {
            let cfg = cfg.as_ref().expect("resolved above");
            let rep = cmd_gof(cfg)?;
            let summary = rep.summary_csv(cfg.method);
            write_outputs(&cfg.out_dir, &[("gof_records.csv", &rep.records_csv()), ("gof_summary.csv", &summary)])?;
            stdout.write_all(summary.as_bytes())?;
            Ok(())
        }
    })();
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_DOMAIN
        }
    }
}
