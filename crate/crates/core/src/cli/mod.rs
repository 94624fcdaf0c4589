//! Batch front end: `run`, `coefficients`, `certify-map` and `threshold`.
//!
//! Every verb reads a [`RunConfig`] and writes one JSON document (schema
//! [`RESULT_SCHEMA`]) to `--out` or standard output. Exit status is 0 on
//! success, 1 on input errors and 2 on refusals.

mod config;

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

pub use config::{DerivedTag, MapSpec, RunConfig, ZeroFreeSpec, CONFIG_SCHEMA, RESULT_SCHEMA};

use crate::cluster::{BoxDomain, ClusterEngine, ClusterSettings, CoefficientCache, Mode};
use crate::error::{Error, Result};
use crate::interpolation::disk_map;
use crate::oracle;
use crate::pipeline::{self, VerifyOptions, ZeroFreeInput};
use crate::potential::Potential;

#[derive(Debug, Parser)]
#[command(name = "gibbs-interp", version, about = "Normalized log partition functions of repulsive Gibbs point processes")]
pub struct Cli {
    #[command(subcommand)]
    pub verb: Verb,
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to the config value, then all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for the Monte Carlo oracle.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// `certified` or `adaptive`; overrides the config.
    #[arg(long, global = true, value_parser = parse_mode)]
    pub mode: Option<Mode>,
}

fn parse_mode(s: &str) -> std::result::Result<Mode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Verb {
    /// Approximate log Z per unit volume.
    Run,
    /// Cluster coefficients C_1 … C_{k_max} per unit volume.
    Coefficients,
    /// Certify a disk map for the configured γ.
    CertifyMap,
    /// Certified activity threshold from chain integrals.
    Threshold,
}

impl Verb {
    fn name(self) -> &'static str {
        match self {
            Verb::Run => "run",
            Verb::Coefficients => "coefficients",
            Verb::CertifyMap => "certify-map",
            Verb::Threshold => "threshold",
        }
    }
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    schema: &'static str,
    verb: &'static str,
    config: &'a RunConfig,
    #[serde(flatten)]
    body: T,
}

/// Parse `args`, run the verb and return the exit code.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("gibbs-interp {}: {e}", cli.verb.name());
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    let path = cli.config.as_ref().ok_or_else(|| Error::input("--config is required"))?;
    let cfg = RunConfig::load(path)?;
    let threads = cli.threads.or(cfg.threads);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            return Err(Error::input("--threads must be at least 1"));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| Error::input(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(cli, &cfg))
}

fn dispatch(cli: &Cli, cfg: &RunConfig) -> Result<()> {
    match cli.verb {
        Verb::Run => run(cli, cfg),
        Verb::Coefficients => coefficients(cli, cfg),
        Verb::CertifyMap => certify_map(cli, cfg),
        Verb::Threshold => threshold(cli, cfg),
    }
}

fn engine(cfg: &RunConfig) -> Result<ClusterEngine> {
    let mut settings = ClusterSettings::default();
    if let Some(k) = cfg.k_max {
        settings.k_hard_limit = k;
    }
    Ok(match &cfg.cache {
        Some(path) => ClusterEngine::with_cache(settings, CoefficientCache::open(path)?),
        None => ClusterEngine::new(settings),
    })
}

fn mode(cli: &Cli, cfg: &RunConfig) -> Mode {
    cli.mode.or(cfg.mode).unwrap_or(Mode::Certified)
}

fn zero_free(cfg: &RunConfig, p: &Potential) -> Result<ZeroFreeInput> {
    let k_used = cfg.k_used.unwrap_or(1);
    let width = cfg.quad_width();
    let spec = cfg.zero_free.as_ref().ok_or_else(|| Error::input("config needs zero_free"))?;
    match (spec, cfg.lambda, cfg.threshold_fraction) {
        (ZeroFreeSpec::Derived(DerivedTag::ThresholdDerived), None, Some(f)) => {
            ZeroFreeInput::threshold_derived(p, f, k_used, width)
        }
        (ZeroFreeSpec::Derived(_), _, _) => {
            Err(Error::input("threshold-derived constants need threshold_fraction and no lambda"))
        }
        (&ZeroFreeSpec::Asserted { delta_zf, c_bound }, Some(l), None) => ZeroFreeInput::new(l, delta_zf, c_bound),
        (&ZeroFreeSpec::Asserted { delta_zf, c_bound }, None, Some(f)) => {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::input(format!("threshold_fraction must lie in (0, 1), got {f}")));
            }
            let t = oracle::certified_lambda_threshold(p, k_used, width)?;
            ZeroFreeInput::new(f * t.lambda, delta_zf, c_bound)
        }
        _ => Err(Error::input("config needs exactly one of lambda and threshold_fraction")),
    }
}

#[derive(Serialize)]
struct RunBody {
    result: pipeline::ApproxResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    verification: Option<pipeline::VerificationReport>,
}

fn run(cli: &Cli, cfg: &RunConfig) -> Result<()> {
    let p = Potential::from_spec(cfg.potential()?)?;
    let n = cfg.n()?;
    let eps = cfg.epsilon()?;
    let zf = zero_free(cfg, &p)?;
    let eng = engine(cfg)?;
    let result = pipeline::approximate_logz_with(&eng, &p, n, &zf, eps, mode(cli, cfg))?;
    let verification = cfg.verify.then(|| {
        let opts = VerifyOptions { seed: cli.seed.or(cfg.seed).unwrap_or(0), ..VerifyOptions::default() };
        pipeline::verify_run_with(&result, &p, n, zf.lambda, &opts)
    });
    if cfg.plot_data {
        let out = cli.out.as_ref().ok_or_else(|| Error::input("plot_data needs --out"))?;
        write_plot_data(out, &result)?;
    }
    emit(cli, cfg, RunBody { result, verification })
}

#[derive(Serialize)]
struct CoefficientsBody {
    coefficients: Vec<crate::cluster::ClusterCoefficient>,
}

fn coefficients(cli: &Cli, cfg: &RunConfig) -> Result<()> {
    let p = Potential::from_spec(cfg.potential()?)?;
    let domain = BoxDomain::for_potential(cfg.n()?, &p)?;
    let k_max = cfg.k_max.ok_or_else(|| Error::input("coefficients needs k_max"))?;
    let eps = cfg.epsilon()?;
    let eng = engine(cfg)?;
    let coefficients = eng.series(&p, &domain, &vec![eps; k_max], mode(cli, cfg))?;
    emit(cli, cfg, CoefficientsBody { coefficients })
}

#[derive(Serialize)]
struct MapBody {
    map: disk_map::DiskMap,
}

fn certify_map(cli: &Cli, cfg: &RunConfig) -> Result<()> {
    let gamma = cfg.gamma.ok_or_else(|| Error::input("certify-map needs gamma"))?;
    let map = match cfg.map {
        Some(m) => disk_map::build_disk_map(gamma, m.rho, m.beta_anchor, m.degree)?,
        None => disk_map::map_for(gamma)?,
    };
    emit(cli, cfg, MapBody { map })
}

#[derive(Serialize)]
struct ThresholdBody {
    threshold: oracle::ThresholdResult,
}

fn threshold(cli: &Cli, cfg: &RunConfig) -> Result<()> {
    let p = Potential::from_spec(cfg.potential()?)?;
    let threshold = oracle::certified_lambda_threshold(&p, cfg.k_used.unwrap_or(1), cfg.quad_width())?;
    emit(cli, cfg, ThresholdBody { threshold })
}

fn emit<T: Serialize>(cli: &Cli, cfg: &RunConfig, body: T) -> Result<()> {
    let doc = Document { schema: RESULT_SCHEMA, verb: cli.verb.name(), config: cfg, body };
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    match &cli.out {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

/// Write to a sibling temporary file, then rename over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().ok_or_else(|| Error::input(format!("bad output path {}", path.display())))?;
    let mut tmp_name = OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_stem().map(OsString::from).unwrap_or_default();
    name.push(suffix);
    path.with_file_name(name)
}

/// `<out>.partial_sums.csv` and `<out>.budget.csv`.
fn write_plot_data(out: &Path, r: &pipeline::ApproxResult) -> Result<()> {
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["terms", "partial_sum"]).map_err(csv_err)?;
    for (m, s) in r.stages.partial_sums.iter().enumerate() {
        w.write_record([m.to_string(), format!("{s:e}")]).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    write_atomic(&sibling(out, ".partial_sums.csv"), &bytes)?;

    let volume = r.volume();
    let scale = r.zero_free.c_bound * volume;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["stage", "log_z_error"]).map_err(csv_err)?;
    let mut rows = vec![
        ("truncation".to_string(), scale * r.stages.truncation_error),
        ("coefficients".to_string(), scale * r.stages.coefficient_error),
    ];
    for (c, ef) in r.stages.coefficients.iter().zip(&r.stages.budget.f_errors) {
        rows.push((format!("budget_C{}", c.k), scale * ef));
    }
    rows.push(("total".to_string(), r.epsilon));
    for (stage, v) in rows {
        w.write_record([stage, format!("{v:e}")]).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    write_atomic(&sibling(out, ".budget.csv"), &bytes)
}
