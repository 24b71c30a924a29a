//! Command-line front end.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success (for `certify`: verdict true) |
//! | 1 | usage error |
//! | 2 | configuration error, including an invalid pressure law |
//! | 3 | runtime failure |
//! | 4 | data outside the rarefaction-only regime |
//! | 5 | missing snapshots |
//! | 6 | certificate verdict false |

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::config::{RunConfig, SweepManifest};
use crate::entropy::{certify, CertificateReport, TrajectorySource};
use crate::eos::{PressureLaw, ValidationError};
use crate::fvm::{run_streaming, FvmError};
use crate::io::{
    self, read_run, snapshot_file, write_certificate_csv, write_field_csv, write_json, write_profile_csv,
    IoError, ProfileRow, RunMeta, META_FILE, SNAPSHOT_DIR,
};
use crate::riemann::{classify, Regime, RiemannError, WaveFan};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;
pub const EXIT_WRONG_REGIME: i32 = 4;
pub const EXIT_MISSING_SNAPSHOTS: i32 = 5;
pub const EXIT_NOT_CERTIFIED: i32 = 6;

pub const CERTIFICATE_FILE: &str = "certificate.csv";
pub const VERDICT_FILE: &str = "verdict.json";
pub const EXACT_FILE: &str = "exact.csv";

#[derive(Debug, Parser)]
#[command(name = "eulerfan", version, about = "Exact rarefaction fans and relative-entropy certificates")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output` in the config).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for perturbation phases that the config leaves unset.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads. Computation is sequential and results do not depend
    /// on this value.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    /// Manifest listing configs (`configs = [...]`); the command runs once
    /// per config with output in `<out>/<config stem>`.
    #[arg(long, global = true)]
    pub sweep: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the pressure law for p(0) = 0, monotonicity and convexity.
    ValidateEos,
    /// Classify the Riemann data and print the thresholds as JSON.
    Classify,
    /// Sample the exact solution as CSV `x1,rho,u1,u2`.
    Exact {
        /// Time (defaults to `[exact] t`).
        #[arg(long)]
        t: Option<f64>,
        /// Number of samples across (-a, a) (defaults to `[exact] samples`).
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Run the finite-volume solver and write snapshots.
    Simulate,
    /// Certify a simulated run (or the exact solution) against the fan.
    Certify {
        /// Directory of a completed `simulate` run (defaults to the output
        /// directory).
        #[arg(long)]
        run: Option<PathBuf>,
        /// Certify the exact solution sampled on the configured grid.
        #[arg(long)]
        exact: bool,
    },
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }

    fn config(e: impl std::fmt::Display) -> Self {
        Failure::new(EXIT_CONFIG, e.to_string())
    }

    fn runtime(e: impl std::fmt::Display) -> Self {
        Failure::new(EXIT_RUNTIME, e.to_string())
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        match e {
            IoError::MissingSnapshot(_) => Failure::new(EXIT_MISSING_SNAPSHOTS, e.to_string()),
            IoError::Format { .. } => Failure::new(EXIT_MISSING_SNAPSHOTS, e.to_string()),
            IoError::File { .. } => Failure::runtime(e),
        }
    }
}

fn regime_failure(e: RiemannError) -> Failure {
    match e {
        RiemannError::WrongRegime(_) => Failure::new(EXIT_WRONG_REGIME, e.to_string()),
        // e.g. a tabulated law cannot evaluate the vacuum threshold
        RiemannError::InvalidData(_) | RiemannError::Eos(_) => Failure::config(e),
        other => Failure::runtime(other),
    }
}

/// Parses arguments, runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if cli.threads == 0 {
        eprintln!("error: --threads must be at least 1");
        return EXIT_USAGE;
    }
    match &cli.sweep {
        None => {
            let Some(config) = &cli.config else {
                eprintln!("error: --config or --sweep is required");
                return EXIT_USAGE;
            };
            report(execute(&cli, config, cli.out.clone()))
        }
        Some(manifest) => {
            let configs = match SweepManifest::load(manifest) {
                Ok(c) => c,
                Err(e) => return report(Err(Failure::config(e))),
            };
            let base = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
            let mut worst = EXIT_OK;
            for config in &configs {
                let stem = config.file_stem().map(PathBuf::from).unwrap_or_else(|| PathBuf::from("run"));
                eprintln!("== {}", config.display());
                worst = worst.max(report(execute(&cli, config, Some(base.join(stem)))));
            }
            worst
        }
    }
}

fn report(result: Result<i32, Failure>) -> i32 {
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn execute(cli: &Cli, config_path: &Path, out: Option<PathBuf>) -> Result<i32, Failure> {
    let cfg = RunConfig::load(config_path).map_err(Failure::config)?;
    let out = out.or_else(|| cfg.output.as_ref().map(|p| cfg.base_dir.join(p)));
    match &cli.command {
        Command::ValidateEos => cmd_validate_eos(&cfg),
        Command::Classify => cmd_classify(&cfg),
        Command::Exact { t, samples } => cmd_exact(&cfg, *t, *samples, out.as_deref()),
        Command::Simulate => {
            let out = out.ok_or_else(|| Failure::config("simulate needs --out or `output` in the config"))?;
            cmd_simulate(&cfg, cli.seed, &out)
        }
        Command::Certify { run, exact } => {
            let run_dir = run.clone().or_else(|| out.clone());
            let out_dir = out.or_else(|| run.clone());
            cmd_certify(&cfg, run_dir.as_deref(), out_dir.as_deref(), *exact)
        }
    }
}

fn print_json(value: &impl Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string(value).map_err(Failure::runtime)?;
    println!("{text}");
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::config(format!("cannot create {}: {e}", dir.display())))
}

/// `validate-eos`: JSON `{valid, violation?, rho?}`; exit 2 if invalid.
pub fn cmd_validate_eos(cfg: &RunConfig) -> Result<i32, Failure> {
    let law = cfg.pressure_law().map_err(Failure::config)?;
    let kind = match law {
        PressureLaw::Gamma(_) => "gamma",
        PressureLaw::Tabulated(_) => "table",
    };
    match law.validate() {
        Ok(()) => {
            print_json(&json!({ "valid": true, "kind": kind }))?;
            Ok(EXIT_OK)
        }
        Err(v) => {
            let (name, rho) = match v {
                ValidationError::NonConvex(r) => ("NonConvex", Some(r)),
                ValidationError::NonMonotone(r) => ("NonMonotone", Some(r)),
                ValidationError::NonzeroAtVacuum => ("NonzeroAtVacuum", None),
            };
            print_json(&json!({ "valid": false, "kind": kind, "violation": name, "rho": rho }))?;
            Err(Failure::config(format!("pressure law rejected: {v}")))
        }
    }
}

/// `classify`: JSON `{regime, deltas, middle_state?, fan_speeds?}`.
pub fn cmd_classify(cfg: &RunConfig) -> Result<i32, Failure> {
    let law = cfg.pressure_law().map_err(Failure::config)?;
    let c = classify(&cfg.data, &law).map_err(regime_failure)?;
    let mut out = json!({ "regime": c.regime, "deltas": c.thresholds });
    if c.regime == Regime::RarefactionsOnly {
        let fan = WaveFan::new(&cfg.data, &law).map_err(regime_failure)?;
        out["middle_state"] = serde_json::to_value(fan.middle()).map_err(Failure::runtime)?;
        out["fan_speeds"] = serde_json::to_value(fan.speeds()).map_err(Failure::runtime)?;
    }
    print_json(&out)?;
    Ok(EXIT_OK)
}

/// Exact profile at `samples` uniform points on `[-a, a]`.
pub fn exact_profile(fan: &WaveFan, a: f64, t: f64, samples: usize) -> Result<Vec<ProfileRow>, RiemannError> {
    (0..samples)
        .map(|k| {
            let x1 = if k + 1 == samples { a } else { -a + 2.0 * a * k as f64 / (samples - 1) as f64 };
            let pt = fan.sample(t, x1)?;
            Ok(ProfileRow { x1, rho: pt.rho, u1: pt.u1, u2: 0.0 })
        })
        .collect()
}

/// `exact`: CSV to `<out>/exact.csv`, or stdout without an output directory.
pub fn cmd_exact(cfg: &RunConfig, t: Option<f64>, samples: Option<usize>, out: Option<&Path>) -> Result<i32, Failure> {
    let law = cfg.pressure_law().map_err(Failure::config)?;
    let a = cfg.grid.ok_or_else(|| Failure::config("exact needs [grid] a"))?.a;
    let t = t.unwrap_or(cfg.exact.t);
    let samples = samples.unwrap_or(cfg.exact.samples);
    if !(t >= 0.0) || samples < 2 || !(a > 0.0) {
        return Err(Failure::config("exact needs t >= 0, a > 0 and at least 2 samples"));
    }
    let fan = WaveFan::new(&cfg.data, &law).map_err(regime_failure)?;
    let rows = exact_profile(&fan, a, t, samples).map_err(regime_failure)?;
    match out {
        Some(dir) => {
            ensure_dir(dir)?;
            write_profile_csv(&dir.join(EXACT_FILE), &rows)?;
        }
        None => {
            println!("x1,rho,u1,u2");
            for r in &rows {
                println!("{},{},{},{}", io::fmt_f64(r.x1), io::fmt_f64(r.rho), io::fmt_f64(r.u1), io::fmt_f64(r.u2));
            }
        }
    }
    Ok(EXIT_OK)
}

/// `simulate`: streams `snapshots/t_<index>.csv` and writes `meta.json`.
pub fn cmd_simulate(cfg: &RunConfig, seed: Option<u64>, out: &Path) -> Result<i32, Failure> {
    let sim = cfg.sim_config(seed).map_err(Failure::config)?;
    ensure_dir(&out.join(SNAPSHOT_DIR))?;
    let mut index = 0usize;
    let summary = run_streaming(&sim, |field| {
        let path = out.join(snapshot_file(index));
        index += 1;
        write_field_csv(&path, field).map_err(|e| FvmError::Sink(e.to_string()))
    })
    .map_err(|e| match e {
        FvmError::Config(_) | FvmError::Grid(_) => Failure::config(e),
        other => Failure::runtime(other),
    })?;
    let meta = RunMeta::new(&sim, &summary);
    write_json(&out.join(META_FILE), &meta)?;
    eprintln!(
        "wrote {} snapshots in {} steps to {}",
        meta.snapshot_times.len(),
        meta.dt_history.len(),
        out.display()
    );
    Ok(EXIT_OK)
}

/// Verdict JSON written next to `certificate.csv`.
pub fn verdict_json(report: &CertificateReport, source: &str) -> serde_json::Value {
    let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let certified = report.certified();
    json!({
        "uniqueness_certified": certified,
        "interpretation": if certified {
            "certified within tolerance: the trajectory stays close to the rarefaction fan; this is numerical evidence, not a proof of uniqueness"
        } else {
            "not certified: at least one check exceeded its tolerance"
        },
        "source": source,
        "checks": report.checks,
        "tolerances": report.tolerances,
        "max_total_relative_entropy": max(&report.total_relative_entropy),
        "max_relative_entropy_rise": report.max_relative_entropy_rise(),
        "max_energy_slack": max(&report.energy_slack),
        "max_rei2_rhs": max(&report.rei2_rhs),
        "min_one_sided_eig": min(&report.one_sided_min_eig),
        "vacuum_cells": report.vacuum_cells.iter().sum::<usize>(),
    })
}

/// `certify`: writes `certificate.csv` and `verdict.json`; exit 6 when the
/// verdict is false.
pub fn cmd_certify(cfg: &RunConfig, run: Option<&Path>, out: Option<&Path>, exact: bool) -> Result<i32, Failure> {
    let (report, source) = if exact {
        let law = cfg.pressure_law().map_err(Failure::config)?;
        let grid = cfg.grid().map_err(Failure::config)?;
        let fan = WaveFan::new(&cfg.data, &law).map_err(regime_failure)?;
        let t = cfg.exact.t;
        let times = cfg.exact.times.clone().unwrap_or_else(|| vec![0.0, 0.5 * t, t]);
        let snapshots = times
            .iter()
            .map(|&s| fan.evaluate_field(s, &grid))
            .collect::<Result<Vec<_>, _>>()
            .map_err(regime_failure)?;
        let report = certify(&snapshots, &fan, &cfg.certify_settings(), TrajectorySource::ExactSamples)
            .map_err(Failure::runtime)?;
        (report, "exact")
    } else {
        let dir = run.ok_or_else(|| Failure::config("certify needs --run, --out or --exact"))?;
        let (meta, snapshots) = read_run(dir)?;
        if meta.data != cfg.data {
            return Err(Failure::config("run data differ from the config data"));
        }
        let fan = WaveFan::new(&meta.data, &meta.law).map_err(regime_failure)?;
        let source = TrajectorySource::Numerical { dt_max: meta.dt_max() };
        let report = certify(&snapshots, &fan, &cfg.certify_settings(), source).map_err(Failure::runtime)?;
        (report, "simulation")
    };
    let verdict = verdict_json(&report, source);
    if let Some(dir) = out {
        ensure_dir(dir)?;
        write_certificate_csv(&dir.join(CERTIFICATE_FILE), &report)?;
        write_json(&dir.join(VERDICT_FILE), &verdict)?;
    }
    print_json(&verdict)?;
    Ok(if report.certified() { EXIT_OK } else { EXIT_NOT_CERTIFIED })
}
