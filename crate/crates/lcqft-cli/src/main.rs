//! `lcqft`: check-suite runner for the core verification library.
//!
//! Exit codes: 0 when every check passes, 1 when any check fails, 2 for
//! usage, configuration, or IO errors.

mod config;
mod report;
mod suites;

use clap::Parser;
use config::Config;
use report::{merge, to_csv, to_json, SuiteReport};
use std::path::PathBuf;
use std::process::ExitCode;

/// Runs numerical verification suites and exports pass/fail reports.
#[derive(Parser)]
#[command(name = "lcqft", version)]
struct Args {
    /// Suite to run: clifford, spin, geometry, semt-var, ccr, car,
    /// minkowski, lattice-kg, cones, wf-scan, deform, or all.
    #[arg(long, default_value = "all")]
    suite: String,

    /// Sectioned `key = value` configuration file; the LCQFT_CONFIG
    /// environment variable overrides this path when set.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Seed for every randomized suite.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Write the report to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Report format: json or csv.
    #[arg(long, default_value = "json")]
    format: String,

    /// Record per-suite wall times; off by default so identical inputs
    /// produce byte-identical reports.
    #[arg(long)]
    timings: bool,
}

fn run(args: &Args) -> Result<bool, String> {
    let config_path = std::env::var_os("LCQFT_CONFIG")
        .map(PathBuf::from)
        .or_else(|| args.config.clone());
    let cfg = match &config_path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
            Config::parse(&text).map_err(|e| e.to_string())?
        }
        None => Config::default(),
    };

    let wanted: Vec<&str> = if args.suite == "all" {
        suites::SUITE_ORDER.to_vec()
    } else if suites::SUITE_ORDER.contains(&args.suite.as_str()) {
        vec![args.suite.as_str()]
    } else {
        return Err(format!(
            "unknown suite {:?} (available: {}, all)",
            args.suite,
            suites::SUITE_ORDER.join(", ")
        ));
    };

    // Suites are independent, so they run concurrently; the merge step
    // orders reports by suite name, making the output independent of
    // scheduling.
    let cfg_ref = &cfg;
    let reports: Vec<SuiteReport> = std::thread::scope(|scope| {
        let handles: Vec<_> = wanted
            .iter()
            .map(|name| {
                let name: &str = name;
                scope.spawn(move || {
                    suites::run_suite(name, cfg_ref, args.seed, args.timings)
                        .expect("suite names come from the registry")
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("suite threads do not panic"))
            .collect()
    });
    let reports = merge(reports);

    let rendered = match args.format.as_str() {
        "json" => to_json(&reports),
        "csv" => to_csv(&reports),
        other => return Err(format!("unknown format {other:?} (expected json or csv)")),
    };
    match &args.out {
        Some(path) => std::fs::write(path, rendered)
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?,
        None => print!("{rendered}"),
    }
    Ok(reports.iter().any(|r| r.has_failure()))
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(1),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
