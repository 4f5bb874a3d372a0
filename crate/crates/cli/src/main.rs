use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use faylab::analytics::ScalingKind;
use faylab::harness::{run_and_write, ExperimentConfig, ExperimentKind, ExperimentReport};
use faylab::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_GATE: u8 = 3;

/// Monte Carlo experiments for gradient-flow linear programming on Gaussian
/// random instances.
#[derive(Debug, Parser)]
#[command(name = "faylab", version)]
struct Cli {
    /// delta-cdf, fixed-vs-opt, barrier-cdf, time-cdf, pu-check, spectrum-check,
    /// istar-check, moments-check, vertex-norm, flow-validate or collapse.
    experiment: ExperimentKind,

    /// Number of variables.
    #[arg(long)]
    n: Option<usize>,
    /// Number of constraints.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Trial budget. Without --accepted every trial of the budget is used.
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Comma-separated list of m; each size uses n = ratio * m.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    /// n / m for --sizes (default: the experiment's own ratio).
    #[arg(long)]
    ratio: Option<usize>,
    /// Output directory for config.json, report.json and the CSV files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with status 3 when any gate fails.
    #[arg(long = "assert")]
    assert_mode: bool,
    #[arg(long)]
    workers: Option<usize>,
    /// Stop LP experiments after this many accepted trials.
    #[arg(long)]
    accepted: Option<u64>,
    /// Observable for collapse: delta, beta or time.
    #[arg(long, value_parser = parse_quantity)]
    quantity: Option<ScalingKind>,
    /// Comma-separated arguments of the istar-check comparison.
    #[arg(long, value_delimiter = ',')]
    ys: Option<Vec<f64>>,
    /// Highest moment order for moments-check.
    #[arg(long)]
    max_order: Option<u32>,
    /// Override a gate threshold, e.g. --threshold ks_exact=0.05 (repeatable).
    #[arg(long = "threshold", value_parser = parse_threshold)]
    thresholds: Vec<(String, f64)>,
}

fn parse_quantity(s: &str) -> Result<ScalingKind, String> {
    match s {
        "delta" | "delta-rate" => Ok(ScalingKind::DeltaRate),
        "beta" | "barrier" => Ok(ScalingKind::Barrier),
        "time" | "T" => Ok(ScalingKind::Time),
        _ => Err(format!("unknown quantity `{s}` (expected delta, beta or time)")),
    }
}

fn parse_threshold(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got `{s}`"))?;
    let value = value.trim().parse::<f64>().map_err(|e| format!("threshold `{name}`: {e}"))?;
    Ok((name.trim().to_string(), value))
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::new(cli.experiment);
    let ens = &mut cfg.ensemble;
    if let Some(n) = cli.n {
        ens.n = n;
    }
    if let Some(m) = cli.m {
        ens.m = m;
    }
    if let Some(s) = cli.sigma {
        ens.sigma = s;
    }
    if let Some(seed) = cli.seed {
        ens.master_seed = seed;
    }
    if let Some(t) = cli.trials {
        ens.trials = t;
        if cli.accepted.is_none() {
            cfg.accepted = None;
        }
    }
    if cli.accepted.is_some() {
        cfg.accepted = cli.accepted;
    }
    if let Some(e) = cli.epsilon {
        cfg.epsilon = e;
    }
    if let Some(ms) = &cli.sizes {
        let ratio = match cli.ratio {
            Some(r) => r,
            None => {
                let (n, m) = (cfg.ensemble.n, cfg.ensemble.m);
                if m == 0 || n % m != 0 {
                    return Err(Error::Config(format!("n/m = {n}/{m} is not an integer; pass --ratio")));
                }
                n / m
            }
        };
        cfg.set_sizes(ms, ratio);
    } else if cli.ratio.is_some() {
        return Err(Error::Config("--ratio needs --sizes".into()));
    }
    if let Some(q) = cli.quantity {
        cfg.quantity = q;
    }
    if let Some(ys) = &cli.ys {
        cfg.ys = ys.clone();
    }
    if let Some(k) = cli.max_order {
        cfg.max_order = k;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    cfg.out_dir = cli.out.clone();
    cfg.assert_mode = cli.assert_mode;
    for (name, value) in &cli.thresholds {
        cfg.thresholds.set(name, *value)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_summary(report: &ExperimentReport) {
    let c = &report.counts;
    println!(
        "{}: trials {} accepted {} rejected {} (excluded {}) failed {}",
        report.experiment, c.trials, c.accepted, c.rejected, c.excluded, c.failed
    );
    for (name, ks) in &report.ks {
        println!("  ks      {name:<40} {ks:.6}");
    }
    for (name, v) in &report.metrics {
        println!("  metric  {name:<40} {v}");
    }
    for g in &report.gates {
        let status = if g.passed { "PASS" } else { "FAIL" };
        println!("  {status}    {:<40} {} {} {}", g.name, g.value, g.op, g.threshold);
    }
    for f in report.failures.iter().take(5) {
        println!("  failure trial {}: {}", f.trial, f.error);
    }
    if let Some(dir) = &report.config.out_dir {
        println!("  wrote {} files to {}", report.files.len(), dir.display());
    }
    println!("{}", if report.passed { "all gates passed" } else { "some gates failed" });
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Domain(_) | Error::Shape(_) => EXIT_USAGE,
        _ => EXIT_NUMERICAL,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let cfg = match build_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match run_and_write(&cfg) {
        Ok(report) => {
            print_summary(&report);
            if cfg.assert_mode && !report.passed {
                ExitCode::from(EXIT_GATE)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
