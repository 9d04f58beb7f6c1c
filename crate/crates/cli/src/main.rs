//! `chartkit` command-line driver.
//!
//! `chartkit run` performs one experiment and writes its artifacts;
//! `chartkit suite` sweeps estimator pairs across channel models and writes a
//! combined TW/CT table. Progress goes to stderr, results only to files.

use anyhow::{Context, Result};
use chartkit::channel::ChannelModel;
use chartkit::estimate::{RhoAlgo, ThetaAlgo};
use chartkit::experiment::{run_experiment, run_suite, write_suite, ExperimentConfig, SuiteConfig};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

#[derive(Parser)]
#[command(name = "chartkit", version, about = "Model-based channel charting experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one estimator pair and write chart, metrics and manifest files.
    Run(RunArgs),
    /// Score every estimator pair under every channel model.
    Suite(SuiteArgs),
}

/// Overrides shared by both subcommands. Unset flags keep the config file
/// value, or the built-in default when there is no file.
#[derive(Args)]
struct Common {
    /// JSON experiment config; every field is optional.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Per-entry SNR in dB; `inf` disables noise.
    #[arg(long, allow_hyphen_values = true)]
    snr: Option<f64>,
    #[arg(long)]
    n_ue: Option<usize>,
    #[arg(long)]
    n_sub: Option<usize>,
    /// Seed for both the scene and the channel.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    k_max: Option<usize>,
    /// Time the estimation stage (single-threaded).
    #[arg(long)]
    bench: bool,
    /// Timed repetitions when benchmarking.
    #[arg(long)]
    repeats: Option<usize>,
    /// Estimate UEs serially instead of on the thread pool.
    #[arg(long)]
    serial: bool,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// los, qlos or qnlos.
    #[arg(long)]
    model: Option<String>,
    /// music, bartlett, mvdr or minnorm.
    #[arg(long)]
    theta: Option<String>,
    /// isq, lr, music or bartlett.
    #[arg(long)]
    rho: Option<String>,
    /// Also write per-UE spectra under `spectra/`.
    #[arg(long)]
    dump_spectra: bool,
}

#[derive(Args)]
struct SuiteArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated channel models (default: all).
    #[arg(long, value_delimiter = ',')]
    model: Vec<String>,
    /// Comma-separated angle estimators (default: all).
    #[arg(long, value_delimiter = ',')]
    theta: Vec<String>,
    /// Comma-separated range estimators (default: all).
    #[arg(long, value_delimiter = ',')]
    rho: Vec<String>,
}

fn parse<T: FromStr<Err = chartkit::Error>>(s: &str) -> Result<T> {
    Ok(s.parse::<T>()?)
}

fn parse_list<T: FromStr<Err = chartkit::Error>>(items: &[String]) -> Result<Option<Vec<T>>> {
    if items.is_empty() {
        return Ok(None);
    }
    items.iter().map(|s| parse(s.trim())).collect::<Result<Vec<T>>>().map(Some)
}

fn base_config(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(path) => ExperimentConfig::load(path).with_context(|| format!("reading {}", path.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(snr) = c.snr {
        cfg.channel.snr_db = if snr == f64::INFINITY { None } else { Some(snr) };
    }
    if let Some(n) = c.n_ue {
        cfg.scene.n_ue = n;
        cfg.scene.n_vip = cfg.scene.n_vip.min(n);
    }
    if let Some(n) = c.n_sub {
        cfg.channel.n_sub = n;
    }
    if let Some(seed) = c.seed {
        cfg.set_seed(seed);
    }
    if let Some(k) = c.k_max {
        cfg.k_max = k;
    }
    if let Some(r) = c.repeats {
        cfg.repeats = r;
    }
    if let Some(out) = &c.out {
        cfg.output_dir = out.clone();
    }
    cfg.bench |= c.bench;
    if c.serial {
        cfg.parallel = false;
    }
    Ok(cfg)
}

fn progress(msg: &str) {
    eprintln!("[chartkit] {msg}");
}

fn run(args: RunArgs) -> Result<bool> {
    let mut cfg = base_config(&args.common)?;
    if let Some(m) = &args.model {
        cfg.channel.model = parse::<ChannelModel>(m)?;
    }
    if let Some(t) = &args.theta {
        cfg.theta_algo = parse::<ThetaAlgo>(t)?;
    }
    if let Some(r) = &args.rho {
        cfg.rho_algo = parse::<RhoAlgo>(r)?;
    }
    cfg.dump_spectra |= args.dump_spectra;
    let out = run_experiment(&cfg, progress)?;
    let (tw, ct) = out.report.at(cfg.k_max).expect("report covers k_max");
    progress(&format!("TW({k}) = {tw:.4}, CT({k}) = {ct:.4}", k = cfg.k_max));
    if let Some(t) = &out.timing {
        progress(&format!("estimation time {:.4} s (std {:.4} s)", t.seconds_mean, t.seconds_std));
    }
    progress(&format!("wrote {}", cfg.output_dir.display()));
    Ok(true)
}

fn suite(args: SuiteArgs) -> Result<bool> {
    let base = base_config(&args.common)?;
    let defaults = SuiteConfig::default();
    let cfg = SuiteConfig {
        models: parse_list(&args.model)?.unwrap_or(defaults.models),
        thetas: parse_list(&args.theta)?.unwrap_or(defaults.thetas),
        rhos: parse_list(&args.rho)?.unwrap_or(defaults.rhos),
        base,
    };
    let report = run_suite(&cfg, progress)?;
    write_suite(&report, &cfg.base.output_dir)?;
    eprint!("{}", report.format_table());
    progress(&format!("wrote {}", cfg.base.output_dir.display()));
    Ok(report.all_ok())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Suite(a) => suite(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("chartkit: some suite cells failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            // Library errors already embed their source in the message.
            let mut chain: Vec<String> = Vec::new();
            for c in e.chain() {
                let msg = c.to_string();
                if !chain.last().is_some_and(|prev| prev.contains(&msg)) {
                    chain.push(msg);
                }
            }
            eprintln!("chartkit: {}", chain.join(": "));
            ExitCode::FAILURE
        }
    }
}
