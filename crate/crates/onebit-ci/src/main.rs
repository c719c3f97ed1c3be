//! Simulation campaigns behind a thin CLI. The library is the primary
//! interface; this binary only loads a config, applies flag overrides, runs
//! one campaign, and writes CSV.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use onebit_ci::sim::{self, config::parse_snr_grid, csv, SimConfig};

#[derive(Parser)]
#[command(
    name = "onebit-ci",
    version,
    about = "1-bit constructive-interference precoding simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// BER versus transmit SNR for the configured precoders.
    BerSweep(RunArgs),
    /// Mean branch-and-bound nodes for P-BB and F-BB over a user sweep.
    NodeCount(RunArgs),
    /// Per-iteration incumbent (PSK) or MSE (QAM) traces.
    Convergence(RunArgs),
    /// Boundary-count audit of the relaxed solutions.
    Prop1Audit(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Transmit antennas.
    #[arg(long)]
    nt: Option<usize>,
    /// Users.
    #[arg(long)]
    k: Option<usize>,
    /// Constellation: qpsk, 8psk, 16psk, 16qam, 64qam, ...
    #[arg(long = "mod")]
    modulation: Option<String>,
    /// SNR grid in dB: `start:step:stop` or a comma list.
    #[arg(long)]
    snr: Option<String>,
    /// Frames per SNR point.
    #[arg(long)]
    trials: Option<u64>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma list of precoders: zf-inf, zf-1bit, ci-1bit, opsu, pbb, fbb.
    #[arg(long)]
    precoders: Option<String>,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn resolve(&self) -> onebit_ci::Result<SimConfig> {
        let mut cfg = match &self.config {
            Some(path) => SimConfig::from_json_file(path)?,
            None => SimConfig::default(),
        };
        if let Some(nt) = self.nt {
            cfg.nt = nt;
        }
        if let Some(k) = self.k {
            cfg.k = k;
        }
        if let Some(m) = &self.modulation {
            cfg.modulation = m.clone();
        }
        if let Some(snr) = &self.snr {
            cfg.snr_db = parse_snr_grid(snr)?;
        }
        if let Some(trials) = self.trials {
            cfg.trials = trials;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(list) = &self.precoders {
            cfg.precoders = list.split(',').map(|s| s.trim().to_string()).collect();
        }
        if let Some(out) = &self.out {
            cfg.out = Some(out.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn emit(cfg: &SimConfig, text: String) -> onebit_ci::Result<()> {
    match &cfg.out {
        Some(path) => {
            std::fs::write(path, text)?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn run() -> onebit_ci::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::BerSweep(args) => {
            let cfg = args.resolve()?;
            let records = sim::run_ber_sweep(&cfg)?;
            emit(&cfg, csv::format_ber_csv(&records))
        }
        Command::NodeCount(args) => {
            let cfg = args.resolve()?;
            let records = sim::run_node_count(&cfg)?;
            emit(&cfg, csv::format_node_count_csv(&records))
        }
        Command::Convergence(args) => {
            let cfg = args.resolve()?;
            let records = sim::run_convergence(&cfg)?;
            emit(&cfg, csv::format_convergence_csv(&records))
        }
        Command::Prop1Audit(args) => {
            let cfg = args.resolve()?;
            let records = sim::run_prop1_audit(&cfg)?;
            emit(&cfg, csv::format_prop1_csv(&records))
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
