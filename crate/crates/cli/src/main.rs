use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use vlcsim_cli::{ber_sweep, channel_info, optimize_kp_table, sinr_map, KpTable, RunConfig};

#[derive(Parser)]
#[command(
    name = "vlcsim",
    version,
    about = "Relay-assisted indoor VLC link simulator"
)]
struct Cli {
    /// TOML run configuration; every key is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// RNG seed for Monte Carlo columns.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output CSV path; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Monte Carlo bits per row (0 disables simulation).
    #[arg(long, global = true)]
    bits: Option<u64>,
    /// Comma-separated modes: direct, HD, FD.
    #[arg(long, global = true, value_delimiter = ',')]
    modes: Option<Vec<String>>,
    /// Comma-separated schemes, e.g. 2-PSK,4-QAM,BPSK-SIM.
    #[arg(long, global = true, value_delimiter = ',')]
    schemes: Option<Vec<String>>,
    /// Comma-separated allocations: EPA, OPA.
    #[arg(long, global = true, value_delimiter = ',')]
    allocation: Option<Vec<String>>,
    /// K_p search step over [0.01, 0.99].
    #[arg(long, global = true)]
    kp_grid_step: Option<f64>,
    /// CSV of `power_dbm,kp` used for OPA rows instead of the optimizer.
    #[arg(long, global = true)]
    kp_table: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// BER against power for each mode, scheme and allocation.
    BerSweep,
    /// Optimal power split per power.
    OptimizeKp,
    /// SINR over the test-point grid.
    SinrMap {
        /// Emit `sinr_db,scheme,ber` rows instead of the map.
        #[arg(long)]
        ber_vs_sinr: bool,
    },
    /// Effective CIRs and link summaries.
    ChannelInfo {
        /// Also write each effective CIR as a CIR file here.
        #[arg(long)]
        cir_dir: Option<PathBuf>,
    },
}

fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let sweep = &mut cfg.sweep;
    if let Some(s) = cli.seed {
        sweep.seed = s;
    }
    if let Some(b) = cli.bits {
        sweep.bits = b;
    }
    if let Some(step) = cli.kp_grid_step {
        sweep.kp_grid = "default".into();
        sweep.kp_grid_step = step;
    }
    if let Some(a) = &cli.allocation {
        sweep.allocations = a.clone();
    }
    if let Some(m) = &cli.modes {
        if let [only] = m.as_slice() {
            sweep.opt_mode = only.clone();
        }
        sweep.modes = m.clone();
    }
    if let Some(s) = &cli.schemes {
        if let [only] = s.as_slice() {
            sweep.opt_scheme = only.clone();
        }
        sweep.schemes = s.clone();
    }
    Ok(cfg)
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("VLC_SIM_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .with_context(|| format!("VLC_SIM_THREADS must be a positive integer, got `{v}`"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("cannot configure the worker pool")?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    let cfg = resolve(&cli)?;
    let csv = match &cli.command {
        Command::BerSweep => {
            let table = cli.kp_table.as_deref().map(KpTable::load).transpose()?;
            ber_sweep(&cfg, table.as_ref())?
        }
        Command::OptimizeKp => optimize_kp_table(&cfg)?,
        Command::SinrMap { ber_vs_sinr } => sinr_map(&cfg, *ber_vs_sinr)?,
        Command::ChannelInfo { cir_dir } => channel_info(&cfg, cir_dir.as_deref())?,
    };
    match &cli.out {
        Some(path) => {
            std::fs::write(path, csv).with_context(|| format!("cannot write {}", path.display()))?
        }
        None => {
            use std::io::Write;
            std::io::stdout().lock().write_all(csv.as_bytes())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
