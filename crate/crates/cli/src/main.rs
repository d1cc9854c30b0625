//! `svir`: analyze, simulate or sweep an SVIR scenario.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure, 1 I/O error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use svir_core::scenario::{cmd_analyze, cmd_simulate, cmd_sweep, ConfigBuilder, ScenarioConfig};
use svir_core::Error;

#[derive(Parser)]
#[command(name = "svir", version, about = "Diffusive SVIR model with distributed delay")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file of `key = value` lines.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Built-in preset (table1_low, table1_high); a config file may override its entries.
    #[arg(long, short)]
    preset: Option<String>,
    /// Extra `key=value` overrides, applied last.
    #[arg(long = "set", short = 's', value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (defaults to the scenario's `out_dir`).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// R0, equilibria and the hypothesis report.
    Analyze(Common),
    /// Integrate the PDE and write series, snapshots and a manifest.
    Simulate(Common),
    /// One simulation per value of a scalar key, run in parallel.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        key: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
}

fn load(common: &Common) -> svir_core::Result<(ScenarioConfig, PathBuf)> {
    let mut b = match &common.preset {
        Some(name) => ConfigBuilder::preset(name)?,
        None => ConfigBuilder::new(),
    };
    if let Some(path) = &common.config {
        b.merge_file(path)?;
    }
    for o in &common.overrides {
        b.set_assignment(o)?;
    }
    let cfg = b.build()?;
    let out = common.out.clone().unwrap_or_else(|| cfg.out_dir.clone());
    Ok((cfg, out))
}

fn execute(cli: Cli) -> svir_core::Result<()> {
    match cli.command {
        Command::Analyze(common) => {
            let (cfg, out) = load(&common)?;
            let report = cmd_analyze(&cfg, &out)?;
            print!("{report}");
        }
        Command::Simulate(common) => {
            let (cfg, out) = load(&common)?;
            let s = cmd_simulate(&cfg, &out)?;
            println!("stop = {}", s.stop);
            println!("R0 = {:.4}", s.r0);
            println!("final_I_sup = {:e}", s.final_i_sup);
            println!("certificate = {}", s.certificate.label());
            println!("clamps = {}", s.clamp_count);
            println!("output = {}", out.display());
        }
        Command::Sweep { common, key, values } => {
            let (cfg, out) = load(&common)?;
            let rows = cmd_sweep(&cfg, &key, &values, &out)?;
            let failed = rows.iter().filter(|r| r.error.is_some()).count();
            println!("runs = {}", rows.len());
            println!("failed = {failed}");
            println!("summary = {}", out.join("summary.csv").display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                e if e.is_config_error() => 2,
                Error::Io(_) => 1,
                _ => 3,
            };
            ExitCode::from(code)
        }
    }
}
