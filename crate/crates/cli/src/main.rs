use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use droplet_fall::{init_thread_pool, parse_config, run_command, run_preset, run_sweep, Axis, CliError, Command, RunConfig};

#[derive(Parser)]
#[command(name = "droplet-fall", version, about = "Falling quantum droplets: analytic states, split-step evolution, diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// JSON config file (a run manifest is also accepted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. --set potential.a=9.8 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Output directory (overrides output_dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Random seed (overrides seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Closed-form droplet snapshots, observables and density probes.
    Analytic,
    /// Split-step evolution of the analytic initial state.
    Evolve,
    /// Wigner map of the analytic state.
    Wigner,
    /// Shannon entropy series of the analytic state.
    Entropy,
    /// Noise-robustness protocol.
    Stability {
        /// Exit with status 5 when the deviation exceeds the threshold.
        #[arg(long)]
        enforce: bool,
    },
    /// Run a figure preset (fig1 .. fig10).
    Preset { name: String },
    /// Run a subcommand over the Cartesian product of parameter lists.
    Sweep {
        #[arg(value_enum)]
        target: Command,
        /// Swept key and JSON array of values, e.g. potential.a=[0.098,0.98] (repeatable).
        #[arg(long = "vary", value_name = "KEY=[..]", required = true)]
        axes: Vec<String>,
    },
}

fn overrides(common: &Common) -> Vec<String> {
    let mut all = common.overrides.clone();
    if let Some(out) = &common.out {
        all.push(format!("output_dir={}", serde_json::Value::from(out.to_string_lossy().to_string())));
    }
    if let Some(seed) = common.seed {
        all.push(format!("seed={seed}"));
    }
    all
}

fn execute(cli: Cli) -> Result<(), CliError> {
    init_thread_pool()?;
    let text = match &cli.common.config {
        Some(path) => std::fs::read_to_string(path)?,
        None => String::new(),
    };
    let overrides = overrides(&cli.common);
    let load = || -> Result<RunConfig, CliError> { Ok(parse_config(&text, &overrides)?) };
    let manifest = match cli.command {
        Cmd::Analytic => run_command(Command::Analytic, &load()?, false)?,
        Cmd::Evolve => run_command(Command::Evolve, &load()?, false)?,
        Cmd::Wigner => run_command(Command::Wigner, &load()?, false)?,
        Cmd::Entropy => run_command(Command::Entropy, &load()?, false)?,
        Cmd::Stability { enforce } => run_command(Command::Stability, &load()?, enforce)?,
        Cmd::Preset { name } => run_preset(&name, &load()?)?,
        Cmd::Sweep { target, axes } => {
            let axes = axes.iter().map(|a| Axis::parse(a)).collect::<Result<Vec<_>, _>>()?;
            let base = load()?;
            run_sweep(target, &text, &overrides, &axes, base.output_dir.as_ref())?
        }
    };
    if let Some(summary) = manifest.get("summary") {
        println!("{}", serde_json::to_string_pretty(summary).unwrap_or_default());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
