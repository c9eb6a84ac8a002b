//! `pinning-lab`: samplers, partition functions and the experiment suite
//! from the command line. Every run prints or writes a JSON report that
//! embeds its resolved configuration and seed.
//!
//! Exit codes: 0 when every criterion in scope passes, 2 when one fails,
//! 1 on usage or configuration errors.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use commands::Output;

#[derive(Debug, Parser)]
#[command(name = "pinning-lab", version, about = "Disordered pinning models and their continuum limit")]
struct Cli {
    /// JSON config for the subcommand; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed. All randomness is derived from it.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Existing directory for the report and CSV dumps. Without it the
    /// report goes to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, env = "PINNING_LAB_THREADS")]
    threads: Option<usize>,
    /// Also dump samples as CSV (needs --out).
    #[arg(long, global = true)]
    csv: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw renewal sets on {0..N}.
    SampleRenewal(Overrides),
    /// Quenched partition function Z(a, b) for one disorder draw.
    Partition(Overrides),
    /// Exact draws of the conditioned pinning measure.
    SamplePinning(Overrides),
    /// Conditioned α-stable regenerative sets on [0, T].
    SampleRegen(Overrides),
    /// Continuum partition function Z(0, T) for one Brownian path.
    ContinuumZ(Overrides),
    /// (g_t, d_t) pairs of the continuum pinning model for one path.
    CdpmFdd(Overrides),
    /// Renewal-function asymptotics, smoothness and coupling bound.
    CheckRenewal(Overrides),
    /// Run a named experiment of the suite.
    Experiment {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(pinning_core::analysis::EXPERIMENTS))]
        name: String,
    },
    /// Dirichlet integral against its Gamma closed form.
    DirichletCheck(Overrides),
}

/// Per-subcommand overrides. Flags that do not apply to a subcommand are
/// rejected when the config is resolved.
#[derive(Debug, Default, Clone, Args)]
pub struct Overrides {
    #[arg(long = "N")]
    pub n: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub beta_hat: Option<f64>,
    #[arg(long)]
    pub h_hat: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub cells: Option<usize>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub level: Option<u32>,
    #[arg(long)]
    pub chi: Option<f64>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub conditioned: Option<bool>,
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("thread pool")?;
    }
    if let Some(dir) = &cli.out {
        if !dir.is_dir() {
            bail!("output directory {} does not exist", dir.display());
        }
    } else if cli.csv {
        bail!("--csv needs --out");
    }
    let config = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Some(serde_json::from_str::<serde_json::Value>(&text).with_context(|| format!("parsing {}", p.display()))?)
        }
        None => None,
    };
    let start = Instant::now();
    let Output { report, csv } = match &cli.command {
        Command::SampleRenewal(o) => commands::sample_renewal(config, o, cli.seed)?,
        Command::Partition(o) => commands::partition(config, o, cli.seed)?,
        Command::SamplePinning(o) => commands::sample_pinning(config, o, cli.seed)?,
        Command::SampleRegen(o) => commands::sample_regen(config, o, cli.seed)?,
        Command::ContinuumZ(o) => commands::continuum_z(config, o, cli.seed, cli.csv)?,
        Command::CdpmFdd(o) => commands::cdpm_fdd(config, o, cli.seed)?,
        Command::CheckRenewal(o) => commands::check_renewal(config, o, cli.seed)?,
        Command::Experiment { name } => commands::experiment(name, config, cli.seed)?,
        Command::DirichletCheck(o) => commands::dirichlet_check(config, o, cli.seed)?,
    };
    match &cli.out {
        Some(dir) => {
            let path = report.write(dir, start.elapsed())?;
            if cli.csv {
                if let Some(body) = csv {
                    std::fs::write(dir.join(format!("{}.csv", report.experiment)), body)?;
                }
            }
            eprintln!("wrote {}", path.display());
        }
        None => println!("{}", report.to_json()),
    }
    for v in &report.verdicts {
        eprintln!("{} {}: {}", if v.passed { "PASS" } else { "FAIL" }, v.criterion, v.detail);
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
