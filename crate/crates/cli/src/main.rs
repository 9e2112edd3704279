use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cirauth_cli::run::{self, print_summary, sweep_threads};
use cirauth_cli::{ConfigError, ExperimentConfig, Result};

/// Channel-impulse-response authentication experiments.
#[derive(Parser)]
#[command(name = "cirauth", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset.
    Gen(Common),
    /// Train a model and save its checkpoint.
    Train(Common),
    /// Authenticate a dataset with a saved checkpoint.
    Auth {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Generate, train, authenticate and report.
    Experiment(Common),
    /// Run every combination of the config's `sweep.*` lists.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// static, mobile or file:<path>
    #[arg(long)]
    scenario: Option<String>,
    /// tf_hvae, tf_ae, tb_ae or tf_vae
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    alice_node: Option<u32>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Any other config key, as `key=value`; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
            cfg.apply_text(&text)
                .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            cfg.set(k.trim(), v)?;
        }
        let flags = [
            ("seed", self.seed.map(|v| v.to_string())),
            ("scenario", self.scenario.clone()),
            ("model", self.model.clone()),
            ("alice_node", self.alice_node.map(|v| v.to_string())),
            ("alpha", self.alpha.map(|v| v.to_string())),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                cfg.set(k, &v)?;
            }
        }
        Ok(cfg)
    }
}

fn execute(cli: Cli) -> Result<()> {
    let stdout = std::io::stdout();
    match cli.command {
        Command::Gen(c) => run::gen(&c.load()?),
        Command::Train(c) => run::train(&c.load()?),
        Command::Auth { common, checkpoint } => {
            let mut cfg = common.load()?;
            if let Some(p) = checkpoint {
                cfg.checkpoint = Some(p);
            }
            let r = run::auth(&cfg)?;
            print_summary(&r, stdout.lock())?;
            Ok(())
        }
        Command::Experiment(c) => {
            let r = run::experiment(&c.load()?)?;
            print_summary(&r, stdout.lock())?;
            Ok(())
        }
        Command::Sweep(c) => {
            let cfg = c.load()?;
            let threads = sweep_threads(std::env::var("CIR_AUTH_THREADS").ok().as_deref())?;
            for r in run::sweep(&cfg, threads)? {
                print_summary(&r, stdout.lock())?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
