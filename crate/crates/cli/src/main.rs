use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod error;
mod settings;

use commands::{EvalArgs, LoadedModel, TrainArgs};
use error::CliResult;
use settings::Settings;

/// Edge-profile single-image super-resolution.
#[derive(Parser)]
#[command(name = "epsr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every command.
#[derive(Args)]
struct Common {
    /// Seed for initialisation, sampling and noise (overrides the config)
    #[arg(long)]
    seed: Option<u64>,
    /// `key = value` settings file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra `key=value` settings applied after the config file
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output file or directory
    #[arg(long)]
    out: PathBuf,
}

impl Common {
    fn settings(&self, scale: Option<u32>) -> CliResult<Settings> {
        let mut overrides = self.overrides.clone();
        if let Some(s) = scale {
            overrides.push(format!("scale={s}"));
        }
        if let Some(seed) = self.seed {
            overrides.push(format!("seed={seed}"));
        }
        Settings::resolve(self.config.as_deref(), &overrides)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Produce LR images from HR images (directory, PNG or manifest)
    Degrade {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        /// BIx2, BIx3, BIx4, BD, BD-decimate or DN
        #[arg(long, default_value = "BIx2")]
        degradation: String,
    },
    /// Train a network on a manifest of HR (and optional LR) images
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        train: PathBuf,
        /// Manifest evaluated every `eval_interval` steps
        #[arg(long)]
        eval: Option<PathBuf>,
        /// Steps to run (default: the remaining configured steps)
        #[arg(long)]
        steps: Option<u64>,
        /// Checkpoint to continue from, e.g. run/step500
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Score a checkpoint or `bicubic` on a manifest (Y-channel PSNR/SSIM)
    Eval {
        #[command(flatten)]
        common: Common,
        /// Checkpoint path or `bicubic`
        #[arg(long)]
        model: String,
        #[arg(long)]
        data: PathBuf,
        /// Scale of the bicubic baseline
        #[arg(long, default_value_t = 2)]
        scale: u32,
        /// BI, BD, BD-decimate or DN (default: the configured one)
        #[arg(long)]
        degradation: Option<String>,
        /// Border pixels excluded from the metrics (default: the scale)
        #[arg(long)]
        shave: Option<usize>,
        /// Average over the eight flips and rotations
        #[arg(long)]
        ensemble: bool,
    },
    /// Super-resolve PNG images (directory, PNG or manifest)
    Sr {
        #[command(flatten)]
        common: Common,
        /// Checkpoint path or `bicubic`
        #[arg(long)]
        model: String,
        #[arg(long)]
        input: PathBuf,
        /// Scale of the bicubic baseline
        #[arg(long, default_value_t = 2)]
        scale: u32,
        #[arg(long)]
        ensemble: bool,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Degrade {
            common,
            input,
            degradation,
        } => {
            let settings = common.settings(None)?;
            let spec = degradation.parse()?;
            commands::degrade_cmd(&input, spec, settings.train.seed, &common.out)
        }
        Command::Train {
            common,
            train,
            eval,
            steps,
            resume,
        } => {
            let settings = common.settings(None)?;
            commands::train_cmd(
                &settings,
                TrainArgs {
                    train: &train,
                    eval: eval.as_deref(),
                    steps,
                    resume: resume.as_deref(),
                    out: &common.out,
                },
            )
        }
        Command::Eval {
            common,
            model,
            data,
            scale,
            degradation,
            shave,
            ensemble,
        } => {
            let model = LoadedModel::load(&model, scale)?;
            let mut settings = common.settings(Some(model.scale()))?;
            if let Some(d) = degradation {
                settings.set("degradation", &d)?;
            }
            commands::eval_cmd(
                &settings,
                EvalArgs {
                    model: &model,
                    data: &data,
                    shave,
                    ensemble,
                    out: Some(&common.out),
                },
            )
        }
        Command::Sr {
            common,
            model,
            input,
            scale,
            ensemble,
        } => {
            common.settings(None)?;
            let model = LoadedModel::load(&model, scale)?;
            commands::sr_cmd(&model, &input, ensemble, &common.out)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
