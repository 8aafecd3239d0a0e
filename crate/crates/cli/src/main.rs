//! `lingp`: fit sparse Legendre surrogates, predict with them, and run
//! predictive control from the command line.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use commands::CliError;

#[derive(Debug, Parser)]
#[command(name = "lingp", version, about = "Sparse Legendre surrogates of GP regressors, and predictive control on them")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Overrides the sampling seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory for model, curve, trace and report files.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Example definition (TOML, or JSON when the name ends in `.json`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Format of what is printed on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a surrogate for the modeling example given by --config.
    Fit,
    /// Evaluate a saved model.
    Predict {
        /// Model file written by `fit` or `example`.
        #[arg(long)]
        model: PathBuf,
        /// CSV of inputs; the first d columns are used.
        #[arg(long, conflicts_with = "x")]
        input: Option<PathBuf>,
        /// A single input point, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x: Option<Vec<f64>>,
    },
    /// Run control for the example given by --config, or drive a saved
    /// model (without a plant) toward a reference output.
    Control {
        /// Model file to drive instead of a --config example.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Reference output (with --model).
        #[arg(long, allow_hyphen_values = true)]
        y_star: Option<f64>,
        /// Start point, comma separated; defaults to the domain center.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x0: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1.0)]
        w1: f64,
        #[arg(long, default_value_t = 1.0)]
        w2: f64,
        /// Start with a boosted output weight until near the reference.
        #[arg(long)]
        two_stage: bool,
        #[arg(long, default_value_t = 100)]
        max_steps: usize,
    },
    /// Run a built-in example.
    Example { name: String },
    /// List the built-in examples.
    ListExamples,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            return report_error(&CliError::usage(e.to_string().trim_end()));
        }
    };
    let result = match cli.command {
        Command::Fit => commands::fit(cli.config.as_deref(), cli.seed, cli.out_dir.as_deref(), cli.format),
        Command::Predict { model, input, x } => commands::predict(&model, input.as_deref(), x, cli.format),
        Command::Control { model, y_star, x0, w1, w2, two_stage, max_steps } => match model {
            Some(m) => {
                let opts = commands::ModelControl { y_star, x0, w1, w2, two_stage, max_steps };
                commands::control_model(&m, opts, cli.out_dir.as_deref(), cli.format)
            }
            None => commands::control_config(cli.config.as_deref(), cli.seed, cli.out_dir.as_deref(), cli.format),
        },
        Command::Example { name } => {
            if cli.config.is_some() {
                Err(CliError::usage("`example` takes a name, not --config; use `fit` or `control` for custom definitions"))
            } else {
                commands::example(&name, cli.seed, cli.out_dir.as_deref(), cli.format)
            }
        }
        Command::ListExamples => commands::list_examples(cli.format),
    };
    match result {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => report_error(&e),
    }
}

fn report_error(e: &CliError) -> ExitCode {
    let body = serde_json::json!({ "error": { "kind": e.kind, "message": e.message } });
    eprintln!("{body}");
    ExitCode::from(e.exit_code())
}
