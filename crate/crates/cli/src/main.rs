use std::fs::File;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rllab_cli::config::ExperimentConfig;
use rllab_cli::plot::{plot_csv, PlotSpec};
use rllab_cli::runner::run_experiment;
use rllab_cli::CliError;
use rllab_core::ldlr::{ldlr_norm_squared, Hypotheses, LdlrParams};

#[derive(Parser)]
#[command(name = "rllab", version, about = "Rescaled Lasso and negative-spike sparse PCA experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run { config: PathBuf },
    /// Render a CSV table as an SVG scatter plot.
    Plot {
        csv: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long)]
        group: Option<String>,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        log_x: bool,
        #[arg(long)]
        log_y: bool,
        #[arg(long)]
        title: Option<String>,
    },
    /// Exact low-degree likelihood ratio norm for one parameter set.
    Ldlr {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        k: u64,
        #[arg(long)]
        m: u64,
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        #[arg(long)]
        degree: u64,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let summary = run_experiment(&cfg)?;
            print!("{summary}");
            println!("wrote {}", cfg.output.display());
            if let Some(p) = &cfg.plot {
                println!("wrote {}", p.display());
            }
        }
        Command::Plot {
            csv,
            x,
            y,
            group,
            output,
            log_x,
            log_y,
            title,
        } => {
            let spec = PlotSpec {
                x,
                y,
                group,
                log_x,
                log_y,
                title,
            };
            let svg = plot_csv(File::open(&csv)?, &spec)?;
            std::fs::write(&output, svg)?;
        }
        Command::Ldlr { n, k, m, beta, degree } => {
            let params = LdlrParams { n, k, m, beta, degree };
            let value = ldlr_norm_squared(&params)?;
            let h = Hypotheses::check(&params);
            println!("norm_squared = {value}");
            println!(
                "hypotheses: lower {}, upper {}, degree below samples {}",
                h.lower, h.upper, h.degree_below_samples
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
