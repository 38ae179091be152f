use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use simulate::config::ExperimentConfig;
use simulate::error::{CliError, Result};
use simulate::stability::{default_case, family_from_flag, CaseSweepArgs};
use simulate::{cavity, convergence, jc, stability};

#[derive(Parser)]
#[command(name = "simulate", version, about = "Lindblad low-rank integrator experiments")]
struct Cli {
    /// Experiment configuration file (JSON); optional, defaults apply.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// convergence | qudit-cavity | jc-revival | jc-scan | stability-region
    #[arg(long)]
    experiment: Option<String>,

    /// Output directory for CSV tables and the run manifest.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Single-qubit stability sweep for one scheme and test case.
    Stability {
        #[arg(long)]
        order: u8,
        /// ex | im
        #[arg(long)]
        family: String,
        /// decay | dephasing
        #[arg(long)]
        case: String,
        #[arg(long, default_value_t = 1e-3)]
        dt_min: f64,
        #[arg(long, default_value_t = 1e2)]
        dt_max: f64,
        #[arg(long, default_value_t = 400)]
        points: usize,
    },
}

fn run(cli: &Cli) -> Result<()> {
    let config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let config_dir = cli.config.as_deref().and_then(|p| p.parent());

    if let Some(Command::Stability { order, family, case, dt_min, dt_max, points }) = &cli.command
    {
        if !(1..=4).contains(order) {
            return Err(CliError::Config(format!("order must be 1..=4, got {order}")));
        }
        let family = family_from_flag(family)
            .ok_or_else(|| CliError::Config(format!("unknown family '{family}' (ex | im)")))?;
        let case = default_case(case)
            .ok_or_else(|| CliError::Config(format!("unknown case '{case}' (decay | dephasing)")))?;
        return stability::run_case_sweep(
            &CaseSweepArgs {
                order: *order,
                family,
                case,
                dt_min: *dt_min,
                dt_max: *dt_max,
                points: *points,
            },
            &cli.out,
        );
    }

    let experiment = cli
        .experiment
        .clone()
        .or_else(|| config.experiment.clone())
        .ok_or_else(|| CliError::Config("no experiment selected (--experiment)".into()))?;
    match experiment.as_str() {
        "convergence" => convergence::run_to_dir(&config, &cli.out),
        "qudit-cavity" => {
            let model = config.load_model(config_dir)?;
            cavity::run_to_dir(&config, &model, &cli.out)
        }
        "jc-revival" => jc::run_revival_to_dir(&config, &cli.out),
        "jc-scan" => jc::run_scan_to_dir(&config, &cli.out),
        "stability-region" => stability::run_regions_to_dir(&config, &cli.out),
        other => Err(CliError::Config(format!(
            "unknown experiment '{other}' (convergence | qudit-cavity | jc-revival | jc-scan | stability-region)"
        ))),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
