use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use split_inr::cli::{self, AnalyzeConfig, AnalyzeKind, RunConfig};

/// Coordinate networks with split layers: training, reconstruction and analysis.
#[derive(Parser)]
#[command(name = "split-inr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Options {
    /// JSON file with flat kebab-case keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Any config key as `--key value`, overriding the file.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Fit an image from pixel coordinates.
    FitImage(Options),
    /// Reconstruct a density from simulated or stored projections.
    ReconCt(Options),
    /// Fit a 3D occupancy field and report chamfer distance.
    FitOccupancy(Options),
    /// Feature-space, kernel and expansion diagnostics.
    Analyze {
        #[arg(value_enum)]
        kind: Analysis,
        #[command(flatten)]
        options: Options,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Analysis {
    Dim,
    OptimalSplit,
    Ntk,
    Features,
    Expand,
    Sweep,
}

fn run(cli: Cli) -> split_inr::Result<()> {
    let report = match cli.command {
        Command::FitImage(o) => cli::cmd_fit_image(cli::load::<RunConfig>(o.config.as_deref(), &o.overrides)?)?,
        Command::ReconCt(o) => cli::cmd_recon_ct(cli::load::<RunConfig>(o.config.as_deref(), &o.overrides)?)?,
        Command::FitOccupancy(o) => cli::cmd_fit_occupancy(cli::load::<RunConfig>(o.config.as_deref(), &o.overrides)?)?,
        Command::Analyze { kind, options } => {
            let cfg = cli::load::<AnalyzeConfig>(options.config.as_deref(), &options.overrides)?;
            let kind = match kind {
                Analysis::Dim => AnalyzeKind::Dim,
                Analysis::OptimalSplit => AnalyzeKind::OptimalSplit,
                Analysis::Ntk => AnalyzeKind::Ntk,
                Analysis::Features => AnalyzeKind::Features,
                Analysis::Expand => AnalyzeKind::Expand,
                Analysis::Sweep => AnalyzeKind::Sweep,
            };
            let path = cli::cmd_analyze(kind, cfg)?;
            eprintln!("wrote {}", path.display());
            return Ok(());
        }
    };
    println!("{} = {:.6}", report.metric, report.final_metric);
    eprintln!("wrote {}", report.artifacts.join(", "));
    Ok(())
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
