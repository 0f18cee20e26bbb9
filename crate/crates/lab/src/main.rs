use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use shadowrdm_lab::config::ExperimentKind;
use shadowrdm_lab::{run_experiment, ExperimentConfig, LabError, LabResult, RunOptions};

#[derive(Parser)]
#[command(name = "shadowrdm", version, about = "Fermionic shadow RDM experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cumulant versus direct 3-RDM accuracy ratio over σ and shots.
    RatioSweep(RunArgs),
    /// QSE excited-state energy error against shot count.
    QseShots(RunArgs),
    /// Signed QSE energy difference over shots and depolarizing rate.
    QseNoiseHeatmap(RunArgs),
    /// Half-chain entanglement entropy of random ansatz states.
    EntropySweep(RunArgs),
    /// Estimate RDM tensors of a single state.
    RdmEstimate(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed_offset: u64,
}

fn run(kind: ExperimentKind, args: &RunArgs) -> LabResult<()> {
    if let Some(k) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| LabError::Config(format!("thread pool: {e}")))?;
    }
    let cfg = ExperimentConfig::load(&args.config)?;
    if cfg.kind != kind {
        return Err(LabError::Config(format!("config is for {}, not {}", cfg.kind.name(), kind.name())));
    }
    let opts = RunOptions { seed_offset: args.seed_offset, ..RunOptions::default() };
    let report = run_experiment(&cfg, &opts, &args.out)?;
    eprintln!(
        "{}: {} rows written to {}",
        kind.name(),
        report.rows.len(),
        args.out.join("results.csv").display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::RatioSweep(a) => (ExperimentKind::RatioSweep, a),
        Command::QseShots(a) => (ExperimentKind::QseShots, a),
        Command::QseNoiseHeatmap(a) => (ExperimentKind::QseNoiseHeatmap, a),
        Command::EntropySweep(a) => (ExperimentKind::EntropySweep, a),
        Command::RdmEstimate(a) => (ExperimentKind::RdmEstimate, a),
    };
    match run(kind, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{report}");
            ExitCode::FAILURE
        }
    }
}
