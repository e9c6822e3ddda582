use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ood_reject::cli::{self, Command, RunConfig};
use ood_reject::posthoc::TuningMode;

#[derive(Parser)]
#[command(name = "ood-reject", version, about = "Reject-option tuning and evaluation under OOD contamination")]
struct Args {
    #[command(subcommand)]
    command: Cmd,
    /// Synthetic world JSON (synth only; defaults to the built-in setup)
    #[arg(long, global = true)]
    setup: Option<PathBuf>,
    /// Score file (tune, curves) or item CSV p_id,p_ood,risk_mass (lp)
    #[arg(long, global = true)]
    scores: Option<PathBuf>,
    /// Tuning model: bounded TPR-FPR or bounded precision-recall
    #[arg(long, global = true, value_enum, default_value = "tpr-fpr")]
    mode: Mode,
    /// Minimal TPR (coverage of ID inputs)
    #[arg(long, global = true)]
    phi_min: Option<f64>,
    /// Maximal FPR (tpr-fpr mode; synth/curves default 0.2)
    #[arg(long, global = true)]
    rho_max: Option<f64>,
    /// Minimal precision (prec-recall mode)
    #[arg(long, global = true)]
    kappa_min: Option<f64>,
    /// OOD prior for precision
    #[arg(long, global = true)]
    pi: Option<f64>,
    /// Sample size (synth)
    #[arg(long, global = true, default_value_t = cli::DEFAULT_N)]
    n: usize,
    /// RNG seed (synth)
    #[arg(long, global = true, default_value_t = cli::DEFAULT_SEED)]
    seed: u64,
    /// Angular grid size of the double-score family
    #[arg(long, global = true, default_value_t = cli::DEFAULT_D)]
    d: usize,
    /// Output directory (required by curves)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Sample the synthetic world and evaluate methods A-D
    Synth,
    /// Tune reject rules on a score file
    Tune,
    /// Emit ROC, PR, risk-coverage and CCR-FPR curves for a score file
    Curves,
    /// Solve the finite bounded TPR-FPR linear program
    Lp,
}

#[derive(ValueEnum, Clone, Copy)]
enum Mode {
    TprFpr,
    PrecRecall,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let config = RunConfig {
        command: match args.command {
            Cmd::Synth => Command::Synth,
            Cmd::Tune => Command::Tune,
            Cmd::Curves => Command::Curves,
            Cmd::Lp => Command::Lp,
        },
        setup_path: args.setup,
        scores_path: args.scores,
        mode: match args.mode {
            Mode::TprFpr => TuningMode::TprFpr,
            Mode::PrecRecall => TuningMode::PrecRecall,
        },
        phi_min: args.phi_min,
        rho_max: args.rho_max,
        kappa_min: args.kappa_min,
        pi: args.pi,
        n: args.n,
        seed: args.seed,
        d: args.d,
        output_dir: args.out,
    };
    let result = cli::run(&config);
    if let Err(e) = &result {
        eprintln!("error: {e}");
    }
    ExitCode::from(cli::exit_code(&result) as u8)
}
