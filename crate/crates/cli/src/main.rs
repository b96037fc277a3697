//! `tmatch`: experiment driver for threshold-approval matching.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 size-limit refusal.

mod commands;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "tmatch",
    version,
    about = "Threshold-approval matching mechanisms and exact distortion"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Elicit threshold approval sets from an instance.
    Elicit(ElicitArgs),
    /// Run a mechanism on an input profile.
    Run(RunArgs),
    /// Elicit, run a mechanism and compute its exact distortion.
    Distortion(DistortionArgs),
    /// Sweep random instances and write one CSV row per trial.
    Sweep(SweepArgs),
    /// Write a lower-bound instance and its input profile.
    GenAdversarial(AdversarialArgs),
    /// Print the min-cost flow network of a generalized instance.
    FlowDump(FlowDumpArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum MechanismName {
    Ft,
    Rt,
    Gt,
    Grt,
}

impl MechanismName {
    pub fn label(self) -> &'static str {
        match self {
            MechanismName::Ft => "ft",
            MechanismName::Rt => "rt",
            MechanismName::Gt => "gt",
            MechanismName::Grt => "grt",
        }
    }

    pub fn generalized(self) -> bool {
        matches!(self, MechanismName::Gt | MechanismName::Grt)
    }
}

/// Thresholds: an explicit list, or `t` geometric levels with ratio `delta`
/// (defaulting to the mechanism's own choice).
#[derive(Args, Clone, Debug)]
pub struct ThresholdArgs {
    /// Number of thresholds.
    #[arg(long, default_value_t = 1)]
    pub t: usize,
    /// Ratio between consecutive thresholds.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Explicit decreasing thresholds, comma separated; overrides --t/--delta.
    #[arg(long, value_delimiter = ',')]
    pub taus: Option<Vec<f64>>,
}

#[derive(Args)]
pub struct ElicitArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
    /// Write the input profile here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct RunArgs {
    /// Input profile JSON.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub mechanism: MechanismName,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Instance supplying capacities and supplies (gt, grt).
    #[arg(long)]
    pub instance: Option<PathBuf>,
}

#[derive(Args)]
pub struct DistortionArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, value_enum)]
    pub mechanism: MechanismName,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the worst-case alternative and utility profile here.
    #[arg(long)]
    pub witness_out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SweepArgs {
    /// Agent counts: `3..5` (inclusive), `3,4,5` or `4`.
    #[arg(long, default_value = "3..5")]
    pub n_range: String,
    #[arg(long, default_value = "1..2")]
    pub t_range: String,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "ft")]
    pub mechanisms: Vec<MechanismName>,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    /// Master seed; each trial derives its own.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fill the runtime_ms column (makes the output nondeterministic).
    #[arg(long)]
    pub timing: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Family {
    /// Largest-gap construction against a given mechanism.
    Gap,
    /// All-empty profile against the deterministic mechanism.
    EmptyDet,
    /// All-empty profile against the randomized mechanism.
    EmptyRand,
}

#[derive(Args)]
pub struct AdversarialArgs {
    #[arg(long, value_enum)]
    pub family: Family,
    #[arg(long)]
    pub n: usize,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
    /// Target mechanism for the gap family.
    #[arg(long, value_enum, default_value = "ft")]
    pub mechanism: MechanismName,
    /// Gap level; defaults to the largest gap.
    #[arg(long)]
    pub k: Option<usize>,
    /// Instance JSON output path.
    #[arg(long)]
    pub out_instance: PathBuf,
    /// Input profile JSON output path.
    #[arg(long)]
    pub out_input: Option<PathBuf>,
}

#[derive(Args)]
pub struct FlowDumpArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Approval input profile; values come from its thresholds. Without it
    /// the instance's own marginals are used.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Elicit(a) => commands::elicit(a),
        Command::Run(a) => commands::run(a),
        Command::Distortion(a) => commands::distortion(a),
        Command::Sweep(a) => sweep::sweep(a),
        Command::GenAdversarial(a) => commands::gen_adversarial(a),
        Command::FlowDump(a) => commands::flow_dump(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
