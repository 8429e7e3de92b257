use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fairprompt::analysis::SweepKind;
use fairprompt::fairness::FairnessKind;
use fairprompt::prompt::PromptPlan;
use fairprompt::search::{Strategy, DEFAULT_ENUMERATION_CAP};

#[derive(Debug, Parser)]
#[command(
    name = "fairprompt",
    version,
    about = "Bias-aware demonstration search for few-shot prompts"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Run configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = "results")]
    pub out: PathBuf,

    /// Seeds to run; overrides the config. Repeat or separate with commas.
    #[arg(long = "seed", global = true, value_delimiter = ',')]
    pub seeds: Vec<u64>,

    /// Fairness metric; overrides the config.
    #[arg(long, global = true, value_enum)]
    pub fairness: Option<FairnessArg>,

    /// First attribute input for the kl metric.
    #[arg(long, global = true)]
    pub attr_a: Option<String>,

    /// Second attribute input for the kl metric.
    #[arg(long, global = true)]
    pub attr_b: Option<String>,

    /// Score cache file; overrides the config.
    #[arg(long, global = true)]
    pub cache: Option<PathBuf>,

    /// Serve every score from the cache and fail on a miss.
    #[arg(long, global = true)]
    pub replay: bool,

    /// Worker threads for backend calls.
    #[arg(long, global = true)]
    pub concurrency: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search for a fair demonstration plan.
    Search {
        #[arg(long, value_enum)]
        strategy: StrategyArg,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Score every candidate plan for fairness and accuracy.
    EnumerateEval {
        #[arg(long)]
        calibrate: bool,
        #[command(flatten)]
        cap: CapArgs,
    },
    /// Measure test accuracy of a plan or of a strategy's plan.
    Eval {
        #[command(flatten)]
        plan: PlanSource,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        calibrate: bool,
    },
    /// Pearson correlation between two series of enumeration records.
    Correlate {
        #[arg(long, value_enum, default_value = "accuracy")]
        x: SeriesArg,
        #[arg(long, value_enum, default_value = "accuracy-calibrated")]
        y: SeriesArg,
    },
    /// Accuracy across prefixes, shifts or single demonstrations.
    Sweep {
        #[arg(long, value_enum)]
        kind: SweepArg,
        #[command(flatten)]
        plan: PlanSource,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        calibrate: bool,
    },
    /// Inspect and maintain the score cache.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Debug, Clone, Args)]
pub struct CapArgs {
    /// Largest training set to enumerate.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    pub max_enum: usize,
    /// Acknowledge a --max-enum above the default.
    #[arg(long)]
    pub allow_large_enum: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SearchArgs {
    /// Demonstrations kept by tfair.
    #[arg(long)]
    pub k: Option<usize>,
    /// Whether gfair must select at least one demonstration.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(0..=1))]
    pub min_demos: u8,
    #[command(flatten)]
    pub cap: CapArgs,
}

#[derive(Debug, Clone, Args)]
#[group(multiple = false)]
pub struct PlanSource {
    /// Explicit plan as comma-separated training indices, e.g. 3,1.
    #[arg(long, value_parser = parse_plan)]
    pub plan: Option<PromptPlan>,
    /// Derive the plan with a search strategy.
    #[arg(long, value_enum)]
    pub strategy: Option<StrategyArg>,
}

fn parse_plan(s: &str) -> Result<PromptPlan, String> {
    let indices = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    PromptPlan::new(indices).map_err(|e| e.to_string())
}

#[derive(Debug, Subcommand)]
pub enum CacheAction {
    /// Entry counts per backend and the age range.
    Stats,
    /// Drop old entries.
    Gc {
        /// Age in seconds at which an entry is dropped.
        #[arg(long)]
        max_age: u64,
    },
    /// Write all entries, sorted by key, to a JSONL file.
    Export { path: PathBuf },
    /// Add entries from a JSONL file; existing keys are kept.
    Import { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Tfair,
    Gfair,
    Exhaustive,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Tfair => Strategy::TFair,
            StrategyArg::Gfair => Strategy::GFair,
            StrategyArg::Exhaustive => Strategy::Exhaustive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FairnessArg {
    Entropy,
    MinClass,
    Kl,
}

impl From<FairnessArg> for FairnessKind {
    fn from(f: FairnessArg) -> Self {
        match f {
            FairnessArg::Entropy => FairnessKind::Entropy,
            FairnessArg::MinClass => FairnessKind::MinClass,
            FairnessArg::Kl => FairnessKind::KlAttribute,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SeriesArg {
    Fairness,
    Accuracy,
    AccuracyCalibrated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepArg {
    Amount,
    Permutation,
    Selection,
}

impl From<SweepArg> for SweepKind {
    fn from(s: SweepArg) -> Self {
        match s {
            SweepArg::Amount => SweepKind::Amount,
            SweepArg::Permutation => SweepKind::PermutationShift,
            SweepArg::Selection => SweepKind::Selection,
        }
    }
}
