use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sipforge::prefix::{Method, DEFAULT_SINKHORN_ITERS, DEFAULT_TEMPERATURE};
use sipforge::sampling::{CorpusConfig, TargetChoice, VocabPool, DEFAULT_STOP_PROB};

#[derive(Debug, Parser)]
#[command(
    name = "sip-forge",
    version,
    about = "Synthetic FST task generation, splits, probing and prefix analysis"
)]
pub struct Cli {
    /// Run all tasks on the calling thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a pre-training corpus of FSTs and input/output pairs.
    GenPretrain(GenPretrainArgs),
    /// Build a train/test split for one freshly sampled FST.
    GenSplit(GenSplitArgs),
    /// Sample examples of the deduplication (Set) task.
    GenSet(GenSetArgs),
    /// Replay the invariants of a generated dataset directory.
    Verify(VerifyArgs),
    /// Score newline-delimited predictions against gold outputs.
    Eval(EvalArgs),
    /// Attach gold state sequences to a corpus and score the heuristic baseline.
    ProbeOracle(ProbeOracleArgs),
    /// Score predicted state sequences against gold ones up to state renaming.
    ProbeScore(ProbeScoreArgs),
    /// Compare prefixes, or learned prefixes against gold and distractor FSTs.
    PrefixSim(PrefixSimArgs),
    /// Convert tab-separated input/output pairs to JSONL records.
    IngestTsv(IngestTsvArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorpusModeArg {
    Det,
    Bimachine,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetChoiceArg {
    PerSymbol,
    PerState,
}

impl From<TargetChoiceArg> for TargetChoice {
    fn from(t: TargetChoiceArg) -> Self {
        match t {
            TargetChoiceArg::PerSymbol => TargetChoice::PerSymbol,
            TargetChoiceArg::PerState => TargetChoice::PerState,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VocabPoolArg {
    Full,
    Ascii,
}

impl From<VocabPoolArg> for VocabPool {
    fn from(v: VocabPoolArg) -> Self {
        match v {
            VocabPoolArg::Full => VocabPool::Full,
            VocabPoolArg::Ascii => VocabPool::Ascii,
        }
    }
}

fn corpus_default() -> CorpusConfig {
    CorpusConfig::default()
}

#[derive(Clone, Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct GenPretrainArgs {
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = corpus_default().num_tasks)]
    pub tasks: usize,
    #[arg(long, default_value_t = corpus_default().pairs_per_task)]
    pub pairs_per_task: usize,
    #[arg(long, default_value_t = corpus_default().min_input_len)]
    pub min_len: usize,
    #[arg(long, default_value_t = corpus_default().max_input_len)]
    pub max_len: usize,
    #[arg(long, default_value_t = corpus_default().min_states)]
    pub states_min: usize,
    #[arg(long, default_value_t = corpus_default().max_states)]
    pub states_max: usize,
    #[arg(long, default_value_t = corpus_default().min_vocab)]
    pub vocab_min: usize,
    #[arg(long, default_value_t = corpus_default().max_vocab)]
    pub vocab_max: usize,
    #[arg(long, value_enum, default_value_t = CorpusModeArg::Det)]
    pub mode: CorpusModeArg,
    /// Left automaton states (bimachine mode).
    #[arg(long, default_value_t = 2)]
    pub left_min: usize,
    #[arg(long, default_value_t = 3)]
    pub left_max: usize,
    /// Right automaton states (bimachine mode).
    #[arg(long, default_value_t = 2)]
    pub right_min: usize,
    #[arg(long, default_value_t = 3)]
    pub right_max: usize,
    #[arg(long, default_value_t = corpus_default().p_id)]
    pub p_id: f64,
    /// Defaults to 0.4 for deterministic and 0.6 for bimachine corpora.
    #[arg(long)]
    pub p_drop: Option<f64>,
    #[arg(long, default_value_t = corpus_default().p_shorthand)]
    pub p_shorthand: f64,
    /// Probability of stopping at each final state during input walks.
    #[arg(long, default_value_t = DEFAULT_STOP_PROB)]
    pub stop_prob: f64,
    #[arg(long, value_enum, default_value_t = TargetChoiceArg::PerSymbol)]
    pub target_choice: TargetChoiceArg,
    #[arg(long, value_enum, default_value_t = VocabPoolArg::Full)]
    pub vocab_pool: VocabPoolArg,
    #[arg(long, default_value_t = corpus_default().max_retries)]
    pub max_retries: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitModeArg {
    Iteration,
    Uc,
    Length,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
pub enum BandArg {
    #[value(name = "40-70")]
    #[serde(rename = "40-70")]
    B40to70,
    #[value(name = "90-110")]
    #[serde(rename = "90-110")]
    B90to110,
}

#[derive(Clone, Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct GenSplitArgs {
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_enum)]
    pub mode: SplitModeArg,
    /// Stream id of the task under the master seed; also its record id.
    #[arg(long, default_value_t = 0)]
    pub task_id: u64,
    #[arg(long, default_value_t = 4)]
    pub states: usize,
    #[arg(long, default_value_t = 5000)]
    pub train: usize,
    #[arg(long, default_value_t = 1000)]
    pub test: usize,
    /// Upper bound on withheld transition pairs (uc mode).
    #[arg(long, default_value_t = 20)]
    pub pairs: usize,
    /// Test length band (length mode).
    #[arg(long, value_enum, default_value_t = BandArg::B40to70)]
    pub band: BandArg,
    #[arg(long, default_value_t = 25)]
    pub vocab_size: usize,
    /// Draw the vocabulary at random from printable ASCII instead of taking
    /// its first symbols.
    #[arg(long)]
    pub random_vocab: bool,
    /// FSTs to try before giving up on the split quotas.
    #[arg(long, default_value_t = 50)]
    pub fst_retries: usize,
}

#[derive(Clone, Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct GenSetArgs {
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 5000)]
    pub train: usize,
    #[arg(long, default_value_t = 1000)]
    pub test: usize,
}

#[derive(Clone, Debug, Args)]
pub struct VerifyArgs {
    /// Directory written by gen-split, gen-pretrain or gen-set.
    pub dir: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Json,
}

#[derive(Clone, Debug, Args)]
pub struct EvalArgs {
    /// One prediction per line, in gold order.
    #[arg(long)]
    pub pred: PathBuf,
    /// Gold JSONL records or tab-separated pairs.
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    pub format: ReportFormat,
}

#[derive(Clone, Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct ProbeOracleArgs {
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    /// Corpus directory written by gen-pretrain.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Also score the heuristic baseline, drawing its guesses from this seed.
    #[arg(long)]
    pub heuristic_seed: Option<u64>,
}

#[derive(Clone, Debug, Args)]
pub struct ProbeScoreArgs {
    /// JSONL records carrying predicted `states`.
    #[arg(long)]
    pub pred: PathBuf,
    /// JSONL records carrying gold `states`.
    #[arg(long)]
    pub gold: PathBuf,
    /// State count of the gold machine.
    #[arg(long)]
    pub num_states: usize,
    /// Write the row-normalized confusion matrix here as CSV.
    #[arg(long)]
    pub confusion: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    pub format: ReportFormat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Exact,
    Sinkhorn,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Exact => Method::Exact,
            MethodArg::Sinkhorn => Method::Sinkhorn,
        }
    }
}

#[derive(Clone, Debug, Args)]
pub struct PrefixSimArgs {
    /// Prefix files to compare pairwise.
    pub prefixes: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = MethodArg::Exact)]
    pub method: MethodArg,
    #[arg(long, default_value_t = DEFAULT_TEMPERATURE)]
    pub temperature: f64,
    #[arg(long, default_value_t = DEFAULT_SINKHORN_ITERS)]
    pub iters: usize,
    /// Linear embedder JSON; switches to gold-vs-distractor mode.
    #[arg(long)]
    pub embedder: Option<PathBuf>,
    /// Learned prefix of a task (repeat once per task).
    #[arg(long)]
    pub learned: Vec<PathBuf>,
    /// Split directory of the same task, in `--learned` order.
    #[arg(long)]
    pub task_dir: Vec<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    pub distractors: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, Args)]
pub struct IngestTsvArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub task_id: u64,
}
