mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::Config;

/// Draft-sentence corpus tools: extraction, language models, synthetic
/// noising, crowdwork quality control, evaluation and dataset analysis.
#[derive(Debug, Parser)]
#[command(name = "draftkit", version)]
pub struct Cli {
    /// Global RNG seed; overrides every seeded config section.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML config file, or a run manifest (*.json) to replay.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print the fully resolved configuration as TOML and exit.
    #[arg(long, global = true)]
    pub dump_config: bool,
    /// Worker threads for parallel stages; outputs do not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sentence collection filters and token counts.
    #[command(subcommand)]
    Corpus(CorpusCmd),
    /// Train and query n-gram language models.
    #[command(subcommand)]
    Lm(LmCmd),
    /// Synthetic draft generation.
    #[command(subcommand)]
    Noise(NoiseCmd),
    /// Crowdwork quality control.
    #[command(subcommand)]
    Quality(QualityCmd),
    /// System evaluation.
    #[command(subcommand)]
    Eval(EvalCmd),
    /// Dataset statistics.
    #[command(subcommand)]
    Stats(StatsCmd),
    /// Draft-versus-reference contrasts.
    #[command(subcommand)]
    Analysis(AnalysisCmd),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FilterMode {
    /// Character-length and forbidden-character filter for final sentences.
    Final,
    /// Token-length, alphabetic-ratio and exclusion filter for training text.
    Training,
}

#[derive(Debug, Subcommand)]
pub enum CorpusCmd {
    /// Keep the sentences that pass a selection filter.
    Extract(ExtractArgs),
    /// Write token<TAB>count frequencies of a sentence file.
    Counts(CountsArgs),
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "final")]
    pub mode: FilterMode,
    /// Sentences (or pair file references) that must not appear in the output.
    #[arg(long)]
    pub exclude: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CountsArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SmoothingArg {
    Kn,
    AddK,
}

#[derive(Debug, Subcommand)]
pub enum LmCmd {
    /// Train a model and write it in ARPA format.
    Train(LmTrainArgs),
    /// Per-sentence perplexities of a sentence file.
    Ppl(LmPplArgs),
}

#[derive(Debug, Args)]
pub struct LmTrainArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long, value_enum)]
    pub smoothing: Option<SmoothingArg>,
    /// Additive constant for add-k smoothing.
    #[arg(long)]
    pub k: Option<f64>,
}

#[derive(Debug, Args)]
pub struct LmPplArgs {
    #[arg(long)]
    pub lm: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum NoiseCmd {
    /// Turn clean sentences into (synthetic draft, sentence) pairs.
    Run(NoiseRunArgs),
}

#[derive(Debug, Args)]
pub struct NoiseRunArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// token<TAB>count file for the replacement vocabulary; defaults to
    /// counts over the input.
    #[arg(long)]
    pub vocab_counts: Option<PathBuf>,
    /// Per-sentence stage counts as JSON lines.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub delete_p: Option<f64>,
    #[arg(long)]
    pub replace_p: Option<f64>,
    #[arg(long)]
    pub replace_vocab_min_count: Option<u64>,
    #[arg(long)]
    pub shuffle_k: Option<usize>,
    #[arg(long)]
    pub mask_fraction_max: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum QualityCmd {
    /// Score crowdworker submissions (JSON lines) into verdicts.
    ScoreWorkers(ScoreWorkersArgs),
    /// Drop pairs whose content-word overlap is below alpha.
    FilterPairs(FilterPairsArgs),
    /// Print the bundled stopword list.
    Stopwords,
}

#[derive(Debug, Args)]
pub struct ScoreWorkersArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FilterPairsArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub kept: PathBuf,
    #[arg(long)]
    pub removed: PathBuf,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum EvalCmd {
    /// Score system outputs against references.
    Run(EvalRunArgs),
}

#[derive(Debug, Args)]
pub struct EvalRunArgs {
    /// Drafts given to the system.
    #[arg(long)]
    pub src: PathBuf,
    #[arg(long)]
    pub hyp: PathBuf,
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long)]
    pub lm: Option<PathBuf>,
    #[arg(long)]
    pub report: PathBuf,
    /// Spell-check hypotheses before scoring.
    #[arg(long)]
    pub spellcheck_hyp: bool,
}

#[derive(Debug, Subcommand)]
pub enum StatsCmd {
    /// Pair statistics, per-side linguistic profile and edit types.
    Dataset(StatsArgs),
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub lm: Option<PathBuf>,
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum AnalysisCmd {
    /// Words and bigrams characteristic of drafts or references.
    Terms(TermsArgs),
}

#[derive(Debug, Args)]
pub struct TermsArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub top_k: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
}

/// Failure classes mapped to process exit codes.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Data(e)
    }
}

fn resolve_config(cli: &Cli) -> Result<Config, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p).map_err(|e| Failure::Usage(format!("{e:#}")))?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.set_seed(seed);
    }
    if let Some(cmd) = &cli.command {
        commands::apply_overrides(cmd, &mut cfg);
    }
    cfg.validate().map_err(|e| Failure::Usage(format!("invalid configuration: {e:#}")))?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Failure::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Failure::Usage(format!("cannot size thread pool: {e}")))?;
    }
    let cfg = resolve_config(&cli)?;
    if cli.dump_config {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    let Some(cmd) = &cli.command else {
        return Err(Failure::Usage("no subcommand given; see --help".into()));
    };
    commands::dispatch(cmd, &cfg, cli.jobs)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(msg) => eprintln!("error: {msg}\n\nRun `draftkit --help` for usage."),
                Failure::Data(e) => eprintln!("error: {e:#}"),
            }
            ExitCode::from(f.code())
        }
    }
}
