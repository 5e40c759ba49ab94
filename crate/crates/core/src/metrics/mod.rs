//! Sentence- and corpus-level evaluation measures.

mod bleu;
mod edits;
mod grammar;
mod levenshtein;
mod readability;
mod rouge;
mod style;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Sentence;
use crate::error::{Error, Result};
use crate::lexicon::{Dictionary, Stopwords};
use crate::lm::NGramModel;
use crate::quality::spell_check;

pub use bleu::{bleu, sentence_bleu, sentence_stats, BleuSmoothing, BleuStats, MAX_ORDER};
pub use edits::{
    apply_edits, classify_edit, edit_prf, extract_edits, extract_token_edits, f_beta, EditScore, EditSpan, EditType,
};
pub use grammar::{grammaticality, grammaticality_score, ErrorDetector, RuleDetector};
pub use levenshtein::{levenshtein, levenshtein_char, levenshtein_within};
pub use readability::{count_syllables, flesch_reading_ease, fre, word_and_syllable_counts};
pub use rouge::{lcs_len, rouge_l, ROUGE_L_BETA};
pub use style::{is_past_participle, passive_voice, word_repetition, DEFAULT_REPETITION_WINDOW};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub bleu_smoothing: BleuSmoothing,
    pub repetition_window: usize,
    /// Spell-check hypotheses before scoring.
    pub spellcheck_hyp: bool,
    pub detector: RuleDetector,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            bleu_smoothing: BleuSmoothing::default(),
            repetition_window: DEFAULT_REPETITION_WINDOW,
            spellcheck_hyp: false,
            detector: RuleDetector::default(),
        }
    }
}

/// Measures for one (source, hypothesis, reference) triple. Metrics that
/// fail for a record are `None` and named in `flags`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMetrics {
    pub index: usize,
    pub bleu: f64,
    pub bleu_stats: BleuStats,
    pub rouge_l: f64,
    pub levenshtein_char: usize,
    pub grammaticality: Option<f64>,
    pub fre: Option<f64>,
    pub ppl: Option<f64>,
    pub passive: bool,
    pub repetition: bool,
    pub edits: EditScore,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub pairs: usize,
    pub corpus_bleu: f64,
    pub mean_rouge_l: f64,
    /// Micro-averaged over all edits in the corpus.
    pub precision: f64,
    pub recall: f64,
    pub f05: f64,
    pub mean_grammaticality: Option<f64>,
    pub mean_fre: Option<f64>,
    pub mean_ppl: Option<f64>,
    pub mean_levenshtein_char: f64,
    pub passive_pct: f64,
    pub repetition_pct: f64,
    /// Records excluded from a mean, per metric.
    pub skipped: Skipped,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skipped {
    pub rouge_l: usize,
    pub grammaticality: usize,
    pub fre: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub config: EvalConfig,
    pub aggregates: Aggregates,
    pub pairs: Vec<PairMetrics>,
}

/// Shared resources for evaluation.
pub struct EvalContext<'a> {
    pub dictionary: &'a Dictionary,
    pub stopwords: &'a Stopwords,
    pub lm: Option<&'a NGramModel>,
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn evaluate_pair(
    index: usize,
    source: &Sentence,
    hypothesis: &Sentence,
    reference: &Sentence,
    cfg: &EvalConfig,
    ctx: &EvalContext<'_>,
) -> PairMetrics {
    let checked;
    let hyp = if cfg.spellcheck_hyp {
        checked = Sentence::new(spell_check(hypothesis, ctx.dictionary).corrected_text);
        &checked
    } else {
        hypothesis
    };
    let mut flags = Vec::new();
    let bleu_stats = sentence_stats(hyp, reference);
    let rouge = rouge_l(hyp, reference).unwrap_or_else(|e| {
        flags.push(format!("rouge_l: {e}"));
        0.0
    });
    let gram = grammaticality(hyp, &cfg.detector)
        .map_err(|e| flags.push(format!("grammaticality: {e}")))
        .ok();
    let fre = fre(hyp).map_err(|e| flags.push(format!("fre: {e}"))).ok();
    PairMetrics {
        index,
        bleu: bleu_stats.score(cfg.bleu_smoothing),
        bleu_stats,
        rouge_l: rouge,
        levenshtein_char: levenshtein_char(hyp.text(), reference.text()),
        grammaticality: gram,
        fre,
        ppl: ctx.lm.map(|lm| lm.perplexity(hyp)),
        passive: passive_voice(hyp),
        repetition: word_repetition(hyp, cfg.repetition_window, ctx.stopwords),
        edits: edit_prf(source, hyp, reference, ctx.dictionary),
        flags,
    }
}

/// Recomputes corpus aggregates from per-pair records, in index order.
pub fn aggregate(pairs: &[PairMetrics], cfg: &EvalConfig) -> Aggregates {
    let n = pairs.len();
    let mut stats = BleuStats::default();
    let (mut tp, mut hyp_edits, mut gold_edits) = (0, 0, 0);
    for p in pairs {
        stats.add(&p.bleu_stats);
        tp += p.edits.true_positives;
        hyp_edits += p.edits.hyp_edits;
        gold_edits += p.edits.gold_edits;
    }
    let edits = EditScore::from_counts(tp, hyp_edits, gold_edits);
    let rouge_ok = || pairs.iter().filter(|p| !p.flags.iter().any(|f| f.starts_with("rouge_l")));
    let pct = |count: usize| if n == 0 { 0.0 } else { 100.0 * count as f64 / n as f64 };
    Aggregates {
        pairs: n,
        corpus_bleu: if n == 0 { 0.0 } else { stats.score(cfg.bleu_smoothing) },
        mean_rouge_l: mean_of(rouge_ok().map(|p| p.rouge_l)).unwrap_or(0.0),
        precision: edits.precision,
        recall: edits.recall,
        f05: edits.f05,
        mean_grammaticality: mean_of(pairs.iter().filter_map(|p| p.grammaticality)),
        mean_fre: mean_of(pairs.iter().filter_map(|p| p.fre)),
        mean_ppl: mean_of(pairs.iter().filter_map(|p| p.ppl)),
        mean_levenshtein_char: mean_of(pairs.iter().map(|p| p.levenshtein_char as f64)).unwrap_or(0.0),
        passive_pct: pct(pairs.iter().filter(|p| p.passive).count()),
        repetition_pct: pct(pairs.iter().filter(|p| p.repetition).count()),
        skipped: Skipped {
            rouge_l: n - rouge_ok().count(),
            grammaticality: pairs.iter().filter(|p| p.grammaticality.is_none()).count(),
            fre: pairs.iter().filter(|p| p.fre.is_none()).count(),
        },
    }
}

/// Scores aligned sources, hypotheses and references. Pairs are scored in
/// parallel; the report is independent of thread count.
pub fn evaluate(
    sources: &[Sentence],
    hypotheses: &[Sentence],
    references: &[Sentence],
    cfg: &EvalConfig,
    ctx: &EvalContext<'_>,
) -> Result<EvalReport> {
    if sources.len() != hypotheses.len() {
        return Err(Error::LengthMismatch(sources.len(), hypotheses.len()));
    }
    if hypotheses.len() != references.len() {
        return Err(Error::LengthMismatch(hypotheses.len(), references.len()));
    }
    if hypotheses.is_empty() {
        return Err(Error::EmptyInput("evaluation set"));
    }
    let pairs: Vec<PairMetrics> = (0..hypotheses.len())
        .into_par_iter()
        .map(|i| evaluate_pair(i, &sources[i], &hypotheses[i], &references[i], cfg, ctx))
        .collect();
    Ok(EvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config: cfg.clone(),
        aggregates: aggregate(&pairs, cfg),
        pairs,
    })
}
