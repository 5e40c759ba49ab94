//! Crowdwork quality control: worker scoring, spell checking, language
//! heuristics and the unigram overlap pair filter.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{is_punct_token, is_word_token, token_spans, DraftPair, Sentence, MASK_TOKEN};
use crate::error::{Error, Result};
use crate::lexicon::{Dictionary, Stopwords};
use crate::metrics::{levenshtein_char, levenshtein_within};

// ---------------------------------------------------------------------------
// spell checking

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Correction {
    /// Index of the token in the original sentence.
    pub token: usize,
    pub original: String,
    pub replacement: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpellCheckResult {
    pub corrected_text: String,
    pub corrections: Vec<Correction>,
}

impl SpellCheckResult {
    /// Re-applies the corrections to `original`, token by token.
    pub fn apply(&self, original: &str) -> String {
        apply_corrections(original, &self.corrections)
    }
}

fn apply_corrections(text: &str, corrections: &[Correction]) -> String {
    let spans = token_spans(text);
    let mut out = String::with_capacity(text.len());
    let mut cursor = 0;
    for c in corrections {
        let span = &spans[c.token];
        out.push_str(&text[cursor..span.start]);
        out.push_str(&c.replacement);
        cursor = span.end;
    }
    out.push_str(&text[cursor..]);
    out
}

enum Casing {
    Lower,
    Capitalized,
}

fn casing(token: &str) -> Option<Casing> {
    let mut chars = token.chars();
    let first = chars.next()?;
    let rest_lower = chars.all(char::is_lowercase);
    match (first.is_lowercase(), first.is_uppercase(), rest_lower) {
        (true, _, true) => Some(Casing::Lower),
        (_, true, true) => Some(Casing::Capitalized),
        // acronyms and mixed case are left alone
        _ => None,
    }
}

/// Most frequent dictionary word within distance 1, else within distance 2.
/// Frequency ties go to the lexicographically smaller word.
pub fn best_candidate<'d>(word: &str, dictionary: &'d Dictionary) -> Option<&'d str> {
    let chars: Vec<char> = word.chars().collect();
    let mut best: [Option<(&str, u64)>; 2] = [None, None];
    for (cand, freq) in dictionary.iter() {
        let cand_chars: Vec<char> = cand.chars().collect();
        let Some(d) = levenshtein_within(&chars, &cand_chars, 2) else {
            continue;
        };
        if d == 0 {
            return None;
        }
        let slot = &mut best[d - 1];
        let better = match slot {
            None => true,
            Some((w, f)) => freq > *f || (freq == *f && cand < *w),
        };
        if better {
            *slot = Some((cand, freq));
        }
    }
    best[0].or(best[1]).map(|(w, _)| w)
}

/// Replaces out-of-dictionary alphabetic tokens by their best candidate.
/// `<*>`, numbers, punctuation, acronyms and tokens without a candidate are
/// kept as they are.
pub fn spell_check(s: &Sentence, dictionary: &Dictionary) -> SpellCheckResult {
    let mut corrections = Vec::new();
    for (i, tok) in s.tokens().iter().enumerate() {
        if tok == MASK_TOKEN || !tok.chars().all(char::is_alphabetic) || dictionary.contains(tok) {
            continue;
        }
        let Some(case) = casing(tok) else { continue };
        let lower = tok.to_lowercase();
        let Some(cand) = best_candidate(&lower, dictionary) else {
            continue;
        };
        let replacement = match case {
            Casing::Lower => cand.to_string(),
            Casing::Capitalized => {
                let mut c = cand.chars();
                c.next()
                    .map(|f| f.to_uppercase().chain(c).collect())
                    .unwrap_or_default()
            }
        };
        corrections.push(Correction {
            token: i,
            original: tok.clone(),
            replacement,
        });
    }
    SpellCheckResult {
        corrected_text: apply_corrections(s.text(), &corrections),
        corrections,
    }
}

// ---------------------------------------------------------------------------
// language heuristics

/// Hiragana, Katakana (including phonetic extensions and half-width forms)
/// or CJK Unified Ideographs (including extension A).
pub fn is_japanese_char(c: char) -> bool {
    matches!(c,
        '\u{3040}'..='\u{309F}'
        | '\u{30A0}'..='\u{30FF}'
        | '\u{31F0}'..='\u{31FF}'
        | '\u{FF66}'..='\u{FF9F}'
        | '\u{3400}'..='\u{4DBF}'
        | '\u{4E00}'..='\u{9FFF}')
}

pub fn contains_japanese(text: &str) -> bool {
    text.chars().any(is_japanese_char)
}

pub const DEFAULT_ENGLISH_THRESHOLD: f64 = 0.5;

/// Share of alphabetic tokens found in `dictionary`, or `None` when there
/// are no alphabetic tokens.
pub fn dictionary_hit_rate(text: &str, dictionary: &Dictionary) -> Option<f64> {
    let spans = token_spans(text);
    let words: Vec<&str> = spans
        .into_iter()
        .map(|r| &text[r])
        .filter(|t| is_word_token(t))
        .collect();
    if words.is_empty() {
        return None;
    }
    let hits = words.iter().filter(|w| dictionary.contains(w)).count();
    Some(hits as f64 / words.len() as f64)
}

pub fn is_english_with(text: &str, dictionary: &Dictionary, threshold: f64) -> bool {
    !contains_japanese(text) && dictionary_hit_rate(text, dictionary).is_some_and(|r| r >= threshold)
}

/// At least half of the alphabetic tokens are dictionary words and no
/// Japanese characters occur.
pub fn is_english(text: &str, dictionary: &Dictionary) -> bool {
    is_english_with(text, dictionary, DEFAULT_ENGLISH_THRESHOLD)
}

// ---------------------------------------------------------------------------
// worker scoring

/// One worker's three translations with the machine translations they are
/// compared against.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkerSubmission {
    pub worker_id: String,
    pub answers: [String; 3],
    #[serde(rename = "seconds")]
    pub seconds_worked: u64,
    pub mt_references: [String; 3],
}

pub mod criteria {
    pub const TIME: &str = "T2.time";
    pub const ALL_SHORT: &str = "T2.all_short";
    pub const NO_TERMINAL: &str = "T2.no_terminal";
    pub const IDENTICAL: &str = "T2.identical";
    pub const JAPANESE: &str = "T2.japanese";
    pub const NO_ENGLISH: &str = "T2.no_english";
    pub const SOME_SHORT: &str = "T2.some_short";
    pub const FEW_TYPES: &str = "T2.few_types";
    pub const LD_20_30: &str = "T2.ld_20_30";
    pub const LD_10_20: &str = "T2.ld_10_20";
    pub const LD_LE_10: &str = "T2.ld_le_10";
    pub const ALL_TERMINAL: &str = "T2.all_terminal";
    pub const HAS_MASK: &str = "T2.has_mask";
    pub const ALL_ENGLISH: &str = "T2.all_english";

    /// Every criterion in evaluation order.
    pub const ALL: [&str; 14] = [
        TIME, ALL_SHORT, NO_TERMINAL, IDENTICAL, JAPANESE, NO_ENGLISH, SOME_SHORT, FEW_TYPES, LD_20_30,
        LD_10_20, LD_LE_10, ALL_TERMINAL, HAS_MASK, ALL_ENGLISH,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Effect {
    Reject,
    Points(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Triggered {
    pub criterion: String,
    pub effect: Effect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerVerdict {
    pub worker_id: String,
    pub score: f64,
    pub accepted: bool,
    pub triggered: Vec<Triggered>,
}

impl WorkerVerdict {
    pub fn triggered_ids(&self) -> Vec<&str> {
        self.triggered.iter().map(|t| t.criterion.as_str()).collect()
    }

    pub fn rejected(&self) -> bool {
        self.triggered.iter().any(|t| t.effect == Effect::Reject)
    }
}

/// Thresholds of the worker-scoring table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkerCriteria {
    pub min_seconds: u64,
    pub min_words: usize,
    pub min_types: usize,
    /// Character distance to the machine translation at or below which the
    /// worker is rejected.
    pub reject_max_ld: usize,
    /// Upper bound (exclusive) of the -1.5 band.
    pub harsh_band_end: usize,
    /// Upper bound (inclusive) of the -0.5 band.
    pub mild_band_end: usize,
    pub harsh_penalty: f64,
    pub mild_penalty: f64,
    pub english_threshold: f64,
}

impl Default for WorkerCriteria {
    fn default() -> Self {
        Self {
            min_seconds: 120,
            min_words: 4,
            min_types: 4,
            reject_max_ld: 10,
            harsh_band_end: 20,
            mild_band_end: 30,
            harsh_penalty: -1.5,
            mild_penalty: -0.5,
            english_threshold: DEFAULT_ENGLISH_THRESHOLD,
        }
    }
}

fn answer_words(text: &str) -> Vec<String> {
    token_spans(text)
        .into_iter()
        .map(|r| &text[r])
        .filter(|t| *t != MASK_TOKEN && !is_punct_token(t))
        .map(str::to_string)
        .collect()
}

fn ends_with_terminal(text: &str) -> bool {
    let t = text.trim_end();
    t.ends_with('.') || t.ends_with('?')
}

fn collapse_ws(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Scores a submission against every criterion in table order.
pub fn score_worker_with(sub: &WorkerSubmission, dictionary: &Dictionary, c: &WorkerCriteria) -> WorkerVerdict {
    use criteria::*;
    let mut triggered = Vec::new();
    let mut hit = |id: &str, effect: Effect| {
        triggered.push(Triggered {
            criterion: id.to_string(),
            effect,
        })
    };
    let words: Vec<Vec<String>> = sub.answers.iter().map(|a| answer_words(a)).collect();
    let short: Vec<bool> = words.iter().map(|w| w.len() < c.min_words).collect();
    let terminal: Vec<bool> = sub.answers.iter().map(|a| ends_with_terminal(a)).collect();
    let english: Vec<bool> = sub
        .answers
        .iter()
        .map(|a| is_english_with(a, dictionary, c.english_threshold))
        .collect();
    let distances: Vec<usize> = sub
        .answers
        .iter()
        .zip(&sub.mt_references)
        .map(|(a, m)| levenshtein_char(a.trim(), m.trim()))
        .collect();
    let normalized: Vec<String> = sub.answers.iter().map(|a| collapse_ws(a)).collect();

    if sub.seconds_worked < c.min_seconds {
        hit(TIME, Effect::Reject);
    }
    if short.iter().all(|&s| s) {
        hit(ALL_SHORT, Effect::Reject);
    }
    if !terminal.iter().any(|&t| t) {
        hit(NO_TERMINAL, Effect::Reject);
    }
    if (0..3).any(|i| (i + 1..3).any(|j| normalized[i] == normalized[j])) {
        hit(IDENTICAL, Effect::Reject);
    }
    if sub.answers.iter().any(|a| contains_japanese(a)) {
        hit(JAPANESE, Effect::Reject);
    }
    if !english.iter().any(|&e| e) {
        hit(NO_ENGLISH, Effect::Reject);
    }
    if short.iter().any(|&s| s) {
        hit(SOME_SHORT, Effect::Points(-2.0));
    }
    let few_types = words.iter().any(|w| {
        let types: HashSet<String> = w.iter().map(|t| t.to_lowercase()).collect();
        types.len() < c.min_types
    });
    if few_types {
        hit(FEW_TYPES, Effect::Points(-2.0));
    }
    for &d in &distances {
        if d >= c.harsh_band_end && d <= c.mild_band_end {
            hit(LD_20_30, Effect::Points(c.mild_penalty));
        }
    }
    for &d in &distances {
        if d > c.reject_max_ld && d < c.harsh_band_end {
            hit(LD_10_20, Effect::Points(c.harsh_penalty));
        }
    }
    if distances.iter().any(|&d| d <= c.reject_max_ld) {
        hit(LD_LE_10, Effect::Reject);
    }
    if terminal.iter().all(|&t| t) {
        hit(ALL_TERMINAL, Effect::Points(1.0));
    }
    if sub.answers.iter().any(|a| a.contains(MASK_TOKEN)) {
        hit(HAS_MASK, Effect::Points(1.0));
    }
    if english.iter().all(|&e| e) {
        hit(ALL_ENGLISH, Effect::Points(1.0));
    }

    let score: f64 = triggered
        .iter()
        .filter_map(|t| match t.effect {
            Effect::Points(p) => Some(p),
            Effect::Reject => None,
        })
        .sum();
    let rejected = triggered.iter().any(|t| t.effect == Effect::Reject);
    WorkerVerdict {
        worker_id: sub.worker_id.clone(),
        score,
        accepted: !rejected && score >= 0.0,
        triggered,
    }
}

pub fn score_worker(sub: &WorkerSubmission, dictionary: &Dictionary) -> WorkerVerdict {
    score_worker_with(sub, dictionary, &WorkerCriteria::default())
}

pub fn score_workers(subs: &[WorkerSubmission], dictionary: &Dictionary, c: &WorkerCriteria) -> Vec<WorkerVerdict> {
    subs.par_iter().map(|s| score_worker_with(s, dictionary, c)).collect()
}

// ---------------------------------------------------------------------------
// overlap filter

#[derive(Debug, Clone)]
pub struct FilterConfig {
    pub alpha: f64,
    pub stopwords: Stopwords,
    pub mask_token: String,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            alpha: 0.4,
            stopwords: Stopwords::english().clone(),
            mask_token: MASK_TOKEN.to_string(),
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("alpha {} outside [0, 1]", self.alpha)));
        }
        if self.stopwords.contains(&self.mask_token) {
            return Err(Error::Config("mask token is listed as a stopword".into()));
        }
        Ok(())
    }

    /// Content-token set: lowercased tokens without stopwords, the mask
    /// token and punctuation.
    pub fn content_set(&self, s: &Sentence) -> HashSet<String> {
        s.tokens()
            .iter()
            .filter(|t| **t != self.mask_token && !is_punct_token(t))
            .map(|t| t.to_lowercase())
            .filter(|t| !self.stopwords.contains(t))
            .collect()
    }
}

/// `|U(x) ∩ U(y)| / min(|U(x)|, |U(y)|)` over content-token sets.
pub fn overlap_coefficient(x: &Sentence, y: &Sentence, cfg: &FilterConfig) -> Result<f64> {
    let ux = cfg.content_set(x);
    let uy = cfg.content_set(y);
    if ux.is_empty() {
        return Err(Error::UndefinedOverlap("draft"));
    }
    if uy.is_empty() {
        return Err(Error::UndefinedOverlap("reference"));
    }
    let inter = ux.intersection(&uy).count();
    Ok(inter as f64 / ux.len().min(uy.len()) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum Removal {
    LowOverlap { coefficient: f64 },
    Undefined { side: String },
}

impl std::fmt::Display for Removal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Removal::LowOverlap { coefficient } => write!(f, "low-overlap:{coefficient:.4}"),
            Removal::Undefined { side } => write!(f, "undefined-overlap:{side}"),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct FilterOutcome {
    pub kept: Vec<DraftPair>,
    pub removed: Vec<(DraftPair, Removal)>,
}

/// Decision for one pair; the draft is spell-checked first.
pub fn judge_pair(pair: &DraftPair, cfg: &FilterConfig, dictionary: &Dictionary) -> Option<Removal> {
    let checked = Sentence::new(spell_check(&pair.draft, dictionary).corrected_text);
    match overlap_coefficient(&checked, &pair.reference, cfg) {
        Ok(c) if c < cfg.alpha => Some(Removal::LowOverlap { coefficient: c }),
        Ok(_) => None,
        Err(Error::UndefinedOverlap(side)) => Some(Removal::Undefined { side: side.into() }),
        Err(e) => Some(Removal::Undefined { side: e.to_string() }),
    }
}

/// Splits pairs into kept and removed, preserving input order in both.
pub fn filter_pairs(pairs: Vec<DraftPair>, cfg: &FilterConfig, dictionary: &Dictionary) -> Result<FilterOutcome> {
    cfg.validate()?;
    let verdicts: Vec<Option<Removal>> = pairs.par_iter().map(|p| judge_pair(p, cfg, dictionary)).collect();
    let mut out = FilterOutcome::default();
    for (p, v) in pairs.into_iter().zip(verdicts) {
        match v {
            None => out.kept.push(p),
            Some(r) => out.removed.push((p, r)),
        }
    }
    Ok(out)
}
