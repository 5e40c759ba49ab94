//! Heuristic synthetic-draft generation.
//!
//! A clean sentence goes through four independent stages, in this order:
//! token deletion, replacement with frequent corpus tokens, local
//! shuffling, and span masking with `<*>`.

mod beam;

use std::collections::BTreeMap;
use std::path::Path;

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{DraftPair, Sentence, MASK_TOKEN};
use crate::error::{Error, RecordError, Result};

pub use beam::{beam_search, noisy_beam_search, BeamNoiseConfig, Expander, HypothesisScorer, Ranked};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReplacementSampling {
    #[default]
    Uniform,
    CountWeighted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub delete_p: f64,
    pub replace_p: f64,
    /// Tokens must occur strictly more often than this to be used as replacements.
    pub replace_vocab_min_count: u64,
    pub replace_sampling: ReplacementSampling,
    /// Shuffle locality; every token moves fewer than this many positions.
    pub shuffle_k: usize,
    pub mask_fraction_max: f64,
    pub seed: u64,
}

pub const DEFAULT_SEED: u64 = 20190101;

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            delete_p: 0.1,
            replace_p: 0.1,
            replace_vocab_min_count: 10_000,
            replace_sampling: ReplacementSampling::Uniform,
            shuffle_k: 3,
            mask_fraction_max: 0.5,
            seed: DEFAULT_SEED,
        }
    }
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("delete_p", self.delete_p),
            ("replace_p", self.replace_p),
            ("mask_fraction_max", self.mask_fraction_max),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} = {p} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Frequent tokens eligible as replacements, with their corpus counts.
#[derive(Debug, Clone)]
pub struct ReplacementVocab {
    tokens: Vec<String>,
    counts: Vec<u64>,
    weights: Option<WeightedIndex<u64>>,
}

impl ReplacementVocab {
    /// Keeps tokens whose count is strictly greater than `min_count`.
    /// Tokens are stored sorted so sampling does not depend on input order.
    pub fn from_counts<I, S>(counts: I, min_count: u64) -> Self
    where
        I: IntoIterator<Item = (S, u64)>,
        S: Into<String>,
    {
        let mut merged: BTreeMap<String, u64> = BTreeMap::new();
        for (t, c) in counts {
            *merged.entry(t.into()).or_insert(0) += c;
        }
        let (tokens, counts): (Vec<_>, Vec<_>) = merged
            .into_iter()
            .filter(|(t, c)| *c > min_count && t != MASK_TOKEN)
            .unzip();
        let weights = WeightedIndex::new(&counts).ok();
        Self {
            tokens,
            counts,
            weights,
        }
    }

    /// Counts every token of `sentences`.
    pub fn from_corpus<'a, I>(sentences: I, min_count: u64) -> Self
    where
        I: IntoIterator<Item = &'a Sentence>,
    {
        Self::from_counts(token_counts(sentences), min_count)
    }

    /// Reads `token<TAB>count` lines.
    pub fn load(path: &Path, min_count: u64) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut counts = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record = |message: String| Error::Record {
                path: path.to_path_buf(),
                record: RecordError {
                    line: idx + 1,
                    message,
                },
            };
            let (tok, count) = line
                .split_once('\t')
                .ok_or_else(|| record("expected token<TAB>count".into()))?;
            let count = count
                .trim()
                .parse::<u64>()
                .map_err(|_| record(format!("bad count {count:?}")))?;
            counts.push((tok.to_string(), count));
        }
        Ok(Self::from_counts(counts, min_count))
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.tokens.iter().map(String::as_str).zip(self.counts.iter().copied())
    }

    fn sample<R: Rng + ?Sized>(&self, sampling: ReplacementSampling, rng: &mut R) -> &str {
        let idx = match (sampling, &self.weights) {
            (ReplacementSampling::CountWeighted, Some(w)) => w.sample(rng),
            _ => rng.gen_range(0..self.tokens.len()),
        };
        &self.tokens[idx]
    }
}

/// Token frequencies over a corpus, sorted by token.
pub fn token_counts<'a, I>(sentences: I) -> BTreeMap<String, u64>
where
    I: IntoIterator<Item = &'a Sentence>,
{
    let mut counts = BTreeMap::new();
    for s in sentences {
        for t in s.tokens() {
            *counts.entry(t.clone()).or_insert(0) += 1;
        }
    }
    counts
}

/// RNG stream for one record; independent of processing order.
pub fn record_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn delete_counted<R: Rng + ?Sized>(tokens: &[String], p: f64, rng: &mut R) -> (Vec<String>, usize) {
    let keep: Vec<bool> = tokens.iter().map(|_| !rng.gen_bool(p)).collect();
    let mut out: Vec<String> = tokens
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(t, _)| t.clone())
        .collect();
    if out.is_empty() && !tokens.is_empty() {
        out.push(tokens[rng.gen_range(0..tokens.len())].clone());
    }
    let deleted = tokens.len() - out.len();
    (out, deleted)
}

/// Drops each token independently with probability `p`, keeping one
/// uniformly chosen token if every token was drawn for deletion.
///
/// Panics if `p` is outside `[0, 1]`.
pub fn delete_tokens<R: Rng + ?Sized>(tokens: &[String], p: f64, rng: &mut R) -> Vec<String> {
    delete_counted(tokens, p, rng).0
}

fn replace_counted<R: Rng + ?Sized>(
    tokens: &[String],
    p: f64,
    vocab: &ReplacementVocab,
    sampling: ReplacementSampling,
    rng: &mut R,
) -> Result<(Vec<String>, usize)> {
    if p > 0.0 && vocab.is_empty() {
        return Err(Error::EmptyVocab(p));
    }
    let mut replaced = 0;
    let out = tokens
        .iter()
        .map(|t| {
            if rng.gen_bool(p) {
                replaced += 1;
                vocab.sample(sampling, rng).to_string()
            } else {
                t.clone()
            }
        })
        .collect();
    Ok((out, replaced))
}

/// Replaces each token independently with probability `p` by a token drawn
/// uniformly from `vocab`.
pub fn replace_tokens<R: Rng + ?Sized>(
    tokens: &[String],
    p: f64,
    vocab: &ReplacementVocab,
    rng: &mut R,
) -> Result<Vec<String>> {
    replace_counted(tokens, p, vocab, ReplacementSampling::Uniform, rng).map(|(t, _)| t)
}

/// Local shuffle: token `i` gets the key `i + u` with `u ~ U[0, k)` and the
/// sequence is stably sorted by key, so no token moves `k` or more places.
pub fn permute_tokens<R: Rng + ?Sized>(tokens: &[String], k: usize, rng: &mut R) -> Vec<String> {
    if k == 0 {
        return tokens.to_vec();
    }
    let mut keyed: Vec<(f64, &String)> = tokens
        .iter()
        .enumerate()
        .map(|(i, t)| (i as f64 + rng.gen::<f64>() * k as f64, t))
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
    keyed.into_iter().map(|(_, t)| t.clone()).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Slot {
    Original(String),
    Mask,
}

/// Outcome of the masking stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Masked {
    pub tokens: Vec<String>,
    /// Target number of original tokens to hide.
    pub target: usize,
    /// Original tokens actually hidden (at most `target`).
    pub masked: usize,
    pub spans: usize,
}

/// Replaces `n` tokens starting at `start` with a single `<*>`.
pub fn splice_mask(tokens: &[String], start: usize, n: usize) -> Vec<String> {
    let mut out = Vec::with_capacity(tokens.len() + 1 - n.min(tokens.len()));
    out.extend_from_slice(&tokens[..start]);
    out.push(MASK_TOKEN.to_string());
    out.extend_from_slice(&tokens[start + n..]);
    out
}

/// Hides `target` original tokens behind `<*>` spans. Span lengths are
/// uniform over `1..=remaining`; when no unmasked run is long enough, the
/// longest feasible length is used instead. Existing `<*>` tokens are never
/// part of a span.
pub fn mask_with_target<R: Rng + ?Sized>(tokens: &[String], target: usize, rng: &mut R) -> Masked {
    let mut slots: Vec<Slot> = tokens
        .iter()
        .map(|t| {
            if t == MASK_TOKEN {
                Slot::Mask
            } else {
                Slot::Original(t.clone())
            }
        })
        .collect();
    let mut covered = 0;
    let mut spans = 0;
    while covered < target {
        let remaining = target - covered;
        let mut n = rng.gen_range(1..=remaining);
        let runs = unmasked_runs(&slots);
        let longest = runs.iter().map(|(a, b)| b - a).max().unwrap_or(0);
        if longest == 0 {
            break;
        }
        n = n.min(longest);
        let starts: Vec<usize> = runs
            .iter()
            .filter(|(a, b)| b - a >= n)
            .flat_map(|&(a, b)| a..=b - n)
            .collect();
        let start = starts[rng.gen_range(0..starts.len())];
        slots.splice(start..start + n, [Slot::Mask]);
        covered += n;
        spans += 1;
    }
    let tokens = slots
        .into_iter()
        .map(|s| match s {
            Slot::Original(t) => t,
            Slot::Mask => MASK_TOKEN.to_string(),
        })
        .collect();
    Masked {
        tokens,
        target,
        masked: covered,
        spans,
    }
}

fn unmasked_runs(slots: &[Slot]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, s) in slots.iter().enumerate() {
        match (s, start) {
            (Slot::Original(_), None) => start = Some(i),
            (Slot::Mask, Some(a)) => {
                runs.push((a, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(a) = start {
        runs.push((a, slots.len()));
    }
    runs
}

fn mask_traced<R: Rng + ?Sized>(tokens: &[String], mask_fraction_max: f64, rng: &mut R) -> Masked {
    let r = rng.gen::<f64>() * mask_fraction_max;
    let target = (tokens.len() as f64 * r).floor() as usize;
    mask_with_target(tokens, target, rng)
}

/// Draws `r ~ U[0, mask_fraction_max)`, then masks `floor(len * r)`
/// original tokens.
pub fn mask_spans<R: Rng + ?Sized>(tokens: &[String], mask_fraction_max: f64, rng: &mut R) -> Vec<String> {
    mask_traced(tokens, mask_fraction_max, rng).tokens
}

/// Per-stage counts for one noised sentence.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct NoiseTrace {
    pub input_tokens: usize,
    pub deleted: usize,
    pub replaced: usize,
    /// Length entering the masking stage.
    pub mask_input_tokens: usize,
    pub mask_target: usize,
    pub masked: usize,
    pub output_tokens: usize,
}

/// Runs the four stages on `tokens` with the given RNG.
pub fn noise_tokens<R: Rng + ?Sized>(
    tokens: &[String],
    cfg: &NoiseConfig,
    vocab: &ReplacementVocab,
    rng: &mut R,
) -> Result<(Vec<String>, NoiseTrace)> {
    let (t, deleted) = delete_counted(tokens, cfg.delete_p, rng);
    let (t, replaced) = replace_counted(&t, cfg.replace_p, vocab, cfg.replace_sampling, rng)?;
    let t = permute_tokens(&t, cfg.shuffle_k, rng);
    let mask_input_tokens = t.len();
    let masked = mask_traced(&t, cfg.mask_fraction_max, rng);
    let trace = NoiseTrace {
        input_tokens: tokens.len(),
        deleted,
        replaced,
        mask_input_tokens,
        mask_target: masked.target,
        masked: masked.masked,
        output_tokens: masked.tokens.len(),
    };
    Ok((masked.tokens, trace))
}

/// Noises sentence number `index` of a corpus. The RNG stream depends only
/// on `(cfg.seed, index)`.
pub fn noise_sentence(
    s: &Sentence,
    index: u64,
    cfg: &NoiseConfig,
    vocab: &ReplacementVocab,
) -> Result<(DraftPair, NoiseTrace)> {
    cfg.validate()?;
    let mut rng = record_rng(cfg.seed, index);
    let (tokens, trace) = noise_tokens(s.tokens(), cfg, vocab, &mut rng)?;
    let pair = DraftPair::new(Sentence::from_tokens(&tokens), s.clone()).map_err(|message| Error::Record {
        path: Default::default(),
        record: RecordError {
            line: index as usize + 1,
            message,
        },
    })?;
    Ok((pair, trace))
}

/// Noises a whole corpus in parallel; output order follows input order.
pub fn noise_corpus(
    sentences: &[Sentence],
    cfg: &NoiseConfig,
    vocab: &ReplacementVocab,
) -> Result<Vec<(DraftPair, NoiseTrace)>> {
    cfg.validate()?;
    sentences
        .par_iter()
        .enumerate()
        .map(|(i, s)| noise_sentence(s, i as u64, cfg, vocab))
        .collect()
}
