use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::Sentence;
use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum BleuSmoothing {
    /// An order with zero matches contributes `epsilon / total` instead of 0.
    AddEpsilon { epsilon: f64 },
    /// Any order with zero matches makes the score 0.
    None,
}

impl Default for BleuSmoothing {
    fn default() -> Self {
        BleuSmoothing::AddEpsilon { epsilon: 1e-3 }
    }
}

/// Matched and total n-gram counts per order, plus lengths.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BleuStats {
    pub matches: [u64; MAX_ORDER],
    pub totals: [u64; MAX_ORDER],
    pub hyp_len: u64,
    pub ref_len: u64,
}

impl BleuStats {
    pub fn add(&mut self, other: &BleuStats) {
        for n in 0..MAX_ORDER {
            self.matches[n] += other.matches[n];
            self.totals[n] += other.totals[n];
        }
        self.hyp_len += other.hyp_len;
        self.ref_len += other.ref_len;
    }

    /// Geometric mean of the modified precisions times the brevity penalty.
    pub fn score(&self, smoothing: BleuSmoothing) -> f64 {
        if self.hyp_len == 0 {
            return 0.0;
        }
        let mut log_sum = 0.0;
        for n in 0..MAX_ORDER {
            let total = self.totals[n];
            let matched = self.matches[n] as f64;
            let p = if total == 0 {
                // hypothesis shorter than n: treat as no evidence of matches
                match smoothing {
                    BleuSmoothing::AddEpsilon { epsilon } => epsilon,
                    BleuSmoothing::None => return 0.0,
                }
            } else if self.matches[n] == 0 {
                match smoothing {
                    BleuSmoothing::AddEpsilon { epsilon } => epsilon / total as f64,
                    BleuSmoothing::None => return 0.0,
                }
            } else {
                matched / total as f64
            };
            log_sum += p.ln();
        }
        let precision = (log_sum / MAX_ORDER as f64).exp();
        let bp = if self.hyp_len >= self.ref_len {
            1.0
        } else {
            (1.0 - self.ref_len as f64 / self.hyp_len as f64).exp()
        };
        (precision * bp).min(1.0)
    }
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], u64> {
    let mut counts = HashMap::new();
    for w in tokens.windows(n) {
        *counts.entry(w).or_insert(0) += 1;
    }
    counts
}

/// Clipped n-gram statistics of one hypothesis against one reference.
pub fn sentence_stats(hyp: &Sentence, reference: &Sentence) -> BleuStats {
    let mut stats = BleuStats {
        hyp_len: hyp.len() as u64,
        ref_len: reference.len() as u64,
        ..Default::default()
    };
    for n in 1..=MAX_ORDER {
        let h = ngram_counts(hyp.tokens(), n);
        let r = ngram_counts(reference.tokens(), n);
        stats.totals[n - 1] = hyp.len().saturating_sub(n - 1) as u64;
        stats.matches[n - 1] = h
            .iter()
            .map(|(g, &c)| c.min(r.get(g).copied().unwrap_or(0)))
            .sum();
    }
    stats
}

/// Corpus BLEU in `[0, 1]`: n-gram statistics are pooled over the corpus
/// before taking precisions.
pub fn bleu(hypotheses: &[Sentence], references: &[Sentence], smoothing: BleuSmoothing) -> Result<f64> {
    if hypotheses.len() != references.len() {
        return Err(Error::LengthMismatch(hypotheses.len(), references.len()));
    }
    if hypotheses.is_empty() {
        return Err(Error::EmptyInput("BLEU corpus"));
    }
    let mut total = BleuStats::default();
    for (h, r) in hypotheses.iter().zip(references) {
        total.add(&sentence_stats(h, r));
    }
    Ok(total.score(smoothing))
}

pub fn sentence_bleu(hyp: &Sentence, reference: &Sentence, smoothing: BleuSmoothing) -> f64 {
    sentence_stats(hyp, reference).score(smoothing)
}
