//! Dataset profiling: pair statistics, per-side linguistic profiles,
//! edit-type histograms and characteristic-term contrasts.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{is_punct_token, DraftPair, Sentence, MASK_TOKEN};
use crate::error::{Error, Result};
use crate::lexicon::{Dictionary, Stopwords};
use crate::lm::NGramModel;
use crate::metrics::{extract_edits, fre, levenshtein_char, passive_voice, word_repetition, EditType};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub pair_count: usize,
    pub pct_with_mask: f64,
    pub pct_changed: f64,
    pub mean_char_levenshtein: f64,
}

fn pct(count: usize, total: usize) -> f64 {
    100.0 * count as f64 / total as f64
}

pub fn dataset_stats(pairs: &[DraftPair]) -> Result<DatasetStats> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("pair list"));
    }
    let distances: Vec<usize> = pairs
        .par_iter()
        .map(|p| levenshtein_char(p.draft.text(), p.reference.text()))
        .collect();
    // integer sum: exact and order independent
    let total: u64 = distances.iter().map(|&d| d as u64).sum();
    let n = pairs.len();
    Ok(DatasetStats {
        pair_count: n,
        pct_with_mask: pct(pairs.iter().filter(|p| p.has_mask).count(), n),
        pct_changed: pct(pairs.iter().filter(|p| p.is_changed()).count(), n),
        mean_char_levenshtein: total as f64 / n as f64,
    })
}

/// Averages of the per-sentence style measures for one side of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideProfile {
    pub sentences: usize,
    pub mean_fre: Option<f64>,
    pub passive_pct: f64,
    pub repetition_pct: f64,
    pub mean_ppl: Option<f64>,
    /// Sentences without word tokens, excluded from the FRE mean.
    pub fre_skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinguisticProfile {
    pub draft: SideProfile,
    pub reference: SideProfile,
}

#[derive(Debug, Clone, Copy)]
pub struct ProfileOptions<'a> {
    pub lm: Option<&'a NGramModel>,
    pub stopwords: &'a Stopwords,
    pub repetition_window: usize,
}

struct SentenceMeasures {
    fre: Option<f64>,
    passive: bool,
    repetition: bool,
    ppl: Option<f64>,
}

fn measure(s: &Sentence, opts: &ProfileOptions<'_>) -> SentenceMeasures {
    SentenceMeasures {
        fre: fre(s).ok(),
        passive: passive_voice(s),
        repetition: word_repetition(s, opts.repetition_window, opts.stopwords),
        ppl: opts.lm.map(|lm| lm.perplexity(s)),
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn side_profile(sentences: &[&Sentence], opts: &ProfileOptions<'_>) -> SideProfile {
    let m: Vec<SentenceMeasures> = sentences.par_iter().map(|s| measure(s, opts)).collect();
    let n = m.len();
    SideProfile {
        sentences: n,
        mean_fre: mean(m.iter().filter_map(|x| x.fre)),
        passive_pct: pct(m.iter().filter(|x| x.passive).count(), n),
        repetition_pct: pct(m.iter().filter(|x| x.repetition).count(), n),
        mean_ppl: mean(m.iter().filter_map(|x| x.ppl)),
        fre_skipped: m.iter().filter(|x| x.fre.is_none()).count(),
    }
}

/// Per-side means of FRE, PPL and the passive/repetition percentages.
pub fn linguistic_profile(pairs: &[DraftPair], opts: &ProfileOptions<'_>) -> Result<LinguisticProfile> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("pair list"));
    }
    let drafts: Vec<&Sentence> = pairs.iter().map(|p| &p.draft).collect();
    let refs: Vec<&Sentence> = pairs.iter().map(|p| &p.reference).collect();
    Ok(LinguisticProfile {
        draft: side_profile(&drafts, opts),
        reference: side_profile(&refs, opts),
    })
}

/// Counts of coarse edit types over a dataset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EditTypeDistribution {
    pub counts: BTreeMap<EditType, usize>,
}

impl EditTypeDistribution {
    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    /// Fractions per type; empty when there are no edits.
    pub fn fractions(&self) -> BTreeMap<EditType, f64> {
        let total = self.total();
        if total == 0 {
            return BTreeMap::new();
        }
        self.counts
            .iter()
            .map(|(&k, &c)| (k, c as f64 / total as f64))
            .collect()
    }

    /// Fractions over all seven types in [`EditType::ALL`] order, after
    /// adding `epsilon` to every count.
    pub fn smoothed(&self, epsilon: f64) -> [f64; 7] {
        let mut out = [0.0; 7];
        let total = self.total() as f64 + 7.0 * epsilon;
        for (slot, t) in out.iter_mut().zip(EditType::ALL) {
            *slot = (self.counts.get(&t).copied().unwrap_or(0) as f64 + epsilon) / total;
        }
        out
    }

    /// KL(self ‖ other) with additive smoothing on both sides.
    pub fn kl(&self, other: &EditTypeDistribution, epsilon: f64) -> f64 {
        kl_divergence(&self.smoothed(epsilon), &other.smoothed(epsilon))
    }
}

/// Σ p·ln(p/q) over entries with p > 0; infinite where q = 0 < p.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| if qi <= 0.0 { f64::INFINITY } else { pi * (pi / qi).ln() })
        .sum()
}

pub fn edit_type_distribution(pairs: &[DraftPair], dictionary: &Dictionary) -> EditTypeDistribution {
    let per_pair: Vec<Vec<EditType>> = pairs
        .par_iter()
        .map(|p| {
            extract_edits(&p.draft, &p.reference, dictionary)
                .into_iter()
                .map(|e| e.kind)
                .collect()
        })
        .collect();
    let mut counts = BTreeMap::new();
    for kind in per_pair.into_iter().flatten() {
        *counts.entry(kind).or_insert(0) += 1;
    }
    EditTypeDistribution { counts }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermContrast {
    pub term: String,
    /// Occurrences per 10,000 tokens.
    pub draft_freq: f64,
    pub reference_freq: f64,
    pub log_ratio: f64,
}

struct TermCounts {
    counts: HashMap<String, u64>,
    tokens: u64,
}

fn is_term_token(t: &str) -> bool {
    t != MASK_TOKEN && !is_punct_token(t)
}

fn term_counts<'a>(sentences: impl Iterator<Item = &'a Sentence>) -> TermCounts {
    let mut counts = HashMap::new();
    let mut tokens = 0;
    for s in sentences {
        let lower: Vec<String> = s.tokens().iter().map(|t| t.to_lowercase()).collect();
        tokens += lower.len() as u64;
        for t in lower.iter().filter(|t| is_term_token(t)) {
            *counts.entry(t.clone()).or_insert(0) += 1;
        }
        for w in lower.windows(2) {
            if is_term_token(&w[0]) && is_term_token(&w[1]) {
                *counts.entry(format!("{} {}", w[0], w[1])).or_insert(0) += 1;
            }
        }
    }
    TermCounts { counts, tokens }
}

fn per_10k(count: u64, tokens: u64) -> f64 {
    if tokens == 0 {
        0.0
    } else {
        count as f64 * 10_000.0 / tokens as f64
    }
}

/// Unigrams and bigrams (lowercased, punctuation and `<*>` excluded)
/// contrasted by the smoothed log ratio of their per-10k frequencies.
///
/// Returns up to `top_k` draft-leaning terms (largest positive ratio
/// first) followed by up to `top_k` reference-leaning terms (most negative
/// first). Ties are broken by the term string.
pub fn characteristic_terms(pairs: &[DraftPair], top_k: usize, epsilon: f64) -> Result<Vec<TermContrast>> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("pair list"));
    }
    if top_k == 0 {
        return Err(Error::Config("top_k must be at least 1".into()));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
    }
    let d = term_counts(pairs.iter().map(|p| &p.draft));
    let r = term_counts(pairs.iter().map(|p| &p.reference));
    let mut terms: Vec<&String> = d.counts.keys().chain(r.counts.keys()).collect();
    terms.sort();
    terms.dedup();
    let contrasts: Vec<TermContrast> = terms
        .into_iter()
        .map(|t| {
            let df = per_10k(d.counts.get(t).copied().unwrap_or(0), d.tokens);
            let rf = per_10k(r.counts.get(t).copied().unwrap_or(0), r.tokens);
            TermContrast {
                term: t.clone(),
                draft_freq: df,
                reference_freq: rf,
                // difference of logs keeps the ratio exactly antisymmetric
                log_ratio: (df + epsilon).ln() - (rf + epsilon).ln(),
            }
        })
        .collect();

    let mut draft_side: Vec<&TermContrast> = contrasts.iter().filter(|c| c.log_ratio > 0.0).collect();
    draft_side.sort_by(|a, b| b.log_ratio.total_cmp(&a.log_ratio).then_with(|| a.term.cmp(&b.term)));
    let mut ref_side: Vec<&TermContrast> = contrasts.iter().filter(|c| c.log_ratio < 0.0).collect();
    ref_side.sort_by(|a, b| a.log_ratio.total_cmp(&b.log_ratio).then_with(|| a.term.cmp(&b.term)));
    Ok(draft_side
        .into_iter()
        .take(top_k)
        .chain(ref_side.into_iter().take(top_k))
        .cloned()
        .collect())
}

/// Writes `term, draft_per10k, ref_per10k, log_ratio` rows with a header.
pub fn write_terms_tsv<W: Write>(mut w: W, terms: &[TermContrast]) -> std::io::Result<()> {
    writeln!(w, "term\tdraft_per10k\tref_per10k\tlog_ratio")?;
    for t in terms {
        writeln!(w, "{}\t{:.4}\t{:.4}\t{:.6}", t.term, t.draft_freq, t.reference_freq, t.log_ratio)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pair(d: &str, r: &str) -> DraftPair {
        DraftPair::from_texts(d, r).unwrap()
    }

    #[test]
    fn stats_identical_pairs() {
        let pairs = vec![pair("We propose a model .", "We propose a model ."); 3];
        let s = dataset_stats(&pairs).unwrap();
        assert_eq!(s.pair_count, 3);
        assert_eq!((s.pct_with_mask, s.pct_changed, s.mean_char_levenshtein), (0.0, 0.0, 0.0));
    }

    #[test]
    fn stats_arithmetic() {
        let pairs = vec![
            pair("aaaaaaaaaa", "bbbbbbbbbb"),
            pair("<*> xxxxxxxxxxxxxxxx", "yyyyyyyyyyyyyyyyyyyy"),
            pair("same", "same"),
            pair("same", "same"),
        ];
        let s = dataset_stats(&pairs).unwrap();
        assert_eq!(levenshtein_char(pairs[1].draft.text(), pairs[1].reference.text()), 20);
        assert_abs_diff_eq!(s.mean_char_levenshtein, 7.5);
        assert_eq!(s.pct_with_mask, 25.0);
        assert_eq!(s.pct_changed, 50.0);
        assert!(dataset_stats(&[]).is_err());
    }

    fn opts() -> ProfileOptions<'static> {
        ProfileOptions {
            lm: None,
            stopwords: Stopwords::english(),
            repetition_window: 5,
        }
    }

    #[test]
    fn profile_of_identical_pairs_matches() {
        let pairs = vec![
            pair("The model was trained on data .", "The model was trained on data ."),
            pair("We train the model .", "We train the model ."),
        ];
        let p = linguistic_profile(&pairs, &opts()).unwrap();
        assert_eq!(p.draft, p.reference);
        assert_eq!(p.draft.passive_pct, 50.0);
    }

    #[test]
    fn single_pair_profile_is_raw_measure() {
        let pairs = vec![pair("The cat sat .", ", ,")];
        let p = linguistic_profile(&pairs, &opts()).unwrap();
        assert_abs_diff_eq!(p.draft.mean_fre.unwrap(), 119.19, epsilon = 1e-9);
        assert_eq!(p.reference.mean_fre, None);
        assert_eq!(p.reference.fre_skipped, 1);
    }

    #[test]
    fn edit_histogram() {
        let d = Dictionary::english();
        let same = vec![pair("a b c", "a b c")];
        assert_eq!(edit_type_distribution(&same, d).total(), 0);
        assert!(edit_type_distribution(&same, d).fractions().is_empty());
        let subs = vec![pair("a b c", "a X c"), pair("d e", "question e")];
        let h = edit_type_distribution(&subs, d);
        assert_eq!(h.fractions(), BTreeMap::from([(EditType::Substitution, 1.0)]));
        let mixed = vec![pair("a b c", "a X c"), pair("a b", "a b .")];
        let sum: f64 = edit_type_distribution(&mixed, d).fractions().values().sum();
        assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-9);
        assert_eq!(h.kl(&h, 1e-3), 0.0);
        assert!(h.kl(&edit_type_distribution(&mixed, d), 1e-3) > 0.0);
    }

    #[test]
    fn kl_basics() {
        assert_eq!(kl_divergence(&[0.5, 0.5], &[0.5, 0.5]), 0.0);
        assert_eq!(kl_divergence(&[1.0, 0.0], &[0.0, 1.0]), f64::INFINITY);
        assert_abs_diff_eq!(kl_divergence(&[1.0, 0.0], &[0.5, 0.5]), 2f64.ln());
    }

    #[test]
    fn term_contrast_formula() {
        let pairs = vec![pair("we will win", "we can win")];
        let t = characteristic_terms(&pairs, 10, 0.5).unwrap();
        let get = |name: &str| t.iter().find(|c| c.term == name);
        let will = get("will").unwrap();
        let f = 10_000.0 / 3.0;
        assert_abs_diff_eq!(will.draft_freq, f);
        assert_abs_diff_eq!(will.log_ratio, ((f + 0.5) / 0.5f64).ln(), epsilon = 1e-12);
        assert!(get("can").unwrap().log_ratio < 0.0);
        // balanced terms are in neither list
        assert!(get("we").is_none());
        assert_eq!(t[0].log_ratio, t[1].log_ratio);
        assert!(t[0].term < t[1].term);
    }

    #[test]
    fn swapping_sides_negates() {
        let pairs = vec![pair("if I go , it will rain", "when they go it can rain")];
        let swapped: Vec<DraftPair> = pairs.iter().map(|p| pair(p.reference.text(), p.draft.text())).collect();
        let a = characteristic_terms(&pairs, 50, 0.1).unwrap();
        let b = characteristic_terms(&swapped, 50, 0.1).unwrap();
        let map = |v: &[TermContrast]| -> BTreeMap<String, f64> { v.iter().map(|c| (c.term.clone(), c.log_ratio)).collect() };
        let (ma, mb) = (map(&a), map(&b));
        assert_eq!(ma.len(), mb.len());
        for (k, v) in ma {
            assert_eq!(mb[&k], -v);
        }
    }

    #[test]
    fn term_errors() {
        let pairs = vec![pair("a", "b")];
        assert!(characteristic_terms(&pairs, 0, 0.5).is_err());
        assert!(characteristic_terms(&pairs, 1, 0.0).is_err());
        assert!(characteristic_terms(&[], 1, 0.5).is_err());
    }
}
