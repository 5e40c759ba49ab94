//! Token-level edit extraction and edit-based precision/recall/F0.5.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::levenshtein::levenshtein_char;
use crate::corpus::{is_punct_token, Sentence};
use crate::lexicon::Dictionary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EditType {
    Insertion,
    Deletion,
    Substitution,
    Orthography,
    Spelling,
    Punctuation,
    Other,
}

impl EditType {
    pub const ALL: [EditType; 7] = [
        EditType::Insertion,
        EditType::Deletion,
        EditType::Substitution,
        EditType::Orthography,
        EditType::Spelling,
        EditType::Punctuation,
        EditType::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EditType::Insertion => "insertion",
            EditType::Deletion => "deletion",
            EditType::Substitution => "substitution",
            EditType::Orthography => "orthography",
            EditType::Spelling => "spelling",
            EditType::Punctuation => "punctuation",
            EditType::Other => "other",
        }
    }
}

/// Replace source tokens `[start, end)` with `replacement`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EditSpan {
    pub start: usize,
    pub end: usize,
    pub replacement: Vec<String>,
    pub kind: EditType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Keep,
    Substitute,
    Delete,
    Insert,
}

/// Minimal unit-cost alignment; ties prefer the diagonal, then deletion.
fn align(src: &[String], tgt: &[String]) -> Vec<Op> {
    let (n, m) = (src.len(), tgt.len());
    let mut d = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=m {
        d[0][j] = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let diag = d[i - 1][j - 1] + usize::from(src[i - 1] != tgt[j - 1]);
            d[i][j] = diag.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        if i > 0 && j > 0 {
            let same = src[i - 1] == tgt[j - 1];
            if d[i][j] == d[i - 1][j - 1] + usize::from(!same) {
                ops.push(if same { Op::Keep } else { Op::Substitute });
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && d[i][j] == d[i - 1][j] + 1 {
            ops.push(Op::Delete);
            i -= 1;
        } else {
            ops.push(Op::Insert);
            j -= 1;
        }
    }
    ops.reverse();
    ops
}

fn squash(tokens: &[String]) -> String {
    tokens
        .iter()
        .flat_map(|t| t.chars())
        .filter(|&c| c != '-')
        .flat_map(char::to_lowercase)
        .collect()
}

fn is_alpha_word(t: &str) -> bool {
    !t.is_empty() && t.chars().all(char::is_alphabetic)
}

/// Coarse type of replacing `src` by `tgt`.
pub fn classify_edit(src: &[String], tgt: &[String], dictionary: &Dictionary) -> EditType {
    let touched = src.iter().chain(tgt);
    if src.len() + tgt.len() > 0 && touched.clone().all(|t| is_punct_token(t)) {
        return EditType::Punctuation;
    }
    if !src.is_empty() && !tgt.is_empty() && squash(src) == squash(tgt) {
        return EditType::Orthography;
    }
    if let ([s], [t]) = (src, tgt) {
        let d = levenshtein_char(s, t);
        // a full rewrite of a short word is not a misspelling
        let shorter = s.chars().count().min(t.chars().count());
        if is_alpha_word(s) && is_alpha_word(t) && d <= 2 && d < shorter && dictionary.contains(t) {
            return EditType::Spelling;
        }
    }
    match (src.len(), tgt.len()) {
        (0, _) => EditType::Insertion,
        (_, 0) => EditType::Deletion,
        (a, b) if a == b => EditType::Substitution,
        _ => EditType::Other,
    }
}

/// Edits turning `source` into `target`: maximal runs of non-matching
/// alignment operations, each typed with [`classify_edit`].
pub fn extract_edits(source: &Sentence, target: &Sentence, dictionary: &Dictionary) -> Vec<EditSpan> {
    extract_token_edits(source.tokens(), target.tokens(), dictionary)
}

pub fn extract_token_edits(src: &[String], tgt: &[String], dictionary: &Dictionary) -> Vec<EditSpan> {
    let ops = align(src, tgt);
    let mut edits = Vec::new();
    let (mut i, mut j) = (0usize, 0usize);
    let mut open: Option<(usize, usize)> = None;
    for op in ops.iter().copied().chain(std::iter::once(Op::Keep)) {
        if op == Op::Keep {
            if let Some((si, sj)) = open.take() {
                let kind = classify_edit(&src[si..i], &tgt[sj..j], dictionary);
                edits.push(EditSpan {
                    start: si,
                    end: i,
                    replacement: tgt[sj..j].to_vec(),
                    kind,
                });
            }
        } else if open.is_none() {
            open = Some((i, j));
        }
        match op {
            Op::Keep | Op::Substitute => {
                i += 1;
                j += 1;
            }
            Op::Delete => i += 1,
            Op::Insert => j += 1,
        }
    }
    edits
}

/// Applies non-overlapping edits (sorted by position) to `source`.
pub fn apply_edits(source: &[String], edits: &[EditSpan]) -> Vec<String> {
    let mut out = Vec::with_capacity(source.len());
    let mut cursor = 0;
    for e in edits {
        out.extend_from_slice(&source[cursor..e.start]);
        out.extend(e.replacement.iter().cloned());
        cursor = e.end;
    }
    out.extend_from_slice(&source[cursor..]);
    out
}

/// Edit-level precision, recall and F0.5 with the counts they came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EditScore {
    pub precision: f64,
    pub recall: f64,
    pub f05: f64,
    pub true_positives: usize,
    pub hyp_edits: usize,
    pub gold_edits: usize,
}

impl EditScore {
    /// Conventions: no proposed edits gives P = 1 only when there are also
    /// no gold edits; no gold edits gives R = 1.
    pub fn from_counts(true_positives: usize, hyp_edits: usize, gold_edits: usize) -> Self {
        let precision = if hyp_edits == 0 {
            if gold_edits == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            true_positives as f64 / hyp_edits as f64
        };
        let recall = if gold_edits == 0 {
            1.0
        } else {
            true_positives as f64 / gold_edits as f64
        };
        Self {
            precision,
            recall,
            f05: f_beta(precision, recall, 0.5),
            true_positives,
            hyp_edits,
            gold_edits,
        }
    }
}

pub fn f_beta(precision: f64, recall: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    let denom = b2 * precision + recall;
    if denom == 0.0 {
        0.0
    } else {
        (1.0 + b2) * precision * recall / denom
    }
}

/// Compares the edits a system made with the gold edits; an edit matches
/// only on identical source range and replacement.
pub fn edit_prf(source: &Sentence, hypothesis: &Sentence, reference: &Sentence, dictionary: &Dictionary) -> EditScore {
    let key = |e: &EditSpan| (e.start, e.end, e.replacement.clone());
    let hyp: HashSet<_> = extract_edits(source, hypothesis, dictionary).iter().map(key).collect();
    let gold: HashSet<_> = extract_edits(source, reference, dictionary).iter().map(key).collect();
    let tp = hyp.intersection(&gold).count();
    EditScore::from_counts(tp, hyp.len(), gold.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn s(t: &str) -> Sentence {
        Sentence::new(t)
    }

    fn dict() -> &'static Dictionary {
        Dictionary::english()
    }

    #[test]
    fn identical_has_no_edits() {
        assert!(extract_edits(&s("a b c"), &s("a b c"), dict()).is_empty());
    }

    #[test]
    fn single_substitution() {
        let e = extract_edits(&s("a b c"), &s("a X c"), dict());
        assert_eq!(e.len(), 1);
        assert_eq!((e[0].start, e[0].end), (1, 2));
        assert_eq!(e[0].replacement, vec!["X".to_string()]);
        assert_eq!(e[0].kind, EditType::Substitution);
    }

    #[test]
    fn typing() {
        let kind = |a: &str, b: &str| {
            let e = extract_edits(&s(a), &s(b), dict());
            assert_eq!(e.len(), 1, "{a} -> {b}: {e:?}");
            e[0].kind
        };
        assert_eq!(kind("the modle", "the model"), EditType::Spelling);
        assert_eq!(kind("we propose", "We propose"), EditType::Orthography);
        assert_eq!(kind("a state of the art model", "a state-of-the-art model"), EditType::Orthography);
        assert_eq!(kind("we propose a model", "we propose a model ."), EditType::Punctuation);
        assert_eq!(kind("we propose model", "we propose a model"), EditType::Insertion);
        assert_eq!(kind("we propose a big model", "we propose a model"), EditType::Deletion);
        assert_eq!(kind("we use it here", "we apply the method here"), EditType::Other);
    }

    #[test]
    fn round_trip() {
        let cases = [
            ("a b c d", "d c b a"),
            ("", "a b"),
            ("a b", ""),
            ("we propose <*> model", "We propose a new model ."),
        ];
        for (a, b) in cases {
            let (a, b) = (s(a), s(b));
            let edits = extract_edits(&a, &b, dict());
            assert_eq!(apply_edits(a.tokens(), &edits), b.tokens());
        }
    }

    #[test]
    fn prf_examples() {
        let src = s("a b c d e");
        let refr = s("a X c Y e");
        let perfect = edit_prf(&src, &refr, &refr, dict());
        assert_eq!((perfect.precision, perfect.recall, perfect.f05), (1.0, 1.0, 1.0));

        let lazy = edit_prf(&src, &src, &refr, dict());
        assert_eq!((lazy.recall, lazy.f05), (0.0, 0.0));

        // hyp makes one correct edit (b -> X) and one wrong one (d -> Z)
        let half = edit_prf(&src, &s("a X c Z e"), &refr, dict());
        assert_abs_diff_eq!(half.precision, 0.5);
        assert_abs_diff_eq!(half.recall, 0.5);
        assert_abs_diff_eq!(half.f05, 0.5);

        let none = edit_prf(&src, &src, &src, dict());
        assert_eq!((none.precision, none.recall, none.f05), (1.0, 1.0, 1.0));
    }
}
