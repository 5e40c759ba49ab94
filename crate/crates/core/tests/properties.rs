use std::collections::HashMap;

use proptest::prelude::*;

use draftkit::corpus::tokenize;
use draftkit::lexicon::Dictionary;
use draftkit::metrics::{
    apply_edits, bleu, edit_prf, extract_edits, fre, grammaticality_score, levenshtein_char, levenshtein_within,
    rouge_l, BleuSmoothing,
};
use draftkit::noising::{noise_sentence, permute_tokens, record_rng, NoiseConfig, ReplacementVocab};
use draftkit::quality::{overlap_coefficient, score_worker, spell_check, FilterConfig, WorkerSubmission};
use draftkit::Sentence;

fn word() -> impl Strategy<Value = String> {
    prop_oneof![
        4 => "[a-z]{1,6}",
        1 => "[A-Z][a-z]{0,5}",
        1 => prop::sample::select(vec![".", ",", "(", ")", "?", "<*>", "\"", "'s"]).prop_map(String::from),
    ]
}

fn words(max: usize) -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(word(), 0..max)
}

fn sentence(max: usize) -> impl Strategy<Value = Sentence> {
    words(max).prop_map(|w| Sentence::new(w.join(" ")))
}

/// Exhaustive recursive edit distance.
fn lev_oracle(a: &[char], b: &[char]) -> usize {
    match (a.split_first(), b.split_first()) {
        (None, _) => b.len(),
        (_, None) => a.len(),
        (Some((x, ra)), Some((y, rb))) => {
            let sub = lev_oracle(ra, rb) + usize::from(x != y);
            sub.min(lev_oracle(ra, b) + 1).min(lev_oracle(a, rb) + 1)
        }
    }
}

proptest! {
    #[test]
    fn tokenizer_is_idempotent(text in "[ a-zA-Z0-9.,;:!?()\\[\\]\"'<>*-]{0,60}") {
        let once = tokenize(&text);
        prop_assert_eq!(tokenize(&once.join(" ")), once);
    }

    #[test]
    fn levenshtein_matches_oracle(a in "[abc]{0,6}", b in "[abc]{0,6}") {
        let (ca, cb): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
        prop_assert_eq!(levenshtein_char(&a, &b), lev_oracle(&ca, &cb));
    }

    #[test]
    fn levenshtein_metric_axioms(a in "\\PC{0,12}", b in "\\PC{0,12}", c in "\\PC{0,12}") {
        let d = levenshtein_char;
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert_eq!(d(&a, &b) == 0, a == b);
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c));
    }

    #[test]
    fn bounded_levenshtein_agrees(a in "[abcd]{0,8}", b in "[abcd]{0,8}", max in 0usize..4) {
        let (ca, cb): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
        let full = levenshtein_char(&a, &b);
        prop_assert_eq!(levenshtein_within(&ca, &cb, max), (full <= max).then_some(full));
    }

    #[test]
    fn edits_round_trip(src in sentence(10), tgt in sentence(10)) {
        let edits = extract_edits(&src, &tgt, Dictionary::english());
        prop_assert_eq!(apply_edits(src.tokens(), &edits), tgt.tokens().to_vec());
        for e in &edits {
            prop_assert!(e.start <= e.end);
        }
        prop_assert!(extract_edits(&src, &src, Dictionary::english()).is_empty());
    }

    #[test]
    fn edit_scores_are_fractions(src in sentence(8), hyp in sentence(8), refr in sentence(8)) {
        let s = edit_prf(&src, &hyp, &refr, Dictionary::english());
        for v in [s.precision, s.recall, s.f05] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        let perfect = edit_prf(&src, &refr, &refr, Dictionary::english());
        prop_assert_eq!(perfect.f05, 1.0);
    }

    #[test]
    fn permutation_is_local(tokens in words(40), k in 1usize..6, seed in any::<u64>()) {
        let tokens: Vec<String> = tokens.into_iter().enumerate().map(|(i, t)| format!("{t}#{i}")).collect();
        let out = permute_tokens(&tokens, k, &mut record_rng(seed, 0));
        prop_assert_eq!(out.len(), tokens.len());
        let pos: HashMap<&String, usize> = tokens.iter().enumerate().map(|(i, t)| (t, i)).collect();
        for (j, t) in out.iter().enumerate() {
            prop_assert!(pos[t].abs_diff(j) < k.max(1));
        }
    }

    #[test]
    fn noising_is_deterministic_and_bounded(s in sentence(30).prop_filter("clean input", |s| !s.has_mask()), seed in any::<u64>(), index in 0u64..1000) {
        let cfg = NoiseConfig { seed, ..NoiseConfig::default() };
        let vocab = ReplacementVocab::from_counts([("the", 20_000u64), ("of", 15_000)], cfg.replace_vocab_min_count);
        let a = noise_sentence(&s, index, &cfg, &vocab).unwrap();
        let b = noise_sentence(&s, index, &cfg, &vocab).unwrap();
        prop_assert_eq!(&a.0, &b.0);
        let t = &a.1;
        prop_assert!(t.masked as f64 <= 0.5 * t.mask_input_tokens as f64);
        prop_assert_eq!(a.0.reference.text(), s.text());
    }

    #[test]
    fn masked_input_is_rejected(s in sentence(10).prop_filter("masked", |s| s.has_mask())) {
        let vocab = ReplacementVocab::from_counts([("the", 20_000u64)], 10_000);
        prop_assert!(noise_sentence(&s, 0, &NoiseConfig::default(), &vocab).is_err());
    }

    #[test]
    fn overlap_is_symmetric_and_set_based(a in words(10), b in words(10)) {
        let cfg = FilterConfig::default();
        let x = Sentence::new(a.join(" "));
        let y = Sentence::new(b.join(" "));
        let xy = overlap_coefficient(&x, &y, &cfg);
        let yx = overlap_coefficient(&y, &x, &cfg);
        match (&xy, &yx) {
            (Ok(p), Ok(q)) => {
                prop_assert_eq!(p, q);
                prop_assert!((0.0..=1.0).contains(p));
                prop_assert_eq!(overlap_coefficient(&x, &x, &cfg).unwrap(), 1.0);
            }
            _ => prop_assert!(xy.is_err() && yx.is_err()),
        }
        let mut doubled = a.clone();
        doubled.extend(a.iter().rev().cloned());
        let x2 = Sentence::new(doubled.join(" "));
        prop_assert_eq!(overlap_coefficient(&x2, &y, &cfg).ok(), xy.ok());
    }

    #[test]
    fn spell_check_keeps_token_count(s in sentence(12)) {
        let r = spell_check(&s, Dictionary::english());
        prop_assert_eq!(Sentence::new(r.corrected_text.clone()).len(), s.len());
        prop_assert_eq!(r.apply(s.text()), r.corrected_text);
    }

    #[test]
    fn grammaticality_monotone_in_errors(tokens in 1usize..50, errors in 0usize..60) {
        let g = grammaticality_score(errors, tokens).unwrap();
        prop_assert!((0.0..=1.0).contains(&g));
        prop_assert!(grammaticality_score(errors + 1, tokens).unwrap() <= g);
    }

    #[test]
    fn bleu_is_order_invariant(pairs in prop::collection::vec((sentence(12), sentence(12)), 1..6)) {
        let (h, r): (Vec<Sentence>, Vec<Sentence>) = pairs.iter().cloned().unzip();
        let (hr, rr): (Vec<Sentence>, Vec<Sentence>) = pairs.iter().rev().cloned().unzip();
        let sm = BleuSmoothing::default();
        let a = bleu(&h, &r, sm).unwrap();
        prop_assert_eq!(a, bleu(&hr, &rr, sm).unwrap());
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn rouge_bounds(h in sentence(12), r in sentence(12)) {
        if let Ok(v) = rouge_l(&h, &r) {
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert!((rouge_l(&h, &h).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn worker_verdict_ignores_answer_order(
        answers in prop::collection::vec("[A-Za-z ]{0,40}[.?]?", 3),
        mts in prop::collection::vec("[A-Za-z ]{0,40}", 3),
        seconds in 0u64..400,
        rot in 0usize..3,
    ) {
        let sub = WorkerSubmission {
            worker_id: "w".into(),
            answers: [answers[0].clone(), answers[1].clone(), answers[2].clone()],
            seconds_worked: seconds,
            mt_references: [mts[0].clone(), mts[1].clone(), mts[2].clone()],
        };
        let mut rotated = sub.clone();
        rotated.answers.rotate_left(rot);
        rotated.mt_references.rotate_left(rot);
        let v = score_worker(&sub, Dictionary::english());
        prop_assert_eq!(&v, &score_worker(&rotated, Dictionary::english()));
        prop_assert_eq!(v.accepted, !v.rejected() && v.score >= 0.0);
    }
}

#[test]
fn fre_drops_when_a_word_gets_longer() {
    let short = Sentence::new("The cat sat on the mat .");
    let long = Sentence::new("The elephant sat on the mat .");
    assert!(fre(&long).unwrap() < fre(&short).unwrap());
}
