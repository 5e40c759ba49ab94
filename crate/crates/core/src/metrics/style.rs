//! Sentence-level style flags: passive voice and close word repetition.

use crate::corpus::{is_word_token, Sentence};
use crate::lexicon::Stopwords;

pub const BE_FORMS: &[&str] = &["am", "is", "are", "was", "were", "be", "been", "being", "'s", "'re", "'m"];

/// Common irregular past participles.
pub const IRREGULAR_PARTICIPLES: &[&str] = &[
    "arisen", "awoken", "beaten", "become", "begun", "bent", "bound", "bitten", "blown", "broken", "brought",
    "built", "bought", "caught", "chosen", "come", "cut", "dealt", "done", "drawn", "driven", "eaten",
    "fallen", "fed", "felt", "fought", "found", "flown", "forbidden", "forgotten", "forgiven", "frozen",
    "given", "gone", "grown", "hung", "held", "hidden", "hit", "hurt", "kept", "known", "laid", "led",
    "left", "lent", "let", "lost", "made", "meant", "met", "paid", "put", "read", "ridden", "run", "said",
    "seen", "sought", "sold", "sent", "set", "shaken", "shown", "shut", "sung", "sunk", "spoken", "spent",
    "split", "spread", "stolen", "struck", "sworn", "swept", "taken", "taught", "torn", "told", "thought",
    "thrown", "understood", "undertaken", "upset", "woken", "worn", "won", "written", "withdrawn",
];

/// Words ending in -ed/-en that are not participles after "be".
const NOT_PARTICIPLES: &[&str] = &[
    "been", "seen", "then", "when", "often", "even", "seven", "eleven", "open", "between", "token", "oxygen",
    "garden", "children", "women", "men", "ten", "hen", "pen", "need", "seed", "speed", "feed", "indeed",
    "red", "bed", "hundred", "shed",
];

const ADVERBS: &[&str] = &[
    "not", "also", "then", "often", "always", "never", "already", "still", "further", "thus", "usually",
    "generally", "typically", "first", "then", "now", "well", "mostly", "only", "just", "much", "very",
    "previously", "successfully", "n't",
];

fn is_adverb(t: &str) -> bool {
    let t = t.to_lowercase();
    ADVERBS.contains(&t.as_str()) || (t.len() > 4 && t.ends_with("ly"))
}

/// Regular `-ed`/`-en` forms or a listed irregular participle.
pub fn is_past_participle(t: &str) -> bool {
    let t = t.to_lowercase();
    if !t.chars().all(char::is_alphabetic) || NOT_PARTICIPLES.contains(&t.as_str()) {
        return false;
    }
    IRREGULAR_PARTICIPLES.contains(&t.as_str()) || (t.len() > 3 && (t.ends_with("ed") || t.ends_with("en")))
}

/// A form of "be" followed, within two tokens and skipping adverbs, by a
/// past participle.
pub fn passive_voice(s: &Sentence) -> bool {
    let toks = s.tokens();
    toks.iter().enumerate().any(|(i, t)| {
        if !BE_FORMS.contains(&t.to_lowercase().as_str()) {
            return false;
        }
        for next in toks.iter().skip(i + 1).take(2) {
            if is_past_participle(next) {
                return true;
            }
            if !is_adverb(next) {
                return false;
            }
        }
        false
    })
}

/// True when a non-stopword recurs within `window` token positions of its
/// previous occurrence. Case-insensitive.
pub fn word_repetition(s: &Sentence, window: usize, stopwords: &Stopwords) -> bool {
    let mut last_seen: std::collections::HashMap<String, usize> = Default::default();
    for (i, t) in s.tokens().iter().enumerate() {
        if !is_word_token(t) || stopwords.contains(t) {
            continue;
        }
        let key = t.to_lowercase();
        if let Some(&prev) = last_seen.get(&key) {
            if i - prev <= window {
                return true;
            }
        }
        last_seen.insert(key, i);
    }
    false
}

pub const DEFAULT_REPETITION_WINDOW: usize = 5;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn passive_examples() {
        let p = |t: &str| passive_voice(&Sentence::new(t));
        assert!(p("The model was trained on data."));
        assert!(!p("We train the model."));
        assert!(p("Results are carefully evaluated."));
        assert!(p("The corpus is not used here."));
        assert!(p("These sentences were written by workers."));
        assert!(!p("The data is open."));
        assert!(!p("It is a trained model."));
    }

    #[test]
    fn repetition_examples() {
        let sw = Stopwords::english();
        let r = |t: &str, w: usize| word_repetition(&Sentence::new(t), w, sw);
        assert!(r("the model improves the model quality", 5));
        assert!(!r("we propose novel parsing algorithms today", 5));
        // model at 0 and 6: distance 6 = window + 1
        assert!(!r("model a b c d e model", 5));
        assert!(r("model a b c d model", 5));
        assert!(!r("the the the", 5));
    }
}
