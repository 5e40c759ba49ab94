//! Reference-less grammaticality: `1 - errors / tokens` with a pluggable
//! error detector.

use serde::{Deserialize, Serialize};

use crate::corpus::{is_word_token, Sentence, MASK_TOKEN};
use crate::error::{Error, Result};

pub trait ErrorDetector {
    fn count_errors(&self, s: &Sentence) -> usize;
}

impl<F: Fn(&Sentence) -> usize> ErrorDetector for F {
    fn count_errors(&self, s: &Sentence) -> usize {
        self(s)
    }
}

/// `max(0, 1 - errors / tokens)`.
pub fn grammaticality_score(errors: usize, tokens: usize) -> Result<f64> {
    if tokens == 0 {
        return Err(Error::EmptySentence);
    }
    Ok((1.0 - errors as f64 / tokens as f64).max(0.0))
}

pub fn grammaticality<D: ErrorDetector + ?Sized>(s: &Sentence, detector: &D) -> Result<f64> {
    grammaticality_score(detector.count_errors(s), s.len())
}

/// Small rule-based detector. Each rule can be switched off.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RuleDetector {
    /// "the the": one error per adjacent repeated word.
    pub duplicate_words: bool,
    /// "a" before a vowel sound or "an" before a consonant sound.
    pub article_agreement: bool,
    /// First word starts with a lowercase letter.
    pub initial_capital: bool,
    /// One error per bracket kind whose counts differ, one for an odd
    /// number of straight double quotes.
    pub balanced_brackets: bool,
    /// Last token is not `.`, `?` or `!` (closing quotes/brackets skipped).
    pub terminal_punctuation: bool,
}

impl Default for RuleDetector {
    fn default() -> Self {
        Self {
            duplicate_words: true,
            article_agreement: true,
            initial_capital: true,
            balanced_brackets: true,
            terminal_punctuation: true,
        }
    }
}

// Spelling-based exceptions to the vowel-letter rule.
const AN_CONSONANT_LETTER: &[&str] = &["hour", "honest", "honor", "honour", "heir", "herb"];
const A_VOWEL_LETTER: &[&str] = &["one", "once", "user", "unique", "unit", "uni", "use", "usual", "euro", "eu", "ubiq", "utter", "unanim"];

fn starts_with_vowel_sound(word: &str) -> bool {
    let w = word.to_lowercase();
    if AN_CONSONANT_LETTER.iter().any(|p| w.starts_with(p)) {
        return true;
    }
    if A_VOWEL_LETTER.iter().any(|p| w.starts_with(p)) {
        return false;
    }
    w.starts_with(['a', 'e', 'i', 'o', 'u'])
}

impl RuleDetector {
    fn duplicates(&self, tokens: &[String]) -> usize {
        tokens
            .windows(2)
            .filter(|w| is_word_token(&w[0]) && w[0].to_lowercase() == w[1].to_lowercase())
            .count()
    }

    fn articles(&self, tokens: &[String]) -> usize {
        tokens
            .windows(2)
            .filter(|w| {
                let next = &w[1];
                if !next.chars().next().is_some_and(char::is_alphabetic) {
                    return false;
                }
                // acronyms are read letter by letter
                if next.len() > 1 && next.chars().all(|c| c.is_ascii_uppercase()) {
                    return false;
                }
                match w[0].to_lowercase().as_str() {
                    "a" => starts_with_vowel_sound(next),
                    "an" => !starts_with_vowel_sound(next),
                    _ => false,
                }
            })
            .count()
    }

    fn capital(&self, tokens: &[String]) -> usize {
        let first = tokens.iter().find(|t| is_word_token(t) || t.as_str() == MASK_TOKEN);
        match first.and_then(|t| t.chars().next()) {
            Some(c) if c.is_lowercase() => 1,
            _ => 0,
        }
    }

    fn brackets(&self, tokens: &[String]) -> usize {
        let count = |c: char| tokens.iter().flat_map(|t| t.chars()).filter(|&x| x == c).count();
        let mut errors = [('(', ')'), ('[', ']'), ('{', '}')]
            .iter()
            .filter(|(o, c)| count(*o) != count(*c))
            .count();
        if count('"') % 2 == 1 {
            errors += 1;
        }
        if count('\u{201C}') != count('\u{201D}') {
            errors += 1;
        }
        errors
    }

    fn terminal(&self, tokens: &[String]) -> usize {
        let last = tokens
            .iter()
            .rev()
            .find(|t| !matches!(t.as_str(), ")" | "]" | "\"" | "'" | "\u{201D}" | "\u{2019}"));
        match last.map(String::as_str) {
            Some(".") | Some("?") | Some("!") => 0,
            Some(_) => 1,
            None => 0,
        }
    }
}

impl ErrorDetector for RuleDetector {
    fn count_errors(&self, s: &Sentence) -> usize {
        let t = s.tokens();
        let mut n = 0;
        if self.duplicate_words {
            n += self.duplicates(t);
        }
        if self.article_agreement {
            n += self.articles(t);
        }
        if self.initial_capital {
            n += self.capital(t);
        }
        if self.balanced_brackets {
            n += self.brackets(t);
        }
        if self.terminal_punctuation {
            n += self.terminal(t);
        }
        n
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn formula() {
        assert_eq!(grammaticality_score(0, 7).unwrap(), 1.0);
        assert_abs_diff_eq!(grammaticality_score(2, 10).unwrap(), 0.8);
        assert_eq!(grammaticality_score(12, 10).unwrap(), 0.0);
        assert!(grammaticality_score(0, 0).is_err());
    }

    #[test]
    fn rules_individually() {
        let d = RuleDetector::default();
        let n = |t: &str| d.count_errors(&Sentence::new(t));
        assert_eq!(n("We propose a model."), 0);
        assert_eq!(n("We propose a an model."), 2);
        assert_eq!(n("We propose an model."), 1);
        assert_eq!(n("We propose a efficient model."), 1);
        assert_eq!(n("We propose an efficient model and a hour."), 1);
        assert_eq!(n("We use an LSTM and a unified model."), 0);
        assert_eq!(n("we propose a model."), 1);
        assert_eq!(n("We propose a model"), 1);
        assert_eq!(n("We propose (a model."), 1);
        assert_eq!(n("We propose \"a model."), 1);
        assert_eq!(n("We propose (a \"model\")."), 0);
        assert_eq!(n("We propose the the model."), 1);
    }

    #[test]
    fn duplicate_and_bracket_example() {
        let s = Sentence::new("the the model (works");
        assert_eq!(s.len(), 5);
        // all rules: duplicate, bracket, lowercase start, no terminal mark
        assert_eq!(RuleDetector::default().count_errors(&s), 4);
        assert_abs_diff_eq!(grammaticality(&s, &RuleDetector::default()).unwrap(), 0.2, epsilon = 1e-12);
        let narrow = RuleDetector {
            initial_capital: false,
            terminal_punctuation: false,
            ..Default::default()
        };
        assert_abs_diff_eq!(grammaticality(&s, &narrow).unwrap(), 0.6, epsilon = 1e-12);
    }

    #[test]
    fn closure_detector() {
        let two = |_: &Sentence| 2usize;
        let s = Sentence::new("a b c d e f g h i j");
        assert_abs_diff_eq!(grammaticality(&s, &two).unwrap(), 0.8);
    }
}
