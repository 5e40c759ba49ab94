//! Flesch Reading Ease for single sentences.

use crate::corpus::{is_word_token, Sentence};
use crate::error::{Error, Result};

/// Syllable estimate: vowel groups (`y` counts as a vowel), minus one for a
/// silent final `e`, never below 1.
pub fn count_syllables(word: &str) -> usize {
    let letters: Vec<char> = word
        .chars()
        .filter(|c| c.is_alphabetic())
        .flat_map(char::to_lowercase)
        .collect();
    if letters.is_empty() {
        return 0;
    }
    let is_vowel = |c: char| matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y');
    let mut groups = 0;
    let mut prev_vowel = false;
    for &c in &letters {
        let v = is_vowel(c);
        if v && !prev_vowel {
            groups += 1;
        }
        prev_vowel = v;
    }
    let n = letters.len();
    if n >= 2 && letters[n - 1] == 'e' && !is_vowel(letters[n - 2]) {
        // "-le" after a consonant keeps its syllable (ta-ble)
        let syllabic_le = n >= 3 && letters[n - 2] == 'l' && !is_vowel(letters[n - 3]);
        if !syllabic_le {
            groups -= 1;
        }
    }
    groups.max(1)
}

/// Words (tokens with a letter) and their syllable total.
pub fn word_and_syllable_counts(s: &Sentence) -> (usize, usize) {
    s.tokens()
        .iter()
        .filter(|t| is_word_token(t))
        .fold((0, 0), |(w, syl), t| (w + 1, syl + count_syllables(t)))
}

pub fn flesch_reading_ease(words: usize, sentences: usize, syllables: usize) -> f64 {
    206.835 - 1.015 * (words as f64 / sentences as f64) - 84.6 * (syllables as f64 / words as f64)
}

/// FRE of one sentence (sentence count fixed at 1).
pub fn fre(s: &Sentence) -> Result<f64> {
    let (words, syllables) = word_and_syllable_counts(s);
    if words == 0 {
        return Err(Error::NoWords);
    }
    Ok(flesch_reading_ease(words, 1, syllables))
}
