//! Bundled English word lists: a frequency dictionary and a stopword list.

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::sync::OnceLock;

use crate::error::{Error, RecordError, Result};

const BUNDLED_DICTIONARY: &str = include_str!("../data/en_dictionary.tsv");
const BUNDLED_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

/// Version tag of the bundled stopword list; bump when the file changes.
pub const STOPWORDS_VERSION: &str = "en-318-v1";

/// Lowercased words with corpus frequencies.
#[derive(Debug, Clone, Default)]
pub struct Dictionary {
    freq: HashMap<String, u64>,
}

impl Dictionary {
    pub fn from_counts<I, S>(counts: I) -> Self
    where
        I: IntoIterator<Item = (S, u64)>,
        S: AsRef<str>,
    {
        let mut freq = HashMap::new();
        for (w, c) in counts {
            *freq.entry(w.as_ref().to_lowercase()).or_insert(0) += c;
        }
        Self { freq }
    }

    /// Parses `word<TAB>count` lines; a bare word counts as 1.
    pub fn parse(text: &str) -> std::result::Result<Self, RecordError> {
        let mut counts = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            let word = fields.next().unwrap_or_default();
            let count = match fields.next() {
                Some(c) => c.trim().parse::<u64>().map_err(|_| RecordError {
                    line: idx + 1,
                    message: format!("bad count {c:?}"),
                })?,
                None => 1,
            };
            counts.push((word.to_string(), count));
        }
        Ok(Self::from_counts(counts))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|record| Error::Record {
            path: path.to_path_buf(),
            record,
        })
    }

    /// The bundled English list (30k words).
    pub fn english() -> &'static Dictionary {
        static DICT: OnceLock<Dictionary> = OnceLock::new();
        DICT.get_or_init(|| Dictionary::parse(BUNDLED_DICTIONARY).expect("bundled dictionary is well-formed"))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.freq.contains_key(&word.to_lowercase())
    }

    pub fn frequency(&self, word: &str) -> Option<u64> {
        self.freq.get(&word.to_lowercase()).copied()
    }

    pub fn len(&self) -> usize {
        self.freq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freq.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.freq.iter().map(|(w, c)| (w.as_str(), *c))
    }
}

/// Lowercased stopword set.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stopwords(HashSet<String>);

impl Stopwords {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self(words.into_iter().map(|w| w.as_ref().trim().to_lowercase()).filter(|w| !w.is_empty()).collect())
    }

    pub fn english() -> &'static Stopwords {
        static WORDS: OnceLock<Stopwords> = OnceLock::new();
        WORDS.get_or_init(|| Stopwords::new(BUNDLED_STOPWORDS.lines()))
    }

    /// The bundled list as shipped, one word per line.
    pub fn bundled_text() -> &'static str {
        BUNDLED_STOPWORDS
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::new(text.lines()))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(&word.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}
