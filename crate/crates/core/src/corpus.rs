//! Sentences, draft/reference pairs, tokenization and corpus selection filters.

use std::collections::{BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::ops::Range;
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, RecordError, Result};

/// Gap marker a writer leaves where the wording is unknown.
pub const MASK_TOKEN: &str = "<*>";

/// Punctuation that is split off the edges of whitespace-delimited chunks.
pub fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{2018}' | '\u{2019}' | '\u{201C}' | '\u{201D}' | '\u{2013}' | '\u{2014}' | '\u{2026}'
                | '\u{00AB}' | '\u{00BB}' | '\u{201E}' | '\u{00B7}' | '\u{00BF}' | '\u{00A1}'
        )
}

/// True when every character of `token` is punctuation.
pub fn is_punct_token(token: &str) -> bool {
    !token.is_empty() && token != MASK_TOKEN && token.chars().all(is_punct)
}

/// True for tokens that contain at least one alphabetic character.
pub fn is_word_token(token: &str) -> bool {
    token != MASK_TOKEN && token.chars().any(char::is_alphabetic)
}

/// Byte ranges of the tokens of `text`.
///
/// Whitespace separates chunks; each chunk is split around literal `<*>`
/// markers, and punctuation characters at either edge of the remaining
/// pieces become single-character tokens.
pub fn token_spans(text: &str) -> Vec<Range<usize>> {
    let mut spans = Vec::new();
    let mut chunk_start = None;
    for (i, c) in text.char_indices().chain(std::iter::once((text.len(), ' '))) {
        if c.is_whitespace() {
            if let Some(start) = chunk_start.take() {
                split_chunk(text, start, i, &mut spans);
            }
        } else if chunk_start.is_none() {
            chunk_start = Some(i);
        }
    }
    spans
}

fn split_chunk(text: &str, start: usize, end: usize, out: &mut Vec<Range<usize>>) {
    let chunk = &text[start..end];
    let mut cursor = 0;
    while let Some(pos) = chunk[cursor..].find(MASK_TOKEN) {
        let mask_at = cursor + pos;
        split_piece(text, start + cursor, start + mask_at, out);
        out.push(start + mask_at..start + mask_at + MASK_TOKEN.len());
        cursor = mask_at + MASK_TOKEN.len();
    }
    split_piece(text, start + cursor, end, out);
}

fn split_piece(text: &str, mut start: usize, end: usize, out: &mut Vec<Range<usize>>) {
    let piece = &text[start..end];
    if piece.is_empty() {
        return;
    }
    let mut chars = piece.char_indices().peekable();
    // leading punctuation
    while let Some(&(i, c)) = chars.peek() {
        if !is_punct(c) {
            break;
        }
        out.push(start + i..start + i + c.len_utf8());
        chars.next();
    }
    let body_start = match chars.peek() {
        Some(&(i, _)) => start + i,
        None => return,
    };
    start = body_start;
    let mut trailing = Vec::new();
    let mut body_end = end;
    for (i, c) in text[start..end].char_indices().rev() {
        if !is_punct(c) {
            break;
        }
        trailing.push(start + i..start + i + c.len_utf8());
        body_end = start + i;
    }
    if body_end > start {
        out.push(start..body_end);
    }
    out.extend(trailing.into_iter().rev());
}

/// Splits `text` into tokens. `<*>` always survives as one token.
pub fn tokenize(text: &str) -> Vec<String> {
    token_spans(text)
        .into_iter()
        .map(|r| text[r].to_string())
        .collect()
}

/// Lowercase and collapse whitespace runs; used for exclusion-set lookups.
pub fn normalize(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// A sentence together with its tokenization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    text: String,
    tokens: Vec<String>,
    char_len: usize,
}

impl Sentence {
    pub fn new(text: impl Into<String>) -> Self {
        let text = text.into();
        let tokens = tokenize(&text);
        let char_len = text.chars().count();
        Self {
            text,
            tokens,
            char_len,
        }
    }

    /// Builds a sentence whose text is the space-joined tokens.
    pub fn from_tokens<S: AsRef<str>>(tokens: &[S]) -> Self {
        let text = tokens
            .iter()
            .map(AsRef::as_ref)
            .collect::<Vec<_>>()
            .join(" ");
        Self::new(text)
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Number of Unicode scalar values in the text.
    pub fn char_len(&self) -> usize {
        self.char_len
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn has_mask(&self) -> bool {
        self.tokens.iter().any(|t| t == MASK_TOKEN)
    }
}

impl Serialize for Sentence {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.text)
    }
}

impl<'de> Deserialize<'de> for Sentence {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(deserializer).map(Sentence::new)
    }
}

/// A draft sentence and the final version it should be revised into.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DraftPair {
    pub draft: Sentence,
    pub reference: Sentence,
    pub has_mask: bool,
}

impl DraftPair {
    /// Fails when the reference contains the mask marker.
    pub fn new(draft: Sentence, reference: Sentence) -> std::result::Result<Self, String> {
        if reference.text().contains(MASK_TOKEN) {
            return Err(format!("reference contains the mask token {MASK_TOKEN}"));
        }
        let has_mask = draft.has_mask();
        Ok(Self {
            draft,
            reference,
            has_mask,
        })
    }

    pub fn from_texts(draft: &str, reference: &str) -> std::result::Result<Self, String> {
        Self::new(Sentence::new(draft), Sentence::new(reference))
    }

    pub fn is_changed(&self) -> bool {
        self.draft.text() != self.reference.text()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CharClass {
    /// Mathematical operators, arrows, super/subscripts and LaTeX residue.
    Math,
    Greek,
    Url,
    Citation,
}

impl CharClass {
    pub const ALL: [CharClass; 4] = [CharClass::Math, CharClass::Greek, CharClass::Url, CharClass::Citation];
}

fn default_classes() -> BTreeSet<CharClass> {
    CharClass::ALL.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusFilterConfig {
    pub min_chars: usize,
    pub max_chars: usize,
    pub forbidden_char_classes: BTreeSet<CharClass>,
    /// Additional regular expressions; a match rejects the sentence.
    pub extra_patterns: Vec<String>,
    pub min_tokens: usize,
    pub max_tokens: usize,
    pub min_alpha_ratio: f64,
}

impl Default for CorpusFilterConfig {
    fn default() -> Self {
        Self {
            min_chars: 70,
            max_chars: 120,
            forbidden_char_classes: default_classes(),
            extra_patterns: Vec::new(),
            min_tokens: 5,
            max_tokens: 35,
            min_alpha_ratio: 0.5,
        }
    }
}

impl CorpusFilterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_chars > self.max_chars {
            return Err(Error::Config(format!(
                "min_chars ({}) > max_chars ({})",
                self.min_chars, self.max_chars
            )));
        }
        if self.min_tokens > self.max_tokens {
            return Err(Error::Config(format!(
                "min_tokens ({}) > max_tokens ({})",
                self.min_tokens, self.max_tokens
            )));
        }
        if !(0.0..=1.0).contains(&self.min_alpha_ratio) {
            return Err(Error::Config(format!(
                "min_alpha_ratio {} outside [0, 1]",
                self.min_alpha_ratio
            )));
        }
        Ok(())
    }
}

const URL_PATTERN: &str = r"(?i)(?:https?://|ftp://|www\.)\S+|\b[\w.-]+\.(?:com|org|net|edu|gov|io)\b";
const CITATION_PATTERN: &str = r"\[\s*\d+(?:\s*[,;\u{2013}-]\s*\d+)*\s*\]|\bet al\b|\b(?:CITATION|CITE|MATH|URL|FOOTNOTE|REF)\b|@cite|\([A-Z][A-Za-z'-]+(?:\s+(?:and|&)\s+[A-Z][A-Za-z'-]+)?(?:\s+et al\.)?,?\s+(?:19|20)\d{2}[a-z]?\)";

fn is_math_char(c: char) -> bool {
    matches!(c,
        '\u{2200}'..='\u{22FF}'
        | '\u{2A00}'..='\u{2AFF}'
        | '\u{27C0}'..='\u{27EF}'
        | '\u{2980}'..='\u{29FF}'
        | '\u{2190}'..='\u{21FF}'
        | '\u{2070}'..='\u{209F}'
        | '\u{1D400}'..='\u{1D7FF}'
        | '\u{00B1}' | '\u{00D7}' | '\u{00F7}' | '\u{00AC}' | '\u{00B2}' | '\u{00B3}' | '\u{00B9}'
        | '=' | '^' | '<' | '>' | '|' | '~' | '\\' | '{' | '}' | '_' | '$')
}

fn is_greek_char(c: char) -> bool {
    matches!(c, '\u{0370}'..='\u{03FF}' | '\u{1F00}'..='\u{1FFF}')
}

/// Why a sentence failed a filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rejection {
    TooShort,
    TooLong,
    Forbidden(Option<CharClass>),
    TooFewTokens,
    TooManyTokens,
    LowAlphaRatio,
    Excluded,
}

/// Compiled form of [`CorpusFilterConfig`].
#[derive(Debug, Clone)]
pub struct SentenceFilter {
    cfg: CorpusFilterConfig,
    url: Option<Regex>,
    citation: Option<Regex>,
    extra: Vec<Regex>,
}

impl SentenceFilter {
    pub fn new(cfg: CorpusFilterConfig) -> Result<Self> {
        cfg.validate()?;
        let compile = |p: &str| Regex::new(p).map_err(|e| Error::Config(format!("bad pattern {p:?}: {e}")));
        let url = if cfg.forbidden_char_classes.contains(&CharClass::Url) {
            Some(compile(URL_PATTERN)?)
        } else {
            None
        };
        let citation = if cfg.forbidden_char_classes.contains(&CharClass::Citation) {
            Some(compile(CITATION_PATTERN)?)
        } else {
            None
        };
        let extra = cfg
            .extra_patterns
            .iter()
            .map(|p| compile(p))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            cfg,
            url,
            citation,
            extra,
        })
    }

    pub fn config(&self) -> &CorpusFilterConfig {
        &self.cfg
    }

    fn forbidden(&self, text: &str) -> Option<Rejection> {
        let classes = &self.cfg.forbidden_char_classes;
        if classes.contains(&CharClass::Math) && text.chars().any(is_math_char) {
            return Some(Rejection::Forbidden(Some(CharClass::Math)));
        }
        if classes.contains(&CharClass::Greek) && text.chars().any(is_greek_char) {
            return Some(Rejection::Forbidden(Some(CharClass::Greek)));
        }
        if self.url.as_ref().is_some_and(|re| re.is_match(text)) {
            return Some(Rejection::Forbidden(Some(CharClass::Url)));
        }
        if self.citation.as_ref().is_some_and(|re| re.is_match(text)) {
            return Some(Rejection::Forbidden(Some(CharClass::Citation)));
        }
        if self.extra.iter().any(|re| re.is_match(text)) {
            return Some(Rejection::Forbidden(None));
        }
        None
    }

    /// Checks the final-version conditions: length in characters and no
    /// forbidden character class.
    pub fn check_final(&self, s: &Sentence) -> Option<Rejection> {
        if s.char_len() < self.cfg.min_chars {
            return Some(Rejection::TooShort);
        }
        if s.char_len() > self.cfg.max_chars {
            return Some(Rejection::TooLong);
        }
        self.forbidden(s.text())
    }

    /// Checks the noising-corpus conditions: token count, alphabetic ratio
    /// and absence from `exclusion` (normalized texts).
    pub fn check_training(&self, s: &Sentence, exclusion: &HashSet<String>) -> Option<Rejection> {
        if s.len() < self.cfg.min_tokens {
            return Some(Rejection::TooFewTokens);
        }
        if s.len() > self.cfg.max_tokens {
            return Some(Rejection::TooManyTokens);
        }
        if alpha_ratio(s.text()) < self.cfg.min_alpha_ratio {
            return Some(Rejection::LowAlphaRatio);
        }
        if exclusion.contains(&normalize(s.text())) {
            return Some(Rejection::Excluded);
        }
        None
    }
}

/// Fraction of non-whitespace characters that are alphabetic.
pub fn alpha_ratio(text: &str) -> f64 {
    let (alpha, total) = text
        .chars()
        .filter(|c| !c.is_whitespace())
        .fold((0usize, 0usize), |(a, t), c| (a + c.is_alphabetic() as usize, t + 1));
    if total == 0 {
        0.0
    } else {
        alpha as f64 / total as f64
    }
}

pub fn filter_final_sentences<'a, I>(sentences: I, filter: &'a SentenceFilter) -> impl Iterator<Item = Sentence> + 'a
where
    I: IntoIterator<Item = Sentence>,
    I::IntoIter: 'a,
{
    sentences
        .into_iter()
        .filter(move |s| filter.check_final(s).is_none())
}

pub fn filter_training_sentences<'a, I>(
    sentences: I,
    filter: &'a SentenceFilter,
    exclusion: &'a HashSet<String>,
) -> impl Iterator<Item = Sentence> + 'a
where
    I: IntoIterator<Item = Sentence>,
    I::IntoIter: 'a,
{
    sentences
        .into_iter()
        .filter(move |s| filter.check_training(s, exclusion).is_none())
}

/// Lines of a file, with non-UTF-8 lines reported as record errors.
pub fn read_lines(path: &Path) -> Result<Vec<std::result::Result<String, RecordError>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).split(b'\n').enumerate() {
        let mut bytes = line.map_err(|e| Error::io(path, e))?;
        if bytes.last() == Some(&b'\r') {
            bytes.pop();
        }
        out.push(String::from_utf8(bytes).map_err(|_| RecordError {
            line: idx + 1,
            message: "invalid UTF-8".into(),
        }));
    }
    Ok(out)
}

/// Sentence-per-line input. Blank lines are skipped.
#[derive(Debug, Default)]
pub struct SentenceFile {
    pub sentences: Vec<Sentence>,
    /// Source line of each sentence, 1-based.
    pub lines: Vec<usize>,
    pub errors: Vec<RecordError>,
}

pub fn read_sentences(path: &Path) -> Result<SentenceFile> {
    let mut out = SentenceFile::default();
    for (idx, line) in read_lines(path)?.into_iter().enumerate() {
        match line {
            Ok(text) if text.trim().is_empty() => {}
            Ok(text) => {
                out.sentences.push(Sentence::new(text));
                out.lines.push(idx + 1);
            }
            Err(e) => out.errors.push(e),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairFormat {
    Tsv,
    Jsonl,
}

impl PairFormat {
    /// Guesses from the file extension; anything but `.jsonl`/`.json` is TSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => PairFormat::Jsonl,
            _ => PairFormat::Tsv,
        }
    }
}

#[derive(Debug, Default)]
pub struct PairFile {
    pub pairs: Vec<DraftPair>,
    pub errors: Vec<RecordError>,
}

#[derive(Deserialize)]
struct JsonPair {
    draft: String,
    reference: String,
}

pub fn parse_pair_line(line: &str, format: PairFormat) -> std::result::Result<DraftPair, String> {
    let (draft, reference) = match format {
        PairFormat::Tsv => {
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 2 {
                return Err(format!("expected 2 tab-separated fields, found {}", fields.len()));
            }
            (fields[0].to_string(), fields[1].to_string())
        }
        PairFormat::Jsonl => {
            let rec: JsonPair = serde_json::from_str(line).map_err(|e| format!("bad JSON record: {e}"))?;
            (rec.draft, rec.reference)
        }
    };
    DraftPair::from_texts(&draft, &reference)
}

/// Loads a pair file. File-level failures are errors; malformed records are
/// collected in [`PairFile::errors`] and skipped.
pub fn load_pairs(path: &Path, format: PairFormat) -> Result<PairFile> {
    let mut out = PairFile::default();
    for (idx, line) in read_lines(path)?.into_iter().enumerate() {
        let line_no = idx + 1;
        match line {
            Ok(text) => {
                if format == PairFormat::Jsonl && text.trim().is_empty() {
                    continue;
                }
                match parse_pair_line(&text, format) {
                    Ok(p) => out.pairs.push(p),
                    Err(message) => out.errors.push(RecordError {
                        line: line_no,
                        message,
                    }),
                }
            }
            Err(e) => out.errors.push(e),
        }
    }
    Ok(out)
}

pub fn write_pairs_tsv<W: Write>(mut w: W, pairs: &[DraftPair]) -> std::io::Result<()> {
    for p in pairs {
        writeln!(w, "{}\t{}", p.draft.text(), p.reference.text())?;
    }
    Ok(())
}
