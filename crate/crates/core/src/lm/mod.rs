//! Backoff n-gram language models.
//!
//! Models are stored in ARPA backoff form: every observed n-gram carries a
//! log10 probability and (below the top order) a log10 backoff weight. A
//! query walks from the longest matching n-gram down, adding backoff
//! weights of the contexts it skips.

mod arpa;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::Sentence;
use crate::error::{Error, Result};

pub use arpa::{load_arpa, parse_arpa, save_arpa, write_arpa};

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";

/// log10 probability assigned to `<s>` as a predicted word (never predicted).
pub const BOS_LOGPROB: f64 = -99.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum Smoothing {
    InterpolatedKneserNey,
    AddK { k: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LmConfig {
    pub order: usize,
    pub smoothing: Smoothing,
    /// Minimum linear probability of `<unk>` in the unigram distribution.
    pub unk_floor: f64,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self {
            order: 5,
            smoothing: Smoothing::InterpolatedKneserNey,
            unk_floor: 1e-7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Entry {
    pub logprob: f64,
    pub backoff: f64,
}

type Key = Vec<u32>;

/// A backoff n-gram model with a closed vocabulary plus `<unk>`.
#[derive(Debug, Clone)]
pub struct NGramModel {
    order: usize,
    words: Vec<String>,
    ids: HashMap<String, u32>,
    /// `tables[n - 1]` holds the n-grams.
    tables: Vec<HashMap<Key, Entry>>,
}

impl NGramModel {
    fn empty(order: usize) -> Self {
        let mut model = Self {
            order,
            words: Vec::new(),
            ids: HashMap::new(),
            tables: vec![HashMap::new(); order],
        };
        for w in [BOS, EOS, UNK] {
            model.intern(w);
        }
        model
    }

    fn intern(&mut self, word: &str) -> u32 {
        if let Some(&id) = self.ids.get(word) {
            return id;
        }
        let id = self.words.len() as u32;
        self.words.push(word.to_string());
        self.ids.insert(word.to_string(), id);
        id
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Vocabulary size including `<s>`, `</s>` and `<unk>`.
    pub fn vocab_len(&self) -> usize {
        self.words.len()
    }

    pub fn contains_word(&self, word: &str) -> bool {
        self.ids.contains_key(word)
    }

    /// Number of stored n-grams of each order.
    pub fn counts(&self) -> Vec<usize> {
        self.tables.iter().map(HashMap::len).collect()
    }

    fn bos(&self) -> u32 {
        self.ids[BOS]
    }

    fn eos(&self) -> u32 {
        self.ids[EOS]
    }

    fn unk(&self) -> u32 {
        self.ids[UNK]
    }

    fn word_id(&self, word: &str) -> u32 {
        match self.ids.get(word) {
            Some(&id) if word != BOS => id,
            _ => self.unk(),
        }
    }

    fn entry(&self, key: &[u32]) -> Option<&Entry> {
        self.tables.get(key.len().checked_sub(1)?)?.get(key)
    }

    /// log10 P(word | context) with backoff; `context` is oldest-first and
    /// may be longer than the model order.
    fn log_cond(&self, context: &[u32], word: u32) -> f64 {
        let keep = context.len().min(self.order - 1);
        let context = &context[context.len() - keep..];
        let mut backoff = 0.0;
        let mut key = Vec::with_capacity(keep + 1);
        for start in 0..=keep {
            key.clear();
            key.extend_from_slice(&context[start..]);
            key.push(word);
            if let Some(e) = self.entry(&key) {
                return backoff + e.logprob;
            }
            if start < keep {
                if let Some(ctx) = self.entry(&context[start..]) {
                    backoff += ctx.backoff;
                }
            }
        }
        // word has no unigram entry; score as unknown
        backoff + self.entry(&[self.unk()]).map_or(-100.0, |e| e.logprob)
    }

    /// log10 probability of `word` after `context` (oldest first). Strings
    /// are mapped to `<unk>` when out of vocabulary; `<s>` is honored in
    /// the context.
    pub fn log10_prob<S: AsRef<str>>(&self, context: &[S], word: &str) -> f64 {
        let ctx: Vec<u32> = context
            .iter()
            .map(|w| match w.as_ref() {
                BOS => self.bos(),
                other => self.word_id(other),
            })
            .collect();
        let w = if word == EOS { self.eos() } else { self.word_id(word) };
        self.log_cond(&ctx, w)
    }

    /// Sum of per-token log10 probabilities including the end-of-sentence
    /// event.
    pub fn sentence_logprob(&self, s: &Sentence) -> f64 {
        self.tokens_logprob(s.tokens())
    }

    pub fn tokens_logprob<S: AsRef<str>>(&self, tokens: &[S]) -> f64 {
        let mut history = Vec::with_capacity(tokens.len() + 2);
        history.push(self.bos());
        let mut total = 0.0;
        for t in tokens {
            let id = self.word_id(t.as_ref());
            total += self.log_cond(&history, id);
            history.push(id);
        }
        total + self.log_cond(&history, self.eos())
    }

    /// 10^(-logprob / (tokens + 1)); the start marker is not counted.
    pub fn perplexity(&self, s: &Sentence) -> f64 {
        perplexity_from_logprob(self.sentence_logprob(s), s.len())
    }

    /// Contexts (as token strings) that have at least one stored
    /// continuation, in deterministic order. The empty context is first.
    pub fn contexts(&self) -> Vec<Vec<String>> {
        let mut out: Vec<Vec<String>> = vec![Vec::new()];
        let mut seen: Vec<Key> = Vec::new();
        for table in self.tables.iter().skip(1) {
            for key in table.keys() {
                seen.push(key[..key.len() - 1].to_vec());
            }
        }
        seen.sort();
        seen.dedup();
        let mut named: Vec<Vec<String>> = seen
            .into_iter()
            .map(|k| k.iter().map(|&i| self.words[i as usize].clone()).collect())
            .collect();
        named.sort();
        out.extend(named);
        out
    }

    /// Linear-space mass of a context: stored continuations plus the
    /// backoff weight times the lower-order mass of unseen words. Equals 1
    /// for a normalized model. `None` if the context has no continuations.
    pub fn context_mass<S: AsRef<str>>(&self, context: &[S]) -> Option<f64> {
        let ctx: Vec<u32> = context.iter().map(|w| self.ids.get(w.as_ref()).copied()).collect::<Option<_>>()?;
        if ctx.is_empty() {
            let bos = self.bos();
            let total: f64 = self.tables[0]
                .iter()
                .filter(|(k, _)| k[0] != bos)
                .map(|(_, e)| 10f64.powf(e.logprob))
                .sum();
            return Some(total);
        }
        let table = self.tables.get(ctx.len())?;
        let continuations: Vec<(u32, f64)> = table
            .iter()
            .filter(|(k, _)| k[..ctx.len()] == ctx[..])
            .map(|(k, e)| (k[ctx.len()], e.logprob))
            .collect();
        if continuations.is_empty() {
            return None;
        }
        let seen: f64 = continuations.iter().map(|(_, lp)| 10f64.powf(*lp)).sum();
        let lower_seen: f64 = continuations
            .iter()
            .map(|(w, _)| 10f64.powf(self.log_cond(&ctx[1..], *w)))
            .sum();
        let backoff = self.entry(&ctx).map_or(0.0, |e| e.backoff);
        Some(seen + 10f64.powf(backoff) * (1.0 - lower_seen))
    }
}

pub fn perplexity_from_logprob(logprob: f64, token_count: usize) -> f64 {
    10f64.powf(-logprob / (token_count + 1) as f64)
}

/// Counts of n-grams of one order, sorted so continuations of a context are
/// contiguous.
type Counts = BTreeMap<Key, u64>;

/// Trains a model on tokenized sentences.
pub fn train<'a, I>(corpus: I, cfg: &LmConfig) -> Result<NGramModel>
where
    I: IntoIterator<Item = &'a Sentence>,
{
    train_tokens(corpus.into_iter().map(|s| s.tokens()), cfg)
}

pub fn train_tokens<I, T, S>(corpus: I, cfg: &LmConfig) -> Result<NGramModel>
where
    I: IntoIterator<Item = T>,
    T: AsRef<[S]>,
    S: AsRef<str>,
{
    if cfg.order < 1 {
        return Err(Error::Config("order must be at least 1".into()));
    }
    if let Smoothing::AddK { k } = cfg.smoothing {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::Config(format!("add-k constant must be positive, got {k}")));
        }
    }
    if !(0.0..1.0).contains(&cfg.unk_floor) {
        return Err(Error::Config(format!("unk_floor {} outside [0, 1)", cfg.unk_floor)));
    }
    let order = cfg.order;
    let mut model = NGramModel::empty(order);
    let mut counts: Vec<Counts> = vec![Counts::new(); order];
    let bos = model.bos();
    let eos = model.eos();
    let mut sentences = 0usize;
    for sent in corpus {
        sentences += 1;
        let mut seq = vec![bos];
        for t in sent.as_ref() {
            let t = t.as_ref();
            let id = if t == BOS || t == EOS { model.unk() } else { model.intern(t) };
            seq.push(id);
        }
        seq.push(eos);
        for n in 1..=order {
            for window in seq.windows(n) {
                if n == 1 && window[0] == bos {
                    continue;
                }
                *counts[n - 1].entry(window.to_vec()).or_insert(0) += 1;
            }
        }
    }
    if sentences == 0 {
        return Err(Error::EmptyInput("training corpus"));
    }
    match cfg.smoothing {
        Smoothing::InterpolatedKneserNey => build_kneser_ney(&mut model, &counts, cfg.unk_floor),
        Smoothing::AddK { k } => build_add_k(&mut model, &counts, k, cfg.unk_floor),
    }
    Ok(model)
}

/// Continuation counts for every order below the top one; n-grams that
/// start with `<s>` keep their raw counts.
fn adjusted_counts(counts: &[Counts], bos: u32) -> Vec<Counts> {
    let order = counts.len();
    let mut adjusted = counts.to_vec();
    for n in 1..order {
        let mut left: HashMap<&[u32], u64> = HashMap::new();
        for key in counts[n].keys() {
            *left.entry(&key[1..]).or_insert(0) += 1;
        }
        for (key, value) in adjusted[n - 1].iter_mut() {
            if key[0] != bos {
                // every non-initial occurrence has a left neighbour
                *value = left.get(key.as_slice()).copied().unwrap_or(0);
            }
        }
    }
    adjusted
}

fn discount(counts: &Counts) -> f64 {
    let n1 = counts.values().filter(|&&c| c == 1).count() as f64;
    let n2 = counts.values().filter(|&&c| c == 2).count() as f64;
    let d = n1 / (n1 + 2.0 * n2);
    if d > 0.0 && d < 1.0 {
        d
    } else {
        0.5
    }
}

/// Applies the `<unk>` floor to a linear unigram distribution (indexed by
/// word id, `<s>` excluded by the caller).
fn apply_unk_floor(probs: &mut [(u32, f64)], unk: u32, floor: f64) {
    let Some(pos) = probs.iter().position(|(w, _)| *w == unk) else {
        return;
    };
    let current = probs[pos].1;
    if current >= floor {
        return;
    }
    let scale = (1.0 - floor) / (1.0 - current);
    for (w, p) in probs.iter_mut() {
        *p = if *w == unk { floor } else { *p * scale };
    }
}

fn insert_unigrams(model: &mut NGramModel, probs: Vec<(u32, f64)>) {
    let bos = model.bos();
    model.tables[0].insert(
        vec![bos],
        Entry {
            logprob: BOS_LOGPROB,
            backoff: 0.0,
        },
    );
    for (w, p) in probs {
        model.tables[0].insert(
            vec![w],
            Entry {
                logprob: p.log10(),
                backoff: 0.0,
            },
        );
    }
}

fn unigram_support(model: &NGramModel) -> Vec<u32> {
    let bos = model.bos();
    (0..model.words.len() as u32).filter(|&w| w != bos).collect()
}

fn build_kneser_ney(model: &mut NGramModel, counts: &[Counts], unk_floor: f64) {
    let order = counts.len();
    let adjusted = adjusted_counts(counts, model.bos());

    // unigrams: discounted continuation counts interpolated with uniform
    let d1 = discount(&adjusted[0]);
    let total: f64 = adjusted[0].values().map(|&c| c as f64).sum();
    let types = adjusted[0].values().filter(|&&c| c > 0).count() as f64;
    let support = unigram_support(model);
    let gamma = d1 * types / total;
    let uniform = 1.0 / support.len() as f64;
    let mut probs: Vec<(u32, f64)> = support
        .iter()
        .map(|&w| {
            let a = adjusted[0].get(&vec![w]).copied().unwrap_or(0) as f64;
            let p = (a - d1).max(0.0) / total + gamma * uniform;
            (w, p)
        })
        .collect();
    apply_unk_floor(&mut probs, model.unk(), unk_floor);
    insert_unigrams(model, probs);

    for n in 2..=order {
        let d = discount(&adjusted[n - 1]);
        let mut table = HashMap::new();
        let mut backoffs = Vec::new();
        for group in context_groups(&adjusted[n - 1]) {
            let ctx = &group[0].0[..n - 1];
            let total: f64 = group.iter().map(|(_, c)| *c as f64).sum();
            let gamma = d * group.len() as f64 / total;
            for (key, c) in &group {
                let lower = 10f64.powf(model.log_cond(&key[1..n - 1], key[n - 1]));
                let p = (*c as f64 - d) / total + gamma * lower;
                table.insert(
                    key.to_vec(),
                    Entry {
                        logprob: p.log10(),
                        backoff: 0.0,
                    },
                );
            }
            backoffs.push((ctx.to_vec(), gamma.log10()));
        }
        set_backoffs(model, backoffs);
        model.tables[n - 1] = table;
    }
}

fn build_add_k(model: &mut NGramModel, counts: &[Counts], k: f64, unk_floor: f64) {
    let order = counts.len();
    let support = unigram_support(model);
    let vocab = support.len() as f64;
    let total: f64 = counts[0].values().map(|&c| c as f64).sum();
    let mut probs: Vec<(u32, f64)> = support
        .iter()
        .map(|&w| {
            let c = counts[0].get(&vec![w]).copied().unwrap_or(0) as f64;
            (w, (c + k) / (total + k * vocab))
        })
        .collect();
    apply_unk_floor(&mut probs, model.unk(), unk_floor);
    insert_unigrams(model, probs);

    for n in 2..=order {
        let mut table = HashMap::new();
        let mut backoffs = Vec::new();
        for group in context_groups(&counts[n - 1]) {
            let ctx = &group[0].0[..n - 1];
            let total: f64 = group.iter().map(|(_, c)| *c as f64).sum();
            let mut seen = 0.0;
            let mut lower_seen = 0.0;
            for (key, c) in &group {
                let p = (*c as f64 + k) / (total + k * vocab);
                seen += p;
                lower_seen += 10f64.powf(model.log_cond(&key[1..n - 1], key[n - 1]));
                table.insert(
                    key.to_vec(),
                    Entry {
                        logprob: p.log10(),
                        backoff: 0.0,
                    },
                );
            }
            let free = 1.0 - lower_seen;
            let bow = if free > 1e-12 { (1.0 - seen) / free } else { 1.0 };
            backoffs.push((ctx.to_vec(), bow.log10()));
        }
        set_backoffs(model, backoffs);
        model.tables[n - 1] = table;
    }
}

fn set_backoffs(model: &mut NGramModel, backoffs: Vec<(Key, f64)>) {
    for (ctx, bow) in backoffs {
        let n = ctx.len();
        if let Some(e) = model.tables[n - 1].get_mut(&ctx) {
            e.backoff = bow;
        }
    }
}

/// Splits sorted n-gram counts into runs sharing the same context.
fn context_groups(counts: &Counts) -> Vec<Vec<(&[u32], u64)>> {
    let mut groups: Vec<Vec<(&[u32], u64)>> = Vec::new();
    for (key, &c) in counts {
        if c == 0 {
            continue;
        }
        let ctx = &key[..key.len() - 1];
        match groups.last_mut() {
            Some(g) if &g[0].0[..key.len() - 1] == ctx => g.push((key.as_slice(), c)),
            _ => groups.push(vec![(key.as_slice(), c)]),
        }
    }
    groups
}
