//! Toolkit for building and evaluating draft-to-final sentence revision data.
//!
//! The crate covers the whole data pipeline:
//!
//! * [`corpus`]: tokenization, sentence selection filters and pair-file IO.
//! * [`lm`]: backoff n-gram language models (Kneser-Ney and add-k) with ARPA IO.
//! * [`noising`]: heuristic synthetic-draft generation and a randomized beam search.
//! * [`quality`]: crowdworker scoring, spell checking and the overlap pair filter.
//! * [`metrics`]: BLEU, ROUGE-L, edit-level F0.5, grammaticality, readability and style checks.
//! * [`analysis`]: dataset-level profiling built on the above.

pub mod analysis;
pub mod corpus;
mod error;
pub mod lexicon;
pub mod lm;
pub mod metrics;
pub mod noising;
pub mod quality;

pub use corpus::{tokenize, DraftPair, Sentence, MASK_TOKEN};
pub use error::{Error, RecordError, Result};
