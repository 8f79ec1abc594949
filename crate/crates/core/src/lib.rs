//! Filtering of mistranslated sentence pairs from parallel corpora.
//!
//! A translator (any sentence-to-sentence function) is scored on a validation
//! set; training pairs whose sentence BLEU falls below a fraction of that score
//! are discarded. The crate also carries the pieces the pipeline needs:
//! corpus I/O and splitting ([`corpus`]), normalization, tokenization and BPE
//! ([`textnorm`]), BLEU/METEOR/RIBES ([`metrics`]) and translation backends
//! ([`translators`]). Per-pair scoring runs on rayon when the `parallel`
//! feature is enabled (the default) and sequentially otherwise.

pub mod cli;
pub mod corpus;
pub mod metrics;
pub mod parallel;
pub mod sieve;
pub mod textnorm;
pub mod translators;

pub use corpus::{LanguageTag, ParallelCorpus, SentencePair, SplitSpec};
pub use parallel::Exec;
pub use sieve::{filter_corpus, FilterReport, SieveConfig, Threshold};
pub use textnorm::{tokenize, TokenSequence};
pub use translators::Translator;
