//! Aligned parallel corpora: loading, validation, splitting, persistence.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::textnorm::tokenize;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("line count mismatch: source has {0} lines, target has {1}")]
    LineCountMismatch(usize, usize),
    #[error("invalid UTF-8 in {stream} stream at byte offset {offset} (line {line})")]
    InvalidEncoding {
        stream: &'static str,
        line: usize,
        offset: u64,
    },
    #[error("TSV line {line} has {found} columns, expected 2")]
    TsvColumns { line: usize, found: usize },
    #[error("pair {index} contains a line terminator")]
    LineTerminator { index: usize },
    #[error("invalid language tag {0:?}: must be non-empty, lowercase, without whitespace")]
    InvalidLanguageTag(String),
    #[error("source and target language are both {0:?}")]
    SameLanguage(String),
    #[error("cannot take first {k} pairs of a corpus with {n}")]
    FirstKTooLarge { k: usize, n: usize },
    #[error("validation size {size} out of range for a corpus of {n} pairs")]
    SizeOutOfRange { size: usize, n: usize },
    #[error("invalid split spec {0:?}")]
    InvalidSplitSpec(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LanguageTag(String);

impl LanguageTag {
    pub fn new(code: impl Into<String>) -> Result<Self, CorpusError> {
        let code = code.into();
        if code.is_empty() || code.chars().any(|c| c.is_whitespace() || c.is_uppercase()) {
            return Err(CorpusError::InvalidLanguageTag(code));
        }
        Ok(Self(code))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for LanguageTag {
    type Error = CorpusError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        Self::new(s)
    }
}

impl From<LanguageTag> for String {
    fn from(tag: LanguageTag) -> Self {
        tag.0
    }
}

impl FromStr for LanguageTag {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::new(s)
    }
}

impl fmt::Display for LanguageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentencePair {
    pub index: usize,
    pub source: String,
    pub target: String,
}

fn has_terminator(s: &str) -> bool {
    s.contains('\n') || s.ends_with('\r')
}

/// Aligned list of sentence pairs. Indices are always `0..len` in order and
/// the corpus cannot be mutated after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelCorpus {
    pairs: Vec<SentencePair>,
    source_lang: LanguageTag,
    target_lang: LanguageTag,
}

impl ParallelCorpus {
    /// Builds a corpus from `(source, target)` lines, assigning indices in order.
    pub fn new<I, S, T>(
        lines: I,
        source_lang: LanguageTag,
        target_lang: LanguageTag,
    ) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = (S, T)>,
        S: Into<String>,
        T: Into<String>,
    {
        if source_lang == target_lang {
            return Err(CorpusError::SameLanguage(source_lang.0));
        }
        let mut pairs = Vec::new();
        for (index, (s, t)) in lines.into_iter().enumerate() {
            let (source, target) = (s.into(), t.into());
            if has_terminator(&source) || has_terminator(&target) {
                return Err(CorpusError::LineTerminator { index });
            }
            pairs.push(SentencePair {
                index,
                source,
                target,
            });
        }
        Ok(Self {
            pairs,
            source_lang,
            target_lang,
        })
    }

    /// Re-indexes already validated pairs.
    fn from_validated(
        pairs: impl IntoIterator<Item = SentencePair>,
        like: &ParallelCorpus,
    ) -> Self {
        let pairs = pairs
            .into_iter()
            .enumerate()
            .map(|(index, p)| SentencePair { index, ..p })
            .collect();
        Self {
            pairs,
            source_lang: like.source_lang.clone(),
            target_lang: like.target_lang.clone(),
        }
    }

    pub fn pairs(&self) -> &[SentencePair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn source_lang(&self) -> &LanguageTag {
        &self.source_lang
    }

    pub fn target_lang(&self) -> &LanguageTag {
        &self.target_lang
    }

    pub fn sources(&self) -> impl Iterator<Item = &str> {
        self.pairs.iter().map(|p| p.source.as_str())
    }

    pub fn targets(&self) -> impl Iterator<Item = &str> {
        self.pairs.iter().map(|p| p.target.as_str())
    }

    /// Keeps the pairs whose flag is set, re-indexed, original order preserved.
    pub(crate) fn retain_by(&self, keep: &[bool]) -> Self {
        debug_assert_eq!(keep.len(), self.len());
        Self::from_validated(
            self.pairs
                .iter()
                .zip(keep)
                .filter(|(_, &k)| k)
                .map(|(p, _)| p.clone()),
            self,
        )
    }
}

/// Reads LF or CRLF terminated lines, tracking byte offsets for encoding errors.
fn read_lines<R: BufRead>(mut reader: R, stream: &'static str) -> Result<Vec<String>, CorpusError> {
    let mut lines = Vec::new();
    let mut buf = Vec::new();
    let mut offset = 0u64;
    loop {
        buf.clear();
        let n = reader.read_until(b'\n', &mut buf)?;
        if n == 0 {
            break;
        }
        if buf.last() == Some(&b'\n') {
            buf.pop();
            if buf.last() == Some(&b'\r') {
                buf.pop();
            }
        }
        let line = String::from_utf8(std::mem::take(&mut buf)).map_err(|e| {
            CorpusError::InvalidEncoding {
                stream,
                line: lines.len() + 1,
                offset: offset + e.utf8_error().valid_up_to() as u64,
            }
        })?;
        lines.push(line);
        offset += n as u64;
    }
    Ok(lines)
}

/// Pairs line `i` of the source stream with line `i` of the target stream.
pub fn load_parallel<R1: BufRead, R2: BufRead>(
    source: R1,
    target: R2,
    source_lang: LanguageTag,
    target_lang: LanguageTag,
) -> Result<ParallelCorpus, CorpusError> {
    let src = read_lines(source, "source")?;
    let tgt = read_lines(target, "target")?;
    if src.len() != tgt.len() {
        return Err(CorpusError::LineCountMismatch(src.len(), tgt.len()));
    }
    ParallelCorpus::new(src.into_iter().zip(tgt), source_lang, target_lang)
}

/// Single-file variant: exactly two tab-separated columns per line.
pub fn load_tsv<R: BufRead>(
    reader: R,
    source_lang: LanguageTag,
    target_lang: LanguageTag,
) -> Result<ParallelCorpus, CorpusError> {
    let lines = read_lines(reader, "tsv")?;
    let mut pairs = Vec::with_capacity(lines.len());
    for (i, line) in lines.into_iter().enumerate() {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 2 {
            return Err(CorpusError::TsvColumns {
                line: i + 1,
                found: cols.len(),
            });
        }
        pairs.push((cols[0].to_owned(), cols[1].to_owned()));
    }
    ParallelCorpus::new(pairs, source_lang, target_lang)
}

/// Writes one sentence per line, LF terminated.
pub fn write_parallel<W1: Write, W2: Write>(
    corpus: &ParallelCorpus,
    mut source: W1,
    mut target: W2,
) -> Result<(), CorpusError> {
    for p in corpus.pairs() {
        source.write_all(p.source.as_bytes())?;
        source.write_all(b"\n")?;
        target.write_all(p.target.as_bytes())?;
        target.write_all(b"\n")?;
    }
    source.flush()?;
    target.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitSpec {
    Full,
    /// Contiguous prefix of `floor(n/4)` pairs.
    Quarter,
    FirstK(usize),
    /// `floor(f·n)` pairs sampled without replacement, original order kept.
    Fraction {
        fraction: f64,
        seed: u64,
    },
}

impl SplitSpec {
    /// Parses `full`, `quarter`, `first:N` or `fraction:F`; the seed is only
    /// used by `fraction`.
    pub fn parse(s: &str, seed: u64) -> Result<Self, CorpusError> {
        let bad = || CorpusError::InvalidSplitSpec(s.to_owned());
        match s {
            "full" => Ok(Self::Full),
            "quarter" => Ok(Self::Quarter),
            _ => {
                if let Some(k) = s.strip_prefix("first:") {
                    let k: usize = k.parse().map_err(|_| bad())?;
                    if k == 0 {
                        return Err(bad());
                    }
                    Ok(Self::FirstK(k))
                } else if let Some(f) = s.strip_prefix("fraction:") {
                    let fraction: f64 = f.parse().map_err(|_| bad())?;
                    if !(fraction > 0.0 && fraction <= 1.0) {
                        return Err(bad());
                    }
                    Ok(Self::Fraction { fraction, seed })
                } else {
                    Err(bad())
                }
            }
        }
    }
}

fn sample_sorted(n: usize, amount: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, n, amount).into_vec();
    picked.sort_unstable();
    picked
}

pub fn split(corpus: &ParallelCorpus, spec: SplitSpec) -> Result<ParallelCorpus, CorpusError> {
    let n = corpus.len();
    match spec {
        SplitSpec::Full => Ok(corpus.clone()),
        SplitSpec::Quarter => Ok(ParallelCorpus::from_validated(
            corpus.pairs[..n / 4].iter().cloned(),
            corpus,
        )),
        SplitSpec::FirstK(k) => {
            if k == 0 || k > n {
                return Err(CorpusError::FirstKTooLarge { k, n });
            }
            Ok(ParallelCorpus::from_validated(
                corpus.pairs[..k].iter().cloned(),
                corpus,
            ))
        }
        SplitSpec::Fraction { fraction, seed } => {
            if !(fraction > 0.0 && fraction <= 1.0) {
                return Err(CorpusError::InvalidSplitSpec(format!(
                    "fraction:{fraction}"
                )));
            }
            let m = ((fraction * n as f64).floor() as usize).min(n);
            let picked = sample_sorted(n, m, seed);
            Ok(ParallelCorpus::from_validated(
                picked.into_iter().map(|i| corpus.pairs[i].clone()),
                corpus,
            ))
        }
    }
}

/// Samples `size` pairs as validation; the rest is training. Both sides keep
/// the original relative order.
pub fn carve_validation(
    corpus: &ParallelCorpus,
    size: usize,
    seed: u64,
) -> Result<(ParallelCorpus, ParallelCorpus), CorpusError> {
    let n = corpus.len();
    if size == 0 || size >= n {
        return Err(CorpusError::SizeOutOfRange { size, n });
    }
    let mut in_validation = vec![false; n];
    for i in sample_sorted(n, size, seed) {
        in_validation[i] = true;
    }
    let train = corpus.retain_by(&in_validation.iter().map(|v| !v).collect::<Vec<_>>());
    let validation = corpus.retain_by(&in_validation);
    Ok((train, validation))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub pair_count: usize,
    pub source_token_count: usize,
    pub target_token_count: usize,
    /// Pairs where either side tokenizes to nothing.
    pub empty_line_count: usize,
}

pub fn stats(corpus: &ParallelCorpus) -> CorpusStats {
    let mut out = CorpusStats {
        pair_count: corpus.len(),
        ..Default::default()
    };
    for p in corpus.pairs() {
        let s = tokenize(&p.source).len();
        let t = tokenize(&p.target).len();
        out.source_token_count += s;
        out.target_token_count += t;
        if s == 0 || t == 0 {
            out.empty_line_count += 1;
        }
    }
    out
}
