//! Text normalization, tokenization and BPE subword segmentation.
//!
//! Every metric works on [`TokenSequence`]s produced by [`tokenize`], so both
//! sides of any comparison go through exactly the same pipeline.

mod bpe;

pub use bpe::{bpe_apply, bpe_decode, bpe_learn, BpeModel, MARKER};

use std::fmt;

use serde::{Deserialize, Serialize};
use unicode_general_category::{get_general_category, GeneralCategory};
use unicode_normalization::UnicodeNormalization;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TextError {
    #[error("token {0:?} is empty or contains whitespace")]
    InvalidToken(String),
    #[error("token sequence ends on a continuation-marked subword {0:?}")]
    MalformedMarker(String),
    #[error("malformed BPE model at line {line}: {reason}")]
    MalformedModel { line: usize, reason: String },
}

/// Normalized token list for one sentence.
///
/// Tokens are never empty and never contain whitespace.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct TokenSequence(Vec<String>);

impl TokenSequence {
    pub fn new(tokens: Vec<String>) -> Result<Self, TextError> {
        for t in &tokens {
            if t.is_empty() || t.chars().any(char::is_whitespace) {
                return Err(TextError::InvalidToken(t.clone()));
            }
        }
        Ok(Self(tokens))
    }

    /// Builds a sequence from whitespace-separated text without normalizing.
    pub fn from_whitespace(text: &str) -> Self {
        Self(text.split_whitespace().map(str::to_owned).collect())
    }

    pub(crate) fn from_vec_unchecked(tokens: Vec<String>) -> Self {
        debug_assert!(tokens
            .iter()
            .all(|t| !t.is_empty() && !t.chars().any(char::is_whitespace)));
        Self(tokens)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[String] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, String> {
        self.0.iter()
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }

    /// Tokens joined by single spaces.
    pub fn join(&self) -> String {
        self.0.join(" ")
    }
}

impl TryFrom<Vec<String>> for TokenSequence {
    type Error = TextError;

    fn try_from(tokens: Vec<String>) -> Result<Self, Self::Error> {
        Self::new(tokens)
    }
}

impl From<TokenSequence> for Vec<String> {
    fn from(seq: TokenSequence) -> Self {
        seq.0
    }
}

impl<'a> IntoIterator for &'a TokenSequence {
    type Item = &'a String;
    type IntoIter = std::slice::Iter<'a, String>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl fmt::Display for TokenSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.join())
    }
}

/// Canonical composition (NFC), whitespace runs collapsed to one space,
/// ends trimmed. Case is left alone.
pub fn normalize(text: &str) -> String {
    let composed: String = text.nfc().collect();
    let mut out = String::with_capacity(composed.len());
    for word in composed.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

fn is_punctuation(c: char) -> bool {
    matches!(
        get_general_category(c),
        GeneralCategory::ConnectorPunctuation
            | GeneralCategory::DashPunctuation
            | GeneralCategory::OpenPunctuation
            | GeneralCategory::ClosePunctuation
            | GeneralCategory::InitialPunctuation
            | GeneralCategory::FinalPunctuation
            | GeneralCategory::OtherPunctuation
    )
}

/// Normalizes, splits on whitespace, then isolates every punctuation
/// character as its own token. Letters, marks and digits of any script stay
/// joined.
pub fn tokenize(text: &str) -> TokenSequence {
    let normalized = normalize(text);
    let mut tokens = Vec::new();
    for word in normalized.split(' ').filter(|w| !w.is_empty()) {
        let mut start = 0;
        for (i, c) in word.char_indices() {
            if is_punctuation(c) {
                if start < i {
                    tokens.push(word[start..i].to_owned());
                }
                let end = i + c.len_utf8();
                tokens.push(word[i..end].to_owned());
                start = end;
            }
        }
        if start < word.len() {
            tokens.push(word[start..].to_owned());
        }
    }
    TokenSequence::from_vec_unchecked(tokens)
}
