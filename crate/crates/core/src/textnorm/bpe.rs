use std::cmp::Reverse;
use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use super::{TextError, TokenSequence};

/// Continuation marker appended to every non-final subword of a word.
///
/// Inputs that contain `@` or `\` are escaped (`\@`, `\\`) before
/// segmentation, so a subword that was not marked can never end in `@@`.
pub const MARKER: &str = "@@";

const HEADER_PREFIX: &str = "#marker ";

type Pair = (String, String);

/// Ordered merge rules learned by [`bpe_learn`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpeModel {
    merges: Vec<Pair>,
    marker: String,
    ranks: HashMap<Pair, usize>,
}

impl Default for BpeModel {
    fn default() -> Self {
        Self::new(Vec::new()).expect("empty merge list is valid")
    }
}

impl BpeModel {
    /// Fails on duplicate pairs or symbols that are empty or contain whitespace.
    pub fn new(merges: Vec<Pair>) -> Result<Self, TextError> {
        let mut ranks = HashMap::with_capacity(merges.len());
        for (rank, pair) in merges.iter().enumerate() {
            for sym in [&pair.0, &pair.1] {
                if sym.is_empty() || sym.chars().any(char::is_whitespace) {
                    return Err(TextError::MalformedModel {
                        line: rank + 2,
                        reason: format!("invalid symbol {sym:?}"),
                    });
                }
            }
            if ranks.insert(pair.clone(), rank).is_some() {
                return Err(TextError::MalformedModel {
                    line: rank + 2,
                    reason: format!("duplicate merge {} {}", pair.0, pair.1),
                });
            }
        }
        Ok(Self {
            merges,
            marker: MARKER.to_owned(),
            ranks,
        })
    }

    pub fn merges(&self) -> &[Pair] {
        &self.merges
    }

    pub fn marker(&self) -> &str {
        &self.marker
    }

    /// Header line `#marker @@`, then one `left right` pair per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("{HEADER_PREFIX}{}\n", self.marker);
        for (a, b) in &self.merges {
            let _ = writeln!(out, "{a} {b}");
        }
        out
    }

    /// Line numbers in errors are 1-based.
    pub fn from_text(text: &str) -> Result<Self, TextError> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| TextError::MalformedModel {
            line: 1,
            reason: "missing header".into(),
        })?;
        let marker =
            header
                .strip_prefix(HEADER_PREFIX)
                .ok_or_else(|| TextError::MalformedModel {
                    line: 1,
                    reason: format!("expected header starting with {HEADER_PREFIX:?}"),
                })?;
        if marker != MARKER {
            return Err(TextError::MalformedModel {
                line: 1,
                reason: format!("unsupported marker {marker:?}"),
            });
        }
        let mut merges = Vec::new();
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            let mut parts = line.split(' ');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(a), Some(b), None) if !a.is_empty() && !b.is_empty() => {
                    merges.push((a.to_owned(), b.to_owned()))
                }
                _ => {
                    return Err(TextError::MalformedModel {
                        line: lineno,
                        reason: format!(
                            "expected two symbols separated by one space, got {line:?}"
                        ),
                    })
                }
            }
        }
        Self::new(merges)
    }
}

/// Initial symbols of a word: one per character, with `@` and `\` escaped.
fn initial_symbols(word: &str) -> Vec<String> {
    word.chars()
        .map(|c| match c {
            '@' => "\\@".to_owned(),
            '\\' => "\\\\".to_owned(),
            c => c.to_string(),
        })
        .collect()
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some(n) => out.push(n),
                None => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}

/// Replaces every non-overlapping occurrence of `(a, b)`, scanning left to right.
fn merge_word(symbols: &[String], a: &str, b: &str) -> Vec<String> {
    let mut out = Vec::with_capacity(symbols.len());
    let mut i = 0;
    while i < symbols.len() {
        if i + 1 < symbols.len() && symbols[i] == a && symbols[i + 1] == b {
            out.push(format!("{a}{b}"));
            i += 2;
        } else {
            out.push(symbols[i].clone());
            i += 1;
        }
    }
    out
}

struct PairTable {
    counts: HashMap<Pair, u64>,
    ordered: BTreeSet<(Reverse<u64>, Pair)>,
    occurs_in: HashMap<Pair, BTreeSet<usize>>,
}

impl PairTable {
    fn adjust(&mut self, pair: Pair, delta: i64, word: usize) {
        let old = self.counts.get(&pair).copied().unwrap_or(0);
        let new = (old as i64 + delta) as u64;
        if old > 0 {
            self.ordered.remove(&(Reverse(old), pair.clone()));
        }
        if new > 0 {
            self.ordered.insert((Reverse(new), pair.clone()));
            if delta > 0 {
                self.occurs_in.entry(pair.clone()).or_default().insert(word);
            }
            self.counts.insert(pair, new);
        } else {
            self.counts.remove(&pair);
        }
    }

    /// Highest count first, lexicographically smallest pair on ties.
    fn best(&self) -> Option<(u64, &Pair)> {
        self.ordered.first().map(|(Reverse(c), p)| (*c, p))
    }
}

fn pairs_of(symbols: &[String]) -> impl Iterator<Item = Pair> + '_ {
    symbols.windows(2).map(|w| (w[0].clone(), w[1].clone()))
}

/// Learns up to `num_merges` merges. Stops early once no adjacent pair
/// occurs at least twice.
pub fn bpe_learn(lines: &[TokenSequence], num_merges: usize) -> BpeModel {
    let mut freq: HashMap<&str, u64> = HashMap::new();
    for line in lines {
        for tok in line {
            *freq.entry(tok.as_str()).or_insert(0) += 1;
        }
    }
    let mut vocab: Vec<(&str, u64)> = freq.into_iter().collect();
    vocab.sort_unstable();

    let mut words: Vec<Vec<String>> = vocab.iter().map(|(w, _)| initial_symbols(w)).collect();
    let weights: Vec<u64> = vocab.iter().map(|&(_, f)| f).collect();

    let mut table = PairTable {
        counts: HashMap::new(),
        ordered: BTreeSet::new(),
        occurs_in: HashMap::new(),
    };
    for (id, word) in words.iter().enumerate() {
        for pair in pairs_of(word) {
            table.adjust(pair, weights[id] as i64, id);
        }
    }

    let mut merges = Vec::new();
    while merges.len() < num_merges {
        let best = match table.best() {
            Some((count, pair)) if count >= 2 => pair.clone(),
            _ => break,
        };
        let ids = table.occurs_in.remove(&best).unwrap_or_default();
        for id in ids {
            let merged = merge_word(&words[id], &best.0, &best.1);
            if merged.len() == words[id].len() {
                continue;
            }
            let w = weights[id] as i64;
            let old = std::mem::replace(&mut words[id], merged);
            for pair in pairs_of(&old) {
                table.adjust(pair, -w, id);
            }
            for pair in pairs_of(&words[id]) {
                table.adjust(pair, w, id);
            }
        }
        merges.push(best);
    }
    BpeModel::new(merges).expect("learned merges are unique")
}

fn segment(model: &BpeModel, word: &str) -> Vec<String> {
    let mut symbols = initial_symbols(word);
    loop {
        let best = symbols
            .windows(2)
            .filter_map(|w| {
                model
                    .ranks
                    .get(&(w[0].clone(), w[1].clone()))
                    .map(|&r| (r, w[0].clone(), w[1].clone()))
            })
            .min();
        match best {
            Some((_, a, b)) => symbols = merge_word(&symbols, &a, &b),
            None => return symbols,
        }
    }
}

/// Splits each word into subwords; every subword but the last of a word
/// carries the continuation marker.
pub fn bpe_apply(model: &BpeModel, tokens: &TokenSequence) -> TokenSequence {
    let mut out = Vec::with_capacity(tokens.len());
    for tok in tokens {
        let symbols = segment(model, tok);
        let last = symbols.len() - 1;
        for (i, mut sym) in symbols.into_iter().enumerate() {
            if i < last {
                sym.push_str(&model.marker);
            }
            out.push(sym);
        }
    }
    TokenSequence::from_vec_unchecked(out)
}

/// Joins marked subwords back into whole words.
pub fn bpe_decode(tokens: &TokenSequence) -> Result<TokenSequence, TextError> {
    let mut out = Vec::new();
    let mut pending = String::new();
    let mut last_marked = None;
    for tok in tokens {
        if let Some(stem) = tok.strip_suffix(MARKER) {
            pending.push_str(stem);
            last_marked = Some(tok);
        } else {
            pending.push_str(tok);
            out.push(unescape(&pending));
            pending.clear();
            last_marked = None;
        }
    }
    if let Some(tok) = last_marked {
        return Err(TextError::MalformedMarker(tok.clone()));
    }
    TokenSequence::new(out)
}
