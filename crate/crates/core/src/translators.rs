//! Sentence-to-sentence translation backends.
//!
//! The sieve only ever asks a backend to translate source lines, so any
//! deterministic function fits: the identity, a Dice-coefficient word lexicon
//! trained on the corpus itself, or an external process wrapping a real model.

use std::collections::HashMap;
use std::io::{BufRead, Read, Write};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use crate::corpus::{LanguageTag, ParallelCorpus};
use crate::textnorm::tokenize;

#[derive(Debug, thiserror::Error)]
pub enum TranslateError {
    #[error("translation failed{}: {reason}", .index.map(|i| format!(" at pair {i}")).unwrap_or_default())]
    TranslationFailed {
        index: Option<usize>,
        reason: String,
    },
    #[error("cannot train a lexicon on an empty corpus")]
    EmptyCorpus,
    #[error("malformed lexicon at line {line}: {reason}")]
    MalformedLexicon { line: usize, reason: String },
}

impl TranslateError {
    fn failed(reason: impl Into<String>) -> Self {
        Self::TranslationFailed {
            index: None,
            reason: reason.into(),
        }
    }

    /// Attaches a pair index if none was recorded yet.
    pub fn at_index(self, at: usize) -> Self {
        match self {
            Self::TranslationFailed {
                index: None,
                reason,
            } => Self::TranslationFailed {
                index: Some(at),
                reason,
            },
            other => other,
        }
    }
}

/// What a backend is and which direction it translates. `None` languages
/// mean the backend is direction-agnostic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Capability {
    pub name: String,
    pub source_lang: Option<LanguageTag>,
    pub target_lang: Option<LanguageTag>,
}

impl Capability {
    pub fn any_direction(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            source_lang: None,
            target_lang: None,
        }
    }

    pub fn supports(&self, source: &LanguageTag, target: &LanguageTag) -> bool {
        self.source_lang.as_ref().is_none_or(|s| s == source)
            && self.target_lang.as_ref().is_none_or(|t| t == target)
    }
}

/// A deterministic sentence translator.
///
/// `translate_batch(xs)[i]` must equal `translate(xs[i])`.
pub trait Translator: Send + Sync {
    fn capability(&self) -> &Capability;

    fn translate(&self, sentence: &str) -> Result<String, TranslateError>;

    fn translate_batch(&self, sentences: &[&str]) -> Result<Vec<String>, TranslateError> {
        sentences
            .iter()
            .enumerate()
            .map(|(i, s)| self.translate(s).map_err(|e| e.at_index(i)))
            .collect()
    }
}

/// Returns its input unchanged.
#[derive(Debug, Clone)]
pub struct IdentityTranslator {
    capability: Capability,
}

impl Default for IdentityTranslator {
    fn default() -> Self {
        Self {
            capability: Capability::any_direction("identity"),
        }
    }
}

impl Translator for IdentityTranslator {
    fn capability(&self) -> &Capability {
        &self.capability
    }

    fn translate(&self, sentence: &str) -> Result<String, TranslateError> {
        Ok(sentence.to_owned())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LexiconEntry {
    pub target: String,
    /// Dice coefficient, 0..=1
    pub score: f64,
}

/// Source token → best target token.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LexiconTable {
    entries: HashMap<String, LexiconEntry>,
}

impl LexiconTable {
    pub fn get(&self, source: &str) -> Option<&LexiconEntry> {
        self.entries.get(source)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, source: String, target: String, score: f64) {
        self.entries.insert(source, LexiconEntry { target, score });
    }

    /// `source \t target \t score`, sorted by source token.
    pub fn to_tsv(&self) -> String {
        let mut rows: Vec<_> = self.entries.iter().collect();
        rows.sort_unstable_by(|a, b| a.0.cmp(b.0));
        rows.into_iter()
            .map(|(s, e)| format!("{s}\t{}\t{}\n", e.target, e.score))
            .collect()
    }

    pub fn from_tsv(text: &str) -> Result<Self, TranslateError> {
        let mut table = Self::default();
        for (i, line) in text.lines().enumerate() {
            let bad = |reason: &str| TranslateError::MalformedLexicon {
                line: i + 1,
                reason: reason.to_owned(),
            };
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(bad("expected 3 tab-separated columns"));
            }
            let score: f64 = cols[2].parse().map_err(|_| bad("score is not a number"))?;
            if !(0.0..=1.0).contains(&score) {
                return Err(bad("score outside [0, 1]"));
            }
            if table.entries.contains_key(cols[0]) {
                return Err(bad("duplicate source token"));
            }
            table.insert(cols[0].to_owned(), cols[1].to_owned(), score);
        }
        Ok(table)
    }
}

/// Builds a word lexicon from sentence-level co-occurrence.
///
/// Each source token maps to the target token with the highest Dice
/// coefficient `2·cooc(s,t) / (count(s) + count(t))`, where counts are numbers
/// of sentences. Ties go to the lexicographically smallest target.
pub fn lexicon_train(corpus: &ParallelCorpus) -> Result<LexiconTable, TranslateError> {
    if corpus.is_empty() {
        return Err(TranslateError::EmptyCorpus);
    }

    fn intern(ids: &mut HashMap<String, u32>, names: &mut Vec<String>, tok: String) -> u32 {
        if let Some(&id) = ids.get(&tok) {
            return id;
        }
        let id = names.len() as u32;
        names.push(tok.clone());
        ids.insert(tok, id);
        id
    }

    let (mut src_ids, mut src_names) = (HashMap::new(), Vec::new());
    let (mut tgt_ids, mut tgt_names) = (HashMap::new(), Vec::new());
    let mut sentences: Vec<(Vec<u32>, Vec<u32>)> = Vec::with_capacity(corpus.len());
    for p in corpus.pairs() {
        let mut s: Vec<u32> = tokenize(&p.source)
            .into_inner()
            .into_iter()
            .map(|t| intern(&mut src_ids, &mut src_names, t))
            .collect();
        let mut t: Vec<u32> = tokenize(&p.target)
            .into_inner()
            .into_iter()
            .map(|t| intern(&mut tgt_ids, &mut tgt_names, t))
            .collect();
        s.sort_unstable();
        s.dedup();
        t.sort_unstable();
        t.dedup();
        sentences.push((s, t));
    }

    let mut src_count = vec![0u32; src_names.len()];
    let mut tgt_count = vec![0u32; tgt_names.len()];
    let mut cooc: HashMap<(u32, u32), u32> = HashMap::new();
    for (s, t) in &sentences {
        for &a in s {
            src_count[a as usize] += 1;
            for &b in t {
                *cooc.entry((a, b)).or_insert(0) += 1;
            }
        }
        for &b in t {
            tgt_count[b as usize] += 1;
        }
    }

    let mut best: Vec<Option<(f64, u32)>> = vec![None; src_names.len()];
    for (&(a, b), &c) in &cooc {
        let dice = 2.0 * c as f64 / (src_count[a as usize] + tgt_count[b as usize]) as f64;
        let slot = &mut best[a as usize];
        let better = match *slot {
            None => true,
            Some((d, cur)) => {
                dice > d || (dice == d && tgt_names[b as usize] < tgt_names[cur as usize])
            }
        };
        if better {
            *slot = Some((dice, b));
        }
    }

    let mut table = LexiconTable::default();
    for (a, slot) in best.into_iter().enumerate() {
        if let Some((dice, b)) = slot {
            table.insert(src_names[a].clone(), tgt_names[b as usize].clone(), dice);
        }
    }
    Ok(table)
}

/// Word-by-word replacement; tokens missing from the table are copied through.
pub fn lexicon_translate(table: &LexiconTable, sentence: &str) -> String {
    let tokens = tokenize(sentence);
    let mut out = String::with_capacity(sentence.len());
    for (i, tok) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        match table.get(tok) {
            Some(e) => out.push_str(&e.target),
            None => out.push_str(tok),
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct LexiconTranslator {
    capability: Capability,
    table: LexiconTable,
}

impl LexiconTranslator {
    pub fn new(table: LexiconTable) -> Self {
        Self {
            capability: Capability::any_direction("lexicon"),
            table,
        }
    }

    /// Trains on `corpus` and pins the translator to its direction.
    pub fn train(corpus: &ParallelCorpus) -> Result<Self, TranslateError> {
        Ok(Self {
            capability: Capability {
                name: "lexicon".into(),
                source_lang: Some(corpus.source_lang().clone()),
                target_lang: Some(corpus.target_lang().clone()),
            },
            table: lexicon_train(corpus)?,
        })
    }

    pub fn table(&self) -> &LexiconTable {
        &self.table
    }
}

impl Translator for LexiconTranslator {
    fn capability(&self) -> &Capability {
        &self.capability
    }

    fn translate(&self, sentence: &str) -> Result<String, TranslateError> {
        Ok(lexicon_translate(&self.table, sentence))
    }
}

pub const DEFAULT_EXTERNAL_TIMEOUT: Duration = Duration::from_secs(600);

/// Runs a shell command per batch: one sentence per line on stdin, exactly
/// one translation per line expected on stdout.
#[derive(Debug, Clone)]
pub struct ExternalTranslator {
    capability: Capability,
    command: String,
    timeout: Duration,
}

impl ExternalTranslator {
    pub fn new(command: impl Into<String>) -> Self {
        let command = command.into();
        Self {
            capability: Capability::any_direction(format!("extern:{command}")),
            command,
            timeout: DEFAULT_EXTERNAL_TIMEOUT,
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn command(&self) -> &str {
        &self.command
    }
}

fn shell(command: &str) -> Command {
    if cfg!(windows) {
        let mut c = Command::new("cmd");
        c.args(["/C", command]);
        c
    } else {
        let mut c = Command::new("sh");
        c.args(["-c", command]);
        c
    }
}

/// One subprocess per call.
pub fn external_translate(
    command: &str,
    lines: &[&str],
    timeout: Duration,
) -> Result<Vec<String>, TranslateError> {
    let mut child = shell(command)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::inherit())
        .spawn()
        .map_err(|e| TranslateError::failed(format!("cannot start {command:?}: {e}")))?;

    let mut payload = String::new();
    for l in lines {
        // a stray line break would desynchronize the 1:1 protocol
        payload.push_str(&l.replace(['\n', '\r'], " "));
        payload.push('\n');
    }
    let mut stdin = child.stdin.take().expect("stdin piped");
    let writer = std::thread::spawn(move || {
        // the child may legitimately exit without reading everything
        let _ = stdin.write_all(payload.as_bytes());
    });
    let mut stdout = child.stdout.take().expect("stdout piped");
    let reader = std::thread::spawn(move || {
        let mut buf = Vec::new();
        stdout.read_to_end(&mut buf).map(|_| buf)
    });

    let deadline = Instant::now() + timeout;
    let status = loop {
        match child.try_wait() {
            Ok(Some(status)) => break status,
            Ok(None) if Instant::now() >= deadline => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(TranslateError::failed(format!(
                    "timed out after {}s",
                    timeout.as_secs_f64()
                )));
            }
            Ok(None) => std::thread::sleep(Duration::from_millis(5)),
            Err(e) => return Err(TranslateError::failed(e.to_string())),
        }
    };
    let _ = writer.join();
    let output = reader
        .join()
        .map_err(|_| TranslateError::failed("stdout reader panicked"))?
        .map_err(|e| TranslateError::failed(e.to_string()))?;
    if !status.success() {
        return Err(TranslateError::failed(format!(
            "process exited with {status}"
        )));
    }
    let text = String::from_utf8(output)
        .map_err(|e| TranslateError::failed(format!("output is not UTF-8: {e}")))?;
    let out: Vec<String> = text
        .as_bytes()
        .lines()
        .map(|l| l.map(|s| s.trim_end_matches('\r').to_owned()))
        .collect::<Result<_, _>>()
        .map_err(|e| TranslateError::failed(e.to_string()))?;
    if out.len() != lines.len() {
        return Err(TranslateError::failed(format!(
            "line-count mismatch: sent {} lines, received {}",
            lines.len(),
            out.len()
        )));
    }
    Ok(out)
}

impl Translator for ExternalTranslator {
    fn capability(&self) -> &Capability {
        &self.capability
    }

    fn translate(&self, sentence: &str) -> Result<String, TranslateError> {
        let mut out = self.translate_batch(&[sentence])?;
        Ok(out.pop().expect("one line in, one line out"))
    }

    fn translate_batch(&self, sentences: &[&str]) -> Result<Vec<String>, TranslateError> {
        if sentences.is_empty() {
            return Ok(Vec::new());
        }
        external_translate(&self.command, sentences, self.timeout)
    }
}
