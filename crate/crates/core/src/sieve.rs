//! Removal of mistranslated pairs.
//!
//! A translator is scored on the validation set to get corpus BLEU `B`; every
//! training pair whose sentence BLEU (translation of the source vs. the stored
//! target) falls strictly below `B / divisor` is discarded. A percentile mode
//! that keeps the best-scoring fraction is available as an alternative.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{LanguageTag, ParallelCorpus, SentencePair};
use crate::metrics::{corpus_bleu, sentence_bleu, MetricError};
use crate::parallel::Exec;
use crate::textnorm::{tokenize, TokenSequence};
use crate::translators::{TranslateError, Translator};

pub const DEFAULT_DIVISOR: f64 = 4.0;

#[derive(Debug, thiserror::Error)]
pub enum SieveError {
    #[error("validation set is empty")]
    EmptyValidation,
    #[error("direction mismatch: {0}")]
    DirectionMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Translate(#[from] TranslateError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdMode {
    /// Discard iff `score < validation_bleu / divisor`.
    Ratio,
    /// Keep the `ceil(keep·n)` best-scoring pairs.
    Percentile { keep: f64 },
}

impl fmt::Display for ThresholdMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Ratio => f.write_str("ratio"),
            Self::Percentile { keep } => write!(f, "percentile:{keep}"),
        }
    }
}

impl FromStr for ThresholdMode {
    type Err = SieveError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "ratio" {
            return Ok(Self::Ratio);
        }
        let keep = s
            .strip_prefix("percentile:")
            .and_then(|k| k.parse::<f64>().ok())
            .ok_or_else(|| SieveError::InvalidConfig(format!("unknown mode {s:?}")))?;
        check_keep(keep)?;
        Ok(Self::Percentile { keep })
    }
}

impl Serialize for ThresholdMode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ThresholdMode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn check_keep(keep: f64) -> Result<(), SieveError> {
    if keep > 0.0 && keep <= 1.0 {
        Ok(())
    } else {
        Err(SieveError::InvalidConfig(format!(
            "keep fraction {keep} outside (0, 1]"
        )))
    }
}

fn check_divisor(divisor: f64) -> Result<(), SieveError> {
    if divisor.is_finite() && divisor > 0.0 {
        Ok(())
    } else {
        Err(SieveError::InvalidConfig(format!(
            "divisor {divisor} must be a positive finite number"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub validation_bleu: f64,
    /// `None` in percentile mode.
    pub divisor: Option<f64>,
    pub cutoff: f64,
    pub mode: ThresholdMode,
}

impl Threshold {
    pub fn ratio(validation_bleu: f64, divisor: f64) -> Result<Self, SieveError> {
        check_divisor(divisor)?;
        if !(0.0..=100.0).contains(&validation_bleu) {
            return Err(SieveError::InvalidConfig(format!(
                "validation BLEU {validation_bleu} outside [0, 100]"
            )));
        }
        Ok(Self {
            validation_bleu,
            divisor: Some(divisor),
            cutoff: validation_bleu / divisor,
            mode: ThresholdMode::Ratio,
        })
    }

    /// The cutoff is only known once scores are ranked; it starts at 0.
    pub fn percentile(validation_bleu: f64, keep: f64) -> Result<Self, SieveError> {
        check_keep(keep)?;
        Ok(Self {
            validation_bleu,
            divisor: None,
            cutoff: 0.0,
            mode: ThresholdMode::Percentile { keep },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub index: usize,
    pub score: f64,
    pub kept: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Direction {
    pub source_lang: LanguageTag,
    pub target_lang: LanguageTag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub pairs_in: usize,
    pub pairs_removed: usize,
    pub pairs_kept: usize,
    #[serde(flatten)]
    pub threshold: Threshold,
    #[serde(flatten)]
    pub direction: Direction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_pair: Option<Vec<PairScore>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModeConfig {
    Ratio { divisor: f64 },
    Percentile { keep: f64 },
}

impl Default for ModeConfig {
    fn default() -> Self {
        Self::Ratio {
            divisor: DEFAULT_DIVISOR,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SieveConfig {
    pub mode: ModeConfig,
    pub emit_per_pair: bool,
    pub exec: Exec,
}

fn check_direction(corpus: &ParallelCorpus, translator: &dyn Translator) -> Result<(), SieveError> {
    let cap = translator.capability();
    if cap.supports(corpus.source_lang(), corpus.target_lang()) {
        Ok(())
    } else {
        Err(SieveError::DirectionMismatch(format!(
            "translator {} does not translate {} → {}",
            cap.name,
            corpus.source_lang(),
            corpus.target_lang()
        )))
    }
}

fn locate(err: TranslateError, offset: usize) -> TranslateError {
    match err {
        TranslateError::TranslationFailed { index, reason } => TranslateError::TranslationFailed {
            index: Some(offset + index.unwrap_or(0)),
            reason,
        },
        other => other,
    }
}

fn translate_chunk(
    translator: &dyn Translator,
    offset: usize,
    chunk: &[SentencePair],
) -> Result<Vec<String>, TranslateError> {
    let sources: Vec<&str> = chunk.iter().map(|p| p.source.as_str()).collect();
    let translated = translator
        .translate_batch(&sources)
        .map_err(|e| locate(e, offset))?;
    if translated.len() != chunk.len() {
        return Err(TranslateError::TranslationFailed {
            index: Some(offset),
            reason: format!(
                "backend returned {} lines for {}",
                translated.len(),
                chunk.len()
            ),
        });
    }
    Ok(translated)
}

/// Translates every source line and tokenizes translation and stored target.
fn translate_tokenized(
    corpus: &ParallelCorpus,
    translator: &dyn Translator,
    exec: &Exec,
) -> Result<Vec<(TokenSequence, TokenSequence)>, TranslateError> {
    exec.map_chunks(corpus.pairs(), |offset, chunk| {
        let translated = translate_chunk(translator, offset, chunk)?;
        Ok(translated
            .iter()
            .zip(chunk)
            .map(|(t, p)| (tokenize(t), tokenize(&p.target)))
            .collect())
    })
}

/// Corpus BLEU of the translated validation sources against their targets.
pub fn validation_bleu(
    validation: &ParallelCorpus,
    translator: &dyn Translator,
    exec: &Exec,
) -> Result<f64, SieveError> {
    if validation.is_empty() {
        return Err(SieveError::EmptyValidation);
    }
    check_direction(validation, translator)?;
    let (hyps, refs): (Vec<_>, Vec<_>) = translate_tokenized(validation, translator, exec)?
        .into_iter()
        .unzip();
    Ok(corpus_bleu(&hyps, &refs)?.score)
}

/// `B / divisor` with `B` the validation corpus BLEU.
pub fn compute_threshold(
    validation: &ParallelCorpus,
    translator: &dyn Translator,
    divisor: f64,
    exec: &Exec,
) -> Result<Threshold, SieveError> {
    check_divisor(divisor)?;
    let b = validation_bleu(validation, translator, exec)?;
    Threshold::ratio(b, divisor)
}

/// Sentence BLEU of each pair's translation against its target, in index
/// order. `kept` is left `false`.
pub fn score_pairs(
    train: &ParallelCorpus,
    translator: &dyn Translator,
    exec: &Exec,
) -> Result<Vec<PairScore>, SieveError> {
    check_direction(train, translator)?;
    let scored = exec.map_chunks(train.pairs(), |offset, chunk| {
        let translated = translate_chunk(translator, offset, chunk)?;
        Ok::<_, TranslateError>(
            translated
                .iter()
                .zip(chunk)
                .map(|(t, p)| PairScore {
                    index: p.index,
                    score: sentence_bleu(&tokenize(t), &tokenize(&p.target)).score,
                    kept: false,
                })
                .collect(),
        )
    })?;
    Ok(scored)
}

/// `ceil(keep·n)`, tolerant of representation error in `keep·n`.
pub fn keep_count(keep: f64, n: usize) -> usize {
    let x = keep * n as f64;
    let nearest = x.round();
    let k = if (x - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        x.ceil()
    };
    (k as usize).min(n)
}

/// Marks `kept` on each score and fills in the percentile cutoff.
pub fn decide(scores: &mut [PairScore], threshold: &mut Threshold) {
    match threshold.mode {
        ThresholdMode::Ratio => {
            for s in scores.iter_mut() {
                s.kept = s.score >= threshold.cutoff;
            }
        }
        ThresholdMode::Percentile { keep } => {
            let k = keep_count(keep, scores.len());
            let mut order: Vec<usize> = (0..scores.len()).collect();
            // highest score first, lower index first on ties
            order.sort_by(|&a, &b| {
                scores[b]
                    .score
                    .total_cmp(&scores[a].score)
                    .then(scores[a].index.cmp(&scores[b].index))
            });
            for s in scores.iter_mut() {
                s.kept = false;
            }
            for &i in &order[..k] {
                scores[i].kept = true;
            }
            threshold.cutoff = order[..k].last().map_or(0.0, |&i| scores[i].score);
        }
    }
}

/// Scores `train` and applies an already known threshold.
pub fn apply_threshold(
    train: &ParallelCorpus,
    translator: &dyn Translator,
    threshold: Threshold,
    config: &SieveConfig,
) -> Result<(ParallelCorpus, FilterReport), SieveError> {
    let mut threshold = threshold;
    let mut scores = score_pairs(train, translator, &config.exec)?;
    decide(&mut scores, &mut threshold);
    let keep: Vec<bool> = scores.iter().map(|s| s.kept).collect();
    let filtered = train.retain_by(&keep);
    let report = FilterReport {
        pairs_in: train.len(),
        pairs_removed: train.len() - filtered.len(),
        pairs_kept: filtered.len(),
        threshold,
        direction: Direction {
            source_lang: train.source_lang().clone(),
            target_lang: train.target_lang().clone(),
        },
        per_pair: config.emit_per_pair.then_some(scores),
    };
    Ok((filtered, report))
}

/// Validation threshold, then per-pair scoring and discarding.
pub fn filter_corpus(
    train: &ParallelCorpus,
    validation: &ParallelCorpus,
    translator: &dyn Translator,
    config: &SieveConfig,
) -> Result<(ParallelCorpus, FilterReport), SieveError> {
    if train.source_lang() != validation.source_lang()
        || train.target_lang() != validation.target_lang()
    {
        return Err(SieveError::DirectionMismatch(format!(
            "train is {} → {}, validation is {} → {}",
            train.source_lang(),
            train.target_lang(),
            validation.source_lang(),
            validation.target_lang()
        )));
    }
    let threshold = match config.mode {
        ModeConfig::Ratio { divisor } => {
            compute_threshold(validation, translator, divisor, &config.exec)?
        }
        ModeConfig::Percentile { keep } => {
            check_keep(keep)?;
            let b = validation_bleu(validation, translator, &config.exec)?;
            Threshold::percentile(b, keep)?
        }
    };
    apply_threshold(train, translator, threshold, config)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    /// One aligned row: language, division label, removed count, threshold.
    Table {
        division: String,
    },
}

pub fn emit_report(report: &FilterReport, format: &ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            serde_json::to_string_pretty(report).expect("report serializes") + "\n"
        }
        ReportFormat::Table { division } => {
            let language = report.direction.target_lang.as_str().to_uppercase();
            let header = ["Language", "Division", "Removed", "Threshold"];
            let row = [
                language,
                division.clone(),
                report.pairs_removed.to_string(),
                format!("{:.3}", report.threshold.cutoff),
            ];
            let widths: Vec<usize> = header
                .iter()
                .zip(&row)
                .map(|(h, r)| h.chars().count().max(r.chars().count()))
                .collect();
            let line = |cells: &[&str]| {
                cells
                    .iter()
                    .zip(&widths)
                    .map(|(c, w)| format!("{c:<w$}"))
                    .collect::<Vec<_>>()
                    .join("  ")
                    .trim_end()
                    .to_owned()
            };
            let row_refs: Vec<&str> = row.iter().map(String::as_str).collect();
            format!("{}\n{}\n", line(&header), line(&row_refs))
        }
    }
}
