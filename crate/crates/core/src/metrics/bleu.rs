use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{brevity_penalty, MetricError};
use crate::textnorm::TokenSequence;

/// Highest n-gram order used by BLEU.
pub const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NGramProfile {
    pub n: usize,
    /// Number of hypothesis n-grams.
    pub total: u64,
    /// Hypothesis n-grams found in the reference, clipped to reference multiplicity.
    pub matched: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuReport {
    pub profiles: Vec<NGramProfile>,
    pub hyp_len: usize,
    pub ref_len: usize,
    pub brevity_penalty: f64,
    /// 0..=100
    pub score: f64,
    /// True when add-one smoothing replaced at least one zero precision.
    pub smoothed: bool,
}

fn counts(tokens: &[String], n: usize) -> HashMap<&[String], u64> {
    let mut map = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *map.entry(gram).or_insert(0) += 1;
        }
    }
    map
}

/// Clipped n-gram match counts for a single order `n` (1..=4).
pub fn ngram_profile(hyp: &TokenSequence, reference: &TokenSequence, n: usize) -> NGramProfile {
    assert!(
        (1..=MAX_ORDER).contains(&n),
        "n-gram order {n} outside 1..={MAX_ORDER}"
    );
    profile_slices(hyp.as_slice(), reference.as_slice(), n)
}

fn profile_slices(hyp: &[String], reference: &[String], n: usize) -> NGramProfile {
    let total = (hyp.len() + 1).saturating_sub(n) as u64;
    if total == 0 {
        return NGramProfile {
            n,
            total,
            matched: 0,
        };
    }
    let ref_counts = counts(reference, n);
    let matched = counts(hyp, n)
        .into_iter()
        .map(|(g, c)| c.min(ref_counts.get(g).copied().unwrap_or(0)))
        .sum();
    NGramProfile { n, total, matched }
}

fn profiles(hyp: &[String], reference: &[String]) -> Vec<NGramProfile> {
    (1..=MAX_ORDER)
        .map(|n| profile_slices(hyp, reference, n))
        .collect()
}

/// Smoothed sentence-level BLEU on a 0–100 scale.
///
/// Orders 2..=4 with zero matches use `(m+1)/(t+1)`. Orders with no
/// hypothesis n-grams at all (sentences shorter than four tokens) are left out
/// of the geometric mean. The score is 0 when the hypothesis is empty or no
/// unigram matches.
pub fn sentence_bleu(hyp: &TokenSequence, reference: &TokenSequence) -> BleuReport {
    let (h, r) = (hyp.as_slice(), reference.as_slice());
    let profiles = profiles(h, r);
    let bp = brevity_penalty(h.len(), r.len());
    let mut report = BleuReport {
        profiles,
        hyp_len: h.len(),
        ref_len: r.len(),
        brevity_penalty: bp,
        score: 0.0,
        smoothed: false,
    };
    if h.is_empty() || report.profiles[0].matched == 0 {
        return report;
    }
    let mut log_sum = 0.0;
    let mut orders = 0usize;
    for p in &report.profiles {
        if p.total == 0 {
            continue;
        }
        let precision = if p.n > 1 && p.matched == 0 {
            report.smoothed = true;
            1.0 / (p.total + 1) as f64
        } else {
            p.matched as f64 / p.total as f64
        };
        log_sum += precision.ln();
        orders += 1;
    }
    report.score = 100.0 * bp * (log_sum / orders as f64).exp();
    report
}

/// Unsmoothed corpus BLEU from n-gram counts and lengths summed over all sentences.
pub fn corpus_bleu(
    hyps: &[TokenSequence],
    refs: &[TokenSequence],
) -> Result<BleuReport, MetricError> {
    if hyps.len() != refs.len() {
        return Err(MetricError::LengthMismatch {
            hyps: hyps.len(),
            refs: refs.len(),
        });
    }
    if hyps.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let mut summed: Vec<NGramProfile> = (1..=MAX_ORDER)
        .map(|n| NGramProfile {
            n,
            total: 0,
            matched: 0,
        })
        .collect();
    let (mut hyp_len, mut ref_len) = (0usize, 0usize);
    for (h, r) in hyps.iter().zip(refs) {
        hyp_len += h.len();
        ref_len += r.len();
        for (acc, p) in summed.iter_mut().zip(profiles(h.as_slice(), r.as_slice())) {
            acc.total += p.total;
            acc.matched += p.matched;
        }
    }
    Ok(bleu_from_counts(summed, hyp_len, ref_len))
}

pub(crate) fn bleu_from_counts(
    profiles: Vec<NGramProfile>,
    hyp_len: usize,
    ref_len: usize,
) -> BleuReport {
    let bp = brevity_penalty(hyp_len, ref_len);
    let score = if profiles.iter().any(|p| p.matched == 0) {
        0.0
    } else {
        let log_sum: f64 = profiles
            .iter()
            .map(|p| (p.matched as f64 / p.total as f64).ln())
            .sum();
        100.0 * bp * (log_sum / profiles.len() as f64).exp()
    };
    BleuReport {
        profiles,
        hyp_len,
        ref_len,
        brevity_penalty: bp,
        score,
        smoothed: false,
    }
}
