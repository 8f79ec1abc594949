//! BLEU, METEOR and RIBES with full score decompositions.
//!
//! All functions are pure and operate on already tokenized text; scores are
//! kept in double precision and only rounded when printed.

mod bleu;
mod meteor;
mod ribes;

pub use bleu::{corpus_bleu, ngram_profile, sentence_bleu, BleuReport, NGramProfile, MAX_ORDER};
pub use meteor::{meteor, MeteorReport};
pub use ribes::{ribes, RibesReport};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricError {
    #[error("hypothesis count {hyps} does not match reference count {refs}")]
    LengthMismatch { hyps: usize, refs: usize },
    #[error("nothing to score")]
    EmptyInput,
}

/// `exp(1 - r/c)` when the hypothesis is shorter than the reference, else 1.
/// An empty hypothesis against a non-empty reference gets the limit value 0.
pub(crate) fn brevity_penalty(hyp_len: usize, ref_len: usize) -> f64 {
    if hyp_len >= ref_len {
        1.0
    } else if hyp_len == 0 {
        0.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    }
}

/// Exact-match unigram alignment shared by METEOR and RIBES.
///
/// Hypothesis tokens are visited left to right; each is aligned to the unused
/// reference position holding the same surface form that is closest to its own
/// position, ties going to the leftmost. Returns `(hyp_pos, ref_pos)` pairs in
/// hypothesis order.
pub(crate) fn align(hyp: &[String], reference: &[String]) -> Vec<(usize, usize)> {
    use std::collections::HashMap;

    let mut positions: HashMap<&str, Vec<usize>> = HashMap::new();
    for (j, tok) in reference.iter().enumerate() {
        positions.entry(tok.as_str()).or_default().push(j);
    }
    let mut used = vec![false; reference.len()];
    let mut out = Vec::new();
    for (i, tok) in hyp.iter().enumerate() {
        let Some(candidates) = positions.get(tok.as_str()) else {
            continue;
        };
        // candidates are ascending, so strict `<` keeps the leftmost on ties
        let mut best: Option<usize> = None;
        for &j in candidates {
            if used[j] {
                continue;
            }
            if best.is_none_or(|b| j.abs_diff(i) < b.abs_diff(i)) {
                best = Some(j);
            }
        }
        if let Some(j) = best {
            used[j] = true;
            out.push((i, j));
        }
    }
    out
}

/// Arithmetic mean of per-sentence scores.
pub fn mean_sentence_score(scores: &[f64]) -> Result<f64, MetricError> {
    if scores.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    #[test]
    fn mean_examples() {
        assert_eq!(mean_sentence_score(&[1.0]).unwrap(), 1.0);
        assert_eq!(mean_sentence_score(&[0.0, 1.0]).unwrap(), 0.5);
        assert_eq!(mean_sentence_score(&[]), Err(MetricError::EmptyInput));
    }

    #[test]
    fn alignment_prefers_nearest_then_leftmost() {
        // "a" at hyp position 2: ref positions 0 and 4 are both at distance 2.
        assert_eq!(align(&v("x y a"), &v("a q r s a")), vec![(2, 0)]);
        // hyp position 3: ref 4 (distance 1) beats ref 0 (distance 3).
        assert_eq!(align(&v("x y z a"), &v("a q r s a")), vec![(3, 4)]);
        // each reference position is consumed once
        assert_eq!(align(&v("a a a"), &v("a a")), vec![(0, 0), (1, 1)]);
        assert!(align(&v("p q"), &v("r s")).is_empty());
    }

    #[test]
    fn brevity_penalty_edges() {
        assert_eq!(brevity_penalty(5, 4), 1.0);
        assert_eq!(brevity_penalty(0, 0), 1.0);
        assert_eq!(brevity_penalty(0, 3), 0.0);
        assert!((brevity_penalty(2, 4) - (-1.0f64).exp()).abs() < 1e-15);
    }
}
