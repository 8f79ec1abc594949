use serde::{Deserialize, Serialize};

use super::align;
use crate::textnorm::TokenSequence;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeteorReport {
    pub matches: usize,
    pub chunks: usize,
    pub precision: f64,
    pub recall: f64,
    pub fmean: f64,
    /// Fragmentation penalty, 0..=0.5.
    pub penalty: f64,
    pub score: f64,
}

/// Exact-match METEOR: `fmean = 10PR/(R+9P)`, penalty `0.5·(chunks/matches)³`.
pub fn meteor(hyp: &TokenSequence, reference: &TokenSequence) -> MeteorReport {
    let alignment = align(hyp.as_slice(), reference.as_slice());
    let matches = alignment.len();
    if matches == 0 {
        return MeteorReport {
            matches: 0,
            chunks: 0,
            precision: 0.0,
            recall: 0.0,
            fmean: 0.0,
            penalty: 0.0,
            score: 0.0,
        };
    }
    let mut chunks = 0;
    let mut prev: Option<(usize, usize)> = None;
    for &(h, r) in &alignment {
        match prev {
            Some((ph, pr)) if h == ph + 1 && r == pr + 1 => {}
            _ => chunks += 1,
        }
        prev = Some((h, r));
    }
    let m = matches as f64;
    let precision = m / hyp.len() as f64;
    let recall = m / reference.len() as f64;
    let fmean = 10.0 * precision * recall / (recall + 9.0 * precision);
    let penalty = 0.5 * (chunks as f64 / m).powi(3);
    MeteorReport {
        matches,
        chunks,
        precision,
        recall,
        fmean,
        penalty,
        score: fmean * (1.0 - penalty),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(s: &str) -> TokenSequence {
        TokenSequence::from_whitespace(s)
    }

    #[test]
    fn identity() {
        let r = meteor(&seq("a b c d"), &seq("a b c d"));
        assert_eq!((r.matches, r.chunks), (4, 1));
        assert_eq!((r.precision, r.recall, r.fmean), (1.0, 1.0, 1.0));
        assert_eq!(r.penalty, 0.0078125);
        assert_eq!(r.score, 0.9921875);
    }

    #[test]
    fn reversed_every_match_is_a_chunk() {
        let r = meteor(&seq("d c b a"), &seq("a b c d"));
        assert_eq!((r.matches, r.chunks), (4, 4));
        assert_eq!(r.penalty, 0.5);
        assert_eq!(r.score, 0.5);
    }

    #[test]
    fn disjoint_is_zero() {
        assert_eq!(meteor(&seq("a b"), &seq("c d")).score, 0.0);
        assert_eq!(meteor(&seq(""), &seq("c d")).score, 0.0);
        assert_eq!(meteor(&seq("a"), &seq("")).score, 0.0);
    }

    #[test]
    fn partial_match_weights_recall() {
        // 2 matches, hyp 2, ref 4, one chunk
        let r = meteor(&seq("a b"), &seq("a b c d"));
        assert_eq!((r.matches, r.chunks), (2, 1));
        let (p, rc) = (1.0, 0.5);
        let fmean = 10.0 * p * rc / (rc + 9.0 * p);
        assert!((r.fmean - fmean).abs() < 1e-15);
        assert!((r.score - fmean * (1.0 - 0.5 * 0.125)).abs() < 1e-15);
    }
}
