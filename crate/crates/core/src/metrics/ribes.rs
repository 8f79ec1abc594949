use serde::{Deserialize, Serialize};

use super::{align, brevity_penalty};
use crate::textnorm::TokenSequence;

const PRECISION_EXPONENT: f64 = 0.25;
const BP_EXPONENT: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RibesReport {
    /// 0-based reference positions of aligned tokens, in hypothesis order.
    pub aligned_ref_positions: Vec<usize>,
    /// Normalized Kendall's tau, `(tau + 1) / 2`.
    pub nkt: f64,
    pub unigram_precision: f64,
    pub brevity_penalty: f64,
    pub score: f64,
}

/// `nkt · precision^0.25 · bp^0.10`. NKT is 0 with fewer than two alignments.
pub fn ribes(hyp: &TokenSequence, reference: &TokenSequence) -> RibesReport {
    let positions: Vec<usize> = align(hyp.as_slice(), reference.as_slice())
        .into_iter()
        .map(|(_, r)| r)
        .collect();
    let bp = brevity_penalty(hyp.len(), reference.len());
    if hyp.is_empty() {
        return RibesReport {
            aligned_ref_positions: positions,
            nkt: 0.0,
            unigram_precision: 0.0,
            brevity_penalty: bp,
            score: 0.0,
        };
    }
    let k = positions.len();
    let nkt = if k < 2 {
        0.0
    } else {
        let mut concordant = 0i64;
        let mut discordant = 0i64;
        for i in 0..k {
            for j in i + 1..k {
                if positions[i] < positions[j] {
                    concordant += 1;
                } else {
                    discordant += 1;
                }
            }
        }
        let pairs = (k * (k - 1) / 2) as f64;
        let tau = (concordant - discordant) as f64 / pairs;
        (tau + 1.0) / 2.0
    };
    let precision = k as f64 / hyp.len() as f64;
    let score = nkt * precision.powf(PRECISION_EXPONENT) * bp.powf(BP_EXPONENT);
    RibesReport {
        aligned_ref_positions: positions,
        nkt,
        unigram_precision: precision,
        brevity_penalty: bp,
        score,
    }
}
