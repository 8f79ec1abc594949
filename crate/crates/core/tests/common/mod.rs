//! Brute-force reference implementations used to cross-check the metrics.
//! Deliberately naive: no hashing, only linear scans over owned n-gram lists.

#![allow(dead_code)]

pub fn ngrams(tokens: &[String], n: usize) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    let mut i = 0;
    while i + n <= tokens.len() {
        out.push(tokens[i..i + n].to_vec());
        i += 1;
    }
    out
}

/// `(total, clipped matched)` by enumerating hypothesis n-grams.
pub fn oracle_profile(hyp: &[String], reference: &[String], n: usize) -> (u64, u64) {
    let hyp_grams = ngrams(hyp, n);
    let ref_grams = ngrams(reference, n);
    let mut seen: Vec<Vec<String>> = Vec::new();
    let mut matched = 0u64;
    for g in &hyp_grams {
        if seen.contains(g) {
            continue;
        }
        seen.push(g.clone());
        let in_hyp = hyp_grams.iter().filter(|x| *x == g).count() as u64;
        let in_ref = ref_grams.iter().filter(|x| *x == g).count() as u64;
        matched += in_hyp.min(in_ref);
    }
    (hyp_grams.len() as u64, matched)
}

/// Unsmoothed corpus BLEU from summed oracle counts.
pub fn oracle_corpus_bleu(hyps: &[Vec<String>], refs: &[Vec<String>]) -> f64 {
    let mut totals = [0u64; 4];
    let mut matches = [0u64; 4];
    let mut c = 0usize;
    let mut r = 0usize;
    for (h, rf) in hyps.iter().zip(refs) {
        c += h.len();
        r += rf.len();
        for n in 1..=4 {
            let (t, m) = oracle_profile(h, rf, n);
            totals[n - 1] += t;
            matches[n - 1] += m;
        }
    }
    if matches.contains(&0) {
        return 0.0;
    }
    let bp = if c >= r {
        1.0
    } else {
        (1.0 - r as f64 / c as f64).exp()
    };
    let mut log_p = 0.0;
    for n in 0..4 {
        log_p += (matches[n] as f64 / totals[n] as f64).ln();
    }
    100.0 * bp * (log_p / 4.0).exp()
}

/// Kendall tau by explicit pair enumeration.
pub fn oracle_nkt(positions: &[usize]) -> f64 {
    let k = positions.len();
    if k < 2 {
        return 0.0;
    }
    let mut score = 0i64;
    let mut pairs = 0i64;
    for i in 0..k {
        for j in 0..k {
            if i < j {
                pairs += 1;
                score += if positions[i] < positions[j] { 1 } else { -1 };
            }
        }
    }
    (score as f64 / pairs as f64 + 1.0) / 2.0
}

/// Mixed-script vocabulary with plenty of repeats.
pub const VOCAB: &[&str] = &[
    "the",
    "cat",
    "sat",
    "on",
    "mat",
    "a",
    "b",
    "c",
    "d",
    "ଓଡ଼ିଆ",
    "ଭାଷା",
    "ମୁଁ",
    "हिन्दी",
    "भाषा",
    "है",
    "日本",
    "語",
    "é",
    "x1",
    "42",
];

/// Deterministic pseudo-random token sequence (LCG), for tests without proptest.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next(&mut self) -> u64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        self.0 >> 33
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next() % n as u64) as usize
    }

    pub fn tokens(&mut self, min: usize, max: usize, vocab: usize) -> Vec<String> {
        let len = min + self.below(max - min + 1);
        (0..len)
            .map(|_| VOCAB[self.below(vocab.min(VOCAB.len()))].to_string())
            .collect()
    }
}
