mod common;

use common::{oracle_corpus_bleu, oracle_nkt, oracle_profile, VOCAB};
use mtsieve::corpus::{self, LanguageTag, ParallelCorpus, SplitSpec};
use mtsieve::metrics::{corpus_bleu, meteor, ngram_profile, ribes, sentence_bleu};
use mtsieve::parallel::Exec;
use mtsieve::sieve::{self, apply_threshold, score_pairs, SieveConfig, Threshold};
use mtsieve::textnorm::{bpe_apply, bpe_decode, bpe_learn, tokenize, TokenSequence};
use mtsieve::translators::{
    lexicon_train, lexicon_translate, IdentityTranslator, LexiconTranslator, Translator,
};
use proptest::prelude::*;

fn token() -> impl Strategy<Value = String> {
    prop::sample::select(VOCAB).prop_map(str::to_owned)
}

fn tokens(min: usize, max: usize) -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(token(), min..=max)
}

fn seq(v: Vec<String>) -> TokenSequence {
    TokenSequence::new(v).unwrap()
}

/// Free text mixing scripts, punctuation, combining marks and odd whitespace.
fn messy_text() -> impl Strategy<Value = String> {
    let piece = prop_oneof![
        token(),
        Just(",".to_string()),
        Just("!?".to_string()),
        Just("।".to_string()),
        Just("e\u{0301}".to_string()),
        Just("\u{0301}".to_string()),
        Just(" ".to_string()),
        Just("\t\u{00a0}".to_string()),
        Just("\u{2000}".to_string()),
        Just("@@".to_string()),
        Just("\\".to_string()),
        "[a-zA-Z0-9]{1,4}",
    ];
    prop::collection::vec(piece, 0..20).prop_map(|v| v.concat())
}

fn tag(s: &str) -> LanguageTag {
    LanguageTag::new(s).unwrap()
}

fn bitext(pairs: Vec<(String, String)>) -> ParallelCorpus {
    ParallelCorpus::new(pairs, tag("eng"), tag("ori")).unwrap()
}

fn pair_strategy() -> impl Strategy<Value = (String, String)> {
    (tokens(0, 10), tokens(0, 10)).prop_map(|(a, b)| (a.join(" "), b.join(" ")))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn tokenize_is_idempotent(text in messy_text()) {
        let once = tokenize(&text);
        let twice = tokenize(&once.join());
        prop_assert_eq!(&once, &twice);
        prop_assert!(once.iter().all(|t| !t.is_empty() && !t.chars().any(char::is_whitespace)));
    }

    #[test]
    fn bpe_round_trip(corpus in prop::collection::vec(messy_text(), 0..8), probe in messy_text(), merges in 0usize..40) {
        let lines: Vec<TokenSequence> = corpus.iter().map(|l| tokenize(l)).collect();
        let model = bpe_learn(&lines, merges);
        let t = tokenize(&probe);
        prop_assert_eq!(bpe_decode(&bpe_apply(&model, &t)).unwrap(), t.clone());
        // also through the model's text form
        let reloaded = mtsieve::textnorm::BpeModel::from_text(&model.to_text()).unwrap();
        prop_assert_eq!(bpe_apply(&reloaded, &t), bpe_apply(&model, &t));
    }

    #[test]
    fn bpe_learn_ignores_line_order(mut lines in prop::collection::vec(tokens(0, 6), 0..8), merges in 0usize..20) {
        let a = bpe_learn(&lines.iter().cloned().map(seq).collect::<Vec<_>>(), merges);
        lines.reverse();
        let b = bpe_learn(&lines.into_iter().map(seq).collect::<Vec<_>>(), merges);
        prop_assert_eq!(a.merges(), b.merges());
    }

    #[test]
    fn profiles_match_oracle(h in tokens(0, 15), r in tokens(0, 15), n in 1usize..=4) {
        let p = ngram_profile(&seq(h.clone()), &seq(r.clone()), n);
        prop_assert_eq!((p.total, p.matched), oracle_profile(&h, &r, n));
        prop_assert!(p.matched <= p.total);
    }

    #[test]
    fn corpus_bleu_matches_oracle(pairs in prop::collection::vec((tokens(0, 12), tokens(1, 12)), 1..6)) {
        let (h, r): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let hs: Vec<_> = h.iter().cloned().map(seq).collect();
        let rs: Vec<_> = r.iter().cloned().map(seq).collect();
        let got = corpus_bleu(&hs, &rs).unwrap().score;
        prop_assert!((got - oracle_corpus_bleu(&h, &r)).abs() < 1e-12);
    }

    #[test]
    fn scores_stay_in_range(h in tokens(0, 20), r in tokens(0, 20)) {
        let (h, r) = (seq(h), seq(r));
        let b = sentence_bleu(&h, &r);
        prop_assert!((0.0..=100.0).contains(&b.score));
        prop_assert!((0.0..=1.0).contains(&b.brevity_penalty));
        let m = meteor(&h, &r);
        prop_assert!((0.0..=1.0).contains(&m.score));
        prop_assert!((0.0..=0.5).contains(&m.penalty));
        prop_assert!(m.chunks <= m.matches && m.matches <= h.len().min(r.len()));
        let rb = ribes(&h, &r);
        prop_assert!((0.0..=1.0).contains(&rb.score));
        prop_assert!((rb.nkt - oracle_nkt(&rb.aligned_ref_positions)).abs() < 1e-12);
        let mut distinct = rb.aligned_ref_positions.clone();
        distinct.sort_unstable();
        distinct.dedup();
        prop_assert_eq!(distinct.len(), rb.aligned_ref_positions.len());
    }

    #[test]
    fn identity_maxima(x in tokens(2, 30)) {
        let s = seq(x.clone());
        if x.len() >= 4 {
            prop_assert!((sentence_bleu(&s, &s).score - 100.0).abs() < 1e-9);
        }
        prop_assert!((ribes(&s, &s).score - 1.0).abs() < 1e-12);
        let expected = 1.0 - 0.5 * (1.0 / x.len() as f64).powi(3);
        prop_assert!((meteor(&s, &s).score - expected).abs() < 1e-12);
    }

    #[test]
    fn single_sentence_corpus_bleu_is_unsmoothed_sentence_bleu(h in tokens(4, 12), r in tokens(4, 12)) {
        let (hs, rs) = (seq(h), seq(r));
        let sentence = sentence_bleu(&hs, &rs);
        let corpus = corpus_bleu(&[hs], &[rs]).unwrap();
        prop_assert_eq!(&corpus.profiles, &sentence.profiles);
        if sentence.profiles.iter().all(|p| p.matched > 0) {
            prop_assert!(!sentence.smoothed);
            prop_assert!((corpus.score - sentence.score).abs() < 1e-9);
        }
    }

    #[test]
    fn permutation_keeps_unigram_matches(x in tokens(1, 15), perm_seed in any::<u64>()) {
        let mut shuffled = x.clone();
        let mut state = perm_seed;
        for i in (1..shuffled.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            shuffled.swap(i, (state >> 33) as usize % (i + 1));
        }
        let (orig, perm) = (seq(x), seq(shuffled));
        prop_assert_eq!(meteor(&perm, &orig).matches, orig.len());
        prop_assert_eq!(ngram_profile(&perm, &orig, 1).matched, orig.len() as u64);
        for n in 2..=4 {
            prop_assert!(ngram_profile(&perm, &orig, n).matched <= ngram_profile(&orig, &orig, n).matched);
        }
        prop_assert!(ribes(&perm, &orig).nkt <= ribes(&orig, &orig).nkt);
    }

    #[test]
    fn metrics_are_pure(h in tokens(0, 12), r in tokens(0, 12)) {
        let (h, r) = (seq(h), seq(r));
        prop_assert_eq!(sentence_bleu(&h, &r).score.to_bits(), sentence_bleu(&h, &r).score.to_bits());
        prop_assert_eq!(meteor(&h, &r), meteor(&h, &r));
        prop_assert_eq!(ribes(&h, &r), ribes(&h, &r));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quarter_and_first_k(n in 0usize..200, k in 1usize..50) {
        let c = bitext((0..n).map(|i| (format!("s{i}"), format!("t{i}"))).collect());
        let q = corpus::split(&c, SplitSpec::Quarter).unwrap();
        prop_assert_eq!(q.len(), n / 4);
        prop_assert_eq!(q.pairs(), &c.pairs()[..n / 4]);
        match corpus::split(&c, SplitSpec::FirstK(k)) {
            Ok(f) => prop_assert_eq!(f.pairs(), &c.pairs()[..k]),
            Err(_) => prop_assert!(k > n),
        }
    }

    #[test]
    fn fraction_is_deterministic(n in 1usize..300, f in 0.01f64..=1.0, seed in any::<u64>()) {
        let c = bitext((0..n).map(|i| (format!("s{i}"), format!("t{i}"))).collect());
        let spec = SplitSpec::Fraction { fraction: f, seed };
        let a = corpus::split(&c, spec).unwrap();
        prop_assert_eq!(&a, &corpus::split(&c, spec).unwrap());
        prop_assert_eq!(a.len(), (f * n as f64).floor() as usize);
        for p in a.pairs() {
            let original: usize = p.source[1..].parse().unwrap();
            prop_assert_eq!(&c.pairs()[original].target, &p.target);
        }
    }

    #[test]
    fn carve_is_a_partition(n in 2usize..200, size_frac in 0.0f64..1.0, seed in any::<u64>()) {
        let size = 1 + ((n - 1) as f64 * size_frac) as usize % (n - 1);
        let c = bitext((0..n).map(|i| (format!("s{i}"), format!("t{i}"))).collect());
        let (train, valid) = corpus::carve_validation(&c, size, seed).unwrap();
        prop_assert_eq!(train.len() + valid.len(), n);
        prop_assert_eq!(valid.len(), size);
        let mut seen = vec![false; n];
        for s in train.sources().chain(valid.sources()) {
            let i: usize = s[1..].parse().unwrap();
            prop_assert!(!seen[i]);
            seen[i] = true;
        }
    }

    #[test]
    fn write_load_round_trip(pairs in prop::collection::vec(("[^\n\r]{0,20}", "[^\n\r]{0,20}"), 0..20)) {
        let c = bitext(pairs);
        let (mut s, mut t) = (Vec::new(), Vec::new());
        corpus::write_parallel(&c, &mut s, &mut t).unwrap();
        let back = corpus::load_parallel(&s[..], &t[..], tag("eng"), tag("ori")).unwrap();
        prop_assert_eq!(back, c);
    }

    #[test]
    fn lexicon_is_order_insensitive(mut pairs in prop::collection::vec(pair_strategy(), 1..20)) {
        let a = lexicon_train(&bitext(pairs.clone())).unwrap();
        pairs.reverse();
        let b = lexicon_train(&bitext(pairs)).unwrap();
        prop_assert_eq!(a.to_tsv(), b.to_tsv());
    }

    #[test]
    fn batch_matches_single(pairs in prop::collection::vec(pair_strategy(), 1..20), probes in prop::collection::vec(messy_text(), 0..10)) {
        let lex = LexiconTranslator::train(&bitext(pairs)).unwrap();
        let identity = IdentityTranslator::default();
        let refs: Vec<&str> = probes.iter().map(String::as_str).collect();
        for t in [&lex as &dyn Translator, &identity] {
            let batch = t.translate_batch(&refs).unwrap();
            for (p, b) in refs.iter().zip(&batch) {
                prop_assert_eq!(&t.translate(p).unwrap(), b);
            }
        }
    }

    #[test]
    fn unknown_tokens_pass_through(pairs in prop::collection::vec(pair_strategy(), 1..10)) {
        let table = lexicon_train(&bitext(pairs)).unwrap();
        prop_assert_eq!(lexicon_translate(&table, "zzqq unknownyy 77"), "zzqq unknownyy 77");
    }

    #[test]
    fn sieve_partition_monotonicity_idempotence(pairs in prop::collection::vec(pair_strategy(), 1..40), b in 0.0f64..=100.0) {
        let train = bitext(pairs);
        let lex = LexiconTranslator::train(&train).unwrap();
        let config = SieveConfig { exec: Exec { jobs: 2, batch_size: 3 }, ..Default::default() };
        let mut kept_prev = 0;
        for divisor in [1.0, 2.0, 4.0, 8.0, 16.0] {
            let t = Threshold::ratio(b, divisor).unwrap();
            let (filtered, report) = apply_threshold(&train, &lex, t, &config).unwrap();
            prop_assert_eq!(report.pairs_in, report.pairs_kept + report.pairs_removed);
            prop_assert!(report.pairs_kept >= kept_prev);
            kept_prev = report.pairs_kept;
            // kept pairs appear in the original order, unmodified
            let mut cursor = 0;
            for p in filtered.pairs() {
                let pos = train.pairs()[cursor..].iter().position(|q| q.source == p.source && q.target == p.target);
                prop_assert!(pos.is_some());
                cursor += pos.unwrap() + 1;
            }
            let (again, rereport) = apply_threshold(&filtered, &lex, t, &config).unwrap();
            prop_assert_eq!(rereport.pairs_removed, 0);
            prop_assert_eq!(again, filtered);
        }
    }

    #[test]
    fn percentile_keeps_exact_count(pairs in prop::collection::vec(pair_strategy(), 0..60), keep in 0.01f64..=1.0) {
        let train = bitext(pairs);
        let t = Threshold::percentile(0.0, keep).unwrap();
        let (_, report) = apply_threshold(&train, &IdentityTranslator::default(), t, &SieveConfig::default()).unwrap();
        prop_assert_eq!(report.pairs_kept, sieve::keep_count(keep, train.len()));
        prop_assert_eq!(report.pairs_kept, ((keep * train.len() as f64) - 1e-9).ceil().max(0.0) as usize);
    }

    #[test]
    fn scoring_ignores_job_count(pairs in prop::collection::vec(pair_strategy(), 0..80)) {
        let train = bitext(pairs);
        let lex = LexiconTranslator::train(&bitext(vec![("a".into(), "b".into())])).unwrap();
        let one = score_pairs(&train, &lex, &Exec { jobs: 1, batch_size: 7 }).unwrap();
        let many = score_pairs(&train, &lex, &Exec { jobs: 4, batch_size: 7 }).unwrap();
        prop_assert_eq!(one, many);
    }
}
