use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use mtsieve::corpus::{LanguageTag, ParallelCorpus};
use mtsieve::parallel::{default_jobs, Exec};
use mtsieve::sieve::score_pairs;
use mtsieve::translators::LexiconTranslator;

fn synthetic(n: usize) -> ParallelCorpus {
    let pairs = (0..n).map(|i| {
        let src: Vec<String> = (0..12)
            .map(|j| format!("s{}", (i * 7 + j * 13) % 997))
            .collect();
        let tgt: Vec<String> = (0..12)
            .map(|j| {
                // every fifth pair is deliberately misaligned
                let k = if i % 5 == 0 {
                    (i * 3 + j) % 991
                } else {
                    (i * 7 + j * 13) % 997
                };
                format!("t{k}")
            })
            .collect();
        (src.join(" "), tgt.join(" "))
    });
    ParallelCorpus::new(
        pairs,
        LanguageTag::new("eng").unwrap(),
        LanguageTag::new("ori").unwrap(),
    )
    .unwrap()
}

fn bench_scoring(c: &mut Criterion) {
    let corpus = synthetic(20_000);
    let translator = LexiconTranslator::train(&corpus).unwrap();
    let mut group = c.benchmark_group("score_pairs");
    group.sample_size(10);
    let mut job_counts = vec![1, 2, 4, default_jobs()];
    job_counts.sort_unstable();
    job_counts.dedup();
    for jobs in job_counts {
        let label = if jobs == 1 {
            "sequential".to_string()
        } else {
            format!("rayon-{jobs}")
        };
        group.bench_with_input(BenchmarkId::new(label, corpus.len()), &jobs, |b, &jobs| {
            let exec = Exec::with_jobs(jobs);
            b.iter(|| black_box(score_pairs(&corpus, &translator, &exec).unwrap()))
        });
    }
    group.finish();
}

fn bench_lexicon_training(c: &mut Criterion) {
    let corpus = synthetic(20_000);
    c.bench_function("lexicon_train/20000", |b| {
        b.iter(|| black_box(LexiconTranslator::train(&corpus).unwrap()))
    });
}

criterion_group!(benches, bench_scoring, bench_lexicon_training);
criterion_main!(benches);
