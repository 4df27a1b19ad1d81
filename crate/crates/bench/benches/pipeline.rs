use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use roi_core::eval::auc;
use roi_core::forest::best_split;
use roi_core::pipeline::prepare;
use roi_core::reduce::fit_svd;
use roi_core::synth::generate;
use roi_core::{Forest, PipelineConfig, RfConfig, SynthConfig};

fn benches(c: &mut Criterion) {
    let raw = generate(&SynthConfig {
        n: 2000,
        seed: 3,
        ..SynthConfig::default()
    })
    .unwrap();
    let p = prepare(&raw, &PipelineConfig::default()).unwrap();
    let labels = &p.split.train_labels;

    c.bench_function("prepare_2000", |b| {
        b.iter(|| prepare(black_box(&raw), &PipelineConfig::default()).unwrap())
    });

    let rf = RfConfig {
        n_estimators: 50,
        ..RfConfig::default()
    };
    c.bench_function("forest_fit_50_trees", |b| {
        b.iter(|| Forest::fit(black_box(&p.train_matrix), labels, &rf).unwrap())
    });

    let columns: Vec<Vec<f64>> = (0..p.train_matrix.n_cols())
        .map(|j| p.train_matrix.column(j))
        .collect();
    let rows: Vec<usize> = (0..labels.len()).collect();
    let candidates: Vec<usize> = (0..columns.len()).collect();
    c.bench_function("best_split_root", |b| {
        b.iter(|| best_split(black_box(&columns), labels, &rows, &candidates, 5))
    });

    let genome = p.train_features.select_columns(
        &(0..p.train_features.n_cols())
            .filter(|&j| p.train_features.columns[j].name.starts_with("genome_tag_"))
            .collect::<Vec<_>>(),
    );
    c.bench_function("svd_genome_block", |b| {
        b.iter(|| fit_svd(black_box(&genome.values), 14, "genome").unwrap())
    });

    let forest = Forest::fit(&p.train_matrix, labels, &rf).unwrap();
    let scores = forest.predict_proba_matrix(&p.test_matrix).unwrap();
    c.bench_function("auc_test_set", |b| {
        b.iter(|| auc(black_box(&scores), &p.split.test_labels).unwrap())
    });
}

criterion_group! {
    name = pipeline;
    config = Criterion::default().sample_size(10);
    targets = benches
}
criterion_main!(pipeline);
