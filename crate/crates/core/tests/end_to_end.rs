use std::sync::OnceLock;

use roi_core::bundle::{load_bundle, save_bundle};
use roi_core::eval::{auc, group_importance, permutation_importance};
use roi_core::pipeline::prepare;
use roi_core::select::{build_grid, random_search};
use roi_core::synth::generate;
use roi_core::{
    Error, FeatureGroup, ModelBundle, PipelineConfig, Prepared, RfConfig, SearchConfig, SynthConfig,
};

fn prepared() -> &'static Prepared {
    static P: OnceLock<Prepared> = OnceLock::new();
    P.get_or_init(|| {
        let raw = generate(&SynthConfig {
            n: 1500,
            seed: 21,
            ..SynthConfig::default()
        })
        .unwrap();
        prepare(&raw, &PipelineConfig::default()).unwrap()
    })
}

fn small_rf() -> RfConfig {
    RfConfig {
        n_estimators: 60,
        max_features: 6,
        seed: 21,
        ..RfConfig::default()
    }
}

#[test]
fn split_is_temporal_and_columns_agree() {
    let p = prepared();
    assert!(p.split.train.records.iter().all(|r| r.release_year < 2011));
    assert!(p.split.test.records.iter().all(|r| r.release_year >= 2011));
    assert!(p.dropped_rows > 0);
    assert_eq!(p.train_matrix.column_names(), p.reducer.output_names());
    assert_eq!(p.test_matrix.column_names(), p.reducer.output_names());
    assert!(p
        .train_matrix
        .column_names()
        .iter()
        .all(|n| !n.starts_with("genome_tag_")));
}

#[test]
fn planted_signal_is_recovered() {
    let p = prepared();
    let forest = p.train(&small_rf()).unwrap();
    let scores = forest.predict_proba_matrix(&p.test_matrix).unwrap();
    let a = auc(&scores, &p.split.test_labels).unwrap();
    assert!(a > 0.75, "test AUC {a}");
}

#[test]
fn fitted_pipeline_reproduces_prepared_matrices() {
    let p = prepared();
    let fitted = p.fitted(Some(p.train(&small_rf()).unwrap()), 21);
    let direct = fitted
        .forest()
        .unwrap()
        .predict_proba_matrix(&p.test_matrix)
        .unwrap();
    assert_eq!(fitted.predict_proba(&p.split.test).unwrap(), direct);
}

#[test]
fn bundle_round_trip_preserves_predictions() {
    let p = prepared();
    let fitted = p.fitted(Some(p.train(&small_rf()).unwrap()), 21);
    let bundle = ModelBundle::new(fitted, 0);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.roibundle");
    save_bundle(&bundle, &path).unwrap();
    let loaded = load_bundle(&path).unwrap();
    assert_eq!(loaded.to_bytes(), bundle.to_bytes());
    let rows: Vec<_> = p
        .split
        .test
        .records
        .iter()
        .take(25)
        .map(|r| r.raw.clone())
        .collect();
    assert_eq!(
        loaded.pipeline.predict_rows(&rows).unwrap(),
        bundle.pipeline.predict_rows(&rows).unwrap()
    );

    let mut bytes = bundle.to_bytes();
    let last = bytes.len() - 1;
    bytes[last] ^= 0x40;
    assert!(matches!(
        ModelBundle::from_bytes(&bytes),
        Err(Error::Corrupt(_))
    ));
}

#[test]
fn unfitted_bundle_refuses_to_predict() {
    let p = prepared();
    let bundle = ModelBundle::new(p.fitted(None, 21), 0);
    let back = ModelBundle::from_bytes(&bundle.to_bytes()).unwrap();
    let rows = vec![p.split.test.records[0].raw.clone()];
    assert!(matches!(
        back.pipeline.predict_rows(&rows),
        Err(Error::NotFitted)
    ));
}

#[test]
fn raw_genome_tags_carry_the_importance() {
    let p = prepared();
    let fitted = p.fitted(Some(p.train(&small_rf()).unwrap()), 21);
    let scorer = fitted.raw_scorer().unwrap();
    let report =
        permutation_importance(&scorer, &p.test_features, &p.split.test_labels, 3, 21).unwrap();
    let iv = |k: usize| report.get(&format!("genome_tag_{k}")).unwrap().iv;
    let informative = (0..5).map(iv).sum::<f64>() / 5.0;
    let noise = (5..50).map(iv).sum::<f64>() / 45.0;
    assert!(informative > noise, "{informative} vs {noise}");

    let groups = group_importance(
        &scorer,
        &p.test_features,
        &p.split.test_labels,
        &[FeatureGroup::Content, FeatureGroup::Finance],
        3,
        21,
    )
    .unwrap();
    assert!(groups.get(FeatureGroup::Content).unwrap().n_features >= 50);
}

#[test]
fn search_over_a_tiny_grid_is_exhaustive_and_reproducible() {
    let p = prepared();
    let mut grid = build_grid(p.train_matrix.n_cols()).unwrap();
    grid.n_estimators = vec![10, 20];
    grid.max_features = vec![4];
    grid.max_depth = vec![6];
    grid.min_samples_split = vec![0.05];
    grid.min_samples_leaf = vec![1, 5];
    grid.bootstrap = vec![true];
    let too_many = SearchConfig {
        n_iter: 10,
        folds: 3,
        seed: 4,
    };
    assert!(matches!(
        random_search(&grid, &too_many, &p.train_matrix, &p.split.train_labels),
        Err(Error::InvalidConfig(_))
    ));
    let cfg = SearchConfig {
        n_iter: 4,
        ..too_many
    };
    let a = random_search(&grid, &cfg, &p.train_matrix, &p.split.train_labels).unwrap();
    let b = random_search(&grid, &cfg, &p.train_matrix, &p.split.train_labels).unwrap();
    assert_eq!(a.results.len(), 4);
    assert_eq!(a.results, b.results);
    let top = a
        .results
        .iter()
        .map(|r| r.mean_auc)
        .fold(f64::MIN, f64::max);
    assert_eq!(a.best.mean_auc, top);
}
