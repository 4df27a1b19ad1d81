//! End-to-end glue: clean, split, featurize, reduce, fit and predict.

use crate::data::{
    binarize_labels, check_unique_ids, clean_filter, temporal_split, Dataset, LabeledSplit,
    MovieRecord, RawDataset, RawMovieRecord, SCHEMA_VERSION,
};
use crate::error::{Error, Result};
use crate::eval::Scorer;
use crate::features::{DiscountConfig, FeatureContext};
use crate::forest::{Forest, RfConfig};
use crate::matrix::FeatureMatrix;
use crate::reduce::{ReducerConfig, ReducerPipeline};
use chrono::Datelike;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub discount: DiscountConfig,
    pub max_history: usize,
    pub reducer: ReducerConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            discount: DiscountConfig::default(),
            max_history: 5,
            reducer: ReducerConfig::default(),
        }
    }
}

/// Output of [`prepare`]: the labeled split and every fitted transform.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub split: LabeledSplit,
    /// Rows removed by the cleaning filter.
    pub dropped_rows: usize,
    pub context: FeatureContext,
    pub reducer: ReducerPipeline,
    /// Featurized, imputed, before reduction (audience columns included).
    pub train_features: FeatureMatrix,
    pub test_features: FeatureMatrix,
    /// Reduced model matrices.
    pub train_matrix: FeatureMatrix,
    pub test_matrix: FeatureMatrix,
}

pub fn prepare(raw: &RawDataset, cfg: &PipelineConfig) -> Result<Prepared> {
    let clean = clean_filter(raw);
    check_unique_ids(&clean)?;
    let dropped_rows = raw.records.len() - clean.len();
    let (train, test) = temporal_split(&clean);
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let known = train.concat(&test)?;
    let split = binarize_labels(train, test)?;
    let context = FeatureContext::fit(&split.train, &known, cfg.discount, cfg.max_history)?;
    let train_features = context.featurize(&split.train)?;
    let test_features = context.featurize(&split.test)?;
    let mut reducer = ReducerPipeline::new(cfg.reducer.clone());
    let train_matrix = reducer.fit_transform(&train_features, &split.train_labels)?;
    let test_matrix = reducer.transform(&test_features)?;
    Ok(Prepared {
        split,
        dropped_rows,
        context,
        reducer,
        train_features,
        test_features,
        train_matrix,
        test_matrix,
    })
}

impl Prepared {
    pub fn train(&self, rf: &RfConfig) -> Result<Forest> {
        Forest::fit(&self.train_matrix, &self.split.train_labels, rf)
    }

    pub fn fitted(&self, forest: Option<Forest>, seed: u64) -> FittedPipeline {
        FittedPipeline {
            context: self.context.clone(),
            reducer: self.reducer.clone(),
            median_roi: self.split.median_roi,
            forest,
            fingerprint: Fingerprint {
                train_rows: self.split.train.len() as u64,
                test_rows: self.split.test.len() as u64,
                seed,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fingerprint {
    pub train_rows: u64,
    pub test_rows: u64,
    pub seed: u64,
}

/// Everything needed to score a new movie, with no access to training data.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedPipeline {
    pub context: FeatureContext,
    pub reducer: ReducerPipeline,
    pub median_roi: f64,
    pub forest: Option<Forest>,
    pub fingerprint: Fingerprint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub movie_id: String,
    /// Probability of above-median ROI.
    pub probability: f64,
    pub label: u8,
}

/// A record for scoring: revenue is discarded and ROI left undefined.
pub fn prediction_record(raw: &RawMovieRecord) -> Result<MovieRecord> {
    if !(raw.budget.is_finite() && raw.budget > 0.0) {
        return Err(Error::Domain(format!(
            "movie {}: budget must be positive",
            raw.movie_id
        )));
    }
    let mut raw = raw.clone();
    raw.revenue = 0.0;
    Ok(MovieRecord {
        release_year: raw.release_date.year(),
        release_month: raw.release_date.month(),
        roi: f64::NAN,
        raw,
    })
}

impl FittedPipeline {
    pub fn forest(&self) -> Result<&Forest> {
        self.forest.as_ref().ok_or(Error::NotFitted)
    }

    /// Reduced model matrix for `data`.
    pub fn features(&self, data: &Dataset) -> Result<FeatureMatrix> {
        self.reducer.transform(&self.context.featurize(data)?)
    }

    pub fn predict_proba(&self, data: &Dataset) -> Result<Vec<f64>> {
        self.forest()?.predict_proba_matrix(&self.features(data)?)
    }

    /// Scores each row on its own, so the result for a row never depends
    /// on the other rows passed alongside it.
    pub fn predict_rows(&self, rows: &[RawMovieRecord]) -> Result<Vec<Prediction>> {
        let forest = self.forest()?;
        rows.iter()
            .map(|raw| {
                let data = Dataset {
                    records: vec![prediction_record(raw)?],
                    genome_dim: raw.genome.len(),
                    schema_version: SCHEMA_VERSION,
                };
                let p = forest.predict_proba_matrix(&self.features(&data)?)?[0];
                Ok(Prediction {
                    movie_id: raw.movie_id.clone(),
                    probability: p,
                    label: u8::from(p > 0.5),
                })
            })
            .collect()
    }

    /// Scorer over featurized matrices, before reduction.
    pub fn raw_scorer(&self) -> Result<RawScorer<'_>> {
        Ok(RawScorer {
            reducer: &self.reducer,
            forest: self.forest()?,
        })
    }
}

/// Reducer followed by forest, so importance can permute raw columns.
pub struct RawScorer<'a> {
    pub reducer: &'a ReducerPipeline,
    pub forest: &'a Forest,
}

impl Scorer for RawScorer<'_> {
    fn score(&self, matrix: &FeatureMatrix) -> Result<Vec<f64>> {
        self.forest
            .predict_proba_matrix(&self.reducer.transform(matrix)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::auc;
    use crate::synth::{generate, SynthConfig};

    fn quick_rf() -> RfConfig {
        RfConfig {
            n_estimators: 40,
            ..RfConfig::default()
        }
    }

    fn prepared() -> (RawDataset, Prepared) {
        let raw = generate(&SynthConfig {
            n: 900,
            seed: 12,
            ..SynthConfig::default()
        })
        .unwrap();
        let p = prepare(&raw, &PipelineConfig::default()).unwrap();
        (raw, p)
    }

    #[test]
    fn reduced_columns_match_between_splits() {
        let (_, p) = prepared();
        assert_eq!(p.train_matrix.column_names(), p.test_matrix.column_names());
        assert!(p
            .train_matrix
            .column_names()
            .iter()
            .any(|c| c == "genome_0"));
        assert!(p
            .train_matrix
            .column_names()
            .iter()
            .all(|c| !c.starts_with("genome_tag_")));
        assert!(p.train_matrix.columns.iter().all(|c| c.model_included));
        assert!(p.split.test.records.iter().all(|r| r.release_year >= 2011));
    }

    #[test]
    fn single_row_prediction_matches_batch() {
        let (_, p) = prepared();
        let fitted = p.fitted(Some(p.train(&quick_rf()).unwrap()), 0);
        let batch = fitted.predict_proba(&p.split.test).unwrap();
        let raws: Vec<RawMovieRecord> =
            p.split.test.records.iter().map(|r| r.raw.clone()).collect();
        let rows = fitted.predict_rows(&raws).unwrap();
        for (b, r) in batch.iter().zip(&rows) {
            assert_eq!(*b, r.probability);
        }
        assert!(auc(&batch, &p.split.test_labels).unwrap() > 0.6);
    }

    #[test]
    fn revenue_never_reaches_the_model() {
        let (_, p) = prepared();
        let fitted = p.fitted(Some(p.train(&quick_rf()).unwrap()), 0);
        let mut row = p.split.test.records[0].raw.clone();
        let a = fitted.predict_rows(std::slice::from_ref(&row)).unwrap();
        row.revenue = 1e12;
        let b = fitted.predict_rows(std::slice::from_ref(&row)).unwrap();
        assert_eq!(a, b);
        row.budget = 0.0;
        assert!(matches!(fitted.predict_rows(&[row]), Err(Error::Domain(_))));
    }

    #[test]
    fn raw_scorer_matches_reduced_scoring() {
        let (_, p) = prepared();
        let fitted = p.fitted(Some(p.train(&quick_rf()).unwrap()), 0);
        let direct = fitted.forest().unwrap().score(&p.test_matrix).unwrap();
        let via_raw = fitted
            .raw_scorer()
            .unwrap()
            .score(&p.test_features)
            .unwrap();
        assert_eq!(direct, via_raw);
    }

    #[test]
    fn untrained_pipeline_refuses_to_predict() {
        let (_, p) = prepared();
        let fitted = p.fitted(None, 0);
        assert!(matches!(
            fitted.predict_proba(&p.split.test),
            Err(Error::NotFitted)
        ));
    }
}
