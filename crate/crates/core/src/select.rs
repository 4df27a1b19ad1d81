//! Hyperparameter grid, stratified folds and seeded random search.

use std::io::Write;

use rand::seq::{index, SliceRandom};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::eval::auc;
use crate::forest::{Forest, RfConfig};
use crate::matrix::FeatureMatrix;
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrid {
    pub n_estimators: Vec<usize>,
    pub max_features: Vec<usize>,
    pub max_depth: Vec<usize>,
    pub min_samples_split: Vec<f64>,
    pub min_samples_leaf: Vec<usize>,
    pub bootstrap: Vec<bool>,
}

/// The standard grid for `p` features. `max_features` runs over the
/// multiples of `floor(sqrt(p))` up to `p`.
pub fn build_grid(p: usize) -> Result<ParamGrid> {
    if p == 0 {
        return Err(Error::InvalidConfig(
            "grid needs at least one feature".into(),
        ));
    }
    let step = (p as f64).sqrt().floor() as usize;
    // guard against sqrt rounding just below an exact square
    let step = if (step + 1) * (step + 1) <= p {
        step + 1
    } else {
        step
    };
    Ok(ParamGrid {
        n_estimators: (1..=10).map(|m| m * 100).collect(),
        max_features: (1..=p / step).map(|m| m * step).collect(),
        max_depth: (1..=10).map(|m| m * 10).collect(),
        min_samples_split: vec![0.01, 0.03, 0.05],
        min_samples_leaf: vec![1, 3, 5],
        bootstrap: vec![true],
    })
}

impl ParamGrid {
    /// A grid holding exactly one configuration.
    pub fn single(cfg: &RfConfig) -> ParamGrid {
        ParamGrid {
            n_estimators: vec![cfg.n_estimators],
            max_features: vec![cfg.max_features],
            max_depth: vec![cfg.max_depth],
            min_samples_split: vec![cfg.min_samples_split],
            min_samples_leaf: vec![cfg.min_samples_leaf],
            bootstrap: vec![cfg.bootstrap],
        }
    }

    fn radices(&self) -> [usize; 6] {
        [
            self.n_estimators.len(),
            self.max_features.len(),
            self.max_depth.len(),
            self.min_samples_split.len(),
            self.min_samples_leaf.len(),
            self.bootstrap.len(),
        ]
    }

    pub fn len(&self) -> usize {
        self.radices().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Mixed-radix decoding; the last field varies fastest.
    pub fn get(&self, index: usize, seed: u64) -> Option<RfConfig> {
        if index >= self.len() {
            return None;
        }
        let r = self.radices();
        let mut digits = [0usize; 6];
        let mut rest = index;
        for k in (0..6).rev() {
            digits[k] = rest % r[k];
            rest /= r[k];
        }
        Some(RfConfig {
            n_estimators: self.n_estimators[digits[0]],
            max_features: self.max_features[digits[1]],
            max_depth: self.max_depth[digits[2]],
            min_samples_split: self.min_samples_split[digits[3]],
            min_samples_leaf: self.min_samples_leaf[digits[4]],
            bootstrap: self.bootstrap[digits[5]],
            seed,
        })
    }

    pub fn iter(&self, seed: u64) -> impl Iterator<Item = RfConfig> + '_ {
        (0..self.len()).map(move |i| self.get(i, seed).expect("index in range"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub n_iter: usize,
    pub folds: usize,
    /// Seeds the draw order, the fold assignment and every forest.
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            n_iter: 100,
            folds: 4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub draw_index: usize,
    pub config: RfConfig,
    pub fold_aucs: Vec<f64>,
    pub mean_auc: f64,
}

/// Fold id per row. Each class is shuffled on its own stream and dealt
/// round-robin; the second class continues where the first stopped so
/// fold sizes also differ by at most one.
pub fn stratified_kfold(labels: &[u8], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!(
            "need at least 2 folds, got {k}"
        )));
    }
    let mut folds = vec![0usize; labels.len()];
    let mut pos = 0usize;
    for class in [0u8, 1] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < k {
            return Err(Error::ClassTooSmall {
                class,
                count: members.len(),
                folds: k,
            });
        }
        members.shuffle(&mut rng::salted(seed, rng::SALT_FOLDS, u64::from(class)));
        for i in members {
            folds[i] = pos % k;
            pos += 1;
        }
    }
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::Domain("labels must be 0 or 1".into()));
    }
    Ok(folds)
}

/// Fits on all folds but one and scores AUC on the held-out fold, for each
/// fold in turn.
pub fn cross_validate(
    config: &RfConfig,
    matrix: &FeatureMatrix,
    labels: &[u8],
    folds: &[usize],
) -> Result<CvResult> {
    if folds.len() != matrix.n_rows() || labels.len() != matrix.n_rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} rows, {} labels, {} fold ids",
            matrix.n_rows(),
            labels.len(),
            folds.len()
        )));
    }
    let k = folds.iter().max().map_or(0, |m| m + 1);
    let mut fold_aucs = Vec::with_capacity(k);
    for f in 0..k {
        let (held, kept): (Vec<usize>, Vec<usize>) = (0..folds.len()).partition(|&i| folds[i] == f);
        let train_labels: Vec<u8> = kept.iter().map(|&i| labels[i]).collect();
        let test_labels: Vec<u8> = held.iter().map(|&i| labels[i]).collect();
        let forest = Forest::fit(&matrix.select_rows(&kept), &train_labels, config)?;
        let scores = forest.predict_proba_matrix(&matrix.select_rows(&held))?;
        let v = auc(&scores, &test_labels).map_err(|e| match e {
            Error::SingleClass(msg) => Error::SingleClass(format!("fold {}: {msg}", f + 1)),
            other => other,
        })?;
        fold_aucs.push(v);
    }
    let mean_auc = fold_aucs.iter().sum::<f64>() / k as f64;
    Ok(CvResult {
        draw_index: 0,
        config: config.clone(),
        fold_aucs,
        mean_auc,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub best: CvResult,
    /// In draw order.
    pub results: Vec<CvResult>,
}

impl SearchOutcome {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let k = self.results.first().map_or(0, |r| r.fold_aucs.len());
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = [
            "draw_index",
            "n_estimators",
            "max_features",
            "max_depth",
            "min_samples_split",
            "min_samples_leaf",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        header.extend((1..=k).map(|i| format!("fold_auc_{i}")));
        header.push("mean_auc".into());
        w.write_record(&header)?;
        for r in &self.results {
            let c = &r.config;
            let mut rec = vec![
                r.draw_index.to_string(),
                c.n_estimators.to_string(),
                c.max_features.to_string(),
                c.max_depth.to_string(),
                c.min_samples_split.to_string(),
                c.min_samples_leaf.to_string(),
            ];
            rec.extend(r.fold_aucs.iter().map(|a| a.to_string()));
            rec.push(r.mean_auc.to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

/// Grid indices in draw order: `n_iter` distinct, uniformly without
/// replacement.
pub fn draw_indices(grid_len: usize, n_iter: usize, seed: u64) -> Result<Vec<usize>> {
    if n_iter == 0 || n_iter > grid_len {
        return Err(Error::InvalidConfig(format!(
            "n_iter = {n_iter} must lie in 1..={grid_len}"
        )));
    }
    let mut rng = rng::salted(seed, rng::SALT_GRID, 0);
    Ok(index::sample(&mut rng, grid_len, n_iter).into_vec())
}

/// Randomized search. Candidates are evaluated in parallel on shared folds;
/// the best is the highest mean AUC, earliest draw on ties.
pub fn random_search(
    grid: &ParamGrid,
    cfg: &SearchConfig,
    matrix: &FeatureMatrix,
    labels: &[u8],
) -> Result<SearchOutcome> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("empty parameter grid".into()));
    }
    let draws = draw_indices(grid.len(), cfg.n_iter, cfg.seed)?;
    let folds = stratified_kfold(labels, cfg.folds, cfg.seed)?;
    let results = draws
        .par_iter()
        .enumerate()
        .map(|(d, &gi)| {
            let config = grid.get(gi, cfg.seed).expect("drawn index in range");
            let mut r = cross_validate(&config, matrix, labels, &folds)?;
            r.draw_index = d;
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = &results[0];
    for r in &results[1..] {
        if r.mean_auc > best.mean_auc {
            best = r;
        }
    }
    Ok(SearchOutcome {
        best: best.clone(),
        results,
    })
}
