//! One function per subcommand. Each returns a summary for printing and
//! writes its artifacts into the output directory.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use roi_core::bundle::{created_at_from_env, load_bundle, save_bundle, write_atomic};
use roi_core::data::{load_movies_csv, write_movies_csv, CsvSchema};
use roi_core::eval::{
    group_importance, permutation_importance, quartile_bins, random_baseline, roc_curve, roc_svg,
    univariate_summary, write_summary_csv, GroupImportanceReport,
};
use roi_core::pipeline::{prepare, Fingerprint, Prediction};
use roi_core::select::{random_search, SearchOutcome};
use roi_core::{
    synth, ColumnMeta, FeatureGroup, FeatureMatrix, Forest, ImportanceReport, ModelBundle, RfConfig,
};

use crate::config::RunConfig;
use crate::error::CliError;

pub const FEATURES_CSV: &str = "features.csv";
pub const COLUMNS_META: &str = "columns.meta.csv";
pub const TRAIN_MATRIX: &str = "train_matrix.csv";
pub const TEST_MATRIX: &str = "test_matrix.csv";
pub const MODEL_COLUMNS_META: &str = "model_columns.meta.csv";
pub const SPLIT_CSV: &str = "split.csv";
pub const PRUNE_REPORT: &str = "prune_report.csv";
pub const PIPELINE_BUNDLE: &str = "pipeline.roibundle";
pub const SEARCH_RESULTS: &str = "search_results.csv";

type CliResult<T> = Result<T, CliError>;

/// Renders into memory, then writes atomically.
fn write_with(
    path: &Path,
    render: impl FnOnce(&mut Vec<u8>) -> roi_core::Result<()>,
) -> CliResult<()> {
    let mut buf = Vec::new();
    render(&mut buf).map_err(CliError::from_input)?;
    write_atomic(path, &buf).map_err(CliError::from_input)
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::input(format!("cannot create {}: {e}", dir.display())))
}

fn open(path: &Path) -> CliResult<fs::File> {
    fs::File::open(path)
        .map_err(|e| CliError::input(format!("cannot open {}: {e}", path.display())))
}

pub fn synth(cfg: &RunConfig, output: Option<&Path>) -> CliResult<(PathBuf, usize)> {
    let path = output
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.out("movies.csv"));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    let raw = synth::generate(&cfg.synth_config()).map_err(CliError::from_input)?;
    write_with(&path, |buf| write_movies_csv(buf, &raw))?;
    Ok((path, raw.records.len()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrepareSummary {
    pub train_rows: usize,
    pub test_rows: usize,
    pub dropped_rows: usize,
    pub median_roi: f64,
    pub model_columns: usize,
    pub pruned: Vec<String>,
}

pub fn prepare_cmd(cfg: &RunConfig) -> CliResult<PrepareSummary> {
    let movies = cfg
        .movies
        .as_ref()
        .ok_or_else(|| CliError::input("prepare needs --movies <csv>"))?;
    let raw = load_movies_csv(movies, &CsvSchema::default()).map_err(CliError::from_input)?;
    let p = prepare(&raw, &cfg.pipeline_config()).map_err(CliError::from_input)?;
    ensure_dir(&cfg.out_dir)?;

    let all_features = concat_rows(&p.train_features, &p.test_features)?;
    write_with(&cfg.out(FEATURES_CSV), |b| all_features.write_csv(b))?;
    write_with(&cfg.out(COLUMNS_META), |b| all_features.write_meta_csv(b))?;
    write_with(&cfg.out(TRAIN_MATRIX), |b| p.train_matrix.write_csv(b))?;
    write_with(&cfg.out(TEST_MATRIX), |b| p.test_matrix.write_csv(b))?;
    write_with(&cfg.out(MODEL_COLUMNS_META), |b| {
        p.train_matrix.write_meta_csv(b)
    })?;
    write_with(&cfg.out(PRUNE_REPORT), |b| p.reducer.prune.write_csv(b))?;
    write_with(&cfg.out(SPLIT_CSV), |b| {
        let mut w = csv::Writer::from_writer(b);
        w.write_record(["movie_id", "split", "roi", "label"])?;
        for (which, data, labels) in [
            ("train", &p.split.train, &p.split.train_labels),
            ("test", &p.split.test, &p.split.test_labels),
        ] {
            for (r, l) in data.records.iter().zip(labels) {
                w.write_record([
                    r.movie_id.as_str(),
                    which,
                    &r.roi.to_string(),
                    &l.to_string(),
                ])?;
            }
        }
        w.flush()
            .map_err(|e| roi_core::Error::io("<csv writer>", e))?;
        Ok(())
    })?;
    let bundle = ModelBundle::new(p.fitted(None, cfg.seed), created_at_from_env());
    save_bundle(&bundle, &cfg.out(PIPELINE_BUNDLE)).map_err(CliError::from_input)?;

    Ok(PrepareSummary {
        train_rows: p.split.train.len(),
        test_rows: p.split.test.len(),
        dropped_rows: p.dropped_rows,
        median_roi: p.split.median_roi,
        model_columns: p.train_matrix.n_cols(),
        pruned: p
            .reducer
            .prune
            .entries
            .iter()
            .map(|e| e.dropped.clone())
            .collect(),
    })
}

fn concat_rows(a: &FeatureMatrix, b: &FeatureMatrix) -> CliResult<FeatureMatrix> {
    let cols = a
        .columns
        .iter()
        .enumerate()
        .map(|(j, meta)| {
            let mut v = a.column(j);
            v.extend(b.column(j));
            (meta.clone(), v)
        })
        .collect();
    let mut ids = a.row_ids.clone();
    ids.extend(b.row_ids.iter().cloned());
    FeatureMatrix::from_columns(ids, cols).map_err(CliError::from_input)
}

#[derive(Debug, Clone)]
pub struct SplitRow {
    pub split: String,
    pub roi: f64,
    pub label: u8,
}

pub fn read_split(out_dir: &Path) -> CliResult<HashMap<String, SplitRow>> {
    let path = out_dir.join(SPLIT_CSV);
    let mut r = csv::Reader::from_reader(open(&path)?);
    let bad = |msg: String| CliError::input(format!("{}: {msg}", path.display()));
    let mut out = HashMap::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        if rec.len() != 4 {
            return Err(bad(format!("row {} has {} fields", i + 1, rec.len())));
        }
        let row = SplitRow {
            split: rec[1].to_string(),
            roi: rec[2]
                .parse()
                .map_err(|_| bad(format!("row {}: bad roi", i + 1)))?,
            label: rec[3]
                .parse()
                .map_err(|_| bad(format!("row {}: bad label", i + 1)))?,
        };
        out.insert(rec[0].to_string(), row);
    }
    Ok(out)
}

fn read_meta(path: &Path) -> CliResult<Vec<ColumnMeta>> {
    FeatureMatrix::read_meta_csv(open(path)?).map_err(CliError::from_input)
}

fn labels_for(m: &FeatureMatrix, split: &HashMap<String, SplitRow>) -> CliResult<Vec<u8>> {
    m.row_ids
        .iter()
        .map(|id| {
            split
                .get(id)
                .map(|r| r.label)
                .ok_or_else(|| CliError::input(format!("movie `{id}` missing from {SPLIT_CSV}")))
        })
        .collect()
}

/// A reduced matrix written by `prepare`, with its labels.
pub fn read_prepared(cfg: &RunConfig, which: &str) -> CliResult<(FeatureMatrix, Vec<u8>)> {
    let meta = read_meta(&cfg.out(MODEL_COLUMNS_META))?;
    let name = if which == "train" {
        TRAIN_MATRIX
    } else {
        TEST_MATRIX
    };
    let m = FeatureMatrix::read_csv(open(&cfg.out(name))?, meta).map_err(CliError::from_input)?;
    let split = read_split(&cfg.out_dir)?;
    let labels = labels_for(&m, &split)?;
    Ok((m, labels))
}

fn save_model(cfg: &RunConfig, forest: Forest, train_rows: usize) -> CliResult<PathBuf> {
    let pipeline_path = cfg.out(PIPELINE_BUNDLE);
    let mut bundle = load_bundle(&pipeline_path).map_err(CliError::from_input)?;
    if forest.feature_names() != bundle.pipeline.reducer.output_names() {
        return Err(CliError::input(format!(
            "{TRAIN_MATRIX} columns do not match {}",
            pipeline_path.display()
        )));
    }
    bundle.pipeline.forest = Some(forest);
    bundle.pipeline.fingerprint = Fingerprint {
        train_rows: train_rows as u64,
        seed: cfg.seed,
        ..bundle.pipeline.fingerprint
    };
    bundle.created_at = created_at_from_env();
    let path = cfg.model_path();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    save_bundle(&bundle, &path).map_err(CliError::from_input)?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub bundle: PathBuf,
    pub config: RfConfig,
    pub train_rows: usize,
    pub features: usize,
}

pub fn train(cfg: &RunConfig) -> CliResult<TrainSummary> {
    let (m, labels) = read_prepared(cfg, "train")?;
    let rf = cfg.rf_config();
    let forest = Forest::fit(&m, &labels, &rf).map_err(CliError::from_training)?;
    let bundle = save_model(cfg, forest, m.n_rows())?;
    Ok(TrainSummary {
        bundle,
        config: rf,
        train_rows: m.n_rows(),
        features: m.n_cols(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneSummary {
    pub bundle: PathBuf,
    pub results: PathBuf,
    pub grid_size: usize,
    pub outcome: SearchOutcome,
}

pub fn tune(cfg: &RunConfig) -> CliResult<TuneSummary> {
    let (m, labels) = read_prepared(cfg, "train")?;
    let grid = cfg.grid(m.n_cols())?;
    let outcome =
        random_search(&grid, &cfg.search_config(), &m, &labels).map_err(CliError::from_training)?;
    let results = cfg.out(SEARCH_RESULTS);
    write_with(&results, |b| outcome.write_csv(b))?;
    let forest = Forest::fit(&m, &labels, &outcome.best.config).map_err(CliError::from_training)?;
    let bundle = save_model(cfg, forest, m.n_rows())?;
    Ok(TuneSummary {
        bundle,
        results,
        grid_size: grid.len(),
        outcome,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub auc: f64,
    pub baseline_auc: f64,
    pub test_rows: usize,
}

pub fn evaluate(cfg: &RunConfig) -> CliResult<EvalSummary> {
    let bundle = load_bundle(&cfg.model_path()).map_err(CliError::from_input)?;
    let forest = bundle.pipeline.forest().map_err(CliError::from_input)?;
    let (m, labels) = read_prepared(cfg, "test")?;
    let scores = forest
        .predict_proba_matrix(&m)
        .map_err(CliError::from_input)?;
    let roc = roc_curve(&scores, &labels).map_err(CliError::from_evaluation)?;
    let baseline = roc_curve(&random_baseline(&labels, cfg.seed), &labels)
        .map_err(CliError::from_evaluation)?;
    write_with(&cfg.out("roc.csv"), |b| roc.write_csv(b))?;
    let svg = roc_svg(&[("random forest", &roc), ("random baseline", &baseline)]);
    write_atomic(&cfg.out("roc.svg"), svg.as_bytes()).map_err(CliError::from_input)?;
    Ok(EvalSummary {
        auc: roc.area(),
        baseline_auc: baseline.area(),
        test_rows: labels.len(),
    })
}

/// Test rows of `features.csv`, model columns only, before reduction.
pub fn read_test_features(cfg: &RunConfig) -> CliResult<(FeatureMatrix, Vec<u8>)> {
    let meta = read_meta(&cfg.out(COLUMNS_META))?;
    let all = FeatureMatrix::read_csv(open(&cfg.out(FEATURES_CSV))?, meta)
        .map_err(CliError::from_input)?;
    let split = read_split(&cfg.out_dir)?;
    let rows: Vec<usize> = (0..all.n_rows())
        .filter(|&i| {
            split
                .get(&all.row_ids[i])
                .is_some_and(|r| r.split == "test")
        })
        .collect();
    let m = all.select_rows(&rows).model_view();
    let labels = labels_for(&m, &split)?;
    Ok((m, labels))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceSummary {
    pub features: ImportanceReport,
    pub groups: GroupImportanceReport,
}

/// Permutes raw feature columns and scores through the saved reducer and
/// forest, so genome tags are ranked individually.
pub fn importance(cfg: &RunConfig) -> CliResult<ImportanceSummary> {
    let bundle = load_bundle(&cfg.model_path()).map_err(CliError::from_input)?;
    let scorer = bundle.pipeline.raw_scorer().map_err(CliError::from_input)?;
    let groups: Vec<FeatureGroup> = match &cfg.groups {
        Some(names) => names
            .iter()
            .map(|n| n.parse().map_err(CliError::from_input))
            .collect::<CliResult<_>>()?,
        None => FeatureGroup::ALL.to_vec(),
    };
    let (m, labels) = read_test_features(cfg)?;
    let features = permutation_importance(&scorer, &m, &labels, cfg.n_repeats, cfg.seed)
        .map_err(CliError::from_evaluation)?;
    let group_report = group_importance(&scorer, &m, &labels, &groups, cfg.n_repeats, cfg.seed)
        .map_err(CliError::from_evaluation)?;
    write_with(&cfg.out("importance.csv"), |b| features.write_csv(b))?;
    write_with(&cfg.out("group_importance.csv"), |b| {
        group_report.write_csv(b)
    })?;
    Ok(ImportanceSummary {
        features,
        groups: group_report,
    })
}

pub fn predict(cfg: &RunConfig, rows: &Path, output: Option<&Path>) -> CliResult<Vec<Prediction>> {
    let bundle = load_bundle(&cfg.model_path()).map_err(CliError::from_input)?;
    let raw = load_movies_csv(rows, &CsvSchema::prediction()).map_err(CliError::from_input)?;
    let preds = bundle
        .pipeline
        .predict_rows(&raw.records)
        .map_err(CliError::from_input)?;
    if let Some(path) = output {
        write_with(path, |b| write_predictions(b, &preds))?;
    }
    Ok(preds)
}

pub fn write_predictions<W: std::io::Write>(out: W, preds: &[Prediction]) -> roi_core::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["movie_id", "probability", "label"])?;
    for p in preds {
        w.write_record([
            p.movie_id.clone(),
            p.probability.to_string(),
            p.label.to_string(),
        ])?;
    }
    w.flush()
        .map_err(|e| roi_core::Error::io("<csv writer>", e))?;
    Ok(())
}

/// Mean ROI with bootstrap intervals per category of each report feature.
/// Binary columns are grouped by value, others by quartile.
pub fn report(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let meta = read_meta(&cfg.out(COLUMNS_META))?;
    let all = FeatureMatrix::read_csv(open(&cfg.out(FEATURES_CSV))?, meta)
        .map_err(CliError::from_input)?;
    let split = read_split(&cfg.out_dir)?;
    let rois: Vec<f64> =
        all.row_ids
            .iter()
            .map(|id| {
                split.get(id).map(|r| r.roi).ok_or_else(|| {
                    CliError::input(format!("movie `{id}` missing from {SPLIT_CSV}"))
                })
            })
            .collect::<CliResult<_>>()?;
    let mut written = Vec::new();
    for name in &cfg.report_features {
        let values = all
            .column_by_name(name)
            .ok_or_else(|| CliError::input(format!("unknown report feature `{name}`")))?;
        let binary = values.iter().all(|&v| v == 0.0 || v == 1.0);
        let categories: Vec<String> = if binary {
            values.iter().map(|&v| format!("{}", v as u8)).collect()
        } else {
            quartile_bins(&values)
        };
        let rows = univariate_summary(&categories, &rois, None, cfg.n_boot, cfg.seed)
            .map_err(CliError::from_evaluation)?;
        let path = cfg.out(&format!("univariate_{name}.csv"));
        write_with(&path, |b| write_summary_csv(&rows, b))?;
        written.push(path);
    }
    Ok(written)
}
