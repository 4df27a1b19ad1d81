//! Truncated SVD for the genome and genre blocks, followed by pruning of
//! highly rank-correlated feature pairs.

use std::collections::{HashMap, HashSet};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::features::{GENOME_RAW_PREFIX, GENRE_PREFIX};
use crate::matrix::{ColumnMeta, FeatureGroup, FeatureMatrix};

/// Above this width the Gram matrix is not formed and a randomized range
/// finder is used instead.
pub const GRAM_MAX_DIM: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SvdSolver {
    /// Gram matrix for `d <= GRAM_MAX_DIM`, randomized otherwise.
    Auto,
    Gram,
    Randomized {
        oversample: usize,
        power_iterations: usize,
        seed: u64,
    },
}

impl SvdSolver {
    pub const RANDOMIZED_DEFAULT: SvdSolver = SvdSolver::Randomized {
        oversample: 10,
        power_iterations: 4,
        seed: 0x5eed,
    };
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvdModel {
    pub block_name: String,
    pub column_means: Vec<f64>,
    /// `k x d`, orthonormal rows.
    pub components: DMatrix<f64>,
    /// Non-increasing; at least `k` entries.
    pub singular_values: Vec<f64>,
    pub k: usize,
}

impl SvdModel {
    pub fn dim(&self) -> usize {
        self.column_means.len()
    }

    /// `(block - means) * components^T`.
    pub fn transform(&self, block: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if block.ncols() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "block `{}` has {} columns, model expects {}",
                self.block_name,
                block.ncols(),
                self.dim()
            )));
        }
        Ok(center(block, &self.column_means) * self.components.transpose())
    }

    pub fn inverse_transform(&self, projected: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = projected * &self.components;
        for (j, m) in self.column_means.iter().enumerate() {
            out.column_mut(j).add_scalar_mut(*m);
        }
        out
    }
}

fn center(block: &DMatrix<f64>, means: &[f64]) -> DMatrix<f64> {
    let mut c = block.clone();
    for (j, m) in means.iter().enumerate() {
        c.column_mut(j).add_scalar_mut(-m);
    }
    c
}

pub fn fit_svd(block: &DMatrix<f64>, k: usize, block_name: &str) -> Result<SvdModel> {
    fit_svd_with(block, k, block_name, SvdSolver::Auto)
}

pub fn fit_svd_with(
    block: &DMatrix<f64>,
    k: usize,
    block_name: &str,
    solver: SvdSolver,
) -> Result<SvdModel> {
    let (n, d) = block.shape();
    if n < 2 {
        return Err(Error::Domain(format!(
            "block `{block_name}` needs at least 2 rows"
        )));
    }
    if k == 0 || k > n.min(d) {
        return Err(Error::Domain(format!(
            "k = {k} out of range for a {n} x {d} block `{block_name}`"
        )));
    }
    let column_means: Vec<f64> = (0..d).map(|j| block.column(j).mean()).collect();
    let centered = center(block, &column_means);

    let solver = match solver {
        SvdSolver::Auto if d <= GRAM_MAX_DIM => SvdSolver::Gram,
        SvdSolver::Auto => SvdSolver::RANDOMIZED_DEFAULT,
        s => s,
    };
    let basis = match solver {
        SvdSolver::Gram => gram_basis(&centered),
        SvdSolver::Randomized {
            oversample,
            power_iterations,
            seed,
        } => randomized_basis(&centered, k + oversample, power_iterations, seed),
        SvdSolver::Auto => unreachable!(),
    };

    // Singular values are recomputed as projection norms: more accurate than
    // square roots of Gram eigenvalues near zero.
    let projected = &centered * basis.transpose();
    let mut order: Vec<(usize, f64)> = (0..basis.nrows())
        .map(|r| (r, projected.column(r).norm()))
        .collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let keep = order.len().min(n.min(d));
    let singular_values: Vec<f64> = order[..keep].iter().map(|o| o.1).collect();
    let mut components = DMatrix::zeros(k, d);
    for (i, &(r, _)) in order[..k].iter().enumerate() {
        let mut row = basis.row(r).into_owned();
        // sign convention: largest-magnitude loading positive
        let pivot = row
            .iter()
            .copied()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
            .map_or(1.0, |(_, v)| v);
        if pivot < 0.0 {
            row.neg_mut();
        }
        components.row_mut(i).copy_from(&row);
    }
    Ok(SvdModel {
        block_name: block_name.to_string(),
        column_means,
        components,
        singular_values,
        k,
    })
}

/// Eigenvectors of `X^T X` as rows, largest eigenvalue first.
fn gram_basis(centered: &DMatrix<f64>) -> DMatrix<f64> {
    let gram = centered.transpose() * centered;
    let eig = SymmetricEigen::new(gram);
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let d = centered.ncols();
    let mut basis = DMatrix::zeros(d, d);
    for (i, &c) in idx.iter().enumerate() {
        basis
            .row_mut(i)
            .copy_from(&eig.eigenvectors.column(c).transpose());
    }
    basis
}

/// Approximate top right singular vectors (as rows) via a seeded Gaussian
/// sketch with power iterations.
fn randomized_basis(
    centered: &DMatrix<f64>,
    width: usize,
    power_iterations: usize,
    seed: u64,
) -> DMatrix<f64> {
    let (n, d) = centered.shape();
    let width = width.min(n).min(d);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = DMatrix::from_fn(d, width, |_, _| StandardNormal.sample(&mut rng));
    let mut q = (centered * omega).qr().q();
    for _ in 0..power_iterations {
        let z = (centered.transpose() * &q).qr().q();
        q = (centered * z).qr().q();
    }
    // small problem: B = Q^T X, right singular vectors of B from its Gram
    let b = q.transpose() * centered;
    let small = SymmetricEigen::new(&b * b.transpose());
    let mut idx: Vec<usize> = (0..small.eigenvalues.len()).collect();
    idx.sort_by(|&x, &y| {
        small.eigenvalues[y]
            .total_cmp(&small.eigenvalues[x])
            .then(x.cmp(&y))
    });
    let mut basis = DMatrix::zeros(idx.len(), d);
    for (i, &c) in idx.iter().enumerate() {
        let v = b.transpose() * small.eigenvectors.column(c);
        let norm = v.norm();
        if norm > 0.0 {
            basis.row_mut(i).copy_from(&(v / norm).transpose());
        }
    }
    basis
}

/// Average ranks (1-based), ties share the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && values[idx[end]] == values[idx[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

pub fn spearman_corr(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "spearman inputs have lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::UndefinedCorrelation(
            "need at least two observations".into(),
        ));
    }
    pearson(&average_ranks(x), &average_ranks(y))
        .ok_or_else(|| Error::UndefinedCorrelation("constant input vector".into()))
}

pub const MI_BINS: usize = 16;

/// Equal-frequency bin index per value.
///
/// Edges are the order statistics at positions `floor(j * n / bins)` for
/// `j = 1..bins`; a value's bin is the number of edges not above it, so tied
/// values always share a bin.
pub fn equal_frequency_bins(values: &[f64], bins: usize) -> Vec<usize> {
    let n = values.len();
    if n == 0 {
        return vec![];
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let edges: Vec<f64> = (1..bins)
        .map(|j| sorted[(j * n / bins).min(n - 1)])
        .collect();
    values
        .iter()
        .map(|v| edges.partition_point(|e| e <= v))
        .collect()
}

/// Plug-in mutual information (bits) between a binned feature and a binary label.
pub fn mutual_information(feature: &[f64], labels: &[u8]) -> Result<f64> {
    if feature.len() != labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "feature has {} rows, labels {}",
            feature.len(),
            labels.len()
        )));
    }
    if feature.len() < 2 {
        return Err(Error::Domain(
            "mutual information needs at least two rows".into(),
        ));
    }
    let bins = equal_frequency_bins(feature, MI_BINS);
    let mut joint = vec![[0usize; 2]; MI_BINS];
    let mut label_counts = [0usize; 2];
    for (&b, &y) in bins.iter().zip(labels) {
        let y = usize::from(y != 0);
        joint[b][y] += 1;
        label_counts[y] += 1;
    }
    let n = feature.len() as f64;
    let term = |c: usize, cb: usize, cy: usize| {
        if c == 0 {
            0.0
        } else {
            let c = c as f64;
            c / n * (c * n / (cb as f64 * cy as f64)).log2()
        }
    };
    let mut mi = 0.0;
    for counts in &joint {
        let cb = counts[0] + counts[1];
        mi += term(counts[0], cb, label_counts[0]) + term(counts[1], cb, label_counts[1]);
    }
    Ok(mi.max(0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PruneEntry {
    pub dropped: String,
    pub partner: String,
    pub spearman_rho: f64,
    pub mi_dropped: f64,
    pub mi_kept: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PruneReport {
    pub entries: Vec<PruneEntry>,
}

impl PruneReport {
    pub fn dropped(&self) -> HashSet<&str> {
        self.entries.iter().map(|e| e.dropped.as_str()).collect()
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["dropped", "partner", "rho", "mi_dropped", "mi_kept"])?;
        for e in &self.entries {
            w.write_record([
                e.dropped.clone(),
                e.partner.clone(),
                e.spearman_rho.to_string(),
                e.mi_dropped.to_string(),
                e.mi_kept.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

pub const PRUNE_THRESHOLD: f64 = 0.75;

/// Slack for "0.75 or higher" so rank correlations that are exactly 0.75 in
/// rational arithmetic are not lost to rounding.
const THRESHOLD_SLACK: f64 = 1e-12;

/// Drops one column of every pair with `|rho| >= threshold`, keeping the one
/// with higher mutual information against the label.
///
/// Pairs are visited by descending `|rho|` (ties by column order); a pair is
/// only acted on while both of its columns survive. Equal information drops
/// the later column. Constant columns have undefined correlation and are
/// never paired.
pub fn prune_correlated(
    matrix: &FeatureMatrix,
    labels: &[u8],
    threshold: f64,
) -> Result<(FeatureMatrix, PruneReport)> {
    if labels.len() != matrix.n_rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {} rows",
            labels.len(),
            matrix.n_rows()
        )));
    }
    let p = matrix.n_cols();
    let columns: Vec<Vec<f64>> = (0..p).map(|j| matrix.column(j)).collect();
    let ranks: Vec<Vec<f64>> = columns.iter().map(|c| average_ranks(c)).collect();

    let mut pairs = Vec::new();
    for i in 0..p {
        for j in i + 1..p {
            if let Some(rho) = pearson(&ranks[i], &ranks[j]) {
                if rho.abs() >= threshold - THRESHOLD_SLACK {
                    pairs.push((i, j, rho));
                }
            }
        }
    }
    pairs.sort_by(|a, b| {
        b.2.abs()
            .total_cmp(&a.2.abs())
            .then(a.0.cmp(&b.0))
            .then(a.1.cmp(&b.1))
    });

    let mut mi_cache: HashMap<usize, f64> = HashMap::new();
    let mut mi = |j: usize| -> Result<f64> {
        if let Some(&v) = mi_cache.get(&j) {
            return Ok(v);
        }
        let v = mutual_information(&columns[j], labels)?;
        mi_cache.insert(j, v);
        Ok(v)
    };

    let mut alive = vec![true; p];
    let mut report = PruneReport::default();
    for (i, j, rho) in pairs {
        if !(alive[i] && alive[j]) {
            continue;
        }
        let (mi_i, mi_j) = (mi(i)?, mi(j)?);
        let (drop, keep, mi_drop, mi_keep) = if mi_i < mi_j {
            (i, j, mi_i, mi_j)
        } else {
            (j, i, mi_j, mi_i)
        };
        alive[drop] = false;
        report.entries.push(PruneEntry {
            dropped: matrix.columns[drop].name.clone(),
            partner: matrix.columns[keep].name.clone(),
            spearman_rho: rho,
            mi_dropped: mi_drop,
            mi_kept: mi_keep,
        });
    }
    let keep: Vec<usize> = (0..p).filter(|&j| alive[j]).collect();
    Ok((matrix.select_columns(&keep), report))
}

/// One SVD-reduced block of the model matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSpec {
    pub name: String,
    pub source_prefix: String,
    pub output_prefix: String,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducerConfig {
    pub blocks: Vec<BlockSpec>,
    pub prune_threshold: f64,
}

impl Default for ReducerConfig {
    fn default() -> Self {
        ReducerConfig::with_components(14, 5)
    }
}

impl ReducerConfig {
    pub fn with_components(genome_k: usize, genre_k: usize) -> Self {
        ReducerConfig {
            blocks: vec![
                BlockSpec {
                    name: "genome".into(),
                    source_prefix: GENOME_RAW_PREFIX.into(),
                    output_prefix: "genome_".into(),
                    k: genome_k,
                },
                BlockSpec {
                    name: "genre".into(),
                    source_prefix: GENRE_PREFIX.into(),
                    output_prefix: "genre_svd_".into(),
                    k: genre_k,
                },
            ],
            prune_threshold: PRUNE_THRESHOLD,
        }
    }
}

/// A fitted block: which input columns feed it and its SVD.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedBlock {
    pub spec: BlockSpec,
    pub source_columns: Vec<String>,
    pub svd: SvdModel,
}

/// Train-fitted reduction: SVD blocks first, then correlation pruning.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducerPipeline {
    pub config: ReducerConfig,
    pub blocks: Vec<FittedBlock>,
    pub prune: PruneReport,
    pub input_columns: Vec<String>,
    pub output_columns: Vec<ColumnMeta>,
    pub fitted: bool,
}

impl ReducerPipeline {
    pub fn new(config: ReducerConfig) -> Self {
        ReducerPipeline {
            config,
            blocks: vec![],
            prune: PruneReport::default(),
            input_columns: vec![],
            output_columns: vec![],
            fitted: false,
        }
    }

    /// Fits on training rows and returns the reduced training matrix.
    /// Non-model columns of `train` are ignored.
    pub fn fit_transform(&mut self, train: &FeatureMatrix, labels: &[u8]) -> Result<FeatureMatrix> {
        let model = train.model_view();
        let mut blocks = Vec::new();
        for spec in &self.config.blocks {
            let source: Vec<usize> = (0..model.n_cols())
                .filter(|&j| model.columns[j].name.starts_with(&spec.source_prefix))
                .collect();
            if source.is_empty() || spec.k == 0 {
                continue;
            }
            let k = spec.k.min(source.len()).min(model.n_rows());
            let svd = fit_svd(&model.values.select_columns(&source), k, &spec.name)?;
            blocks.push(FittedBlock {
                spec: spec.clone(),
                source_columns: source
                    .iter()
                    .map(|&j| model.columns[j].name.clone())
                    .collect(),
                svd,
            });
        }
        self.blocks = blocks;
        self.input_columns = model.column_names();
        let projected = self.project(&model)?;
        let (pruned, report) = prune_correlated(&projected, labels, self.config.prune_threshold)?;
        self.prune = report;
        self.output_columns = pruned.columns.clone();
        self.fitted = true;
        Ok(pruned)
    }

    pub fn transform(&self, matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
        if !self.fitted {
            return Err(Error::NotFitted);
        }
        let model = matrix.model_view();
        if model.column_names() != self.input_columns {
            return Err(Error::DimensionMismatch(
                "matrix columns differ from those seen at fit time".into(),
            ));
        }
        let projected = self.project(&model)?;
        let keep: Vec<usize> = self
            .output_columns
            .iter()
            .map(|c| {
                projected
                    .column_index(&c.name)
                    .expect("output column produced by projection")
            })
            .collect();
        Ok(projected.select_columns(&keep))
    }

    pub fn output_names(&self) -> Vec<String> {
        self.output_columns.iter().map(|c| c.name.clone()).collect()
    }

    /// Replaces each block's source columns with its components, placed where
    /// the block's first source column was.
    fn project(&self, model: &FeatureMatrix) -> Result<FeatureMatrix> {
        let mut owner: HashMap<&str, usize> = HashMap::new();
        for (b, block) in self.blocks.iter().enumerate() {
            for name in &block.source_columns {
                owner.insert(name.as_str(), b);
            }
        }
        let mut emitted = vec![false; self.blocks.len()];
        let mut cols: Vec<(ColumnMeta, Vec<f64>)> = Vec::new();
        for j in 0..model.n_cols() {
            let meta = &model.columns[j];
            match owner.get(meta.name.as_str()) {
                None => cols.push((meta.clone(), model.column(j))),
                Some(&b) if !emitted[b] => {
                    emitted[b] = true;
                    let block = &self.blocks[b];
                    let idx: Vec<usize> = block
                        .source_columns
                        .iter()
                        .map(|n| {
                            model.column_index(n).ok_or_else(|| {
                                Error::DimensionMismatch(format!("missing block column `{n}`"))
                            })
                        })
                        .collect::<Result<_>>()?;
                    let reduced = block.svd.transform(&model.values.select_columns(&idx))?;
                    for c in 0..reduced.ncols() {
                        cols.push((
                            ColumnMeta::model(
                                format!("{}{c}", block.spec.output_prefix),
                                FeatureGroup::Content,
                            ),
                            reduced.column(c).iter().copied().collect(),
                        ));
                    }
                }
                Some(_) => {}
            }
        }
        FeatureMatrix::from_columns(model.row_ids.clone(), cols)
    }
}
