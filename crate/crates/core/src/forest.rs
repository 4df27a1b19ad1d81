//! Binary random forest: bootstrap samples, random feature subsets per
//! node, Gini splits with exact tie handling, probability averaging.

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct RfConfig {
    pub n_estimators: usize,
    pub max_features: usize,
    pub max_depth: usize,
    /// Fraction of the training rows a node must hold to be split.
    pub min_samples_split: f64,
    pub min_samples_leaf: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for RfConfig {
    /// The tuned optimum reported for the movie corpus.
    fn default() -> Self {
        RfConfig {
            n_estimators: 500,
            max_features: 14,
            max_depth: 40,
            min_samples_split: 0.05,
            min_samples_leaf: 5,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl RfConfig {
    pub fn validate(&self, n_features: usize) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidConfig(m));
        if self.n_estimators == 0 {
            return fail("n_estimators must be at least 1".into());
        }
        if self.max_features == 0 || self.max_features > n_features {
            return fail(format!(
                "max_features = {} must lie in 1..={n_features}",
                self.max_features
            ));
        }
        if self.max_depth == 0 {
            return fail("max_depth must be at least 1".into());
        }
        if !(self.min_samples_split > 0.0 && self.min_samples_split <= 1.0) {
            return fail(format!(
                "min_samples_split = {} must lie in (0, 1]",
                self.min_samples_split
            ));
        }
        if self.min_samples_leaf == 0 {
            return fail("min_samples_leaf must be at least 1".into());
        }
        Ok(())
    }

    /// Smallest node size that may be split, for `n` training rows.
    pub fn min_split_count(&self, n: usize) -> usize {
        ((self.min_samples_split * n as f64).ceil() as usize).max(2)
    }
}

pub fn gini(pos: usize, neg: usize) -> Result<f64> {
    let n = pos + neg;
    if n == 0 {
        return Err(Error::Domain("gini of an empty node".into()));
    }
    let p = pos as f64 / n as f64;
    Ok(1.0 - p * p - (1.0 - p) * (1.0 - p))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    /// Rows with `value <= threshold` go to the left child at `self + 1`.
    Split {
        feature: usize,
        threshold: f64,
        right: usize,
    },
    Leaf {
        positive_fraction: f64,
        sample_count: usize,
    },
}

/// Nodes in preorder.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Tree> {
        validate_preorder(&nodes)?;
        Ok(Tree { nodes })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    right,
                } => {
                    i = if row[feature] <= threshold {
                        i + 1
                    } else {
                        right
                    }
                }
                Node::Leaf {
                    positive_fraction, ..
                } => return positive_fraction,
            }
        }
    }

    /// Longest root-to-leaf path, in edges.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> (usize, usize) {
            // returns (depth below i, index after subtree)
            match nodes[i] {
                Node::Leaf { .. } => (0, i + 1),
                Node::Split { right, .. } => {
                    let (l, _) = walk(nodes, i + 1);
                    let (r, end) = walk(nodes, right);
                    (1 + l.max(r), end)
                }
            }
        }
        walk(&self.nodes, 0).0
    }

    pub fn leaves(&self) -> impl Iterator<Item = (f64, usize)> + '_ {
        self.nodes.iter().filter_map(|n| match *n {
            Node::Leaf {
                positive_fraction,
                sample_count,
            } => Some((positive_fraction, sample_count)),
            Node::Split { .. } => None,
        })
    }

    pub fn max_feature_index(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .max()
    }
}

fn validate_preorder(nodes: &[Node]) -> Result<()> {
    fn walk(nodes: &[Node], i: usize, depth: usize) -> Result<usize> {
        if depth > 10_000 {
            return Err(Error::Corrupt("tree too deep".into()));
        }
        match nodes.get(i) {
            None => Err(Error::Corrupt(format!("tree node {i} out of range"))),
            Some(Node::Leaf {
                positive_fraction, ..
            }) => {
                if !(0.0..=1.0).contains(positive_fraction) {
                    return Err(Error::Corrupt("leaf fraction outside [0, 1]".into()));
                }
                Ok(i + 1)
            }
            Some(Node::Split { right, .. }) => {
                let after_left = walk(nodes, i + 1, depth + 1)?;
                if *right != after_left {
                    return Err(Error::Corrupt(format!("node {i} is not in preorder")));
                }
                walk(nodes, *right, depth + 1)
            }
        }
    }
    if walk(nodes, 0, 0)? != nodes.len() {
        return Err(Error::Corrupt("trailing tree nodes".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    /// Parent Gini minus weighted child Gini.
    pub gain: f64,
}

/// Weighted child impurity up to the constant factor `2 / n`, as the exact
/// fraction `num / den` so equal candidates compare equal.
#[derive(Debug, Clone, Copy)]
struct Impurity {
    num: u128,
    den: u128,
}

impl Impurity {
    fn children(pl: usize, nl: usize, pr: usize, nr: usize) -> Impurity {
        let (pl, nl, pr, nr) = (pl as u128, nl as u128, pr as u128, nr as u128);
        // pl*ql/nl + pr*qr/nr
        Impurity {
            num: pl * (nl - pl) * nr + pr * (nr - pr) * nl,
            den: nl * nr,
        }
    }

    fn node(pos: usize, n: usize) -> Impurity {
        let (pos, n) = (pos as u128, n as u128);
        Impurity {
            num: pos * (n - pos),
            den: n,
        }
    }

    fn lt(self, other: Impurity) -> bool {
        self.num * other.den < other.num * self.den
    }
}

fn midpoint(a: f64, b: f64) -> f64 {
    let t = a + (b - a) / 2.0;
    if t >= b {
        a
    } else {
        t
    }
}

/// Best Gini split of `rows` (indices into `columns`, repeats allowed) over
/// the candidate features.
///
/// Thresholds are midpoints between consecutive distinct values; both
/// children must hold at least `min_samples_leaf` rows and the weighted child
/// impurity must be strictly below the parent's. Ties go to the lower feature
/// index, then the lower threshold.
pub fn best_split(
    columns: &[Vec<f64>],
    labels: &[u8],
    rows: &[usize],
    candidates: &[usize],
    min_samples_leaf: usize,
) -> Option<Split> {
    let n = rows.len();
    if n < 2 {
        return None;
    }
    let pos = rows.iter().filter(|&&r| labels[r] == 1).count();
    let parent = Impurity::node(pos, n);
    if parent.num == 0 {
        return None;
    }
    let mut features = candidates.to_vec();
    features.sort_unstable();
    features.dedup();

    let leaf = min_samples_leaf.max(1);
    let mut best: Option<(Impurity, usize, f64)> = None;
    let mut pairs: Vec<(f64, u8)> = Vec::with_capacity(n);
    for &f in &features {
        let col = &columns[f];
        pairs.clear();
        pairs.extend(rows.iter().map(|&r| (col[r], labels[r])));
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut left_pos = 0;
        for i in 0..n - 1 {
            left_pos += usize::from(pairs[i].1);
            if pairs[i].0 == pairs[i + 1].0 {
                continue;
            }
            let nl = i + 1;
            let nr = n - nl;
            if nl < leaf || nr < leaf {
                continue;
            }
            let score = Impurity::children(left_pos, nl, pos - left_pos, nr);
            if !score.lt(parent) {
                continue;
            }
            if best.is_none_or(|(b, _, _)| score.lt(b)) {
                best = Some((score, f, midpoint(pairs[i].0, pairs[i + 1].0)));
            }
        }
    }
    best.map(|(score, feature, threshold)| {
        let nf = n as f64;
        let child = 2.0 * score.num as f64 / score.den as f64 / nf;
        let parent = 2.0 * parent.num as f64 / parent.den as f64 / nf;
        Split {
            feature,
            threshold,
            gain: parent - child,
        }
    })
}

/// `n` draws with replacement from `0..n`.
pub fn bootstrap_indices(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

struct Grower<'a> {
    columns: &'a [Vec<f64>],
    labels: &'a [u8],
    config: &'a RfConfig,
    min_split: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

impl Grower<'_> {
    fn leaf(&mut self, rows: &[usize]) {
        let pos = rows.iter().filter(|&&r| self.labels[r] == 1).count();
        self.nodes.push(Node::Leaf {
            positive_fraction: pos as f64 / rows.len() as f64,
            sample_count: rows.len(),
        });
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) {
        if depth >= self.config.max_depth || rows.len() < self.min_split {
            return self.leaf(&rows);
        }
        let p = self.columns.len();
        let candidates = index::sample(&mut self.rng, p, self.config.max_features).into_vec();
        let Some(split) = best_split(
            self.columns,
            self.labels,
            &rows,
            &candidates,
            self.config.min_samples_leaf,
        ) else {
            return self.leaf(&rows);
        };
        let col = &self.columns[split.feature];
        let (left, right): (Vec<usize>, Vec<usize>) =
            rows.into_iter().partition(|&r| col[r] <= split.threshold);
        let at = self.nodes.len();
        self.nodes.push(Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            right: 0,
        });
        self.grow(left, depth + 1);
        let right_at = self.nodes.len();
        if let Node::Split { right: r, .. } = &mut self.nodes[at] {
            *r = right_at;
        }
        self.grow(right, depth + 1);
    }
}

/// Grows one tree on column-major data. `tree_index` selects the RNG stream.
pub fn grow_tree(columns: &[Vec<f64>], labels: &[u8], config: &RfConfig, tree_index: u64) -> Tree {
    let n = labels.len();
    let mut rng = rng::stream(config.seed, tree_index);
    let rows = if config.bootstrap {
        bootstrap_indices(n, &mut rng)
    } else {
        (0..n).collect()
    };
    let mut grower = Grower {
        columns,
        labels,
        config,
        min_split: config.min_split_count(n),
        rng,
        nodes: Vec::new(),
    };
    grower.grow(rows, 0);
    Tree {
        nodes: grower.nodes,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    trees: Vec<Tree>,
    config: RfConfig,
    feature_names: Vec<String>,
}

impl Forest {
    /// Fits on the matrix rows. Rows are first ordered by row id so the
    /// fitted forest does not depend on input row order.
    pub fn fit(matrix: &FeatureMatrix, labels: &[u8], config: &RfConfig) -> Result<Forest> {
        let n = matrix.n_rows();
        if labels.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {n} rows",
                labels.len()
            )));
        }
        if n < 2 {
            return Err(Error::SingleClass("need at least two training rows".into()));
        }
        if labels.iter().all(|&l| l == labels[0]) {
            return Err(Error::SingleClass(format!(
                "all training labels are {}",
                labels[0]
            )));
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::Domain("labels must be 0 or 1".into()));
        }
        config.validate(matrix.n_cols())?;

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| matrix.row_ids[a].cmp(&matrix.row_ids[b]));
        let columns: Vec<Vec<f64>> = (0..matrix.n_cols())
            .map(|j| order.iter().map(|&i| matrix.values[(i, j)]).collect())
            .collect();
        if columns.iter().flatten().any(|v| v.is_nan()) {
            return Err(Error::Domain(
                "training matrix contains missing values".into(),
            ));
        }
        let sorted_labels: Vec<u8> = order.iter().map(|&i| labels[i]).collect();

        let trees = (0..config.n_estimators)
            .into_par_iter()
            .map(|t| grow_tree(&columns, &sorted_labels, config, t as u64))
            .collect();
        Ok(Forest {
            trees,
            config: config.clone(),
            feature_names: matrix.column_names(),
        })
    }

    pub fn from_parts(
        trees: Vec<Tree>,
        config: RfConfig,
        feature_names: Vec<String>,
    ) -> Result<Forest> {
        if trees.is_empty() {
            return Err(Error::Corrupt("forest has no trees".into()));
        }
        if let Some(max) = trees.iter().filter_map(Tree::max_feature_index).max() {
            if max >= feature_names.len() {
                return Err(Error::Corrupt(format!(
                    "tree references feature {max} but only {} are named",
                    feature_names.len()
                )));
            }
        }
        Ok(Forest {
            trees,
            config,
            feature_names,
        })
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn config(&self) -> &RfConfig {
        &self.config
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn predict_proba(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.feature_names.len() {
            return Err(Error::DimensionMismatch(format!(
                "row has {} values, forest expects {}",
                row.len(),
                self.feature_names.len()
            )));
        }
        let sum: f64 = self.trees.iter().map(|t| t.predict(row)).sum();
        Ok((sum / self.trees.len() as f64).clamp(0.0, 1.0))
    }

    pub fn predict(&self, row: &[f64], threshold: f64) -> Result<u8> {
        Ok(u8::from(self.predict_proba(row)? > threshold))
    }

    /// Scores every row; the matrix columns must match the fitted names.
    pub fn predict_proba_matrix(&self, matrix: &FeatureMatrix) -> Result<Vec<f64>> {
        if matrix.column_names() != self.feature_names {
            return Err(Error::DimensionMismatch(
                "matrix columns differ from the forest's feature names".into(),
            ));
        }
        let rows = matrix.to_rows();
        rows.par_iter().map(|r| self.predict_proba(r)).collect()
    }
}
