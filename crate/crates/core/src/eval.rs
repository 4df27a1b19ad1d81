//! ROC/AUC, the random baseline, permutation importance and univariate ROI
//! summaries.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forest::Forest;
use crate::matrix::{FeatureGroup, FeatureMatrix};
use crate::rng;

/// Anything that maps a feature matrix to positive-class probabilities.
pub trait Scorer: Sync {
    fn score(&self, matrix: &FeatureMatrix) -> Result<Vec<f64>>;
}

impl Scorer for Forest {
    fn score(&self, matrix: &FeatureMatrix) -> Result<Vec<f64>> {
        self.predict_proba_matrix(matrix)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Scores `>= threshold` are called positive; the origin uses +inf.
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

impl RocCurve {
    pub fn area(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
            .sum()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["fpr", "tpr", "threshold"])?;
        for p in &self.points {
            w.write_record([
                p.fpr.to_string(),
                p.tpr.to_string(),
                p.threshold.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

fn class_counts(scores: &[f64], labels: &[u8]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Domain("scores contain NaN".into()));
    }
    let pos = labels.iter().filter(|&&l| l == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass(format!(
            "{pos} positives and {neg} negatives"
        )));
    }
    Ok((pos, neg))
}

/// One point per distinct score, highest first; tied scores move both rates
/// together.
pub fn roc_curve(scores: &[f64], labels: &[u8]) -> Result<RocCurve> {
    let (pos, neg) = class_counts(scores, labels)?;
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: f64::INFINITY,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < idx.len() {
        let s = scores[idx[i]];
        while i < idx.len() && scores[idx[i]] == s {
            if labels[idx[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
            threshold: s,
        });
    }
    Ok(RocCurve { points })
}

/// Trapezoidal area under [`roc_curve`].
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    Ok(roc_curve(scores, labels)?.area())
}

/// Independent uniform scores, one per label.
pub fn random_baseline(labels: &[u8], seed: u64) -> Vec<f64> {
    let mut rng = rng::salted(seed, rng::SALT_BASELINE, 0);
    labels.iter().map(|_| rng.random::<f64>()).collect()
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureImportance {
    pub name: String,
    pub group: FeatureGroup,
    /// Baseline AUC minus the mean permuted AUC.
    pub iv: f64,
    /// Mean AUC over the permuted repeats.
    pub repeat_mean: f64,
    /// Sample standard deviation of the permuted AUCs.
    pub repeat_stddev: f64,
    pub n_repeats: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceReport {
    pub baseline_auc: f64,
    pub features: Vec<FeatureImportance>,
}

impl ImportanceReport {
    /// Features by decreasing IV; ties keep column order.
    pub fn ranked(&self) -> Vec<&FeatureImportance> {
        let mut v: Vec<_> = self.features.iter().collect();
        v.sort_by(|a, b| b.iv.total_cmp(&a.iv));
        v
    }

    pub fn get(&self, name: &str) -> Option<&FeatureImportance> {
        self.features.iter().find(|f| f.name == name)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["feature", "iv", "stddev", "n_repeats"])?;
        for f in self.ranked() {
            w.write_record([
                f.name.clone(),
                f.iv.to_string(),
                f.repeat_stddev.to_string(),
                f.n_repeats.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupImportance {
    pub group: FeatureGroup,
    pub iv: f64,
    pub repeat_stddev: f64,
    pub n_repeats: usize,
    pub n_features: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupImportanceReport {
    pub baseline_auc: f64,
    pub groups: Vec<GroupImportance>,
}

impl GroupImportanceReport {
    pub fn get(&self, group: FeatureGroup) -> Option<&GroupImportance> {
        self.groups.iter().find(|g| g.group == group)
    }

    pub fn ranked(&self) -> Vec<&GroupImportance> {
        let mut v: Vec<_> = self.groups.iter().collect();
        v.sort_by(|a, b| b.iv.total_cmp(&a.iv));
        v
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["group", "iv", "stddev", "n_repeats", "n_features"])?;
        for g in self.ranked() {
            w.write_record([
                g.group.to_string(),
                g.iv.to_string(),
                g.repeat_stddev.to_string(),
                g.n_repeats.to_string(),
                g.n_features.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

/// AUCs after permuting `columns` jointly, one shared row permutation per
/// repeat. The permutation stream is keyed by the first column index, so a
/// single-column group reproduces that column's individual permutations.
fn permuted_aucs(
    model: &dyn Scorer,
    matrix: &FeatureMatrix,
    labels: &[u8],
    columns: &[usize],
    n_repeats: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let key = columns.iter().copied().min().unwrap_or(0) as u64;
    let mut rng = rng::salted(seed, rng::SALT_PERMUTE, key);
    let n = matrix.n_rows();
    let mut work = matrix.clone();
    let mut out = Vec::with_capacity(n_repeats);
    for _ in 0..n_repeats {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        for &j in columns {
            for (i, &src) in perm.iter().enumerate() {
                work.values[(i, j)] = matrix.values[(src, j)];
            }
        }
        out.push(auc(&model.score(&work)?, labels)?);
    }
    Ok(out)
}

/// Per-feature AUC decrease when that column is shuffled across rows.
pub fn permutation_importance(
    model: &dyn Scorer,
    matrix: &FeatureMatrix,
    labels: &[u8],
    n_repeats: usize,
    seed: u64,
) -> Result<ImportanceReport> {
    if n_repeats == 0 {
        return Err(Error::InvalidConfig("n_repeats must be at least 1".into()));
    }
    let baseline_auc = auc(&model.score(matrix)?, labels)?;
    let features = (0..matrix.n_cols())
        .into_par_iter()
        .map(|j| {
            let aucs = permuted_aucs(model, matrix, labels, &[j], n_repeats, seed)?;
            let (mean, std) = mean_std(&aucs);
            Ok(FeatureImportance {
                name: matrix.columns[j].name.clone(),
                group: matrix.columns[j].group,
                iv: baseline_auc - mean,
                repeat_mean: mean,
                repeat_stddev: std,
                n_repeats,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ImportanceReport {
        baseline_auc,
        features,
    })
}

/// AUC decrease when all of a group's columns are shuffled with one shared
/// row permutation. Groups without columns in `matrix` are left out.
pub fn group_importance(
    model: &dyn Scorer,
    matrix: &FeatureMatrix,
    labels: &[u8],
    groups: &[FeatureGroup],
    n_repeats: usize,
    seed: u64,
) -> Result<GroupImportanceReport> {
    if n_repeats == 0 {
        return Err(Error::InvalidConfig("n_repeats must be at least 1".into()));
    }
    let baseline_auc = auc(&model.score(matrix)?, labels)?;
    let members: Vec<(FeatureGroup, Vec<usize>)> = groups
        .iter()
        .map(|&g| {
            let cols = (0..matrix.n_cols())
                .filter(|&j| matrix.columns[j].group == g)
                .collect();
            (g, cols)
        })
        .filter(|(_, cols): &(FeatureGroup, Vec<usize>)| !cols.is_empty())
        .collect();
    let groups = members
        .par_iter()
        .map(|(g, cols)| {
            let aucs = permuted_aucs(model, matrix, labels, cols, n_repeats, seed)?;
            let (mean, std) = mean_std(&aucs);
            Ok(GroupImportance {
                group: *g,
                iv: baseline_auc - mean,
                repeat_stddev: std,
                n_repeats,
                n_features: cols.len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GroupImportanceReport {
        baseline_auc,
        groups,
    })
}

/// Parses group names, failing on the first unknown one.
pub fn parse_groups(names: &[&str]) -> Result<Vec<FeatureGroup>> {
    names.iter().map(|n| n.parse()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategorySummary {
    pub category: String,
    pub count: usize,
    pub mean_roi: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

pub const BOOTSTRAP_LEVEL: f64 = 0.95;

/// Linear-interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Mean ROI per category with a percentile bootstrap 95% interval.
///
/// Categories are reported in `levels` order when given (a level with no rows
/// is an error), otherwise in sorted order of the observed categories.
pub fn univariate_summary(
    categories: &[String],
    rois: &[f64],
    levels: Option<&[String]>,
    n_boot: usize,
    seed: u64,
) -> Result<Vec<CategorySummary>> {
    if categories.len() != rois.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} categories for {} ROI values",
            categories.len(),
            rois.len()
        )));
    }
    if n_boot == 0 {
        return Err(Error::InvalidConfig("n_boot must be at least 1".into()));
    }
    let mut by_cat: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (c, &r) in categories.iter().zip(rois) {
        by_cat.entry(c.as_str()).or_default().push(r);
    }
    let order: Vec<String> = match levels {
        Some(l) => l.to_vec(),
        None => by_cat.keys().map(|k| k.to_string()).collect(),
    };
    let alpha = (1.0 - BOOTSTRAP_LEVEL) / 2.0;
    order
        .iter()
        .enumerate()
        .map(|(k, cat)| {
            let values = by_cat
                .get(cat.as_str())
                .filter(|v| !v.is_empty())
                .ok_or_else(|| Error::EmptyCategory(cat.clone()))?;
            let n = values.len();
            let mean = values.iter().sum::<f64>() / n as f64;
            let mut rng = rng::salted(seed, rng::SALT_BOOTSTRAP, k as u64);
            let mut means: Vec<f64> = (0..n_boot)
                .map(|_| (0..n).map(|_| values[rng.random_range(0..n)]).sum::<f64>() / n as f64)
                .collect();
            means.sort_by(f64::total_cmp);
            Ok(CategorySummary {
                category: cat.clone(),
                count: n,
                mean_roi: mean,
                ci_low: quantile(&means, alpha),
                ci_high: quantile(&means, 1.0 - alpha),
            })
        })
        .collect()
}

pub fn write_summary_csv<W: Write>(rows: &[CategorySummary], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["category", "count", "mean_roi", "ci_low", "ci_high"])?;
    for r in rows {
        w.write_record([
            r.category.clone(),
            r.count.to_string(),
            r.mean_roi.to_string(),
            r.ci_low.to_string(),
            r.ci_high.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

/// Quartile labels `Q1..Q4` (upper bounds inclusive).
pub fn quartile_bins(values: &[f64]) -> Vec<String> {
    if values.is_empty() {
        return vec![];
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let cuts = [
        quantile(&sorted, 0.25),
        quantile(&sorted, 0.5),
        quantile(&sorted, 0.75),
    ];
    values
        .iter()
        .map(|v| format!("Q{}", 1 + cuts.iter().filter(|&&c| *v > c).count()))
        .collect()
}

/// Static SVG of one or more ROC curves.
pub fn roc_svg(curves: &[(&str, &RocCurve)]) -> String {
    const SIZE: f64 = 400.0;
    const PAD: f64 = 40.0;
    const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
    let map = |x: f64, y: f64| (PAD + x * SIZE, PAD + (1.0 - y) * SIZE);
    let mut svg = String::new();
    let total = SIZE + 2.0 * PAD;
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total}" height="{total}" viewBox="0 0 {total} {total}">"#
    );
    let _ = writeln!(
        svg,
        r##"<rect x="{PAD}" y="{PAD}" width="{SIZE}" height="{SIZE}" fill="none" stroke="#444"/>"##
    );
    let (x0, y0) = map(0.0, 0.0);
    let (x1, y1) = map(1.0, 1.0);
    let _ = writeln!(
        svg,
        r##"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y1}" stroke="#aaa" stroke-dasharray="4 4"/>"##
    );
    for (k, (label, curve)) in curves.iter().enumerate() {
        let pts: Vec<String> = curve
            .points
            .iter()
            .map(|p| {
                let (x, y) = map(p.fpr, p.tpr);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let color = COLORS[k % COLORS.len()];
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            pts.join(" ")
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="12" fill="{color}">{label} (AUC {:.3})</text>"#,
            PAD + 0.55 * SIZE,
            PAD + SIZE - 10.0 - 16.0 * k as f64,
            curve.area()
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="12">false positive rate</text>"#,
        PAD + SIZE / 2.0 - 50.0,
        total - 10.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="12" y="{}" font-size="12" transform="rotate(-90 12 {})">true positive rate</text>"#,
        PAD + SIZE / 2.0 + 50.0,
        PAD + SIZE / 2.0 + 50.0
    );
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::{Node, RfConfig, Tree};
    use crate::matrix::ColumnMeta;
    use proptest::prelude::*;

    /// O(n^2) concordant-pair counter, ties count half.
    fn pair_auc(scores: &[f64], labels: &[u8]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, &si) in scores.iter().enumerate() {
            for (j, &sj) in scores.iter().enumerate() {
                if labels[i] == 1 && labels[j] == 0 {
                    den += 1.0;
                    if si > sj {
                        num += 1.0;
                    } else if si == sj {
                        num += 0.5;
                    }
                }
            }
        }
        num / den
    }

    #[test]
    fn perfect_and_inverted() {
        let labels = [0, 0, 1, 1, 0, 1];
        let scores: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
        assert_eq!(auc(&scores, &labels).unwrap(), 1.0);
        let curve = roc_curve(&scores, &labels).unwrap();
        assert!(curve.points.iter().any(|p| p.fpr == 0.0 && p.tpr == 1.0));
        let inv: Vec<f64> = scores.iter().map(|s| -s).collect();
        assert_eq!(auc(&inv, &labels).unwrap(), 0.0);
    }

    #[test]
    fn all_tied_is_diagonal() {
        let curve = roc_curve(&[0.3; 5], &[0, 1, 0, 1, 1]).unwrap();
        assert_eq!(curve.points.len(), 2);
        assert_eq!((curve.points[1].fpr, curve.points[1].tpr), (1.0, 1.0));
        assert_eq!(curve.area(), 0.5);
    }

    #[test]
    fn six_point_fixture_matches_hand_enumeration() {
        // descending: 0.9(1) 0.8(0) 0.7(1) 0.7(0) 0.4(1) 0.1(0); 3 pos, 3 neg
        let scores = [0.1, 0.7, 0.9, 0.4, 0.8, 0.7];
        let labels = [0, 1, 1, 1, 0, 0];
        let curve = roc_curve(&scores, &labels).unwrap();
        let got: Vec<(f64, f64, f64)> = curve
            .points
            .iter()
            .map(|p| (p.fpr, p.tpr, p.threshold))
            .collect();
        let third = 1.0 / 3.0;
        let expected = vec![
            (0.0, 0.0, f64::INFINITY),
            (0.0, third, 0.9),
            (third, third, 0.8),
            (2.0 * third, 2.0 * third, 0.7),
            (2.0 * third, 1.0, 0.4),
            (1.0, 1.0, 0.1),
        ];
        assert_eq!(got.len(), expected.len());
        for (g, e) in got.iter().zip(&expected) {
            assert!(
                (g.0 - e.0).abs() < 1e-15 && (g.1 - e.1).abs() < 1e-15 && g.2 == e.2,
                "{g:?} vs {e:?}"
            );
        }
        assert!((curve.area() - pair_auc(&scores, &labels)).abs() < 1e-12);
    }

    #[test]
    fn single_class_is_an_error() {
        assert!(matches!(
            auc(&[0.1, 0.2], &[1, 1]),
            Err(Error::SingleClass(_))
        ));
        assert!(roc_curve(&[0.1], &[0]).is_err());
    }

    #[test]
    fn random_baseline_is_near_half_and_seeded() {
        let labels: Vec<u8> = (0..1000).map(|i| (i % 2) as u8).collect();
        let a = random_baseline(&labels, 5);
        assert_eq!(a, random_baseline(&labels, 5));
        let v = auc(&a, &labels).unwrap();
        assert!((0.45..=0.55).contains(&v), "{v}");
    }

    #[test]
    fn random_baseline_monte_carlo_mean() {
        let labels: Vec<u8> = (0..1000).map(|i| (i % 2) as u8).collect();
        let mean = (0..200u64)
            .map(|s| auc(&random_baseline(&labels, s), &labels).unwrap())
            .sum::<f64>()
            / 200.0;
        assert!((0.49..=0.51).contains(&mean), "{mean}");
    }

    fn stump_forest(feature: usize, threshold: f64, names: Vec<String>) -> Forest {
        let tree = Tree::from_nodes(vec![
            Node::Split {
                feature,
                threshold,
                right: 2,
            },
            Node::Leaf {
                positive_fraction: 0.0,
                sample_count: 4,
            },
            Node::Leaf {
                positive_fraction: 1.0,
                sample_count: 4,
            },
        ])
        .unwrap();
        Forest::from_parts(vec![tree], RfConfig::default(), names).unwrap()
    }

    fn eight_rows() -> (FeatureMatrix, Vec<u8>) {
        let labels = vec![0, 0, 0, 0, 1, 1, 1, 1];
        let f: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
        let noise = vec![3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0];
        let constant = vec![7.0; 8];
        let m = FeatureMatrix::from_columns(
            (0..8).map(|i| format!("r{i}")).collect(),
            vec![
                (ColumnMeta::model("noise", FeatureGroup::Publicity), noise),
                (ColumnMeta::model("signal", FeatureGroup::Content), f),
                (
                    ColumnMeta::model("constant", FeatureGroup::SupportStaff),
                    constant,
                ),
            ],
        )
        .unwrap();
        (m, labels)
    }

    #[test]
    fn stump_importance() {
        let (m, y) = eight_rows();
        let forest = stump_forest(1, 0.5, m.column_names());
        let report = permutation_importance(&forest, &m, &y, 10, 3).unwrap();
        assert_eq!(report.baseline_auc, 1.0);
        assert_eq!(report.get("constant").unwrap().iv, 0.0);
        assert_eq!(report.get("noise").unwrap().iv, 0.0);
        // analytic: a shuffled separable stump column scores E[AUC] = 0.5 with
        // a spread well below 0.2 over ten repeats
        assert!(
            report.get("signal").unwrap().iv >= 0.3,
            "{:?}",
            report.get("signal")
        );
        assert_eq!(report.ranked()[0].name, "signal");
    }

    /// Enumerates all 8! permutations of the signal column under the stump:
    /// the permuted AUC depends only on how many positives keep value 1.
    #[test]
    fn stump_expected_decrease_by_enumeration() {
        let (m, y) = eight_rows();
        let signal = m.column(1);
        let forest = stump_forest(1, 0.5, m.column_names());
        let mut total = 0.0;
        let mut count = 0usize;
        let mut perm: Vec<usize> = (0..8).collect();
        permute_all(&mut perm, 0, &mut |p| {
            let scores: Vec<f64> = p.iter().map(|&src| signal[src]).collect();
            total += auc(&scores, &y).unwrap();
            count += 1;
        });
        assert_eq!(count, 40320);
        let expected_iv = 1.0 - total / count as f64;
        assert!((expected_iv - 0.5).abs() < 1e-12);
        let report = permutation_importance(&forest, &m, &y, 200, 1).unwrap();
        assert!((report.get("signal").unwrap().iv - expected_iv).abs() < 0.05);
    }

    fn permute_all(v: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
        if k == v.len() {
            return f(v);
        }
        for i in k..v.len() {
            v.swap(k, i);
            permute_all(v, k + 1, f);
            v.swap(k, i);
        }
    }

    #[test]
    fn single_feature_group_equals_individual() {
        let (m, y) = eight_rows();
        let forest = stump_forest(1, 0.5, m.column_names());
        let ind = permutation_importance(&forest, &m, &y, 10, 42).unwrap();
        let grp = group_importance(&forest, &m, &y, &FeatureGroup::ALL, 10, 42).unwrap();
        assert_eq!(
            grp.get(FeatureGroup::Content).unwrap().iv,
            ind.get("signal").unwrap().iv
        );
        assert_eq!(grp.baseline_auc, ind.baseline_auc);
        // groups with no columns are absent
        assert!(grp.get(FeatureGroup::Writers).is_none());
        assert_eq!(grp.groups.len(), 3);
        assert!(matches!(
            parse_groups(&["content", "marketing"]),
            Err(Error::UnknownGroup(_))
        ));
    }

    #[test]
    fn importance_is_deterministic() {
        let (m, y) = eight_rows();
        let forest = stump_forest(1, 0.5, m.column_names());
        let a = permutation_importance(&forest, &m, &y, 5, 8).unwrap();
        let b = permutation_importance(&forest, &m, &y, 5, 8).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn constant_category_has_degenerate_interval() {
        let cats = vec!["a".to_string(); 5];
        let rows = univariate_summary(&cats, &[2.5; 5], None, 1000, 1).unwrap();
        assert_eq!(rows[0].mean_roi, 2.5);
        assert_eq!((rows[0].ci_low, rows[0].ci_high), (2.5, 2.5));
    }

    #[test]
    fn planted_gap_between_categories() {
        let mut cats = Vec::new();
        let mut rois = Vec::new();
        for i in 0..200 {
            let in_collection = i % 4 == 0;
            cats.push(if in_collection { "1" } else { "0" }.to_string());
            rois.push(if in_collection { 3.0 } else { 0.5 } + (i % 7) as f64 * 0.1);
        }
        let rows = univariate_summary(&cats, &rois, None, 500, 3).unwrap();
        assert_eq!(rows[1].category, "1");
        assert!(rows[1].mean_roi > rows[0].mean_roi);
        assert!(rows[1].ci_low > rows[0].ci_high);
        assert_eq!(
            rows,
            univariate_summary(&cats, &rois, None, 500, 3).unwrap()
        );
        assert!(rows
            .iter()
            .all(|r| r.ci_low <= r.mean_roi && r.mean_roi <= r.ci_high));
    }

    #[test]
    fn empty_level_is_an_error() {
        let cats = vec!["a".to_string()];
        let levels = vec!["a".to_string(), "b".to_string()];
        assert!(matches!(
            univariate_summary(&cats, &[1.0], Some(&levels), 10, 0),
            Err(Error::EmptyCategory(_))
        ));
    }

    #[test]
    fn quartiles() {
        let v: Vec<f64> = (1..=8).map(f64::from).collect();
        let q = quartile_bins(&v);
        assert_eq!(q, vec!["Q1", "Q1", "Q2", "Q2", "Q3", "Q3", "Q4", "Q4"]);
    }

    #[test]
    fn svg_mentions_auc() {
        let c = roc_curve(&[0.1, 0.9], &[0, 1]).unwrap();
        let svg = roc_svg(&[("forest", &c)]);
        assert!(svg.starts_with("<svg") && svg.contains("AUC 1.000"));
    }

    fn arb_scores() -> impl Strategy<Value = (Vec<f64>, Vec<u8>)> {
        prop::collection::vec((0u8..20, 0u8..2), 2..120)
            .prop_filter("both classes", |v| {
                v.iter().any(|p| p.1 == 0) && v.iter().any(|p| p.1 == 1)
            })
            .prop_map(|v| {
                (
                    v.iter().map(|p| f64::from(p.0) / 4.0).collect(),
                    v.iter().map(|p| p.1).collect(),
                )
            })
    }

    proptest! {
        #[test]
        fn trapezoid_equals_pair_count((scores, labels) in arb_scores()) {
            prop_assert!((auc(&scores, &labels).unwrap() - pair_auc(&scores, &labels)).abs() <= 1e-9);
        }

        #[test]
        fn curve_is_monotone_with_unit_steps((scores, labels) in arb_scores()) {
            let c = roc_curve(&scores, &labels).unwrap();
            let first = c.points[0];
            let last = *c.points.last().unwrap();
            prop_assert_eq!((first.fpr, first.tpr), (0.0, 0.0));
            prop_assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
            let mut dt = 0.0;
            let mut df = 0.0;
            for w in c.points.windows(2) {
                prop_assert!(w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr);
                dt += w[1].tpr - w[0].tpr;
                df += w[1].fpr - w[0].fpr;
            }
            prop_assert!((dt - 1.0).abs() < 1e-12 && (df - 1.0).abs() < 1e-12);
        }

        #[test]
        fn negated_scores_complement(labels in prop::collection::vec(0u8..2, 2..80), seed in 0u64..1000) {
            prop_assume!(labels.contains(&0) && labels.contains(&1));
            let s = random_baseline(&labels, seed);
            let neg: Vec<f64> = s.iter().map(|v| -v).collect();
            prop_assert!((auc(&s, &labels).unwrap() + auc(&neg, &labels).unwrap() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn increasing_transform_keeps_auc((scores, labels) in arb_scores()) {
            let t: Vec<f64> = scores.iter().map(|v| (v * 3.0).exp() + 1.0).collect();
            prop_assert_eq!(auc(&scores, &labels).unwrap(), auc(&t, &labels).unwrap());
        }
    }
}
