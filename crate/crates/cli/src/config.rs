//! Run configuration: defaults, then a `key = value` file, then flags.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use roi_core::features::DiscountConfig;
use roi_core::forest::RfConfig;
use roi_core::reduce::{ReducerConfig, PRUNE_THRESHOLD};
use roi_core::select::{build_grid, ParamGrid, SearchConfig};
use roi_core::synth::SynthConfig;
use roi_core::PipelineConfig;

use crate::error::CliError;

/// Every tunable of a run. Field names double as config-file keys.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub movies: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub bundle: Option<PathBuf>,
    pub seed: u64,

    pub n: usize,
    pub genome_dim: usize,

    pub base_year: i32,
    pub discount_rate: f64,
    pub max_history: usize,
    pub genome_k: usize,
    pub genre_k: usize,
    pub prune_threshold: f64,

    pub n_estimators: usize,
    pub max_features: usize,
    pub max_depth: usize,
    pub min_samples_split: f64,
    pub min_samples_leaf: usize,
    pub bootstrap: bool,

    pub n_iter: usize,
    pub folds: usize,
    pub grid_n_estimators: Option<Vec<usize>>,
    pub grid_max_features: Option<Vec<usize>>,
    pub grid_max_depth: Option<Vec<usize>>,
    pub grid_min_samples_split: Option<Vec<f64>>,
    pub grid_min_samples_leaf: Option<Vec<usize>>,

    pub n_repeats: usize,
    pub n_boot: usize,
    pub groups: Option<Vec<String>>,
    pub report_features: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let rf = RfConfig::default();
        let search = SearchConfig::default();
        let discount = DiscountConfig::default();
        RunConfig {
            movies: None,
            out_dir: PathBuf::from("out"),
            bundle: None,
            seed: 0,
            n: SynthConfig::default().n,
            genome_dim: SynthConfig::default().genome_dim,
            base_year: discount.base_year,
            discount_rate: discount.annual_rate,
            max_history: 5,
            genome_k: 14,
            genre_k: 5,
            prune_threshold: PRUNE_THRESHOLD,
            n_estimators: rf.n_estimators,
            max_features: rf.max_features,
            max_depth: rf.max_depth,
            min_samples_split: rf.min_samples_split,
            min_samples_leaf: rf.min_samples_leaf,
            bootstrap: rf.bootstrap,
            n_iter: search.n_iter,
            folds: search.folds,
            grid_n_estimators: None,
            grid_max_features: None,
            grid_max_depth: None,
            grid_min_samples_split: None,
            grid_min_samples_leaf: None,
            n_repeats: 10,
            n_boot: 1000,
            groups: None,
            report_features: [
                "is_collection",
                "is_english",
                "is_homepage",
                "movies_per_month",
                "time_discounted_budget",
                "keywords_count",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| CliError::input(format!("config `{key}`: cannot parse `{value}`: {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value.trim() {
        "1" | "true" | "yes" => Ok(true),
        "0" | "false" | "no" => Ok(false),
        other => Err(CliError::input(format!(
            "config `{key}`: `{other}` is not a boolean"
        ))),
    }
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, CliError>
where
    T::Err: Display,
{
    let items: Vec<T> = value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse(key, s))
        .collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err(CliError::input(format!("config `{key}`: empty list")));
    }
    Ok(items)
}

fn names(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let key = key.trim().replace('-', "_");
        let k = key.as_str();
        match k {
            "movies" => self.movies = Some(PathBuf::from(value.trim())),
            "out_dir" => self.out_dir = PathBuf::from(value.trim()),
            "bundle" => self.bundle = Some(PathBuf::from(value.trim())),
            "seed" => self.seed = parse(k, value)?,
            "n" => self.n = parse(k, value)?,
            "genome_dim" => self.genome_dim = parse(k, value)?,
            "base_year" => self.base_year = parse(k, value)?,
            "discount_rate" => self.discount_rate = parse(k, value)?,
            "max_history" => self.max_history = parse(k, value)?,
            "genome_k" => self.genome_k = parse(k, value)?,
            "genre_k" => self.genre_k = parse(k, value)?,
            "prune_threshold" => self.prune_threshold = parse(k, value)?,
            "n_estimators" => self.n_estimators = parse(k, value)?,
            "max_features" => self.max_features = parse(k, value)?,
            "max_depth" => self.max_depth = parse(k, value)?,
            "min_samples_split" => self.min_samples_split = parse(k, value)?,
            "min_samples_leaf" => self.min_samples_leaf = parse(k, value)?,
            "bootstrap" => self.bootstrap = parse_bool(k, value)?,
            "n_iter" => self.n_iter = parse(k, value)?,
            "folds" => self.folds = parse(k, value)?,
            "grid_n_estimators" => self.grid_n_estimators = Some(parse_list(k, value)?),
            "grid_max_features" => self.grid_max_features = Some(parse_list(k, value)?),
            "grid_max_depth" => self.grid_max_depth = Some(parse_list(k, value)?),
            "grid_min_samples_split" => self.grid_min_samples_split = Some(parse_list(k, value)?),
            "grid_min_samples_leaf" => self.grid_min_samples_leaf = Some(parse_list(k, value)?),
            "n_repeats" => self.n_repeats = parse(k, value)?,
            "n_boot" => self.n_boot = parse(k, value)?,
            "groups" => self.groups = Some(names(value)),
            "report_features" => self.report_features = names(value),
            _ => return Err(CliError::input(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::input(format!("config line {}: expected key = value", i + 1))
            })?;
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("cannot read config {}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    /// Where train/tune write the model and evaluate/predict read it.
    pub fn model_path(&self) -> PathBuf {
        self.bundle
            .clone()
            .unwrap_or_else(|| self.out("model.roibundle"))
    }

    pub fn synth_config(&self) -> SynthConfig {
        SynthConfig {
            n: self.n,
            seed: self.seed,
            genome_dim: self.genome_dim,
            ..SynthConfig::default()
        }
    }

    pub fn pipeline_config(&self) -> PipelineConfig {
        let mut reducer = ReducerConfig::with_components(self.genome_k, self.genre_k);
        reducer.prune_threshold = self.prune_threshold;
        PipelineConfig {
            discount: DiscountConfig {
                base_year: self.base_year,
                annual_rate: self.discount_rate,
            },
            max_history: self.max_history,
            reducer,
        }
    }

    pub fn rf_config(&self) -> RfConfig {
        RfConfig {
            n_estimators: self.n_estimators,
            max_features: self.max_features,
            max_depth: self.max_depth,
            min_samples_split: self.min_samples_split,
            min_samples_leaf: self.min_samples_leaf,
            bootstrap: self.bootstrap,
            seed: self.seed,
        }
    }

    pub fn search_config(&self) -> SearchConfig {
        SearchConfig {
            n_iter: self.n_iter,
            folds: self.folds,
            seed: self.seed,
        }
    }

    /// The standard grid for `p` features with any per-field overrides.
    pub fn grid(&self, p: usize) -> Result<ParamGrid, CliError> {
        let mut g = build_grid(p).map_err(CliError::from_input)?;
        if let Some(v) = &self.grid_n_estimators {
            g.n_estimators = v.clone();
        }
        if let Some(v) = &self.grid_max_features {
            g.max_features = v.clone();
        }
        if let Some(v) = &self.grid_max_depth {
            g.max_depth = v.clone();
        }
        if let Some(v) = &self.grid_min_samples_split {
            g.min_samples_split = v.clone();
        }
        if let Some(v) = &self.grid_min_samples_leaf {
            g.min_samples_leaf = v.clone();
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_reference_setup() {
        let c = RunConfig::default();
        assert_eq!((c.n_iter, c.folds, c.n_repeats), (100, 4, 10));
        assert_eq!(c.rf_config(), RfConfig::default());
        assert_eq!(c.pipeline_config(), PipelineConfig::default());
    }

    #[test]
    fn file_lines_and_overrides() {
        let mut c = RunConfig::default();
        c.apply_text("# comment\nseed = 7\nn-estimators=50 # inline\n\ngrid_max_depth = 5, 10\nbootstrap=false\n")
            .unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.n_estimators, 50);
        assert_eq!(c.grid_max_depth, Some(vec![5, 10]));
        assert!(!c.bootstrap);
        c.set("seed", "9").unwrap();
        assert_eq!(c.rf_config().seed, 9);
        assert_eq!(c.grid(4).unwrap().max_depth, vec![5, 10]);
    }

    #[test]
    fn bad_input_is_reported() {
        let mut c = RunConfig::default();
        assert_eq!(c.set("colour", "red").unwrap_err().code, 2);
        assert_eq!(c.set("seed", "x").unwrap_err().code, 2);
        assert_eq!(c.apply_text("seed").unwrap_err().code, 2);
        assert_eq!(c.set("grid_max_depth", ",").unwrap_err().code, 2);
    }
}
