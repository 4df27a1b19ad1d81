//! `movie-roi` command-line front end.
//!
//! Exit codes: 0 success, 2 bad input or schema, 3 degenerate training
//! labels, 4 degenerate evaluation labels.

pub mod commands;
pub mod config;
pub mod error;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "movie-roi",
    version,
    about = "Classify movies as above or below median return on investment"
)]
pub struct Cli {
    /// Flat `key = value` config file; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Model bundle written by train/tune and read by evaluate/importance/predict.
    #[arg(long, global = true, value_name = "PATH")]
    pub bundle: Option<PathBuf>,
    /// Any config key, e.g. `--set n_repeats=5`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic movies.csv with planted signal.
    Synth {
        #[arg(long)]
        n: Option<usize>,
        /// Defaults to `<out-dir>/movies.csv`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Clean, split, featurize and reduce a movies CSV.
    Prepare {
        #[arg(long)]
        movies: Option<PathBuf>,
    },
    /// Fit the random forest with fixed hyperparameters.
    Train {
        #[arg(long)]
        n_estimators: Option<usize>,
        #[arg(long)]
        max_features: Option<usize>,
        #[arg(long)]
        max_depth: Option<usize>,
        #[arg(long)]
        min_samples_split: Option<f64>,
        #[arg(long)]
        min_samples_leaf: Option<usize>,
    },
    /// Randomized grid search with stratified cross-validation, then fit the best.
    Tune {
        #[arg(long)]
        n_iter: Option<usize>,
        #[arg(long)]
        folds: Option<usize>,
    },
    /// Test-set ROC/AUC against a random baseline.
    Evaluate,
    /// Permutation importance for features and feature groups.
    Importance {
        #[arg(long)]
        n_repeats: Option<usize>,
        /// Comma-separated group names; defaults to all.
        #[arg(long)]
        groups: Option<String>,
    },
    /// Score movies (revenue is ignored).
    Predict {
        #[arg(long)]
        rows: PathBuf,
        /// CSV output; stdout when absent.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Mean ROI with bootstrap intervals per category of selected features.
    Report {
        /// Comma-separated feature names.
        #[arg(long)]
        features: Option<String>,
    },
}

impl Cli {
    /// Defaults, then the config file, then `--set`, then explicit flags.
    pub fn run_config(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::input(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            cfg.set(k, v)?;
        }
        let mut flags: Vec<(&str, String)> = Vec::new();
        let mut flag = |k: &'static str, v: Option<String>| {
            if let Some(v) = v {
                flags.push((k, v));
            }
        };
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        flag("seed", self.seed.map(|s| s.to_string()));
        flag("out_dir", path(&self.out_dir));
        flag("bundle", path(&self.bundle));
        match &self.command {
            Command::Synth { n, .. } => flag("n", n.map(|v| v.to_string())),
            Command::Prepare { movies } => flag("movies", path(movies)),
            Command::Train {
                n_estimators,
                max_features,
                max_depth,
                min_samples_split,
                min_samples_leaf,
            } => {
                flag("n_estimators", n_estimators.map(|v| v.to_string()));
                flag("max_features", max_features.map(|v| v.to_string()));
                flag("max_depth", max_depth.map(|v| v.to_string()));
                flag(
                    "min_samples_split",
                    min_samples_split.map(|v| v.to_string()),
                );
                flag("min_samples_leaf", min_samples_leaf.map(|v| v.to_string()));
            }
            Command::Tune { n_iter, folds } => {
                flag("n_iter", n_iter.map(|v| v.to_string()));
                flag("folds", folds.map(|v| v.to_string()));
            }
            Command::Importance { n_repeats, groups } => {
                flag("n_repeats", n_repeats.map(|v| v.to_string()));
                flag("groups", groups.clone());
            }
            Command::Report { features } => flag("report_features", features.clone()),
            Command::Evaluate | Command::Predict { .. } => {}
        }
        for (k, v) in flags {
            cfg.set(k, &v)?;
        }
        Ok(cfg)
    }
}

/// Runs one command, printing its summary to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = cli.run_config()?;
    let io = |e: std::io::Error| CliError::input(format!("cannot write output: {e}"));
    match &cli.command {
        Command::Synth { output, .. } => {
            let (path, n) = commands::synth(&cfg, output.as_deref())?;
            writeln!(out, "wrote {n} movies to {}", path.display()).map_err(io)?;
        }
        Command::Prepare { .. } => {
            let s = commands::prepare_cmd(&cfg)?;
            writeln!(out, "train rows: {} (released before 2011)", s.train_rows).map_err(io)?;
            writeln!(out, "test rows: {}", s.test_rows).map_err(io)?;
            writeln!(out, "rows removed by cleaning: {}", s.dropped_rows).map_err(io)?;
            writeln!(out, "median training ROI: {:.4}", s.median_roi).map_err(io)?;
            writeln!(out, "model columns: {}", s.model_columns).map_err(io)?;
            let pruned = if s.pruned.is_empty() {
                "none".to_string()
            } else {
                s.pruned.join(", ")
            };
            writeln!(out, "pruned: {pruned}").map_err(io)?;
        }
        Command::Train { .. } => {
            let s = commands::train(&cfg)?;
            let c = &s.config;
            writeln!(
                out,
                "trained {} trees on {} rows x {} features (max_features {}, max_depth {}, min_samples_split {}, min_samples_leaf {})",
                c.n_estimators, s.train_rows, s.features, c.max_features, c.max_depth, c.min_samples_split, c.min_samples_leaf
            )
            .map_err(io)?;
            writeln!(out, "wrote {}", s.bundle.display()).map_err(io)?;
        }
        Command::Tune { .. } => {
            let s = commands::tune(&cfg)?;
            let b = &s.outcome.best;
            writeln!(
                out,
                "searched {} of {} configurations",
                s.outcome.results.len(),
                s.grid_size
            )
            .map_err(io)?;
            writeln!(
                out,
                "best (draw {}): n_estimators {}, max_features {}, max_depth {}, min_samples_split {}, min_samples_leaf {}, mean CV AUC {:.3}",
                b.draw_index,
                b.config.n_estimators,
                b.config.max_features,
                b.config.max_depth,
                b.config.min_samples_split,
                b.config.min_samples_leaf,
                b.mean_auc
            )
            .map_err(io)?;
            writeln!(
                out,
                "wrote {} and {}",
                s.results.display(),
                s.bundle.display()
            )
            .map_err(io)?;
        }
        Command::Evaluate => {
            let s = commands::evaluate(&cfg)?;
            writeln!(out, "test rows: {}", s.test_rows).map_err(io)?;
            writeln!(out, "AUC: {:.3}", s.auc).map_err(io)?;
            writeln!(out, "random baseline AUC: {:.3}", s.baseline_auc).map_err(io)?;
        }
        Command::Importance { .. } => {
            let s = commands::importance(&cfg)?;
            writeln!(out, "baseline AUC: {:.3}", s.features.baseline_auc).map_err(io)?;
            writeln!(out, "top features by importance value:").map_err(io)?;
            for f in s.features.ranked().iter().take(15) {
                writeln!(
                    out,
                    "  {:<32} {:.4} (sd {:.4})",
                    f.name, f.iv, f.repeat_stddev
                )
                .map_err(io)?;
            }
            writeln!(out, "feature groups:").map_err(io)?;
            for g in s.groups.ranked() {
                writeln!(out, "  {:<32} {:.4}", g.group.to_string(), g.iv).map_err(io)?;
            }
        }
        Command::Predict { rows, output } => {
            let preds = commands::predict(&cfg, rows, output.as_deref())?;
            if output.is_none() {
                commands::write_predictions(&mut *out, &preds).map_err(CliError::from_input)?;
            } else {
                writeln!(out, "scored {} rows", preds.len()).map_err(io)?;
            }
        }
        Command::Report { .. } => {
            for path in commands::report(&cfg)? {
                writeln!(out, "wrote {}", path.display()).map_err(io)?;
            }
        }
    }
    Ok(())
}
