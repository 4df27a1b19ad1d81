//! Movie return-on-investment classification pipeline.
//!
//! Movies are ingested from CSV, cleaned, split at 2011, labeled at the
//! training-median ROI and featurized into eleven feature groups. Genome and
//! genre blocks are reduced with truncated SVD, correlated features are pruned,
//! and a from-scratch random forest is tuned by randomized search with
//! stratified cross-validation. Evaluation reports ROC/AUC and permutation
//! importance for single features and whole groups.

pub mod bundle;
pub mod data;
pub mod error;
pub mod eval;
pub mod features;
pub mod forest;
pub mod matrix;
pub mod pipeline;
pub mod reduce;
pub mod rng;
pub mod select;
pub mod synth;

pub use bundle::ModelBundle;
pub use data::{Dataset, LabeledSplit, MovieRecord, RawDataset, RawMovieRecord};
pub use error::{Error, Result};
pub use eval::{ImportanceReport, RocCurve, Scorer};
pub use features::{DiscountConfig, EmbeddingConfig, FeatureContext};
pub use forest::{Forest, RfConfig};
pub use matrix::{ColumnMeta, FeatureGroup, FeatureMatrix};
pub use pipeline::{FittedPipeline, PipelineConfig, Prepared};
pub use reduce::{ReducerConfig, ReducerPipeline};
pub use select::{CvResult, ParamGrid, SearchConfig};
pub use synth::SynthConfig;
