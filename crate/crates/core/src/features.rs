//! Builds the eleven feature groups from cleaned movie records.
//!
//! Everything learned from data (genre vocabulary, entity histories, the
//! per-month budget ledger, imputation medians) lives in [`FeatureContext`],
//! which is fitted once and reused for test rows and one-shot predictions.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::NaiveDate;

use crate::data::{AudienceScores, Dataset, MovieRecord, RawMovieRecord, TEST_START_YEAR};
use crate::error::{Error, Result};
use crate::matrix::{ColumnMeta, FeatureGroup, FeatureMatrix};

pub const GENOME_RAW_PREFIX: &str = "genome_tag_";
pub const GENRE_PREFIX: &str = "genre_";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscountConfig {
    pub base_year: i32,
    pub annual_rate: f64,
}

impl Default for DiscountConfig {
    fn default() -> Self {
        DiscountConfig {
            base_year: TEST_START_YEAR,
            annual_rate: 0.05,
        }
    }
}

impl DiscountConfig {
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // rejects NaN too
    pub fn validate(&self) -> Result<()> {
        if !(self.annual_rate > -1.0) {
            return Err(Error::InvalidConfig(format!(
                "annual_rate must exceed -1, got {}",
                self.annual_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbeddingConfig {
    /// Most recent prior movies per entity that enter the mean.
    pub max_history: usize,
    /// Value used when no credited entity has any prior movie.
    pub fallback: f64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            max_history: 5,
            fallback: 0.0,
        }
    }
}

impl EmbeddingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_history == 0 {
            return Err(Error::InvalidConfig(
                "max_history must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Credited roles that get a history embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EntityRole {
    ProductionHouse,
    Writer,
    Director,
    Producer,
    MainCast,
}

impl EntityRole {
    pub const ALL: [EntityRole; 5] = [
        EntityRole::ProductionHouse,
        EntityRole::Writer,
        EntityRole::Director,
        EntityRole::Producer,
        EntityRole::MainCast,
    ];

    pub fn feature_name(self) -> &'static str {
        match self {
            EntityRole::ProductionHouse => "production_house_embedding",
            EntityRole::Writer => "writers_embedding",
            EntityRole::Director => "directors_embedding",
            EntityRole::Producer => "producers_embedding",
            EntityRole::MainCast => "main_cast_embedding",
        }
    }

    pub fn group(self) -> FeatureGroup {
        match self {
            EntityRole::ProductionHouse => FeatureGroup::ProductionHouse,
            EntityRole::Writer => FeatureGroup::Writers,
            EntityRole::Director => FeatureGroup::Directors,
            EntityRole::Producer => FeatureGroup::Producers,
            EntityRole::MainCast => FeatureGroup::MainCast,
        }
    }

    pub fn ids(self, movie: &RawMovieRecord) -> &[String] {
        let c = &movie.credits;
        match self {
            EntityRole::ProductionHouse => &c.production_houses,
            EntityRole::Writer => &c.writers,
            EntityRole::Director => &c.directors,
            EntityRole::Producer => &c.producers,
            EntityRole::MainCast => &c.main_cast,
        }
    }
}

/// Per-entity `(release_date, roi)` lists sorted ascending by date.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EntityHistory {
    entries: HashMap<String, Vec<(NaiveDate, f64)>>,
}

impl EntityHistory {
    pub fn from_records(records: &[MovieRecord], role: EntityRole) -> Self {
        let mut entries: HashMap<String, Vec<(NaiveDate, f64)>> = HashMap::new();
        for r in records {
            for id in role.ids(r) {
                entries
                    .entry(id.clone())
                    .or_default()
                    .push((r.release_date, r.roi));
            }
        }
        let mut h = EntityHistory { entries };
        h.sort();
        h
    }

    pub fn from_entries(entries: HashMap<String, Vec<(NaiveDate, f64)>>) -> Self {
        let mut h = EntityHistory { entries };
        h.sort();
        h
    }

    fn sort(&mut self) {
        // total order so equal-date entries do not depend on input order
        for list in self.entries.values_mut() {
            list.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        }
    }

    pub fn get(&self, id: &str) -> Option<&[(NaiveDate, f64)]> {
        self.entries.get(id).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entities in sorted order with their lists.
    pub fn sorted_entries(&self) -> Vec<(&str, &[(NaiveDate, f64)])> {
        let mut v: Vec<_> = self
            .entries
            .iter()
            .map(|(k, l)| (k.as_str(), l.as_slice()))
            .collect();
        v.sort_by(|a, b| a.0.cmp(b.0));
        v
    }

    /// Copy keeping only entries dated strictly before `cutoff`.
    pub fn truncated_before(&self, cutoff: NaiveDate) -> EntityHistory {
        let entries = self
            .entries
            .iter()
            .map(|(k, l)| {
                (
                    k.clone(),
                    l.iter().copied().filter(|e| e.0 < cutoff).collect(),
                )
            })
            .collect();
        EntityHistory { entries }
    }
}

/// Mean ROI over credited entities with at least one strictly-prior movie.
pub fn entity_embedding(
    entity_ids: &[String],
    history: &EntityHistory,
    as_of: NaiveDate,
    cfg: &EmbeddingConfig,
) -> f64 {
    let per_entity = entity_ids.iter().filter_map(|id| {
        let list = history.get(id)?;
        let prior = &list[..list.partition_point(|e| e.0 < as_of)];
        let recent = &prior[prior.len().saturating_sub(cfg.max_history)..];
        running_mean(recent.iter().map(|e| e.1))
    });
    running_mean(per_entity).unwrap_or(cfg.fallback)
}

/// Incremental mean; returns exactly `c` when every value equals `c`.
fn running_mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let mut mean = None;
    for (i, v) in values.enumerate() {
        let m = mean.unwrap_or(0.0);
        mean = Some(m + (v - m) / (i + 1) as f64);
    }
    mean
}

pub fn time_discounted_budget(budget: f64, release_year: i32, cfg: &DiscountConfig) -> f64 {
    budget * (1.0 + cfg.annual_rate).powi(cfg.base_year - release_year)
}

/// Budgets of known movies keyed by release `(year, month)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MonthLedger {
    months: BTreeMap<(i32, u32), BTreeMap<String, f64>>,
}

impl MonthLedger {
    pub fn from_records(records: &[MovieRecord]) -> Self {
        let mut ledger = MonthLedger::default();
        for r in records {
            ledger.insert(r.release_year, r.release_month, &r.movie_id, r.budget);
        }
        ledger
    }

    pub fn insert(&mut self, year: i32, month: u32, movie_id: &str, budget: f64) {
        self.months
            .entry((year, month))
            .or_default()
            .insert(movie_id.to_string(), budget);
    }

    pub fn entries(&self) -> impl Iterator<Item = ((i32, u32), &str, f64)> {
        self.months
            .iter()
            .flat_map(|(&k, m)| m.iter().map(move |(id, &b)| (k, id.as_str(), b)))
    }

    pub fn len(&self) -> usize {
        self.months.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.months.is_empty()
    }
}

/// Genre one-hot vocabulary, frozen on training data.
pub fn genre_vocabulary(train: &Dataset) -> Vec<String> {
    let set: BTreeSet<&str> = train
        .records
        .iter()
        .flat_map(|r| r.genres.iter().map(String::as_str))
        .collect();
    set.into_iter().map(str::to_string).collect()
}

fn row_ids(data: &Dataset) -> Vec<String> {
    data.records.iter().map(|r| r.movie_id.clone()).collect()
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn column<F: Fn(&MovieRecord) -> f64>(
    data: &Dataset,
    name: &str,
    group: FeatureGroup,
    f: F,
) -> (ColumnMeta, Vec<f64>) {
    (
        ColumnMeta::model(name, group),
        data.records.iter().map(f).collect(),
    )
}

pub fn build_content_features(data: &Dataset, genres: &[String]) -> Result<FeatureMatrix> {
    let g = FeatureGroup::Content;
    let mut cols = vec![
        column(data, "is_adult", g, |r| flag(r.is_adult)),
        column(data, "is_english", g, |r| flag(r.is_english)),
        column(data, "languages_count", g, |r| f64::from(r.languages_count)),
        column(data, "movie_runtime", g, |r| {
            r.movie_runtime.unwrap_or(f64::NAN)
        }),
    ];
    for k in 0..data.genome_dim {
        cols.push(column(data, &format!("{GENOME_RAW_PREFIX}{k}"), g, |r| {
            r.genome.get(k).copied().unwrap_or(f64::NAN)
        }));
    }
    for genre in genres {
        cols.push(column(data, &format!("{GENRE_PREFIX}{genre}"), g, |r| {
            flag(r.genres.iter().any(|x| x == genre))
        }));
    }
    FeatureMatrix::from_columns(row_ids(data), cols)
}

pub fn build_publicity_features(data: &Dataset) -> Result<FeatureMatrix> {
    let g = FeatureGroup::Publicity;
    FeatureMatrix::from_columns(
        row_ids(data),
        vec![
            column(data, "is_collection", g, |r| flag(r.is_collection)),
            column(data, "is_homepage", g, |r| flag(r.is_homepage)),
            column(data, "is_tagline", g, |r| flag(r.is_tagline)),
            column(data, "keywords_count", g, |r| f64::from(r.keywords_count)),
        ],
    )
}

/// Audience perception columns; flagged so they never reach the model.
pub fn build_audience_features(data: &Dataset) -> Result<FeatureMatrix> {
    let cols = AudienceScores::NAMES
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let meta = ColumnMeta {
                name: name.to_string(),
                group: FeatureGroup::AudiencePerception,
                model_included: false,
            };
            let values = data
                .records
                .iter()
                .map(|r| r.audience.values()[k].unwrap_or(f64::NAN))
                .collect();
            (meta, values)
        })
        .collect();
    FeatureMatrix::from_columns(row_ids(data), cols)
}

/// Competition features over each movie's `(year, month)` group.
///
/// A group is the union of the ledger's movies for that month and the
/// dataset's own rows, with dataset rows overriding ledger rows that share a
/// movie id. Sums run in movie-id order so a movie gets bit-identical values
/// whether it is featurized with its whole cohort or alone against the ledger.
pub fn build_release_features(data: &Dataset, ledger: &MonthLedger) -> Result<FeatureMatrix> {
    let mut groups: BTreeMap<(i32, u32), BTreeMap<String, f64>> = BTreeMap::new();
    for r in &data.records {
        let key = (r.release_year, r.release_month);
        groups
            .entry(key)
            .or_insert_with(|| ledger.months.get(&key).cloned().unwrap_or_default());
    }
    for r in &data.records {
        groups
            .get_mut(&(r.release_year, r.release_month))
            .expect("group created above")
            .insert(r.movie_id.clone(), r.budget);
    }
    let stats: BTreeMap<(i32, u32), (usize, f64)> = groups
        .iter()
        .map(|(&k, members)| (k, (members.len(), members.values().sum::<f64>())))
        .collect();

    let g = FeatureGroup::ReleaseDate;
    let lookup = |r: &MovieRecord| stats[&(r.release_year, r.release_month)];
    FeatureMatrix::from_columns(
        row_ids(data),
        vec![
            column(data, "release_month", g, |r| f64::from(r.release_month)),
            column(data, "movies_per_month", g, |r| lookup(r).0 as f64),
            column(data, "budget_fraction", g, |r| r.budget / lookup(r).1),
            column(data, "movie_expense_score", g, |r| {
                let (count, total) = lookup(r);
                r.budget / (total / count as f64)
            }),
        ],
    )
}

pub fn build_finance_features(data: &Dataset, cfg: &DiscountConfig) -> Result<FeatureMatrix> {
    FeatureMatrix::from_columns(
        row_ids(data),
        vec![column(
            data,
            "time_discounted_budget",
            FeatureGroup::Finance,
            |r| time_discounted_budget(r.budget, r.release_year, cfg),
        )],
    )
}

pub fn build_embedding_features(
    data: &Dataset,
    role: EntityRole,
    history: &EntityHistory,
    cfg: &EmbeddingConfig,
) -> Result<FeatureMatrix> {
    FeatureMatrix::from_columns(
        row_ids(data),
        vec![column(data, role.feature_name(), role.group(), |r| {
            entity_embedding(role.ids(r), history, r.release_date, cfg)
        })],
    )
}

pub fn build_support_staff_features(data: &Dataset) -> Result<FeatureMatrix> {
    let g = FeatureGroup::SupportStaff;
    FeatureMatrix::from_columns(
        row_ids(data),
        vec![
            column(data, "female_count", g, |r| f64::from(r.female_count)),
            column(data, "male_count", g, |r| f64::from(r.male_count)),
            column(data, "crew_length", g, |r| f64::from(r.crew_length)),
        ],
    )
}

/// Concatenates blocks in group order (stable for blocks of the same group).
pub fn assemble(mut blocks: Vec<FeatureMatrix>) -> Result<FeatureMatrix> {
    let Some(first) = blocks.first() else {
        return FeatureMatrix::new(nalgebra::DMatrix::zeros(0, 0), vec![], vec![]);
    };
    let row_ids = first.row_ids.clone();
    for b in &blocks {
        if b.row_ids.len() != row_ids.len() {
            return Err(Error::RowIdMismatch {
                row: b.row_ids.len().min(row_ids.len()),
            });
        }
        if let Some(row) = b.row_ids.iter().zip(&row_ids).position(|(a, b)| a != b) {
            return Err(Error::RowIdMismatch { row });
        }
    }
    blocks.sort_by_key(|b| b.columns.first().map(|c| c.group));
    let width: usize = blocks.iter().map(FeatureMatrix::n_cols).sum();
    let mut values = nalgebra::DMatrix::zeros(row_ids.len(), width);
    let mut columns = Vec::with_capacity(width);
    let mut offset = 0;
    for b in blocks {
        values.columns_mut(offset, b.n_cols()).copy_from(&b.values);
        offset += b.n_cols();
        columns.extend(b.columns);
    }
    FeatureMatrix::new(values, columns, row_ids)
}

/// Median imputation for model columns, fitted on training rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MedianImputer {
    pub medians: Vec<(String, f64)>,
}

impl MedianImputer {
    pub fn fit(train: &FeatureMatrix) -> Self {
        let medians = train
            .columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.model_included)
            .map(|(j, c)| {
                let present: Vec<f64> = train
                    .values
                    .column(j)
                    .iter()
                    .copied()
                    .filter(|v| !v.is_nan())
                    .collect();
                (c.name.clone(), crate::data::median(&present).unwrap_or(0.0))
            })
            .collect();
        MedianImputer { medians }
    }

    pub fn apply(&self, m: &mut FeatureMatrix) -> Result<()> {
        for (name, fill) in &self.medians {
            let j = m.column_index(name).ok_or_else(|| {
                Error::DimensionMismatch(format!("imputed column `{name}` missing from matrix"))
            })?;
            for v in m.values.column_mut(j).iter_mut() {
                if v.is_nan() {
                    *v = *fill;
                }
            }
        }
        Ok(())
    }
}

/// Everything featurization learns from data.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureContext {
    pub genome_dim: usize,
    pub genres: Vec<String>,
    pub discount: DiscountConfig,
    pub embedding: EmbeddingConfig,
    /// One history per [`EntityRole`], in `EntityRole::ALL` order.
    pub histories: Vec<EntityHistory>,
    pub months: MonthLedger,
    pub imputer: MedianImputer,
}

impl FeatureContext {
    /// Fits on the training period. `known` holds every cleaned movie whose
    /// outcome is known (usually train and test together); embeddings only
    /// ever read entries dated strictly before the movie being featurized.
    pub fn fit(
        train: &Dataset,
        known: &Dataset,
        discount: DiscountConfig,
        max_history: usize,
    ) -> Result<FeatureContext> {
        if train.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        discount.validate()?;
        let rois = train.rois();
        let embedding = EmbeddingConfig {
            max_history,
            fallback: rois.iter().sum::<f64>() / rois.len() as f64,
        };
        embedding.validate()?;
        let mut ctx = FeatureContext {
            genome_dim: train.genome_dim,
            genres: genre_vocabulary(train),
            discount,
            embedding,
            histories: EntityRole::ALL
                .iter()
                .map(|&role| EntityHistory::from_records(&known.records, role))
                .collect(),
            months: MonthLedger::from_records(&known.records),
            imputer: MedianImputer::default(),
        };
        let raw = ctx.build(train)?;
        ctx.imputer = MedianImputer::fit(&raw);
        Ok(ctx)
    }

    pub fn history(&self, role: EntityRole) -> &EntityHistory {
        let idx = EntityRole::ALL.iter().position(|&r| r == role).unwrap();
        &self.histories[idx]
    }

    /// Assembled blocks before imputation.
    pub fn build(&self, data: &Dataset) -> Result<FeatureMatrix> {
        if !data.is_empty() && data.genome_dim != self.genome_dim {
            return Err(Error::DimensionMismatch(format!(
                "genome dimension {} but context was fitted with {}",
                data.genome_dim, self.genome_dim
            )));
        }
        let mut blocks = vec![
            build_content_features(data, &self.genres)?,
            build_publicity_features(data)?,
            build_audience_features(data)?,
            build_release_features(data, &self.months)?,
            build_finance_features(data, &self.discount)?,
        ];
        for role in EntityRole::ALL {
            blocks.push(build_embedding_features(
                data,
                role,
                self.history(role),
                &self.embedding,
            )?);
        }
        blocks.push(build_support_staff_features(data)?);
        assemble(blocks)
    }

    /// Full feature matrix (audience columns included, model columns imputed).
    pub fn featurize(&self, data: &Dataset) -> Result<FeatureMatrix> {
        let mut m = self.build(data)?;
        self.imputer.apply(&mut m)?;
        Ok(m)
    }
}
