//! Movie records, CSV ingestion, cleaning filters, ROI and the temporal
//! train/test split with median labeling.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::Write;
use std::path::Path;

use chrono::{Datelike, NaiveDate};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Movies released in or after this year belong to the test period.
pub const TEST_START_YEAR: i32 = 2011;

/// Last year excluded by the cleaning filter; the first admissible year is 1966.
pub const MIN_EXCLUDED_YEAR: i32 = 1965;

/// Fixed (non-genome) columns of `movies.csv`, in canonical order.
pub const FIXED_COLUMNS: [&str; 28] = [
    "movie_id",
    "title",
    "release_date",
    "budget",
    "revenue",
    "is_adult",
    "is_english",
    "is_collection",
    "is_homepage",
    "is_tagline",
    "languages_count",
    "keywords_count",
    "movie_runtime",
    "genres",
    "female_count",
    "male_count",
    "crew_length",
    "popularity",
    "vote_average",
    "vote_count",
    "metacritic_score",
    "imdb_rating",
    "imdb_votes",
    "production_house_ids",
    "writer_ids",
    "director_ids",
    "producer_ids",
    "main_cast_ids",
];

/// Post-release audience perception measurements. Carried through ingestion
/// but never fed to the model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AudienceScores {
    pub popularity: Option<f64>,
    pub vote_average: Option<f64>,
    pub vote_count: Option<f64>,
    pub metacritic_score: Option<f64>,
    pub imdb_rating: Option<f64>,
    pub imdb_votes: Option<f64>,
}

impl AudienceScores {
    pub const NAMES: [&'static str; 6] = [
        "popularity",
        "vote_average",
        "vote_count",
        "metacritic_score",
        "imdb_rating",
        "imdb_votes",
    ];

    pub fn values(&self) -> [Option<f64>; 6] {
        [
            self.popularity,
            self.vote_average,
            self.vote_count,
            self.metacritic_score,
            self.imdb_rating,
            self.imdb_votes,
        ]
    }
}

/// Credited entities of a movie, one list per role.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Credits {
    pub production_houses: Vec<String>,
    pub writers: Vec<String>,
    pub directors: Vec<String>,
    pub producers: Vec<String>,
    pub main_cast: Vec<String>,
}

/// One row of `movies.csv` as ingested.
#[derive(Debug, Clone, PartialEq)]
pub struct RawMovieRecord {
    pub movie_id: String,
    pub title: String,
    pub release_date: NaiveDate,
    pub budget: f64,
    pub revenue: f64,
    pub is_adult: bool,
    pub is_english: bool,
    pub is_collection: bool,
    pub is_homepage: bool,
    pub is_tagline: bool,
    pub languages_count: u32,
    pub keywords_count: u32,
    pub movie_runtime: Option<f64>,
    pub genres: Vec<String>,
    pub female_count: u32,
    pub male_count: u32,
    pub crew_length: u32,
    pub audience: AudienceScores,
    pub credits: Credits,
    pub genome: Vec<f64>,
}

/// A cleaned movie with its derived return on investment.
#[derive(Debug, Clone, PartialEq)]
pub struct MovieRecord {
    pub raw: RawMovieRecord,
    pub roi: f64,
    pub release_year: i32,
    pub release_month: u32,
}

impl std::ops::Deref for MovieRecord {
    type Target = RawMovieRecord;

    fn deref(&self) -> &RawMovieRecord {
        &self.raw
    }
}

/// Records as read from disk, before any filtering.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawDataset {
    pub records: Vec<RawMovieRecord>,
    pub genome_dim: usize,
}

/// Cleaned records with ROI populated.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub records: Vec<MovieRecord>,
    pub genome_dim: usize,
    pub schema_version: u32,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn rois(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.roi).collect()
    }

    pub fn to_raw(&self) -> RawDataset {
        RawDataset {
            records: self.records.iter().map(|r| r.raw.clone()).collect(),
            genome_dim: self.genome_dim,
        }
    }

    /// Concatenates two cleaned datasets sharing a genome dimension.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if !self.is_empty() && !other.is_empty() && self.genome_dim != other.genome_dim {
            return Err(Error::DimensionMismatch(format!(
                "genome dimension {} vs {}",
                self.genome_dim, other.genome_dim
            )));
        }
        let mut records = self.records.clone();
        records.extend(other.records.iter().cloned());
        Ok(Dataset {
            records,
            genome_dim: self.genome_dim.max(other.genome_dim),
            schema_version: self.schema_version,
        })
    }

    fn from_records(records: Vec<MovieRecord>, genome_dim: usize) -> Dataset {
        Dataset {
            records,
            genome_dim,
            schema_version: SCHEMA_VERSION,
        }
    }
}

/// Train/test partition with labels binarized at the training median ROI.
#[derive(Debug, Clone)]
pub struct LabeledSplit {
    pub train: Dataset,
    pub test: Dataset,
    pub median_roi: f64,
    pub train_labels: Vec<u8>,
    pub test_labels: Vec<u8>,
}

/// Column layout expected by [`load_movies_csv`].
///
/// Columns are matched by name; the genome block must be a contiguous run
/// `<prefix>0 .. <prefix>{D-1}`. When `require_revenue` is false the revenue
/// column may be absent and is never read, which is how rows for one-shot
/// prediction are ingested.
#[derive(Debug, Clone)]
pub struct CsvSchema {
    pub genome_prefix: String,
    pub require_revenue: bool,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            genome_prefix: "genome_".to_string(),
            require_revenue: true,
        }
    }
}

impl CsvSchema {
    pub fn prediction() -> Self {
        CsvSchema {
            require_revenue: false,
            ..CsvSchema::default()
        }
    }
}

#[allow(clippy::neg_cmp_op_on_partial_ord)] // rejects NaN too
pub fn compute_roi(budget: f64, revenue: f64) -> Result<f64> {
    if !(budget > 0.0) {
        return Err(Error::Domain(format!(
            "budget must be positive, got {budget}"
        )));
    }
    Ok((revenue - budget) / budget)
}

pub fn load_movies_csv(path: &Path, schema: &CsvSchema) -> Result<RawDataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_movies_csv(file, schema)
}

pub fn read_movies_csv<R: std::io::Read>(input: R, schema: &CsvSchema) -> Result<RawDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader.headers()?.clone();
    let layout = ColumnLayout::resolve(&headers, schema)?;

    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let parser = RowParser {
            row: i + 1,
            record: &row,
            layout: &layout,
        };
        records.push(parser.parse()?);
    }
    Ok(RawDataset {
        records,
        genome_dim: layout.genome.len(),
    })
}

struct ColumnLayout {
    fixed: HashMap<&'static str, usize>,
    genome: Vec<usize>,
    genome_names: Vec<String>,
}

impl ColumnLayout {
    fn resolve(headers: &csv::StringRecord, schema: &CsvSchema) -> Result<Self> {
        let mut by_name = HashMap::new();
        for (pos, name) in headers.iter().enumerate() {
            if by_name.insert(name.to_string(), pos).is_some() {
                return Err(Error::HeaderMismatch(format!("duplicate column `{name}`")));
            }
        }

        let mut fixed = HashMap::new();
        for name in FIXED_COLUMNS {
            match by_name.get(name) {
                Some(&pos) => {
                    fixed.insert(name, pos);
                }
                None if name == "revenue" && !schema.require_revenue => {}
                None => return Err(Error::HeaderMismatch(format!("missing column `{name}`"))),
            }
        }

        let mut genome = Vec::new();
        let mut genome_names = Vec::new();
        let mut unknown = Vec::new();
        for (pos, name) in headers.iter().enumerate() {
            if FIXED_COLUMNS.contains(&name) {
                continue;
            }
            let index = name
                .strip_prefix(schema.genome_prefix.as_str())
                .and_then(|s| s.parse::<usize>().ok());
            match index {
                Some(idx) => {
                    if idx != genome.len() || genome.last().is_some_and(|&p| p + 1 != pos) {
                        return Err(Error::HeaderMismatch(format!(
                            "genome columns must be contiguous and ordered; found `{name}` at position {pos}"
                        )));
                    }
                    genome.push(pos);
                    genome_names.push(name.to_string());
                }
                None => unknown.push(name.to_string()),
            }
        }
        if !unknown.is_empty() {
            return Err(Error::HeaderMismatch(format!(
                "unexpected columns: {}",
                unknown.join(", ")
            )));
        }
        Ok(ColumnLayout {
            fixed,
            genome,
            genome_names,
        })
    }
}

struct RowParser<'a> {
    row: usize,
    record: &'a csv::StringRecord,
    layout: &'a ColumnLayout,
}

impl RowParser<'_> {
    fn field(&self, name: &'static str) -> &str {
        self.layout
            .fixed
            .get(name)
            .and_then(|&pos| self.record.get(pos))
            .unwrap_or("")
    }

    fn err(&self, column: &str, message: impl Into<String>) -> Error {
        Error::InvalidValue {
            row: self.row,
            column: column.to_string(),
            message: message.into(),
        }
    }

    fn f64_at(&self, column: &str, text: &str) -> Result<f64> {
        let v: f64 = text
            .parse()
            .map_err(|_| self.err(column, format!("expected a number, found `{text}`")))?;
        if !v.is_finite() {
            return Err(self.err(column, format!("non-finite value `{text}`")));
        }
        Ok(v)
    }

    fn money(&self, name: &'static str) -> Result<f64> {
        let v = self.f64_at(name, self.field(name))?;
        if v < 0.0 {
            return Err(self.err(name, "must be non-negative"));
        }
        Ok(v)
    }

    fn optional(&self, name: &'static str) -> Result<Option<f64>> {
        match self.field(name) {
            "" => Ok(None),
            text => self.f64_at(name, text).map(Some),
        }
    }

    fn count(&self, name: &'static str) -> Result<u32> {
        let text = self.field(name);
        text.parse().map_err(|_| {
            self.err(
                name,
                format!("expected a non-negative integer, found `{text}`"),
            )
        })
    }

    fn flag(&self, name: &'static str) -> Result<bool> {
        match self.field(name).to_ascii_lowercase().as_str() {
            "1" | "true" => Ok(true),
            "0" | "false" => Ok(false),
            other => Err(self.err(name, format!("expected a boolean, found `{other}`"))),
        }
    }

    fn list(&self, name: &'static str) -> Vec<String> {
        split_list(self.field(name))
    }

    fn parse(&self) -> Result<RawMovieRecord> {
        let movie_id = self.field("movie_id").to_string();
        if movie_id.is_empty() {
            return Err(self.err("movie_id", "empty identifier"));
        }
        let date_text = self.field("release_date");
        let release_date = NaiveDate::parse_from_str(date_text, "%Y-%m-%d").map_err(|_| {
            self.err(
                "release_date",
                format!("expected YYYY-MM-DD, found `{date_text}`"),
            )
        })?;
        let revenue = if self.layout.fixed.contains_key("revenue") {
            self.money("revenue")?
        } else {
            0.0
        };

        let mut genome = Vec::with_capacity(self.layout.genome.len());
        for (&pos, name) in self.layout.genome.iter().zip(&self.layout.genome_names) {
            let v = self.f64_at(name, self.record.get(pos).unwrap_or(""))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(self.err(name, format!("genome relevance {v} outside [0, 1]")));
            }
            genome.push(v);
        }

        Ok(RawMovieRecord {
            movie_id,
            title: self.field("title").to_string(),
            release_date,
            budget: self.money("budget")?,
            revenue,
            is_adult: self.flag("is_adult")?,
            is_english: self.flag("is_english")?,
            is_collection: self.flag("is_collection")?,
            is_homepage: self.flag("is_homepage")?,
            is_tagline: self.flag("is_tagline")?,
            languages_count: self.count("languages_count")?,
            keywords_count: self.count("keywords_count")?,
            movie_runtime: self.optional("movie_runtime")?,
            genres: self.list("genres"),
            female_count: self.count("female_count")?,
            male_count: self.count("male_count")?,
            crew_length: self.count("crew_length")?,
            audience: AudienceScores {
                popularity: self.optional("popularity")?,
                vote_average: self.optional("vote_average")?,
                vote_count: self.optional("vote_count")?,
                metacritic_score: self.optional("metacritic_score")?,
                imdb_rating: self.optional("imdb_rating")?,
                imdb_votes: self.optional("imdb_votes")?,
            },
            credits: Credits {
                production_houses: self.list("production_house_ids"),
                writers: self.list("writer_ids"),
                directors: self.list("director_ids"),
                producers: self.list("producer_ids"),
                main_cast: self.list("main_cast_ids"),
            },
            genome,
        })
    }
}

fn split_list(text: &str) -> Vec<String> {
    text.split('|')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

/// Writes records in the canonical `movies.csv` layout.
pub fn write_movies_csv<W: Write>(out: W, data: &RawDataset) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    let mut header: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend((0..data.genome_dim).map(|i| format!("genome_{i}")));
    writer.write_record(&header)?;

    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let flag = |b: bool| if b { "1" } else { "0" }.to_string();
    for r in &data.records {
        let mut row = vec![
            r.movie_id.clone(),
            r.title.clone(),
            r.release_date.format("%Y-%m-%d").to_string(),
            r.budget.to_string(),
            r.revenue.to_string(),
            flag(r.is_adult),
            flag(r.is_english),
            flag(r.is_collection),
            flag(r.is_homepage),
            flag(r.is_tagline),
            r.languages_count.to_string(),
            r.keywords_count.to_string(),
            opt(r.movie_runtime),
            r.genres.join("|"),
            r.female_count.to_string(),
            r.male_count.to_string(),
            r.crew_length.to_string(),
        ];
        row.extend(r.audience.values().into_iter().map(opt));
        row.push(r.credits.production_houses.join("|"));
        row.push(r.credits.writers.join("|"));
        row.push(r.credits.directors.join("|"));
        row.push(r.credits.producers.join("|"));
        row.push(r.credits.main_cast.join("|"));
        row.extend(r.genome.iter().map(|g| g.to_string()));
        writer.write_record(&row)?;
    }
    writer.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

/// Keeps movies released after 1965 with positive budget and revenue.
pub fn clean_filter(raw: &RawDataset) -> Dataset {
    let records = raw
        .records
        .iter()
        .filter(|r| r.release_date.year() > MIN_EXCLUDED_YEAR && r.budget > 0.0 && r.revenue > 0.0)
        .map(|r| MovieRecord {
            roi: (r.revenue - r.budget) / r.budget,
            release_year: r.release_date.year(),
            release_month: r.release_date.month(),
            raw: r.clone(),
        })
        .collect();
    Dataset::from_records(records, raw.genome_dim)
}

/// Rejects datasets whose movie ids repeat.
pub fn check_unique_ids(data: &Dataset) -> Result<()> {
    let mut seen = HashSet::with_capacity(data.len());
    for r in &data.records {
        if !seen.insert(r.movie_id.as_str()) {
            return Err(Error::DuplicateId(r.movie_id.clone()));
        }
    }
    Ok(())
}

pub fn temporal_split(data: &Dataset) -> (Dataset, Dataset) {
    let (train, test): (Vec<_>, Vec<_>) = data
        .records
        .iter()
        .cloned()
        .partition(|r| r.release_year < TEST_START_YEAR);
    (
        Dataset::from_records(train, data.genome_dim),
        Dataset::from_records(test, data.genome_dim),
    )
}

/// Median with the midpoint rule for even counts.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    Some(if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    })
}

/// Label 1 iff ROI is strictly above the threshold.
pub fn label_for(roi: f64, median_roi: f64) -> u8 {
    u8::from(roi > median_roi)
}

pub fn binarize_labels(train: Dataset, test: Dataset) -> Result<LabeledSplit> {
    let median_roi = median(&train.rois()).ok_or(Error::EmptyTrainingSet)?;
    let train_labels = train
        .records
        .iter()
        .map(|r| label_for(r.roi, median_roi))
        .collect();
    let test_labels = test
        .records
        .iter()
        .map(|r| label_for(r.roi, median_roi))
        .collect();
    Ok(LabeledSplit {
        train,
        test,
        median_roi,
        train_labels,
        test_labels,
    })
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use proptest::prelude::*;

    const THREE_ROWS: &str = "\
movie_id,title,release_date,budget,revenue,is_adult,is_english,is_collection,is_homepage,is_tagline,languages_count,keywords_count,movie_runtime,genres,female_count,male_count,crew_length,popularity,vote_average,vote_count,metacritic_score,imdb_rating,imdb_votes,production_house_ids,writer_ids,director_ids,producer_ids,main_cast_ids,genome_0,genome_1
m1,Alpha,1999-05-21,1000000,3000000,0,1,1,0,1,2,7,121,Drama|Action,3,9,40,12.5,7.1,900,66,7.3,15000,ph1|ph2,w1,d1,p1|p2,c1|c2|c3,0.25,0.75
m2,\"Beta, the sequel\",2011-12-01,500,250,1,0,0,1,0,1,0,,,0,0,0,,,,,,,,,,,,0,1
m3,Gamma,1966-01-01,10,10,false,true,false,false,true,3,12,95.5,Comedy,1,1,5,1,2,3,4,5,6,ph3,w2|w3,d2,p3,c4,1,0.5
";

    fn expected_m1() -> RawMovieRecord {
        RawMovieRecord {
            movie_id: "m1".into(),
            title: "Alpha".into(),
            release_date: NaiveDate::from_ymd_opt(1999, 5, 21).unwrap(),
            budget: 1_000_000.0,
            revenue: 3_000_000.0,
            is_adult: false,
            is_english: true,
            is_collection: true,
            is_homepage: false,
            is_tagline: true,
            languages_count: 2,
            keywords_count: 7,
            movie_runtime: Some(121.0),
            genres: vec!["Drama".into(), "Action".into()],
            female_count: 3,
            male_count: 9,
            crew_length: 40,
            audience: AudienceScores {
                popularity: Some(12.5),
                vote_average: Some(7.1),
                vote_count: Some(900.0),
                metacritic_score: Some(66.0),
                imdb_rating: Some(7.3),
                imdb_votes: Some(15000.0),
            },
            credits: Credits {
                production_houses: vec!["ph1".into(), "ph2".into()],
                writers: vec!["w1".into()],
                directors: vec!["d1".into()],
                producers: vec!["p1".into(), "p2".into()],
                main_cast: vec!["c1".into(), "c2".into(), "c3".into()],
            },
            genome: vec![0.25, 0.75],
        }
    }

    #[test]
    fn header_only_file_has_no_records() {
        let header = THREE_ROWS.lines().next().unwrap();
        let data = read_movies_csv(header.as_bytes(), &CsvSchema::default()).unwrap();
        assert!(data.records.is_empty());
        assert_eq!(data.genome_dim, 2);
    }

    #[test]
    fn three_row_fixture_round_trips_field_exact() {
        let data = read_movies_csv(THREE_ROWS.as_bytes(), &CsvSchema::default()).unwrap();
        assert_eq!(data.records.len(), 3);
        assert_eq!(data.records[0], expected_m1());

        let m2 = &data.records[1];
        assert_eq!(m2.title, "Beta, the sequel");
        assert!(m2.is_adult && !m2.is_english && m2.is_homepage);
        assert_eq!(m2.movie_runtime, None);
        assert!(m2.genres.is_empty());
        assert_eq!(m2.audience, AudienceScores::default());
        assert_eq!(m2.credits, Credits::default());
        assert_eq!(m2.genome, vec![0.0, 1.0]);

        let m3 = &data.records[2];
        assert_eq!(m3.movie_runtime, Some(95.5));
        assert_eq!(m3.credits.writers, vec!["w2".to_string(), "w3".to_string()]);
        assert_eq!(m3.audience.imdb_votes, Some(6.0));

        let mut buf = Vec::new();
        write_movies_csv(&mut buf, &data).unwrap();
        let again = read_movies_csv(buf.as_slice(), &CsvSchema::default()).unwrap();
        assert_eq!(again, data);
    }

    #[test]
    fn text_in_budget_names_row_and_column() {
        let bad = THREE_ROWS.replace(
            "m2,\"Beta, the sequel\",2011-12-01,500",
            "m2,Beta,2011-12-01,lots",
        );
        let err = read_movies_csv(bad.as_bytes(), &CsvSchema::default()).unwrap_err();
        match err {
            Error::InvalidValue { row, column, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column, "budget");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn missing_column_is_header_mismatch() {
        let bad = THREE_ROWS.replacen("crew_length", "crew_size", 1);
        assert!(matches!(
            read_movies_csv(bad.as_bytes(), &CsvSchema::default()),
            Err(Error::HeaderMismatch(_))
        ));
    }

    #[test]
    fn non_contiguous_genome_is_header_mismatch() {
        let header = "movie_id,title,release_date,budget,revenue,is_adult,is_english,is_collection,is_homepage,is_tagline,languages_count,keywords_count,movie_runtime,genres,female_count,male_count,crew_length,popularity,vote_average,vote_count,metacritic_score,imdb_rating,imdb_votes,production_house_ids,writer_ids,director_ids,producer_ids,genome_0,main_cast_ids,genome_1";
        assert!(matches!(
            read_movies_csv(header.as_bytes(), &CsvSchema::default()),
            Err(Error::HeaderMismatch(_))
        ));
    }

    #[test]
    fn genome_out_of_range_rejected() {
        let bad = THREE_ROWS.replace(",0.25,0.75", ",1.25,0.75");
        assert!(matches!(
            read_movies_csv(bad.as_bytes(), &CsvSchema::default()),
            Err(Error::InvalidValue { row: 1, .. })
        ));
    }

    #[test]
    fn prediction_schema_allows_missing_revenue() {
        let mut lines = THREE_ROWS.lines();
        let header = lines.next().unwrap().replace("budget,revenue,", "budget,");
        let row = lines
            .next()
            .unwrap()
            .replace("1000000,3000000,", "1000000,");
        let text = format!("{header}\n{row}\n");
        assert!(read_movies_csv(text.as_bytes(), &CsvSchema::default()).is_err());
        let data = read_movies_csv(text.as_bytes(), &CsvSchema::prediction()).unwrap();
        assert_eq!(data.records[0].revenue, 0.0);
        assert_eq!(data.records[0].budget, 1_000_000.0);
    }

    #[test]
    fn roi_examples() {
        assert_eq!(compute_roi(100.0, 300.0).unwrap(), 2.0);
        assert_eq!(compute_roi(100.0, 100.0).unwrap(), 0.0);
        assert_eq!(compute_roi(200.0, 50.0).unwrap(), -0.75);
        assert!(matches!(compute_roi(0.0, 10.0), Err(Error::Domain(_))));
        assert!(compute_roi(-5.0, 10.0).is_err());
    }

    #[test]
    fn year_boundary_and_zero_money() {
        let data = dataset(vec![
            raw_movie("a", "1965-12-31", 10.0, 20.0),
            raw_movie("b", "1966-01-01", 10.0, 20.0),
            raw_movie("c", "1990-01-01", 0.0, 20.0),
            raw_movie("d", "1990-01-01", 10.0, 0.0),
            raw_movie("e", "2015-03-02", 4.0, 2.0),
        ]);
        let ids: Vec<_> = data.records.iter().map(|r| r.movie_id.as_str()).collect();
        assert_eq!(ids, ["b", "e"]);
        assert_eq!(data.records[0].roi, 1.0);
        assert_eq!(data.records[1].roi, -0.5);
        assert_eq!(data.records[1].release_year, 2015);
        assert_eq!(data.records[1].release_month, 3);
    }

    #[test]
    fn split_boundary_and_counts() {
        let years = [1970, 1985, 2000, 2010, 2011, 2012, 1999, 2008, 2016, 2001];
        let data = dataset(
            years
                .iter()
                .enumerate()
                .map(|(i, y)| raw_movie(&format!("m{i}"), &format!("{y}-06-01"), 1.0, 2.0))
                .collect(),
        );
        let (train, test) = temporal_split(&data);
        assert_eq!((train.len(), test.len()), (7, 3));
        assert!(train.records.iter().any(|r| r.release_year == 2010));
        assert!(test.records.iter().all(|r| r.release_year >= 2011));

        let (a, b) = temporal_split(&Dataset::default());
        assert!(a.is_empty() && b.is_empty());
    }

    #[test]
    fn median_labels() {
        let make = |rois: &[f64]| {
            dataset(
                rois.iter()
                    .enumerate()
                    .map(|(i, r)| {
                        raw_movie(&format!("m{i}"), "2000-01-01", 100.0, 100.0 * (1.0 + r))
                    })
                    .collect(),
            )
        };
        let train = make(&[0.0, 1.0, 2.0, 3.0]);
        let test = make(&[10.0, 1.5]);
        let split = binarize_labels(train, test).unwrap();
        assert_eq!(split.median_roi, 1.5);
        assert_eq!(split.train_labels, vec![0, 0, 1, 1]);
        // exact median maps to 0
        assert_eq!(split.test_labels, vec![1, 0]);

        assert!(matches!(
            binarize_labels(Dataset::default(), make(&[1.0])),
            Err(Error::EmptyTrainingSet)
        ));
    }

    #[test]
    fn duplicate_ids_detected() {
        let data = dataset(vec![
            raw_movie("a", "1990-01-01", 1.0, 2.0),
            raw_movie("a", "1991-01-01", 1.0, 2.0),
        ]);
        assert!(matches!(
            check_unique_ids(&data),
            Err(Error::DuplicateId(_))
        ));
    }

    fn arb_raw() -> impl Strategy<Value = RawDataset> {
        prop::collection::vec((1950i32..2020, 0u8..4, 0u8..4, 1u32..12), 0..40).prop_map(|rows| {
            let records = rows
                .into_iter()
                .enumerate()
                .map(|(i, (year, b, r, month))| {
                    raw_movie(
                        &format!("m{i}"),
                        &format!("{year}-{month:02}-15"),
                        f64::from(b) * 10.0,
                        f64::from(r) * 7.0,
                    )
                })
                .collect();
            RawDataset {
                records,
                genome_dim: 2,
            }
        })
    }

    proptest! {
        #[test]
        fn clean_filter_is_idempotent(raw in arb_raw()) {
            let once = clean_filter(&raw);
            let twice = clean_filter(&once.to_raw());
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn split_is_a_partition(raw in arb_raw()) {
            let data = clean_filter(&raw);
            let (train, test) = temporal_split(&data);
            prop_assert_eq!(train.len() + test.len(), data.len());
            let mut ids: Vec<_> = train.records.iter().chain(&test.records).map(|r| r.movie_id.clone()).collect();
            ids.sort();
            let mut expected: Vec<_> = data.records.iter().map(|r| r.movie_id.clone()).collect();
            expected.sort();
            prop_assert_eq!(ids, expected);
            prop_assert!(train.records.iter().all(|r| r.release_year < TEST_START_YEAR));
            prop_assert!(test.records.iter().all(|r| r.release_year >= TEST_START_YEAR));
        }

        #[test]
        fn distinct_rois_balance_labels(mut rois in prop::collection::hash_set(-1000i64..100000, 1..60)) {
            let rois: Vec<f64> = rois.drain().map(|r| r as f64 / 100.0).collect();
            let train = Dataset::from_records(
                rois.iter().enumerate().map(|(i, &roi)| MovieRecord {
                    raw: raw_movie(&format!("m{i}"), "2000-01-01", 1.0, 1.0 + roi),
                    roi,
                    release_year: 2000,
                    release_month: 1,
                }).collect(),
                2,
            );
            let split = binarize_labels(train, Dataset::default()).unwrap();
            let ones = split.train_labels.iter().filter(|&&l| l == 1).count() as i64;
            let zeros = split.train_labels.len() as i64 - ones;
            prop_assert!((ones - zeros).abs() <= 1);
        }

        #[test]
        fn break_even_roi_is_zero(b in 1e-6f64..1e12) {
            prop_assert_eq!(compute_roi(b, b).unwrap(), 0.0);
        }
    }
}
