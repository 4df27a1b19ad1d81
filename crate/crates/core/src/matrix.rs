//! Dense feature matrix with per-column metadata.

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// The eleven feature groups, in table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureGroup {
    Content,
    Publicity,
    AudiencePerception,
    ReleaseDate,
    Finance,
    ProductionHouse,
    Writers,
    Directors,
    Producers,
    MainCast,
    SupportStaff,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 11] = [
        FeatureGroup::Content,
        FeatureGroup::Publicity,
        FeatureGroup::AudiencePerception,
        FeatureGroup::ReleaseDate,
        FeatureGroup::Finance,
        FeatureGroup::ProductionHouse,
        FeatureGroup::Writers,
        FeatureGroup::Directors,
        FeatureGroup::Producers,
        FeatureGroup::MainCast,
        FeatureGroup::SupportStaff,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureGroup::Content => "content",
            FeatureGroup::Publicity => "publicity",
            FeatureGroup::AudiencePerception => "audience_perception",
            FeatureGroup::ReleaseDate => "release_date",
            FeatureGroup::Finance => "finance",
            FeatureGroup::ProductionHouse => "production_house",
            FeatureGroup::Writers => "writers",
            FeatureGroup::Directors => "directors",
            FeatureGroup::Producers => "producers",
            FeatureGroup::MainCast => "main_cast",
            FeatureGroup::SupportStaff => "support_staff",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<FeatureGroup> {
        Self::ALL.get(index).copied()
    }
}

impl fmt::Display for FeatureGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        Self::ALL
            .into_iter()
            .find(|g| g.as_str() == key)
            .ok_or_else(|| Error::UnknownGroup(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMeta {
    pub name: String,
    pub group: FeatureGroup,
    pub model_included: bool,
}

impl ColumnMeta {
    pub fn model(name: impl Into<String>, group: FeatureGroup) -> Self {
        ColumnMeta {
            name: name.into(),
            group,
            model_included: true,
        }
    }
}

/// Rows are movies, columns are features. Missing values are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub values: DMatrix<f64>,
    pub columns: Vec<ColumnMeta>,
    pub row_ids: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(
        values: DMatrix<f64>,
        columns: Vec<ColumnMeta>,
        row_ids: Vec<String>,
    ) -> Result<Self> {
        if values.ncols() != columns.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} value columns but {} metadata entries",
                values.ncols(),
                columns.len()
            )));
        }
        if values.nrows() != row_ids.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} value rows but {} row ids",
                values.nrows(),
                row_ids.len()
            )));
        }
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::DimensionMismatch(format!(
                    "duplicate column `{}`",
                    c.name
                )));
            }
        }
        Ok(FeatureMatrix {
            values,
            columns,
            row_ids,
        })
    }

    /// Builds a block from column vectors.
    pub fn from_columns(row_ids: Vec<String>, cols: Vec<(ColumnMeta, Vec<f64>)>) -> Result<Self> {
        let n = row_ids.len();
        let mut values = DMatrix::zeros(n, cols.len());
        let mut meta = Vec::with_capacity(cols.len());
        for (j, (m, v)) in cols.into_iter().enumerate() {
            if v.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "column `{}` has {} rows, expected {n}",
                    m.name,
                    v.len()
                )));
            }
            values.column_mut(j).copy_from_slice(&v);
            meta.push(m);
        }
        FeatureMatrix::new(values, meta, row_ids)
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.column(j).iter().copied().collect()
    }

    pub fn column_by_name(&self, name: &str) -> Option<Vec<f64>> {
        self.column_index(name).map(|j| self.column(j))
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.values.row(i).iter().copied().collect()
    }

    /// Row-major copy of the values.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_rows()).map(|i| self.row(i)).collect()
    }

    pub fn select_columns(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            values: self.values.select_columns(indices),
            columns: indices.iter().map(|&j| self.columns[j].clone()).collect(),
            row_ids: self.row_ids.clone(),
        }
    }

    pub fn select_rows(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            values: self.values.select_rows(indices),
            columns: self.columns.clone(),
            row_ids: indices.iter().map(|&i| self.row_ids[i].clone()).collect(),
        }
    }

    /// Projection onto the columns the model is allowed to see.
    pub fn model_view(&self) -> FeatureMatrix {
        let keep: Vec<usize> = (0..self.n_cols())
            .filter(|&j| self.columns[j].model_included)
            .collect();
        self.select_columns(&keep)
    }

    /// Writes `movie_id,<columns...>`; NaN is written as an empty field.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["movie_id".to_string()];
        header.extend(self.column_names());
        w.write_record(&header)?;
        for i in 0..self.n_rows() {
            let mut rec = Vec::with_capacity(self.n_cols() + 1);
            rec.push(self.row_ids[i].clone());
            for v in self.values.row(i).iter() {
                rec.push(if v.is_nan() {
                    String::new()
                } else {
                    v.to_string()
                });
            }
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    /// Writes the `name,group,model_included` sidecar.
    pub fn write_meta_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["name", "group", "model_included"])?;
        for c in &self.columns {
            w.write_record([
                c.name.as_str(),
                c.group.as_str(),
                if c.model_included { "1" } else { "0" },
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn read_meta_csv<R: Read>(input: R) -> Result<Vec<ColumnMeta>> {
        let mut r = csv::Reader::from_reader(input);
        let mut out = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let field = |k: usize| rec.get(k).unwrap_or("");
            let model_included = match field(2) {
                "1" | "true" => true,
                "0" | "false" => false,
                other => {
                    return Err(Error::InvalidValue {
                        row: i + 1,
                        column: "model_included".into(),
                        message: format!("expected 0/1, found `{other}`"),
                    })
                }
            };
            out.push(ColumnMeta {
                name: field(0).to_string(),
                group: field(1).parse()?,
                model_included,
            });
        }
        Ok(out)
    }

    /// Reads a matrix written by [`FeatureMatrix::write_csv`] given its metadata.
    pub fn read_csv<R: Read>(input: R, columns: Vec<ColumnMeta>) -> Result<FeatureMatrix> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers()?.clone();
        let expected: Vec<&str> = std::iter::once("movie_id")
            .chain(columns.iter().map(|c| c.name.as_str()))
            .collect();
        if header.iter().collect::<Vec<_>>() != expected {
            return Err(Error::HeaderMismatch(
                "matrix header does not match column metadata".into(),
            ));
        }
        let mut row_ids = Vec::new();
        let mut data = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            row_ids.push(rec.get(0).unwrap_or("").to_string());
            for (j, text) in rec.iter().skip(1).enumerate() {
                let v = if text.is_empty() {
                    f64::NAN
                } else {
                    text.parse().map_err(|_| Error::InvalidValue {
                        row: i + 1,
                        column: columns[j].name.clone(),
                        message: format!("expected a number, found `{text}`"),
                    })?
                };
                data.push(v);
            }
        }
        let values = DMatrix::from_row_slice(row_ids.len(), columns.len(), &data);
        FeatureMatrix::new(values, columns, row_ids)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_names_round_trip() {
        for g in FeatureGroup::ALL {
            assert_eq!(g.as_str().parse::<FeatureGroup>().unwrap(), g);
            assert_eq!(FeatureGroup::from_index(g.index()), Some(g));
        }
        assert_eq!(
            "Main Cast".parse::<FeatureGroup>().unwrap(),
            FeatureGroup::MainCast
        );
        assert!(matches!(
            "marketing".parse::<FeatureGroup>(),
            Err(Error::UnknownGroup(_))
        ));
    }

    #[test]
    fn csv_round_trip_keeps_nan_and_bits() {
        let m = FeatureMatrix::from_columns(
            vec!["a".into(), "b".into()],
            vec![
                (
                    ColumnMeta::model("x", FeatureGroup::Content),
                    vec![0.1 + 0.2, f64::NAN],
                ),
                (
                    ColumnMeta {
                        name: "y".into(),
                        group: FeatureGroup::AudiencePerception,
                        model_included: false,
                    },
                    vec![1e-300, -7.0],
                ),
            ],
        )
        .unwrap();
        let mut data = Vec::new();
        let mut meta = Vec::new();
        m.write_csv(&mut data).unwrap();
        m.write_meta_csv(&mut meta).unwrap();
        let cols = FeatureMatrix::read_meta_csv(meta.as_slice()).unwrap();
        let back = FeatureMatrix::read_csv(data.as_slice(), cols).unwrap();
        assert_eq!(back.columns, m.columns);
        assert_eq!(back.row_ids, m.row_ids);
        assert_eq!(back.values[(0, 0)].to_bits(), (0.1f64 + 0.2).to_bits());
        assert!(back.values[(1, 0)].is_nan());
        assert_eq!(back.values[(0, 1)], 1e-300);
    }

    #[test]
    fn duplicate_column_names_rejected() {
        let r = FeatureMatrix::from_columns(
            vec!["a".into()],
            vec![
                (ColumnMeta::model("x", FeatureGroup::Content), vec![1.0]),
                (ColumnMeta::model("x", FeatureGroup::Finance), vec![2.0]),
            ],
        );
        assert!(r.is_err());
    }

    #[test]
    fn model_view_drops_excluded() {
        let m = FeatureMatrix::from_columns(
            vec!["a".into()],
            vec![
                (ColumnMeta::model("x", FeatureGroup::Content), vec![1.0]),
                (
                    ColumnMeta {
                        name: "imdb_rating".into(),
                        group: FeatureGroup::AudiencePerception,
                        model_included: false,
                    },
                    vec![7.3],
                ),
            ],
        )
        .unwrap();
        assert_eq!(m.model_view().column_names(), vec!["x".to_string()]);
    }
}
