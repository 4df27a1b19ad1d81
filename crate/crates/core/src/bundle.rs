//! The `.roibundle` archive: a fitted pipeline in one checksummed file.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic        8 bytes  "ROIBNDL\0"
//! version      u32
//! n_sections   u32
//! manifest     n_sections x { name_len u16, name, offset u64, length u64, sha256 [32] }
//! sections     concatenated payloads, in manifest order
//! ```
//!
//! Field-level encoding is described in `docs/roibundle.md`.

use std::fs;
use std::io::Write;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

use crate::data::SCHEMA_VERSION;
use crate::error::{Error, Result};
use crate::features::{
    DiscountConfig, EmbeddingConfig, EntityHistory, FeatureContext, MedianImputer, MonthLedger,
};
use crate::forest::{Forest, Node, RfConfig, Tree};
use crate::matrix::{ColumnMeta, FeatureGroup};
use crate::pipeline::{Fingerprint, FittedPipeline};
use crate::reduce::{
    BlockSpec, FittedBlock, PruneEntry, PruneReport, ReducerConfig, ReducerPipeline, SvdModel,
};

pub const MAGIC: [u8; 8] = *b"ROIBNDL\0";
pub const FORMAT_VERSION: u32 = 1;
const SECTIONS: [&str; 5] = ["meta", "labels", "features", "reducer", "forest"];

#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub format_version: u32,
    /// Seconds since the Unix epoch; supplied by the caller so output bytes
    /// stay reproducible.
    pub created_at: i64,
    pub schema_version: u32,
    pub pipeline: FittedPipeline,
}

impl ModelBundle {
    pub fn new(pipeline: FittedPipeline, created_at: i64) -> Self {
        ModelBundle {
            format_version: FORMAT_VERSION,
            created_at,
            schema_version: SCHEMA_VERSION,
            pipeline,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let p = &self.pipeline;
        let mut sections: Vec<(&str, Vec<u8>)> = Vec::new();

        let mut e = Enc::default();
        e.i64(self.created_at);
        e.u32(self.schema_version);
        e.u64(p.fingerprint.train_rows);
        e.u64(p.fingerprint.test_rows);
        e.u64(p.fingerprint.seed);
        sections.push(("meta", e.0));

        let mut e = Enc::default();
        e.f64(p.median_roi);
        sections.push(("labels", e.0));

        let mut e = Enc::default();
        encode_context(&mut e, &p.context);
        sections.push(("features", e.0));

        let mut e = Enc::default();
        encode_reducer(&mut e, &p.reducer);
        sections.push(("reducer", e.0));

        if let Some(forest) = &p.forest {
            let mut e = Enc::default();
            encode_forest(&mut e, forest);
            sections.push(("forest", e.0));
        }

        let mut header = Enc::default();
        header.0.extend_from_slice(&MAGIC);
        header.u32(self.format_version);
        header.u32(sections.len() as u32);
        let manifest_len: usize = sections.iter().map(|(n, _)| 2 + n.len() + 8 + 8 + 32).sum();
        let mut offset = (header.0.len() + manifest_len) as u64;
        for (name, payload) in &sections {
            header.u16(name.len() as u16);
            header.0.extend_from_slice(name.as_bytes());
            header.u64(offset);
            header.u64(payload.len() as u64);
            header.0.extend_from_slice(&Sha256::digest(payload));
            offset += payload.len() as u64;
        }
        let mut out = header.0;
        for (_, payload) in sections {
            out.extend_from_slice(&payload);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<ModelBundle> {
        let mut d = Dec::new(bytes, "header");
        if d.take(8)? != MAGIC {
            return Err(Error::Corrupt("not a .roibundle file (bad magic)".into()));
        }
        let format_version = d.u32()?;
        if format_version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion {
                found: format_version,
                supported: FORMAT_VERSION,
            });
        }
        let n = d.u32()? as usize;
        if n > SECTIONS.len() {
            return Err(Error::Corrupt(format!("{n} sections declared")));
        }
        let mut payloads: Vec<(String, &[u8])> = Vec::with_capacity(n);
        let mut expected_offset = None;
        for _ in 0..n {
            let len = d.u16()? as usize;
            let name = String::from_utf8(d.take(len)?.to_vec())
                .map_err(|_| Error::Corrupt("section name is not UTF-8".into()))?;
            let offset = d.u64()?;
            let length = d.u64()?;
            let digest = d.take(32)?;
            let start =
                usize::try_from(offset).map_err(|_| Error::Corrupt("offset overflow".into()))?;
            let end = start
                .checked_add(
                    usize::try_from(length)
                        .map_err(|_| Error::Corrupt("length overflow".into()))?,
                )
                .ok_or_else(|| Error::Corrupt("length overflow".into()))?;
            if end > bytes.len() {
                return Err(Error::Corrupt(format!("section `{name}` is truncated")));
            }
            if expected_offset.is_some_and(|o| o != start) {
                return Err(Error::Corrupt(format!(
                    "section `{name}` is not contiguous"
                )));
            }
            expected_offset = Some(end);
            let payload = &bytes[start..end];
            if Sha256::digest(payload).as_slice() != digest {
                return Err(Error::Corrupt(format!(
                    "checksum mismatch in section `{name}`"
                )));
            }
            payloads.push((name, payload));
        }
        if let Some((first, _)) = payloads.first() {
            let first_start = bytes.len() - payloads.iter().map(|(_, p)| p.len()).sum::<usize>();
            if d.pos != first_start {
                return Err(Error::Corrupt(format!(
                    "manifest does not end where `{first}` begins"
                )));
            }
        }
        if expected_offset.is_some_and(|o| o != bytes.len()) {
            return Err(Error::Corrupt("trailing bytes after last section".into()));
        }
        let names: Vec<&str> = payloads.iter().map(|(n, _)| n.as_str()).collect();
        if names.len() < 4 || names[..] != SECTIONS[..names.len()] {
            return Err(Error::Corrupt(format!("unexpected section list {names:?}")));
        }

        let mut d = Dec::new(payloads[0].1, "meta");
        let created_at = d.i64()?;
        let schema_version = d.u32()?;
        let fingerprint = Fingerprint {
            train_rows: d.u64()?,
            test_rows: d.u64()?,
            seed: d.u64()?,
        };
        d.finish()?;

        let mut d = Dec::new(payloads[1].1, "labels");
        let median_roi = d.f64()?;
        d.finish()?;

        let mut d = Dec::new(payloads[2].1, "features");
        let context = decode_context(&mut d)?;
        d.finish()?;

        let mut d = Dec::new(payloads[3].1, "reducer");
        let reducer = decode_reducer(&mut d)?;
        d.finish()?;

        let forest = match payloads.get(4) {
            Some((_, bytes)) => {
                let mut d = Dec::new(bytes, "forest");
                let f = decode_forest(&mut d)?;
                d.finish()?;
                if f.feature_names() != reducer.output_names() {
                    return Err(Error::Corrupt(
                        "forest features differ from reducer output".into(),
                    ));
                }
                Some(f)
            }
            None => None,
        };

        Ok(ModelBundle {
            format_version,
            created_at,
            schema_version,
            pipeline: FittedPipeline {
                context,
                reducer,
                median_roi,
                forest,
                fingerprint,
            },
        })
    }
}

pub fn save_bundle(bundle: &ModelBundle, path: &Path) -> Result<()> {
    write_atomic(path, &bundle.to_bytes())
}

pub fn load_bundle(path: &Path) -> Result<ModelBundle> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    ModelBundle::from_bytes(&bytes)
}

/// `SOURCE_DATE_EPOCH` if set and valid, else 0.
pub fn created_at_from_env() -> i64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(0)
}

/// Writes to a sibling temporary file, then renames over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::io(path, std::io::Error::other("path has no file name")))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        file_name.to_string_lossy(),
        std::process::id()
    ));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

#[derive(Default)]
struct Enc(Vec<u8>);

impl Enc {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn i32(&mut self, v: i32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn i64(&mut self, v: i64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn len(&mut self, n: usize) {
        self.u64(n as u64);
    }
    fn bool(&mut self, v: bool) {
        self.u8(u8::from(v));
    }
    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.0.extend_from_slice(s.as_bytes());
    }
    fn strs(&mut self, v: &[String]) {
        self.len(v.len());
        for s in v {
            self.str(s);
        }
    }
    fn f64s(&mut self, v: &[f64]) {
        self.len(v.len());
        for &x in v {
            self.f64(x);
        }
    }
}

struct Dec<'a> {
    buf: &'a [u8],
    pos: usize,
    section: &'static str,
}

impl<'a> Dec<'a> {
    fn new(buf: &'a [u8], section: &'static str) -> Self {
        Dec {
            buf,
            pos: 0,
            section,
        }
    }

    fn corrupt(&self, what: &str) -> Error {
        Error::Corrupt(format!(
            "section `{}` at byte {}: {what}",
            self.section, self.pos
        ))
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(self.corrupt("unexpected end of data"));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.array()?))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }
    fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.array()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }
    fn i64(&mut self) -> Result<i64> {
        Ok(i64::from_le_bytes(self.array()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }
    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| self.corrupt("integer overflow"))
    }

    /// A count of items each at least `min_item` bytes long.
    fn len(&mut self, min_item: usize) -> Result<usize> {
        let n = self.usize()?;
        if n.saturating_mul(min_item.max(1)) > self.buf.len() - self.pos {
            return Err(self.corrupt("length exceeds remaining data"));
        }
        Ok(n)
    }
    fn bool(&mut self) -> Result<bool> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            _ => Err(self.corrupt("invalid boolean")),
        }
    }
    fn str(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        let bytes = self.take(n)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| self.corrupt("invalid UTF-8"))
    }
    fn strs(&mut self) -> Result<Vec<String>> {
        let n = self.len(4)?;
        (0..n).map(|_| self.str()).collect()
    }
    fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.len(8)?;
        (0..n).map(|_| self.f64()).collect()
    }
    fn date(&mut self) -> Result<NaiveDate> {
        let days = self.i32()?;
        NaiveDate::from_num_days_from_ce_opt(days).ok_or_else(|| self.corrupt("invalid date"))
    }
    fn group(&mut self) -> Result<FeatureGroup> {
        let i = self.u8()?;
        FeatureGroup::from_index(i as usize).ok_or_else(|| self.corrupt("unknown feature group"))
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(self.corrupt("trailing bytes"));
        }
        Ok(())
    }
}

fn encode_context(e: &mut Enc, c: &FeatureContext) {
    e.len(c.genome_dim);
    e.strs(&c.genres);
    e.i32(c.discount.base_year);
    e.f64(c.discount.annual_rate);
    e.len(c.embedding.max_history);
    e.f64(c.embedding.fallback);
    e.len(c.histories.len());
    for h in &c.histories {
        let entries = h.sorted_entries();
        e.len(entries.len());
        for (id, list) in entries {
            e.str(id);
            e.len(list.len());
            for &(date, roi) in list {
                e.i32(date.num_days_from_ce());
                e.f64(roi);
            }
        }
    }
    e.len(c.months.len());
    for ((year, month), id, budget) in c.months.entries() {
        e.i32(year);
        e.u32(month);
        e.str(id);
        e.f64(budget);
    }
    e.len(c.imputer.medians.len());
    for (name, v) in &c.imputer.medians {
        e.str(name);
        e.f64(*v);
    }
}

fn decode_context(d: &mut Dec) -> Result<FeatureContext> {
    let genome_dim = d.usize()?;
    let genres = d.strs()?;
    let discount = DiscountConfig {
        base_year: d.i32()?,
        annual_rate: d.f64()?,
    };
    let embedding = EmbeddingConfig {
        max_history: d.usize()?,
        fallback: d.f64()?,
    };
    let n_hist = d.len(8)?;
    if n_hist != crate::features::EntityRole::ALL.len() {
        return Err(d.corrupt("wrong number of entity histories"));
    }
    let mut histories = Vec::with_capacity(n_hist);
    for _ in 0..n_hist {
        let n = d.len(12)?;
        let mut entries = std::collections::HashMap::with_capacity(n);
        for _ in 0..n {
            let id = d.str()?;
            let m = d.len(12)?;
            let list = (0..m)
                .map(|_| Ok((d.date()?, d.f64()?)))
                .collect::<Result<Vec<_>>>()?;
            entries.insert(id, list);
        }
        histories.push(EntityHistory::from_entries(entries));
    }
    let mut months = MonthLedger::default();
    let n = d.len(20)?;
    for _ in 0..n {
        let year = d.i32()?;
        let month = d.u32()?;
        let id = d.str()?;
        let budget = d.f64()?;
        months.insert(year, month, &id, budget);
    }
    let n = d.len(12)?;
    let medians = (0..n)
        .map(|_| Ok((d.str()?, d.f64()?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(FeatureContext {
        genome_dim,
        genres,
        discount,
        embedding,
        histories,
        months,
        imputer: MedianImputer { medians },
    })
}

fn encode_column(e: &mut Enc, c: &ColumnMeta) {
    e.str(&c.name);
    e.u8(c.group.index() as u8);
    e.bool(c.model_included);
}

fn decode_column(d: &mut Dec) -> Result<ColumnMeta> {
    Ok(ColumnMeta {
        name: d.str()?,
        group: d.group()?,
        model_included: d.bool()?,
    })
}

fn encode_spec(e: &mut Enc, s: &BlockSpec) {
    e.str(&s.name);
    e.str(&s.source_prefix);
    e.str(&s.output_prefix);
    e.len(s.k);
}

fn decode_spec(d: &mut Dec) -> Result<BlockSpec> {
    Ok(BlockSpec {
        name: d.str()?,
        source_prefix: d.str()?,
        output_prefix: d.str()?,
        k: d.usize()?,
    })
}

fn encode_reducer(e: &mut Enc, r: &ReducerPipeline) {
    e.len(r.config.blocks.len());
    for s in &r.config.blocks {
        encode_spec(e, s);
    }
    e.f64(r.config.prune_threshold);
    e.len(r.blocks.len());
    for b in &r.blocks {
        encode_spec(e, &b.spec);
        e.strs(&b.source_columns);
        let svd = &b.svd;
        e.str(&svd.block_name);
        e.len(svd.k);
        e.f64s(&svd.column_means);
        e.len(svd.components.nrows());
        e.len(svd.components.ncols());
        // row-major
        for i in 0..svd.components.nrows() {
            for j in 0..svd.components.ncols() {
                e.f64(svd.components[(i, j)]);
            }
        }
        e.f64s(&svd.singular_values);
    }
    e.len(r.prune.entries.len());
    for p in &r.prune.entries {
        e.str(&p.dropped);
        e.str(&p.partner);
        e.f64(p.spearman_rho);
        e.f64(p.mi_dropped);
        e.f64(p.mi_kept);
    }
    e.strs(&r.input_columns);
    e.len(r.output_columns.len());
    for c in &r.output_columns {
        encode_column(e, c);
    }
    e.bool(r.fitted);
}

fn decode_reducer(d: &mut Dec) -> Result<ReducerPipeline> {
    let n = d.len(20)?;
    let blocks_cfg = (0..n).map(|_| decode_spec(d)).collect::<Result<Vec<_>>>()?;
    let config = ReducerConfig {
        blocks: blocks_cfg,
        prune_threshold: d.f64()?,
    };
    let n = d.len(20)?;
    let mut blocks = Vec::with_capacity(n);
    for _ in 0..n {
        let spec = decode_spec(d)?;
        let source_columns = d.strs()?;
        let block_name = d.str()?;
        let k = d.usize()?;
        let column_means = d.f64s()?;
        let rows = d.usize()?;
        let cols = d.usize()?;
        if rows != k || cols != column_means.len() || cols != source_columns.len() {
            return Err(d.corrupt("SVD shape does not match its block"));
        }
        let count = rows
            .checked_mul(cols)
            .ok_or_else(|| d.corrupt("SVD shape overflow"))?;
        if count.saturating_mul(8) > d.buf.len() - d.pos {
            return Err(d.corrupt("SVD components truncated"));
        }
        let values = (0..count).map(|_| d.f64()).collect::<Result<Vec<_>>>()?;
        let components = DMatrix::from_row_slice(rows, cols, &values);
        let singular_values = d.f64s()?;
        blocks.push(FittedBlock {
            spec,
            source_columns,
            svd: SvdModel {
                block_name,
                column_means,
                components,
                singular_values,
                k,
            },
        });
    }
    let n = d.len(32)?;
    let entries = (0..n)
        .map(|_| {
            Ok(PruneEntry {
                dropped: d.str()?,
                partner: d.str()?,
                spearman_rho: d.f64()?,
                mi_dropped: d.f64()?,
                mi_kept: d.f64()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let input_columns = d.strs()?;
    let n = d.len(6)?;
    let output_columns = (0..n)
        .map(|_| decode_column(d))
        .collect::<Result<Vec<_>>>()?;
    let fitted = d.bool()?;
    Ok(ReducerPipeline {
        config,
        blocks,
        prune: PruneReport { entries },
        input_columns,
        output_columns,
        fitted,
    })
}

const TAG_SPLIT: u8 = 0;
const TAG_LEAF: u8 = 1;

fn encode_forest(e: &mut Enc, f: &Forest) {
    let c = f.config();
    e.len(c.n_estimators);
    e.len(c.max_features);
    e.len(c.max_depth);
    e.f64(c.min_samples_split);
    e.len(c.min_samples_leaf);
    e.bool(c.bootstrap);
    e.u64(c.seed);
    e.strs(f.feature_names());
    e.len(f.trees().len());
    for t in f.trees() {
        e.len(t.nodes().len());
        for node in t.nodes() {
            match *node {
                Node::Split {
                    feature,
                    threshold,
                    right,
                } => {
                    e.u8(TAG_SPLIT);
                    e.len(feature);
                    e.f64(threshold);
                    e.len(right);
                }
                Node::Leaf {
                    positive_fraction,
                    sample_count,
                } => {
                    e.u8(TAG_LEAF);
                    e.f64(positive_fraction);
                    e.len(sample_count);
                }
            }
        }
    }
}

fn decode_forest(d: &mut Dec) -> Result<Forest> {
    let config = RfConfig {
        n_estimators: d.usize()?,
        max_features: d.usize()?,
        max_depth: d.usize()?,
        min_samples_split: d.f64()?,
        min_samples_leaf: d.usize()?,
        bootstrap: d.bool()?,
        seed: d.u64()?,
    };
    let names = d.strs()?;
    let n_trees = d.len(8)?;
    let mut trees = Vec::with_capacity(n_trees);
    for _ in 0..n_trees {
        let n = d.len(17)?;
        let mut nodes = Vec::with_capacity(n);
        for _ in 0..n {
            nodes.push(match d.u8()? {
                TAG_SPLIT => Node::Split {
                    feature: d.usize()?,
                    threshold: d.f64()?,
                    right: d.usize()?,
                },
                TAG_LEAF => Node::Leaf {
                    positive_fraction: d.f64()?,
                    sample_count: d.usize()?,
                },
                _ => return Err(d.corrupt("unknown node tag")),
            });
        }
        trees.push(Tree::from_nodes(nodes)?);
    }
    Forest::from_parts(trees, config, names)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{prepare, PipelineConfig, Prepared};
    use crate::synth::{generate, SynthConfig};
    use rand::Rng;

    fn prepared() -> Prepared {
        let raw = generate(&SynthConfig {
            n: 700,
            seed: 21,
            ..SynthConfig::default()
        })
        .unwrap();
        prepare(&raw, &PipelineConfig::default()).unwrap()
    }

    fn bundle(p: &Prepared) -> ModelBundle {
        let rf = RfConfig {
            n_estimators: 25,
            ..RfConfig::default()
        };
        ModelBundle::new(p.fitted(Some(p.train(&rf).unwrap()), 9), 1_700_000_000)
    }

    #[test]
    fn round_trip_is_byte_identical_and_predicts_the_same() {
        let p = prepared();
        let b = bundle(&p);
        let bytes = b.to_bytes();
        let back = ModelBundle::from_bytes(&bytes).unwrap();
        assert_eq!(back, b);
        assert_eq!(back.to_bytes(), bytes);
        assert!(back.pipeline.reducer.fitted);
        assert_eq!(back.pipeline.forest().unwrap().trees().len(), 25);
        assert_eq!(
            back.pipeline.predict_proba(&p.split.test).unwrap(),
            b.pipeline.predict_proba(&p.split.test).unwrap()
        );
    }

    #[test]
    fn random_rows_predict_identically_after_reload() {
        let p = prepared();
        let b = bundle(&p);
        let back = ModelBundle::from_bytes(&b.to_bytes()).unwrap();
        let mut rng = crate::rng::stream(3, 0);
        let pool: Vec<_> = p
            .split
            .train
            .records
            .iter()
            .chain(&p.split.test.records)
            .collect();
        let rows: Vec<_> = (0..100)
            .map(|_| {
                let mut r = pool[rng.random_range(0..pool.len())].raw.clone();
                r.budget *= rng.random_range(0.5..2.0);
                r.is_collection = rng.random_bool(0.5);
                r
            })
            .collect();
        assert_eq!(
            back.pipeline.predict_rows(&rows).unwrap(),
            b.pipeline.predict_rows(&rows).unwrap()
        );
    }

    #[test]
    fn bundle_without_forest() {
        let p = prepared();
        let b = ModelBundle::new(p.fitted(None, 0), 0);
        let back = ModelBundle::from_bytes(&b.to_bytes()).unwrap();
        assert!(back.pipeline.forest.is_none());
        assert_eq!(back, b);
    }

    #[test]
    fn version_bump_is_rejected() {
        let p = prepared();
        let mut bytes = bundle(&p).to_bytes();
        bytes[8..12].copy_from_slice(&2u32.to_le_bytes());
        assert!(matches!(
            ModelBundle::from_bytes(&bytes),
            Err(Error::UnsupportedVersion {
                found: 2,
                supported: 1
            })
        ));
    }

    #[test]
    fn truncation_and_bit_flips_are_corruption() {
        let p = prepared();
        let bytes = bundle(&p).to_bytes();
        for cut in [0, 5, 12, 40, bytes.len() / 2, bytes.len() - 1] {
            assert!(
                matches!(
                    ModelBundle::from_bytes(&bytes[..cut]),
                    Err(Error::Corrupt(_))
                ),
                "cut {cut}"
            );
        }
        let mut flipped = bytes.clone();
        let last = flipped.len() - 3;
        flipped[last] ^= 0x40;
        assert!(matches!(
            ModelBundle::from_bytes(&flipped),
            Err(Error::Corrupt(_))
        ));
        let mut extra = bytes;
        extra.push(0);
        assert!(matches!(
            ModelBundle::from_bytes(&extra),
            Err(Error::Corrupt(_))
        ));
    }

    #[test]
    fn atomic_save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.roibundle");
        let p = prepared();
        let b = bundle(&p);
        save_bundle(&b, &path).unwrap();
        assert_eq!(load_bundle(&path).unwrap(), b);
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
        assert!(save_bundle(&b, &dir.path().join("missing/m.roibundle")).is_err());
    }
}
