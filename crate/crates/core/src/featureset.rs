//! Feature container and its on-disk encodings.
//!
//! A [`FeatureSet`] holds `n` feature vectors of width `d` (single precision,
//! row-major), optional integer labels in `[0, C)`, optional `n × C` logits,
//! optional class names and a free-form source tag.
//!
//! # FSET1 layout
//!
//! ```text
//! offset 0   5 bytes   ASCII "FSET1"
//! offset 5   u32 LE    length L of the JSON meta block
//! offset 9   L bytes   UTF-8 JSON meta (see `Meta`)
//! then       n*d*4     features, f32 LE, row-major
//! then       n*4       labels, i32 LE            (only when has_labels)
//! then       n*C*4     logits, f32 LE, row-major (only when has_logits)
//! ```
//!
//! The meta block declares the byte size of every section; the declared sizes
//! must add up to exactly the bytes that follow it. Absence of a section
//! encodes absence of the field, there is no sentinel label.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 5] = b"FSET1";
const PREFIX_LEN: usize = MAGIC.len() + 4;

/// Immutable table of feature vectors with optional labels and logits.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    n_samples: usize,
    n_features: usize,
    n_classes: usize,
    features: Vec<f32>,
    labels: Option<Vec<i32>>,
    logits: Option<Vec<f32>>,
    class_names: Option<Vec<String>>,
    source_tag: String,
}

impl FeatureSet {
    /// Builds a set from a row-major feature buffer of `n × n_features` values.
    pub fn new(n_features: usize, n_classes: usize, features: Vec<f32>) -> Result<Self> {
        if n_features == 0 {
            return Err(Error::DimZero);
        }
        if n_classes == 0 {
            return Err(Error::InvalidFeatureSet("n_classes must be at least 1".into()));
        }
        if features.is_empty() || !features.len().is_multiple_of(n_features) {
            return Err(Error::InvalidFeatureSet(format!(
                "{} feature values do not form whole rows of width {n_features}",
                features.len()
            )));
        }
        check_finite("features", &features, n_features, 0)?;
        Ok(FeatureSet {
            n_samples: features.len() / n_features,
            n_features,
            n_classes,
            features,
            labels: None,
            logits: None,
            class_names: None,
            source_tag: String::new(),
        })
    }

    /// Builds a set from equally sized rows.
    pub fn from_rows(n_classes: usize, rows: &[Vec<f32>]) -> Result<Self> {
        let d = rows.first().map(Vec::len).unwrap_or(0);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != d) {
            return Err(Error::InvalidFeatureSet(format!(
                "row {i} has {} values, expected {d}",
                r.len()
            )));
        }
        if rows.is_empty() {
            return Err(Error::InvalidFeatureSet("no rows".into()));
        }
        Self::new(d, n_classes, rows.concat())
    }

    pub fn with_labels(mut self, labels: Vec<i32>) -> Result<Self> {
        if labels.len() != self.n_samples {
            return Err(Error::InvalidFeatureSet(format!(
                "{} labels for {} samples",
                labels.len(),
                self.n_samples
            )));
        }
        check_labels(&labels, self.n_classes)?;
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn with_logits(mut self, logits: Vec<f32>) -> Result<Self> {
        if logits.len() != self.n_samples * self.n_classes {
            return Err(Error::InvalidFeatureSet(format!(
                "{} logit values, expected {} × {}",
                logits.len(),
                self.n_samples,
                self.n_classes
            )));
        }
        check_finite("logits", &logits, self.n_classes, 0)?;
        self.logits = Some(logits);
        Ok(self)
    }

    pub fn with_class_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_classes {
            return Err(Error::InvalidFeatureSet(format!(
                "{} class names for {} classes",
                names.len(),
                self.n_classes
            )));
        }
        if let Some(i) = names.iter().position(String::is_empty) {
            return Err(Error::InvalidFeatureSet(format!("class name {i} is empty")));
        }
        self.class_names = Some(names);
        Ok(self)
    }

    pub fn with_source_tag(mut self, tag: impl Into<String>) -> Self {
        self.source_tag = tag.into();
        self
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn features(&self) -> &[f32] {
        &self.features
    }

    pub fn labels(&self) -> Option<&[i32]> {
        self.labels.as_deref()
    }

    pub fn logits(&self) -> Option<&[f32]> {
        self.logits.as_deref()
    }

    pub fn class_names(&self) -> Option<&[String]> {
        self.class_names.as_deref()
    }

    pub fn source_tag(&self) -> &str {
        &self.source_tag
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f32> {
        self.features.chunks_exact(self.n_features)
    }

    pub fn logits_row(&self, i: usize) -> Option<&[f32]> {
        self.logits
            .as_ref()
            .map(|l| &l[i * self.n_classes..(i + 1) * self.n_classes])
    }

    /// Encodes the set as an FSET1 byte buffer.
    pub fn to_bytes(&self) -> Vec<u8> {
        let meta = Meta::describe(self);
        let json = serde_json::to_vec(&meta).expect("meta serializes");
        let mut out = Vec::with_capacity(PREFIX_LEN + json.len() + meta.payload_len() as usize);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(json.len() as u32).to_le_bytes());
        out.extend_from_slice(&json);
        for v in &self.features {
            out.extend_from_slice(&v.to_le_bytes());
        }
        if let Some(labels) = &self.labels {
            for v in labels {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        if let Some(logits) = &self.logits {
            for v in logits {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    /// Decodes an FSET1 byte buffer. Never returns a partially filled set.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let len = bytes.len() as u64;
        let head = &bytes[..bytes.len().min(MAGIC.len())];
        if head != &MAGIC[..head.len()] {
            return Err(Error::BadMagic { found: head.to_vec() });
        }
        if bytes.len() < PREFIX_LEN {
            return Err(Error::TruncatedFile {
                offset: head.len() as u64,
                needed: (PREFIX_LEN - head.len()) as u64,
                len,
            });
        }
        let header_len = u32::from_le_bytes(bytes[5..9].try_into().unwrap()) as u64;
        let payload_start = PREFIX_LEN as u64 + header_len;
        if payload_start > len {
            return Err(Error::TruncatedFile {
                offset: PREFIX_LEN as u64,
                needed: header_len,
                len,
            });
        }
        let meta_bytes = &bytes[PREFIX_LEN..payload_start as usize];
        let meta: Meta = serde_json::from_slice(meta_bytes).map_err(|e| Error::MetaSectionMismatch {
            offset: PREFIX_LEN as u64,
            detail: format!("meta is not a valid header object: {e}"),
        })?;
        meta.validate(payload_start, len - payload_start)?;

        let n = meta.n_samples;
        let d = meta.n_features;
        let c = meta.n_classes;
        let mut cursor = payload_start as usize;

        let features = read_f32s(bytes, cursor, n * d);
        check_finite("features", &features, d, cursor as u64)?;
        cursor += n * d * 4;

        let labels = if meta.has_labels {
            let labels: Vec<i32> = bytes[cursor..cursor + n * 4]
                .chunks_exact(4)
                .map(|b| i32::from_le_bytes(b.try_into().unwrap()))
                .collect();
            check_labels(&labels, c)?;
            cursor += n * 4;
            Some(labels)
        } else {
            None
        };

        let logits = if meta.has_logits {
            let logits = read_f32s(bytes, cursor, n * c);
            check_finite("logits", &logits, c, cursor as u64)?;
            Some(logits)
        } else {
            None
        };

        if let Some(names) = &meta.class_names {
            if let Some(i) = names.iter().position(String::is_empty) {
                return Err(Error::MetaSectionMismatch {
                    offset: PREFIX_LEN as u64,
                    detail: format!("class name {i} is empty"),
                });
            }
        }

        Ok(FeatureSet {
            n_samples: n,
            n_features: d,
            n_classes: c,
            features,
            labels,
            logits,
            class_names: meta.class_names,
            source_tag: meta.source_tag,
        })
    }
}

fn read_f32s(bytes: &[u8], start: usize, count: usize) -> Vec<f32> {
    bytes[start..start + count * 4]
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect()
}

fn check_finite(section: &'static str, values: &[f32], width: usize, base: u64) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFiniteValue {
            section,
            row: i / width,
            col: i % width,
            offset: base + 4 * i as u64,
        }),
        None => Ok(()),
    }
}

fn check_labels(labels: &[i32], n_classes: usize) -> Result<()> {
    match labels.iter().position(|&l| l < 0 || l as usize >= n_classes) {
        Some(row) => Err(Error::LabelOutOfRange {
            row,
            label: labels[row] as i64,
            n_classes,
        }),
        None => Ok(()),
    }
}

/// JSON meta block. Field order is the serialization order.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Meta {
    n_samples: usize,
    n_features: usize,
    n_classes: usize,
    has_labels: bool,
    has_logits: bool,
    dtype: String,
    label_dtype: String,
    layout: String,
    endianness: String,
    features_bytes: u64,
    labels_bytes: u64,
    logits_bytes: u64,
    class_names: Option<Vec<String>>,
    source_tag: String,
}

impl Meta {
    fn describe(fs: &FeatureSet) -> Self {
        let n = fs.n_samples as u64;
        Meta {
            n_samples: fs.n_samples,
            n_features: fs.n_features,
            n_classes: fs.n_classes,
            has_labels: fs.labels.is_some(),
            has_logits: fs.logits.is_some(),
            dtype: "f32".into(),
            label_dtype: "i32".into(),
            layout: "row-major".into(),
            endianness: "little".into(),
            features_bytes: n * fs.n_features as u64 * 4,
            labels_bytes: if fs.labels.is_some() { n * 4 } else { 0 },
            logits_bytes: if fs.logits.is_some() {
                n * fs.n_classes as u64 * 4
            } else {
                0
            },
            class_names: fs.class_names.clone(),
            source_tag: fs.source_tag.clone(),
        }
    }

    fn payload_len(&self) -> u64 {
        self.features_bytes + self.labels_bytes + self.logits_bytes
    }

    fn validate(&self, payload_offset: u64, remaining: u64) -> Result<()> {
        let bad = |detail: String| Error::MetaSectionMismatch {
            offset: PREFIX_LEN as u64,
            detail,
        };
        if self.dtype != "f32" || self.label_dtype != "i32" {
            return Err(bad(format!(
                "unsupported dtype {:?}/{:?}",
                self.dtype, self.label_dtype
            )));
        }
        if self.layout != "row-major" {
            return Err(bad(format!("unsupported layout {:?}", self.layout)));
        }
        if self.endianness != "little" {
            return Err(bad(format!("unsupported endianness {:?}", self.endianness)));
        }
        if self.n_samples == 0 || self.n_features == 0 || self.n_classes == 0 {
            return Err(bad("n_samples, n_features and n_classes must be at least 1".into()));
        }
        if let Some(names) = &self.class_names {
            if names.len() != self.n_classes {
                return Err(bad(format!(
                    "{} class names for {} classes",
                    names.len(),
                    self.n_classes
                )));
            }
        }
        let n = self.n_samples as u64;
        let expect = |rows: u64, width: u64, present: bool| -> Option<u64> {
            if present {
                rows.checked_mul(width)?.checked_mul(4)
            } else {
                Some(0)
            }
        };
        let sections = [
            ("features", self.features_bytes, expect(n, self.n_features as u64, true)),
            ("labels", self.labels_bytes, expect(n, 1, self.has_labels)),
            (
                "logits",
                self.logits_bytes,
                expect(n, self.n_classes as u64, self.has_logits),
            ),
        ];
        for (name, declared, expected) in sections {
            if Some(declared) != expected {
                return Err(bad(format!(
                    "{name} section declares {declared} bytes but counts imply {expected:?}"
                )));
            }
        }
        let total = self
            .features_bytes
            .checked_add(self.labels_bytes)
            .and_then(|t| t.checked_add(self.logits_bytes))
            .ok_or_else(|| bad("section sizes overflow".into()))?;
        if total > remaining {
            return Err(Error::TruncatedFile {
                offset: payload_offset,
                needed: total,
                len: payload_offset + remaining,
            });
        }
        if total != remaining {
            return Err(Error::MetaSectionMismatch {
                offset: payload_offset,
                detail: format!("sections declare {total} bytes, {remaining} bytes follow the meta block"),
            });
        }
        Ok(())
    }
}

pub fn load_fset(path: impl AsRef<Path>) -> Result<FeatureSet> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    FeatureSet::from_bytes(&bytes)
}

pub fn save_fset(set: &FeatureSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, set.to_bytes()).map_err(|e| Error::io(path, e))
}

/// Reads a CSV whose header names columns `feat_<j>`, optionally `label`,
/// and optionally `logit_<c>` for every class.
pub fn import_csv(path: impl AsRef<Path>, n_classes: usize) -> Result<FeatureSet> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, n_classes)
}

pub fn read_csv<R: std::io::Read>(reader: R, n_classes: usize) -> Result<FeatureSet> {
    if n_classes == 0 {
        return Err(Error::InvalidFeatureSet("n_classes must be at least 1".into()));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| Error::HeaderMismatch(e.to_string()))?.clone();
    let columns = ColumnMap::parse(&header, n_classes)?;
    let d = columns.features.len();

    let mut features = Vec::new();
    let mut labels = columns.label.map(|_| Vec::new());
    let mut logits = columns.logits.as_ref().map(|_| Vec::new());
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::HeaderMismatch(format!("row {row}: {e}")))?;
        if record.len() != header.len() {
            return Err(Error::RaggedRow {
                row,
                expected: header.len(),
                found: record.len(),
            });
        }
        for &col in &columns.features {
            features.push(parse_real(&record[col], row, col)?);
        }
        if let (Some(col), Some(labels)) = (columns.label, labels.as_mut()) {
            let raw = &record[col];
            let label: i64 = raw.parse().map_err(|_| Error::UnparsableNumber {
                row,
                col,
                value: raw.to_string(),
            })?;
            if label < 0 || label >= n_classes as i64 {
                return Err(Error::LabelOutOfRange { row, label, n_classes });
            }
            labels.push(label as i32);
        }
        if let (Some(cols), Some(logits)) = (&columns.logits, logits.as_mut()) {
            for &col in cols {
                logits.push(parse_real(&record[col], row, col)?);
            }
        }
    }
    if features.is_empty() {
        return Err(Error::InvalidFeatureSet("csv has no data rows".into()));
    }

    let mut set = FeatureSet::new(d, n_classes, features)?;
    if let Some(labels) = labels {
        set = set.with_labels(labels)?;
    }
    if let Some(logits) = logits {
        set = set.with_logits(logits)?;
    }
    Ok(set)
}

fn parse_real(raw: &str, row: usize, col: usize) -> Result<f32> {
    match raw.parse::<f32>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::UnparsableNumber {
            row,
            col,
            value: raw.to_string(),
        }),
    }
}

struct ColumnMap {
    features: Vec<usize>,
    label: Option<usize>,
    logits: Option<Vec<usize>>,
}

impl ColumnMap {
    fn parse(header: &csv::StringRecord, n_classes: usize) -> Result<Self> {
        let mut features: Vec<Option<usize>> = Vec::new();
        let mut logits: Vec<Option<usize>> = Vec::new();
        let mut label = None;
        let place = |slots: &mut Vec<Option<usize>>, idx: usize, col: usize, name: &str| -> Result<()> {
            if slots.len() <= idx {
                slots.resize(idx + 1, None);
            }
            if slots[idx].replace(col).is_some() {
                return Err(Error::HeaderMismatch(format!("duplicate column {name:?}")));
            }
            Ok(())
        };
        for (col, name) in header.iter().enumerate() {
            if name == "label" {
                if label.replace(col).is_some() {
                    return Err(Error::HeaderMismatch("duplicate column \"label\"".into()));
                }
            } else if let Some(idx) = indexed(name, "feat_") {
                place(&mut features, idx, col, name)?;
            } else if let Some(idx) = indexed(name, "logit_") {
                place(&mut logits, idx, col, name)?;
            } else {
                return Err(Error::HeaderMismatch(format!("unexpected column {name:?}")));
            }
        }
        let complete = |slots: Vec<Option<usize>>, prefix: &str| -> Result<Vec<usize>> {
            slots
                .into_iter()
                .enumerate()
                .map(|(i, s)| s.ok_or_else(|| Error::HeaderMismatch(format!("missing column {prefix}{i}"))))
                .collect()
        };
        let features = complete(features, "feat_")?;
        if features.is_empty() {
            return Err(Error::HeaderMismatch("no feat_<j> columns".into()));
        }
        let logits = if logits.is_empty() {
            None
        } else {
            let cols = complete(logits, "logit_")?;
            if cols.len() != n_classes {
                return Err(Error::HeaderMismatch(format!(
                    "{} logit columns for {n_classes} classes",
                    cols.len()
                )));
            }
            Some(cols)
        };
        Ok(ColumnMap {
            features,
            label,
            logits,
        })
    }
}

fn indexed(name: &str, prefix: &str) -> Option<usize> {
    let digits = name.strip_prefix(prefix)?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) || (digits.len() > 1 && digits.starts_with('0'))
    {
        return None;
    }
    digits.parse().ok()
}

pub fn export_csv(set: &FeatureSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_csv(set, &mut buf).map_err(|e| Error::io(path, e))?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Writes the CSV dialect accepted by [`read_csv`]. Reals use the shortest
/// representation that parses back to the same `f32`.
pub fn write_csv<W: Write>(set: &FeatureSet, mut out: W) -> std::io::Result<()> {
    let mut header: Vec<String> = (0..set.n_features).map(|j| format!("feat_{j}")).collect();
    if set.labels.is_some() {
        header.push("label".into());
    }
    if set.logits.is_some() {
        header.extend((0..set.n_classes).map(|c| format!("logit_{c}")));
    }
    writeln!(out, "{}", header.join(","))?;
    for i in 0..set.n_samples {
        let mut fields: Vec<String> = set.row(i).iter().map(|v| v.to_string()).collect();
        if let Some(labels) = &set.labels {
            fields.push(labels[i].to_string());
        }
        if let Some(l) = set.logits_row(i) {
            fields.extend(l.iter().map(|v| v.to_string()));
        }
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}
