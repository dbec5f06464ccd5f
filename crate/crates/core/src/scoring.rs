//! Per-sample in-distribution scores.
//!
//! Every score is oriented so that a higher value means "more
//! in-distribution"; a sample is declared OOD when its score is at or below
//! the operating threshold (see [`crate::metrics::decide`]). Baselines whose
//! usual convention is lower-is-ID (entropy, k-NN distance) are negated.
//!
//! All arithmetic is `f64` with a fixed reduction order (sequential over
//! dimensions, then classes), so a score does not depend on how rows are
//! spread across threads.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::centroid::CentroidModel;
use crate::error::{Error, Result};
use crate::featureset::FeatureSet;

/// Default neighbour rank for the k-NN baseline, capped by the train size.
pub const DEFAULT_KNN_K: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ncdd,
    Msp,
    MaxLogit,
    Energy,
    Entropy,
    Knn,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Ncdd,
        Method::Msp,
        Method::MaxLogit,
        Method::Energy,
        Method::Entropy,
        Method::Knn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ncdd => "ncdd",
            Method::Msp => "msp",
            Method::MaxLogit => "maxlogit",
            Method::Energy => "energy",
            Method::Entropy => "entropy",
            Method::Knn => "knn",
        }
    }

    pub fn needs_logits(self) -> bool {
        matches!(self, Method::Msp | Method::MaxLogit | Method::Energy | Method::Entropy)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

/// Which distance terms the centroid score combines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// `α·D_far − β·D_near` with log-L1-norm weights.
    Weighted,
    /// `D_far − D_near`.
    UnweightedDiff,
    /// `D_far`.
    NonnearestOnly,
    /// `−D_near`.
    NegNearestOnly,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Weighted,
        Variant::UnweightedDiff,
        Variant::NonnearestOnly,
        Variant::NegNearestOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Weighted => "weighted",
            Variant::UnweightedDiff => "unweighted_diff",
            Variant::NonnearestOnly => "nonnearest_only",
            Variant::NegNearestOnly => "neg_nearest_only",
        }
    }

    fn needs_far_sum(self) -> bool {
        !matches!(self, Variant::NegNearestOnly)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == key)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown variant {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    #[default]
    Natural,
    Base10,
}

impl LogBase {
    fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Base10 => x.log10(),
        }
    }

    fn log_ten(self) -> f64 {
        match self {
            LogBase::Natural => std::f64::consts::LN_10,
            LogBase::Base10 => 1.0,
        }
    }
}

impl FromStr for LogBase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "natural" | "e" | "ln" => Ok(LogBase::Natural),
            "base10" | "10" | "log10" => Ok(LogBase::Base10),
            _ => Err(Error::InvalidConfig(format!("unknown log base {s:?}"))),
        }
    }
}

/// Method selector plus the parameters each method reads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreConfig {
    pub method: Method,
    pub variant: Variant,
    pub alpha1: f64,
    pub alpha2: f64,
    pub log_base: LogBase,
    /// `None` means `min(DEFAULT_KNN_K, n_train)`.
    pub k: Option<usize>,
    pub temperature: f64,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig {
            method: Method::Ncdd,
            variant: Variant::Weighted,
            alpha1: -1.0,
            alpha2: 0.0,
            log_base: LogBase::Natural,
            k: None,
            temperature: 1.0,
        }
    }
}

impl ScoreConfig {
    pub fn method(method: Method) -> Self {
        ScoreConfig {
            method,
            ..Default::default()
        }
    }

    pub fn ncdd(variant: Variant, alpha1: f64, alpha2: f64) -> Self {
        ScoreConfig {
            method: Method::Ncdd,
            variant,
            alpha1,
            alpha2,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "temperature must be positive and finite, got {}",
                self.temperature
            )));
        }
        if !self.alpha1.is_finite() || !self.alpha2.is_finite() {
            return Err(Error::InvalidConfig("alpha1/alpha2 must be finite".into()));
        }
        if self.k == Some(0) {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        Ok(())
    }

    pub fn resolved_k(&self, n_train: usize) -> usize {
        self.k.unwrap_or(DEFAULT_KNN_K.min(n_train))
    }
}

/// Euclidean distance from `z` to every class centroid.
pub fn distances_to_centroids<T: Copy + Into<f64>>(z: &[T], model: &CentroidModel) -> Result<Vec<f64>> {
    model.check_dim(z.len())?;
    Ok(model.centroids().iter().map(|mu| euclidean(z, mu)).collect())
}

fn euclidean<T: Copy + Into<f64>>(z: &[T], mu: &[f64]) -> f64 {
    let mut acc = 0.0f64;
    for (&a, &b) in z.iter().zip(mu) {
        let diff = a.into() - b;
        acc += diff * diff;
    }
    acc.sqrt()
}

/// Index and value of the smallest distance, first index on exact ties.
pub fn nearest(distances: &[f64]) -> (usize, f64) {
    let mut best = (0, distances[0]);
    for (i, &d) in distances.iter().enumerate().skip(1) {
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

pub fn l1_norm<T: Copy + Into<f64>>(z: &[T]) -> f64 {
    z.iter().fold(0.0, |acc, &v| acc + v.into().abs())
}

/// Centroid score from precomputed centroid distances and the feature L1 norm.
pub fn ncdd_from_distances(distances: &[f64], l1: f64, cfg: &ScoreConfig) -> Result<f64> {
    let variant = cfg.variant;
    if variant.needs_far_sum() && distances.len() < 2 {
        return Err(Error::SingleClassNonNearest);
    }
    let (near_idx, near) = nearest(distances);
    let far: f64 = distances
        .iter()
        .enumerate()
        .filter(|&(c, _)| c != near_idx)
        .fold(0.0, |acc, (_, &d)| acc + d);
    Ok(match variant {
        Variant::Weighted => {
            if l1 == 0.0 {
                return Err(Error::ZeroL1Norm);
            }
            let log_l1 = cfg.log_base.log(l1);
            let alpha = log_l1 - cfg.alpha1 * cfg.log_base.log_ten();
            let beta = log_l1 - cfg.alpha2 * cfg.log_base.log_ten();
            alpha * far - beta * near
        }
        Variant::UnweightedDiff => far - near,
        Variant::NonnearestOnly => far,
        Variant::NegNearestOnly => -near,
    })
}

/// Nearest centroid distance deficit of one feature vector.
pub fn ncdd_score<T: Copy + Into<f64>>(z: &[T], model: &CentroidModel, cfg: &ScoreConfig) -> Result<f64> {
    let distances = distances_to_centroids(z, model)?;
    ncdd_from_distances(&distances, l1_norm(z), cfg)
}

fn scaled_logits<T: Copy + Into<f64>>(logits: &[T], temperature: f64) -> Result<Vec<f64>> {
    if logits.is_empty() {
        return Err(Error::MissingLogits);
    }
    Ok(logits.iter().map(|&v| v.into() / temperature).collect())
}

/// Returns `(max, log Σ exp(x − max))`.
fn shifted_logsumexp(x: &[f64]) -> (f64, f64) {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = x.iter().fold(0.0, |acc, &v| acc + (v - max).exp());
    (max, sum.ln())
}

/// Maximum softmax probability of `logits / T`.
pub fn msp_score<T: Copy + Into<f64>>(logits: &[T], cfg: &ScoreConfig) -> Result<f64> {
    let x = scaled_logits(logits, cfg.temperature)?;
    let (_, lse) = shifted_logsumexp(&x);
    // the max entry contributes exp(0) = 1 to the shifted sum
    Ok((-lse).exp())
}

pub fn maxlogit_score<T: Copy + Into<f64>>(logits: &[T]) -> Result<f64> {
    if logits.is_empty() {
        return Err(Error::MissingLogits);
    }
    Ok(logits.iter().map(|&v| v.into()).fold(f64::NEG_INFINITY, f64::max))
}

/// `T · logsumexp(logits / T)`.
pub fn energy_score<T: Copy + Into<f64>>(logits: &[T], cfg: &ScoreConfig) -> Result<f64> {
    let x = scaled_logits(logits, cfg.temperature)?;
    let (max, lse) = shifted_logsumexp(&x);
    Ok(cfg.temperature * (max + lse))
}

/// Negative Shannon entropy (nats) of `softmax(logits / T)`.
pub fn entropy_score<T: Copy + Into<f64>>(logits: &[T], cfg: &ScoreConfig) -> Result<f64> {
    let x = scaled_logits(logits, cfg.temperature)?;
    let (max, lse) = shifted_logsumexp(&x);
    Ok(x.iter().fold(0.0, |acc, &v| {
        let log_p = v - max - lse;
        let p = log_p.exp();
        if p == 0.0 {
            acc
        } else {
            acc + p * log_p
        }
    }))
}

/// Scales `v` to unit L2 norm. Zero vectors come back unchanged with the
/// flag set.
pub fn normalize_l2<T: Copy + Into<f64>>(v: &[T]) -> (Vec<f64>, bool) {
    let v: Vec<f64> = v.iter().map(|&x| x.into()).collect();
    let norm = v.iter().fold(0.0, |acc, &x| acc + x * x).sqrt();
    if norm == 0.0 {
        (v, true)
    } else {
        (v.into_iter().map(|x| x / norm).collect(), false)
    }
}

/// L2-normalized training rows for the exact k-NN baseline.
#[derive(Debug, Clone)]
pub struct KnnIndex {
    n_features: usize,
    rows: Vec<f64>,
}

impl KnnIndex {
    pub fn new<T: Copy + Into<f64>>(features: &[T], n_features: usize) -> Result<Self> {
        if n_features == 0 {
            return Err(Error::DimZero);
        }
        if features.is_empty() {
            return Err(Error::EmptyTrainSet);
        }
        if !features.len().is_multiple_of(n_features) {
            return Err(Error::DimensionMismatch {
                expected: n_features,
                found: features.len() % n_features,
            });
        }
        let rows = features
            .chunks_exact(n_features)
            .flat_map(|r| normalize_l2(r).0)
            .collect();
        Ok(KnnIndex { n_features, rows })
    }

    pub fn from_featureset(train: &FeatureSet) -> Result<Self> {
        Self::new(train.features(), train.n_features())
    }

    pub fn len(&self) -> usize {
        self.rows.len() / self.n_features
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Negative distance from the normalized query to its k-th nearest
    /// normalized training row, plus the zero-query flag.
    pub fn query<T: Copy + Into<f64>>(&self, z: &[T], k: usize) -> Result<(f64, bool)> {
        if z.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: z.len(),
            });
        }
        let n = self.len();
        if k == 0 || k > n {
            return Err(Error::KTooLarge { k, n_train: n });
        }
        let (q, zero) = normalize_l2(z);
        let mut dist: Vec<(f64, usize)> = self
            .rows
            .chunks_exact(self.n_features)
            .enumerate()
            .map(|(i, r)| (euclidean(&q, r), i))
            .collect();
        let (_, kth, _) = dist.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        Ok((-kth.0, zero))
    }
}

/// Negative k-th nearest neighbour distance in L2-normalized feature space.
pub fn knn_score<T: Copy + Into<f64>>(z: &[T], index: &KnnIndex, cfg: &ScoreConfig) -> Result<f64> {
    if index.is_empty() {
        return Err(Error::EmptyTrainSet);
    }
    Ok(index.query(z, cfg.resolved_k(index.len()))?.0)
}

/// Scores for every row of a test set, with the config that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector {
    pub scores: Vec<f64>,
    pub config: ScoreConfig,
    #[serde(default)]
    pub model_fingerprint: Option<String>,
    /// Rows whose feature vector had zero norm (k-NN leaves them unnormalized).
    #[serde(default)]
    pub flagged_rows: Vec<usize>,
}

/// Per-row scorer with method inputs resolved once up front.
pub struct Scorer<'a> {
    cfg: ScoreConfig,
    model: Option<&'a CentroidModel>,
    knn: Option<(KnnIndex, usize)>,
}

impl<'a> Scorer<'a> {
    pub fn new(cfg: &ScoreConfig, model: Option<&'a CentroidModel>, train: Option<&FeatureSet>) -> Result<Self> {
        cfg.validate()?;
        let knn = if cfg.method == Method::Knn {
            let train = train.ok_or(Error::MissingTrainSet)?;
            let index = KnnIndex::from_featureset(train)?;
            let k = cfg.resolved_k(index.len());
            if k > index.len() {
                return Err(Error::KTooLarge {
                    k,
                    n_train: index.len(),
                });
            }
            Some((index, k))
        } else {
            None
        };
        if cfg.method == Method::Ncdd {
            let model = model.ok_or_else(|| Error::InvalidConfig("ncdd needs a centroid model".into()))?;
            if cfg.variant.needs_far_sum() && model.single_class_warning() {
                return Err(Error::SingleClassNonNearest);
            }
        }
        Ok(Scorer {
            cfg: cfg.clone(),
            model,
            knn,
        })
    }

    pub fn config(&self) -> &ScoreConfig {
        &self.cfg
    }

    /// Scores one sample; `logits` may be empty for feature-space methods.
    pub fn score<T: Copy + Into<f64>, L: Copy + Into<f64>>(
        &self,
        z: &[T],
        logits: Option<&[L]>,
    ) -> Result<(f64, bool)> {
        let cfg = &self.cfg;
        let logits = || logits.ok_or(Error::MissingLogits);
        match cfg.method {
            Method::Ncdd => Ok((ncdd_score(z, self.model.expect("checked in new"), cfg)?, false)),
            Method::Msp => Ok((msp_score(logits()?, cfg)?, false)),
            Method::MaxLogit => Ok((maxlogit_score(logits()?)?, false)),
            Method::Energy => Ok((energy_score(logits()?, cfg)?, false)),
            Method::Entropy => Ok((entropy_score(logits()?, cfg)?, false)),
            Method::Knn => {
                let (index, k) = self.knn.as_ref().expect("checked in new");
                index.query(z, *k)
            }
        }
    }

    pub fn score_row(&self, test: &FeatureSet, row: usize) -> Result<(f64, bool)> {
        self.score(test.row(row), test.logits_row(row))
    }
}

/// Scores every row of `test`. Rows are processed in parallel; the result is
/// identical to a sequential loop, and the first failing row (by index) is
/// the one reported.
pub fn score_set(
    test: &FeatureSet,
    model: Option<&CentroidModel>,
    train: Option<&FeatureSet>,
    cfg: &ScoreConfig,
) -> Result<ScoreVector> {
    let scorer = Scorer::new(cfg, model, train)?;
    if cfg.method.needs_logits() && test.logits().is_none() {
        return Err(Error::MissingLogits);
    }
    if let Some(m) = model.filter(|_| cfg.method == Method::Ncdd) {
        m.check_dim(test.n_features())?;
    }
    let results: Vec<Result<(f64, bool)>> = (0..test.n_samples())
        .into_par_iter()
        .map(|i| scorer.score_row(test, i))
        .collect();
    let mut scores = Vec::with_capacity(results.len());
    let mut flagged_rows = Vec::new();
    for (row, r) in results.into_iter().enumerate() {
        let (s, flag) = r.map_err(|e| e.at_row(row))?;
        if flag {
            flagged_rows.push(row);
        }
        scores.push(s);
    }
    Ok(ScoreVector {
        scores,
        config: cfg.clone(),
        model_fingerprint: model.map(|m| m.fingerprint().to_string()),
        flagged_rows,
    })
}

/// `row,score` lines with 17 significant digits.
pub fn write_scores_csv<W: Write>(scores: &[f64], mut out: W) -> std::io::Result<()> {
    writeln!(out, "row,score")?;
    for (i, s) in scores.iter().enumerate() {
        writeln!(out, "{i},{s:.16e}")?;
    }
    Ok(())
}

pub fn read_scores_csv(text: &str) -> Result<Vec<f64>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next().map(str::trim) {
        Some("row,score") => {}
        other => {
            return Err(Error::HeaderMismatch(format!(
                "expected \"row,score\", found {other:?}"
            )))
        }
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 2 {
                return Err(Error::RaggedRow {
                    row: i,
                    expected: 2,
                    found: fields.len(),
                });
            }
            match fields[1].parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::UnparsableNumber {
                    row: i,
                    col: 1,
                    value: fields[1].to_string(),
                }),
            }
        })
        .collect()
}

/// Writes scores as CSV, or as a JSON [`ScoreVector`] when the path ends in
/// `.json`.
pub fn save_scores(sv: &ScoreVector, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = if has_json_ext(path) {
        let mut s = serde_json::to_string_pretty(sv).expect("scores serialize");
        s.push('\n');
        s.into_bytes()
    } else {
        let mut buf = Vec::new();
        write_scores_csv(&sv.scores, &mut buf).map_err(|e| Error::io(path, e))?;
        buf
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Reads a score file written by [`save_scores`]. CSV files carry no config,
/// so only the JSON form returns one.
pub fn load_scores(path: impl AsRef<Path>) -> Result<(Vec<f64>, Option<ScoreConfig>)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if has_json_ext(path) {
        let sv: ScoreVector = serde_json::from_str(&text).map_err(|e| Error::SchemaMismatch(e.to_string()))?;
        if sv.scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::SchemaMismatch("non-finite score".into()));
        }
        Ok((sv.scores, Some(sv.config)))
    } else {
        Ok((read_scores_csv(&text)?, None))
    }
}

pub(crate) fn has_json_ext(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
}
