//! Class-wise centroid estimation and the persisted centroid model.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::featureset::FeatureSet;

/// Schema tag written into every model document.
pub const MODEL_VERSION: &str = "ncdd-centroids/1";

/// Per-class mean feature vectors fitted on a labeled training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CentroidModel {
    version: String,
    n_classes: usize,
    n_features: usize,
    class_counts: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    class_names: Option<Vec<String>>,
    centroids: Vec<Vec<f64>>,
    fit_fingerprint: String,
}

impl CentroidModel {
    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn class_counts(&self) -> &[u64] {
        &self.class_counts
    }

    pub fn class_names(&self) -> Option<&[String]> {
        self.class_names.as_deref()
    }

    pub fn centroids(&self) -> &[Vec<f64>] {
        &self.centroids
    }

    pub fn centroid(&self, class: usize) -> &[f64] {
        &self.centroids[class]
    }

    pub fn fingerprint(&self) -> &str {
        &self.fit_fingerprint
    }

    /// Set when the model has one class: every score needing the
    /// non-nearest distance sum is undefined for it.
    pub fn single_class_warning(&self) -> bool {
        self.n_classes == 1
    }

    pub fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found,
            });
        }
        Ok(())
    }

    /// Builds a model from explicit centroid rows, for callers that already
    /// know the class means.
    pub fn from_centroids(centroids: Vec<Vec<f64>>, class_counts: Vec<u64>) -> Result<Self> {
        let d = centroids.first().map(Vec::len).unwrap_or(0);
        if d == 0 {
            return Err(Error::DimZero);
        }
        let mut hasher = Sha256::new();
        hasher.update(MODEL_VERSION.as_bytes());
        for row in &centroids {
            for v in row {
                hasher.update(v.to_le_bytes());
            }
        }
        let model = CentroidModel {
            version: MODEL_VERSION.into(),
            n_classes: centroids.len(),
            n_features: d,
            class_counts,
            class_names: None,
            centroids,
            fit_fingerprint: hex::encode(hasher.finalize()),
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::SchemaMismatch(m));
        if self.version != MODEL_VERSION {
            return bad(format!("version {:?}, expected {MODEL_VERSION:?}", self.version));
        }
        if self.n_classes == 0 || self.n_features == 0 {
            return bad("n_classes and n_features must be at least 1".into());
        }
        if self.centroids.len() != self.n_classes {
            return bad(format!(
                "{} centroid rows for {} classes",
                self.centroids.len(),
                self.n_classes
            ));
        }
        if self.class_counts.len() != self.n_classes {
            return bad(format!(
                "{} class counts for {} classes",
                self.class_counts.len(),
                self.n_classes
            ));
        }
        if let Some(c) = self.class_counts.iter().position(|&n| n == 0) {
            return bad(format!("class {c} has count 0"));
        }
        if let Some(names) = &self.class_names {
            if names.len() != self.n_classes {
                return bad(format!("{} class names for {} classes", names.len(), self.n_classes));
            }
        }
        for (c, row) in self.centroids.iter().enumerate() {
            if row.len() != self.n_features {
                return Err(Error::DimensionMismatch {
                    expected: self.n_features,
                    found: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return bad(format!("centroid {c} has a non-finite value"));
            }
        }
        Ok(())
    }
}

/// Fits one centroid per class from a labeled training set.
///
/// Each centroid is the arithmetic mean of its class rows, accumulated in
/// `f64` over ascending row index, so refits are bit-identical.
pub fn fit_centroids(train: &FeatureSet) -> Result<CentroidModel> {
    let labels = train.labels().ok_or(Error::MissingLabels)?;
    let mut model = fit_rows(train.features(), train.n_features(), labels, train.n_classes())?;
    let mut hasher = Sha256::new();
    hasher.update(MODEL_VERSION.as_bytes());
    hasher.update(train.to_bytes());
    model.fit_fingerprint = hex::encode(hasher.finalize());
    model.class_names = train.class_names().map(<[String]>::to_vec);
    Ok(model)
}

/// Fits centroids from a flat row-major buffer in either precision.
pub fn fit_rows<T>(features: &[T], n_features: usize, labels: &[i32], n_classes: usize) -> Result<CentroidModel>
where
    T: Copy + Into<f64>,
{
    if n_features == 0 {
        return Err(Error::DimZero);
    }
    if features.len() != labels.len() * n_features {
        return Err(Error::DimensionMismatch {
            expected: labels.len() * n_features,
            found: features.len(),
        });
    }
    let mut sums = vec![vec![0.0f64; n_features]; n_classes];
    let mut counts = vec![0u64; n_classes];
    let mut hasher = Sha256::new();
    hasher.update(MODEL_VERSION.as_bytes());
    for (row, (values, &label)) in features.chunks_exact(n_features).zip(labels).enumerate() {
        if label < 0 || label as usize >= n_classes {
            return Err(Error::LabelOutOfRange {
                row,
                label: label as i64,
                n_classes,
            });
        }
        let class = label as usize;
        counts[class] += 1;
        for (acc, &v) in sums[class].iter_mut().zip(values) {
            let v: f64 = v.into();
            *acc += v;
            hasher.update(v.to_le_bytes());
        }
        hasher.update((class as u64).to_le_bytes());
    }
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(Error::EmptyClass(c));
    }
    for (sum, &n) in sums.iter_mut().zip(&counts) {
        let n = n as f64;
        for v in sum.iter_mut() {
            *v /= n;
        }
    }
    let model = CentroidModel {
        version: MODEL_VERSION.into(),
        n_classes,
        n_features,
        class_counts: counts,
        class_names: None,
        centroids: sums,
        fit_fingerprint: hex::encode(hasher.finalize()),
    };
    model.validate()?;
    Ok(model)
}

pub fn model_to_json(model: &CentroidModel) -> String {
    serde_json::to_string_pretty(model).expect("model serializes")
}

pub fn model_from_json(text: &str) -> Result<CentroidModel> {
    let model: CentroidModel = serde_json::from_str(text).map_err(|e| Error::SchemaMismatch(e.to_string()))?;
    model.validate()?;
    Ok(model)
}

pub fn save_model(model: &CentroidModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = model_to_json(model);
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<CentroidModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labeled(rows: &[Vec<f32>], labels: Vec<i32>, c: usize) -> FeatureSet {
        FeatureSet::from_rows(c, rows).unwrap().with_labels(labels).unwrap()
    }

    #[test]
    fn two_point_mean() {
        let train = labeled(&[vec![1.0, 0.0], vec![3.0, 0.0], vec![0.0, 2.0]], vec![0, 0, 1], 2);
        let m = fit_centroids(&train).unwrap();
        assert_eq!(m.centroids(), &[vec![2.0, 0.0], vec![0.0, 2.0]]);
        assert_eq!(m.class_counts(), &[2, 1]);
        assert!(!m.single_class_warning());
    }

    #[test]
    fn single_sample_is_exact() {
        let rows = vec![vec![0.1f32, -7.25], vec![1e-3, 3.0]];
        let m = fit_centroids(&labeled(&rows, vec![1, 0], 2)).unwrap();
        assert_eq!(m.centroid(1), &[0.1f32 as f64, -7.25]);
        assert_eq!(m.centroid(0), &[1e-3f32 as f64, 3.0]);
    }

    #[test]
    fn missing_labels_and_empty_class() {
        let set = FeatureSet::new(1, 2, vec![1.0, 2.0]).unwrap();
        assert!(matches!(fit_centroids(&set), Err(Error::MissingLabels)));
        let set = set.with_labels(vec![0, 0]).unwrap();
        assert!(matches!(fit_centroids(&set), Err(Error::EmptyClass(1))));
    }

    #[test]
    fn single_class_sets_warning() {
        let m = fit_centroids(&labeled(&[vec![1.0]], vec![0], 1)).unwrap();
        assert!(m.single_class_warning());
    }

    #[test]
    fn json_shape_and_round_trip() {
        let m = CentroidModel::from_centroids(vec![vec![0.1, 1.0 / 3.0], vec![-2.5e-300, 7.0]], vec![3, 4]).unwrap();
        let text = model_to_json(&m);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["centroids"].as_array().unwrap().len(), 2);
        assert_eq!(v["n_features"], 2);
        let back = model_from_json(&text).unwrap();
        assert_eq!(back, m);
        for (a, b) in back.centroids().iter().flatten().zip(m.centroids().iter().flatten()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn schema_errors() {
        let m = CentroidModel::from_centroids(vec![vec![1.0, 2.0]], vec![1]).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&model_to_json(&m)).unwrap();
        v["n_classes"] = 2.into();
        assert!(matches!(model_from_json(&v.to_string()), Err(Error::SchemaMismatch(_))));
        let mut v: serde_json::Value = serde_json::from_str(&model_to_json(&m)).unwrap();
        v["n_features"] = 3.into();
        assert!(matches!(
            model_from_json(&v.to_string()),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(model_from_json("{}"), Err(Error::SchemaMismatch(_))));
    }

    #[test]
    fn dimension_check() {
        let m = CentroidModel::from_centroids(vec![vec![0.0; 3]], vec![1]).unwrap();
        assert!(m.check_dim(3).is_ok());
        assert!(matches!(
            m.check_dim(2),
            Err(Error::DimensionMismatch { expected: 3, found: 2 })
        ));
    }
}
