//! Exhaustive grid search over the two weight exponents of the weighted
//! centroid score, scored on a validation ID split against a validation OOD
//! split.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::centroid::CentroidModel;
use crate::error::{Error, Result};
use crate::featureset::FeatureSet;
use crate::metrics::{self, DEFAULT_TPR};
use crate::scoring::{self, LogBase, ScoreConfig, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    /// Minimize FPR at the target TPR.
    #[default]
    Fpr95,
    /// Maximize AUROC.
    Auroc,
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fpr95" | "fpr" => Ok(Objective::Fpr95),
            "auroc" | "auc" => Ok(Objective::Auroc),
            _ => Err(Error::InvalidGrid(format!("unknown objective {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneGrid {
    pub alpha1_values: Vec<f64>,
    pub alpha2_values: Vec<f64>,
    pub objective: Objective,
    pub tpr_target: f64,
    pub log_base: LogBase,
}

impl Default for TuneGrid {
    fn default() -> Self {
        let values = vec![-2.0, -1.0, 0.0, 1.0];
        TuneGrid {
            alpha1_values: values.clone(),
            alpha2_values: values,
            objective: Objective::Fpr95,
            tpr_target: DEFAULT_TPR,
            log_base: LogBase::Natural,
        }
    }
}

impl TuneGrid {
    /// Parses `"a1:-2,-1,0,1;a2:-1,0"`. Either axis may be omitted and keeps
    /// its default values.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut grid = TuneGrid::default();
        for part in spec.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (axis, values) = part
                .split_once(':')
                .ok_or_else(|| Error::InvalidGrid(format!("expected axis:values, found {part:?}")))?;
            let values = values
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidGrid(format!("bad value {v:?} on axis {axis}")))
                })
                .collect::<Result<Vec<_>>>()?;
            match axis.trim() {
                "a1" | "alpha1" => grid.alpha1_values = values,
                "a2" | "alpha2" => grid.alpha2_values = values,
                other => return Err(Error::InvalidGrid(format!("unknown axis {other:?}"))),
            }
        }
        grid.normalized()
    }

    /// Sorted, deduplicated copy; rejects empty or non-finite axes.
    pub fn normalized(mut self) -> Result<Self> {
        for (name, values) in [("alpha1", &mut self.alpha1_values), ("alpha2", &mut self.alpha2_values)] {
            if values.is_empty() {
                return Err(Error::InvalidGrid(format!("{name} has no values")));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidGrid(format!("{name} has a non-finite value")));
            }
            values.sort_by(f64::total_cmp);
            values.dedup();
        }
        if !(self.tpr_target > 0.0 && self.tpr_target <= 1.0) {
            return Err(Error::BadTarget(self.tpr_target));
        }
        Ok(self)
    }

    pub fn cell_config(&self, alpha1: f64, alpha2: f64) -> ScoreConfig {
        ScoreConfig {
            log_base: self.log_base,
            ..ScoreConfig::ncdd(Variant::Weighted, alpha1, alpha2)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneRow {
    pub alpha1: f64,
    pub alpha2: f64,
    pub fpr95: f64,
    pub auroc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub best_alpha1: f64,
    pub best_alpha2: f64,
    pub best_objective: f64,
    pub objective: Objective,
    pub tpr_target: f64,
    /// One row per grid cell, sorted by `(alpha1, alpha2)`.
    pub full_table: Vec<TuneRow>,
}

impl TuneResult {
    pub fn best_config(&self, log_base: LogBase) -> ScoreConfig {
        ScoreConfig {
            log_base,
            ..ScoreConfig::ncdd(Variant::Weighted, self.best_alpha1, self.best_alpha2)
        }
    }
}

/// Distances and L1 norms of one split, computed once and reused per cell.
struct Prepared {
    distances: Vec<Vec<f64>>,
    l1: Vec<f64>,
}

impl Prepared {
    fn new(set: &FeatureSet, model: &CentroidModel) -> Result<Self> {
        model.check_dim(set.n_features())?;
        let distances = set
            .rows()
            .map(|z| scoring::distances_to_centroids(z, model))
            .collect::<Result<Vec<_>>>()?;
        let l1 = set.rows().map(scoring::l1_norm).collect();
        Ok(Prepared { distances, l1 })
    }

    fn scores(&self, cfg: &ScoreConfig) -> Result<Vec<f64>> {
        self.distances
            .iter()
            .zip(&self.l1)
            .enumerate()
            .map(|(i, (d, &l1))| scoring::ncdd_from_distances(d, l1, cfg).map_err(|e| e.at_row(i)))
            .collect()
    }
}

/// Evaluates every `(alpha1, alpha2)` cell and picks the best one.
///
/// Ties on the objective go to the higher AUROC (lower FPR when the objective
/// is AUROC), then the smaller `alpha1`, then the smaller `alpha2`.
pub fn tune(model: &CentroidModel, val_id: &FeatureSet, val_ood: &FeatureSet, grid: &TuneGrid) -> Result<TuneResult> {
    let grid = grid.clone().normalized()?;
    if val_id.n_samples() == 0 || val_ood.n_samples() == 0 {
        return Err(Error::EmptyValidationSet);
    }
    let id = Prepared::new(val_id, model)?;
    let ood = Prepared::new(val_ood, model)?;

    let cells: Vec<(f64, f64)> = grid
        .alpha1_values
        .iter()
        .flat_map(|&a1| grid.alpha2_values.iter().map(move |&a2| (a1, a2)))
        .collect();
    let full_table = cells
        .par_iter()
        .map(|&(alpha1, alpha2)| {
            let cfg = grid.cell_config(alpha1, alpha2);
            let id_scores = id.scores(&cfg)?;
            let ood_scores = ood.scores(&cfg)?;
            Ok(TuneRow {
                alpha1,
                alpha2,
                fpr95: metrics::fpr_at_tpr(&id_scores, &ood_scores, grid.tpr_target)?,
                auroc: metrics::auroc(&id_scores, &ood_scores)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let rank = |a: &TuneRow, b: &TuneRow| -> Ordering {
        let primary = match grid.objective {
            Objective::Fpr95 => a.fpr95.total_cmp(&b.fpr95).then(b.auroc.total_cmp(&a.auroc)),
            Objective::Auroc => b.auroc.total_cmp(&a.auroc).then(a.fpr95.total_cmp(&b.fpr95)),
        };
        primary
            .then(a.alpha1.total_cmp(&b.alpha1))
            .then(a.alpha2.total_cmp(&b.alpha2))
    };
    let best = full_table
        .iter()
        .min_by(|a, b| rank(a, b))
        .expect("grid has at least one cell")
        .clone();
    Ok(TuneResult {
        best_alpha1: best.alpha1,
        best_alpha2: best.alpha2,
        best_objective: match grid.objective {
            Objective::Fpr95 => best.fpr95,
            Objective::Auroc => best.auroc,
        },
        objective: grid.objective,
        tpr_target: grid.tpr_target,
        full_table,
    })
}

/// Text table with one row per cell, percentages to two decimals, best row
/// marked with `*`.
pub fn render_table(result: &TuneResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<28} {:>8} {:>8}", "Hyperparameters", "FPR95", "AUROC");
    for row in &result.full_table {
        let label = format!("alpha1 = {} & alpha2 = {}", row.alpha1, row.alpha2);
        let best = row.alpha1 == result.best_alpha1 && row.alpha2 == result.best_alpha2;
        let _ = writeln!(
            out,
            "{:<28} {:>8.2} {:>8.2}{}",
            label,
            100.0 * row.fpr95,
            100.0 * row.auroc,
            if best { " *" } else { "" }
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g = TuneGrid::parse("a1:1,-1,1;a2:0").unwrap();
        assert_eq!(g.alpha1_values, vec![-1.0, 1.0]);
        assert_eq!(g.alpha2_values, vec![0.0]);
        let g = TuneGrid::parse("").unwrap();
        assert_eq!(g, TuneGrid::default());
        assert!(TuneGrid::parse("a3:1").is_err());
        assert!(TuneGrid::parse("a1:").is_err());
        assert!(TuneGrid::parse("a1:x").is_err());
        assert!(TuneGrid::parse("a1").is_err());
    }

    #[test]
    fn objective_parsing() {
        assert_eq!("AUROC".parse::<Objective>().unwrap(), Objective::Auroc);
        assert_eq!("fpr95".parse::<Objective>().unwrap(), Objective::Fpr95);
        assert!("aupr".parse::<Objective>().is_err());
    }
}
