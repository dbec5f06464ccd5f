//! Detection metrics with in-distribution samples as the positive class.
//!
//! A sample is accepted as ID only when its score is strictly above the
//! threshold λ; `score ≤ λ` is OOD. AUROC gives half credit to tied pairs.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scoring::ScoreConfig;

pub const DEFAULT_TPR: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Decision {
    Id,
    Ood,
}

/// Binary decision at threshold `lambda`; ties go to OOD.
pub fn decide(score: f64, lambda: f64) -> Decision {
    if score <= lambda {
        Decision::Ood
    } else {
        Decision::Id
    }
}

fn check_scores(scores: &[f64]) -> Result<()> {
    if scores.is_empty() {
        return Err(Error::EmptyScoreSet);
    }
    match scores.iter().position(|s| !s.is_finite()) {
        Some(index) => Err(Error::NonFiniteScore { index }),
        None => Ok(()),
    }
}

fn check_target(tpr_target: f64) -> Result<()> {
    if tpr_target > 0.0 && tpr_target <= 1.0 {
        Ok(())
    } else {
        Err(Error::BadTarget(tpr_target))
    }
}

fn cmp_f64(a: &f64, b: &f64) -> Ordering {
    a.partial_cmp(b).expect("finite scores")
}

/// Mann–Whitney AUROC via one sort, O(n log n).
///
/// Pair credit is accumulated as an exact integer count of half-pairs, so the
/// result equals pairwise enumeration bit for bit.
pub fn auroc(id_scores: &[f64], ood_scores: &[f64]) -> Result<f64> {
    check_scores(id_scores)?;
    check_scores(ood_scores)?;
    let mut all: Vec<(f64, bool)> = id_scores
        .iter()
        .map(|&s| (s, true))
        .chain(ood_scores.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| cmp_f64(&a.0, &b.0));

    let mut half_pairs: u128 = 0;
    let mut ood_below: u128 = 0;
    let mut i = 0;
    while i < all.len() {
        let value = all[i].0;
        let (mut id_here, mut ood_here) = (0u128, 0u128);
        while i < all.len() && all[i].0 == value {
            if all[i].1 {
                id_here += 1;
            } else {
                ood_here += 1;
            }
            i += 1;
        }
        half_pairs += 2 * id_here * ood_below + id_here * ood_here;
        ood_below += ood_here;
    }
    let pairs = id_scores.len() as f64 * ood_scores.len() as f64;
    Ok((half_pairs as f64 / 2.0) / pairs)
}

/// Largest order-statistic threshold that keeps at least `tpr_target` of the
/// ID scores strictly above it.
///
/// With `m` the largest count for which `(n − m) / n ≥ tpr_target`, this is
/// the `m`-th smallest ID score, stepped down past ties so that no more than
/// `m` scores sit at or below it. When nothing may fall at or below, the
/// result is the largest `f64` below the minimum score.
pub fn threshold_at_tpr(id_scores: &[f64], tpr_target: f64) -> Result<f64> {
    check_scores(id_scores)?;
    check_target(tpr_target)?;
    let mut sorted = id_scores.to_vec();
    sorted.sort_by(cmp_f64);
    let n = sorted.len();
    let m = allowed_rejections(n, tpr_target);
    if m == 0 {
        return Ok(sorted[0].next_down());
    }
    let candidate = sorted[m - 1];
    let first = sorted.partition_point(|&v| v < candidate);
    let at_or_below = sorted.partition_point(|&v| v <= candidate);
    if at_or_below <= m {
        Ok(candidate)
    } else if first == 0 {
        Ok(sorted[0].next_down())
    } else {
        Ok(sorted[first - 1])
    }
}

/// Largest `m ≤ n` with `(n − m) / n ≥ target`, tolerant to the rounding in
/// targets such as 0.95.
fn allowed_rejections(n: usize, target: f64) -> usize {
    let retained_ok = |m: usize| (n - m) as f64 / n as f64 >= target - 1e-12;
    let mut m = (((1.0 - target) * n as f64).floor() as usize + 1).min(n);
    while m > 0 && !retained_ok(m) {
        m -= 1;
    }
    m
}

/// Fraction of `scores` accepted as ID at `lambda`.
pub fn accepted_fraction(scores: &[f64], lambda: f64) -> f64 {
    let kept = scores.iter().filter(|&&s| decide(s, lambda) == Decision::Id).count();
    kept as f64 / scores.len() as f64
}

/// False positive rate (OOD accepted as ID) at the ID-retention threshold.
pub fn fpr_at_tpr(id_scores: &[f64], ood_scores: &[f64], tpr_target: f64) -> Result<f64> {
    check_scores(ood_scores)?;
    let lambda = threshold_at_tpr(id_scores, tpr_target)?;
    Ok(accepted_fraction(ood_scores, lambda))
}

/// Serialized evaluation of one score pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub auroc: f64,
    pub fpr95: f64,
    pub threshold_lambda: f64,
    pub tpr_target: f64,
    pub n_id: usize,
    pub n_ood: usize,
    pub method: Option<String>,
    pub config: Option<ScoreConfig>,
}

pub fn evaluate(
    id_scores: &[f64],
    ood_scores: &[f64],
    tpr_target: f64,
    config: Option<&ScoreConfig>,
) -> Result<EvalReport> {
    let auroc = auroc(id_scores, ood_scores)?;
    let threshold_lambda = threshold_at_tpr(id_scores, tpr_target)?;
    Ok(EvalReport {
        auroc,
        fpr95: accepted_fraction(ood_scores, threshold_lambda),
        threshold_lambda,
        tpr_target,
        n_id: id_scores.len(),
        n_ood: ood_scores.len(),
        method: config.map(|c| c.method.name().to_string()),
        config: config.cloned(),
    })
}
