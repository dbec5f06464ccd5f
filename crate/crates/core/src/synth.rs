//! Seeded synthetic feature spaces.
//!
//! Class `c` has mean `s·e_c + s·1`: a spike of height `s` on axis `c`, plus a
//! constant offset `s` on every coordinate so that feature L1 norms stay well
//! away from zero. ID rows add isotropic Gaussian noise of standard deviation
//! `σ`. Logits come from a fixed linear head, `logit_c = z_c − s`.
//!
//! OOD rows, by mode:
//!
//! * `equidistant_shell`: barycenter of the class means plus a step of length
//!   `s` along a random unit direction orthogonal to every `μ_c − barycenter`,
//!   so the row is equally far from all centroids before noise; then `σ`
//!   noise.
//! * `interpolated`: `(1 − t)·μ_a + t·μ_b` for a random class pair `a ≠ b`
//!   and `t ~ U[0.25, 0.75)`; then `σ` noise.
//! * `uniform_box`: every coordinate uniform on `[−s, 2s)`, plus the offset.
//!
//! # Random stream
//!
//! All randomness comes from PCG32 (PCG-XSH-RR 64/32): 64-bit LCG state,
//! multiplier `6364136223846793005`, increment `2·stream + 1`, seeded as in
//! the reference `pcg32_srandom(seed, stream)`. Each output section owns one
//! stream: `1` train features, `2` test-ID features, `3` OOD features.
//!
//! * `u64` draw: `(next_u32() << 32) | next_u32()`.
//! * uniform `[0, 1)`: `(u64 >> 11) · 2⁻⁵³`.
//! * standard normal: `sqrt(−2·ln(1 − u₁)) · cos(2π·u₂)` from two uniforms
//!   (one normal per pair).
//! * random class pair: `a = ⌊u·C⌋`, `b = (a + 1 + ⌊u'·(C − 1)⌋) mod C`.
//!
//! Rows are generated class by class, row by row, coordinate by coordinate,
//! with values computed in `f64` and rounded to `f32` at the end.

use std::str::FromStr;

use rand_core::RngCore;
use rand_pcg::Pcg32;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featureset::FeatureSet;

const STREAM_TRAIN: u64 = 1;
const STREAM_TEST_ID: u64 = 2;
const STREAM_OOD: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OodMode {
    #[serde(alias = "EQUIDISTANT_SHELL")]
    EquidistantShell,
    #[serde(alias = "INTERPOLATED")]
    Interpolated,
    #[serde(alias = "UNIFORM_BOX")]
    UniformBox,
}

impl FromStr for OodMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "equidistant_shell" => Ok(OodMode::EquidistantShell),
            "interpolated" => Ok(OodMode::Interpolated),
            "uniform_box" => Ok(OodMode::UniformBox),
            _ => Err(Error::SpecInvalid(format!("unknown ood mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub n_classes: usize,
    pub dim: usize,
    pub per_class_n: usize,
    pub id_std: f64,
    pub separation: f64,
    pub ood_mode: OodMode,
    pub ood_n: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_classes: 3,
            dim: 64,
            per_class_n: 500,
            id_std: 1.0,
            separation: 10.0,
            ood_mode: OodMode::EquidistantShell,
            ood_n: 500,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::SpecInvalid(m.to_string()));
        if self.n_classes == 0 || self.per_class_n == 0 || self.ood_n == 0 {
            return bad("n_classes, per_class_n and ood_n must be at least 1");
        }
        if self.dim < self.n_classes {
            return bad("dim must be at least n_classes");
        }
        if !(self.id_std > 0.0 && self.id_std.is_finite()) {
            return bad("id_std must be positive and finite");
        }
        if !(self.separation > 0.0 && self.separation.is_finite()) {
            return bad("separation must be positive and finite");
        }
        if self.ood_mode == OodMode::Interpolated && self.n_classes < 2 {
            return bad("interpolated OOD needs at least two classes");
        }
        Ok(())
    }

    /// Generating mean of class `c`, offset included.
    pub fn class_mean(&self, c: usize) -> Vec<f64> {
        let s = self.separation;
        (0..self.dim).map(|j| if j == c { 2.0 * s } else { s }).collect()
    }

    fn barycenter(&self) -> Vec<f64> {
        let s = self.separation;
        let spike = s / self.n_classes as f64;
        (0..self.dim)
            .map(|j| if j < self.n_classes { s + spike } else { s })
            .collect()
    }
}

/// Train, test-ID and test-OOD splits of one synthetic problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub train: FeatureSet,
    pub test_id: FeatureSet,
    pub test_ood: FeatureSet,
}

struct Stream(Pcg32);

impl Stream {
    fn new(seed: u64, stream: u64) -> Self {
        Stream(Pcg32::new(seed, stream))
    }

    fn next_u64(&mut self) -> u64 {
        let hi = self.0.next_u32() as u64;
        let lo = self.0.next_u32() as u64;
        (hi << 32) | lo
    }

    fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn normal(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * (1.0 - u1).ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

fn labeled_split(spec: &SynthSpec, stream: u64, tag: &str) -> Result<FeatureSet> {
    let mut rng = Stream::new(spec.seed, stream);
    let n = spec.n_classes * spec.per_class_n;
    let mut rows = Vec::with_capacity(n * spec.dim);
    let mut labels = Vec::with_capacity(n);
    for c in 0..spec.n_classes {
        let mean = spec.class_mean(c);
        for _ in 0..spec.per_class_n {
            rows.extend(mean.iter().map(|&m| m + spec.id_std * rng.normal()));
            labels.push(c as i32);
        }
    }
    finish(spec, rows, Some(labels), tag)
}

fn ood_split(spec: &SynthSpec) -> Result<FeatureSet> {
    let mut rng = Stream::new(spec.seed, STREAM_OOD);
    let s = spec.separation;
    let c = spec.n_classes;
    let center = spec.barycenter();
    let mut rows = Vec::with_capacity(spec.ood_n * spec.dim);
    for _ in 0..spec.ood_n {
        let base: Vec<f64> = match spec.ood_mode {
            OodMode::EquidistantShell => {
                let dir = loop {
                    let mut g: Vec<f64> = (0..spec.dim).map(|_| rng.normal()).collect();
                    // drop the part lying in span{μ_c − barycenter}, the
                    // zero-sum vectors on the class axes
                    let mean = g[..c].iter().sum::<f64>() / c as f64;
                    g[..c].iter_mut().for_each(|v| *v = mean);
                    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if norm > 0.0 {
                        break g.into_iter().map(|v| v / norm).collect::<Vec<_>>();
                    }
                };
                center.iter().zip(&dir).map(|(b, u)| b + s * u).collect()
            }
            OodMode::Interpolated => {
                let a = ((rng.uniform() * c as f64) as usize).min(c - 1);
                let step = ((rng.uniform() * (c - 1) as f64) as usize).min(c - 2);
                let b = (a + 1 + step) % c;
                let t = 0.25 + 0.5 * rng.uniform();
                let (ma, mb) = (spec.class_mean(a), spec.class_mean(b));
                ma.iter().zip(&mb).map(|(x, y)| (1.0 - t) * x + t * y).collect()
            }
            OodMode::UniformBox => (0..spec.dim).map(|_| s + (-s + 3.0 * s * rng.uniform())).collect(),
        };
        match spec.ood_mode {
            OodMode::UniformBox => rows.extend(base),
            _ => rows.extend(base.iter().map(|&m| m + spec.id_std * rng.normal())),
        }
    }
    finish(spec, rows, None, "ood")
}

fn finish(spec: &SynthSpec, rows: Vec<f64>, labels: Option<Vec<i32>>, tag: &str) -> Result<FeatureSet> {
    let features: Vec<f32> = rows.iter().map(|&v| v as f32).collect();
    let logits: Vec<f32> = features
        .chunks_exact(spec.dim)
        .flat_map(|z| z[..spec.n_classes].iter().map(|&v| (v as f64 - spec.separation) as f32))
        .collect();
    let names = (0..spec.n_classes).map(|c| format!("class_{c}")).collect();
    let mut set = FeatureSet::new(spec.dim, spec.n_classes, features)?
        .with_logits(logits)?
        .with_class_names(names)?
        .with_source_tag(format!("synth:{tag}:seed={}", spec.seed));
    if let Some(labels) = labels {
        set = set.with_labels(labels)?;
    }
    Ok(set)
}

/// Generates the three splits. Identical specs give identical bytes.
pub fn generate(spec: &SynthSpec) -> Result<SynthData> {
    spec.validate()?;
    Ok(SynthData {
        train: labeled_split(spec, STREAM_TRAIN, "train")?,
        test_id: labeled_split(spec, STREAM_TEST_ID, "test_id")?,
        test_ood: ood_split(spec)?,
    })
}
