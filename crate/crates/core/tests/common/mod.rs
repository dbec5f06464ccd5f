#![allow(dead_code)]

use nalgebra::DMatrix;
use ncdd::FeatureSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Box–Muller on a generator independent of the library's.
pub fn normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn awkward_f32<R: Rng>(rng: &mut R) -> f32 {
    match rng.gen_range(0..10) {
        0 => -0.0,
        1 => f32::MIN_POSITIVE / 4.0,
        2 => rng.gen_range(-1e30f32..1e30),
        3 => rng.gen_range(-1e-6f32..1e-6),
        _ => rng.gen_range(-1e3f32..1e3),
    }
}

/// Random valid feature set with every optional section toggled at random.
pub fn random_featureset(seed: u64) -> FeatureSet {
    let mut rng = rng(seed);
    let n = rng.gen_range(1..=24);
    let d = rng.gen_range(1..=9);
    let c = rng.gen_range(1..=5);
    let features = (0..n * d).map(|_| awkward_f32(&mut rng)).collect();
    let mut set = FeatureSet::new(d, c, features).unwrap();
    if rng.gen_bool(0.6) {
        set = set
            .with_labels((0..n).map(|_| rng.gen_range(0..c as i32)).collect())
            .unwrap();
    }
    if rng.gen_bool(0.6) {
        set = set
            .with_logits((0..n * c).map(|_| awkward_f32(&mut rng)).collect())
            .unwrap();
    }
    if rng.gen_bool(0.5) {
        set = set
            .with_class_names((0..c).map(|i| format!("klasse-{i}-é")).collect())
            .unwrap();
    }
    if rng.gen_bool(0.5) {
        set = set.with_source_tag(format!("resnet18/val \"{seed}\""));
    }
    set
}

/// Random orthogonal matrix from the QR factorization of a Gaussian matrix.
pub fn random_rotation(d: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = rng(seed);
    let g = DMatrix::from_fn(d, d, |_, _| normal(&mut rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Applies `x ↦ Q·x + t` to each row of a flat row-major buffer.
pub fn apply_isometry(rows: &[f64], d: usize, q: &DMatrix<f64>, t: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(rows.len());
    for row in rows.chunks_exact(d) {
        for i in 0..d {
            let mut acc = t[i];
            for j in 0..d {
                acc += q[(i, j)] * row[j];
            }
            out.push(acc);
        }
    }
    out
}

/// O(n·m) Mann–Whitney credit, the definition of AUROC.
pub fn pairwise_auroc(id: &[f64], ood: &[f64]) -> f64 {
    let mut credit = 0.0;
    for &a in id {
        for &b in ood {
            if a > b {
                credit += 1.0;
            } else if a == b {
                credit += 0.5;
            }
        }
    }
    credit / (id.len() as f64 * ood.len() as f64)
}
