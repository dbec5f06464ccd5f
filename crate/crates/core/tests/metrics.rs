mod common;

use ncdd::metrics::{accepted_fraction, DEFAULT_TPR};
use ncdd::{auroc, decide, evaluate, fpr_at_tpr, threshold_at_tpr, Decision, Error};
use proptest::prelude::*;
use rand::Rng;

/// Brute-force threshold: the largest candidate that keeps enough ID scores
/// strictly above it.
fn brute_threshold(id: &[f64], tpr: f64) -> f64 {
    let min = id.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut candidates: Vec<f64> = id.to_vec();
    candidates.push(min.next_down());
    candidates
        .into_iter()
        .filter(|&l| id.iter().filter(|&&s| s > l).count() as f64 / id.len() as f64 >= tpr - 1e-12)
        .fold(f64::NEG_INFINITY, f64::max)
}

fn coarse_scores(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((-20i32..20).prop_map(|v| v as f64 * 0.5), 1..n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn auroc_matches_pairwise(id in coarse_scores(60), ood in coarse_scores(60)) {
        prop_assert_eq!(auroc(&id, &ood).unwrap(), common::pairwise_auroc(&id, &ood));
    }

    #[test]
    fn threshold_matches_brute_force(id in coarse_scores(80), tpr in prop::sample::select(vec![0.5, 0.8, 0.9, 0.95, 0.99, 1.0])) {
        let lambda = threshold_at_tpr(&id, tpr).unwrap();
        prop_assert_eq!(lambda, brute_threshold(&id, tpr));
        prop_assert!(accepted_fraction(&id, lambda) >= tpr - 1e-12);
    }

    #[test]
    fn monotone_transforms_preserve_metrics(id in coarse_scores(50), ood in coarse_scores(50), a in 0.1f64..10.0, b in -5.0f64..5.0) {
        let f = |v: &[f64], g: &dyn Fn(f64) -> f64| v.iter().map(|&x| g(x)).collect::<Vec<_>>();
        let base_auc = auroc(&id, &ood).unwrap();
        let base_fpr = fpr_at_tpr(&id, &ood, DEFAULT_TPR).unwrap();
        for g in [&(|x: f64| x.exp()) as &dyn Fn(f64) -> f64, &|x: f64| a * x + b] {
            let (ti, to) = (f(&id, g), f(&ood, g));
            prop_assert_eq!(auroc(&ti, &to).unwrap(), base_auc);
            prop_assert_eq!(fpr_at_tpr(&ti, &to, DEFAULT_TPR).unwrap(), base_fpr);
        }
    }

    #[test]
    fn swapping_sides_complements_auroc(id in prop::collection::vec(-1e3f64..1e3, 1..40), ood in prop::collection::vec(-1e3f64..1e3, 1..40)) {
        let mut all = id.clone();
        all.extend(&ood);
        all.sort_by(f64::total_cmp);
        prop_assume!(all.windows(2).all(|w| w[0] != w[1]));
        let sum = auroc(&id, &ood).unwrap() + auroc(&ood, &id).unwrap();
        prop_assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stricter_target_never_lowers_fpr(id in coarse_scores(80), ood in coarse_scores(80)) {
        let loose = fpr_at_tpr(&id, &ood, 0.90).unwrap();
        let strict = fpr_at_tpr(&id, &ood, 0.99).unwrap();
        prop_assert!(strict >= loose);
    }
}

#[test]
fn identical_distributions_give_fpr_equal_to_tpr() {
    let mut rng = common::rng(2024);
    let (n, trials) = (2000usize, 20);
    let mut total = 0.0;
    for _ in 0..trials {
        let id: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        let ood: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        total += fpr_at_tpr(&id, &ood, DEFAULT_TPR).unwrap();
    }
    let mean = total / trials as f64;
    // binomial spread of the OOD count plus the spread of the ID quantile
    let sigma = (0.05 * 0.95 * 2.0 / n as f64 / trials as f64).sqrt();
    // OOD passes the threshold exactly as often as ID does
    assert!(
        (mean - DEFAULT_TPR).abs() < 3.0 * sigma,
        "mean FPR {mean}, sigma {sigma}"
    );
}

#[test]
fn decision_rule_and_ties() {
    assert_eq!(decide(1.0, 1.0), Decision::Ood);
    assert_eq!(decide(1.0f64.next_up(), 1.0), Decision::Id);
    let id = [3.0; 10];
    let lambda = threshold_at_tpr(&id, 0.95).unwrap();
    assert!(lambda < 3.0);
    assert_eq!(accepted_fraction(&id, lambda), 1.0);
    assert_eq!(fpr_at_tpr(&id, &[3.0, 2.0], 0.95).unwrap(), 0.5);
    assert_eq!(auroc(&[1.0], &[1.0]).unwrap(), 0.5);
}

#[test]
fn hand_computed_values() {
    let id: Vec<f64> = (1..=20).map(f64::from).collect();
    // one rejection allowed out of twenty at 95%
    assert_eq!(threshold_at_tpr(&id, 0.95).unwrap(), 1.0);
    assert_eq!(threshold_at_tpr(&id, 0.90).unwrap(), 2.0);
    assert_eq!(threshold_at_tpr(&id, 1.0).unwrap(), 1.0f64.next_down());
    let report = evaluate(&id, &[0.5, 1.0, 1.5, 25.0], 0.95, None).unwrap();
    assert_eq!(report.fpr95, 0.5);
    // pairs won per OOD score: 20, 19 plus a tie, 19, 0
    assert_eq!(report.auroc, 58.5 / 80.0);
    assert_eq!((report.n_id, report.n_ood), (20, 4));
}

#[test]
fn invalid_inputs() {
    assert!(matches!(auroc(&[], &[1.0]), Err(Error::EmptyScoreSet)));
    assert!(matches!(
        auroc(&[1.0, f64::NAN], &[1.0]),
        Err(Error::NonFiniteScore { index: 1 })
    ));
    assert!(matches!(threshold_at_tpr(&[1.0], 0.0), Err(Error::BadTarget(_))));
    assert!(matches!(threshold_at_tpr(&[1.0], 1.5), Err(Error::BadTarget(_))));
    assert!(matches!(
        fpr_at_tpr(&[1.0], &[f64::INFINITY], 0.9),
        Err(Error::NonFiniteScore { index: 0 })
    ));
}
