//! Fits class centroids on a training split and scores held-out rows with
//! each centroid-distance variant.

use ncdd::centroid::{fit_centroids, model_from_json, model_to_json};
use ncdd::scoring::{distances_to_centroids, nearest, score_set, ScoreConfig, Scorer, Variant};
use ncdd::synth::{generate, OodMode, SynthSpec};

fn main() -> ncdd::Result<()> {
    let data = generate(&SynthSpec {
        n_classes: 4,
        dim: 16,
        per_class_n: 100,
        separation: 5.0,
        ood_mode: OodMode::Interpolated,
        ood_n: 100,
        seed: 3,
        ..Default::default()
    })?;

    let model = fit_centroids(&data.train)?;
    println!(
        "{} classes, d = {}, counts {:?}",
        model.n_classes(),
        model.n_features(),
        model.class_counts()
    );
    println!("fingerprint {}", &model.fingerprint()[..16]);

    // models serialize to JSON without losing any bits
    let reloaded = model_from_json(&model_to_json(&model))?;
    assert_eq!(reloaded, model);

    let cfg = ScoreConfig::default();
    let scorer = Scorer::new(&cfg, Some(&model), None)?;
    println!("\nfirst ID rows:");
    for i in 0..4 {
        let z = data.test_id.row(i);
        let (n, d) = nearest(&distances_to_centroids(z, &model)?);
        let (score, _) = scorer.score_row(&data.test_id, i)?;
        let label = data.test_id.labels().unwrap()[i];
        println!("  row {i}: label {label}, nearest {n} at {d:.3}, score {score:.3}");
    }

    println!("\n{:<18} {:>12} {:>12}", "variant", "mean ID", "mean OOD");
    for variant in Variant::ALL {
        let cfg = ScoreConfig::ncdd(variant, -1.0, 0.0);
        let id = score_set(&data.test_id, Some(&model), None, &cfg)?.scores;
        let ood = score_set(&data.test_ood, Some(&model), None, &cfg)?.scores;
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        println!("{:<18} {:>12.3} {:>12.3}", variant.name(), mean(&id), mean(&ood));
    }
    Ok(())
}
