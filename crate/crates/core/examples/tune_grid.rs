//! Grid search over the two weighting exponents on a validation split, then
//! a check of the chosen pair on a fresh test split.

use ncdd::metrics::evaluate;
use ncdd::tuning::{render_table, tune, TuneGrid};
use ncdd::{fit_centroids, generate, score_set, LogBase, OodMode, SynthSpec};

fn main() -> ncdd::Result<()> {
    let spec = SynthSpec {
        dim: 24,
        per_class_n: 200,
        separation: 2.5,
        ood_mode: OodMode::EquidistantShell,
        ood_n: 200,
        ..Default::default()
    };
    let train = generate(&spec)?.train;
    let model = fit_centroids(&train)?;

    // validation and test come from different seeds
    let val = generate(&SynthSpec {
        seed: 1,
        ..spec.clone()
    })?;
    let test = generate(&SynthSpec { seed: 2, ..spec })?;

    let grid = TuneGrid::parse("a1:-3,-2,-1,0,1;a2:-2,-1,0,1,2")?;
    let result = tune(&model, &val.test_id, &val.test_ood, &grid)?;
    print!("{}", render_table(&result));

    let cfg = result.best_config(LogBase::Natural);
    let id = score_set(&test.test_id, Some(&model), None, &cfg)?.scores;
    let ood = score_set(&test.test_ood, Some(&model), None, &cfg)?.scores;
    let report = evaluate(&id, &ood, 0.95, Some(&cfg))?;
    println!(
        "\nbest alpha1 = {}, alpha2 = {}: test AUROC {:.4}, FPR95 {:.4}",
        result.best_alpha1, result.best_alpha2, report.auroc, report.fpr95
    );
    Ok(())
}
