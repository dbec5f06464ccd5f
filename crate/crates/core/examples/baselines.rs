//! Side-by-side comparison of the centroid score with the logit and k-NN
//! baselines on one synthetic problem.
//!
//! Pass an OOD mode (`equidistant_shell`, `interpolated`, `uniform_box`) as
//! the first argument to change the problem.

use ncdd::cli::{compare_methods, render_compare};
use ncdd::{fit_centroids, generate, Method, OodMode, ScoreConfig, SynthSpec};

fn main() -> ncdd::Result<()> {
    let mode: OodMode = match std::env::args().nth(1) {
        Some(m) => m.parse()?,
        None => OodMode::EquidistantShell,
    };
    let data = generate(&SynthSpec {
        dim: 32,
        per_class_n: 300,
        separation: 4.0,
        ood_mode: mode,
        ood_n: 300,
        seed: 11,
        ..Default::default()
    })?;
    let model = fit_centroids(&data.train)?;

    let configs: Vec<ScoreConfig> = Method::ALL
        .iter()
        .map(|&m| ScoreConfig {
            k: (m == Method::Knn).then_some(10),
            ..ScoreConfig::method(m)
        })
        .collect();
    let report = compare_methods(&model, &data.test_id, &data.test_ood, Some(&data.train), &configs, 0.95)?;
    println!("OOD mode: {mode:?}\n");
    print!("{}", render_compare(&report));
    Ok(())
}
