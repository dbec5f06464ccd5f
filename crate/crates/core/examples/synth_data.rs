//! Generates every OOD mode and summarizes where the rows land relative to
//! the class means. With a directory argument the splits are also written
//! there as FSET1 files.

use ncdd::featureset::save_fset;
use ncdd::scoring::{distances_to_centroids, nearest};
use ncdd::{generate, CentroidModel, OodMode, SynthSpec};

fn main() -> ncdd::Result<()> {
    let out_dir = std::env::args().nth(1).map(std::path::PathBuf::from);
    for mode in [OodMode::EquidistantShell, OodMode::Interpolated, OodMode::UniformBox] {
        let spec = SynthSpec {
            dim: 16,
            per_class_n: 200,
            ood_mode: mode,
            ood_n: 200,
            seed: 7,
            ..Default::default()
        };
        let data = generate(&spec)?;
        let means = CentroidModel::from_centroids(
            (0..spec.n_classes).map(|c| spec.class_mean(c)).collect(),
            vec![spec.per_class_n as u64; spec.n_classes],
        )?;

        let summarize = |set: &ncdd::FeatureSet| -> ncdd::Result<(f64, f64)> {
            let (mut near, mut spread) = (0.0, 0.0);
            for z in set.rows() {
                let d = distances_to_centroids(z, &means)?;
                let (_, dn) = nearest(&d);
                let far = d.iter().cloned().fold(0.0, f64::max);
                near += dn;
                spread += far - dn;
            }
            let n = set.n_samples() as f64;
            Ok((near / n, spread / n))
        };
        let (id_near, id_spread) = summarize(&data.test_id)?;
        let (ood_near, ood_spread) = summarize(&data.test_ood)?;
        println!("{mode:?}");
        println!("  ID : mean nearest {id_near:7.3}, mean farthest-minus-nearest {id_spread:7.3}");
        println!("  OOD: mean nearest {ood_near:7.3}, mean farthest-minus-nearest {ood_spread:7.3}");

        if let Some(dir) = &out_dir {
            let dir = dir.join(format!("{mode:?}").to_lowercase());
            std::fs::create_dir_all(&dir).map_err(|e| ncdd::Error::Io {
                path: dir.clone(),
                source: e,
            })?;
            save_fset(&data.train, dir.join("train.fset"))?;
            save_fset(&data.test_id, dir.join("test_id.fset"))?;
            save_fset(&data.test_ood, dir.join("test_ood.fset"))?;
        }
    }
    Ok(())
}
