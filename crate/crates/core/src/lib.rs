//! Post-hoc out-of-distribution scoring over pre-extracted classifier
//! features and logits.
//!
//! The main score is the nearest centroid distance deficit: for a feature
//! vector `z` and class centroids `μ_c`, it weighs the summed distance to the
//! non-nearest centroids against the distance to the nearest one. In-distribution
//! samples sit close to one centroid and far from the others; OOD samples sit
//! at similar distances from all of them.
//!
//! Modules, bottom-up:
//!
//! * [`featureset`]: the feature container, the FSET1 binary format and CSV.
//! * [`centroid`]: class-wise centroid fitting and the model JSON.
//! * [`scoring`]: the centroid score variants and the MSP, MaxLogit, Energy,
//!   Entropy and k-NN baselines.
//! * [`metrics`]: AUROC, FPR at a target TPR, threshold selection.
//! * [`tuning`]: grid search over the weight exponents.
//! * [`synth`]: seeded synthetic feature spaces.
//! * [`cli`]: the `ncdd` command line.
//!
//! ```
//! use ncdd::{centroid, metrics, scoring, synth};
//!
//! let spec = synth::SynthSpec { per_class_n: 50, ood_n: 50, dim: 16, ..Default::default() };
//! let data = synth::generate(&spec).unwrap();
//! let model = centroid::fit_centroids(&data.train).unwrap();
//! let cfg = scoring::ScoreConfig::default();
//! let id = scoring::score_set(&data.test_id, Some(&model), None, &cfg).unwrap();
//! let ood = scoring::score_set(&data.test_ood, Some(&model), None, &cfg).unwrap();
//! let auc = metrics::auroc(&id.scores, &ood.scores).unwrap();
//! assert!(auc > 0.9);
//! ```

pub mod centroid;
pub mod cli;
pub mod error;
pub mod featureset;
pub mod metrics;
pub mod scoring;
pub mod synth;
pub mod tuning;

pub use centroid::{fit_centroids, load_model, save_model, CentroidModel};
pub use error::{Error, ErrorKind, Result};
pub use featureset::{export_csv, import_csv, load_fset, save_fset, FeatureSet};
pub use metrics::{auroc, decide, evaluate, fpr_at_tpr, threshold_at_tpr, Decision, EvalReport};
pub use scoring::{score_set, LogBase, Method, ScoreConfig, ScoreVector, Variant};
pub use synth::{generate, OodMode, SynthData, SynthSpec};
pub use tuning::{tune, Objective, TuneGrid, TuneResult};
