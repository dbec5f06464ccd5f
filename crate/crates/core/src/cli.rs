//! The `ncdd` command line.
//!
//! Every subcommand is a thin wrapper over the library and writes the same
//! numbers a direct library call would produce. Inputs are never modified.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 2 | i/o failure |
//! | 3 | malformed input file (container, CSV, JSON) |
//! | 4 | contract violation (bad arguments, missing inputs, invalid values) |
//!
//! With `--json-errors` the failure is printed to stderr as one JSON object
//! `{"error": <family>, "exit_code": <n>, "message": <text>}`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::centroid::{fit_centroids, load_model, save_model, CentroidModel};
use crate::error::{Error, ErrorKind, Result};
use crate::featureset::{export_csv, import_csv, load_fset, save_fset, FeatureSet};
use crate::metrics::{evaluate, EvalReport, DEFAULT_TPR};
use crate::scoring::{load_scores, save_scores, score_set, LogBase, Method, ScoreConfig, Variant};
use crate::synth::{generate, SynthSpec};
use crate::tuning::{render_table, tune, Objective, TuneGrid};

/// Environment variable read for the default worker thread count.
pub const THREADS_ENV: &str = "NCDD_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "ncdd",
    version,
    about = "Post-hoc OOD scoring: fit, score, eval, tune, compare"
)]
pub struct Cli {
    /// Print failures as a JSON object on stderr.
    #[arg(long, global = true)]
    pub json_errors: bool,

    /// Worker threads for scoring and tuning.
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit class centroids on a labeled training set.
    Fit {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Class count, required when the input is CSV.
        #[arg(long)]
        n_classes: Option<usize>,
    },
    /// Score every row of a feature set.
    Score {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        train: Option<PathBuf>,
        #[command(flatten)]
        score: ScoreArgs,
        /// `.json` writes a score vector with config echo, anything else CSV.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        n_classes: Option<usize>,
    },
    /// AUROC and FPR at the target TPR for two score files.
    Eval {
        #[arg(long)]
        id_scores: PathBuf,
        #[arg(long)]
        ood_scores: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TPR)]
        tpr: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Grid search over the weight exponents on validation splits.
    Tune {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        val_id: PathBuf,
        #[arg(long)]
        val_ood: PathBuf,
        /// e.g. "a1:-2,-1,0,1;a2:-2,-1,0,1"
        #[arg(long)]
        grid: Option<String>,
        #[arg(long, default_value = "fpr95")]
        objective: String,
        #[arg(long, default_value_t = DEFAULT_TPR)]
        tpr: f64,
        #[arg(long, default_value = "natural")]
        log_base: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        n_classes: Option<usize>,
    },
    /// Evaluate several methods on one ID/OOD test pair.
    Compare {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        test_id: PathBuf,
        #[arg(long)]
        test_ood: PathBuf,
        #[arg(long)]
        train: Option<PathBuf>,
        /// Comma separated: ncdd,msp,maxlogit,energy,entropy,knn
        #[arg(long)]
        methods: String,
        #[command(flatten)]
        score: NcddArgs,
        #[arg(long, default_value_t = DEFAULT_TPR)]
        tpr: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        n_classes: Option<usize>,
    },
    /// Generate a synthetic train/test-ID/test-OOD problem.
    Gen {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Convert between FSET1 (`.fset`) and CSV (`.csv`).
    Convert {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        n_classes: Option<usize>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub method: String,
    #[command(flatten)]
    pub params: NcddArgs,
}

#[derive(Debug, Clone, Args)]
pub struct NcddArgs {
    #[arg(long, default_value = "weighted")]
    pub variant: String,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    pub alpha1: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub alpha2: f64,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub temperature: f64,
    #[arg(long, default_value = "natural")]
    pub log_base: String,
}

impl NcddArgs {
    pub fn config(&self, method: Method) -> Result<ScoreConfig> {
        let cfg = ScoreConfig {
            method,
            variant: self.variant.parse::<Variant>()?,
            alpha1: self.alpha1,
            alpha2: self.alpha2,
            log_base: self.log_base.parse::<LogBase>()?,
            k: self.k,
            temperature: self.temperature,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Loads FSET1, or CSV when the extension is `.csv`.
pub fn read_features(path: &Path, n_classes: Option<usize>) -> Result<FeatureSet> {
    if is_csv(path) {
        let c = n_classes
            .ok_or_else(|| Error::InvalidConfig(format!("--n-classes is required to read {}", path.display())))?;
        import_csv(path, c)
    } else {
        load_fset(path)
    }
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// One method's line of a comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub method: String,
    pub auroc: f64,
    pub fpr95: f64,
    pub threshold_lambda: f64,
    /// 1 = highest AUROC; equal values share a rank.
    pub auroc_rank: usize,
    /// 1 = lowest FPR; equal values share a rank.
    pub fpr95_rank: usize,
    pub config: ScoreConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub tpr_target: f64,
    pub n_id: usize,
    pub n_ood: usize,
    pub rows: Vec<CompareRow>,
}

pub fn parse_methods(list: &str) -> Result<Vec<Method>> {
    let methods = list
        .split(',')
        .map(str::trim)
        .filter(|m| !m.is_empty())
        .map(str::parse::<Method>)
        .collect::<Result<Vec<_>>>()?;
    if methods.is_empty() {
        return Err(Error::InvalidConfig("no methods given".into()));
    }
    Ok(methods)
}

/// Scores both test splits with each config and ranks the results.
pub fn compare_methods(
    model: &CentroidModel,
    test_id: &FeatureSet,
    test_ood: &FeatureSet,
    train: Option<&FeatureSet>,
    configs: &[ScoreConfig],
    tpr_target: f64,
) -> Result<CompareReport> {
    let reports: Vec<EvalReport> = configs
        .iter()
        .map(|cfg| {
            let id = score_set(test_id, Some(model), train, cfg)?;
            let ood = score_set(test_ood, Some(model), train, cfg)?;
            evaluate(&id.scores, &ood.scores, tpr_target, Some(cfg))
        })
        .collect::<Result<_>>()?;
    let rank = |value: f64, better: &dyn Fn(f64, f64) -> bool, pick: &dyn Fn(&EvalReport) -> f64| {
        1 + reports.iter().filter(|r| better(pick(r), value)).count()
    };
    let rows = reports
        .iter()
        .zip(configs)
        .map(|(r, cfg)| CompareRow {
            method: cfg.method.name().to_string(),
            auroc: r.auroc,
            fpr95: r.fpr95,
            threshold_lambda: r.threshold_lambda,
            auroc_rank: rank(r.auroc, &|a, b| a > b, &|r| r.auroc),
            fpr95_rank: rank(r.fpr95, &|a, b| a < b, &|r| r.fpr95),
            config: cfg.clone(),
        })
        .collect();
    Ok(CompareReport {
        tpr_target,
        n_id: test_id.n_samples(),
        n_ood: test_ood.n_samples(),
        rows,
    })
}

pub fn render_compare(report: &CompareReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<10} {:>8} {:>6} {:>8} {:>6}",
        "Method", "AUROC", "rank", "FPR95", "rank"
    );
    for row in &report.rows {
        let _ = writeln!(
            out,
            "{:<10} {:>8.2} {:>6} {:>8.2} {:>6}",
            row.method,
            100.0 * row.auroc,
            row.auroc_rank,
            100.0 * row.fpr95,
            row.fpr95_rank
        );
    }
    out
}

/// Runs one parsed command; returns the text meant for stdout.
pub fn run(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Fit { train, out, n_classes } => {
            let set = read_features(train, *n_classes)?;
            let model = fit_centroids(&set)?;
            save_model(&model, out)?;
            let mut msg = format!(
                "fitted {} centroids (d = {}) -> {}\n",
                model.n_classes(),
                model.n_features(),
                out.display()
            );
            if model.single_class_warning() {
                msg.push_str("warning: single class; only neg_nearest_only is defined\n");
            }
            Ok(msg)
        }
        Command::Score {
            model,
            input,
            train,
            score,
            out,
            n_classes,
        } => {
            let method: Method = score.method.parse()?;
            let cfg = score.params.config(method)?;
            let model = model.as_deref().map(load_model).transpose()?;
            let test = read_features(input, *n_classes)?;
            let train = train.as_deref().map(|p| read_features(p, *n_classes)).transpose()?;
            let sv = score_set(&test, model.as_ref(), train.as_ref(), &cfg)?;
            save_scores(&sv, out)?;
            Ok(format!(
                "scored {} rows with {} -> {}\n",
                sv.scores.len(),
                method,
                out.display()
            ))
        }
        Command::Eval {
            id_scores,
            ood_scores,
            tpr,
            out,
        } => {
            let (id, cfg) = load_scores(id_scores)?;
            let (ood, _) = load_scores(ood_scores)?;
            let report = evaluate(&id, &ood, *tpr, cfg.as_ref())?;
            write_json(&report, out)?;
            Ok(format!(
                "AUROC {:.4}  FPR@{:.0}%TPR {:.4}  lambda {:e}  (n_id {}, n_ood {})\n",
                report.auroc,
                100.0 * report.tpr_target,
                report.fpr95,
                report.threshold_lambda,
                report.n_id,
                report.n_ood
            ))
        }
        Command::Tune {
            model,
            val_id,
            val_ood,
            grid,
            objective,
            tpr,
            log_base,
            out,
            n_classes,
        } => {
            let mut g = match grid {
                Some(spec) => TuneGrid::parse(spec)?,
                None => TuneGrid::default(),
            };
            g.objective = objective.parse::<Objective>()?;
            g.tpr_target = *tpr;
            g.log_base = log_base.parse()?;
            let model = load_model(model)?;
            let val_id = read_features(val_id, *n_classes)?;
            let val_ood = read_features(val_ood, *n_classes)?;
            let result = tune(&model, &val_id, &val_ood, &g)?;
            write_json(&result, out)?;
            Ok(render_table(&result))
        }
        Command::Compare {
            model,
            test_id,
            test_ood,
            train,
            methods,
            score,
            tpr,
            out,
            n_classes,
        } => {
            let configs = parse_methods(methods)?
                .into_iter()
                .map(|m| score.config(m))
                .collect::<Result<Vec<_>>>()?;
            let model = load_model(model)?;
            let test_id = read_features(test_id, *n_classes)?;
            let test_ood = read_features(test_ood, *n_classes)?;
            let train = train.as_deref().map(|p| read_features(p, *n_classes)).transpose()?;
            let report = compare_methods(&model, &test_id, &test_ood, train.as_ref(), &configs, *tpr)?;
            write_json(&report, out)?;
            Ok(render_compare(&report))
        }
        Command::Gen { spec, out_dir } => {
            let text = fs::read_to_string(spec).map_err(|e| Error::io(spec, e))?;
            let spec: SynthSpec = serde_json::from_str(&text).map_err(|e| Error::SchemaMismatch(e.to_string()))?;
            let data = generate(&spec)?;
            fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
            let mut msg = String::new();
            for (name, set) in [
                ("train.fset", &data.train),
                ("test_id.fset", &data.test_id),
                ("test_ood.fset", &data.test_ood),
            ] {
                let path = out_dir.join(name);
                save_fset(set, &path)?;
                let _ = writeln!(msg, "{} rows -> {}", set.n_samples(), path.display());
            }
            Ok(msg)
        }
        Command::Convert { input, out, n_classes } => {
            let set = read_features(input, *n_classes)?;
            if is_csv(out) {
                export_csv(&set, out)?;
            } else {
                save_fset(&set, out)?;
            }
            Ok(format!("{} rows -> {}\n", set.n_samples(), out.display()))
        }
    }
}

fn configure_threads(threads: Option<usize>) {
    if let Some(n) = threads.filter(|&n| n > 0) {
        // the global pool can only be built once per process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn report_error(err: &Error, json: bool) -> i32 {
    let kind = err.kind();
    if json {
        let value = serde_json::json!({
            "error": kind.as_str(),
            "exit_code": kind.exit_code(),
            "message": err.to_string(),
        });
        eprintln!("{value}");
    } else {
        eprintln!("error: {err}");
    }
    kind.exit_code()
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ErrorKind::Contract.exit_code()
            } else {
                0
            };
        }
    };
    configure_threads(cli.threads);
    match run(&cli) {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => report_error(&e, cli.json_errors),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_list_parsing() {
        assert_eq!(
            parse_methods("msp, maxlogit").unwrap(),
            vec![Method::Msp, Method::MaxLogit]
        );
        assert!(matches!(parse_methods("msp,odin"), Err(Error::UnknownMethod(_))));
        assert!(parse_methods(" , ").is_err());
    }

    #[test]
    fn negative_alpha_flags_parse() {
        let cli = Cli::try_parse_from([
            "ncdd", "score", "--in", "x.fset", "--method", "ncdd", "--alpha1", "-2", "--alpha2", "-1", "--out", "s.csv",
        ])
        .unwrap();
        match cli.command {
            Command::Score { score, .. } => {
                let cfg = score.params.config(Method::Ncdd).unwrap();
                assert_eq!((cfg.alpha1, cfg.alpha2), (-2.0, -1.0));
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn csv_input_needs_class_count() {
        let err = read_features(Path::new("whatever.csv"), None).unwrap_err();
        assert_eq!(err.kind(), ErrorKind::Contract);
    }
}
