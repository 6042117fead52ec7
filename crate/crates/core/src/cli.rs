//! The `pvtree` command line tool.
//!
//! Exit codes: 0 on success, 2 for usage and input errors, 1 for internal
//! failures. Diagnostics go to stderr, reports to stdout.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::boosting::{boost_fit, BoostConfig, BoostModel};
use crate::data::{format_real, load_csv, load_features, IngestSpec};
use crate::error::{Error, Result};
use crate::numerics::{critical_value, PValueParams};
use crate::simlab::{
    detection_csv, experiment_cv_contrast, experiment_detection, experiment_null_cdf, neufeld_replicate, neufeld_study,
    neufeld_study_csv, AltConfig, Amplitude, CvConfig, NeufeldConfig, NullConfig, Sidecar, DEFAULT_N_GRID,
    DEFAULT_QUANTILE_LEVELS,
};
use crate::stopping::{select, Delta, StopConfig};
use crate::tree::{cost_complexity_sequence, grow, GrowConfig, RegressionTree, SequenceFile, TreeNode};

#[derive(Debug, Parser)]
#[command(
    name = "pvtree",
    version,
    about = "Regression trees with p-value based early stopping"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Grow, prune and select a regression tree.
    Fit(FitArgs),
    /// Predict with a fitted tree or boosted model.
    Predict(PredictArgs),
    /// Fit an L2 boosted ensemble of p-value selected trees.
    Boost(BoostArgs),
    /// Print the critical value u_eps.
    Quantile(QuantileArgs),
    /// Run a seeded Monte Carlo experiment.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
}

#[derive(Debug, Args, Serialize)]
struct InputArgs {
    /// Training CSV with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Name of the response column.
    #[arg(long)]
    target: String,
    /// Comma separated feature columns (default: all but the target).
    #[arg(long, value_delimiter = ',')]
    features: Option<Vec<String>>,
    #[arg(long, default_value_t = ',')]
    delimiter: char,
}

impl InputArgs {
    fn spec(&self) -> Result<IngestSpec> {
        Ok(IngestSpec {
            path: self.data.clone(),
            target: self.target.clone(),
            features: self.features.clone(),
            delimiter: delimiter_byte(self.delimiter)?,
        })
    }
}

fn delimiter_byte(c: char) -> Result<u8> {
    u8::try_from(c)
        .ok()
        .filter(u8::is_ascii)
        .ok_or_else(|| Error::Domain(format!("delimiter must be a single ASCII character, got {c:?}")))
}

fn parse_delta(s: &str) -> std::result::Result<Delta, String> {
    s.parse::<Delta>().map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Bound on the summed split p-values, or `inf`.
    #[arg(long, default_value = "0.05", value_parser = parse_delta)]
    delta: Delta,
    #[arg(long, default_value_t = 4)]
    max_depth: usize,
    #[arg(long, default_value_t = 20)]
    min_leaf: usize,
    /// Where to write the selected tree.
    #[arg(long)]
    out: PathBuf,
    /// Also write the whole pruning sequence.
    #[arg(long)]
    sequence_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// CSV of covariates with a header row.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = ',')]
    delimiter: char,
    /// Output CSV with a single `prediction` column.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BoostArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value = "0.05", value_parser = parse_delta)]
    delta: Delta,
    #[arg(long, default_value_t = 0.1)]
    learning_rate: f64,
    #[arg(long, default_value_t = 3)]
    max_depth: usize,
    #[arg(long, default_value_t = 20)]
    min_leaf: usize,
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
    /// Held-out CSV with the same columns, for test RMSE.
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Per-iteration CSV log.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct QuantileArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
}

#[derive(Debug, Subcommand)]
enum ExperimentCommand {
    /// Empirical null distribution of the root split statistic.
    NullCdf(NullCdfArgs),
    /// Detection rate of a single mean shift over a grid of n.
    Detection(DetectionArgs),
    /// Tree recovery on the five-leaf regression function.
    Neufeld(NeufeldArgs),
    /// Cross-validated pruning against p-value selection.
    CvContrast(CvContrastArgs),
}

#[derive(Debug, Args, Serialize)]
struct Output {
    #[arg(long)]
    seed: u64,
    /// CSV output; a JSON sidecar is written next to it.
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct NullCdfArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    #[arg(long, default_value_t = 10_000)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    min_leaf: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum AmplitudeKind {
    Power,
    Stepsize,
}

#[derive(Debug, Args, Serialize)]
struct DetectionArgs {
    #[arg(long, default_value_t = 1)]
    d: usize,
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    /// Comma separated sample sizes.
    #[arg(long, value_delimiter = ',')]
    n_grid: Option<Vec<usize>>,
    #[arg(long, value_enum, default_value_t = AmplitudeKind::Power)]
    amplitude: AmplitudeKind,
    /// Shift `n^(-exponent)` for `--amplitude power`.
    #[arg(long, default_value_t = 0.2)]
    exponent: f64,
    /// Offset above the detection boundary for `--amplitude stepsize`.
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args, Serialize)]
struct NeufeldArgs {
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 10)]
    d: usize,
    #[arg(long, default_value = "0.05", value_parser = parse_delta)]
    delta: Delta,
    #[arg(long, default_value_t = 10_000)]
    test_n: usize,
    /// With more than one replication the CSV has one row per replication.
    #[arg(long, default_value_t = 1)]
    reps: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args, Serialize)]
struct CvContrastArgs {
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    #[arg(long, default_value_t = 10)]
    d: usize,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// Keep one train/test split and vary only the folds.
    #[arg(long)]
    fixed_split: bool,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    /// Comma separated p-value tolerances.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.05,0.01", value_parser = parse_delta)]
    deltas: Vec<Delta>,
    #[command(flatten)]
    output: Output,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Domain(_) | Error::Dimension { .. } | Error::Parse { .. } | Error::Csv { .. } | Error::Io { .. } => 2,
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Fit(args) => fit(args),
        Command::Predict(args) => predict(args),
        Command::Boost(args) => boost(args),
        Command::Quantile(args) => quantile(args),
        Command::Experiment(cmd) => experiment(cmd),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn print_json(value: &serde_json::Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("reports always serialize")
    );
}

fn root_split(tree: &TreeNode, features: &[String]) -> serde_json::Value {
    match tree {
        TreeNode::Split(s) => json!({
            "j": s.j,
            "feature": features.get(s.j),
            "threshold": s.threshold,
            "p_value": s.p_value,
        }),
        TreeNode::Leaf(_) => serde_json::Value::Null,
    }
}

fn fit(args: FitArgs) -> Result<()> {
    let data = load_csv(&args.input.spec()?)?;
    let config = GrowConfig {
        max_depth: args.max_depth,
        min_leaf: args.min_leaf,
    };
    eprintln!("growing on n = {}, d = {}", data.n(), data.d());
    let seq = cost_complexity_sequence(&grow(&data, config));
    let report = select(&seq, StopConfig { delta: args.delta });
    let model = RegressionTree {
        d: data.d(),
        config,
        features: data.names().to_vec(),
        root: seq.trees[report.selected_index].clone(),
    };
    write_file(&args.out, &model.to_json())?;
    if let Some(path) = &args.sequence_out {
        let file = SequenceFile::new(data.d(), config, data.names().to_vec(), &seq);
        write_file(path, &file.to_json())?;
    }
    print_json(&json!({
        "n": data.n(),
        "d": data.d(),
        "delta": args.delta,
        "selected_index": report.selected_index,
        "selected_leaves": report.selected_leaves,
        "stopped_at": report.stopped_at,
        "leaf_counts": seq.leaf_counts(),
        "alphas": seq.alphas,
        "cum_p": report.cum_p_trace,
        "root_split": root_split(&model.root, &model.features),
    }));
    Ok(())
}

enum AnyModel {
    Tree(RegressionTree),
    Boost(BoostModel),
}

impl AnyModel {
    fn read(path: &Path) -> Result<Self> {
        let text = crate::tree::read_text(path)?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        if value.get("trees").is_some() {
            Ok(AnyModel::Boost(BoostModel::from_json(&text)?))
        } else {
            Ok(AnyModel::Tree(RegressionTree::from_json(&text)?))
        }
    }

    fn features(&self) -> &[String] {
        match self {
            AnyModel::Tree(t) => &t.features,
            AnyModel::Boost(b) => &b.features,
        }
    }

    fn predict(&self, x: &[f64]) -> Result<f64> {
        match self {
            AnyModel::Tree(t) => t.predict(x),
            AnyModel::Boost(b) => b.predict(x),
        }
    }
}

fn predictions_csv(values: &[f64]) -> String {
    let mut out = String::from("prediction\n");
    for v in values {
        out.push_str(&format_real(*v));
        out.push('\n');
    }
    out
}

fn predict(args: PredictArgs) -> Result<()> {
    let model = AnyModel::read(&args.model)?;
    let rows = load_features(&args.data, model.features(), delimiter_byte(args.delimiter)?)?;
    let preds = rows.iter().map(|x| model.predict(x)).collect::<Result<Vec<_>>>()?;
    write_file(&args.out, &predictions_csv(&preds))?;
    eprintln!("wrote {} predictions to {}", preds.len(), args.out.display());
    Ok(())
}

fn boost(args: BoostArgs) -> Result<()> {
    let spec = args.input.spec()?;
    let data = load_csv(&spec)?;
    let config = BoostConfig {
        learning_rate: args.learning_rate,
        max_depth: args.max_depth,
        min_leaf: args.min_leaf,
        delta: args.delta,
        max_iters: args.max_iters,
    };
    let fit = boost_fit(&data, config)?;
    let test = match &args.test {
        Some(path) => {
            let test = load_csv(&IngestSpec {
                path: path.clone(),
                features: Some(data.names().to_vec()),
                ..spec.clone()
            })?;
            let rows: Vec<Vec<f64>> = (0..test.n()).map(|i| test.row(i)).collect();
            Some(fit.model.staged_rmse(&rows, test.y())?)
        }
        None => None,
    };
    write_file(&args.out, &fit.model.to_json())?;
    if let Some(path) = &args.log {
        let mut log = String::from("iteration,train_rmse,test_rmse,learner_leaves,learner_cum_p\n");
        for (k, it) in fit.report.iterations.iter().enumerate() {
            let test_rmse = test.as_ref().map_or(String::new(), |t| format_real(t[k]));
            log.push_str(&format!(
                "{},{},{},{},{}\n",
                it.iteration,
                format_real(it.train_rmse),
                test_rmse,
                it.learner_leaves,
                format_real(it.learner_cum_p)
            ));
        }
        write_file(path, &log)?;
    }
    let final_train = fit.report.iterations.last().map(|it| it.train_rmse);
    print_json(&json!({
        "n": data.n(),
        "d": data.d(),
        "delta": args.delta,
        "n_trees": fit.model.trees.len(),
        "stop_reason": fit.model.stop_reason,
        "base": fit.model.base,
        "train_rmse": final_train,
        "test_rmse": test.as_ref().and_then(|t| t.last().copied()),
        "base_test_rmse": test.as_ref().map(|t| t[0]),
    }));
    Ok(())
}

fn quantile(args: QuantileArgs) -> Result<()> {
    let u = critical_value(args.eps, PValueParams::new(args.n, args.d)?)?;
    println!("{u:.4}");
    Ok(())
}

fn write_experiment<C: Serialize>(name: &'static str, output: &Output, config: C, csv: &str) -> Result<()> {
    write_file(&output.out, csv)?;
    let sidecar_path = sidecar_path(&output.out);
    write_file(&sidecar_path, &Sidecar::new(name, output.seed, config).to_json())?;
    eprintln!("wrote {} and {}", output.out.display(), sidecar_path.display());
    Ok(())
}

/// `results.csv` gets `results.json`; an output already named `.json` gets
/// `.meta.json` appended instead.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let candidate = out.with_extension("json");
    if candidate == out {
        let mut s = out.as_os_str().to_owned();
        s.push(".meta.json");
        PathBuf::from(s)
    } else {
        candidate
    }
}

fn experiment(cmd: ExperimentCommand) -> Result<()> {
    match cmd {
        ExperimentCommand::NullCdf(args) => {
            let cfg = NullConfig::new(args.n, args.d, args.rho, args.output.seed);
            let result = experiment_null_cdf(&cfg, args.reps, args.min_leaf, &DEFAULT_QUANTILE_LEVELS)?;
            let quantiles: Vec<_> = result
                .quantiles
                .iter()
                .map(|&(level, empirical, approx)| json!({"level": level, "empirical": empirical, "approx": approx}))
                .collect();
            print_json(&json!({ "quantiles": quantiles }));
            write_experiment("null-cdf", &args.output, &args, &result.to_csv())
        }
        ExperimentCommand::Detection(args) => {
            let base = AltConfig::power_curve(DEFAULT_N_GRID[0], args.d, args.rho, args.output.seed);
            let amplitude = match args.amplitude {
                AmplitudeKind::Power => Amplitude::Power {
                    exponent: args.exponent,
                },
                AmplitudeKind::Stepsize => Amplitude::Stepsize { eta: args.eta },
            };
            let grid = args.n_grid.clone().unwrap_or_else(|| DEFAULT_N_GRID.to_vec());
            let points = experiment_detection(&base, amplitude, &grid, args.reps, args.eps)?;
            let summary: Vec<_> = points
                .iter()
                .map(|p| json!({"n": p.n, "fraction": p.fraction()}))
                .collect();
            print_json(&json!({ "detection": summary }));
            write_experiment("detection", &args.output, &args, &detection_csv(&points))
        }
        ExperimentCommand::Neufeld(args) => {
            let cfg = NeufeldConfig {
                sigma: args.sigma,
                d: args.d,
                ..NeufeldConfig::new(args.n, args.a, args.b, args.output.seed)
            };
            let csv = if args.reps <= 1 {
                let report = neufeld_replicate(&cfg, args.delta, args.test_n, 0)?;
                print_json(&json!({
                    "selected_leaves": report.selected_leaves(),
                    "cum_p": report.cum_p(),
                    "first_split": report.first_split(),
                }));
                report.to_csv()
            } else {
                let reports = neufeld_study(&cfg, args.delta, args.test_n, args.reps)?;
                let sizes: Vec<usize> = reports.iter().map(|r| r.selected_leaves()).collect();
                print_json(&json!({ "selected_leaves": sizes }));
                neufeld_study_csv(&reports)
            };
            write_experiment("neufeld", &args.output, &args, &csv)
        }
        ExperimentCommand::CvContrast(args) => {
            let cfg = NeufeldConfig {
                d: args.d,
                ..NeufeldConfig::new(args.n, args.a, args.b, args.output.seed)
            };
            let cv = CvConfig {
                folds: args.folds,
                fixed_split: args.fixed_split,
                ..CvConfig::default()
            };
            let report = experiment_cv_contrast(&cfg, cv, args.reps, &args.deltas)?;
            let mean = |v: Vec<f64>| v.iter().sum::<f64>() / v.len().max(1) as f64;
            let pvalue: Vec<_> = args
                .deltas
                .iter()
                .enumerate()
                .map(|(k, d)| {
                    json!({
                        "delta": d,
                        "size_histogram": report.pvalue_size_histogram(k),
                        "mean_test_rmse": mean(report.replicates.iter().map(|r| r.pvalue[k].1).collect()),
                    })
                })
                .collect();
            print_json(&json!({
                "cv": {
                    "size_histogram": report.cv_size_histogram(),
                    "mean_test_rmse": mean(report.replicates.iter().map(|r| r.cv_test_rmse).collect()),
                },
                "pvalue": pvalue,
            }));
            write_experiment("cv-contrast", &args.output, &args, &report.to_csv())
        }
    }
}
