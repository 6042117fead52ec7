//! Monte Carlo experiments. Replications run in parallel, but each draws from
//! its own stream and results are collected in replication order, so every
//! output is identical for any thread count.

use rayon::prelude::*;
use serde::Serialize;

use super::generators::{
    sample_alt, sample_neufeld, sample_null, stepsize_amplitude, AltConfig, NeufeldConfig, NullConfig,
};
use super::rng::{Purpose, SimRng};
use crate::data::{format_real, Dataset};
use crate::error::{Error, Result};
use crate::numerics::{critical_value, p_value_approx, PValueParams};
use crate::splitfinder::best_split;
use crate::stopping::{select, Delta, StopConfig};
use crate::tree::{cost_complexity_sequence, grow, GrowConfig, NestedSequence, TreeNode};

/// Tree parameters of the recovery and cross-validation studies.
pub const STUDY_GROW: GrowConfig = GrowConfig {
    max_depth: 4,
    min_leaf: 20,
};

pub const DEFAULT_N_GRID: [usize; 7] = [100, 250, 500, 1000, 2500, 5000, 10_000];

pub const DEFAULT_QUANTILE_LEVELS: [f64; 3] = [0.90, 0.95, 0.99];

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

/// Inverse of the empirical cdf: the smallest sample value whose ecdf
/// reaches `q`.
pub fn empirical_quantile(sorted: &[f64], q: f64) -> f64 {
    let k = (q * sorted.len() as f64).ceil() as usize;
    sorted[k.clamp(1, sorted.len()) - 1]
}

/// A JSON record of how an experiment output was produced.
#[derive(Debug, Clone, Serialize)]
pub struct Sidecar<C: Serialize> {
    pub experiment: &'static str,
    pub seed: u64,
    pub config: C,
    pub crate_version: &'static str,
}

impl<C: Serialize> Sidecar<C> {
    pub fn new(experiment: &'static str, seed: u64, config: C) -> Self {
        Self {
            experiment,
            seed,
            config,
            crate_version: env!("CARGO_PKG_VERSION"),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sidecar always serializes")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NullCdfResult {
    /// Root statistics `U_max`, ascending.
    pub sorted: Vec<f64>,
    pub params: PValueParams,
    /// `(level, empirical quantile, approximate quantile)`.
    pub quantiles: Vec<(f64, f64, f64)>,
}

impl NullCdfResult {
    /// Approximate null cdf `1 - d p_n(u)`.
    pub fn approx_cdf(&self, u: f64) -> f64 {
        let p = p_value_approx(u, self.params).expect("valid parameters");
        1.0 - self.params.d() as f64 * p
    }

    /// One row per replication: `u, empirical_cdf, approx_cdf`.
    pub fn to_csv(&self) -> String {
        let m = self.sorted.len() as f64;
        csv_text(
            &["u", "empirical_cdf", "approx_cdf"],
            self.sorted.iter().enumerate().map(|(k, &u)| {
                vec![
                    format_real(u),
                    format_real((k + 1) as f64 / m),
                    format_real(self.approx_cdf(u)),
                ]
            }),
        )
    }
}

/// Root split statistic of `reps` null datasets.
///
/// A `min_leaf` of 1 scans every boundary, as in the null distribution.
pub fn experiment_null_cdf(cfg: &NullConfig, reps: usize, min_leaf: usize, levels: &[f64]) -> Result<NullCdfResult> {
    cfg.validate()?;
    let params = PValueParams::new(cfg.n, cfg.d)?;
    if reps == 0 {
        return Err(Error::domain("reps must be positive"));
    }
    let mut sorted: Vec<f64> = (0..reps as u64)
        .into_par_iter()
        .map(|rep| {
            let data = sample_null(cfg, &mut SimRng::substream(cfg.seed, rep, Purpose::Data));
            best_split(&data.root(), min_leaf)
                .candidate()
                .map_or(0.0, |c| c.u_scaled)
        })
        .collect();
    sorted.sort_by(f64::total_cmp);
    let quantiles = levels
        .iter()
        .map(|&q| Ok((q, empirical_quantile(&sorted, q), critical_value(1.0 - q, params)?)))
        .collect::<Result<_>>()?;
    Ok(NullCdfResult {
        sorted,
        params,
        quantiles,
    })
}

/// How the mean shift scales with `n` along a detection curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Amplitude {
    /// `mu_r - mu_l = n^(-exponent)`.
    Power { exponent: f64 },
    /// `mu_r - mu_l = sigma * theta_n(eta)`.
    Stepsize { eta: f64 },
}

impl Default for Amplitude {
    fn default() -> Self {
        Amplitude::Power { exponent: 0.2 }
    }
}

impl Amplitude {
    pub fn shift(self, n: usize, t0: f64, sigma: f64) -> f64 {
        match self {
            Amplitude::Power { exponent } => (n as f64).powf(-exponent),
            Amplitude::Stepsize { eta } => sigma * stepsize_amplitude(n, t0, eta),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectionPoint {
    pub n: usize,
    pub shift: f64,
    pub critical_value: f64,
    pub detected: usize,
    pub reps: usize,
}

impl DetectionPoint {
    pub fn fraction(&self) -> f64 {
        self.detected as f64 / self.reps as f64
    }
}

pub fn detection_csv(points: &[DetectionPoint]) -> String {
    csv_text(
        &["n", "shift", "critical_value", "detected", "reps", "fraction"],
        points.iter().map(|p| {
            vec![
                p.n.to_string(),
                format_real(p.shift),
                format_real(p.critical_value),
                p.detected.to_string(),
                p.reps.to_string(),
                format_real(p.fraction()),
            ]
        }),
    )
}

/// Fraction of alternative datasets whose root statistic exceeds `u_eps`.
///
/// `base.n` and `base.mu_r` are replaced per grid point: `mu_r = mu_l + shift`.
/// Grid point `g`, replication `r` uses stream `(g << 32) | r`.
pub fn experiment_detection(
    base: &AltConfig,
    amplitude: Amplitude,
    n_grid: &[usize],
    reps: usize,
    eps: f64,
) -> Result<Vec<DetectionPoint>> {
    if reps == 0 || reps >= 1 << 32 {
        return Err(Error::domain("reps must lie in [1, 2^32)"));
    }
    n_grid
        .iter()
        .enumerate()
        .map(|(g, &n)| {
            let shift = amplitude.shift(n, base.t0, base.sigma);
            let cfg = AltConfig {
                n,
                mu_r: base.mu_l + shift,
                ..*base
            };
            cfg.validate()?;
            let u_eps = critical_value(eps, PValueParams::new(n, cfg.d)?)?;
            let detected = (0..reps as u64)
                .into_par_iter()
                .filter(|&rep| {
                    let stream = ((g as u64) << 32) | rep;
                    let data = sample_alt(&cfg, &mut SimRng::substream(cfg.seed, stream, Purpose::Data));
                    best_split(&data.root(), 1)
                        .candidate()
                        .is_some_and(|c| c.u_scaled > u_eps)
                })
                .count();
            Ok(DetectionPoint {
                n,
                shift,
                critical_value: u_eps,
                detected,
                reps,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceRow {
    pub leaves: usize,
    pub alpha: f64,
    pub cum_p: f64,
    pub train_mse: f64,
    pub test_mse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeufeldReport {
    pub rows: Vec<SequenceRow>,
    pub selected_index: usize,
    pub selected: TreeNode,
    pub full: TreeNode,
}

impl NeufeldReport {
    pub fn selected_leaves(&self) -> usize {
        self.rows[self.selected_index].leaves
    }

    /// `(j, threshold)` of the selected tree's root split.
    pub fn first_split(&self) -> Option<(usize, f64)> {
        match &self.selected {
            TreeNode::Split(s) => Some((s.j, s.threshold)),
            TreeNode::Leaf(_) => None,
        }
    }

    pub fn cum_p(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.cum_p).collect()
    }

    pub fn to_csv(&self) -> String {
        csv_text(
            &["index", "leaves", "alpha", "cum_p", "train_mse", "test_mse", "selected"],
            self.rows.iter().enumerate().map(|(k, r)| {
                vec![
                    k.to_string(),
                    r.leaves.to_string(),
                    format_real(r.alpha),
                    format_real(r.cum_p),
                    format_real(r.train_mse),
                    format_real(r.test_mse),
                    (k == self.selected_index).to_string(),
                ]
            }),
        )
    }
}

fn mse_on(tree: &TreeNode, data: &Dataset, rows: impl Iterator<Item = usize>) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for i in rows {
        let x = data.row(i);
        let e = data.y()[i] - tree.predict_row(&x);
        total += e * e;
        count += 1;
    }
    total / count as f64
}

/// Full tree, pruning path and p-value selection for one replication.
///
/// Training data comes from stream `(rep, Data)`, the test set of size
/// `test_n` from `(rep, TestData)`.
pub fn neufeld_replicate(cfg: &NeufeldConfig, delta: Delta, test_n: usize, rep: u64) -> Result<NeufeldReport> {
    cfg.validate()?;
    if test_n == 0 {
        return Err(Error::domain("test set must be nonempty"));
    }
    let train = sample_neufeld(cfg, cfg.n, &mut SimRng::substream(cfg.seed, rep, Purpose::Data));
    let test = sample_neufeld(cfg, test_n, &mut SimRng::substream(cfg.seed, rep, Purpose::TestData));
    let full = grow(&train, STUDY_GROW);
    let seq = cost_complexity_sequence(&full);
    let report = select(&seq, StopConfig { delta });
    let rows = seq
        .trees
        .iter()
        .zip(&seq.alphas)
        .zip(&seq.cum_p)
        .map(|((tree, &alpha), &cum_p)| SequenceRow {
            leaves: tree.n_leaves(),
            alpha,
            cum_p,
            train_mse: tree.leaf_sse() / train.n() as f64,
            test_mse: mse_on(tree, &test, 0..test.n()),
        })
        .collect();
    Ok(NeufeldReport {
        rows,
        selected_index: report.selected_index,
        selected: seq.trees[report.selected_index].clone(),
        full,
    })
}

pub fn experiment_neufeld(cfg: &NeufeldConfig, delta: Delta, test_n: usize) -> Result<NeufeldReport> {
    neufeld_replicate(cfg, delta, test_n, 0)
}

/// Replications `0..reps` of [`neufeld_replicate`].
pub fn neufeld_study(cfg: &NeufeldConfig, delta: Delta, test_n: usize, reps: usize) -> Result<Vec<NeufeldReport>> {
    (0..reps as u64)
        .into_par_iter()
        .map(|rep| neufeld_replicate(cfg, delta, test_n, rep))
        .collect()
}

pub fn neufeld_study_csv(reports: &[NeufeldReport]) -> String {
    csv_text(
        &[
            "rep",
            "selected_leaves",
            "first_split_j",
            "first_split_threshold",
            "selected_test_mse",
        ],
        reports.iter().enumerate().map(|(k, r)| {
            let (j, t) = r
                .first_split()
                .map_or((String::new(), String::new()), |(j, t)| (j.to_string(), format_real(t)));
            vec![
                k.to_string(),
                r.selected_leaves().to_string(),
                j,
                t,
                format_real(r.rows[r.selected_index].test_mse),
            ]
        }),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CvConfig {
    pub folds: usize,
    pub train_fraction: f64,
    /// Reuse the replication-0 train/test split in every replication, so
    /// only the fold assignment varies.
    pub fixed_split: bool,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            folds: 5,
            train_fraction: 0.8,
            fixed_split: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvReplicate {
    pub rep: usize,
    pub cv_alpha: f64,
    pub cv_leaves: usize,
    pub cv_test_rmse: f64,
    /// One `(leaves, test_rmse)` per requested delta.
    pub pvalue: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvContrastReport {
    pub deltas: Vec<Delta>,
    pub replicates: Vec<CvReplicate>,
}

impl CvContrastReport {
    /// `(leaves, count)` ascending by leaves.
    pub fn cv_size_histogram(&self) -> Vec<(usize, usize)> {
        histogram(self.replicates.iter().map(|r| r.cv_leaves))
    }

    pub fn pvalue_size_histogram(&self, k: usize) -> Vec<(usize, usize)> {
        histogram(self.replicates.iter().map(|r| r.pvalue[k].0))
    }

    pub fn to_csv(&self) -> String {
        let mut header = vec![
            "rep".to_string(),
            "cv_alpha".into(),
            "cv_leaves".into(),
            "cv_test_rmse".into(),
        ];
        for d in &self.deltas {
            header.push(format!("pvalue_leaves_{d}"));
            header.push(format!("pvalue_test_rmse_{d}"));
        }
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        csv_text(
            &header,
            self.replicates.iter().map(|r| {
                let mut row = vec![
                    r.rep.to_string(),
                    format_real(r.cv_alpha),
                    r.cv_leaves.to_string(),
                    format_real(r.cv_test_rmse),
                ];
                for (leaves, e) in &r.pvalue {
                    row.push(leaves.to_string());
                    row.push(format_real(*e));
                }
                row
            }),
        )
    }
}

fn histogram(values: impl Iterator<Item = usize>) -> Vec<(usize, usize)> {
    let mut counts = std::collections::BTreeMap::new();
    for v in values {
        *counts.entry(v).or_insert(0) += 1;
    }
    counts.into_iter().collect()
}

fn sequence_on(data: &Dataset, rows: &[usize]) -> NestedSequence {
    cost_complexity_sequence(&grow(&data.subset(rows), STUDY_GROW))
}

/// Cross-validated cost-complexity pruning against p-value selection.
///
/// One dataset of size `cfg.n` comes from the seed. Each replication draws a
/// fresh train/test split (stream `(rep, Split)`, or `(0, Split)` with
/// `fixed_split`) and fresh folds (stream `(rep, Folds)`). Candidate alphas are those of the training pruning path;
/// the CV error of an alpha uses, on each fold, the subtree of the fold
/// sequence that alpha selects. Ties go to the smallest alpha.
pub fn experiment_cv_contrast(
    cfg: &NeufeldConfig,
    cv: CvConfig,
    reps: usize,
    deltas: &[Delta],
) -> Result<CvContrastReport> {
    cfg.validate()?;
    if cv.folds < 2 {
        return Err(Error::domain("need at least two folds"));
    }
    if !(cv.train_fraction > 0.0 && cv.train_fraction < 1.0) {
        return Err(Error::domain("train fraction must lie in (0, 1)"));
    }
    let data = sample_neufeld(cfg, cfg.n, &mut SimRng::substream(cfg.seed, 0, Purpose::Data));
    let n_train = (cv.train_fraction * cfg.n as f64).round() as usize;
    if n_train < cv.folds || n_train >= cfg.n {
        return Err(Error::domain("train/test split leaves an empty part"));
    }
    let replicates = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut order: Vec<usize> = (0..cfg.n).collect();
            let split_rep = if cv.fixed_split { 0 } else { rep as u64 };
            SimRng::substream(cfg.seed, split_rep, Purpose::Split).shuffle(&mut order);
            let (train_rows, test_rows) = order.split_at(n_train);
            let mut train_rows = train_rows.to_vec();
            train_rows.sort_unstable();
            let train = data.subset(&train_rows);

            let mut positions: Vec<usize> = (0..n_train).collect();
            SimRng::substream(cfg.seed, rep as u64, Purpose::Folds).shuffle(&mut positions);
            let mut fold_of = vec![0; n_train];
            for (k, &p) in positions.iter().enumerate() {
                fold_of[p] = k % cv.folds;
            }

            let seq = sequence_on(&train, &(0..n_train).collect::<Vec<_>>());
            let mut alphas = seq.alphas.clone();
            alphas.sort_by(f64::total_cmp);
            alphas.dedup();

            let mut cv_error = vec![0.0; alphas.len()];
            for fold in 0..cv.folds {
                let fit_rows: Vec<usize> = (0..n_train).filter(|&i| fold_of[i] != fold).collect();
                let fold_seq = sequence_on(&train, &fit_rows);
                let held: Vec<usize> = (0..n_train).filter(|&i| fold_of[i] == fold).collect();
                for (e, &alpha) in cv_error.iter_mut().zip(&alphas) {
                    let tree = &fold_seq.trees[fold_seq.index_for_alpha(alpha)];
                    *e += mse_on(tree, &train, held.iter().copied()) / cv.folds as f64;
                }
            }
            let best = cv_error
                .iter()
                .enumerate()
                .fold(0, |best, (k, &e)| if e < cv_error[best] { k } else { best });
            let cv_alpha = alphas[best];
            let cv_tree = &seq.trees[seq.index_for_alpha(cv_alpha)];

            let test = data.subset(test_rows);
            let test_rmse = |tree: &TreeNode| mse_on(tree, &test, 0..test.n()).sqrt();
            let pvalue = deltas
                .iter()
                .map(|&delta| {
                    let tree = &seq.trees[select(&seq, StopConfig { delta }).selected_index];
                    (tree.n_leaves(), test_rmse(tree))
                })
                .collect();
            CvReplicate {
                rep,
                cv_alpha,
                cv_leaves: cv_tree.n_leaves(),
                cv_test_rmse: test_rmse(cv_tree),
                pvalue,
            }
        })
        .collect();
    Ok(CvContrastReport {
        deltas: deltas.to_vec(),
        replicates,
    })
}
