//! L2 boosting with p-value selected weak learners.
//!
//! Each iteration grows a full tree on the current residuals, prunes it into a
//! nested sequence and keeps the tree chosen by the cumulative p-value rule.
//! Boosting ends when that choice is the bare root, i.e. no split on the
//! residuals is significant.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::stopping::{select, Delta, StopConfig};
use crate::tree::{cost_complexity_sequence, grow, GrowConfig, TreeNode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostConfig {
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub delta: Delta,
    pub max_iters: usize,
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            max_depth: 3,
            min_leaf: 20,
            delta: Delta::new(0.05).unwrap(),
            max_iters: 10_000,
        }
    }
}

impl BoostConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::domain(format!(
                "learning rate must lie in (0, 1], got {}",
                self.learning_rate
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::domain("max_iters must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    RootLearner,
    MaxIters,
}

/// `prediction(x) = base + learning_rate * sum_i tree_i(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostModel {
    pub base: f64,
    pub learning_rate: f64,
    pub stop_reason: StopReason,
    pub d: usize,
    #[serde(default)]
    pub features: Vec<String>,
    pub trees: Vec<TreeNode>,
}

impl BoostModel {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.d {
            return Err(Error::Dimension {
                expected: self.d,
                found: x.len(),
            });
        }
        let sum: f64 = self.trees.iter().map(|t| t.predict_row(x)).sum();
        Ok(self.base + self.learning_rate * sum)
    }

    /// RMSE on `(rows, y)` after 0, 1, ..., `trees.len()` trees.
    pub fn staged_rmse(&self, rows: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
        if let Some(bad) = rows.iter().find(|r| r.len() != self.d) {
            return Err(Error::Dimension {
                expected: self.d,
                found: bad.len(),
            });
        }
        let mut pred = vec![self.base; rows.len()];
        let mut out = vec![rmse(&pred, y)];
        for tree in &self.trees {
            for (p, x) in pred.iter_mut().zip(rows) {
                *p += self.learning_rate * tree.predict_row(x);
            }
            out.push(rmse(&pred, y));
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("boost documents always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

pub fn rmse(pred: &[f64], y: &[f64]) -> f64 {
    let sse: f64 = pred.iter().zip(y).map(|(p, y)| (p - y) * (p - y)).sum();
    (sse / y.len() as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    /// 0 is the constant base model.
    pub iteration: usize,
    pub train_rmse: f64,
    pub learner_leaves: usize,
    pub learner_cum_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostReport {
    pub iterations: Vec<IterationLog>,
    /// Cumulative p-value trace of the rejected root-only candidate, if any.
    pub final_candidate_trace: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoostFit {
    pub model: BoostModel,
    pub report: BoostReport,
}

fn predict_at(tree: &TreeNode, data: &Dataset, i: usize) -> f64 {
    let mut node = tree;
    while let TreeNode::Split(s) = node {
        node = if data.column(s.j)[i] <= s.threshold {
            &s.left
        } else {
            &s.right
        };
    }
    node.mean()
}

pub fn boost_fit(data: &Dataset, config: BoostConfig) -> Result<BoostFit> {
    config.validate()?;
    let grow_config = GrowConfig {
        max_depth: config.max_depth,
        min_leaf: config.min_leaf,
    };
    let y = data.y();
    let base = data.mean_response();
    let mut fitted = vec![base; data.n()];
    let mut work = data.clone();
    let mut trees = Vec::new();
    let mut iterations = vec![IterationLog {
        iteration: 0,
        train_rmse: rmse(&fitted, y),
        learner_leaves: 1,
        learner_cum_p: 0.0,
    }];
    let mut final_candidate_trace = None;
    let mut stop_reason = StopReason::MaxIters;

    for iteration in 1..=config.max_iters {
        let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(y, f)| y - f).collect();
        work.set_response(residuals)?;
        let full = grow(&work, grow_config);
        let learner = if config.delta.is_infinite() {
            full
        } else {
            let seq = cost_complexity_sequence(&full);
            let report = select(&seq, StopConfig { delta: config.delta });
            if report.selected_index == 0 {
                final_candidate_trace = Some(report.cum_p_trace);
            }
            seq.trees.into_iter().nth(report.selected_index).unwrap()
        };
        if learner.is_leaf() {
            stop_reason = StopReason::RootLearner;
            break;
        }
        for (i, f) in fitted.iter_mut().enumerate() {
            *f += config.learning_rate * predict_at(&learner, &work, i);
        }
        iterations.push(IterationLog {
            iteration,
            train_rmse: rmse(&fitted, y),
            learner_leaves: learner.n_leaves(),
            learner_cum_p: learner.cumulative_p(),
        });
        trees.push(learner);
    }

    Ok(BoostFit {
        model: BoostModel {
            base,
            learning_rate: config.learning_rate,
            stop_reason,
            d: data.d(),
            features: data.names().to_vec(),
            trees,
        },
        report: BoostReport {
            iterations,
            final_candidate_trace,
        },
    })
}
