//! JSON model and sequence documents.
//!
//! Model: `{"d": 3, "config": {...}, "features": [...], "root": node}` where a
//! node is `{"leaf": {"mean", "n", "sse"}}` or
//! `{"split": {"j", "threshold", "p_value", "n", "mean", "sse", "left", "right"}}`.
//! Reals are written in shortest round-trip form, so reading a document back
//! reproduces every stored `f64` bit for bit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{predict_rows, GrowConfig, NestedSequence, TreeNode};
use crate::error::{Error, Result};

/// A grown or selected tree together with what it was fitted on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub d: usize,
    pub config: GrowConfig,
    #[serde(default)]
    pub features: Vec<String>,
    pub root: TreeNode,
}

impl RegressionTree {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.d {
            return Err(Error::Dimension {
                expected: self.d,
                found: x.len(),
            });
        }
        Ok(self.root.predict_row(x))
    }

    pub fn predict_all(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        predict_rows(&self.root, self.d, rows)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tree documents always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let tree: Self = serde_json::from_str(text)?;
        tree.validate()?;
        Ok(tree)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&read_text(path)?)
    }

    fn validate(&self) -> Result<()> {
        match self.root.max_feature() {
            Some(j) if j >= self.d => Err(Error::Parse {
                line: 0,
                column: 0,
                message: format!("split on covariate {j} but d = {}", self.d),
            }),
            _ => Ok(()),
        }
    }
}

/// A nested sequence as written to disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceFile {
    pub d: usize,
    pub config: GrowConfig,
    #[serde(default)]
    pub features: Vec<String>,
    pub trees: Vec<TreeNode>,
    pub alphas: Vec<f64>,
    pub cum_p: Vec<f64>,
}

impl SequenceFile {
    pub fn new(d: usize, config: GrowConfig, features: Vec<String>, seq: &NestedSequence) -> Self {
        Self {
            d,
            config,
            features,
            trees: seq.trees.clone(),
            alphas: seq.alphas.clone(),
            cum_p: seq.cum_p.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sequence documents always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let seq: Self = serde_json::from_str(text)?;
        if seq.trees.len() != seq.cum_p.len() || seq.trees.len() != seq.alphas.len() {
            return Err(Error::Parse {
                line: 0,
                column: 0,
                message: format!(
                    "{} trees but {} cum_p and {} alphas entries",
                    seq.trees.len(),
                    seq.cum_p.len(),
                    seq.alphas.len()
                ),
            });
        }
        Ok(seq)
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
