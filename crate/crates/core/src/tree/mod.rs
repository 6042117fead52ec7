//! Greedy L2 CART trees annotated with split p-values.
//!
//! Every internal node stores the Bonferroni p-value of its split, computed
//! from the node's own sample size and the global covariate count. Pruning
//! (see [`cost_complexity_sequence`]) turns a fully grown tree into the nested
//! sequence that the stopping rule walks.

mod format;
mod prune;

use serde::{Deserialize, Serialize};

pub(crate) use format::read_text;
pub use format::{RegressionTree, SequenceFile};
pub use prune::{cost_complexity_sequence, NestedSequence};

use crate::data::{Dataset, NodeData};
use crate::error::{Error, Result};
use crate::splitfinder::{best_split, SplitCandidate, SplitOutcome};

/// Subtrees at least this large are grown on separate rayon tasks.
const PARALLEL_GROW_ROWS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowConfig {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for GrowConfig {
    fn default() -> Self {
        Self {
            max_depth: 4,
            min_leaf: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leaf {
    pub mean: f64,
    pub n: usize,
    pub sse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub j: usize,
    pub threshold: f64,
    pub p_value: f64,
    pub n: usize,
    pub mean: f64,
    pub sse: f64,
    pub left: Box<TreeNode>,
    pub right: Box<TreeNode>,
}

/// A binary regression tree node. Rows with `x[j] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    #[serde(rename = "leaf")]
    Leaf(Leaf),
    #[serde(rename = "split")]
    Split(Split),
}

impl TreeNode {
    pub fn leaf(mean: f64, n: usize, sse: f64) -> Self {
        TreeNode::Leaf(Leaf { mean, n, sse })
    }

    pub fn mean(&self) -> f64 {
        match self {
            TreeNode::Leaf(l) => l.mean,
            TreeNode::Split(s) => s.mean,
        }
    }

    pub fn n_node(&self) -> usize {
        match self {
            TreeNode::Leaf(l) => l.n,
            TreeNode::Split(s) => s.n,
        }
    }

    /// Within-node sum of squared deviations from the node mean.
    pub fn sse(&self) -> f64 {
        match self {
            TreeNode::Leaf(l) => l.sse,
            TreeNode::Split(s) => s.sse,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, TreeNode::Leaf(_))
    }

    /// The same node with its subtree removed.
    pub fn collapsed(&self) -> TreeNode {
        TreeNode::leaf(self.mean(), self.n_node(), self.sse())
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf(_) => 1,
            TreeNode::Split(s) => s.left.n_leaves() + s.right.n_leaves(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf(_) => 0,
            TreeNode::Split(s) => 1 + s.left.depth().max(s.right.depth()),
        }
    }

    /// Sum of leaf SSEs, the training loss `R(T)`.
    pub fn leaf_sse(&self) -> f64 {
        match self {
            TreeNode::Leaf(l) => l.sse,
            TreeNode::Split(s) => s.left.leaf_sse() + s.right.leaf_sse(),
        }
    }

    /// Internal nodes in preorder.
    pub fn splits(&self) -> Vec<&Split> {
        let mut out = Vec::new();
        fn walk<'a>(node: &'a TreeNode, out: &mut Vec<&'a Split>) {
            if let TreeNode::Split(s) = node {
                out.push(s);
                walk(&s.left, out);
                walk(&s.right, out);
            }
        }
        walk(self, &mut out);
        out
    }

    /// Sum of all split p-values, accumulated in preorder.
    pub fn cumulative_p(&self) -> f64 {
        self.splits().iter().fold(0.0, |acc, s| acc + s.p_value)
    }

    /// Leaf reached by `x`. Panics if `x` is shorter than a split index.
    pub fn leaf_for(&self, x: &[f64]) -> &TreeNode {
        let mut node = self;
        while let TreeNode::Split(s) = node {
            node = if x[s.j] <= s.threshold { &s.left } else { &s.right };
        }
        node
    }

    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.leaf_for(x).mean()
    }

    /// Largest covariate index used by any split.
    pub fn max_feature(&self) -> Option<usize> {
        self.splits().iter().map(|s| s.j).max()
    }
}

fn node_moments(ys: &[f64]) -> (f64, f64) {
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let sse = ys.iter().map(|y| (y - mean) * (y - mean)).sum();
    (mean, sse)
}

/// Grows the full greedy tree on all rows of `data`.
///
/// Splitting stops at `max_depth`, when a node has fewer than
/// `2 * min_leaf` rows, or when the node has no split.
pub fn grow(data: &Dataset, config: GrowConfig) -> TreeNode {
    grow_node(NodeData::new(data, (0..data.n()).collect::<Vec<_>>()), 0, config)
}

fn grow_node(node: NodeData<'_>, depth: usize, config: GrowConfig) -> TreeNode {
    let (mean, sse) = node_moments(&node.responses());
    let n = node.n();
    if depth >= config.max_depth {
        return TreeNode::leaf(mean, n, sse);
    }
    let candidate = match best_split(&node, config.min_leaf) {
        SplitOutcome::Split(c) => c,
        SplitOutcome::NoSplit(_) => return TreeNode::leaf(mean, n, sse),
    };
    let (left_rows, right_rows) = partition(&node, &candidate);
    let data = node.dataset();
    let (left, right) = if n >= PARALLEL_GROW_ROWS {
        rayon::join(
            || grow_node(NodeData::new(data, left_rows), depth + 1, config),
            || grow_node(NodeData::new(data, right_rows), depth + 1, config),
        )
    } else {
        (
            grow_node(NodeData::new(data, left_rows), depth + 1, config),
            grow_node(NodeData::new(data, right_rows), depth + 1, config),
        )
    };
    TreeNode::Split(Split {
        j: candidate.j_star,
        threshold: candidate.threshold,
        p_value: candidate.p_value,
        n,
        mean,
        sse,
        left: Box::new(left),
        right: Box::new(right),
    })
}

fn partition(node: &NodeData<'_>, c: &SplitCandidate) -> (Vec<usize>, Vec<usize>) {
    let col = node.dataset().column(c.j_star);
    let (left, right): (Vec<usize>, Vec<usize>) = node.row_ids().iter().partition(|&&i| col[i] <= c.threshold);
    debug_assert_eq!(left.len(), c.r_star);
    (left, right)
}

/// Predictions for every row of `rows`, checking the dimension.
pub fn predict_rows(tree: &TreeNode, d: usize, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    rows.iter()
        .map(|x| {
            if x.len() != d {
                return Err(Error::Dimension {
                    expected: d,
                    found: x.len(),
                });
            }
            Ok(tree.predict_row(x))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Dataset {
        Dataset::new(vec![0.0, 0.0, 1.0, 1.0], vec![vec![1.0, 2.0, 3.0, 4.0]], None).unwrap()
    }

    #[test]
    fn constant_response_is_single_leaf() {
        let data = Dataset::new(vec![3.25; 50], vec![(0..50).map(f64::from).collect()], None).unwrap();
        let tree = grow(
            &data,
            GrowConfig {
                max_depth: 5,
                min_leaf: 1,
            },
        );
        assert_eq!(tree, TreeNode::leaf(3.25, 50, 0.0));
    }

    #[test]
    fn toy_depth_one() {
        let tree = grow(
            &toy(),
            GrowConfig {
                max_depth: 1,
                min_leaf: 1,
            },
        );
        let TreeNode::Split(s) = &tree else {
            panic!("expected a split")
        };
        assert_eq!(s.threshold, 2.5);
        assert_eq!(s.left.mean(), 0.0);
        assert_eq!(s.right.mean(), 1.0);
        assert_eq!(s.p_value, 1.0);
        assert_eq!(tree.n_leaves(), 2);
    }

    #[test]
    fn depth_zero_is_root() {
        let tree = grow(
            &toy(),
            GrowConfig {
                max_depth: 0,
                min_leaf: 1,
            },
        );
        assert!(tree.is_leaf());
        assert_eq!(tree.mean(), 0.5);
        assert_eq!(tree.predict_row(&[100.0]), 0.5);
    }

    #[test]
    fn routing_is_left_on_equal() {
        let tree = grow(
            &toy(),
            GrowConfig {
                max_depth: 1,
                min_leaf: 1,
            },
        );
        assert_eq!(tree.predict_row(&[2.5]), 0.0);
        assert_eq!(tree.predict_row(&[2.500001]), 1.0);
    }

    #[test]
    fn predict_rows_checks_dimension() {
        let tree = grow(
            &toy(),
            GrowConfig {
                max_depth: 1,
                min_leaf: 1,
            },
        );
        assert!(matches!(
            predict_rows(&tree, 1, &[vec![1.0, 2.0]]),
            Err(Error::Dimension { expected: 1, found: 2 })
        ));
    }
}
