//! Regression trees grown by greedy CART and pruned by a deterministic
//! p-value rule, plus L2 boosting that stops when no weak learner is
//! significant.
//!
//! The pieces, bottom-up:
//!
//! - [`numerics`]: normal cdf and quantile, the asymptotic split p-value
//!   `p_n(u)` and its critical values `u_eps`.
//! - [`splitfinder`]: the best single split of a node and its statistic
//!   `U_max = n * (S - S_split) / S`.
//! - [`tree`]: growing, cost-complexity pruning into a nested sequence, and
//!   the JSON model format.
//! - [`stopping`]: selecting a tree from the sequence by its summed split
//!   p-values.
//! - [`boosting`]: L2 boosting with p-value selected learners.
//! - [`simlab`]: seeded generators and Monte Carlo experiments.
//! - [`cli`]: the `pvtree` command line tool.
//!
//! ```
//! use pvtree::{grow, cost_complexity_sequence, select, Dataset, GrowConfig, StopConfig};
//!
//! let x: Vec<f64> = (0..200).map(f64::from).collect();
//! let y: Vec<f64> = x.iter().map(|&v| if v < 100.0 { 0.0 } else { 1.0 }).collect();
//! let data = Dataset::new(y, vec![x], None)?;
//!
//! let full = grow(&data, GrowConfig::default());
//! let seq = cost_complexity_sequence(&full);
//! let chosen = select(&seq, StopConfig::default());
//! assert_eq!(chosen.selected_leaves, 2);
//! # Ok::<(), pvtree::Error>(())
//! ```

pub mod boosting;
pub mod cli;
pub mod data;
pub mod error;
pub mod numerics;
pub mod simlab;
pub mod splitfinder;
pub mod stopping;
pub mod tree;

pub use boosting::{boost_fit, BoostConfig, BoostFit, BoostModel, StopReason};
pub use data::{load_csv, Dataset, IngestSpec, NodeData};
pub use error::{Error, Result};
pub use numerics::{critical_value, p_value_approx, PValueParams, Penalty};
pub use splitfinder::{best_split, SplitCandidate, SplitOutcome};
pub use stopping::{select, Delta, SelectionReport, StopConfig};
pub use tree::{cost_complexity_sequence, grow, GrowConfig, NestedSequence, RegressionTree, TreeNode};

#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/split-statistic.md")]
    pub mod split_statistic {}
    #[doc = include_str!("../../../book/src/p-values.md")]
    pub mod p_values {}
    #[doc = include_str!("../../../book/src/pruning.md")]
    pub mod pruning {}
    #[doc = include_str!("../../../book/src/stopping.md")]
    pub mod stopping {}
    #[doc = include_str!("../../../book/src/boosting.md")]
    pub mod boosting {}
    #[doc = include_str!("../../../book/src/simulations.md")]
    pub mod simulations {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
    #[doc = include_str!("../../../book/src/formats.md")]
    pub mod formats {}
}
