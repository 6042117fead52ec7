//! Cumulative p-value stopping rule over a nested tree sequence.
//!
//! Walking root-first, a tree is admissible while the sum of all its split
//! p-values stays at or below `delta`; the selected tree is the predecessor of
//! the first tree that violates the bound. Since p-values are nonnegative the
//! cumulative sums are nondecreasing, so no later tree can become admissible
//! again once one has failed.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::NestedSequence;

/// Tolerance on the summed p-values; `f64::INFINITY` disables the rule.
///
/// Serialized as a JSON number, or the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Delta(f64);

impl Delta {
    pub const INFINITE: Delta = Delta(f64::INFINITY);

    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && !value.is_nan() {
            Ok(Delta(value))
        } else {
            Err(Error::domain(format!("delta must be positive, got {value}")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }
}

impl Serialize for Delta {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Delta {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Number(f64),
            Text(String),
        }
        let parsed = match Repr::deserialize(d)? {
            Repr::Number(v) => Delta::new(v),
            Repr::Text(t) => t.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

impl FromStr for Delta {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "+inf" => Ok(Delta::INFINITE),
            other => other
                .parse::<f64>()
                .map_err(|_| Error::domain(format!("invalid delta {s:?}")))
                .and_then(Delta::new),
        }
    }
}

impl fmt::Display for Delta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopConfig {
    pub delta: Delta,
}

impl Default for StopConfig {
    fn default() -> Self {
        Self { delta: Delta(0.05) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub selected_index: usize,
    pub selected_leaves: usize,
    pub cum_p_trace: Vec<f64>,
    /// First tree whose cumulative p-value exceeds `delta`.
    pub stopped_at: Option<usize>,
}

/// `(selected_index, stopped_at)` for a root-first cumulative p-value trace.
///
/// The root (empty sum) is always admissible.
pub fn select_from_trace(cum_p: &[f64], delta: Delta) -> (usize, Option<usize>) {
    match cum_p.iter().skip(1).position(|&p| p > delta.get()) {
        Some(k) => (k, Some(k + 1)),
        None => (cum_p.len().saturating_sub(1), None),
    }
}

pub fn select(seq: &NestedSequence, config: StopConfig) -> SelectionReport {
    let (selected_index, stopped_at) = select_from_trace(&seq.cum_p, config.delta);
    SelectionReport {
        selected_index,
        selected_leaves: seq.trees[selected_index].n_leaves(),
        cum_p_trace: seq.cum_p.clone(),
        stopped_at,
    }
}

/// Single split comparator `mse1 - mse2 - penalty * sigma2_hat > 0`.
///
/// With `penalty = u_eps` this is the p-value test at level `eps`; `2` gives
/// Mallows' C_p and `ln(n)` gives BIC.
pub fn accept_single_split(mse1: f64, mse2: f64, sigma2_hat: f64, penalty: f64) -> bool {
    mse1 - mse2 - penalty * sigma2_hat > 0.0
}
