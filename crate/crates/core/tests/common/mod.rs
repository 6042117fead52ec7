#![allow(dead_code)]

use std::path::{Path, PathBuf};

use proptest::prelude::*;
use pvtree::tree::{Split, TreeNode};
use pvtree::Dataset;

/// Exhaustive split search: every `(j, r)` recomputes both groups' sums of
/// squares from scratch.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSplit {
    pub j: usize,
    pub r: usize,
    pub u_scaled: f64,
    pub threshold: f64,
}

fn sum_sq(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v - mean) * (v - mean)).sum()
}

pub fn oracle_split(data: &Dataset, rows: &[usize], min_leaf: usize) -> Option<OracleSplit> {
    let n = rows.len();
    let min_leaf = min_leaf.max(1);
    if n < 2 * min_leaf {
        return None;
    }
    let y: Vec<f64> = rows.iter().map(|&i| data.y()[i]).collect();
    let s = sum_sq(&y);
    if y.iter().all(|&v| v == y[0]) {
        return None;
    }
    let mut best: Option<OracleSplit> = None;
    for j in 0..data.d() {
        let col = data.column(j);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| col[rows[a]].partial_cmp(&col[rows[b]]).unwrap().then(a.cmp(&b)));
        for r in min_leaf..=n - min_leaf {
            if r == 0 || r == n {
                continue;
            }
            let (lo, hi) = (col[rows[order[r - 1]]], col[rows[order[r]]]);
            if lo == hi {
                continue;
            }
            let left: Vec<f64> = order[..r].iter().map(|&k| y[k]).collect();
            let right: Vec<f64> = order[r..].iter().map(|&k| y[k]).collect();
            let rel = ((s - sum_sq(&left) - sum_sq(&right)) / s).min(1.0);
            let better = match &best {
                None => true,
                Some(b) => rel > b.u_scaled / n as f64 * (1.0 + 1e-10),
            };
            if better {
                best = Some(OracleSplit {
                    j,
                    r,
                    u_scaled: n as f64 * rel,
                    threshold: (lo + hi) / 2.0,
                });
            }
        }
    }
    best
}

/// Random node: `n` rows, `d` covariates; half of the covariates are rounded
/// to one decimal to create ties.
pub fn node_strategy(max_n: usize, max_d: usize) -> impl Strategy<Value = Dataset> {
    (2usize..=max_n, 1usize..=max_d)
        .prop_flat_map(|(n, d)| {
            (
                prop::collection::vec(-3.0f64..3.0, n),
                prop::collection::vec(prop::collection::vec(-2.0f64..2.0, n), d),
                prop::collection::vec(any::<bool>(), d),
                -2.0f64..2.0,
            )
        })
        .prop_map(|(noise, mut columns, rounded, slope)| {
            for (col, round) in columns.iter_mut().zip(rounded) {
                if round {
                    col.iter_mut().for_each(|x| *x = (*x * 10.0).round() / 10.0);
                }
            }
            let y = noise
                .iter()
                .zip(&columns[0])
                .map(|(e, x)| e + slope * (*x > 0.0) as u8 as f64)
                .collect();
            Dataset::new(y, columns, None).unwrap()
        })
}

/// The tree obtained from `full` by keeping exactly the internal nodes whose
/// preorder ids are in `keep`.
pub fn restrict(full: &TreeNode, keep: &[usize]) -> TreeNode {
    fn walk(node: &TreeNode, next: &mut usize, keep: &[usize]) -> TreeNode {
        let id = *next;
        *next += 1;
        match node {
            TreeNode::Leaf(_) => node.clone(),
            TreeNode::Split(s) => {
                let left = walk(&s.left, next, keep);
                let right = walk(&s.right, next, keep);
                if keep.contains(&id) {
                    TreeNode::Split(Split {
                        left: Box::new(left),
                        right: Box::new(right),
                        ..s.clone()
                    })
                } else {
                    node.collapsed()
                }
            }
        }
    }
    walk(full, &mut 0, keep)
}

pub fn write_csv(dir: &Path, name: &str, header: &[&str], rows: &[Vec<f64>]) -> PathBuf {
    let mut text = header.join(",");
    text.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

/// Writes `data` as a CSV with the response in column `y`.
pub fn write_dataset(dir: &Path, name: &str, data: &Dataset) -> PathBuf {
    let mut header = vec!["y".to_string()];
    header.extend(data.names().iter().cloned());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<f64>> = (0..data.n())
        .map(|i| {
            let mut row = vec![data.y()[i]];
            row.extend(data.row(i));
            row
        })
        .collect();
    write_csv(dir, name, &header, &rows)
}
