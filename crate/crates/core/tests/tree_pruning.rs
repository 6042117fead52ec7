mod common;

use common::restrict;
use proptest::prelude::*;
use pvtree::simlab::{gen_neufeld, NeufeldConfig, STUDY_GROW};
use pvtree::tree::{predict_rows, Split};
use pvtree::{cost_complexity_sequence, grow, select, Dataset, Delta, GrowConfig, StopConfig, TreeNode};

fn split(j: usize, threshold: f64, sse: f64, p_value: f64, left: TreeNode, right: TreeNode) -> TreeNode {
    let n = left.n_node() + right.n_node();
    let mean = (left.mean() * left.n_node() as f64 + right.mean() * right.n_node() as f64) / n as f64;
    TreeNode::Split(Split {
        j,
        threshold,
        p_value,
        n,
        mean,
        sse,
        left: Box::new(left),
        right: Box::new(right),
    })
}

/// Root (SSE 100) with a leaf (30) on the left and a split (50) into leaves
/// 20 and 25 on the right.
///
/// g(right) = (50 - 45) / 1 = 5 and g(root) = (100 - 75) / 2 = 12.5, so the
/// right split goes first; then g(root) = (100 - 80) / 1 = 20.
fn three_leaf() -> TreeNode {
    let right = split(
        1,
        0.5,
        50.0,
        0.2,
        TreeNode::leaf(1.0, 10, 20.0),
        TreeNode::leaf(2.0, 10, 25.0),
    );
    split(0, 0.0, 100.0, 0.01, TreeNode::leaf(0.0, 20, 30.0), right)
}

#[test]
fn hand_built_weakest_links() {
    let full = three_leaf();
    let seq = cost_complexity_sequence(&full);
    assert_eq!(seq.leaf_counts(), vec![1, 2, 3]);
    assert_eq!(seq.alphas, vec![20.0, 5.0, 0.0]);
    assert_eq!(seq.internal_nodes, vec![vec![], vec![0], vec![0, 2]]);
    assert_eq!(seq.added_p_values, vec![vec![], vec![0.01], vec![0.2]]);
    assert_eq!(seq.cum_p, vec![0.0, 0.01, 0.01 + 0.2]);
    assert_eq!(seq.trees[2], full);
    assert_eq!(seq.index_for_alpha(25.0), 0);
    assert_eq!(seq.index_for_alpha(20.0), 0);
    assert_eq!(seq.index_for_alpha(10.0), 1);
    assert_eq!(seq.index_for_alpha(0.0), 2);
}

#[test]
fn tied_weakest_links_collapse_together() {
    // Two sibling splits with identical g = 5 go in one step.
    let left = split(
        1,
        0.0,
        35.0,
        0.3,
        TreeNode::leaf(0.0, 10, 15.0),
        TreeNode::leaf(1.0, 10, 15.0),
    );
    let right = split(
        1,
        0.0,
        45.0,
        0.4,
        TreeNode::leaf(2.0, 10, 20.0),
        TreeNode::leaf(3.0, 10, 20.0),
    );
    let full = split(0, 0.0, 200.0, 1e-6, left, right);
    let seq = cost_complexity_sequence(&full);
    assert_eq!(seq.leaf_counts(), vec![1, 2, 4]);
    assert_eq!(seq.added_p_values[2], vec![0.3, 0.4]);
    assert_eq!(seq.alphas, vec![120.0, 5.0, 0.0]);
}

#[test]
fn stopping_on_hand_built_sequence() {
    let seq = cost_complexity_sequence(&three_leaf());
    let pick = |d: f64| {
        select(
            &seq,
            StopConfig {
                delta: Delta::new(d).unwrap(),
            },
        )
        .selected_leaves
    };
    assert_eq!(pick(0.05), 2);
    assert_eq!(pick(0.005), 1);
    assert_eq!(pick(0.5), 3);
}

fn random_data() -> impl Strategy<Value = Dataset> {
    (40usize..200, 1usize..4, any::<u64>()).prop_map(|(n, d, seed)| {
        let cfg = pvtree::simlab::NullConfig::new(n, d, 0.0, seed);
        let data = pvtree::simlab::gen_null(&cfg).unwrap();
        // Add a step so trees are not all stumps.
        let y: Vec<f64> = data
            .y()
            .iter()
            .zip(data.column(0))
            .map(|(e, x)| e + if *x > 0.3 { 1.5 } else { 0.0 })
            .collect();
        data.with_response(y).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sequence_invariants(data in random_data(), depth in 1usize..5, min_leaf in 1usize..10) {
        let full = grow(&data, GrowConfig { max_depth: depth, min_leaf });
        let seq = cost_complexity_sequence(&full);
        prop_assert_eq!(seq.trees.first().unwrap().n_leaves(), 1);
        prop_assert_eq!(seq.trees.last().unwrap(), &full);
        let leaves = seq.leaf_counts();
        prop_assert!(leaves.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(seq.alphas.windows(2).all(|w| w[0] >= w[1]));
        prop_assert_eq!(*seq.alphas.last().unwrap(), 0.0);
        prop_assert!(seq.cum_p.windows(2).all(|w| w[0] <= w[1]));
        for k in 0..seq.len() {
            let ids = &seq.internal_nodes[k];
            if k > 0 {
                prop_assert!(seq.internal_nodes[k - 1].iter().all(|id| ids.contains(id)));
            }
            prop_assert_eq!(&restrict(&full, ids), &seq.trees[k]);
            let sum: f64 = seq.trees[k].splits().iter().map(|s| s.p_value).sum();
            prop_assert!((seq.cum_p[k] - sum).abs() <= 1e-12 * sum.abs().max(1e-300));
            prop_assert_eq!(seq.trees[k].n_leaves(), ids.len() + 1);
            let total: f64 = seq.added_p_values[..=k].iter().flatten().sum();
            prop_assert!((seq.cum_p[k] - total).abs() <= 1e-9 * total.abs().max(1e-300));
        }
        // The training loss of each pruned tree is its leaf SSE and falls with size.
        let risks: Vec<f64> = seq.trees.iter().map(TreeNode::leaf_sse).collect();
        prop_assert!(risks.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    }

    #[test]
    fn grown_tree_respects_constraints(data in random_data(), depth in 0usize..5, min_leaf in 1usize..15) {
        let tree = grow(&data, GrowConfig { max_depth: depth, min_leaf });
        prop_assert!(tree.depth() <= depth);
        fn check(node: &TreeNode, min_leaf: usize) -> bool {
            match node {
                TreeNode::Leaf(l) => l.n >= min_leaf,
                TreeNode::Split(s) => s.n == s.left.n_node() + s.right.n_node()
                    && check(&s.left, min_leaf) && check(&s.right, min_leaf),
            }
        }
        prop_assert!(tree.n_leaves() == 1 || check(&tree, min_leaf));
        prop_assert_eq!(tree.n_node(), data.n());
        // In-sample predictions are the leaf means of the routed rows.
        let rows: Vec<Vec<f64>> = (0..data.n()).map(|i| data.row(i)).collect();
        let pred = predict_rows(&tree, data.d(), &rows).unwrap();
        let sse: f64 = pred.iter().zip(data.y()).map(|(p, y)| (p - y) * (p - y)).sum();
        prop_assert!((sse - tree.leaf_sse()).abs() <= 1e-8 * sse.max(1.0));
    }
}

#[test]
fn growing_is_deterministic() {
    let data = gen_neufeld(&NeufeldConfig::new(500, 1.0, 1.0, 21)).unwrap();
    assert_eq!(grow(&data, STUDY_GROW), grow(&data, STUDY_GROW));
    let permuted = data.permute_columns(&(0..data.d()).rev().collect::<Vec<_>>());
    let a = grow(&data, STUDY_GROW);
    let b = grow(&permuted, STUDY_GROW);
    assert_eq!(a.n_leaves(), b.n_leaves());
    assert_eq!(a.leaf_sse(), b.leaf_sse());
}

#[test]
fn regression_function_top_splits() {
    for seed in 0..5 {
        let data = gen_neufeld(&NeufeldConfig::new(500, 1.0, 1.0, seed)).unwrap();
        let tree = grow(&data, STUDY_GROW);
        let TreeNode::Split(root) = &tree else {
            panic!("no root split")
        };
        assert_eq!(root.j, 0, "seed {seed}");
        assert!(root.threshold.abs() < 0.15, "seed {seed}: {}", root.threshold);
        // The signal lives on the x1 <= 0 side; the next split there is on x2.
        let TreeNode::Split(left) = root.left.as_ref() else {
            panic!("no second split")
        };
        assert_eq!(left.j, 1, "seed {seed}");
        assert!(left.threshold.abs() < 0.15, "seed {seed}: {}", left.threshold);
    }
}

#[test]
fn selected_tree_predicts_levels() {
    let data = gen_neufeld(&NeufeldConfig::new(500, 1.0, 1.0, 1)).unwrap();
    let seq = cost_complexity_sequence(&grow(&data, STUDY_GROW));
    let tree = &seq.trees[select(&seq, StopConfig::default()).selected_index];
    let mut x = vec![0.0; 10];
    // Region means 0, 1, 2, 2, 3 up to noise.
    for (x1, x2, x3, want) in [
        (1.0, 0.0, 0.0, 0.0),
        (-1.0, -1.0, 1.0, 1.0),
        (-1.0, -1.0, -1.0, 2.0),
        (-1.0, 1.0, 1.0, 3.0),
    ] {
        x[0] = x1;
        x[1] = x2;
        x[2] = x3;
        let got = tree.predict_row(&x);
        assert!((got - want).abs() < 0.4, "{x1} {x2} {x3}: {got}");
    }
}
