mod common;

use common::{node_strategy, oracle_split};
use proptest::prelude::*;
use pvtree::splitfinder::{best_split, NoSplitReason, SplitOutcome};
use pvtree::{Dataset, NodeData};

fn split_of(data: &Dataset, min_leaf: usize) -> Option<pvtree::SplitCandidate> {
    best_split(&data.root(), min_leaf).into_candidate()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn matches_exhaustive_search(data in node_strategy(60, 5), min_leaf in 1usize..6) {
        let rows: Vec<usize> = (0..data.n()).collect();
        let fast = split_of(&data, min_leaf);
        let slow = oracle_split(&data, &rows, min_leaf);
        match (fast, slow) {
            (None, None) => {}
            (Some(f), Some(s)) => {
                prop_assert_eq!((f.j_star, f.r_star), (s.j, s.r));
                prop_assert!((f.u_scaled - s.u_scaled).abs() <= 1e-9 * s.u_scaled.abs().max(1e-300));
                // Both are midpoints; the formulas may differ in the last bit.
                prop_assert!((f.threshold - s.threshold).abs() <= 4.0 * f64::EPSILON * s.threshold.abs().max(1.0));
            }
            (f, s) => prop_assert!(false, "fast {:?} vs oracle {:?}", f, s),
        }
    }

    #[test]
    fn subset_nodes_match_oracle(data in node_strategy(60, 4), keep in prop::collection::vec(any::<bool>(), 60)) {
        let rows: Vec<usize> = (0..data.n()).filter(|&i| keep[i]).collect();
        prop_assume!(!rows.is_empty());
        let node = NodeData::new(&data, rows.clone());
        let fast = best_split(&node, 1).into_candidate();
        let slow = oracle_split(&data, &rows, 1);
        prop_assert_eq!(fast.as_ref().map(|c| (c.j_star, c.r_star)), slow.as_ref().map(|s| (s.j, s.r)));
    }

    #[test]
    fn relative_improvement_in_unit_interval(data in node_strategy(60, 5)) {
        if let Some(c) = split_of(&data, 1) {
            prop_assert!(c.rel_improvement >= 0.0 && c.rel_improvement <= 1.0);
            prop_assert!(c.u_scaled >= 0.0 && c.u_scaled <= data.n() as f64);
            prop_assert!(c.p_value >= 0.0);
        }
    }

    #[test]
    fn threshold_sends_r_rows_left(data in node_strategy(60, 5)) {
        if let Some(c) = split_of(&data, 1) {
            let left = data.column(c.j_star).iter().filter(|&&x| x <= c.threshold).count();
            prop_assert_eq!(left, c.r_star);
        }
    }

    #[test]
    fn row_order_is_irrelevant(data in node_strategy(40, 4), seed in any::<u64>()) {
        let mut order: Vec<usize> = (0..data.n()).collect();
        let mut rng = pvtree::simlab::SimRng::substream(seed, 0, pvtree::simlab::Purpose::Split);
        rng.shuffle(&mut order);
        let shuffled = data.subset(&order);
        let a = split_of(&data, 1);
        let b = split_of(&shuffled, 1);
        match (a, b) {
            (Some(a), Some(b)) => {
                prop_assert_eq!((a.j_star, a.r_star), (b.j_star, b.r_star));
                prop_assert_eq!(a.threshold, b.threshold);
                prop_assert!((a.u_scaled - b.u_scaled).abs() <= 1e-9 * a.u_scaled.max(1.0));
            }
            (None, None) => {}
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
        }
    }

    #[test]
    fn response_location_scale_invariance(data in node_strategy(40, 3), scale in 0.1f64..10.0, shift in -100.0f64..100.0) {
        let y: Vec<f64> = data.y().iter().map(|v| scale * v + shift).collect();
        let moved = data.with_response(y).unwrap();
        let (a, b) = (split_of(&data, 1), split_of(&moved, 1));
        if let (Some(a), Some(b)) = (a, b) {
            prop_assert!((a.u_scaled - b.u_scaled).abs() <= 1e-7 * a.u_scaled.max(1.0));
            // Rank and covariate agree unless two candidates were within rounding.
            if a.u_scaled > 0.0 {
                prop_assert!((a.j_star, a.r_star) == (b.j_star, b.r_star)
                    || (a.u_scaled - b.u_scaled).abs() <= 1e-7 * a.u_scaled);
            }
        }
    }

    #[test]
    fn monotone_covariate_transform_keeps_rank(data in node_strategy(40, 3)) {
        let columns: Vec<Vec<f64>> = data.columns().iter().map(|c| c.iter().map(|x| x.exp()).collect()).collect();
        let moved = Dataset::new(data.y().to_vec(), columns, None).unwrap();
        let (a, b) = (split_of(&data, 1), split_of(&moved, 1));
        if let (Some(a), Some(b)) = (a, b) {
            prop_assert_eq!((a.j_star, a.r_star), (b.j_star, b.r_star));
            prop_assert!((a.u_scaled - b.u_scaled).abs() <= 1e-12 * a.u_scaled.max(1.0));
        }
    }
}

#[test]
fn constant_response_has_no_split() {
    let data = Dataset::new(vec![1.0; 30], vec![(0..30).map(f64::from).collect()], None).unwrap();
    assert_eq!(
        best_split(&data.root(), 1),
        SplitOutcome::NoSplit(NoSplitReason::ConstantResponse)
    );
}

#[test]
fn large_node_p_value_is_bonferroni_scaled() {
    let x: Vec<f64> = (0..100).map(f64::from).collect();
    let y: Vec<f64> = x
        .iter()
        .map(|&v| if v < 50.0 { 0.0 } else { 0.3 } + (v * 0.37).sin())
        .collect();
    let one = Dataset::new(y.clone(), vec![x.clone()], None).unwrap();
    let three = Dataset::new(y, vec![vec![0.0; 100], x.clone(), vec![1.0; 100]], None).unwrap();
    let c1 = split_of(&one, 1).unwrap();
    let c3 = split_of(&three, 1).unwrap();
    assert_eq!(c3.j_star, 1);
    assert_eq!(c1.u_scaled, c3.u_scaled);
    assert!((c3.p_value - 3.0 * c1.p_value).abs() <= 1e-12 * c3.p_value);
}
