use proptest::prelude::*;
use pvtree::boosting::rmse;
use pvtree::simlab::{gen_neufeld, gen_null, NeufeldConfig, NullConfig};
use pvtree::{boost_fit, BoostConfig, Delta, StopReason};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn training_rmse_never_increases(seed in any::<u64>(), lr in 0.05f64..1.0, depth in 1usize..4, delta in prop_oneof![Just(0.05), Just(0.5), Just(f64::INFINITY)]) {
        let data = gen_neufeld(&NeufeldConfig::new(300, 1.0, 1.0, seed)).unwrap();
        let delta = if delta.is_infinite() { Delta::INFINITE } else { Delta::new(delta).unwrap() };
        let cfg = BoostConfig { learning_rate: lr, max_depth: depth, min_leaf: 20, delta, max_iters: 60 };
        let fit = boost_fit(&data, cfg).unwrap();
        let trace: Vec<f64> = fit.report.iterations.iter().map(|it| it.train_rmse).collect();
        prop_assert!(trace.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)), "{:?}", trace);
        prop_assert_eq!(fit.report.iterations.len(), fit.model.trees.len() + 1);
        // The logged trace agrees with the model's own staged predictions.
        let rows: Vec<Vec<f64>> = (0..data.n()).map(|i| data.row(i)).collect();
        let staged = fit.model.staged_rmse(&rows, data.y()).unwrap();
        for (a, b) in staged.iter().zip(&trace) {
            prop_assert!((a - b).abs() <= 1e-9 * b.max(1.0));
        }
    }
}

#[test]
fn noise_gives_an_empty_ensemble() {
    let data = gen_null(&NullConfig::new(500, 5, 0.0, 3)).unwrap();
    let fit = boost_fit(&data, BoostConfig::default()).unwrap();
    assert!(fit.model.trees.is_empty());
    assert_eq!(fit.model.stop_reason, StopReason::RootLearner);
    assert_eq!(fit.report.final_candidate_trace.as_ref().unwrap()[0], 0.0);
}

#[test]
fn signal_adds_trees_and_generalises() {
    let cfg = NeufeldConfig::new(500, 1.0, 1.0, 8);
    let train = gen_neufeld(&cfg).unwrap();
    let test = gen_neufeld(&NeufeldConfig { seed: 9, ..cfg }).unwrap();
    let fit = boost_fit(&train, BoostConfig::default()).unwrap();
    assert!(!fit.model.trees.is_empty());
    assert_eq!(fit.model.stop_reason, StopReason::RootLearner);
    let final_rmse = fit.report.iterations.last().unwrap().train_rmse;
    let variance = {
        let m = train.mean_response();
        train.y().iter().map(|y| (y - m) * (y - m)).sum::<f64>() / train.n() as f64
    };
    assert!(final_rmse * final_rmse < variance);
    let rows: Vec<Vec<f64>> = (0..test.n()).map(|i| test.row(i)).collect();
    let pred: Vec<f64> = rows.iter().map(|x| fit.model.predict(x).unwrap()).collect();
    let base = vec![fit.model.base; test.n()];
    assert!(rmse(&pred, test.y()) < rmse(&base, test.y()));
}

#[test]
fn max_iters_caps_unbounded_runs() {
    let data = gen_neufeld(&NeufeldConfig::new(200, 1.0, 1.0, 4)).unwrap();
    let cfg = BoostConfig {
        delta: Delta::INFINITE,
        max_iters: 7,
        ..BoostConfig::default()
    };
    let fit = boost_fit(&data, cfg).unwrap();
    assert_eq!(fit.model.trees.len(), 7);
    assert_eq!(fit.model.stop_reason, StopReason::MaxIters);
}
