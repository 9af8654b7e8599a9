mod common;

use btdqos::synthetic::{planted, PlantedSpec};
use btdqos::{
    epoch, fit, gradient_oracle, grid_search, objective, rmse, split, BlockStructure, BnbtModel, Dims, EntryIndex,
    Error, LambdaGrid, ParamCoord, SparseTensor3, SplitSpec, StopMetric, TrainConfig,
};
use common::*;
use rand::Rng;

#[test]
fn objective_matches_naive_sum() {
    for seed in 0..10 {
        let mut r = rng(seed);
        let dims = Dims::new(4, 4, 4);
        let structure = random_structure(&mut r, 3, 3);
        let model = random_model(&mut r, dims, &structure);
        let train = random_tensor(&mut r, dims, 0.4);
        let cfg = TrainConfig::default().with_lambdas(0.01, 0.01, 0.01);
        let fast = objective(&model, &train, &cfg).unwrap();
        let slow = naive_objective(&model, &train, &cfg);
        assert!((fast - slow).abs() <= 1e-10 * slow.abs(), "{fast} vs {slow}");
    }
}

#[test]
fn objective_hand_values() {
    let dims = Dims::new(1, 1, 1);
    let mut model = BnbtModel::zeros(dims, &btdqos::reduce_to_cp(1).unwrap()).unwrap();
    model.user_bias[0] = 1.0;
    let one = SparseTensor3::build(dims, vec![(EntryIndex::new(0, 0, 0), 2.0)]).unwrap();
    let cfg = TrainConfig::default().with_lambdas(0.0, 0.0, 0.0);
    assert_eq!(objective(&model, &one, &cfg).unwrap(), 1.0);
    assert_eq!(objective(&model, &SparseTensor3::empty(dims).unwrap(), &cfg).unwrap(), 0.0);
    let wrong = SparseTensor3::empty(Dims::new(2, 1, 1)).unwrap();
    assert!(matches!(objective(&model, &wrong, &cfg), Err(Error::DimMismatch(_))));
}

#[test]
fn epoch_matches_naive_reference() {
    let structure = BlockStructure::uniform(2, 2, 2, 2).unwrap();
    let dims = Dims::new(4, 5, 6);
    for seed in 0..5 {
        let mut r = rng(seed);
        let model = random_model(&mut r, dims, &structure);
        let train = random_tensor(&mut r, dims, 0.3);
        let cfg = TrainConfig::default().with_lambdas(0.01, 0.02, 0.03);
        let fast = epoch(&model, &train, &cfg).unwrap();
        let slow = naive_epoch(&model, &train, &cfg);
        assert!(max_rel_diff(&fast, &slow) <= 1e-10);
    }
}

#[test]
fn epoch_without_bias_or_core_updates_matches_reference() {
    let mut r = rng(5);
    let dims = Dims::new(4, 3, 5);
    let structure = random_structure(&mut r, 3, 2);
    let train = random_tensor(&mut r, dims, 0.5);
    let mut model = random_model(&mut r, dims, &structure);
    model.clear_biases();
    let cfg = TrainConfig {
        bias_enabled: false,
        freeze_cores: true,
        ..TrainConfig::default()
    };
    let fast = epoch(&model, &train, &cfg).unwrap();
    let slow = naive_epoch(&model, &train, &cfg);
    assert!(max_rel_diff(&fast, &slow) <= 1e-10);
    assert_eq!(fast.user_bias, model.user_bias);
    for (a, b) in fast.blocks.iter().zip(&model.blocks) {
        assert_eq!(a.core, b.core);
    }
}

#[test]
fn empty_slices_keep_their_values() {
    let dims = Dims::new(3, 3, 3);
    let structure = BlockStructure::uniform(1, 2, 2, 2).unwrap();
    let model = BnbtModel::init_random(dims, &structure, 1).unwrap();
    // user 2 has no observations
    let train = SparseTensor3::build(
        dims,
        vec![(EntryIndex::new(0, 1, 2), 1.0), (EntryIndex::new(1, 2, 0), 2.0)],
    )
    .unwrap();
    let next = epoch(&model, &train, &TrainConfig::default()).unwrap();
    assert_eq!(next.blocks[0].user_factors.row(2), model.blocks[0].user_factors.row(2));
    assert_eq!(next.user_bias[2], model.user_bias[2]);
    assert_ne!(next.user_bias[0], model.user_bias[0]);
}

#[test]
fn gradient_oracle_is_half_the_derivative() {
    let cfg = TrainConfig::default().with_lambdas(0.05, 0.03, 0.02);
    let h = 1e-6;
    for seed in 0..4 {
        let mut r = rng(100 + seed);
        let dims = Dims::new(4, 4, 4);
        let structure = random_structure(&mut r, 2, 3);
        let model = random_model(&mut r, dims, &structure);
        let train = random_tensor(&mut r, dims, 0.5);
        let coords = model.coords();
        for _ in 0..20 {
            let c = coords[r.random_range(0..coords.len())];
            let g = 2.0 * gradient_oracle(&model, &train, &cfg, c).unwrap();
            let fd = central_difference(&model, &train, &cfg, c, h);
            assert!((g - fd).abs() <= 1e-4 * g.abs().max(1e-3), "{c:?}: {g} vs {fd}");
        }
    }
}

fn central_difference(model: &BnbtModel, train: &SparseTensor3, cfg: &TrainConfig, c: ParamCoord, h: f64) -> f64 {
    let mut plus = model.clone();
    let mut minus = model.clone();
    let v = model.param(c).unwrap();
    plus.set_param(c, v + h).unwrap();
    minus.set_param(c, v - h).unwrap();
    (naive_objective(&plus, train, cfg) - naive_objective(&minus, train, cfg)) / (2.0 * h)
}

#[test]
fn gradient_hand_example() {
    let dims = Dims::new(1, 1, 1);
    let mut model = BnbtModel::zeros(dims, &btdqos::reduce_to_cp(1).unwrap()).unwrap();
    model.for_each_param_mut(|p| *p = 1.0);
    model.clear_biases();
    let train = SparseTensor3::build(dims, vec![(EntryIndex::new(0, 0, 0), 2.0)]).unwrap();
    let cfg = TrainConfig::default().with_lambdas(0.0, 0.0, 0.0);
    let coord = ParamCoord::UserFactor { block: 0, row: 0, col: 0 };
    assert_eq!(gradient_oracle(&model, &train, &cfg, coord).unwrap(), -1.0);
    let bad = ParamCoord::UserFactor { block: 3, row: 0, col: 0 };
    assert!(matches!(gradient_oracle(&model, &train, &cfg, bad), Err(Error::InvalidCoordinate(_))));
}

#[test]
fn gradient_vanishes_at_exact_fit() {
    let (train, model) = exact_fixture(3);
    let cfg = TrainConfig::default().with_lambdas(0.0, 0.0, 0.0);
    for c in model.coords() {
        let g = gradient_oracle(&model, &train, &cfg, c).unwrap();
        assert!(g.abs() < 1e-9, "{c:?}: {g}");
    }
}

#[test]
fn exact_fit_is_a_fixed_point() {
    let cfg = TrainConfig::default().with_lambdas(0.0, 0.0, 0.0);
    for seed in 0..5 {
        let (train, model) = exact_fixture(seed);
        let next = epoch(&model, &train, &cfg).unwrap();
        for (a, b) in next.parameters().iter().zip(model.parameters()) {
            assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
        }
    }
}

#[test]
fn infinite_tolerance_stops_after_one_epoch() {
    let (train, _) = exact_fixture(1);
    let structure = BlockStructure::uniform(2, 2, 2, 2).unwrap();
    let parts = split(&train, &SplitSpec::new(0.8, 0.1, 0.1, 1).unwrap()).unwrap();
    let cfg = TrainConfig {
        tol: f64::INFINITY,
        ..TrainConfig::default()
    };
    let (_, report) = fit(&parts.train, &parts.validation, &structure, &cfg).unwrap();
    assert_eq!(report.epochs_run, 1);
    assert!(report.converged);
    assert_eq!(report.loss_trajectory.len(), 1);
    assert_eq!(report.validation_rmse_trajectory.len(), 1);
}

#[test]
fn fit_is_deterministic() {
    let data = planted(&PlantedSpec::new(
        Dims::new(8, 9, 7),
        BlockStructure::uniform(2, 2, 2, 2).unwrap(),
        0.4,
        0.05,
        2,
    ))
    .unwrap();
    let parts = split(&data.observed, &SplitSpec::new(0.7, 0.1, 0.2, 3).unwrap()).unwrap();
    let cfg = TrainConfig {
        max_iter: 50,
        seed: 9,
        ..TrainConfig::default()
    };
    let structure = BlockStructure::uniform(2, 2, 2, 2).unwrap();
    let (m1, r1) = fit(&parts.train, &parts.validation, &structure, &cfg).unwrap();
    let (m2, r2) = fit(&parts.train, &parts.validation, &structure, &cfg).unwrap();
    assert_eq!(r1.loss_trajectory, r2.loss_trajectory);
    assert_eq!(r1.validation_rmse_trajectory, r2.validation_rmse_trajectory);
    assert_eq!(m1, m2);
}

#[test]
fn thread_count_does_not_change_results() {
    let (train, _) = exact_fixture(4);
    let structure = BlockStructure::uniform(3, 2, 1, 2).unwrap();
    let model = BnbtModel::init_random(train.dims(), &structure, 4).unwrap();
    let cfg = TrainConfig::default();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let mut m = model.clone();
            for _ in 0..10 {
                m = epoch(&m, &train, &cfg).unwrap();
            }
            m
        })
    };
    let one = run(1);
    let four = run(4);
    let bits = |m: &BnbtModel| m.parameters().iter().map(|p| p.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&one), bits(&four));
}

#[test]
fn noiseless_planted_fit_reaches_small_training_error() {
    let structure = BlockStructure::uniform(1, 2, 2, 2).unwrap();
    let mut spec = PlantedSpec::new(Dims::new(8, 8, 6), structure.clone(), 0.6, 0.0, 8);
    spec.bias_high = 0.2;
    let data = planted(&spec).unwrap();
    let parts = split(&data.observed, &SplitSpec::new(0.85, 0.1, 0.05, 8).unwrap()).unwrap();
    let cfg = TrainConfig {
        lambda1: 0.0,
        lambda2: 0.0,
        lambda3: 0.0,
        max_iter: 20_000,
        tol: 1e-14,
        seed: 1,
        stop_metric: StopMetric::TrainingLoss,
        ..TrainConfig::default()
    };
    let (model, _) = fit(&parts.train, &parts.validation, &structure, &cfg).unwrap();
    let train_rmse = rmse(&model, &parts.train).unwrap();
    let std = parts.train.std_dev();
    assert!(train_rmse <= 0.01 * std, "training RMSE {train_rmse} vs data std {std}");
}

#[test]
fn grid_search_rejects_heavy_factor_penalties_on_noiseless_data() {
    let structure = BlockStructure::uniform(1, 2, 2, 2).unwrap();
    let mut spec = PlantedSpec::new(Dims::new(7, 7, 5), structure.clone(), 0.7, 0.0, 21);
    spec.bias_high = 0.2;
    let data = planted(&spec).unwrap();
    let parts = split(&data.observed, &SplitSpec::new(0.8, 0.15, 0.05, 2).unwrap()).unwrap();
    let base = TrainConfig {
        max_iter: 3000,
        tol: 1e-12,
        ..TrainConfig::default()
    };
    let grid = LambdaGrid::uniform(&[0.0, 10.0]);
    let outcome = grid_search(&parts.train, &parts.validation, &structure, &grid, &base).unwrap();
    // a core-only penalty is absorbed by rescaling the factors, so only the
    // factor and bias weights are pinned
    assert_eq!((outcome.best.lambda2, outcome.best.lambda3), (0.0, 0.0));
    assert_eq!(outcome.scores.len(), 8);
    let score = |l: (f64, f64, f64)| outcome.scores.iter().find(|p| p.lambdas == l).unwrap().validation_rmse;
    assert!(score((0.0, 0.0, 0.0)) < score((10.0, 10.0, 10.0)));

    let reversed = LambdaGrid::uniform(&[10.0, 0.0]);
    let again = grid_search(&parts.train, &parts.validation, &structure, &reversed, &base).unwrap();
    assert_eq!(again.best, outcome.best);
    assert_eq!(again.validation_rmse, outcome.validation_rmse);

    let single = LambdaGrid::single(0.5, 0.25, 0.125);
    let one = grid_search(&parts.train, &parts.validation, &structure, &single, &base).unwrap();
    assert_eq!((one.best.lambda1, one.best.lambda2, one.best.lambda3), (0.5, 0.25, 0.125));
}

#[test]
fn fit_rejects_bad_inputs() {
    let structure = BlockStructure::uniform(1, 1, 1, 1).unwrap();
    let dims = Dims::new(2, 2, 2);
    let train = SparseTensor3::build(dims, vec![(EntryIndex::new(0, 0, 0), 1.0)]).unwrap();
    let empty = SparseTensor3::empty(dims).unwrap();
    let cfg = TrainConfig::default();
    assert!(matches!(fit(&train, &empty, &structure, &cfg), Err(Error::EmptyInput(_))));
    let loss_cfg = TrainConfig {
        stop_metric: StopMetric::TrainingLoss,
        max_iter: 3,
        ..cfg.clone()
    };
    let (_, report) = fit(&train, &empty, &structure, &loss_cfg).unwrap();
    assert!(report.validation_rmse_trajectory.iter().all(|v| v.is_nan()));
    let other = SparseTensor3::empty(Dims::new(3, 2, 2)).unwrap();
    assert!(matches!(fit(&train, &other, &structure, &cfg), Err(Error::DimMismatch(_))));
    let bad = TrainConfig { tol: -1.0, ..cfg };
    assert!(matches!(fit(&train, &train, &structure, &bad), Err(Error::InvalidConfig(_))));
}
