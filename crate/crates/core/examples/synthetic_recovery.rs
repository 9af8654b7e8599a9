// Plants a known block term model, observes 10% of its cells with a little
// noise and checks how close training gets to the noise floor.
//
// ```text
// cargo run --release --example synthetic_recovery
// ```

use btdqos::synthetic::{planted, PlantedSpec};
use btdqos::{fit_multi_start, rmse, split, BlockStructure, Dims, MultiStart, SplitSpec, StopMetric, TrainConfig};

fn main() -> btdqos::Result<()> {
    run_example()
}

pub fn run_example() -> btdqos::Result<()> {
    let structure = BlockStructure::uniform(2, 2, 2, 2)?;
    let spec = PlantedSpec::new(Dims::new(12, 15, 10), structure.clone(), 0.4, 0.01, 3);
    let data = planted(&spec)?;
    let parts = split(&data.observed, &SplitSpec::new(0.5, 0.1, 0.4, 3)?)?;
    println!(
        "planted {} on {}: {} train / {} validation / {} test entries, noise std {:.5}",
        structure,
        spec.dims,
        parts.train.len(),
        parts.validation.len(),
        parts.test.len(),
        data.noise_std
    );

    let cfg = TrainConfig {
        lambda1: 0.0,
        lambda2: 0.0,
        lambda3: 0.0,
        max_iter: 4_000,
        tol: 1e-12,
        stop_metric: StopMetric::TrainingLoss,
        ..TrainConfig::default()
    };
    // short runs from several initializations, then continue the best one
    let plan = MultiStart {
        restarts: 4,
        warmup_epochs: 500,
    };
    let (model, report) = fit_multi_start(&parts.train, &parts.validation, &structure, &cfg, &plan)?;

    let test = rmse(&model, &parts.test)?;
    println!(
        "{} epochs in {:.2}s, final loss {:.3e}",
        report.epochs_run,
        report.wall_time,
        report.loss_trajectory.last().copied().unwrap_or(f64::NAN)
    );
    println!("test RMSE {test:.5} = {:.2} x noise std", test / data.noise_std);
    assert!(model.is_nonnegative());
    Ok(())
}
