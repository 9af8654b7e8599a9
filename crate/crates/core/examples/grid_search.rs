// Picks the regularization coefficients by validation RMSE.

use btdqos::synthetic::{planted, PlantedSpec};
use btdqos::{grid_search, rmse, split, BlockStructure, Dims, LambdaGrid, SplitSpec, TrainConfig};

fn main() -> btdqos::Result<()> {
    run_example()
}

pub fn run_example() -> btdqos::Result<()> {
    let structure = BlockStructure::uniform(2, 2, 2, 2)?;
    let data = planted(&PlantedSpec::new(Dims::new(10, 12, 8), structure.clone(), 0.3, 0.2, 8))?;
    let parts = split(&data.observed, &SplitSpec::new(0.5, 0.2, 0.3, 8)?)?;

    let grid = LambdaGrid {
        lambda1: vec![0.0, 0.01],
        lambda2: vec![0.0, 0.01, 0.1],
        lambda3: vec![0.01],
    };
    let base = TrainConfig {
        max_iter: 400,
        ..TrainConfig::default()
    };
    let outcome = grid_search(&parts.train, &parts.validation, &structure, &grid, &base)?;
    for point in &outcome.scores {
        println!("lambdas {:?}: validation RMSE {:.4}", point.lambdas, point.validation_rmse);
    }
    println!(
        "selected ({}, {}, {}), test RMSE {:.4}",
        outcome.best.lambda1,
        outcome.best.lambda2,
        outcome.best.lambda3,
        rmse(&outcome.model, &parts.test)?
    );
    Ok(())
}
