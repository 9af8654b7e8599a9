// Compares CP, Tucker and block term structures of similar size on data
// planted from a three-block model.

use btdqos::eval::run_cell;
use btdqos::synthetic::{planted, PlantedSpec};
use btdqos::{split, BlockStructure, Dims, ModelSpec, SplitSpec, TrainConfig};

fn main() -> btdqos::Result<()> {
    run_example()
}

pub fn run_example() -> btdqos::Result<()> {
    let dims = Dims::new(15, 20, 10);
    let truth = BlockStructure::uniform(3, 2, 2, 2)?;
    let data = planted(&PlantedSpec::new(dims, truth, 0.3, 0.05, 11))?;
    let parts = split(&data.observed, &SplitSpec::new(0.6, 0.1, 0.3, 11)?)?;

    let models = [
        ModelSpec::cp_emulated(6)?,
        ModelSpec::tucker_emulated(3, 3, 3)?,
        ModelSpec::block_term(3, 2, 2, 2)?,
    ];
    let cfg = TrainConfig {
        max_iter: 1_500,
        tol: 1e-7,
        ..TrainConfig::default()
    };
    println!("{:<32} {:>10} {:>10} {:>10}", "model", "params", "RMSE", "MAE");
    for spec in &models {
        let cell = run_cell(&parts, "synthetic", spec, 1, &cfg, None)?;
        println!(
            "{:<32} {:>10} {:>10.4} {:>10.4}",
            spec.label,
            spec.structure.parameter_count(dims),
            cell.rmse,
            cell.mae
        );
    }
    Ok(())
}
