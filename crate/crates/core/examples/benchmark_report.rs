// Density sweep over CP, Tucker and block term models with repeated seeds,
// printed as the detail and aggregate CSV reports.

use btdqos::synthetic::{planted, PlantedSpec};
use btdqos::{run_benchmark, BenchmarkPlan, BlockStructure, Dims, ModelSpec, SplitSpec, TrainConfig};

fn main() -> btdqos::Result<()> {
    run_example()
}

pub fn run_example() -> btdqos::Result<()> {
    let data = planted(&PlantedSpec::new(
        Dims::new(10, 14, 8),
        BlockStructure::uniform(3, 2, 2, 2)?,
        0.6,
        0.05,
        1,
    ))?;
    let plan = BenchmarkPlan {
        dataset: "S".into(),
        // two of the four density settings keep the example quick
        splits: SplitSpec::density_protocol(7).into_iter().take(2).collect(),
        models: vec![
            ModelSpec::cp_emulated(3)?,
            ModelSpec::tucker_emulated(3, 3, 3)?,
            ModelSpec::block_term(3, 2, 2, 2)?,
        ],
        seeds: vec![1, 2],
        train: TrainConfig {
            max_iter: 200,
            ..TrainConfig::default()
        },
        grid: None,
    };
    let report = run_benchmark(&data.observed, &plan)?;
    let mut out = std::io::stdout().lock();
    report.write_detail_csv(&mut out)?;
    println!();
    report.write_aggregate_csv(&mut out)?;
    Ok(())
}
