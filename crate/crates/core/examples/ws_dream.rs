// Runs the 10%:10%:80% protocol on the WS-DREAM response-time tensor when
// `$BTDQOS_DATA_DIR/rtdata.txt` is present. Without the file it says so and
// exits.
//
// `BTDQOS_SERVICES` limits the run to the first services (default 500).

use std::path::PathBuf;

use btdqos::io::restrict_services;
use btdqos::{
    fit, parse_qos_log, split, BlockStructure, DatasetDescriptor, ParseOptions, SplitSpec,
    TrainConfig,
};

fn main() -> btdqos::Result<()> {
    run_example()
}

pub fn run_example() -> btdqos::Result<()> {
    let Some(dir) = std::env::var_os("BTDQOS_DATA_DIR") else {
        println!("set BTDQOS_DATA_DIR to the directory holding rtdata.txt");
        return Ok(());
    };
    let path = PathBuf::from(dir).join("rtdata.txt");
    if !path.exists() {
        println!("{} not found", path.display());
        return Ok(());
    }
    let services = std::env::var("BTDQOS_SERVICES")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(500);

    let descriptor = DatasetDescriptor::ws_dream_response_time(&path);
    let log = parse_qos_log(&path, &descriptor, ParseOptions::default())?;
    let tensor = restrict_services(&log.tensor, services)?;
    println!(
        "{}: {} records, {} dropped; using {} entries over {} services",
        descriptor.name,
        log.records,
        log.dropped,
        tensor.len(),
        services
    );

    let parts = split(&tensor, &SplitSpec::new(0.1, 0.1, 0.8, 1)?)?;
    let structure = BlockStructure::uniform(3, 2, 2, 2)?;
    let (model, report) = fit(&parts.train, &parts.validation, &structure, &TrainConfig::default())?;
    let (rmse, mae) = btdqos::eval::rmse_mae(&model, &parts.test)?;
    println!("{} epochs in {:.1}s: RMSE {rmse:.4}, MAE {mae:.4}", report.epochs_run, report.wall_time);
    Ok(())
}
