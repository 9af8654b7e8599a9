// End-to-end flow on a QoS log: parse, split, train, checkpoint, reload and
// predict a missing cell.

use std::fs;

use btdqos::io::{save_qos_log, SplitManifest};
use btdqos::synthetic::{planted, PlantedSpec};
use btdqos::{
    fit, load_model, parse_qos_log, rmse, save_model, split, BlockStructure, DatasetDescriptor, Dims, EntryIndex,
    ParseOptions, QosType, SplitSpec, TrainConfig,
};

fn main() -> btdqos::Result<()> {
    run_example()
}

pub fn run_example() -> btdqos::Result<()> {
    let dir = std::env::temp_dir().join(format!("btdqos-pipeline-{}", std::process::id()));
    fs::create_dir_all(&dir).map_err(|e| btdqos::Error::Io {
        path: dir.clone(),
        source: e,
    })?;

    // a small log in the `user service slice value` layout, with one
    // unobserved record
    let dims = Dims::new(10, 12, 6);
    let data = planted(&PlantedSpec::new(dims, BlockStructure::uniform(2, 2, 2, 2)?, 0.5, 0.02, 5))?;
    let log_path = dir.join("rt.txt");
    save_qos_log(&data.observed, &log_path)?;
    let mut text = fs::read_to_string(&log_path).unwrap_or_default();
    text.push_str("9 11 5 -1\n");
    fs::write(&log_path, text).map_err(|e| btdqos::Error::Io {
        path: log_path.clone(),
        source: e,
    })?;

    let descriptor = DatasetDescriptor::new("toy", QosType::ResponseTime, dims, &log_path);
    let log = parse_qos_log(&log_path, &descriptor, ParseOptions::default())?;
    println!("{} records, {} dropped, {} observed", log.records, log.dropped, log.tensor.len());

    let spec = SplitSpec::new(0.7, 0.1, 0.2, 42)?;
    let parts = split(&log.tensor, &spec)?;
    SplitManifest::new(&log_path, &log, &spec, &parts).save(&dir.join("manifest.json"))?;

    let structure = BlockStructure::uniform(2, 2, 2, 2)?;
    let cfg = TrainConfig {
        max_iter: 500,
        ..TrainConfig::default()
    };
    let (model, report) = fit(&parts.train, &parts.validation, &structure, &cfg)?;
    println!(
        "trained {} epochs (converged: {}), test RMSE {:.4}",
        report.epochs_run,
        report.converged,
        rmse(&model, &parts.test)?
    );

    let checkpoint = dir.join("model.json");
    save_model(&model, &checkpoint, Some(&descriptor))?;
    let restored = load_model(&checkpoint)?;
    let cell = EntryIndex::new(9, 11, 5);
    println!(
        "prediction for the unobserved cell {:?}: {:.4}",
        (cell.i, cell.j, cell.k),
        restored.predict_entry(cell)?
    );
    assert_eq!(restored.parameters(), model.parameters());

    let _ = fs::remove_dir_all(&dir);
    Ok(())
}
