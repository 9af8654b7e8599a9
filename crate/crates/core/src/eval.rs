//! Prediction error metrics and the density-sweep benchmark harness.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{split, SplitSpec};
use crate::model::{reduce_to_cp, reduce_to_tucker, BlockStructure, BnbtModel};
use crate::tensor::{SparseTensor3, SplitTensor};
use crate::trainer::{fit, grid_search, LambdaGrid, TrainConfig};

fn residuals(model: &BnbtModel, test: &SparseTensor3) -> Result<Vec<f64>> {
    if model.dims() != test.dims() {
        return Err(Error::DimMismatch(format!(
            "model is {} but test tensor is {}",
            model.dims(),
            test.dims()
        )));
    }
    if test.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let predictor = model.predictor();
    Ok(test.entries().map(|(idx, y)| y - predictor.predict(idx)).collect())
}

/// Root mean square error over a set of residuals.
pub fn rmse_of(residuals: &[f64]) -> Result<f64> {
    if residuals.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    Ok((residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt())
}

/// Mean absolute error over a set of residuals.
pub fn mae_of(residuals: &[f64]) -> Result<f64> {
    if residuals.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    Ok(residuals.iter().map(|r| r.abs()).sum::<f64>() / residuals.len() as f64)
}

pub fn rmse(model: &BnbtModel, test: &SparseTensor3) -> Result<f64> {
    rmse_of(&residuals(model, test)?)
}

pub fn mae(model: &BnbtModel, test: &SparseTensor3) -> Result<f64> {
    mae_of(&residuals(model, test)?)
}

/// `(rmse, mae)` from a single pass over the test entries.
pub fn rmse_mae(model: &BnbtModel, test: &SparseTensor3) -> Result<(f64, f64)> {
    let r = residuals(model, test)?;
    Ok((rmse_of(&r)?, mae_of(&r)?))
}

/// A labelled model structure taking part in a benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub label: String,
    pub structure: BlockStructure,
}

impl ModelSpec {
    pub fn new(label: impl Into<String>, structure: BlockStructure) -> Self {
        ModelSpec {
            label: label.into(),
            structure,
        }
    }

    /// Biased CP baseline, emulated as `rank` blocks of rank `(1, 1, 1)`.
    pub fn cp_emulated(rank: usize) -> Result<Self> {
        Ok(Self::new(format!("M1-emulated[cp R={rank}]"), reduce_to_cp(rank)?))
    }

    /// Biased Tucker baseline, emulated as one block of rank `(l, m, n)`.
    pub fn tucker_emulated(l: usize, m: usize, n: usize) -> Result<Self> {
        Ok(Self::new(
            format!("M2-emulated[tucker {l}x{m}x{n}]"),
            reduce_to_tucker(l, m, n)?,
        ))
    }

    pub fn block_term(blocks: usize, l: usize, m: usize, n: usize) -> Result<Self> {
        Ok(Self::new(
            format!("M3-BNBT[btd R={blocks} {l}x{m}x{n}]"),
            BlockStructure::uniform(blocks, l, m, n)?,
        ))
    }
}

/// Everything needed to run a density sweep over one dataset.
#[derive(Debug, Clone)]
pub struct BenchmarkPlan {
    /// Dataset name; sub-datasets are labelled `{name}.1`, `{name}.2`, ...
    pub dataset: String,
    pub splits: Vec<SplitSpec>,
    pub models: Vec<ModelSpec>,
    /// One run per seed; the seed drives model initialization.
    pub seeds: Vec<u64>,
    pub train: TrainConfig,
    /// When present, λ is chosen per run by validation RMSE.
    pub grid: Option<LambdaGrid>,
}

/// One `(sub-dataset, model, seed)` result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsCell {
    pub dataset: String,
    pub model: String,
    pub seed: u64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub epochs: usize,
    pub rmse: f64,
    pub mae: f64,
    pub wall_time_s: f64,
}

/// Mean and sample standard deviation over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub dataset: String,
    pub model: String,
    pub rmse_mean: f64,
    pub rmse_std: f64,
    pub mae_mean: f64,
    pub mae_std: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsReport {
    pub cells: Vec<MetricsCell>,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl MetricsReport {
    /// One row per `(dataset, model)` pair, in order of first appearance.
    pub fn aggregate(&self) -> Vec<AggregateRow> {
        let mut keys: Vec<(&str, &str)> = Vec::new();
        for c in &self.cells {
            let key = (c.dataset.as_str(), c.model.as_str());
            if !keys.contains(&key) {
                keys.push(key);
            }
        }
        keys.into_iter()
            .map(|(dataset, model)| {
                let group: Vec<&MetricsCell> = self
                    .cells
                    .iter()
                    .filter(|c| c.dataset == dataset && c.model == model)
                    .collect();
                let rmses: Vec<f64> = group.iter().map(|c| c.rmse).collect();
                let maes: Vec<f64> = group.iter().map(|c| c.mae).collect();
                let (rmse_mean, rmse_std) = mean_std(&rmses);
                let (mae_mean, mae_std) = mean_std(&maes);
                AggregateRow {
                    dataset: dataset.to_string(),
                    model: model.to_string(),
                    rmse_mean,
                    rmse_std,
                    mae_mean,
                    mae_std,
                }
            })
            .collect()
    }

    /// `dataset,model,seed,lambda1,lambda2,lambda3,epochs,rmse,mae,wall_time_s`
    pub fn write_detail_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for c in &self.cells {
            w.serialize(c)?;
        }
        if self.cells.is_empty() {
            w.write_record([
                "dataset", "model", "seed", "lambda1", "lambda2", "lambda3", "epochs", "rmse", "mae", "wall_time_s",
            ])?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }

    /// `dataset,model,rmse_mean,rmse_std,mae_mean,mae_std`
    pub fn write_aggregate_csv<W: Write>(&self, out: W) -> Result<()> {
        let rows = self.aggregate();
        let mut w = csv::Writer::from_writer(out);
        for r in &rows {
            w.serialize(r)?;
        }
        if rows.is_empty() {
            w.write_record(["dataset", "model", "rmse_mean", "rmse_std", "mae_mean", "mae_std"])?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }
}

/// Trains one model (with λ search when a grid is given) and scores it on
/// the test partition.
pub fn run_cell(
    data: &SplitTensor,
    dataset: &str,
    model: &ModelSpec,
    seed: u64,
    train: &TrainConfig,
    grid: Option<&LambdaGrid>,
) -> Result<MetricsCell> {
    let started = Instant::now();
    let cfg = TrainConfig {
        seed,
        ..train.clone()
    };
    let (fitted, cfg, epochs) = match grid {
        Some(grid) => {
            let outcome = grid_search(&data.train, &data.validation, &model.structure, grid, &cfg)?;
            (outcome.model, outcome.best, outcome.report.epochs_run)
        }
        None => {
            let (m, report) = fit(&data.train, &data.validation, &model.structure, &cfg)?;
            (m, cfg, report.epochs_run)
        }
    };
    let (rmse, mae) = rmse_mae(&fitted, &data.test)?;
    Ok(MetricsCell {
        dataset: dataset.to_string(),
        model: model.label.clone(),
        seed,
        lambda1: cfg.lambda1,
        lambda2: cfg.lambda2,
        lambda3: cfg.lambda3,
        epochs,
        rmse,
        mae,
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}

/// Runs every `(split, model, seed)` combination of `plan` on `tensor`.
///
/// Each split is drawn once and shared by all models and seeds. Cells run in
/// parallel; the report lists them in split, model, seed order.
pub fn run_benchmark(tensor: &SparseTensor3, plan: &BenchmarkPlan) -> Result<MetricsReport> {
    if plan.splits.is_empty() || plan.models.is_empty() || plan.seeds.is_empty() {
        return Err(Error::InvalidConfig(
            "benchmark needs at least one split, one model and one seed".into(),
        ));
    }
    plan.train.validate()?;
    let subsets: Vec<(String, SplitTensor)> = plan
        .splits
        .iter()
        .enumerate()
        .map(|(s, spec)| Ok((format!("{}.{}", plan.dataset, s + 1), split(tensor, spec)?)))
        .collect::<Result<_>>()?;

    let mut jobs = Vec::new();
    for (label, data) in &subsets {
        for model in &plan.models {
            for &seed in &plan.seeds {
                jobs.push((label.as_str(), data, model, seed));
            }
        }
    }
    let cells = jobs
        .into_par_iter()
        .map(|(label, data, model, seed)| run_cell(data, label, model, seed, &plan.train, plan.grid.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricsReport { cells })
}
