use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval;
use crate::model::{BlockStructure, BnbtModel};
use crate::tensor::SparseTensor3;

use super::{fit, fit_from, TrainConfig, TrainReport};

/// Candidate values for each regularization coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaGrid {
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    pub lambda3: Vec<f64>,
}

impl LambdaGrid {
    pub fn single(lambda1: f64, lambda2: f64, lambda3: f64) -> Self {
        LambdaGrid {
            lambda1: vec![lambda1],
            lambda2: vec![lambda2],
            lambda3: vec![lambda3],
        }
    }

    /// The same candidates for all three coefficients.
    pub fn uniform(values: &[f64]) -> Self {
        LambdaGrid {
            lambda1: values.to_vec(),
            lambda2: values.to_vec(),
            lambda3: values.to_vec(),
        }
    }

    pub fn points(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(self.lambda1.len() * self.lambda2.len() * self.lambda3.len());
        for &a in &self.lambda1 {
            for &b in &self.lambda2 {
                for &c in &self.lambda3 {
                    out.push((a, b, c));
                }
            }
        }
        out
    }

    fn validate(&self) -> Result<()> {
        if self.lambda1.is_empty() || self.lambda2.is_empty() || self.lambda3.is_empty() {
            return Err(Error::EmptyInput("lambda grid"));
        }
        Ok(())
    }
}

/// Validation score of one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub lambdas: (f64, f64, f64),
    pub validation_rmse: f64,
}

#[derive(Debug, Clone)]
pub struct GridSearchOutcome {
    pub best: TrainConfig,
    pub validation_rmse: f64,
    pub model: BnbtModel,
    pub report: TrainReport,
    /// Every evaluated point, in grid order.
    pub scores: Vec<GridPoint>,
}

fn score_key(rmse: f64) -> f64 {
    if rmse.is_nan() {
        f64::INFINITY
    } else {
        rmse
    }
}

/// Lower validation RMSE first, then lexicographically smaller `(λ₁, λ₂, λ₃)`.
fn rank(a: &GridPoint, b: &GridPoint) -> Ordering {
    score_key(a.validation_rmse)
        .total_cmp(&score_key(b.validation_rmse))
        .then(a.lambdas.0.total_cmp(&b.lambdas.0))
        .then(a.lambdas.1.total_cmp(&b.lambdas.1))
        .then(a.lambdas.2.total_cmp(&b.lambdas.2))
}

/// Trains one model per `(λ₁, λ₂, λ₃)` combination and keeps the one with
/// the lowest validation RMSE. Every other setting comes from `base`.
pub fn grid_search(
    train: &SparseTensor3,
    validation: &SparseTensor3,
    structure: &BlockStructure,
    grid: &LambdaGrid,
    base: &TrainConfig,
) -> Result<GridSearchOutcome> {
    grid.validate()?;
    if validation.is_empty() {
        return Err(Error::EmptyInput("validation set"));
    }
    let runs: Vec<(TrainConfig, BnbtModel, TrainReport, f64)> = grid
        .points()
        .into_par_iter()
        .map(|(a, b, c)| {
            let cfg = base.with_lambdas(a, b, c);
            let (model, report) = fit(train, validation, structure, &cfg)?;
            let rmse = eval::rmse(&model, validation)?;
            Ok((cfg, model, report, rmse))
        })
        .collect::<Result<_>>()?;

    let scores: Vec<GridPoint> = runs
        .iter()
        .map(|(cfg, _, _, rmse)| GridPoint {
            lambdas: (cfg.lambda1, cfg.lambda2, cfg.lambda3),
            validation_rmse: *rmse,
        })
        .collect();
    let best = (0..scores.len())
        .min_by(|&x, &y| rank(&scores[x], &scores[y]))
        .expect("grid is nonempty");
    let (best_cfg, model, report, rmse) = runs.into_iter().nth(best).expect("index in range");
    Ok(GridSearchOutcome {
        best: best_cfg,
        validation_rmse: rmse,
        model,
        report,
        scores,
    })
}

/// Restart schedule for [`fit_multi_start`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiStart {
    /// Number of independent random initializations.
    pub restarts: usize,
    /// Epochs each initialization runs before the best one is kept.
    pub warmup_epochs: usize,
}

/// Trains `plan.restarts` short runs from independent initializations,
/// keeps the one with the lowest validation RMSE and continues it for up to
/// `cfg.max_iter` further epochs.
///
/// Restart `r` uses seed `derive_seed(cfg.seed, r)`. The returned report
/// covers the winning warmup run followed by its continuation.
pub fn fit_multi_start(
    train: &SparseTensor3,
    validation: &SparseTensor3,
    structure: &BlockStructure,
    cfg: &TrainConfig,
    plan: &MultiStart,
) -> Result<(BnbtModel, TrainReport)> {
    if plan.restarts == 0 || plan.warmup_epochs == 0 {
        return Err(Error::InvalidConfig("multi-start needs at least one restart and one warmup epoch".into()));
    }
    if validation.is_empty() {
        return Err(Error::EmptyInput("validation set"));
    }
    let runs: Vec<(BnbtModel, TrainReport, f64)> = (0..plan.restarts as u64)
        .into_par_iter()
        .map(|r| {
            let warm = TrainConfig {
                seed: crate::derive_seed(cfg.seed, r),
                max_iter: plan.warmup_epochs,
                ..cfg.clone()
            };
            let (model, report) = fit(train, validation, structure, &warm)?;
            let rmse = eval::rmse(&model, validation)?;
            Ok((model, report, rmse))
        })
        .collect::<Result<_>>()?;
    let best = (0..runs.len())
        .min_by(|&x, &y| score_key(runs[x].2).total_cmp(&score_key(runs[y].2)))
        .expect("at least one restart");
    let (model, warm_report, _) = runs.into_iter().nth(best).expect("index in range");
    let (model, rest) = fit_from(model, train, validation, cfg)?;
    let mut report = warm_report;
    report.epochs_run += rest.epochs_run;
    report.loss_trajectory.extend(rest.loss_trajectory);
    report.validation_rmse_trajectory.extend(rest.validation_rmse_trajectory);
    report.converged = rest.converged;
    report.wall_time += rest.wall_time;
    Ok((model, report))
}
