//! Training of [`BnbtModel`]s by multiplicative updates.
//!
//! Each epoch updates the cores, the three factor groups and the three bias
//! vectors in turn. Every update has the form
//!
//! ```text
//! θ ← θ · Σ y·∂ŷ/∂θ / (Σ ŷ·∂ŷ/∂θ + λ·count·θ + guard)
//! ```
//!
//! summed over the observed entries touching `θ`, which keeps all
//! parameters nonnegative without any projection step.

mod objective;
mod search;
mod update;

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval;
use crate::model::{BlockStructure, BnbtModel};
use crate::tensor::SparseTensor3;

pub use objective::{gradient_oracle, objective};
pub use search::{fit_multi_start, grid_search, GridPoint, GridSearchOutcome, LambdaGrid, MultiStart};
pub use update::epoch;

/// Quantity whose change between consecutive epochs decides convergence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopMetric {
    /// RMSE on the validation tensor.
    #[default]
    ValidationRmse,
    /// Regularized objective on the training tensor.
    TrainingLoss,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Core regularization.
    pub lambda1: f64,
    /// Factor regularization.
    pub lambda2: f64,
    /// Bias regularization.
    pub lambda3: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
    /// Added to every update denominator.
    pub epsilon_guard: f64,
    /// When false the biases stay at zero and the model is a plain
    /// nonnegative block term decomposition.
    pub bias_enabled: bool,
    /// Pins every core element at 1 and never updates it.
    pub freeze_cores: bool,
    pub stop_metric: StopMetric,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda1: 0.01,
            lambda2: 0.01,
            lambda3: 0.01,
            max_iter: 1000,
            tol: 1e-5,
            seed: 0,
            epsilon_guard: 1e-12,
            bias_enabled: true,
            freeze_cores: false,
            stop_metric: StopMetric::ValidationRmse,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda1", self.lambda1), ("lambda2", self.lambda2), ("lambda3", self.lambda3)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
        }
        // +inf is allowed and stops after the first epoch
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidConfig(format!("tol must be > 0, got {}", self.tol)));
        }
        if !(self.epsilon_guard.is_finite() && self.epsilon_guard > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon_guard must be finite and > 0, got {}",
                self.epsilon_guard
            )));
        }
        Ok(())
    }

    pub fn with_lambdas(&self, lambda1: f64, lambda2: f64, lambda3: f64) -> Self {
        TrainConfig {
            lambda1,
            lambda2,
            lambda3,
            ..self.clone()
        }
    }
}

/// Bookkeeping from one call to [`fit`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs_run: usize,
    /// Objective on the training tensor after each epoch.
    pub loss_trajectory: Vec<f64>,
    /// Validation RMSE after each epoch (NaN when no validation data was given).
    pub validation_rmse_trajectory: Vec<f64>,
    pub converged: bool,
    /// Seconds.
    pub wall_time: f64,
}

impl TrainReport {
    /// Per-epoch trajectory as CSV with header `epoch,loss,validation_rmse`.
    pub fn write_trajectory_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["epoch", "loss", "validation_rmse"])?;
        for (e, (loss, rmse)) in self
            .loss_trajectory
            .iter()
            .zip(&self.validation_rmse_trajectory)
            .enumerate()
        {
            w.write_record([(e + 1).to_string(), loss.to_string(), rmse.to_string()])?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }
}

/// Initial model for [`fit`]: uniform random parameters, with the bias
/// and frozen-core switches of `cfg` applied.
pub fn initial_model(train: &SparseTensor3, structure: &BlockStructure, cfg: &TrainConfig) -> Result<BnbtModel> {
    let mut model = BnbtModel::init_random(train.dims(), structure, cfg.seed)?;
    if !cfg.bias_enabled {
        model.clear_biases();
    }
    if cfg.freeze_cores {
        for block in &mut model.blocks {
            block.core.fill(1.0);
        }
    }
    Ok(model)
}

/// Trains a model from random initialization until the stop metric changes
/// by less than `cfg.tol` between consecutive epochs, or `cfg.max_iter`
/// epochs have run.
pub fn fit(
    train: &SparseTensor3,
    validation: &SparseTensor3,
    structure: &BlockStructure,
    cfg: &TrainConfig,
) -> Result<(BnbtModel, TrainReport)> {
    cfg.validate()?;
    let model = initial_model(train, structure, cfg)?;
    fit_from(model, train, validation, cfg)
}

/// Like [`fit`] but starting from a given model.
pub fn fit_from(
    mut model: BnbtModel,
    train: &SparseTensor3,
    validation: &SparseTensor3,
    cfg: &TrainConfig,
) -> Result<(BnbtModel, TrainReport)> {
    cfg.validate()?;
    objective::check_dims(&model, train)?;
    if validation.dims() != train.dims() {
        return Err(Error::DimMismatch(format!(
            "training tensor is {} but validation tensor is {}",
            train.dims(),
            validation.dims()
        )));
    }
    if cfg.stop_metric == StopMetric::ValidationRmse && validation.is_empty() {
        return Err(Error::EmptyInput("validation set (required by the validation_rmse stop metric)"));
    }
    if train.is_empty() {
        return Err(Error::EmptyInput("training set"));
    }

    let started = Instant::now();
    let mut preds = objective::predictions(&model, train);
    let validation_rmse = |m: &BnbtModel| -> Result<f64> {
        if validation.is_empty() {
            Ok(f64::NAN)
        } else {
            eval::rmse(m, validation)
        }
    };
    let mut previous = match cfg.stop_metric {
        StopMetric::ValidationRmse => validation_rmse(&model)?,
        StopMetric::TrainingLoss => objective::objective_with_predictions(&model, train, cfg, &preds),
    };

    let mut report = TrainReport {
        epochs_run: 0,
        loss_trajectory: Vec::new(),
        validation_rmse_trajectory: Vec::new(),
        converged: false,
        wall_time: 0.0,
    };
    for _ in 0..cfg.max_iter {
        update::sweep(&mut model, train, cfg, &mut preds)?;
        debug_assert!(model.is_nonnegative());
        let loss = objective::objective_with_predictions(&model, train, cfg, &preds);
        let rmse = validation_rmse(&model)?;
        report.epochs_run += 1;
        report.loss_trajectory.push(loss);
        report.validation_rmse_trajectory.push(rmse);

        let current = match cfg.stop_metric {
            StopMetric::ValidationRmse => rmse,
            StopMetric::TrainingLoss => loss,
        };
        if (current - previous).abs() < cfg.tol {
            report.converged = true;
            break;
        }
        previous = current;
    }
    report.wall_time = started.elapsed().as_secs_f64();
    Ok((model, report))
}
