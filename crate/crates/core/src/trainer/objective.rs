use crate::error::{Error, Result};
use crate::model::{BnbtModel, ParamCoord};
use crate::tensor::{Mode, SparseTensor3};

use super::TrainConfig;

pub(crate) fn check_dims(model: &BnbtModel, tensor: &SparseTensor3) -> Result<()> {
    if model.dims() != tensor.dims() {
        return Err(Error::DimMismatch(format!(
            "model is {} but tensor is {}",
            model.dims(),
            tensor.dims()
        )));
    }
    Ok(())
}

pub(crate) fn predictions(model: &BnbtModel, tensor: &SparseTensor3) -> Vec<f64> {
    let predictor = model.predictor();
    tensor.indices().iter().map(|&idx| predictor.predict(idx)).collect()
}

/// Regularized squared error over the observed entries.
///
/// The penalty terms sit inside the per-entry sum, so every parameter's
/// squared magnitude is weighted by the number of observed entries that
/// touch it: `|Λ|` for core elements, `|Λ(i)|` for row `i` of every `A_r`
/// and for `d_i`, and likewise for services and time slices.
pub fn objective(model: &BnbtModel, train: &SparseTensor3, cfg: &TrainConfig) -> Result<f64> {
    check_dims(model, train)?;
    let preds = predictions(model, train);
    Ok(objective_with_predictions(model, train, cfg, &preds))
}

pub(crate) fn objective_with_predictions(
    model: &BnbtModel,
    train: &SparseTensor3,
    cfg: &TrainConfig,
    preds: &[f64],
) -> f64 {
    let residual: f64 = train
        .values()
        .iter()
        .zip(preds)
        .map(|(y, yh)| (y - yh).powi(2))
        .sum();
    residual + penalty(model, train, cfg)
}

fn weighted_rows(rows: ndarray::ArrayView2<'_, f64>, train: &SparseTensor3, mode: Mode) -> f64 {
    rows.outer_iter()
        .enumerate()
        .map(|(s, row)| {
            let count = train.group_unchecked(mode, s).len() as f64;
            count * row.iter().map(|v| v * v).sum::<f64>()
        })
        .sum()
}

fn weighted_bias(bias: &ndarray::Array1<f64>, train: &SparseTensor3, mode: Mode) -> f64 {
    bias.iter()
        .enumerate()
        .map(|(s, v)| train.group_unchecked(mode, s).len() as f64 * v * v)
        .sum()
}

fn penalty(model: &BnbtModel, train: &SparseTensor3, cfg: &TrainConfig) -> f64 {
    let entries = train.len() as f64;
    let mut core = 0.0;
    let mut factors = 0.0;
    for block in &model.blocks {
        core += block.core.iter().map(|v| v * v).sum::<f64>();
        factors += weighted_rows(block.user_factors.view(), train, Mode::User)
            + weighted_rows(block.service_factors.view(), train, Mode::Service)
            + weighted_rows(block.time_factors.view(), train, Mode::Time);
    }
    let biases = weighted_bias(&model.user_bias, train, Mode::User)
        + weighted_bias(&model.service_bias, train, Mode::Service)
        + weighted_bias(&model.time_bias, train, Mode::Time);
    cfg.lambda1 * entries * core + cfg.lambda2 * factors + cfg.lambda3 * biases
}

/// The bracketed sum of the additive update rule for one parameter.
///
/// For `a_il^(r)` this is `Σ_{Λ(i)} (λ₂ a_il − δ Σ_m Σ_n s_lmn b_jm c_kn)`
/// with `δ = y − ŷ`; cores sum over all of `Λ` with `λ₁`, biases use `λ₃`
/// and a unit contraction. The value equals exactly half the partial
/// derivative of [`objective`], since both the squared residual and the
/// squared penalties contribute a factor of two when differentiated.
pub fn gradient_oracle(
    model: &BnbtModel,
    train: &SparseTensor3,
    cfg: &TrainConfig,
    coord: ParamCoord,
) -> Result<f64> {
    check_dims(model, train)?;
    let value = model.param(coord)?;
    let all: Vec<usize>;
    let (positions, lambda): (&[usize], f64) = match coord {
        ParamCoord::Core { .. } => {
            all = (0..train.len()).collect();
            (&all, cfg.lambda1)
        }
        ParamCoord::UserFactor { row, .. } => (train.group_unchecked(Mode::User, row), cfg.lambda2),
        ParamCoord::ServiceFactor { row, .. } => (train.group_unchecked(Mode::Service, row), cfg.lambda2),
        ParamCoord::TimeFactor { row, .. } => (train.group_unchecked(Mode::Time, row), cfg.lambda2),
        ParamCoord::UserBias(i) => (train.group_unchecked(Mode::User, i), cfg.lambda3),
        ParamCoord::ServiceBias(j) => (train.group_unchecked(Mode::Service, j), cfg.lambda3),
        ParamCoord::TimeBias(k) => (train.group_unchecked(Mode::Time, k), cfg.lambda3),
    };
    let mut total = 0.0;
    for &p in positions {
        let idx = train.indices()[p];
        let delta = train.values()[p] - model.predict_unchecked(idx);
        let direction = partial_of_prediction(model, coord, idx.i, idx.j, idx.k);
        total += lambda * value - delta * direction;
    }
    Ok(total)
}

/// `∂ŷ_ijk / ∂θ` for the parameter at `coord`.
fn partial_of_prediction(model: &BnbtModel, coord: ParamCoord, i: usize, j: usize, k: usize) -> f64 {
    match coord {
        ParamCoord::Core { block, l, m, n } => {
            let b = &model.blocks[block];
            b.user_factors[[i, l]] * b.service_factors[[j, m]] * b.time_factors[[k, n]]
        }
        ParamCoord::UserFactor { block, col: l, .. } => {
            let b = &model.blocks[block];
            let (_, mm, nn) = b.core.dim();
            let mut t = 0.0;
            for m in 0..mm {
                for n in 0..nn {
                    t += b.core[[l, m, n]] * b.service_factors[[j, m]] * b.time_factors[[k, n]];
                }
            }
            t
        }
        ParamCoord::ServiceFactor { block, col: m, .. } => {
            let b = &model.blocks[block];
            let (ll, _, nn) = b.core.dim();
            let mut t = 0.0;
            for l in 0..ll {
                for n in 0..nn {
                    t += b.core[[l, m, n]] * b.user_factors[[i, l]] * b.time_factors[[k, n]];
                }
            }
            t
        }
        ParamCoord::TimeFactor { block, col: n, .. } => {
            let b = &model.blocks[block];
            let (ll, mm, _) = b.core.dim();
            let mut t = 0.0;
            for l in 0..ll {
                for m in 0..mm {
                    t += b.core[[l, m, n]] * b.user_factors[[i, l]] * b.service_factors[[j, m]];
                }
            }
            t
        }
        ParamCoord::UserBias(_) | ParamCoord::ServiceBias(_) | ParamCoord::TimeBias(_) => 1.0,
    }
}
