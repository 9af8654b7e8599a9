//! One sweep of nonnegative multiplicative updates.
//!
//! Order within a sweep is cores, user factors, service factors, time
//! factors, then the user, service and time biases. The cached predictions
//! are frozen while one group is updated and refreshed before the next.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{BlockView, BnbtModel};
use crate::tensor::{Mode, SparseTensor3};

use super::objective::{check_dims, predictions};
use super::TrainConfig;

/// Runs one full update sweep and returns the updated model.
pub fn epoch(model: &BnbtModel, train: &SparseTensor3, cfg: &TrainConfig) -> Result<BnbtModel> {
    check_dims(model, train)?;
    cfg.validate()?;
    let mut next = model.clone();
    let mut preds = predictions(&next, train);
    sweep(&mut next, train, cfg, &mut preds)?;
    Ok(next)
}

/// In-place sweep. `preds` must hold current predictions on entry and holds
/// them again on return.
pub(crate) fn sweep(
    model: &mut BnbtModel,
    train: &SparseTensor3,
    cfg: &TrainConfig,
    preds: &mut [f64],
) -> Result<()> {
    if train.is_empty() {
        return Ok(());
    }
    if !cfg.freeze_cores {
        update_cores(model, train, cfg, preds)?;
        refresh(model, train, preds);
    }
    for mode in Mode::ALL {
        update_factors(model, train, cfg, preds, mode)?;
        refresh(model, train, preds);
    }
    if cfg.bias_enabled {
        for mode in Mode::ALL {
            update_bias(model, train, cfg, preds, mode)?;
        }
    }
    Ok(())
}

fn refresh(model: &BnbtModel, train: &SparseTensor3, preds: &mut [f64]) {
    let predictor = model.predictor();
    preds
        .par_iter_mut()
        .with_min_len(4096)
        .zip(train.indices().par_iter())
        .for_each(|(p, &idx)| *p = predictor.predict(idx));
}

#[inline]
fn ratio_update(current: f64, numerator: f64, denominator: f64) -> f64 {
    current * numerator / denominator
}

fn ensure_finite(values: &[f64], what: &'static str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

fn update_cores(model: &mut BnbtModel, train: &SparseTensor3, cfg: &TrainConfig, preds: &[f64]) -> Result<()> {
    let reg = cfg.lambda1 * train.len() as f64;
    let updated: Vec<Vec<f64>> = model
        .blocks
        .par_iter()
        .map(|block| {
            let block = block.view();
            let (ll, mm, nn) = (block.l, block.m, block.n);
            let mut num = vec![0.0; ll * mm * nn];
            let mut den = vec![0.0; ll * mm * nn];
            for (p, idx) in train.indices().iter().enumerate() {
                let (y, yh) = (train.values()[p], preds[p]);
                let a = block.user_row(idx.i);
                let b = block.service_row(idx.j);
                let c = block.time_row(idx.k);
                let mut q = 0;
                for &al in a {
                    for &bm in b {
                        let ab = al * bm;
                        let rows = num[q..q + nn].iter_mut().zip(den[q..q + nn].iter_mut());
                        for ((nu, de), &cn) in rows.zip(c) {
                            let w = ab * cn;
                            *nu += y * w;
                            *de += yh * w;
                        }
                        q += nn;
                    }
                }
            }
            block
                .core
                .iter()
                .zip(num.iter().zip(&den))
                .map(|(&s, (&nu, &de))| ratio_update(s, nu, de + reg * s + cfg.epsilon_guard))
                .collect()
        })
        .collect();
    for (block, values) in model.blocks.iter_mut().zip(updated) {
        ensure_finite(&values, "core tensors")?;
        block
            .core
            .as_slice_mut()
            .expect("core in standard layout")
            .copy_from_slice(&values);
    }
    Ok(())
}

/// Contraction of a block with every factor except the one along `mode`.
///
/// Writes `t` with `t_l = Σ_m Σ_n s_lmn b_jm c_kn` for the user mode and the
/// analogous sums for the service and time modes. `g` is the block's core
/// contracted with the time factors of slice `k` (`L x M`, row-major).
fn contract(block: &BlockView<'_>, g: &[f64], mode: Mode, i: usize, j: usize, t: &mut [f64]) {
    let (mm, nn) = (block.m, block.n);
    match mode {
        Mode::User => {
            let b = block.service_row(j);
            for (l, tl) in t.iter_mut().enumerate() {
                *tl = g[l * mm..(l + 1) * mm].iter().zip(b).map(|(g, b)| g * b).sum();
            }
        }
        Mode::Service => {
            let a = block.user_row(i);
            t.fill(0.0);
            for (l, &al) in a.iter().enumerate() {
                for (tm, &glm) in t.iter_mut().zip(&g[l * mm..(l + 1) * mm]) {
                    *tm += al * glm;
                }
            }
        }
        Mode::Time => {
            let a = block.user_row(i);
            let b = block.service_row(j);
            let s = block.core;
            t.fill(0.0);
            for (l, &al) in a.iter().enumerate() {
                for (m, &bm) in b.iter().enumerate() {
                    let ab = al * bm;
                    let base = (l * mm + m) * nn;
                    for (tn, &sv) in t.iter_mut().zip(&s[base..base + nn]) {
                        *tn += ab * sv;
                    }
                }
            }
        }
    }
}

fn factor_width(block: &BlockView<'_>, mode: Mode) -> usize {
    match mode {
        Mode::User => block.l,
        Mode::Service => block.m,
        Mode::Time => block.n,
    }
}

fn factor_row<'a>(block: &BlockView<'a>, mode: Mode, s: usize) -> &'a [f64] {
    match mode {
        Mode::User => block.user_row(s),
        Mode::Service => block.service_row(s),
        Mode::Time => block.time_row(s),
    }
}

fn update_factors(
    model: &mut BnbtModel,
    train: &SparseTensor3,
    cfg: &TrainConfig,
    preds: &[f64],
    mode: Mode,
) -> Result<()> {
    let extent = train.dims().extent(mode);
    let predictor = model.predictor();
    let blocks = &predictor.blocks;
    let widths: Vec<usize> = blocks.iter().map(|b| factor_width(b, mode)).collect();
    let total: usize = widths.iter().sum();
    let max_width = widths.iter().copied().max().unwrap_or(0);

    let rows: Vec<Option<Vec<f64>>> = (0..extent)
        .into_par_iter()
        .map(|s| {
            let group = train.group_unchecked(mode, s);
            if group.is_empty() {
                return None;
            }
            let mut num = vec![0.0; total];
            let mut den = vec![0.0; total];
            let mut t = vec![0.0; max_width];
            for &p in group {
                let idx = train.indices()[p];
                let (y, yh) = (train.values()[p], preds[p]);
                let mut offset = 0;
                for (r, (block, &w)) in blocks.iter().zip(&widths).enumerate() {
                    let g = predictor.time_core(r, idx.k);
                    contract(block, g, mode, idx.i, idx.j, &mut t[..w]);
                    let rows = num[offset..offset + w].iter_mut().zip(den[offset..offset + w].iter_mut());
                    for ((nu, de), &tx) in rows.zip(&t[..w]) {
                        *nu += y * tx;
                        *de += yh * tx;
                    }
                    offset += w;
                }
            }
            let reg = cfg.lambda2 * group.len() as f64;
            let mut row = Vec::with_capacity(total);
            let mut offset = 0;
            for (block, &w) in blocks.iter().zip(&widths) {
                for (x, &old) in factor_row(block, mode, s).iter().enumerate() {
                    let q = offset + x;
                    row.push(ratio_update(old, num[q], den[q] + reg * old + cfg.epsilon_guard));
                }
                offset += w;
            }
            Some(row)
        })
        .collect();

    let what = match mode {
        Mode::User => "user factors",
        Mode::Service => "service factors",
        Mode::Time => "time factors",
    };
    for (s, row) in rows.into_iter().enumerate() {
        let Some(row) = row else { continue };
        ensure_finite(&row, what)?;
        let mut offset = 0;
        for (block, &w) in model.blocks.iter_mut().zip(&widths) {
            let matrix = match mode {
                Mode::User => &mut block.user_factors,
                Mode::Service => &mut block.service_factors,
                Mode::Time => &mut block.time_factors,
            };
            matrix.row_mut(s).iter_mut().zip(&row[offset..offset + w]).for_each(|(dst, &v)| *dst = v);
            offset += w;
        }
    }
    Ok(())
}

/// Bias updates shift every prediction on the slice by the same amount, so
/// the cache is refreshed incrementally.
fn update_bias(
    model: &mut BnbtModel,
    train: &SparseTensor3,
    cfg: &TrainConfig,
    preds: &mut [f64],
    mode: Mode,
) -> Result<()> {
    let bias = match mode {
        Mode::User => &mut model.user_bias,
        Mode::Service => &mut model.service_bias,
        Mode::Time => &mut model.time_bias,
    };
    let what = match mode {
        Mode::User => "user bias",
        Mode::Service => "service bias",
        Mode::Time => "time bias",
    };
    for (s, value) in bias.iter_mut().enumerate() {
        let group = train.group_unchecked(mode, s);
        if group.is_empty() {
            continue;
        }
        let (mut num, mut den) = (0.0, 0.0);
        for &p in group {
            num += train.values()[p];
            den += preds[p];
        }
        let old = *value;
        let reg = cfg.lambda3 * group.len() as f64;
        let new = ratio_update(old, num, den + reg * old + cfg.epsilon_guard);
        if !new.is_finite() {
            return Err(Error::NonFinite(what));
        }
        *value = new;
        let shift = new - old;
        for &p in group {
            preds[p] += shift;
        }
    }
    Ok(())
}
