//! Brute-force reference implementations used as test oracles.
//!
//! Everything here works from the public model fields with plain index
//! loops over every observed entry, independent of the slice indexes and
//! contraction code in the library.

#![allow(dead_code)]

use btdqos::synthetic::{planted, PlantedSpec};
use btdqos::{BlockRank, BlockStructure, BnbtModel, Dims, EntryIndex, SparseTensor3, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const GUARD: f64 = 1e-12;

/// Quadruple-loop prediction.
pub fn naive_predict(model: &BnbtModel, i: usize, j: usize, k: usize) -> f64 {
    let mut total = 0.0;
    for block in &model.blocks {
        let (ll, mm, nn) = block.core.dim();
        for l in 0..ll {
            for m in 0..mm {
                for n in 0..nn {
                    total += block.core[[l, m, n]]
                        * block.user_factors[[i, l]]
                        * block.service_factors[[j, m]]
                        * block.time_factors[[k, n]];
                }
            }
        }
    }
    total + model.user_bias[i] + model.service_bias[j] + model.time_bias[k]
}

/// Squared residuals plus count-weighted squared penalties, summed entry by
/// entry.
pub fn naive_objective(model: &BnbtModel, train: &SparseTensor3, cfg: &TrainConfig) -> f64 {
    let mut total = 0.0;
    for (idx, y) in train.entries() {
        let (i, j, k) = (idx.i, idx.j, idx.k);
        let r = y - naive_predict(model, i, j, k);
        total += r * r;
        for block in &model.blocks {
            total += cfg.lambda1 * block.core.iter().map(|v| v * v).sum::<f64>();
            total += cfg.lambda2 * block.user_factors.row(i).iter().map(|v| v * v).sum::<f64>();
            total += cfg.lambda2 * block.service_factors.row(j).iter().map(|v| v * v).sum::<f64>();
            total += cfg.lambda2 * block.time_factors.row(k).iter().map(|v| v * v).sum::<f64>();
        }
        total += cfg.lambda3
            * (model.user_bias[i].powi(2) + model.service_bias[j].powi(2) + model.time_bias[k].powi(2));
    }
    total
}

fn all_predictions(model: &BnbtModel, train: &SparseTensor3) -> Vec<f64> {
    train
        .entries()
        .map(|(idx, _)| naive_predict(model, idx.i, idx.j, idx.k))
        .collect()
}

/// Applies `θ ← θ Σ y t / (Σ ŷ t + λ n θ + guard)` to one parameter, where
/// `touch(idx)` gives `t = ∂ŷ/∂θ` at an entry or `None` when the entry does
/// not involve the parameter. Parameters touched by no entry are unchanged.
fn naive_coordinate<F>(theta: f64, lambda: f64, train: &SparseTensor3, preds: &[f64], touch: F) -> f64
where
    F: Fn(EntryIndex) -> Option<f64>,
{
    let (mut num, mut den, mut count) = (0.0, 0.0, 0usize);
    for (p, (idx, y)) in train.entries().enumerate() {
        if let Some(t) = touch(idx) {
            num += y * t;
            den += preds[p] * t;
            count += 1;
        }
    }
    if count == 0 {
        return theta;
    }
    theta * num / (den + lambda * count as f64 * theta + GUARD)
}

/// Reference epoch: every parameter of a group is updated from the same
/// frozen predictions, which are recomputed from scratch after each of the
/// seven groups (cores, A, B, C, d, e, f).
pub fn naive_epoch(model: &BnbtModel, train: &SparseTensor3, cfg: &TrainConfig) -> BnbtModel {
    let mut cur = model.clone();

    if !cfg.freeze_cores {
        let preds = all_predictions(&cur, train);
        let old = cur.clone();
        for (r, block) in old.blocks.iter().enumerate() {
            for ((l, m, n), &s) in block.core.indexed_iter() {
                let touch = |idx: EntryIndex| {
                    Some(block.user_factors[[idx.i, l]] * block.service_factors[[idx.j, m]] * block.time_factors[[idx.k, n]])
                };
                cur.blocks[r].core[[l, m, n]] = naive_coordinate(s, cfg.lambda1, train, &preds, touch);
            }
        }
    }

    for mode in 0..3 {
        let preds = all_predictions(&cur, train);
        let old = cur.clone();
        for (r, block) in old.blocks.iter().enumerate() {
            let (ll, mm, nn) = block.core.dim();
            let factor = match mode {
                0 => &block.user_factors,
                1 => &block.service_factors,
                _ => &block.time_factors,
            };
            for ((row, col), &theta) in factor.indexed_iter() {
                let touch = |idx: EntryIndex| {
                    let own = [idx.i, idx.j, idx.k][mode];
                    if own != row {
                        return None;
                    }
                    let mut t = 0.0;
                    for l in 0..ll {
                        for m in 0..mm {
                            for n in 0..nn {
                                let chosen = [l, m, n][mode];
                                if chosen != col {
                                    continue;
                                }
                                let a = if mode == 0 { 1.0 } else { block.user_factors[[idx.i, l]] };
                                let b = if mode == 1 { 1.0 } else { block.service_factors[[idx.j, m]] };
                                let c = if mode == 2 { 1.0 } else { block.time_factors[[idx.k, n]] };
                                t += block.core[[l, m, n]] * a * b * c;
                            }
                        }
                    }
                    Some(t)
                };
                let updated = naive_coordinate(theta, cfg.lambda2, train, &preds, touch);
                let target = match mode {
                    0 => &mut cur.blocks[r].user_factors,
                    1 => &mut cur.blocks[r].service_factors,
                    _ => &mut cur.blocks[r].time_factors,
                };
                target[[row, col]] = updated;
            }
        }
    }

    if cfg.bias_enabled {
        for mode in 0..3 {
            let preds = all_predictions(&cur, train);
            let old = cur.clone();
            let bias = match mode {
                0 => &old.user_bias,
                1 => &old.service_bias,
                _ => &old.time_bias,
            };
            for (s, &theta) in bias.iter().enumerate() {
                let touch = |idx: EntryIndex| ([idx.i, idx.j, idx.k][mode] == s).then_some(1.0);
                let updated = naive_coordinate(theta, cfg.lambda3, train, &preds, touch);
                match mode {
                    0 => cur.user_bias[s] = updated,
                    1 => cur.service_bias[s] = updated,
                    _ => cur.time_bias[s] = updated,
                }
            }
        }
    }
    cur
}

/// Maximum relative difference between corresponding parameters, with an
/// absolute floor of 1 in the denominator.
pub fn max_rel_diff(a: &BnbtModel, b: &BnbtModel) -> f64 {
    a.parameters()
        .iter()
        .zip(b.parameters())
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1.0))
        .fold(0.0, f64::max)
}

/// A random block structure with `blocks ≤ max_blocks` and ranks `≤ max_rank`.
pub fn random_structure(rng: &mut ChaCha8Rng, max_blocks: usize, max_rank: usize) -> BlockStructure {
    let count = rng.random_range(1..=max_blocks);
    let blocks = (0..count)
        .map(|_| {
            BlockRank::new(
                rng.random_range(1..=max_rank),
                rng.random_range(1..=max_rank),
                rng.random_range(1..=max_rank),
            )
        })
        .collect();
    BlockStructure::new(blocks).unwrap()
}

pub fn random_dims(rng: &mut ChaCha8Rng, max: usize) -> Dims {
    Dims::new(
        rng.random_range(1..=max),
        rng.random_range(1..=max),
        rng.random_range(1..=max),
    )
}

/// Random sparse tensor with values in `[0, 5)` at roughly `density` of the
/// cells (at least one).
pub fn random_tensor(rng: &mut ChaCha8Rng, dims: Dims, density: f64) -> SparseTensor3 {
    let mut entries = Vec::new();
    for i in 0..dims.users {
        for j in 0..dims.services {
            for k in 0..dims.slices {
                if rng.random::<f64>() < density {
                    entries.push((EntryIndex::new(i, j, k), rng.random_range(0.0..5.0)));
                }
            }
        }
    }
    if entries.is_empty() {
        entries.push((EntryIndex::new(0, 0, 0), 1.0));
    }
    SparseTensor3::build(dims, entries).unwrap()
}

/// A model with random parameters in `[0, 1)`, not just the small
/// initialization range.
pub fn random_model(rng: &mut ChaCha8Rng, dims: Dims, structure: &BlockStructure) -> BnbtModel {
    let mut model = BnbtModel::zeros(dims, structure).unwrap();
    model.for_each_param_mut(|p| *p = rng.random::<f64>());
    model
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The 20 seeded fixtures used for descent and nonnegativity checks.
pub fn fixture(seed: u64) -> (SparseTensor3, BnbtModel, TrainConfig) {
    let mut r = rng(10_000 + seed);
    let dims = Dims::new(r.random_range(3..=8), r.random_range(3..=8), r.random_range(2..=6));
    let structure = random_structure(&mut r, 3, 2);
    let train = random_tensor(&mut r, dims, 0.4);
    let cfg = TrainConfig {
        lambda1: [0.0, 0.01, 0.1][seed as usize % 3],
        lambda2: [0.0, 0.01, 0.1][(seed as usize / 3) % 3],
        lambda3: [0.0, 0.01][seed as usize % 2],
        seed,
        ..TrainConfig::default()
    };
    let model = BnbtModel::init_random(dims, &structure, seed).unwrap();
    (train, model, cfg)
}

/// Noiseless data drawn from a known model, observed at every cell.
pub fn exact_fixture(seed: u64) -> (SparseTensor3, BnbtModel) {
    let structure = BlockStructure::uniform(2, 2, 2, 2).unwrap();
    let mut spec = PlantedSpec::new(Dims::new(5, 6, 4), structure, 1.0, 0.0, seed);
    spec.bias_high = 0.3;
    let data = planted(&spec).unwrap();
    (data.observed, data.model)
}
