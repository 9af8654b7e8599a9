//! Planted-model data for recovery experiments.
//!
//! A model with known parameters is drawn, a random subset of cells is
//! observed, and Gaussian noise scaled to the signal's standard deviation
//! is added to each observation.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::model::{BlockStructure, BnbtModel};
use crate::tensor::{Dims, EntryIndex, SparseTensor3};

#[derive(Debug, Clone)]
pub struct PlantedSpec {
    pub dims: Dims,
    pub structure: BlockStructure,
    /// Fraction of all cells that are observed.
    pub density: f64,
    /// Noise standard deviation as a multiple of the clean signal's std.
    pub noise_ratio: f64,
    pub seed: u64,
    /// Planted cores and factors are drawn from `U[0, factor_high]`.
    pub factor_high: f64,
    /// Planted biases are drawn from `U[0, bias_high]`; zero disables them.
    pub bias_high: f64,
}

impl PlantedSpec {
    pub fn new(dims: Dims, structure: BlockStructure, density: f64, noise_ratio: f64, seed: u64) -> Self {
        PlantedSpec {
            dims,
            structure,
            density,
            noise_ratio,
            seed,
            factor_high: 1.0,
            bias_high: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedData {
    pub model: BnbtModel,
    /// Noisy observations.
    pub observed: SparseTensor3,
    /// Population std of the clean values at the observed cells.
    pub signal_std: f64,
    pub noise_std: f64,
}

pub fn planted(spec: &PlantedSpec) -> Result<PlantedData> {
    if !(spec.density > 0.0 && spec.density <= 1.0) {
        return Err(Error::InvalidConfig(format!("density must lie in (0, 1], got {}", spec.density)));
    }
    if !(spec.noise_ratio >= 0.0 && spec.noise_ratio.is_finite()) {
        return Err(Error::InvalidConfig(format!("noise ratio must be >= 0, got {}", spec.noise_ratio)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut model = BnbtModel::zeros(spec.dims, &spec.structure)?;
    for block in &mut model.blocks {
        for p in block
            .core
            .iter_mut()
            .chain(block.user_factors.iter_mut())
            .chain(block.service_factors.iter_mut())
            .chain(block.time_factors.iter_mut())
        {
            *p = rng.random_range(0.0..=spec.factor_high);
        }
    }
    if spec.bias_high > 0.0 {
        for p in model
            .user_bias
            .iter_mut()
            .chain(model.service_bias.iter_mut())
            .chain(model.time_bias.iter_mut())
        {
            *p = rng.random_range(0.0..=spec.bias_high);
        }
    }

    let cells = spec.dims.cells();
    let count = ((spec.density * cells as f64).round() as usize).clamp(1, cells);
    let (ss, kk) = (spec.dims.services, spec.dims.slices);
    let mut picked: Vec<usize> = sample(&mut rng, cells, count).into_vec();
    picked.sort_unstable();
    let indices: Vec<EntryIndex> = picked
        .into_iter()
        .map(|c| EntryIndex::new(c / (ss * kk), (c / kk) % ss, c % kk))
        .collect();
    let predictor = model.predictor();
    let clean: Vec<f64> = indices.iter().map(|&idx| predictor.predict(idx)).collect();

    let mean = clean.iter().sum::<f64>() / clean.len() as f64;
    let signal_std = (clean.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / clean.len() as f64).sqrt();
    let noise_std = spec.noise_ratio * signal_std;
    let noise = Normal::new(0.0, noise_std).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let observed = SparseTensor3::build(
        spec.dims,
        indices
            .into_iter()
            .zip(clean)
            .map(|(idx, v)| (idx, (v + noise.sample(&mut rng)).max(0.0))),
    )?;
    Ok(PlantedData {
        model,
        observed,
        signal_std,
        noise_std,
    })
}
