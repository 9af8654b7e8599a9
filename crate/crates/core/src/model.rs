//! Parameters of the biased nonnegative block term model and its predictor.
//!
//! The approximation of cell `(i, j, k)` is
//!
//! ```text
//! ŷ_ijk = Σ_r Σ_l Σ_m Σ_n s^(r)_lmn · a^(r)_il · b^(r)_jm · c^(r)_kn + d_i + e_j + f_k
//! ```
//!
//! where each block `r` owns an `L_r x M_r x N_r` core and three factor
//! matrices. With every block of rank `(1, 1, 1)` this is a biased CP model,
//! and with a single block it is a biased Tucker model.

use ndarray::{Array1, Array2, Array3, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Dims, EntryIndex};

/// Upper bound of the uniform initialization interval.
pub const INIT_UPPER: f64 = 0.05;

/// Largest tensor [`BnbtModel::dense_reconstruct`] will materialize.
pub const DENSE_CELL_LIMIT: usize = 1_000_000;

/// Multilinear rank `(L, M, N)` of one block term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockRank {
    pub l: usize,
    pub m: usize,
    pub n: usize,
}

impl BlockRank {
    pub fn new(l: usize, m: usize, n: usize) -> Self {
        BlockRank { l, m, n }
    }

    pub fn core_len(&self) -> usize {
        self.l * self.m * self.n
    }
}

/// Number of block terms and the rank of each.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockStructure {
    blocks: Vec<BlockRank>,
}

impl BlockStructure {
    pub fn new(blocks: Vec<BlockRank>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidStructure("at least one block is required".into()));
        }
        if let Some((r, b)) = blocks
            .iter()
            .enumerate()
            .find(|(_, b)| b.l == 0 || b.m == 0 || b.n == 0)
        {
            return Err(Error::InvalidStructure(format!(
                "block {r} has zero rank ({}, {}, {})",
                b.l, b.m, b.n
            )));
        }
        Ok(BlockStructure { blocks })
    }

    /// `count` blocks of identical rank `(l, m, n)`.
    pub fn uniform(count: usize, l: usize, m: usize, n: usize) -> Result<Self> {
        Self::new(vec![BlockRank::new(l, m, n); count])
    }

    pub fn blocks(&self) -> &[BlockRank] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Number of trainable parameters for a tensor of shape `dims`, biases included.
    pub fn parameter_count(&self, dims: Dims) -> usize {
        let blocks: usize = self
            .blocks
            .iter()
            .map(|b| dims.users * b.l + dims.services * b.m + dims.slices * b.n + b.core_len())
            .sum();
        blocks + dims.users + dims.services + dims.slices
    }
}

impl std::fmt::Display for BlockStructure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let uniform = self.blocks.windows(2).all(|w| w[0] == w[1]);
        if uniform {
            let b = self.blocks[0];
            write!(f, "{}x({},{},{})", self.blocks.len(), b.l, b.m, b.n)
        } else {
            let parts: Vec<String> = self
                .blocks
                .iter()
                .map(|b| format!("({},{},{})", b.l, b.m, b.n))
                .collect();
            write!(f, "[{}]", parts.join(","))
        }
    }
}

/// `rank` blocks of rank `(1, 1, 1)`: the biased CP special case.
pub fn reduce_to_cp(rank: usize) -> Result<BlockStructure> {
    if rank == 0 {
        return Err(Error::InvalidStructure("CP rank must be positive".into()));
    }
    BlockStructure::uniform(rank, 1, 1, 1)
}

/// One block of rank `(l, m, n)`: the biased Tucker special case.
pub fn reduce_to_tucker(l: usize, m: usize, n: usize) -> Result<BlockStructure> {
    BlockStructure::uniform(1, l, m, n)
}

/// Core tensor and factor matrices of one block term.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTerm {
    /// `L x M x N` core `S_r`.
    pub core: Array3<f64>,
    /// `|I| x L` user factors `A_r`.
    pub user_factors: Array2<f64>,
    /// `|J| x M` service factors `B_r`.
    pub service_factors: Array2<f64>,
    /// `|K| x N` time factors `C_r`.
    pub time_factors: Array2<f64>,
}

impl BlockTerm {
    fn zeros(dims: Dims, rank: BlockRank) -> Self {
        BlockTerm {
            core: Array3::zeros((rank.l, rank.m, rank.n)),
            user_factors: Array2::zeros((dims.users, rank.l)),
            service_factors: Array2::zeros((dims.services, rank.m)),
            time_factors: Array2::zeros((dims.slices, rank.n)),
        }
    }

    pub fn rank(&self) -> BlockRank {
        let (l, m, n) = self.core.dim();
        BlockRank { l, m, n }
    }

    pub(crate) fn view(&self) -> BlockView<'_> {
        let (l, m, n) = self.core.dim();
        BlockView {
            core: self.core.as_slice().expect("core in standard layout"),
            user: self.user_factors.as_slice().expect("factors in standard layout"),
            service: self.service_factors.as_slice().expect("factors in standard layout"),
            time: self.time_factors.as_slice().expect("factors in standard layout"),
            l,
            m,
            n,
        }
    }
}

/// Flat borrowed view of a block, resolved once per pass so the per-entry
/// loops index plain slices.
#[derive(Debug, Clone, Copy)]
pub(crate) struct BlockView<'a> {
    pub core: &'a [f64],
    pub user: &'a [f64],
    pub service: &'a [f64],
    pub time: &'a [f64],
    pub l: usize,
    pub m: usize,
    pub n: usize,
}

impl<'a> BlockView<'a> {
    #[inline]
    pub fn user_row(&self, i: usize) -> &'a [f64] {
        &self.user[i * self.l..(i + 1) * self.l]
    }

    #[inline]
    pub fn service_row(&self, j: usize) -> &'a [f64] {
        &self.service[j * self.m..(j + 1) * self.m]
    }

    #[inline]
    pub fn time_row(&self, k: usize) -> &'a [f64] {
        &self.time[k * self.n..(k + 1) * self.n]
    }

    #[inline]
    pub fn value_at(&self, i: usize, j: usize, k: usize) -> f64 {
        let (mm, nn) = (self.m, self.n);
        let a = self.user_row(i);
        let b = self.service_row(j);
        let c = self.time_row(k);
        let mut total = 0.0;
        for (l, &al) in a.iter().enumerate() {
            let mut over_m = 0.0;
            for (m, &bm) in b.iter().enumerate() {
                let base = (l * mm + m) * nn;
                let over_n: f64 = self.core[base..base + nn].iter().zip(c).map(|(s, c)| s * c).sum();
                over_m += bm * over_n;
            }
            total += al * over_m;
        }
        total
    }
}

/// Predictor over a whole model that caches, for every block and time
/// slice, the core contracted with that slice's time factors
/// (`g_klm = Σ_n s_lmn c_kn`), so a prediction costs `L·M` per block.
#[derive(Debug, Clone)]
pub(crate) struct Predictor<'a> {
    pub blocks: Vec<BlockView<'a>>,
    time_cores: Vec<Vec<f64>>,
    user_bias: &'a [f64],
    service_bias: &'a [f64],
    time_bias: &'a [f64],
}

impl<'a> Predictor<'a> {
    fn new(model: &'a BnbtModel) -> Self {
        let blocks: Vec<BlockView<'a>> = model.blocks.iter().map(BlockTerm::view).collect();
        let slices = model.dims.slices;
        let time_cores = blocks
            .iter()
            .map(|b| {
                let lm = b.l * b.m;
                let mut g = vec![0.0; slices * lm];
                for k in 0..slices {
                    let c = b.time_row(k);
                    for (q, out) in g[k * lm..(k + 1) * lm].iter_mut().enumerate() {
                        *out = b.core[q * b.n..(q + 1) * b.n].iter().zip(c).map(|(s, c)| s * c).sum();
                    }
                }
                g
            })
            .collect();
        Predictor {
            blocks,
            time_cores,
            user_bias: model.user_bias.as_slice().expect("contiguous bias"),
            service_bias: model.service_bias.as_slice().expect("contiguous bias"),
            time_bias: model.time_bias.as_slice().expect("contiguous bias"),
        }
    }

    /// `L x M` row-major matrix `Σ_n s_lmn c_kn` of block `r`.
    #[inline]
    pub fn time_core(&self, r: usize, k: usize) -> &[f64] {
        let b = &self.blocks[r];
        let lm = b.l * b.m;
        &self.time_cores[r][k * lm..(k + 1) * lm]
    }

    #[inline]
    pub fn predict(&self, idx: EntryIndex) -> f64 {
        let mut latent = 0.0;
        for (r, b) in self.blocks.iter().enumerate() {
            let g = self.time_core(r, idx.k);
            let a = b.user_row(idx.i);
            let bj = b.service_row(idx.j);
            let mut total = 0.0;
            for (l, &al) in a.iter().enumerate() {
                let over_m: f64 = g[l * b.m..(l + 1) * b.m].iter().zip(bj).map(|(g, b)| g * b).sum();
                total += al * over_m;
            }
            latent += total;
        }
        latent + self.user_bias[idx.i] + self.service_bias[idx.j] + self.time_bias[idx.k]
    }
}

/// Block term parameters plus user, service and time biases.
#[derive(Debug, Clone, PartialEq)]
pub struct BnbtModel {
    dims: Dims,
    structure: BlockStructure,
    pub blocks: Vec<BlockTerm>,
    /// `d`, one entry per user.
    pub user_bias: Array1<f64>,
    /// `e`, one entry per service.
    pub service_bias: Array1<f64>,
    /// `f`, one entry per time slice.
    pub time_bias: Array1<f64>,
}

impl BnbtModel {
    /// All-zero model of the given shape.
    pub fn zeros(dims: Dims, structure: &BlockStructure) -> Result<Self> {
        dims.validate()
            .map_err(|_| Error::InvalidStructure(format!("tensor dims must be positive, got {dims}")))?;
        Ok(BnbtModel {
            dims,
            structure: structure.clone(),
            blocks: structure
                .blocks()
                .iter()
                .map(|&rank| BlockTerm::zeros(dims, rank))
                .collect(),
            user_bias: Array1::zeros(dims.users),
            service_bias: Array1::zeros(dims.services),
            time_bias: Array1::zeros(dims.slices),
        })
    }

    /// Every parameter drawn independently from `U[0, 0.05]`.
    ///
    /// Draw order follows the parameter layout: for each block its core, then
    /// `A_r`, `B_r`, `C_r` in row-major order; then `d`, `e`, `f`.
    pub fn init_random(dims: Dims, structure: &BlockStructure, seed: u64) -> Result<Self> {
        let mut model = Self::zeros(dims, structure)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        model.for_each_param_mut(|p| *p = rng.random_range(0.0..=INIT_UPPER));
        Ok(model)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn structure(&self) -> &BlockStructure {
        &self.structure
    }

    pub fn parameter_count(&self) -> usize {
        self.structure.parameter_count(self.dims)
    }

    /// `ŷ_ijk` including biases.
    pub fn predict_entry(&self, idx: EntryIndex) -> Result<f64> {
        self.dims.check(idx)?;
        Ok(self.predict_unchecked(idx))
    }

    pub(crate) fn predict_unchecked(&self, idx: EntryIndex) -> f64 {
        let (i, j, k) = (idx.i, idx.j, idx.k);
        let latent: f64 = self.blocks.iter().map(|b| b.view().value_at(i, j, k)).sum();
        latent + self.user_bias[i] + self.service_bias[j] + self.time_bias[k]
    }

    pub(crate) fn predictor(&self) -> Predictor<'_> {
        Predictor::new(self)
    }

    /// Materializes the full approximation tensor.
    ///
    /// Each block is built as `S_r ×₁ A_r ×₂ B_r ×₃ C_r` through three
    /// successive mode products (matrix multiplications on unfoldings), then
    /// the biases are broadcast on top.
    pub fn dense_reconstruct(&self) -> Result<Array3<f64>> {
        let Dims {
            users,
            services,
            slices,
        } = self.dims;
        let cells = self.dims.cells();
        if cells > DENSE_CELL_LIMIT {
            return Err(Error::TooLarge {
                cells,
                limit: DENSE_CELL_LIMIT,
            });
        }
        let mut out = Array3::<f64>::zeros((users, services, slices));
        for block in &self.blocks {
            out += &mode_products(block);
        }
        for ((i, j, k), v) in out.indexed_iter_mut() {
            *v += self.user_bias[i] + self.service_bias[j] + self.time_bias[k];
        }
        Ok(out)
    }

    /// Visits every parameter in layout order.
    pub fn for_each_param<F: FnMut(f64)>(&self, mut f: F) {
        for block in &self.blocks {
            block.core.iter().for_each(|&p| f(p));
            block.user_factors.iter().for_each(|&p| f(p));
            block.service_factors.iter().for_each(|&p| f(p));
            block.time_factors.iter().for_each(|&p| f(p));
        }
        self.user_bias.iter().for_each(|&p| f(p));
        self.service_bias.iter().for_each(|&p| f(p));
        self.time_bias.iter().for_each(|&p| f(p));
    }

    pub fn for_each_param_mut<F: FnMut(&mut f64)>(&mut self, mut f: F) {
        for block in &mut self.blocks {
            block.core.iter_mut().for_each(&mut f);
            block.user_factors.iter_mut().for_each(&mut f);
            block.service_factors.iter_mut().for_each(&mut f);
            block.time_factors.iter_mut().for_each(&mut f);
        }
        self.user_bias.iter_mut().for_each(&mut f);
        self.service_bias.iter_mut().for_each(&mut f);
        self.time_bias.iter_mut().for_each(&mut f);
    }

    /// All parameters flattened in layout order.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        self.for_each_param(|p| out.push(p));
        out
    }

    /// Smallest parameter value (`+inf` for an empty model).
    pub fn min_parameter(&self) -> f64 {
        let mut lo = f64::INFINITY;
        self.for_each_param(|p| lo = lo.min(p));
        lo
    }

    pub fn max_parameter(&self) -> f64 {
        let mut hi = f64::NEG_INFINITY;
        self.for_each_param(|p| hi = hi.max(p));
        hi
    }

    /// True when every parameter is finite and `>= 0`.
    pub fn is_nonnegative(&self) -> bool {
        let mut ok = true;
        self.for_each_param(|p| ok &= p.is_finite() && p >= 0.0);
        ok
    }

    pub fn clear_biases(&mut self) {
        self.user_bias.fill(0.0);
        self.service_bias.fill(0.0);
        self.time_bias.fill(0.0);
    }

    /// Reorders the block terms; `order[r]` is the old index of new block `r`.
    pub fn permute_blocks(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.blocks.len()];
        if order.len() != self.blocks.len() || order.iter().any(|&r| r >= seen.len() || std::mem::replace(&mut seen[r], true)) {
            return Err(Error::InvalidStructure(format!(
                "{order:?} is not a permutation of {} blocks",
                self.blocks.len()
            )));
        }
        let blocks: Vec<BlockTerm> = order.iter().map(|&r| self.blocks[r].clone()).collect();
        let structure = BlockStructure::new(blocks.iter().map(BlockTerm::rank).collect())?;
        Ok(BnbtModel {
            structure,
            blocks,
            ..self.clone()
        })
    }
}

/// Address of a single scalar parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamCoord {
    Core { block: usize, l: usize, m: usize, n: usize },
    UserFactor { block: usize, row: usize, col: usize },
    ServiceFactor { block: usize, row: usize, col: usize },
    TimeFactor { block: usize, row: usize, col: usize },
    UserBias(usize),
    ServiceBias(usize),
    TimeBias(usize),
}

impl BnbtModel {
    fn slot(&mut self, coord: ParamCoord) -> Option<&mut f64> {
        match coord {
            ParamCoord::Core { block, l, m, n } => self.blocks.get_mut(block)?.core.get_mut([l, m, n]),
            ParamCoord::UserFactor { block, row, col } => {
                self.blocks.get_mut(block)?.user_factors.get_mut([row, col])
            }
            ParamCoord::ServiceFactor { block, row, col } => {
                self.blocks.get_mut(block)?.service_factors.get_mut([row, col])
            }
            ParamCoord::TimeFactor { block, row, col } => {
                self.blocks.get_mut(block)?.time_factors.get_mut([row, col])
            }
            ParamCoord::UserBias(i) => self.user_bias.get_mut(i),
            ParamCoord::ServiceBias(j) => self.service_bias.get_mut(j),
            ParamCoord::TimeBias(k) => self.time_bias.get_mut(k),
        }
    }

    pub fn param(&self, coord: ParamCoord) -> Result<f64> {
        let value = match coord {
            ParamCoord::Core { block, l, m, n } => self.blocks.get(block).and_then(|b| b.core.get([l, m, n])),
            ParamCoord::UserFactor { block, row, col } => {
                self.blocks.get(block).and_then(|b| b.user_factors.get([row, col]))
            }
            ParamCoord::ServiceFactor { block, row, col } => {
                self.blocks.get(block).and_then(|b| b.service_factors.get([row, col]))
            }
            ParamCoord::TimeFactor { block, row, col } => {
                self.blocks.get(block).and_then(|b| b.time_factors.get([row, col]))
            }
            ParamCoord::UserBias(i) => self.user_bias.get(i),
            ParamCoord::ServiceBias(j) => self.service_bias.get(j),
            ParamCoord::TimeBias(k) => self.time_bias.get(k),
        };
        value.copied().ok_or_else(|| Error::InvalidCoordinate(format!("{coord:?}")))
    }

    pub fn set_param(&mut self, coord: ParamCoord, value: f64) -> Result<()> {
        let slot = self
            .slot(coord)
            .ok_or_else(|| Error::InvalidCoordinate(format!("{coord:?}")))?;
        *slot = value;
        Ok(())
    }

    /// Every valid coordinate, in layout order.
    pub fn coords(&self) -> Vec<ParamCoord> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for (block, b) in self.blocks.iter().enumerate() {
            for ((l, m, n), _) in b.core.indexed_iter() {
                out.push(ParamCoord::Core { block, l, m, n });
            }
            for ((row, col), _) in b.user_factors.indexed_iter() {
                out.push(ParamCoord::UserFactor { block, row, col });
            }
            for ((row, col), _) in b.service_factors.indexed_iter() {
                out.push(ParamCoord::ServiceFactor { block, row, col });
            }
            for ((row, col), _) in b.time_factors.indexed_iter() {
                out.push(ParamCoord::TimeFactor { block, row, col });
            }
        }
        out.extend((0..self.dims.users).map(ParamCoord::UserBias));
        out.extend((0..self.dims.services).map(ParamCoord::ServiceBias));
        out.extend((0..self.dims.slices).map(ParamCoord::TimeBias));
        out
    }
}

/// `S ×₁ A ×₂ B ×₃ C` for a single block.
fn mode_products(block: &BlockTerm) -> Array3<f64> {
    let (l, m, n) = block.core.dim();
    let users = block.user_factors.nrows();
    let services = block.service_factors.nrows();
    let slices = block.time_factors.nrows();

    // mode 1: (|I| x L) · (L x MN)
    let unfold1 = block.core.to_shape((l, m * n)).expect("contiguous core").to_owned();
    let t1 = block
        .user_factors
        .dot(&unfold1)
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((users, m, n))
        .expect("reshape mode-1 product");

    // mode 2: per user slice, (|J| x M) · (M x N)
    let mut t2 = Array3::<f64>::zeros((users, services, n));
    for (i, slab) in t1.axis_iter(Axis(0)).enumerate() {
        t2.index_axis_mut(Axis(0), i).assign(&block.service_factors.dot(&slab));
    }

    // mode 3: (|I||J| x N) · (N x |K|)
    let unfold3 = t2.into_shape_with_order((users * services, n)).expect("contiguous mode-2 product");
    unfold3
        .dot(&block.time_factors.t())
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((users, services, slices))
        .expect("reshape mode-3 product")
}
