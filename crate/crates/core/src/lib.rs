//! Sparse third-order tensor completion with a biased nonnegative block
//! term decomposition, trained by multiplicative updates.
//!
//! The intended use is dynamic QoS prediction: a `users x services x time`
//! tensor of observed response times or throughputs is factorized and the
//! missing cells are predicted from the learned model.
//!
//! ```no_run
//! use btdqos::{fit, split, BlockStructure, SplitSpec, TrainConfig};
//! # fn main() -> btdqos::Result<()> {
//! # let tensor: btdqos::SparseTensor3 = unimplemented!();
//! let parts = split(&tensor, &SplitSpec::new(0.1, 0.1, 0.8, 7)?)?;
//! let structure = BlockStructure::uniform(3, 2, 2, 2)?;
//! let (model, report) = fit(&parts.train, &parts.validation, &structure, &TrainConfig::default())?;
//! println!("{} epochs, test RMSE {}", report.epochs_run, btdqos::rmse(&model, &parts.test)?);
//! # Ok(())
//! # }
//! ```
//!
//! Runnable walkthroughs for each capability live in the crate's
//! `examples/` directory.

pub mod cli;
pub mod error;
pub mod eval;
pub mod io;
pub mod model;
pub mod synthetic;
pub mod tensor;
pub mod trainer;

pub use error::{Error, Result};
pub use eval::{mae, rmse, run_benchmark, BenchmarkPlan, MetricsCell, MetricsReport, ModelSpec};
pub use io::{
    load_model, parse_qos_log, save_model, split, DatasetDescriptor, ParseOptions, QosType, SplitSpec,
};
pub use model::{reduce_to_cp, reduce_to_tucker, BlockRank, BlockStructure, BnbtModel, ParamCoord};
pub use tensor::{Dims, EntryIndex, Mode, SparseTensor3, SplitTensor};
pub use trainer::{
    epoch, fit, fit_multi_start, gradient_oracle, grid_search, objective, LambdaGrid, MultiStart, StopMetric, TrainConfig, TrainReport,
};

/// Derives an independent seed for sub-task `stream` from a base seed
/// (SplitMix64 finalizer over the combined value).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
