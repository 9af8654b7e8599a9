//! Reading QoS logs, drawing density splits, and checkpoint files.
//!
//! The layouts of every file written here are described in
//! `docs/formats.md`.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BlockRank, BlockStructure, BnbtModel};
use crate::tensor::{Dims, EntryIndex, SparseTensor3, SplitTensor};

/// Shape of the WS-DREAM dynamic QoS data: 142 users, 4500 services, 64 slices.
pub const WS_DREAM_DIMS: Dims = Dims {
    users: 142,
    services: 4500,
    slices: 64,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QosType {
    /// Seconds.
    ResponseTime,
    /// kbps.
    Throughput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetDescriptor {
    pub name: String,
    pub qos_type: QosType,
    pub dims: Dims,
    pub source_path: PathBuf,
}

impl DatasetDescriptor {
    pub fn new(name: impl Into<String>, qos_type: QosType, dims: Dims, source_path: impl Into<PathBuf>) -> Self {
        DatasetDescriptor {
            name: name.into(),
            qos_type,
            dims,
            source_path: source_path.into(),
        }
    }

    /// Response-time data (`D1`) at the WS-DREAM shape.
    pub fn ws_dream_response_time(path: impl Into<PathBuf>) -> Self {
        Self::new("D1", QosType::ResponseTime, WS_DREAM_DIMS, path)
    }

    /// Throughput data (`D2`) at the WS-DREAM shape.
    pub fn ws_dream_throughput(path: impl Into<PathBuf>) -> Self {
        Self::new("D2", QosType::Throughput, WS_DREAM_DIMS, path)
    }
}

/// Options for [`parse_qos_log`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Ids in the file start at 1 rather than 0.
    pub one_based: bool,
}

/// Result of ingesting one log file.
#[derive(Debug, Clone)]
pub struct IngestedLog {
    pub tensor: SparseTensor3,
    /// Data records read (comments and blank lines excluded).
    pub records: usize,
    /// Records with a negative value, i.e. "not observed".
    pub dropped: usize,
    /// Records accepted into the tensor before duplicate collapsing.
    pub kept: usize,
}

/// Parses a whitespace-separated `user service slice value` log.
pub fn parse_qos_log(path: &Path, descriptor: &DatasetDescriptor, opts: ParseOptions) -> Result<IngestedLog> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_qos_reader(BufReader::new(file), path, descriptor.dims, opts)
}

/// [`parse_qos_log`] over any reader; `origin` only labels error messages.
pub fn parse_qos_reader<R: BufRead>(reader: R, origin: &Path, dims: Dims, opts: ParseOptions) -> Result<IngestedLog> {
    dims.validate()?;
    let mut entries = Vec::new();
    let mut records = 0;
    let mut dropped = 0;
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(origin, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        records += 1;
        let bad = |reason: &str| Error::Parse {
            path: origin.to_path_buf(),
            line: n + 1,
            content: trimmed.to_string(),
            reason: reason.to_string(),
        };
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(bad(&format!("expected 4 fields, found {}", fields.len())));
        }
        let mut ids = [0usize; 3];
        for (slot, field) in ids.iter_mut().zip(&fields[..3]) {
            let raw: usize = field.parse().map_err(|_| bad(&format!("invalid id {field:?}")))?;
            *slot = if opts.one_based {
                raw.checked_sub(1).ok_or_else(|| bad("id 0 in a 1-based file"))?
            } else {
                raw
            };
        }
        let value: f64 = fields[3]
            .parse()
            .map_err(|_| bad(&format!("invalid value {:?}", fields[3])))?;
        if !value.is_finite() {
            return Err(bad("value is not finite"));
        }
        if value < 0.0 {
            dropped += 1;
            continue;
        }
        let idx = EntryIndex::new(ids[0], ids[1], ids[2]);
        dims.check(idx)?;
        entries.push((idx, value));
    }
    let kept = entries.len();
    let tensor = SparseTensor3::build(dims, entries)?;
    Ok(IngestedLog {
        tensor,
        records,
        dropped,
        kept,
    })
}

/// Writes entries as `i j k value` lines that [`parse_qos_reader`] reads back exactly.
pub fn write_qos_log<W: Write>(tensor: &SparseTensor3, mut out: W) -> std::io::Result<()> {
    for (idx, v) in tensor.entries() {
        writeln!(out, "{} {} {} {}", idx.i, idx.j, idx.k, v)?;
    }
    out.flush()
}

pub fn save_qos_log(tensor: &SparseTensor3, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_qos_log(tensor, std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

/// Keeps services `0..services` only, shrinking the service dimension.
pub fn restrict_services(tensor: &SparseTensor3, services: usize) -> Result<SparseTensor3> {
    let d = tensor.dims();
    let dims = Dims::new(d.users, services.min(d.services), d.slices);
    SparseTensor3::build(dims, tensor.entries().filter(|(idx, _)| idx.j < dims.services))
}

/// Fractions of the observed entries assigned to each partition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train: f64, validation: f64, test: f64, seed: u64) -> Result<Self> {
        let spec = SplitSpec {
            train,
            validation,
            test,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// The four density settings 10/10/80, 20/10/70, 30/10/60 and 60/10/30.
    pub fn density_protocol(seed: u64) -> Vec<SplitSpec> {
        [(0.1, 0.8), (0.2, 0.7), (0.3, 0.6), (0.6, 0.3)]
            .into_iter()
            .map(|(train, test)| SplitSpec {
                train,
                validation: 0.1,
                test,
                seed,
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, r) in [("train", self.train), ("validation", self.validation), ("test", self.test)] {
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::InvalidConfig(format!("{name} ratio must lie in (0, 1], got {r}")));
            }
        }
        let sum = self.train + self.validation + self.test;
        if sum > 1.0 + 1e-9 {
            return Err(Error::InvalidConfig(format!("split ratios sum to {sum}, which exceeds 1")));
        }
        Ok(())
    }

    /// Partition sizes for `n` entries: floors of the ratios, with the
    /// remainder going to the test partition when the ratios sum to one.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let count = |r: f64| ((r * n as f64) + 1e-9).floor() as usize;
        let train = count(self.train).min(n);
        let validation = count(self.validation).min(n - train);
        let rest = n - train - validation;
        let sum = self.train + self.validation + self.test;
        let test = if (sum - 1.0).abs() <= 1e-9 {
            rest
        } else {
            count(self.test).min(rest)
        };
        (train, validation, test)
    }
}

/// Shuffles the observed entries with a seeded RNG and cuts them into
/// training, validation and test partitions.
pub fn split(tensor: &SparseTensor3, spec: &SplitSpec) -> Result<SplitTensor> {
    spec.validate()?;
    if tensor.is_empty() {
        return Err(Error::EmptyInput("tensor to split"));
    }
    let n = tensor.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let (n_train, n_val, n_test) = spec.sizes(n);
    let take = |range: &[usize]| {
        SparseTensor3::build(
            tensor.dims(),
            range.iter().map(|&p| (tensor.indices()[p], tensor.values()[p])),
        )
    };
    SplitTensor::new(
        take(&order[..n_train])?,
        take(&order[n_train..n_train + n_val])?,
        take(&order[n_train + n_val..n_train + n_val + n_test])?,
    )
}

/// Audit record of a split: which entries landed in which partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub format_version: u32,
    pub source: PathBuf,
    pub dims: Dims,
    pub split: SplitSpec,
    pub records: usize,
    pub dropped: usize,
    pub observed: usize,
    pub partitions: ManifestPartitions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestPartitions {
    pub train: Vec<[usize; 3]>,
    pub validation: Vec<[usize; 3]>,
    pub test: Vec<[usize; 3]>,
}

impl SplitManifest {
    pub fn new(source: &Path, log: &IngestedLog, spec: &SplitSpec, parts: &SplitTensor) -> Self {
        let list = |t: &SparseTensor3| t.indices().iter().map(|x| [x.i, x.j, x.k]).collect();
        SplitManifest {
            format_version: 1,
            source: source.to_path_buf(),
            dims: log.tensor.dims(),
            split: *spec,
            records: log.records,
            dropped: log.dropped,
            observed: log.tensor.len(),
            partitions: ManifestPartitions {
                train: list(&parts.train),
                validation: list(&parts.validation),
                test: list(&parts.test),
            },
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self).expect("manifest serializes");
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

pub const CHECKPOINT_FORMAT: &str = "btdqos-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointDataset {
    pub name: String,
    pub qos_type: QosType,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Checkpoint {
    format: String,
    format_version: u32,
    dataset: Option<CheckpointDataset>,
    dims: Dims,
    structure: Vec<BlockRank>,
    blocks: Vec<CheckpointBlock>,
    user_bias: Vec<f64>,
    service_bias: Vec<f64>,
    time_bias: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointBlock {
    core: Vec<f64>,
    user_factors: Vec<f64>,
    service_factors: Vec<f64>,
    time_factors: Vec<f64>,
}

/// Serializes `model` as JSON. Floats are written in shortest round-trip
/// form, so [`load_model`] restores them bit for bit.
pub fn save_model(model: &BnbtModel, path: &Path, dataset: Option<&DatasetDescriptor>) -> Result<()> {
    let flat = |a: ndarray::ArrayViewD<'_, f64>| a.iter().copied().collect::<Vec<f64>>();
    let ckpt = Checkpoint {
        format: CHECKPOINT_FORMAT.to_string(),
        format_version: CHECKPOINT_VERSION,
        dataset: dataset.map(|d| CheckpointDataset {
            name: d.name.clone(),
            qos_type: d.qos_type,
        }),
        dims: model.dims(),
        structure: model.structure().blocks().to_vec(),
        blocks: model
            .blocks
            .iter()
            .map(|b| CheckpointBlock {
                core: flat(b.core.view().into_dyn()),
                user_factors: flat(b.user_factors.view().into_dyn()),
                service_factors: flat(b.service_factors.view().into_dyn()),
                time_factors: flat(b.time_factors.view().into_dyn()),
            })
            .collect(),
        user_bias: model.user_bias.to_vec(),
        service_bias: model.service_bias.to_vec(),
        time_bias: model.time_bias.to_vec(),
    };
    let text = serde_json::to_string_pretty(&ckpt).expect("checkpoint serializes");
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Reads a checkpoint written by [`save_model`], validating shapes and
/// nonnegativity.
pub fn load_model(path: &Path) -> Result<BnbtModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let corrupt = |reason: String| Error::CorruptCheckpoint {
        path: path.to_path_buf(),
        reason,
    };
    let ckpt: Checkpoint = serde_json::from_str(&text).map_err(|e| corrupt(e.to_string()))?;
    if ckpt.format != CHECKPOINT_FORMAT {
        return Err(corrupt(format!("unknown format tag {:?}", ckpt.format)));
    }
    if ckpt.format_version != CHECKPOINT_VERSION {
        return Err(corrupt(format!("unsupported format version {}", ckpt.format_version)));
    }
    let structure = BlockStructure::new(ckpt.structure).map_err(|e| corrupt(e.to_string()))?;
    let mut model = BnbtModel::zeros(ckpt.dims, &structure).map_err(|e| corrupt(e.to_string()))?;
    if ckpt.blocks.len() != structure.len() {
        return Err(corrupt(format!(
            "{} blocks stored but the structure declares {}",
            ckpt.blocks.len(),
            structure.len()
        )));
    }

    fn fill(dst: &mut [f64], src: &[f64], what: &str) -> std::result::Result<(), String> {
        if dst.len() != src.len() {
            return Err(format!("{what} has {} values, expected {}", src.len(), dst.len()));
        }
        if let Some(bad) = src.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(format!("{what} contains invalid parameter {bad}"));
        }
        dst.copy_from_slice(src);
        Ok(())
    }
    for (r, (dst, src)) in model.blocks.iter_mut().zip(&ckpt.blocks).enumerate() {
        fill(dst.core.as_slice_mut().unwrap(), &src.core, &format!("block {r} core")).map_err(&corrupt)?;
        fill(dst.user_factors.as_slice_mut().unwrap(), &src.user_factors, &format!("block {r} user_factors"))
            .map_err(&corrupt)?;
        fill(
            dst.service_factors.as_slice_mut().unwrap(),
            &src.service_factors,
            &format!("block {r} service_factors"),
        )
        .map_err(&corrupt)?;
        fill(dst.time_factors.as_slice_mut().unwrap(), &src.time_factors, &format!("block {r} time_factors"))
            .map_err(&corrupt)?;
    }
    fill(model.user_bias.as_slice_mut().unwrap(), &ckpt.user_bias, "user_bias").map_err(&corrupt)?;
    fill(model.service_bias.as_slice_mut().unwrap(), &ckpt.service_bias, "service_bias").map_err(&corrupt)?;
    fill(model.time_bias.as_slice_mut().unwrap(), &ckpt.time_bias, "time_bias").map_err(&corrupt)?;
    Ok(model)
}
