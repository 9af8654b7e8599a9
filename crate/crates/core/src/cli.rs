//! Command-line front end: `ingest`, `train`, `evaluate`, `predict` and
//! `benchmark`.
//!
//! Exit codes are 0 on success, 2 for usage, validation and input errors,
//! and 3 for numerical or output failures.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::eval::{self, BenchmarkPlan, ModelSpec};
use crate::io::{self, DatasetDescriptor, ParseOptions, QosType, SplitManifest, SplitSpec};
use crate::model::{BlockRank, BlockStructure, BnbtModel};
use crate::tensor::{Dims, EntryIndex, SparseTensor3};
use crate::trainer::{self, LambdaGrid, TrainConfig};
use crate::derive_seed;

/// Environment variable naming the default directory for dataset files.
pub const DATA_DIR_ENV: &str = "BTDQOS_DATA_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

// seed streams fanned out from the top-level seed
const SPLIT_STREAM: u64 = 0;
const INIT_STREAM: u64 = 1;
const REPEAT_STREAM: u64 = 1_000;

#[derive(Debug, Parser)]
#[command(name = "btdqos", version, about = "Biased nonnegative block term tensor completion for QoS data")]
struct Cli {
    /// Top-level seed; every split and initialization seed is derived from it
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = one per core)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Suppress progress messages on stderr
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a QoS log and write a seeded train/validation/test split
    Ingest(IngestArgs),
    /// Train a model from a run configuration
    Train(TrainArgs),
    /// Score a checkpoint on a test tensor
    Evaluate(EvaluateArgs),
    /// Print one predicted value
    Predict(PredictArgs),
    /// Run the density-sweep comparison of CP, Tucker and block term models
    Benchmark(BenchmarkArgs),
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// QoS log (`user service slice value` per line)
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = io::WS_DREAM_DIMS.users)]
    users: usize,
    #[arg(long, default_value_t = io::WS_DREAM_DIMS.services)]
    services: usize,
    #[arg(long, default_value_t = io::WS_DREAM_DIMS.slices)]
    slices: usize,
    /// Train, validation and test ratios
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.1, 0.8])]
    split: Vec<f64>,
    /// Ids in the log start at 1
    #[arg(long)]
    one_based: bool,
    /// Output directory for the partitions and the manifest
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Train without user, service and time biases
    #[arg(long)]
    no_bias: bool,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    trajectory: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Test tensor in QoS log format
    #[arg(long)]
    test: PathBuf,
    #[arg(long)]
    one_based: bool,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    i: usize,
    j: usize,
    k: usize,
}

#[derive(Debug, Args)]
struct BenchmarkArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `benchmark.repeats`
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    detail: Option<PathBuf>,
    #[arg(long)]
    aggregate: Option<PathBuf>,
}

/// Run configuration file (TOML).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub threads: Option<usize>,
    pub dataset: DatasetSection,
    #[serde(default)]
    pub split: Option<SplitSection>,
    pub structure: StructureSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub grid: Option<LambdaGrid>,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub benchmark: BenchmarkSection,
}

/// Either a full log (`path`, split at load time) or pre-split partitions
/// (`train` and `validation`, optionally `test`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    #[serde(default = "default_dataset_name")]
    pub name: String,
    #[serde(default = "default_qos_type")]
    pub qos_type: QosType,
    pub users: usize,
    pub services: usize,
    pub slices: usize,
    #[serde(default)]
    pub one_based: bool,
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub train: Option<PathBuf>,
    #[serde(default)]
    pub validation: Option<PathBuf>,
    #[serde(default)]
    pub test: Option<PathBuf>,
}

fn default_dataset_name() -> String {
    "D".to_string()
}

fn default_qos_type() -> QosType {
    QosType::ResponseTime
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSection {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureSection {
    /// Number of block terms `R`.
    pub blocks: usize,
    /// Uniform `(L, M, N)` for every block.
    pub ranks: [usize; 3],
}

impl StructureSection {
    pub fn to_structure(&self) -> crate::Result<BlockStructure> {
        let [l, m, n] = self.ranks;
        BlockStructure::new(vec![BlockRank::new(l, m, n); self.blocks])
    }
}

/// [`TrainConfig`] without its seed, which comes from the top level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub epsilon_guard: f64,
    pub bias_enabled: bool,
    pub freeze_cores: bool,
    pub stop_metric: trainer::StopMetric,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        TrainSection {
            lambda1: d.lambda1,
            lambda2: d.lambda2,
            lambda3: d.lambda3,
            max_iter: d.max_iter,
            tol: d.tol,
            epsilon_guard: d.epsilon_guard,
            bias_enabled: d.bias_enabled,
            freeze_cores: d.freeze_cores,
            stop_metric: d.stop_metric,
        }
    }
}

impl TrainSection {
    fn to_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            lambda3: self.lambda3,
            max_iter: self.max_iter,
            tol: self.tol,
            seed,
            epsilon_guard: self.epsilon_guard,
            bias_enabled: self.bias_enabled,
            freeze_cores: self.freeze_cores,
            stop_metric: self.stop_metric,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub checkpoint: PathBuf,
    pub trajectory: PathBuf,
    pub detail: PathBuf,
    pub aggregate: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            checkpoint: "model.json".into(),
            trajectory: "trajectory.csv".into(),
            detail: "benchmark.csv".into(),
            aggregate: "benchmark_aggregate.csv".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkSection {
    pub repeats: usize,
    /// `[train, validation, test]` ratios per sub-dataset.
    pub splits: Vec<[f64; 3]>,
    /// Subset of `"cp"`, `"tucker"`, `"btd"`.
    pub models: Vec<String>,
    pub cp_rank: usize,
    pub tucker_ranks: [usize; 3],
}

impl Default for BenchmarkSection {
    fn default() -> Self {
        BenchmarkSection {
            repeats: 10,
            splits: vec![[0.1, 0.1, 0.8], [0.2, 0.1, 0.7], [0.3, 0.1, 0.6], [0.6, 0.1, 0.3]],
            models: vec!["cp".into(), "tucker".into(), "btd".into()],
            cp_rank: 3,
            tucker_ranks: [3, 3, 3],
        }
    }
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Lib(Error),
    Output(PathBuf, std::io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Output(..) => EXIT_RUNTIME,
            CliError::Lib(e) => match e {
                Error::NonFinite(_) | Error::Csv(_) => EXIT_RUNTIME,
                _ => EXIT_USAGE,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => f.write_str(msg),
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Output(path, e) => write!(f, "cannot write {}: {e}", path.display()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

// Output is buffered so commands can run inside a dedicated thread pool.
struct Context {
    seed: Option<u64>,
    quiet: bool,
    out: Vec<u8>,
    err: Vec<u8>,
}

impl Context {
    fn info(&mut self, msg: impl std::fmt::Display) {
        if !self.quiet {
            let _ = writeln!(self.err, "{msg}");
        }
    }
}

/// Parses `args` (program name first) and runs the command, returning the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    let threads = cli.threads;
    let mut ctx = Context {
        seed: cli.seed,
        quiet: cli.quiet,
        out: Vec::new(),
        err: Vec::new(),
    };
    let result = with_threads(threads, || dispatch(cli.command, &mut ctx));
    let code = match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(ctx.err, "error: {e}");
            e.exit_code()
        }
    };
    let _ = out.write_all(&ctx.out);
    let _ = err.write_all(&ctx.err);
    let _ = out.flush();
    code
}

fn with_threads<F>(threads: Option<usize>, f: F) -> CliResult<()>
where
    F: FnOnce() -> CliResult<()> + Send,
{
    match threads {
        None => f(),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Usage(format!("cannot start {n} threads: {e}")))?;
            pool.install(f)
        }
    }
}

fn dispatch(command: Command, ctx: &mut Context) -> CliResult<()> {
    match command {
        Command::Ingest(args) => cmd_ingest(args, ctx),
        Command::Train(args) => cmd_train(args, ctx),
        Command::Evaluate(args) => cmd_evaluate(args, ctx),
        Command::Predict(args) => cmd_predict(args, ctx),
        Command::Benchmark(args) => cmd_benchmark(args, ctx),
    }
}

/// Resolves an input path: relative paths are tried against `base` first
/// and then against `$BTDQOS_DATA_DIR`.
fn resolve_input(path: &Path, base: &Path) -> CliResult<PathBuf> {
    let direct = if path.is_absolute() { path.to_path_buf() } else { base.join(path) };
    if direct.exists() {
        return Ok(direct);
    }
    if path.is_relative() {
        if let Some(dir) = std::env::var_os(DATA_DIR_ENV) {
            let candidate = Path::new(&dir).join(path);
            if candidate.exists() {
                return Ok(candidate);
            }
        }
    }
    Err(CliError::Usage(format!("input file not found: {}", direct.display())))
}

fn resolve_output(path: &Path, base: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

fn write_output(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::Output(parent.to_path_buf(), e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::Output(path.to_path_buf(), e))
}

fn cmd_ingest(args: IngestArgs, ctx: &mut Context) -> CliResult<()> {
    let path = resolve_input(&args.data, Path::new("."))?;
    if args.split.len() != 3 {
        return Err(CliError::Usage(format!(
            "--split needs three comma-separated ratios, got {}",
            args.split.len()
        )));
    }
    let spec = SplitSpec::new(
        args.split[0],
        args.split[1],
        args.split[2],
        derive_seed(ctx.seed.unwrap_or(0), SPLIT_STREAM),
    )?;
    let dims = Dims::new(args.users, args.services, args.slices);
    let descriptor = DatasetDescriptor::new("D", QosType::ResponseTime, dims, &path);
    let log = io::parse_qos_log(&path, &descriptor, ParseOptions { one_based: args.one_based })?;
    let parts = io::split(&log.tensor, &spec)?;

    fs::create_dir_all(&args.out).map_err(|e| CliError::Output(args.out.clone(), e))?;
    for (name, part) in [
        ("train.txt", &parts.train),
        ("validation.txt", &parts.validation),
        ("test.txt", &parts.test),
    ] {
        let mut buf = Vec::new();
        io::write_qos_log(part, &mut buf).expect("in-memory write");
        write_output(&args.out.join(name), &buf)?;
    }
    let manifest = SplitManifest::new(&path, &log, &spec, &parts);
    let manifest_path = args.out.join("manifest.json");
    manifest.save(&manifest_path)?;
    ctx.info(format_args!(
        "ingested {} records ({} dropped, {} observed); split {}/{}/{} written to {}",
        log.records,
        log.dropped,
        log.tensor.len(),
        parts.train.len(),
        parts.validation.len(),
        parts.test.len(),
        args.out.display()
    ));
    Ok(())
}

fn load_config(path: &Path) -> CliResult<(RunConfigFile, PathBuf)> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let cfg: RunConfigFile =
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, base))
}

struct LoadedData {
    descriptor: DatasetDescriptor,
    /// The full observed tensor (only when loaded from a single log).
    full: Option<SparseTensor3>,
    train: SparseTensor3,
    validation: SparseTensor3,
}

fn load_data(cfg: &RunConfigFile, base: &Path, seed: u64, need_split: bool) -> CliResult<LoadedData> {
    let d = &cfg.dataset;
    let dims = Dims::new(d.users, d.services, d.slices);
    let opts = ParseOptions { one_based: d.one_based };
    if let Some(path) = &d.path {
        let path = resolve_input(path, base)?;
        let descriptor = DatasetDescriptor::new(&d.name, d.qos_type, dims, &path);
        let log = io::parse_qos_log(&path, &descriptor, opts)?;
        let (train, validation) = if need_split {
            let s = cfg
                .split
                .ok_or_else(|| CliError::Usage("config needs a [split] section to split dataset.path".into()))?;
            let spec = SplitSpec::new(s.train, s.validation, s.test, derive_seed(seed, SPLIT_STREAM))?;
            let parts = io::split(&log.tensor, &spec)?;
            (parts.train, parts.validation)
        } else {
            let empty = SparseTensor3::empty(dims)?;
            (empty.clone(), empty)
        };
        return Ok(LoadedData {
            descriptor,
            full: Some(log.tensor),
            train,
            validation,
        });
    }
    match (&d.train, &d.validation) {
        (Some(t), Some(v)) => {
            let tp = resolve_input(t, base)?;
            let vp = resolve_input(v, base)?;
            let descriptor = DatasetDescriptor::new(&d.name, d.qos_type, dims, &tp);
            let train = io::parse_qos_log(&tp, &descriptor, opts)?.tensor;
            let validation = io::parse_qos_log(&vp, &descriptor, opts)?.tensor;
            Ok(LoadedData {
                descriptor,
                full: None,
                train,
                validation,
            })
        }
        _ => Err(CliError::Usage(
            "dataset needs either `path` or both `train` and `validation`".into(),
        )),
    }
}

fn cmd_train(args: TrainArgs, ctx: &mut Context) -> CliResult<()> {
    let (cfg, base) = load_config(&args.config)?;
    let seed = ctx.seed.unwrap_or(cfg.seed);
    let structure = cfg.structure.to_structure()?;
    let mut train_cfg = cfg.train.to_config(derive_seed(seed, INIT_STREAM));
    if let Some(n) = args.max_iter {
        train_cfg.max_iter = n;
    }
    if args.no_bias {
        train_cfg.bias_enabled = false;
    }
    train_cfg.validate()?;
    let data = load_data(&cfg, &base, seed, true)?;
    let checkpoint = args
        .checkpoint
        .unwrap_or_else(|| resolve_output(&cfg.output.checkpoint, &base));
    let trajectory = args
        .trajectory
        .unwrap_or_else(|| resolve_output(&cfg.output.trajectory, &base));

    ctx.info(format_args!(
        "training {} on {} ({} train / {} validation entries)",
        structure,
        data.train.dims(),
        data.train.len(),
        data.validation.len()
    ));
    let (model, report, chosen) = match &cfg.grid {
        Some(grid) => {
            let outcome = trainer::grid_search(&data.train, &data.validation, &structure, grid, &train_cfg)?;
            (outcome.model, outcome.report, outcome.best)
        }
        None => {
            let (m, r) = trainer::fit(&data.train, &data.validation, &structure, &train_cfg)?;
            (m, r, train_cfg)
        }
    };

    if let Some(parent) = checkpoint.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::Output(parent.to_path_buf(), e))?;
    }
    io::save_model(&model, &checkpoint, Some(&data.descriptor))?;
    let mut buf = Vec::new();
    report.write_trajectory_csv(&mut buf)?;
    write_output(&trajectory, &buf)?;
    let last_rmse = report.validation_rmse_trajectory.last().copied().unwrap_or(f64::NAN);
    ctx.info(format_args!(
        "epochs={} converged={} validation_rmse={:.6} lambdas=({}, {}, {}) checkpoint={}",
        report.epochs_run,
        report.converged,
        last_rmse,
        chosen.lambda1,
        chosen.lambda2,
        chosen.lambda3,
        checkpoint.display()
    ));
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs, ctx: &mut Context) -> CliResult<()> {
    let model = load_checkpoint(&args.checkpoint)?;
    let test_path = resolve_input(&args.test, Path::new("."))?;
    let descriptor = DatasetDescriptor::new("test", QosType::ResponseTime, model.dims(), &test_path);
    let test = io::parse_qos_log(&test_path, &descriptor, ParseOptions { one_based: args.one_based })?.tensor;
    let (rmse, mae) = eval::rmse_mae(&model, &test)?;
    let _ = writeln!(ctx.out, "rmse={rmse:.6} mae={mae:.6}");
    Ok(())
}

fn load_checkpoint(path: &Path) -> CliResult<BnbtModel> {
    let path = resolve_input(path, Path::new("."))?;
    Ok(io::load_model(&path)?)
}

fn cmd_predict(args: PredictArgs, ctx: &mut Context) -> CliResult<()> {
    let model = load_checkpoint(&args.checkpoint)?;
    let value = model.predict_entry(EntryIndex::new(args.i, args.j, args.k))?;
    let _ = writeln!(ctx.out, "{}", format_significant(value, 6));
    Ok(())
}

fn cmd_benchmark(args: BenchmarkArgs, ctx: &mut Context) -> CliResult<()> {
    let (cfg, base) = load_config(&args.config)?;
    let seed = ctx.seed.unwrap_or(cfg.seed);
    let data = load_data(&cfg, &base, seed, false)?;
    let tensor = data
        .full
        .ok_or_else(|| CliError::Usage("benchmark needs dataset.path (a full log to split)".into()))?;
    let bench = &cfg.benchmark;
    let repeats = args.repeats.unwrap_or(bench.repeats);
    if repeats == 0 {
        return Err(CliError::Usage("repeats must be at least 1".into()));
    }

    let splits = bench
        .splits
        .iter()
        .enumerate()
        .map(|(s, r)| SplitSpec::new(r[0], r[1], r[2], derive_seed(seed, SPLIT_STREAM + 10 * s as u64)))
        .collect::<crate::Result<Vec<_>>>()?;
    let btd = cfg.structure.to_structure()?;
    let mut models = Vec::new();
    for name in &bench.models {
        models.push(match name.as_str() {
            "cp" => ModelSpec::cp_emulated(bench.cp_rank)?,
            "tucker" => {
                let [l, m, n] = bench.tucker_ranks;
                ModelSpec::tucker_emulated(l, m, n)?
            }
            "btd" => {
                let [l, m, n] = cfg.structure.ranks;
                ModelSpec::new(format!("M3-BNBT[btd R={} {l}x{m}x{n}]", cfg.structure.blocks), btd.clone())
            }
            other => return Err(CliError::Usage(format!("unknown benchmark model {other:?}"))),
        });
    }
    let plan = BenchmarkPlan {
        dataset: cfg.dataset.name.clone(),
        splits,
        models,
        seeds: (0..repeats as u64).map(|r| derive_seed(seed, REPEAT_STREAM + r)).collect(),
        train: cfg.train.to_config(0),
        grid: cfg.grid.clone(),
    };
    ctx.info(format_args!(
        "benchmark on {} ({} observed): {} sub-datasets x {} models x {} repeats",
        tensor.dims(),
        tensor.len(),
        plan.splits.len(),
        plan.models.len(),
        repeats
    ));
    let report = eval::run_benchmark(&tensor, &plan)?;

    let detail = args.detail.unwrap_or_else(|| resolve_output(&bench_output(&cfg.output.detail), &base));
    let aggregate = args
        .aggregate
        .unwrap_or_else(|| resolve_output(&bench_output(&cfg.output.aggregate), &base));
    let mut buf = Vec::new();
    report.write_detail_csv(&mut buf)?;
    write_output(&detail, &buf)?;
    let mut buf = Vec::new();
    report.write_aggregate_csv(&mut buf)?;
    write_output(&aggregate, &buf)?;
    for row in report.aggregate() {
        ctx.info(format_args!(
            "{:<8} {:<32} rmse {:.4} ± {:.4}  mae {:.4} ± {:.4}",
            row.dataset, row.model, row.rmse_mean, row.rmse_std, row.mae_mean, row.mae_std
        ));
    }
    Ok(())
}

fn bench_output(p: &Path) -> PathBuf {
    p.to_path_buf()
}

/// Formats `value` with `digits` significant digits in fixed notation,
/// e.g. `3.6` → `3.60000` for six digits.
pub fn format_significant(value: f64, digits: usize) -> String {
    if value == 0.0 || !value.is_finite() {
        return format!("{:.*}", digits.saturating_sub(1), value);
    }
    let magnitude = value.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - magnitude).max(0) as usize;
    let text = format!("{value:.decimals$}");
    // rounding can carry into a new leading digit (9.999996 → 10.00000)
    let rounded: f64 = text.parse().unwrap_or(value);
    if decimals > 0 && rounded.abs().log10().floor() as i64 > magnitude {
        format!("{value:.prec$}", prec = decimals - 1)
    } else {
        text
    }
}
