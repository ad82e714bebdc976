//! End-to-end stages over an output directory. Each stage reads the
//! artifacts of the previous ones, so stages can be rerun independently.
//!
//! Artifacts:
//!
//! | file | written by |
//! |---|---|
//! | `labeled_pairs.csv`, `split.csv`, `manifest.json` | [`prepare`] |
//! | `optimize/seed-<s>.csv`, `optimize/summary.json`, `best_config.json` | [`optimize`] |
//! | `model.json`, `model_features.json`, `history.csv` | [`train`] |
//! | `report_<split>.json`, `report_<split>.txt`, `roc_<split>.csv`, `pr_<split>.csv`, `predictions_<split>.csv` | [`evaluate`] |
//! | `run.json` | every stage |

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ConfigError, RunConfig};
use crate::corpus::{
    assign_pu_labels, class_weights, load_catalog, read_pairs, split_dataset, ClassWeights, CorpusError,
    DataSplit, DrugCatalog, PairInstance, PairLabel, SplitPart, SplitProtocol, SplitRatios,
};
use crate::eval::{
    build_report, curve_csv, pr_curve, rank_top_k, roc_curve, EvalError, MetricReport, RankedPair,
};
use crate::features::{FeatureBuilder, FeatureError, PairDataset};
use crate::hyperopt::{self, HyperParams, HyperoptError, SearchSpace};
use crate::mlp::{
    self, init_model, load_checkpoint, predict_batch, save_checkpoint, MatrixDataset, MlpConfig, MlpError,
    MlpModel, TrainOptions,
};
use crate::rbscore::RuleBreakdown;

/// Final-training budget applied to the searched configuration.
pub const FINAL_MAX_EPOCHS: usize = 100;
pub const FINAL_PATIENCE: usize = 10;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Mlp(#[from] MlpError),
    #[error(transparent)]
    Hyperopt(#[from] HyperoptError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {message}")]
    Artifact { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(String),
}

impl PipelineError {
    /// 2 for configuration and input-validation problems, 1 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::Feature(_) | PipelineError::Invalid(_) => 2,
            PipelineError::Corpus(CorpusError::Io { .. }) => 1,
            PipelineError::Corpus(_) => 2,
            PipelineError::Hyperopt(HyperoptError::InvalidSettings(_)) => 2,
            PipelineError::Mlp(MlpError::InvalidConfig(_)) => 2,
            _ => 1,
        }
    }
}

pub type Result<T, E = PipelineError> = std::result::Result<T, E>;

/// Who is running the pipeline; recorded in `run.json`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunContext {
    pub version: String,
    pub command_line: Vec<String>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> PipelineError + '_ {
    move |source| PipelineError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    std::fs::write(path, text).map_err(io_err(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("artifact serializes");
    text.push('\n');
    write_text(path, &text)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, hint: &str) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Artifact {
        path: path.to_path_buf(),
        message: format!("{e} ({hint})"),
    })?;
    serde_json::from_str(&text).map_err(|source| PipelineError::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let file = File::create(path).map_err(io_err(path))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

/// Lower-case hex SHA-256 of a file's contents.
pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = File::open(path).map_err(io_err(path))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf).map_err(io_err(path))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hasher.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputHash {
    pub path: PathBuf,
    pub sha256: String,
}

/// Contents of `run.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    pub version: String,
    pub command_line: Vec<String>,
    pub config: RunConfig,
    pub inputs: Vec<InputHash>,
}

/// Writes `run.json` with the resolved config and input hashes.
pub fn write_run_record(cfg: &RunConfig, ctx: &RunContext, command: &str) -> Result<RunRecord> {
    let inputs = cfg
        .inputs
        .all()
        .into_iter()
        .map(|p| {
            Ok(InputHash {
                path: p.to_path_buf(),
                sha256: sha256_file(p)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let record = RunRecord {
        command: command.to_string(),
        version: ctx.version.clone(),
        command_line: ctx.command_line.clone(),
        config: cfg.clone(),
        inputs,
    };
    write_json(&cfg.output_dir.join("run.json"), &record)?;
    Ok(record)
}

fn load_inputs(cfg: &RunConfig) -> Result<DrugCatalog> {
    cfg.validate()?;
    Ok(load_catalog(&cfg.inputs.catalog_sources())?)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub positive: usize,
    pub reliable_negative: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub candidate_pairs: usize,
    pub positive: usize,
    pub reliable_negative: usize,
    pub unknown: usize,
    pub protocol: SplitProtocol,
    pub ratios: SplitRatios,
    pub seed: u64,
    pub train: ClassCounts,
    pub validation: ClassCounts,
    pub test: ClassCounts,
    /// Labeled pairs dropped because their drugs fell into different partitions.
    pub dropped: usize,
    pub class_weights: ClassWeights,
}

fn counts(pairs: &[PairInstance]) -> ClassCounts {
    let positive = pairs.iter().filter(|p| p.label == PairLabel::Positive).count();
    ClassCounts {
        positive,
        reliable_negative: pairs.len() - positive,
    }
}

#[derive(Serialize, Deserialize)]
struct SplitRow {
    drug_a: String,
    drug_b: String,
    label: String,
    part: String,
}

/// Labels candidate pairs, splits the labeled ones and writes the manifest.
pub fn prepare(cfg: &RunConfig, ctx: &RunContext) -> Result<Manifest> {
    let catalog = load_inputs(cfg)?;
    let raw = read_pairs(&cfg.inputs.pairs)?;
    let pairs = assign_pu_labels(&raw, &catalog, cfg.tau_neg)?;
    let split = split_dataset(
        &pairs,
        &catalog,
        cfg.split.protocol,
        &cfg.split.ratios,
        cfg.split.seed,
    )?;
    let weights = class_weights(&split.train)?;

    let out = &cfg.output_dir;
    let path = out.join("labeled_pairs.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["drug_a", "drug_b", "label"]).map_err(csv_err(&path))?;
    for p in &pairs {
        w.write_record([&p.drug_a, &p.drug_b, p.label.as_str()])
            .map_err(csv_err(&path))?;
    }
    w.flush().map_err(io_err(&path))?;

    let path = out.join("split.csv");
    let mut w = csv_writer(&path)?;
    for part in SplitPart::ALL {
        for p in split.part(part) {
            w.serialize(SplitRow {
                drug_a: p.drug_a.clone(),
                drug_b: p.drug_b.clone(),
                label: p.label.as_str().to_string(),
                part: part.as_str().to_string(),
            })
            .map_err(csv_err(&path))?;
        }
    }
    w.flush().map_err(io_err(&path))?;

    let count = |label| pairs.iter().filter(|p| p.label == label).count();
    let manifest = Manifest {
        candidate_pairs: pairs.len(),
        positive: count(PairLabel::Positive),
        reliable_negative: count(PairLabel::ReliableNegative),
        unknown: count(PairLabel::Unknown),
        protocol: split.protocol,
        ratios: cfg.split.ratios,
        seed: split.seed,
        train: counts(&split.train),
        validation: counts(&split.validation),
        test: counts(&split.test),
        dropped: split.dropped,
        class_weights: weights,
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    write_run_record(cfg, ctx, "prepare")?;
    Ok(manifest)
}

fn missing_prepare(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |e| PipelineError::Artifact {
        path: path.to_path_buf(),
        message: format!("{e} (run `prepare` first)"),
    }
}

/// Reads the split written by [`prepare`].
pub fn load_split(cfg: &RunConfig) -> Result<DataSplit> {
    let path = cfg.output_dir.join("split.csv");
    let file = File::open(&path).map_err(missing_prepare(&path))?;
    let mut split = DataSplit {
        train: Vec::new(),
        validation: Vec::new(),
        test: Vec::new(),
        protocol: cfg.split.protocol,
        seed: cfg.split.seed,
        dropped: 0,
    };
    for row in csv::Reader::from_reader(file).deserialize::<SplitRow>() {
        let row = row.map_err(csv_err(&path))?;
        let bad = |m: String| PipelineError::Artifact {
            path: path.clone(),
            message: m,
        };
        let label = PairLabel::parse(&row.label).ok_or_else(|| bad(format!("unknown label {:?}", row.label)))?;
        let part: SplitPart = row.part.parse().map_err(bad)?;
        let pair = PairInstance::new(row.drug_a, row.drug_b, label)
            .ok_or_else(|| PipelineError::Invalid("self-pair in split.csv".into()))?;
        match part {
            SplitPart::Train => split.train.push(pair),
            SplitPart::Validation => split.validation.push(pair),
            SplitPart::Test => split.test.push(pair),
        }
    }
    Ok(split)
}

/// Reads all labeled candidate pairs written by [`prepare`].
pub fn load_labeled_pairs(cfg: &RunConfig) -> Result<Vec<PairInstance>> {
    let path = cfg.output_dir.join("labeled_pairs.csv");
    let file = File::open(&path).map_err(missing_prepare(&path))?;
    let mut out = Vec::new();
    for rec in csv::Reader::from_reader(file).records() {
        let rec = rec.map_err(csv_err(&path))?;
        let label = PairLabel::parse(&rec[2]).ok_or_else(|| PipelineError::Artifact {
            path: path.clone(),
            message: format!("unknown label {:?}", &rec[2]),
        })?;
        if let Some(p) = PairInstance::new(&rec[0], &rec[1], label) {
            out.push(p);
        }
    }
    Ok(out)
}

fn builder<'a>(catalog: &'a DrugCatalog, lambda1: f64, tau_se: f64, clinical: bool) -> Result<FeatureBuilder<'a>> {
    let b = FeatureBuilder::new(catalog, lambda1, tau_se)?;
    Ok(if clinical { b } else { b.without_clinical() })
}

/// Model inputs for one split, built per batch or up front.
enum Inputs<'b> {
    Lazy(PairDataset<'b>),
    Dense(MatrixDataset),
}

impl Inputs<'_> {
    fn get(&self) -> &dyn mlp::Dataset {
        match self {
            Inputs::Lazy(d) => d,
            Inputs::Dense(d) => d,
        }
    }
}

fn inputs<'b>(b: &'b FeatureBuilder<'_>, pairs: &[PairInstance], materialize: bool) -> Result<Inputs<'b>> {
    let lazy = b.dataset(pairs)?;
    Ok(if materialize {
        Inputs::Dense(lazy.materialize())
    } else {
        Inputs::Lazy(lazy)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub best: HyperParams,
    pub fitness: f64,
    pub evaluations: usize,
    pub aco_iterations: usize,
    pub pso_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeSummary {
    pub per_seed: Vec<SeedResult>,
    pub best_seed: u64,
    pub best: HyperParams,
    pub best_fitness: f64,
}

/// Searches hyperparameters with validation ROC-AUC as fitness, once per
/// configured seed, and writes the overall best as `best_config.json`.
pub fn optimize(cfg: &RunConfig, ctx: &RunContext) -> Result<OptimizeSummary> {
    let catalog = load_inputs(cfg)?;
    let split = load_split(cfg)?;
    let weights = class_weights(&split.train)?;
    let search = &cfg.search;
    let space = SearchSpace {
        lambda1: search.tune_lambda1.then_some((0.0, 1.0)),
        ..SearchSpace::default()
    };
    let features = builder(&catalog, cfg.lambda1, cfg.tau_se, cfg.use_rbscore)?;
    let train_set = inputs(&features, &split.train, cfg.materialize)?;
    let val_set = inputs(&features, &split.validation, cfg.materialize)?;

    let mut per_seed = Vec::new();
    for &seed in &search.seeds {
        let fitness = |p: &HyperParams| -> std::result::Result<f64, String> {
            let config = p.to_mlp_config(search.max_epochs, search.patience, seed);
            let run = |tr: &dyn mlp::Dataset, va: &dyn mlp::Dataset| {
                let model = init_model(&config, tr.input_dim())?;
                mlp::train(model, tr, va, weights, TrainOptions::default())
            };
            let outcome = match p.lambda1 {
                Some(l) => {
                    let b = builder(&catalog, l, cfg.tau_se, cfg.use_rbscore).map_err(|e| e.to_string())?;
                    let tr = inputs(&b, &split.train, cfg.materialize).map_err(|e| e.to_string())?;
                    let va = inputs(&b, &split.validation, cfg.materialize).map_err(|e| e.to_string())?;
                    run(tr.get(), va.get())
                }
                None => run(train_set.get(), val_set.get()),
            };
            outcome.map(|o| o.best_val_auc).map_err(|e| e.to_string())
        };
        log::info!("optimize: seed {seed}");
        let outcome = hyperopt::optimize(&space, &fitness, &search.optimizer, seed)?;
        let path = cfg.output_dir.join("optimize").join(format!("seed-{seed}.csv"));
        std::fs::create_dir_all(path.parent().expect("has parent")).map_err(io_err(&path))?;
        let file = File::create(&path).map_err(io_err(&path))?;
        hyperopt::write_log_csv(&outcome.log, BufWriter::new(file)).map_err(csv_err(&path))?;
        per_seed.push(SeedResult {
            seed,
            best: outcome.best,
            fitness: outcome.best_fitness,
            evaluations: outcome.log.len(),
            aco_iterations: outcome.aco_iterations,
            pso_iterations: outcome.pso_iterations,
        });
    }
    let winner = per_seed
        .iter()
        .fold(None::<&SeedResult>, |acc, r| match acc {
            Some(b) if b.fitness >= r.fitness => Some(b),
            _ => Some(r),
        })
        .expect("at least one seed");
    let summary = OptimizeSummary {
        best_seed: winner.seed,
        best: winner.best.clone(),
        best_fitness: winner.fitness,
        per_seed: per_seed.clone(),
    };
    write_json(&cfg.output_dir.join("optimize").join("summary.json"), &summary)?;
    let best_config = summary
        .best
        .to_mlp_config(FINAL_MAX_EPOCHS, FINAL_PATIENCE, summary.best_seed);
    write_json(&cfg.output_dir.join("best_config.json"), &best_config)?;
    write_run_record(cfg, ctx, "optimize")?;
    Ok(summary)
}

/// Feature settings a model was trained with; stored next to the checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureSettings {
    pub lambda1: f64,
    pub tau_se: f64,
    pub use_rbscore: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub config: MlpConfig,
    pub features: FeatureSettings,
    pub best_epoch: usize,
    pub best_val_auc: f64,
    pub epochs_run: usize,
}

/// The model configuration `train` will use: `best_config.json` when present,
/// the shipped default otherwise, with the config file's overrides on top.
pub fn resolve_model_config(cfg: &RunConfig) -> Result<MlpConfig> {
    let path = cfg.output_dir.join("best_config.json");
    let base = if path.is_file() {
        let c: MlpConfig = read_json(&path, "written by `optimize`")?;
        c
    } else {
        log::info!("no best_config.json; training the default configuration");
        MlpConfig::default()
    };
    let config = cfg.model.apply(&base);
    config.validate()?;
    Ok(config)
}

fn resolve_lambda1(cfg: &RunConfig) -> Result<f64> {
    let path = cfg.output_dir.join("optimize").join("summary.json");
    if cfg.search.tune_lambda1 && path.is_file() {
        let summary: OptimizeSummary = read_json(&path, "written by `optimize`")?;
        if let Some(l) = summary.best.lambda1 {
            return Ok(l);
        }
    }
    Ok(cfg.lambda1)
}

/// Trains the final model on the train split with validation early stopping.
pub fn train(cfg: &RunConfig, ctx: &RunContext) -> Result<TrainSummary> {
    let catalog = load_inputs(cfg)?;
    let split = load_split(cfg)?;
    let config = resolve_model_config(cfg)?;
    let settings = FeatureSettings {
        lambda1: resolve_lambda1(cfg)?,
        tau_se: cfg.tau_se,
        use_rbscore: cfg.use_rbscore,
    };
    let features = builder(&catalog, settings.lambda1, settings.tau_se, settings.use_rbscore)?;
    let train_set = inputs(&features, &split.train, cfg.materialize)?;
    let val_set = inputs(&features, &split.validation, cfg.materialize)?;
    let weights = class_weights(&split.train)?;
    let model = init_model(&config, features.input_dim())?;
    let outcome = mlp::train(
        model,
        train_set.get(),
        val_set.get(),
        weights,
        TrainOptions {
            track_train_loss: true,
        },
    )?;

    let out = &cfg.output_dir;
    std::fs::create_dir_all(out).map_err(io_err(out))?;
    save_checkpoint(&outcome.model, &out.join("model.json"))?;
    write_json(&out.join("model_features.json"), &settings)?;
    let path = out.join("history.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["epoch", "batch_loss", "train_loss", "val_loss", "val_auc"])
        .map_err(csv_err(&path))?;
    for r in &outcome.history {
        w.write_record([
            r.epoch.to_string(),
            r.batch_loss.to_string(),
            r.train_loss.map(|v| v.to_string()).unwrap_or_default(),
            r.val_loss.to_string(),
            r.val_auc.to_string(),
        ])
        .map_err(csv_err(&path))?;
    }
    w.flush().map_err(io_err(&path))?;
    write_run_record(cfg, ctx, "train")?;
    Ok(TrainSummary {
        config,
        features: settings,
        best_epoch: outcome.best_epoch,
        best_val_auc: outcome.best_val_auc,
        epochs_run: outcome.history.len(),
    })
}

/// A trained model with the feature settings it expects.
pub struct TrainedModel {
    pub model: MlpModel,
    pub features: FeatureSettings,
}

pub fn load_trained(cfg: &RunConfig) -> Result<TrainedModel> {
    let path = cfg.output_dir.join("model.json");
    if !path.is_file() {
        return Err(PipelineError::Artifact {
            path,
            message: "missing checkpoint (run `train` first)".into(),
        });
    }
    let model = load_checkpoint(&path)?;
    let features: FeatureSettings = read_json(&cfg.output_dir.join("model_features.json"), "written by `train`")?;
    Ok(TrainedModel { model, features })
}

impl TrainedModel {
    pub fn predict(&self, catalog: &DrugCatalog, pairs: &[PairInstance]) -> Result<Vec<f64>> {
        let f = self.features;
        let b = builder(catalog, f.lambda1, f.tau_se, f.use_rbscore)?;
        Ok(predict_batch(&self.model, &b.dataset(pairs)?)?)
    }
}

/// Scores one split and writes its metric report plus per-pair artifacts.
pub fn evaluate(cfg: &RunConfig, ctx: &RunContext, part: SplitPart) -> Result<MetricReport> {
    let catalog = load_inputs(cfg)?;
    let split = load_split(cfg)?;
    let trained = load_trained(cfg)?;
    let pairs = split.part(part);
    let scores = trained.predict(&catalog, pairs)?;
    let labels: Vec<bool> = pairs.iter().map(|p| p.label == PairLabel::Positive).collect();
    let report = build_report(&scores, &labels, cfg.evaluation)?;

    let out = &cfg.output_dir;
    let name = part.as_str();
    write_text(&out.join(format!("report_{name}.json")), &(report.to_json() + "\n"))?;
    write_text(&out.join(format!("report_{name}.txt")), &report.to_text())?;
    write_text(&out.join(format!("roc_{name}.csv")), &curve_csv(&roc_curve(&scores, &labels)?))?;
    write_text(&out.join(format!("pr_{name}.csv")), &curve_csv(&pr_curve(&scores, &labels)?))?;
    let path = out.join(format!("predictions_{name}.csv"));
    let mut w = csv_writer(&path)?;
    w.write_record(["drug_a", "drug_b", "label", "probability"])
        .map_err(csv_err(&path))?;
    for (p, s) in pairs.iter().zip(&scores) {
        w.write_record([&p.drug_a, &p.drug_b, p.label.as_str(), &s.to_string()])
            .map_err(csv_err(&path))?;
    }
    w.flush().map_err(io_err(&path))?;
    write_run_record(cfg, ctx, "evaluate")?;
    Ok(report)
}

/// One row of a prediction file. `error` is set, and `probability` empty,
/// when the pair cannot be scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub drug_a: String,
    pub drug_b: String,
    pub probability: Option<f64>,
    pub error: Option<String>,
}

/// Reads a CSV with `drug_a` and `drug_b` columns (other columns ignored).
pub fn read_pair_list(path: &Path) -> Result<Vec<(String, String)>> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = rdr.headers().map_err(csv_err(path))?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            PipelineError::Invalid(format!("{}: missing column {name:?}", path.display()))
        })
    };
    let (ia, ib) = (col("drug_a")?, col("drug_b")?);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err(path))?;
        out.push((rec[ia].to_string(), rec[ib].to_string()));
    }
    Ok(out)
}

/// Scores every pair of `pairs_path`; unknown drugs and self-pairs become
/// error rows instead of aborting the run.
pub fn predict(cfg: &RunConfig, ctx: &RunContext, pairs_path: &Path, out_path: &Path) -> Result<Vec<PredictionRow>> {
    let catalog = load_inputs(cfg)?;
    let trained = load_trained(cfg)?;
    let requested = read_pair_list(pairs_path)?;
    let mut rows: Vec<PredictionRow> = Vec::with_capacity(requested.len());
    let mut valid = Vec::new();
    let mut valid_idx = Vec::new();
    for (i, (a, b)) in requested.iter().enumerate() {
        let error = if !catalog.contains(a) {
            Some(format!("unknown drug_id {a:?}"))
        } else if !catalog.contains(b) {
            Some(format!("unknown drug_id {b:?}"))
        } else if a == b {
            Some("self-pair".to_string())
        } else {
            None
        };
        if error.is_none() {
            valid.push(PairInstance::new(a, b, PairLabel::Unknown).expect("distinct ids"));
            valid_idx.push(i);
        }
        rows.push(PredictionRow {
            drug_a: a.clone(),
            drug_b: b.clone(),
            probability: None,
            error,
        });
    }
    let scores = trained.predict(&catalog, &valid)?;
    for (i, s) in valid_idx.into_iter().zip(scores) {
        rows[i].probability = Some(s);
    }
    let mut w = csv_writer(out_path)?;
    w.write_record(["drug_a", "drug_b", "probability", "error"])
        .map_err(csv_err(out_path))?;
    for r in &rows {
        w.write_record([
            r.drug_a.clone(),
            r.drug_b.clone(),
            r.probability.map(|p| p.to_string()).unwrap_or_default(),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(csv_err(out_path))?;
    }
    w.flush().map_err(io_err(out_path))?;
    write_run_record(cfg, ctx, "predict")?;
    Ok(rows)
}

/// The `k` most probable interactions among `pairs_path` (or, by default,
/// among the candidate pairs labeled unknown), written to `top_k.csv`.
pub fn rank(cfg: &RunConfig, ctx: &RunContext, k: usize, pairs_path: Option<&Path>) -> Result<Vec<RankedPair>> {
    let catalog = load_inputs(cfg)?;
    let trained = load_trained(cfg)?;
    let candidates: Vec<PairInstance> = match pairs_path {
        Some(path) => read_pair_list(path)?
            .into_iter()
            .map(|(a, b)| {
                for id in [&a, &b] {
                    if !catalog.contains(id) {
                        return Err(PipelineError::Invalid(format!("unknown drug_id {id:?}")));
                    }
                }
                PairInstance::new(a, b, PairLabel::Unknown)
                    .ok_or_else(|| PipelineError::Invalid("self-pair in ranking input".into()))
            })
            .collect::<Result<_>>()?,
        None => load_labeled_pairs(cfg)?
            .into_iter()
            .filter(|p| p.label == PairLabel::Unknown)
            .collect(),
    };
    if candidates.is_empty() {
        return Err(PipelineError::Invalid(
            "no candidate pairs to rank; pass a pairs file".into(),
        ));
    }
    let scores = trained.predict(&catalog, &candidates)?;
    let top = rank_top_k(&scores, &candidates, k)?;
    let path = cfg.output_dir.join("top_k.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["drug_a", "drug_b", "probability"]).map_err(csv_err(&path))?;
    for r in &top {
        w.write_record([&r.drug_a, &r.drug_b, &r.probability.to_string()])
            .map_err(csv_err(&path))?;
    }
    w.flush().map_err(io_err(&path))?;
    write_run_record(cfg, ctx, "rank")?;
    Ok(top)
}

/// Rule-by-rule clinical score of one pair.
pub fn explain_rbscore(cfg: &RunConfig, a: &str, b: &str) -> Result<RuleBreakdown> {
    let catalog = load_inputs(cfg)?;
    for id in [a, b] {
        if !catalog.contains(id) {
            return Err(PipelineError::Invalid(format!("unknown drug_id {id:?}")));
        }
    }
    let pa = &catalog.get(a).expect("checked").profile;
    let pb = &catalog.get(b).expect("checked").profile;
    Ok(crate::rbscore::score_pair(pa, pb, cfg.tau_se))
}

/// Writes the model input of each pair as CSV: `drug_a,drug_b`, the embedding
/// slots `f_0..f_{4d-1}`, then the clinical score as `rbscore`.
pub fn dump_features<W: std::io::Write>(cfg: &RunConfig, pairs: &[(String, String)], out: W) -> Result<()> {
    let catalog = load_inputs(cfg)?;
    let features = builder(&catalog, cfg.lambda1, cfg.tau_se, true)?;
    let embed_slots = features.input_dim() - 1;
    let mut w = csv::Writer::from_writer(out);
    let stdout = Path::new("<features>");
    let mut header = vec!["drug_a".to_string(), "drug_b".to_string()];
    header.extend((0..embed_slots).map(|i| format!("f_{i}")));
    header.push("rbscore".into());
    w.write_record(&header).map_err(csv_err(stdout))?;
    for (a, b) in pairs {
        let vector = features.pair_vector(a, b)?;
        let mut row = vec![a.clone(), b.clone()];
        row.extend(vector.as_slice().iter().map(f64::to_string));
        w.write_record(&row).map_err(csv_err(stdout))?;
    }
    w.flush().map_err(io_err(stdout))?;
    Ok(())
}

/// Per-split label counts, for printing.
pub fn describe_manifest(m: &Manifest) -> String {
    let mut rows: BTreeMap<usize, (&str, ClassCounts)> = BTreeMap::new();
    rows.insert(0, ("train", m.train));
    rows.insert(1, ("validation", m.validation));
    rows.insert(2, ("test", m.test));
    let mut out = format!("{:<12} {:>9} {:>9}\n", "split", "positive", "negative");
    for (_, (name, c)) in rows {
        out.push_str(&format!("{:<12} {:>9} {:>9}\n", name, c.positive, c.reliable_negative));
    }
    out.push_str(&format!(
        "candidates={} unknown={} dropped={} w_pos={:.4}\n",
        m.candidate_pairs, m.unknown, m.dropped, m.class_weights.positive
    ));
    out
}
