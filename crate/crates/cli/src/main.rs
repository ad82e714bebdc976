//! `ddi`: prepare, search, train, evaluate and query a drug–drug interaction
//! model. Every stage reads a JSON run config; flags override its keys.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ddi_core::config::{ConfigError, RunConfig};
use ddi_core::corpus::{SplitPart, SplitProtocol};
use ddi_core::hyperopt::OptimizerSettings;
use ddi_core::pipeline::{self, PipelineError, RunContext};
use ddi_core::synth::{self, SynthSettings};
use ddi_core::OptimizerKind;

const VERSION: &str = env!("DDI_VERSION");

#[derive(Parser, Debug)]
#[command(name = "ddi", version = VERSION, about = "Drug-drug interaction prediction pipeline")]
struct Cli {
    /// JSON run config; relative paths inside it resolve against its directory.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads shared by every parallel stage [default: available parallelism].
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Overrides {
    /// Directory for all artifacts.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Split protocol.
    #[arg(long, global = true)]
    split: Option<SplitProtocol>,
    #[arg(long, global = true)]
    split_seed: Option<u64>,
    /// Fusion weight of the first embedding source.
    #[arg(long, global = true)]
    lambda1: Option<f64>,
    /// Side-effect Jaccard threshold of the clinical score.
    #[arg(long, global = true)]
    tau_se: Option<f64>,
    /// Side-effect Jaccard threshold for reliable negatives.
    #[arg(long, global = true)]
    tau_neg: Option<f64>,
    /// Leave the clinical score out of the model input.
    #[arg(long, global = true)]
    no_rbscore: bool,
    /// Build all feature rows up front.
    #[arg(long, global = true)]
    materialize: bool,
    /// Optimizer budget preset.
    #[arg(long, global = true)]
    budget: Option<Budget>,
    /// Comma-separated search seeds.
    #[arg(long, global = true, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long, global = true)]
    hidden_layers: Option<usize>,
    #[arg(long, global = true)]
    neurons: Option<usize>,
    #[arg(long, global = true)]
    learning_rate: Option<f64>,
    #[arg(long, global = true)]
    dropout: Option<f64>,
    #[arg(long, global = true)]
    batch_size: Option<usize>,
    #[arg(long, global = true)]
    optimizer: Option<Optim>,
    #[arg(long, global = true)]
    max_epochs: Option<usize>,
    #[arg(long, global = true)]
    patience: Option<usize>,
    /// Seed for every random draw during training.
    #[arg(long, global = true)]
    model_seed: Option<u64>,
    /// Bootstrap resamples for confidence intervals.
    #[arg(long, global = true)]
    resamples: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Budget {
    Smoke,
    Full,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Optim {
    Adam,
    Sgd,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Label candidate pairs and split them.
    Prepare,
    /// Search hyperparameters on the validation split.
    Optimize,
    /// Train the final model.
    Train,
    /// Score a split and write the metric report.
    Evaluate {
        #[arg(long, default_value = "test")]
        part: SplitPart,
    },
    /// Score every pair of a CSV with `drug_a,drug_b` columns.
    Predict {
        #[arg(long)]
        pairs: PathBuf,
        /// Output CSV [default: <output_dir>/predictions.csv].
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the most probable interactions.
    Rank {
        /// Number of pairs to list [default: top_k from the config].
        #[arg(long)]
        k: Option<usize>,
        /// Candidate pairs [default: the undocumented pairs of the corpus].
        #[arg(long)]
        pairs: Option<PathBuf>,
    },
    /// Clinical score tools.
    Rbscore {
        #[command(subcommand)]
        action: RbscoreAction,
    },
    /// Feature tools.
    Features {
        #[command(subcommand)]
        action: FeaturesAction,
    },
    /// Write a synthetic corpus with planted ground truth and a config for it.
    Synth {
        #[arg(long)]
        out: PathBuf,
        /// Generator settings as JSON; keys not given keep their defaults.
        #[arg(long)]
        settings: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Subcommand, Debug)]
enum RbscoreAction {
    /// Print the six rule indicators and the score of one pair.
    Explain {
        #[arg(long, value_parser = parse_pair)]
        pair: (String, String),
    },
}

#[derive(Subcommand, Debug)]
enum FeaturesAction {
    /// Print model inputs as CSV.
    Dump {
        #[arg(long, value_parser = parse_pair)]
        pair: Vec<(String, String)>,
        /// CSV with `drug_a,drug_b` columns.
        #[arg(long)]
        pairs: Option<PathBuf>,
    },
}

fn parse_pair(s: &str) -> Result<(String, String), String> {
    match s.split_once(',') {
        Some((a, b)) if !a.trim().is_empty() && !b.trim().is_empty() => {
            Ok((a.trim().to_string(), b.trim().to_string()))
        }
        _ => Err(format!("expected A,B, got {s:?}")),
    }
}

/// An error with the process exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure {
            code: e.exit_code() as u8,
            message: e.to_string(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::config(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp_millis()
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            log::error!("{}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let workers = match cli.workers {
        Some(0) => return Err(Failure::config("--workers must be at least 1")),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .map_err(|e| Failure {
            code: 1,
            message: format!("cannot start worker pool: {e}"),
        })?;

    if let Command::Synth { out, settings, seed } = &cli.command {
        return run_synth(out, settings.as_deref(), *seed);
    }
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Failure::config("--config is required"))?;
    let mut cfg = RunConfig::load(path)?;
    apply_overrides(&mut cfg, &cli.overrides);
    cfg.validate_values()?;
    let ctx = RunContext {
        version: VERSION.to_string(),
        command_line: std::env::args().collect(),
    };
    log::info!("ddi {VERSION}, {workers} worker(s), output {}", cfg.output_dir.display());

    match cli.command {
        Command::Prepare => {
            let m = pipeline::prepare(&cfg, &ctx)?;
            print!("{}", pipeline::describe_manifest(&m));
        }
        Command::Optimize => {
            let s = pipeline::optimize(&cfg, &ctx)?;
            println!(
                "{:>6} {:>10} {:>11} {:>8} {:>8}",
                "seed", "fitness", "evaluations", "aco_it", "pso_it"
            );
            for r in &s.per_seed {
                println!(
                    "{:>6} {:>10.4} {:>11} {:>8} {:>8}",
                    r.seed, r.fitness, r.evaluations, r.aco_iterations, r.pso_iterations
                );
            }
            let b = &s.best;
            println!(
                "best (seed {}): layers={} neurons={} batch={} optimizer={} lr={:.3e} dropout={:.3}",
                s.best_seed,
                b.hidden_layers,
                b.neurons_per_layer,
                b.batch_size,
                b.optimizer,
                b.learning_rate,
                b.dropout
            );
        }
        Command::Train => {
            let t = pipeline::train(&cfg, &ctx)?;
            let c = &t.config;
            println!(
                "layers={} neurons={} batch={} optimizer={} lr={:.3e} dropout={:.3}",
                c.hidden_layers, c.neurons_per_layer, c.batch_size, c.optimizer, c.learning_rate, c.dropout
            );
            println!(
                "epochs={} best_epoch={} best_val_auc={:.4}",
                t.epochs_run, t.best_epoch, t.best_val_auc
            );
        }
        Command::Evaluate { part } => {
            let report = pipeline::evaluate(&cfg, &ctx, part)?;
            print!("{}", report.to_text());
        }
        Command::Predict { pairs, out } => {
            let out = out.unwrap_or_else(|| cfg.output_dir.join("predictions.csv"));
            let rows = pipeline::predict(&cfg, &ctx, &pairs, &out)?;
            let failed = rows.iter().filter(|r| r.error.is_some()).count();
            println!("scored={} failed={} -> {}", rows.len() - failed, failed, out.display());
            for r in rows.iter().filter(|r| r.error.is_some()) {
                log::error!(
                    "{},{}: {}",
                    r.drug_a,
                    r.drug_b,
                    r.error.as_deref().unwrap_or_default()
                );
            }
            if failed > 0 {
                return Err(Failure::config(format!("{failed} pair(s) could not be scored")));
            }
        }
        Command::Rank { k, pairs } => {
            let top = pipeline::rank(&cfg, &ctx, k.unwrap_or(cfg.top_k), pairs.as_deref())?;
            println!("{:>4}  {:<16} {:<16} {:>11}", "rank", "drug_a", "drug_b", "probability");
            for (i, r) in top.iter().enumerate() {
                println!("{:>4}  {:<16} {:<16} {:>11.4}", i + 1, r.drug_a, r.drug_b, r.probability);
            }
        }
        Command::Rbscore {
            action: RbscoreAction::Explain { pair: (a, b) },
        } => {
            let r = pipeline::explain_rbscore(&cfg, &a, &b)?;
            pipeline::write_run_record(&cfg, &ctx, "rbscore explain")?;
            println!("pair {a},{b}");
            for (name, hit) in r.indicators() {
                println!("{name:<20} {}", u8::from(hit));
            }
            println!("{:<20} {}/6 = {:.4}", "rbscore", r.raw_sum, r.normalized);
        }
        Command::Features {
            action: FeaturesAction::Dump { pair, pairs },
        } => {
            let mut list = pair;
            if let Some(path) = pairs {
                list.extend(pipeline::read_pair_list(&path)?);
            }
            if list.is_empty() {
                return Err(Failure::config("give --pair A,B or --pairs FILE"));
            }
            pipeline::dump_features(&cfg, &list, std::io::stdout().lock())?;
            pipeline::write_run_record(&cfg, &ctx, "features dump")?;
        }
        Command::Synth { .. } => unreachable!("handled above"),
    }
    Ok(())
}

fn apply_overrides(cfg: &mut RunConfig, o: &Overrides) {
    if let Some(d) = &o.output_dir {
        cfg.output_dir = d.clone();
    }
    if let Some(p) = o.split {
        cfg.split.protocol = p;
    }
    if let Some(s) = o.split_seed {
        cfg.split.seed = s;
    }
    if let Some(v) = o.lambda1 {
        cfg.lambda1 = v;
    }
    if let Some(v) = o.tau_se {
        cfg.tau_se = v;
    }
    if let Some(v) = o.tau_neg {
        cfg.tau_neg = v;
    }
    if o.no_rbscore {
        cfg.use_rbscore = false;
    }
    if o.materialize {
        cfg.materialize = true;
    }
    match o.budget {
        Some(Budget::Smoke) => cfg.search.optimizer = OptimizerSettings::smoke(),
        Some(Budget::Full) => cfg.search.optimizer = OptimizerSettings::full(),
        None => {}
    }
    if let Some(s) = &o.seeds {
        cfg.search.seeds = s.clone();
    }
    let m = &mut cfg.model;
    m.hidden_layers = o.hidden_layers.or(m.hidden_layers);
    m.neurons_per_layer = o.neurons.or(m.neurons_per_layer);
    m.learning_rate = o.learning_rate.or(m.learning_rate);
    m.dropout = o.dropout.or(m.dropout);
    m.batch_size = o.batch_size.or(m.batch_size);
    m.max_epochs = o.max_epochs.or(m.max_epochs);
    m.patience = o.patience.or(m.patience);
    m.seed = o.model_seed.or(m.seed);
    if let Some(k) = o.optimizer {
        m.optimizer = Some(match k {
            Optim::Adam => OptimizerKind::Adam,
            Optim::Sgd => OptimizerKind::Sgd,
        });
    }
    if let Some(r) = o.resamples {
        cfg.evaluation.resamples = r;
    }
}

fn run_synth(out: &Path, settings: Option<&Path>, seed: Option<u64>) -> Result<(), Failure> {
    let mut s = match settings {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<SynthSettings>(&text)
                .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?
        }
        None => SynthSettings::default(),
    };
    if let Some(seed) = seed {
        s.seed = seed;
    }
    let summary = synth::generate(&s, out).map_err(|e| Failure {
        code: 1,
        message: format!("{}: {e}", out.display()),
    })?;
    println!(
        "drugs={} candidate_pairs={} truly_interacting={} documented={} flipped={}",
        summary.drugs, summary.candidate_pairs, summary.truly_interacting, summary.documented, summary.flipped
    );
    println!("config: {}", summary.config.display());
    Ok(())
}

