//! Drug–drug interaction prediction from precomputed molecular embeddings.
//!
//! The crate is organised as a pipeline:
//!
//! * [`corpus`] loads drugs, embeddings, clinical profiles and candidate pairs,
//!   labels pairs under a positive–unlabeled protocol and splits them.
//! * [`features`] fuses the two embedding sources and builds the symmetric
//!   pairwise input vector.
//! * [`rbscore`] computes the rule-based clinical score appended to every input.
//! * [`mlp`] is a small feed-forward classifier with manual backpropagation.
//! * [`hyperopt`] searches the classifier's hyperparameters with random
//!   sampling, ant colony optimization and particle swarm refinement.
//! * [`eval`] holds the metrics, bootstrap intervals, calibration error and ranking.
//! * [`pipeline`] wires the stages together over an output directory; the
//!   `ddi` binary is a thin shell around it.

pub mod config;
pub mod corpus;
pub mod eval;
pub mod features;
pub mod hyperopt;
pub mod mlp;
pub mod pipeline;
pub mod rbscore;
pub mod synth;

pub use corpus::{
    ClinicalProfile, DataSplit, DrugCatalog, DrugRecord, PairInstance, PairLabel, SplitProtocol,
    SplitRatios,
};
pub use features::{FeatureBuilder, PairFeatureVector};
pub use mlp::{MlpConfig, MlpModel, OptimizerKind};
pub use rbscore::RuleBreakdown;
