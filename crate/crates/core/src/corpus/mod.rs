//! Drug catalog, candidate pairs, positive–unlabeled labeling and dataset splits.

mod labels;
mod load;
mod split;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

pub use labels::{assign_pu_labels, class_weights, ClassWeights, DEFAULT_TAU_NEG};
pub use load::{
    load_catalog, parse_drugs, parse_embeddings, parse_pairs, parse_profiles, parse_scaffolds,
    read_pairs, CatalogSources, DrugRow, EmbeddingRow, ProfileRow, RawPair, ScaffoldRow,
};
pub use split::{largest_remainder, split_dataset, SplitRatios};

/// Embedding source tag as it appears in embedding files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingSource {
    Mol2vec,
    Smilesbert,
}

impl EmbeddingSource {
    pub const ALL: [EmbeddingSource; 2] = [EmbeddingSource::Mol2vec, EmbeddingSource::Smilesbert];

    pub fn as_str(self) -> &'static str {
        match self {
            EmbeddingSource::Mol2vec => "mol2vec",
            EmbeddingSource::Smilesbert => "smilesbert",
        }
    }
}

impl fmt::Display for EmbeddingSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{origin}:{line}: malformed line: {message}")]
    Malformed {
        origin: String,
        line: usize,
        message: String,
    },
    #[error("{origin}:{line}: duplicate drug_id {drug_id:?}")]
    DuplicateDrug {
        origin: String,
        line: usize,
        drug_id: String,
    },
    #[error("{origin}:{line}: dimension mismatch for source {source_tag}: expected {expected}, found {found}")]
    DimensionMismatch {
        origin: String,
        line: usize,
        source_tag: EmbeddingSource,
        expected: usize,
        found: usize,
    },
    #[error("{origin}:{line}: unknown drug_id {drug_id:?}")]
    UnknownDrug {
        origin: String,
        line: usize,
        drug_id: String,
    },
    #[error("drug {drug_id:?} has no clinical profile")]
    MissingProfile { drug_id: String },
    #[error("drug {drug_id:?} has no {source_tag} embedding")]
    MissingEmbedding {
        drug_id: String,
        source_tag: EmbeddingSource,
    },
    #[error("{origin}:{line}: self-pair {drug_id:?}")]
    SelfPair {
        origin: String,
        line: usize,
        drug_id: String,
    },
    #[error("tau_neg must lie in [0, 1], got {0}")]
    InvalidTauNeg(f64),
    #[error("invalid split ratios: {0}")]
    InvalidRatios(String),
    #[error("scaffold split requested but drug {drug_id:?} has no scaffold id")]
    MissingScaffold { drug_id: String },
    #[error("split partition {0} is empty")]
    EmptyPartition(&'static str),
    #[error("degenerate training set: {positives} positives, {negatives} reliable negatives")]
    DegenerateTrainingSet { positives: usize, negatives: usize },
}

pub type Result<T, E = CorpusError> = std::result::Result<T, E>;

/// Label-independent pharmacological properties of one drug.
///
/// Tokens are trimmed and upper-cased on load so that `cyp3a4` and `CYP3A4`
/// compare equal.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClinicalProfile {
    pub enzymes: BTreeSet<String>,
    pub targets: BTreeSet<String>,
    pub atc_codes: BTreeSet<String>,
    pub therapeutic_groups: BTreeSet<String>,
    pub side_effects: BTreeSet<String>,
    pub strong_pk_modulator: bool,
    pub scaffold_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DrugRecord {
    pub drug_id: String,
    pub smiles: Option<String>,
    pub embeddings: BTreeMap<EmbeddingSource, Vec<f64>>,
    pub profile: ClinicalProfile,
}

impl DrugRecord {
    pub fn embedding(&self, source: EmbeddingSource) -> Option<&[f64]> {
        self.embeddings.get(&source).map(Vec::as_slice)
    }
}

/// Drugs keyed by id. Immutable once loaded.
#[derive(Debug, Clone, Default)]
pub struct DrugCatalog {
    drugs: BTreeMap<String, DrugRecord>,
    dims: BTreeMap<EmbeddingSource, usize>,
}

impl DrugCatalog {
    /// Builds a catalog from already-validated records. Checks id uniqueness,
    /// per-source dimension agreement and that every drug carries every
    /// source present in the catalog.
    pub fn from_records(records: impl IntoIterator<Item = DrugRecord>) -> Result<Self> {
        let mut catalog = DrugCatalog::default();
        for (idx, record) in records.into_iter().enumerate() {
            for (&source, vector) in &record.embeddings {
                let expected = *catalog.dims.entry(source).or_insert(vector.len());
                if expected != vector.len() {
                    return Err(CorpusError::DimensionMismatch {
                        origin: "<records>".into(),
                        line: idx + 1,
                        source_tag: source,
                        expected,
                        found: vector.len(),
                    });
                }
            }
            if catalog.drugs.contains_key(&record.drug_id) {
                return Err(CorpusError::DuplicateDrug {
                    origin: "<records>".into(),
                    line: idx + 1,
                    drug_id: record.drug_id,
                });
            }
            catalog.drugs.insert(record.drug_id.clone(), record);
        }
        catalog.check_complete()?;
        Ok(catalog)
    }

    fn check_complete(&self) -> Result<()> {
        for record in self.drugs.values() {
            for &source in self.dims.keys() {
                if !record.embeddings.contains_key(&source) {
                    return Err(CorpusError::MissingEmbedding {
                        drug_id: record.drug_id.clone(),
                        source_tag: source,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.drugs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.drugs.is_empty()
    }

    pub fn get(&self, drug_id: &str) -> Option<&DrugRecord> {
        self.drugs.get(drug_id)
    }

    pub fn contains(&self, drug_id: &str) -> bool {
        self.drugs.contains_key(drug_id)
    }

    /// Drugs in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = &DrugRecord> {
        self.drugs.values()
    }

    /// Embedding dimension for a source, if any drug carries it.
    pub fn dimension(&self, source: EmbeddingSource) -> Option<usize> {
        self.dims.get(&source).copied()
    }

    pub fn sources(&self) -> impl Iterator<Item = EmbeddingSource> + '_ {
        self.dims.keys().copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairLabel {
    Positive,
    ReliableNegative,
    Unknown,
}

impl PairLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            PairLabel::Positive => "positive",
            PairLabel::ReliableNegative => "reliable_negative",
            PairLabel::Unknown => "unknown",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "positive" => Some(PairLabel::Positive),
            "reliable_negative" => Some(PairLabel::ReliableNegative),
            "unknown" => Some(PairLabel::Unknown),
            _ => None,
        }
    }

    /// Supervised target; `None` for pairs excluded from the loss.
    pub fn target(self) -> Option<f64> {
        match self {
            PairLabel::Positive => Some(1.0),
            PairLabel::ReliableNegative => Some(0.0),
            PairLabel::Unknown => None,
        }
    }
}

/// An unordered drug pair stored with the lexicographically smaller id first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PairInstance {
    pub drug_a: String,
    pub drug_b: String,
    pub label: PairLabel,
}

impl PairInstance {
    /// Canonicalizes the order of the two ids. Returns `None` for a self-pair.
    pub fn new(a: impl Into<String>, b: impl Into<String>, label: PairLabel) -> Option<Self> {
        let (a, b) = (a.into(), b.into());
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Some(PairInstance {
                drug_a: a,
                drug_b: b,
                label,
            }),
            std::cmp::Ordering::Greater => Some(PairInstance {
                drug_a: b,
                drug_b: a,
                label,
            }),
            std::cmp::Ordering::Equal => None,
        }
    }

    pub fn key(&self) -> (&str, &str) {
        (&self.drug_a, &self.drug_b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitProtocol {
    Random,
    ColdStart,
    Scaffold,
}

impl std::str::FromStr for SplitProtocol {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "random" => Ok(SplitProtocol::Random),
            "cold_start" | "cold-start" | "coldstart" => Ok(SplitProtocol::ColdStart),
            "scaffold" => Ok(SplitProtocol::Scaffold),
            other => Err(format!("unknown split protocol {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSplit {
    pub train: Vec<PairInstance>,
    pub validation: Vec<PairInstance>,
    pub test: Vec<PairInstance>,
    pub protocol: SplitProtocol,
    pub seed: u64,
    /// Labeled pairs whose drugs (or scaffolds) fell into different partitions.
    pub dropped: usize,
}

impl DataSplit {
    pub fn part(&self, name: SplitPart) -> &[PairInstance] {
        match name {
            SplitPart::Train => &self.train,
            SplitPart::Validation => &self.validation,
            SplitPart::Test => &self.test,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitPart {
    Train,
    Validation,
    Test,
}

impl SplitPart {
    pub const ALL: [SplitPart; 3] = [SplitPart::Train, SplitPart::Validation, SplitPart::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitPart::Train => "train",
            SplitPart::Validation => "validation",
            SplitPart::Test => "test",
        }
    }
}

impl std::str::FromStr for SplitPart {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "train" => Ok(SplitPart::Train),
            "validation" | "val" => Ok(SplitPart::Validation),
            "test" => Ok(SplitPart::Test),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}
