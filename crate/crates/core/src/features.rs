//! Embedding fusion and the symmetric pairwise input vector.
//!
//! For fused embeddings `ei`, `ej` of dimension `d` the model input is
//!
//! ```text
//! [ |ei - ej| , ei * ej , (ei - ej)^2 , (ei + ej) / 2 , s_clinical ]
//!   0..d        d..2d     2d..3d        3d..4d          4d
//! ```
//!
//! Every block is a symmetric function of the two drugs, so swapping them
//! yields a bit-identical vector.

use std::collections::BTreeMap;

use ndarray::Array2;

use crate::corpus::{DrugCatalog, EmbeddingSource, PairInstance};
use crate::mlp::{Dataset, MatrixDataset};
use crate::rbscore::{score_pair, RuleBreakdown};

pub const DEFAULT_LAMBDA1: f64 = 0.5;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FeatureError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("fusion weight must lie in [0, 1], got {0}")]
    InvalidFusionWeight(f64),
    #[error("clinical score must lie in [0, 1], got {0}")]
    InvalidClinicalScore(f64),
    #[error("side-effect threshold must lie in [0, 1], got {0}")]
    InvalidThreshold(f64),
    #[error("catalog has no {0} embeddings")]
    MissingSource(EmbeddingSource),
    #[error("unknown drug_id {0:?}")]
    UnknownDrug(String),
}

/// `lambda1 * e1 + (1 - lambda1) * e2`.
pub fn fuse(e1: &[f64], e2: &[f64], lambda1: f64) -> Result<Vec<f64>, FeatureError> {
    if e1.len() != e2.len() {
        return Err(FeatureError::DimensionMismatch {
            left: e1.len(),
            right: e2.len(),
        });
    }
    if !(0.0..=1.0).contains(&lambda1) {
        return Err(FeatureError::InvalidFusionWeight(lambda1));
    }
    let lambda2 = 1.0 - lambda1;
    Ok(e1
        .iter()
        .zip(e2)
        .map(|(a, b)| lambda1 * a + lambda2 * b)
        .collect())
}

fn write_pair_blocks(ei: &[f64], ej: &[f64], out: &mut [f64]) {
    let d = ei.len();
    let (abs_diff, rest) = out.split_at_mut(d);
    let (product, rest) = rest.split_at_mut(d);
    let (sq_diff, mean) = rest.split_at_mut(d);
    for k in 0..d {
        let (a, b) = (ei[k], ej[k]);
        let diff = a - b;
        abs_diff[k] = diff.abs();
        product[k] = a * b;
        sq_diff[k] = diff * diff;
        mean[k] = (a + b) / 2.0;
    }
}

/// The four symmetric embedding blocks, length `4d`.
pub fn pair_features(ei: &[f64], ej: &[f64]) -> Result<Vec<f64>, FeatureError> {
    if ei.len() != ej.len() {
        return Err(FeatureError::DimensionMismatch {
            left: ei.len(),
            right: ej.len(),
        });
    }
    let mut out = vec![0.0; 4 * ei.len()];
    write_pair_blocks(ei, ej, &mut out);
    Ok(out)
}

/// A complete model input: the embedding blocks followed by the clinical score.
#[derive(Debug, Clone, PartialEq)]
pub struct PairFeatureVector(Vec<f64>);

impl PairFeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn clinical_score(&self) -> f64 {
        *self.0.last().expect("vector always carries the clinical slot")
    }
}

pub fn assemble_input(
    mut pair_feat: Vec<f64>,
    s_clinical: f64,
) -> Result<PairFeatureVector, FeatureError> {
    if !(0.0..=1.0).contains(&s_clinical) {
        return Err(FeatureError::InvalidClinicalScore(s_clinical));
    }
    pair_feat.push(s_clinical);
    Ok(PairFeatureVector(pair_feat))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureBlock {
    AbsDiff,
    Product,
    SquaredDiff,
    Mean,
    Clinical,
}

/// Maps input indices to their semantic slot for a given embedding dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureLayout {
    pub dim: usize,
    pub clinical: bool,
}

impl FeatureLayout {
    pub fn input_dim(&self) -> usize {
        4 * self.dim + usize::from(self.clinical)
    }

    /// Block and within-block offset of input index `idx`.
    pub fn slot(&self, idx: usize) -> Option<(FeatureBlock, usize)> {
        let d = self.dim;
        let blocks = [
            FeatureBlock::AbsDiff,
            FeatureBlock::Product,
            FeatureBlock::SquaredDiff,
            FeatureBlock::Mean,
        ];
        if idx < 4 * d {
            Some((blocks[idx / d], idx % d))
        } else if self.clinical && idx == 4 * d {
            Some((FeatureBlock::Clinical, 0))
        } else {
            None
        }
    }
}

/// Precomputed fused embeddings plus the scoring settings needed to build
/// inputs for any pair in a catalog.
#[derive(Debug, Clone)]
pub struct FeatureBuilder<'a> {
    catalog: &'a DrugCatalog,
    fused: BTreeMap<String, Vec<f64>>,
    dim: usize,
    lambda1: f64,
    tau_se: f64,
    include_clinical: bool,
}

impl<'a> FeatureBuilder<'a> {
    pub fn new(catalog: &'a DrugCatalog, lambda1: f64, tau_se: f64) -> Result<Self, FeatureError> {
        if !(0.0..=1.0).contains(&tau_se) {
            return Err(FeatureError::InvalidThreshold(tau_se));
        }
        for source in EmbeddingSource::ALL {
            if catalog.dimension(source).is_none() {
                return Err(FeatureError::MissingSource(source));
            }
        }
        let mut fused = BTreeMap::new();
        let mut dim = 0;
        for drug in catalog.iter() {
            let e1 = drug.embedding(EmbeddingSource::Mol2vec).expect("catalog is complete");
            let e2 = drug
                .embedding(EmbeddingSource::Smilesbert)
                .expect("catalog is complete");
            let v = fuse(e1, e2, lambda1)?;
            dim = v.len();
            fused.insert(drug.drug_id.clone(), v);
        }
        Ok(FeatureBuilder {
            catalog,
            fused,
            dim,
            lambda1,
            tau_se,
            include_clinical: true,
        })
    }

    /// Drops the clinical score from the input (for ablations).
    pub fn without_clinical(mut self) -> Self {
        self.include_clinical = false;
        self
    }

    pub fn includes_clinical(&self) -> bool {
        self.include_clinical
    }

    pub fn layout(&self) -> FeatureLayout {
        FeatureLayout {
            dim: self.dim,
            clinical: self.include_clinical,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layout().input_dim()
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn fused(&self, drug_id: &str) -> Result<&[f64], FeatureError> {
        self.fused
            .get(drug_id)
            .map(Vec::as_slice)
            .ok_or_else(|| FeatureError::UnknownDrug(drug_id.to_string()))
    }

    pub fn rbscore(&self, a: &str, b: &str) -> Result<RuleBreakdown, FeatureError> {
        let pa = self
            .catalog
            .get(a)
            .ok_or_else(|| FeatureError::UnknownDrug(a.to_string()))?;
        let pb = self
            .catalog
            .get(b)
            .ok_or_else(|| FeatureError::UnknownDrug(b.to_string()))?;
        Ok(score_pair(&pa.profile, &pb.profile, self.tau_se))
    }

    /// Full input vector for one pair (always includes the clinical slot,
    /// regardless of [`Self::without_clinical`]).
    pub fn pair_vector(&self, a: &str, b: &str) -> Result<PairFeatureVector, FeatureError> {
        let blocks = pair_features(self.fused(a)?, self.fused(b)?)?;
        assemble_input(blocks, self.rbscore(a, b)?.normalized)
    }

    /// A lazily-featurized dataset over `pairs`; each row is built when a
    /// batch asks for it. Labels come from `PairLabel::target`, with unknown
    /// pairs mapped to 0.
    pub fn dataset<'b>(&'b self, pairs: &[PairInstance]) -> Result<PairDataset<'b>, FeatureError> {
        let rows = pairs
            .iter()
            .map(|p| {
                Ok(PairRow {
                    a: self.fused(&p.drug_a)?,
                    b: self.fused(&p.drug_b)?,
                    clinical: self.rbscore(&p.drug_a, &p.drug_b)?.normalized,
                    target: p.label.target().unwrap_or(0.0),
                })
            })
            .collect::<Result<Vec<_>, FeatureError>>()?;
        Ok(PairDataset {
            rows,
            layout: self.layout(),
        })
    }
}

#[derive(Debug, Clone)]
struct PairRow<'b> {
    a: &'b [f64],
    b: &'b [f64],
    clinical: f64,
    target: f64,
}

#[derive(Debug, Clone)]
pub struct PairDataset<'b> {
    rows: Vec<PairRow<'b>>,
    layout: FeatureLayout,
}

impl PairDataset<'_> {
    /// Builds every row up front.
    pub fn materialize(&self) -> MatrixDataset {
        let dim = self.input_dim();
        let mut x = Array2::zeros((self.rows.len(), dim));
        for (i, mut row) in x.rows_mut().into_iter().enumerate() {
            self.fill_row(i, row.as_slice_mut().expect("standard layout"));
        }
        MatrixDataset::new(x, self.rows.iter().map(|r| r.target).collect())
    }
}

impl Dataset for PairDataset<'_> {
    fn len(&self) -> usize {
        self.rows.len()
    }

    fn input_dim(&self) -> usize {
        self.layout.input_dim()
    }

    fn target(&self, i: usize) -> f64 {
        self.rows[i].target
    }

    fn fill_row(&self, i: usize, out: &mut [f64]) {
        let row = &self.rows[i];
        let d = self.layout.dim;
        write_pair_blocks(row.a, row.b, &mut out[..4 * d]);
        if self.layout.clinical {
            out[4 * d] = row.clinical;
        }
    }
}
