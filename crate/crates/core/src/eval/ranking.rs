use serde::{Deserialize, Serialize};

use super::{EvalError, Result};
use crate::corpus::PairInstance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedPair {
    pub drug_a: String,
    pub drug_b: String,
    pub probability: f64,
}

/// The `k` most probable interactions, ordered by probability descending and
/// then by canonical pair id ascending. `k` larger than the input returns all.
pub fn rank_top_k(probabilities: &[f64], pairs: &[PairInstance], k: usize) -> Result<Vec<RankedPair>> {
    if k == 0 {
        return Err(EvalError::InvalidK);
    }
    if probabilities.len() != pairs.len() {
        return Err(EvalError::LengthMismatch {
            scores: probabilities.len(),
            labels: pairs.len(),
        });
    }
    if probabilities.iter().any(|p| p.is_nan()) {
        return Err(EvalError::NanScore);
    }
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by(|&i, &j| {
        probabilities[j]
            .total_cmp(&probabilities[i])
            .then_with(|| pairs[i].key().cmp(&pairs[j].key()))
    });
    Ok(order
        .into_iter()
        .take(k)
        .map(|i| RankedPair {
            drug_a: pairs[i].drug_a.clone(),
            drug_b: pairs[i].drug_b.clone(),
            probability: probabilities[i],
        })
        .collect())
}
