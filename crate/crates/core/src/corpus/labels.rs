use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{ClinicalProfile, CorpusError, DrugCatalog, PairInstance, PairLabel, RawPair, Result};
use crate::rbscore::{atc_match, side_effect_similarity};

/// Side-effect Jaccard below which an undocumented pair may be a reliable negative.
pub const DEFAULT_TAU_NEG: f64 = 0.1;

fn is_reliable_negative(a: &ClinicalProfile, b: &ClinicalProfile, tau_neg: f64) -> bool {
    a.enzymes.is_disjoint(&b.enzymes)
        && a.targets.is_disjoint(&b.targets)
        && !atc_match(&a.atc_codes, &b.atc_codes)
        && side_effect_similarity(&a.side_effects, &b.side_effects) < tau_neg
}

/// Labels candidate pairs under the positive–unlabeled protocol.
///
/// Documented pairs are positive. An undocumented pair is a reliable negative
/// only if the two drugs share no enzyme, no target, no ATC level-3 class and
/// their side-effect Jaccard is below `tau_neg`; every other undocumented pair
/// is unknown. Pairs listed more than once (in either order) are merged, and a
/// merged pair is documented if any of its rows is. Output keeps the order of
/// first appearance.
pub fn assign_pu_labels(
    raw_pairs: &[RawPair],
    catalog: &DrugCatalog,
    tau_neg: f64,
) -> Result<Vec<PairInstance>> {
    if !(0.0..=1.0).contains(&tau_neg) {
        return Err(CorpusError::InvalidTauNeg(tau_neg));
    }
    let mut order: Vec<(String, String)> = Vec::new();
    let mut documented: HashMap<(String, String), bool> = HashMap::new();
    for raw in raw_pairs {
        for id in [&raw.drug_a, &raw.drug_b] {
            if !catalog.contains(id) {
                return Err(CorpusError::UnknownDrug {
                    origin: "pairs".into(),
                    line: raw.line,
                    drug_id: id.clone(),
                });
            }
        }
        let pair = PairInstance::new(raw.drug_a.as_str(), raw.drug_b.as_str(), PairLabel::Unknown)
            .ok_or_else(|| CorpusError::SelfPair {
                origin: "pairs".into(),
                line: raw.line,
                drug_id: raw.drug_a.clone(),
            })?;
        let key = (pair.drug_a, pair.drug_b);
        match documented.get_mut(&key) {
            Some(flag) => *flag |= raw.documented,
            None => {
                documented.insert(key.clone(), raw.documented);
                order.push(key);
            }
        }
    }

    let labeled = order
        .into_iter()
        .map(|(a, b)| {
            let label = if documented[&(a.clone(), b.clone())] {
                PairLabel::Positive
            } else {
                let pa = &catalog.get(&a).expect("checked above").profile;
                let pb = &catalog.get(&b).expect("checked above").profile;
                if is_reliable_negative(pa, pb, tau_neg) {
                    PairLabel::ReliableNegative
                } else {
                    PairLabel::Unknown
                }
            };
            PairInstance {
                drug_a: a,
                drug_b: b,
                label,
            }
        })
        .collect();
    Ok(labeled)
}

/// Inverse-frequency class weights normalized so that the negative weight is 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub positive: f64,
    pub negative: f64,
}

impl Default for ClassWeights {
    fn default() -> Self {
        ClassWeights {
            positive: 1.0,
            negative: 1.0,
        }
    }
}

pub fn class_weights(train_pairs: &[PairInstance]) -> Result<ClassWeights> {
    let positives = train_pairs
        .iter()
        .filter(|p| p.label == PairLabel::Positive)
        .count();
    let negatives = train_pairs
        .iter()
        .filter(|p| p.label == PairLabel::ReliableNegative)
        .count();
    if positives == 0 || negatives == 0 {
        return Err(CorpusError::DegenerateTrainingSet {
            positives,
            negatives,
        });
    }
    Ok(ClassWeights {
        positive: negatives as f64 / positives as f64,
        negative: 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::DrugRecord;
    use std::collections::BTreeMap;

    fn profile(enzymes: &[&str], atc: &[&str], side_effects: &[&str]) -> ClinicalProfile {
        ClinicalProfile {
            enzymes: enzymes.iter().map(|s| s.to_string()).collect(),
            atc_codes: atc.iter().map(|s| s.to_string()).collect(),
            side_effects: side_effects.iter().map(|s| s.to_string()).collect(),
            ..Default::default()
        }
    }

    fn catalog() -> DrugCatalog {
        let records = [
            ("A", profile(&["CYP3A4"], &["A10BA02"], &["NAUSEA"])),
            ("B", profile(&["CYP2C9"], &["C09AA01"], &["RASH"])),
            ("C", profile(&["CYP3A4"], &["J01MA02"], &["HEADACHE"])),
        ]
        .into_iter()
        .map(|(id, profile)| DrugRecord {
            drug_id: id.into(),
            smiles: None,
            embeddings: BTreeMap::new(),
            profile,
        });
        DrugCatalog::from_records(records).unwrap()
    }

    fn raw(a: &str, b: &str, documented: bool) -> RawPair {
        RawPair {
            drug_a: a.into(),
            drug_b: b.into(),
            documented,
            line: 0,
        }
    }

    #[test]
    fn pu_protocol_examples() {
        let cat = catalog();
        let labeled = assign_pu_labels(
            &[raw("B", "A", true), raw("A", "B", false), raw("B", "C", false), raw("A", "C", false)],
            &cat,
            0.1,
        )
        .unwrap();
        assert_eq!(labeled.len(), 3);
        assert_eq!(labeled[0].key(), ("A", "B"));
        assert_eq!(labeled[0].label, PairLabel::Positive);
        assert_eq!(labeled[1].label, PairLabel::ReliableNegative);
        // A and C share CYP3A4.
        assert_eq!(labeled[2].label, PairLabel::Unknown);
    }

    #[test]
    fn rejects_self_pairs_and_unknown_drugs() {
        let cat = catalog();
        assert!(matches!(
            assign_pu_labels(&[raw("A", "A", true)], &cat, 0.1),
            Err(CorpusError::SelfPair { .. })
        ));
        assert!(matches!(
            assign_pu_labels(&[raw("A", "Z", true)], &cat, 0.1),
            Err(CorpusError::UnknownDrug { .. })
        ));
        assert!(matches!(
            assign_pu_labels(&[], &cat, 1.5),
            Err(CorpusError::InvalidTauNeg(_))
        ));
    }

    #[test]
    fn class_weight_examples() {
        let pair = |label| PairInstance::new("A", "B", label).unwrap();
        let mut train = vec![pair(PairLabel::Positive); 2];
        train.extend(vec![pair(PairLabel::ReliableNegative); 8]);
        let w = class_weights(&train).unwrap();
        assert_eq!((w.positive, w.negative), (4.0, 1.0));

        let mut balanced = vec![pair(PairLabel::Positive); 5];
        balanced.extend(vec![pair(PairLabel::ReliableNegative); 5]);
        let w = class_weights(&balanced).unwrap();
        assert_eq!((w.positive, w.negative), (1.0, 1.0));

        let err = class_weights(&vec![pair(PairLabel::ReliableNegative); 3]).unwrap_err();
        assert!(err.to_string().contains("degenerate training set"));
    }
}
