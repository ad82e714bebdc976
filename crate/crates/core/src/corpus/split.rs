use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CorpusError, DataSplit, DrugCatalog, PairInstance, PairLabel, Result, SplitProtocol};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.8,
            validation: 0.1,
            test: 0.1,
        }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.validation, self.test];
        if parts.iter().any(|r| !r.is_finite() || *r <= 0.0) {
            return Err(CorpusError::InvalidRatios(format!(
                "every ratio must be positive, got {parts:?}"
            )));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(CorpusError::InvalidRatios(format!(
                "ratios must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }

    fn as_array(&self) -> [f64; 3] {
        [self.train, self.validation, self.test]
    }
}

/// Splits `n` items by `ratios` so that the sizes sum exactly to `n`: each
/// part gets the floor of its quota and the leftover items go to the parts
/// with the largest fractional remainders (earlier parts win ties).
pub fn largest_remainder(n: usize, ratios: &SplitRatios) -> [usize; 3] {
    let quotas = ratios.as_array().map(|r| n as f64 * r);
    let mut sizes = quotas.map(|q| q.floor() as usize);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| {
        let ri = quotas[i] - quotas[i].floor();
        let rj = quotas[j] - quotas[j].floor();
        rj.total_cmp(&ri).then(i.cmp(&j))
    });
    let assigned: usize = sizes.iter().sum();
    for &i in order.iter().cycle().take(n.saturating_sub(assigned)) {
        sizes[i] += 1;
    }
    // Floating quotas can overshoot by one when a ratio rounds up.
    while sizes.iter().sum::<usize>() > n {
        let i = (0..3).rev().find(|&i| sizes[i] > 0).expect("sum > n >= 0");
        sizes[i] -= 1;
    }
    sizes
}

fn partition_groups<T: Ord + Clone>(
    groups: BTreeSet<T>,
    ratios: &SplitRatios,
    rng: &mut ChaCha8Rng,
) -> BTreeMap<T, usize> {
    let mut groups: Vec<T> = groups.into_iter().collect();
    groups.shuffle(rng);
    let sizes = largest_remainder(groups.len(), ratios);
    let mut assignment = BTreeMap::new();
    let mut it = groups.into_iter();
    for (part, &size) in sizes.iter().enumerate() {
        for group in it.by_ref().take(size) {
            assignment.insert(group, part);
        }
    }
    assignment
}

/// Splits the labeled (positive and reliable-negative) pairs into
/// train/validation/test. Unknown pairs are not part of any split.
///
/// * `Random` shuffles pairs and cuts by largest-remainder sizes.
/// * `ColdStart` partitions drug ids; a pair is kept only if both drugs land in
///   the same partition.
/// * `Scaffold` does the same over scaffold ids.
///
/// Cross-partition pairs are dropped and counted in [`DataSplit::dropped`].
pub fn split_dataset(
    pairs: &[PairInstance],
    catalog: &DrugCatalog,
    protocol: SplitProtocol,
    ratios: &SplitRatios,
    seed: u64,
) -> Result<DataSplit> {
    ratios.validate()?;
    let labeled: Vec<&PairInstance> = pairs
        .iter()
        .filter(|p| p.label != PairLabel::Unknown)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parts: [Vec<PairInstance>; 3] = Default::default();
    let mut dropped = 0;

    match protocol {
        SplitProtocol::Random => {
            let mut shuffled = labeled;
            shuffled.shuffle(&mut rng);
            let sizes = largest_remainder(shuffled.len(), ratios);
            let mut it = shuffled.into_iter();
            for (part, &size) in sizes.iter().enumerate() {
                parts[part].extend(it.by_ref().take(size).cloned());
            }
        }
        SplitProtocol::ColdStart | SplitProtocol::Scaffold => {
            let group_of = |drug_id: &str| -> Result<String> {
                match protocol {
                    SplitProtocol::Scaffold => catalog
                        .get(drug_id)
                        .and_then(|d| d.profile.scaffold_id.clone())
                        .ok_or_else(|| CorpusError::MissingScaffold {
                            drug_id: drug_id.to_string(),
                        }),
                    _ => Ok(drug_id.to_string()),
                }
            };
            let mut keyed = Vec::with_capacity(labeled.len());
            let mut groups = BTreeSet::new();
            for pair in labeled {
                let ga = group_of(&pair.drug_a)?;
                let gb = group_of(&pair.drug_b)?;
                groups.insert(ga.clone());
                groups.insert(gb.clone());
                keyed.push((pair, ga, gb));
            }
            let assignment = partition_groups(groups, ratios, &mut rng);
            for (pair, ga, gb) in keyed {
                let (pa, pb) = (assignment[&ga], assignment[&gb]);
                if pa == pb {
                    parts[pa].push(pair.clone());
                } else {
                    dropped += 1;
                }
            }
        }
    }

    for (part, name) in parts.iter().zip(["train", "validation", "test"]) {
        if part.is_empty() {
            return Err(CorpusError::EmptyPartition(name));
        }
    }
    let [train, validation, test] = parts;
    Ok(DataSplit {
        train,
        validation,
        test,
        protocol,
        seed,
        dropped,
    })
}
