//! Rule-based clinical score.
//!
//! Six label-independent indicators, each worth one point, normalized by 6.
//! The scorer only ever sees two [`ClinicalProfile`]s, never a pair label.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::corpus::ClinicalProfile;

pub const DEFAULT_TAU_SE: f64 = 0.3;
pub const RULE_COUNT: u8 = 6;

/// Length of the ATC prefix that encodes levels 1–3 (e.g. `A10B`).
const ATC_LEVEL3_PREFIX: usize = 4;

/// Jaccard index of two token sets; two empty sets score 0.
pub fn side_effect_similarity(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

fn atc_level3(code: &str) -> Option<&str> {
    code.get(..ATC_LEVEL3_PREFIX)
        .filter(|p| p.len() == ATC_LEVEL3_PREFIX)
}

/// True iff some code of `a` and some code of `b` share the level-3 prefix.
/// Codes shorter than four characters never match.
pub fn atc_match(a: &BTreeSet<String>, b: &BTreeSet<String>) -> bool {
    let prefixes: BTreeSet<&str> = a.iter().filter_map(|c| atc_level3(c)).collect();
    b.iter()
        .filter_map(|c| atc_level3(c))
        .any(|p| prefixes.contains(p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuleBreakdown {
    pub shared_enzyme: bool,
    pub shared_target: bool,
    pub atc_match: bool,
    pub group_match: bool,
    pub side_effect_sim_hit: bool,
    pub pk_modulator: bool,
    pub raw_sum: u8,
    pub normalized: f64,
}

impl RuleBreakdown {
    pub fn indicators(&self) -> [(&'static str, bool); 6] {
        [
            ("shared_enzyme", self.shared_enzyme),
            ("shared_target", self.shared_target),
            ("atc_match", self.atc_match),
            ("group_match", self.group_match),
            ("side_effect_sim_hit", self.side_effect_sim_hit),
            ("pk_modulator", self.pk_modulator),
        ]
    }
}

/// Scores a drug pair. Symmetric in its arguments. `tau_se` must lie in
/// `[0, 1]`; the side-effect rule fires on a strictly greater Jaccard.
pub fn score_pair(a: &ClinicalProfile, b: &ClinicalProfile, tau_se: f64) -> RuleBreakdown {
    debug_assert!((0.0..=1.0).contains(&tau_se), "tau_se out of range: {tau_se}");
    let shared_enzyme = !a.enzymes.is_disjoint(&b.enzymes);
    let shared_target = !a.targets.is_disjoint(&b.targets);
    let atc = atc_match(&a.atc_codes, &b.atc_codes);
    let group_match = !a.therapeutic_groups.is_disjoint(&b.therapeutic_groups);
    let side_effect_sim_hit = side_effect_similarity(&a.side_effects, &b.side_effects) > tau_se;
    let pk_modulator = a.strong_pk_modulator || b.strong_pk_modulator;
    let raw_sum = [
        shared_enzyme,
        shared_target,
        atc,
        group_match,
        side_effect_sim_hit,
        pk_modulator,
    ]
    .iter()
    .filter(|&&hit| hit)
    .count() as u8;
    RuleBreakdown {
        shared_enzyme,
        shared_target,
        atc_match: atc,
        group_match,
        side_effect_sim_hit,
        pk_modulator,
        raw_sum,
        normalized: f64::from(raw_sum) / f64::from(RULE_COUNT),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn jaccard_examples() {
        assert_eq!(side_effect_similarity(&set(&["a", "b"]), &set(&["a", "b"])), 1.0);
        assert_eq!(side_effect_similarity(&set(&["a"]), &set(&["b"])), 0.0);
        assert_eq!(
            side_effect_similarity(&set(&["a", "b", "c"]), &set(&["b", "c", "d"])),
            0.5
        );
        assert_eq!(side_effect_similarity(&set(&[]), &set(&[])), 0.0);
    }

    #[test]
    fn atc_examples() {
        assert!(atc_match(&set(&["A10BA02"]), &set(&["A10BB01"])));
        assert!(!atc_match(&set(&["A10BA02"]), &set(&["C09AA01"])));
        assert!(!atc_match(&set(&[]), &set(&["C09AA01"])));
        assert!(!atc_match(&set(&["A10"]), &set(&["A10"])));
        assert!(atc_match(&set(&["A10B"]), &set(&["A10BX", "C09AA01"])));
    }

    fn full_profile() -> ClinicalProfile {
        ClinicalProfile {
            enzymes: set(&["CYP3A4"]),
            targets: set(&["T1"]),
            atc_codes: set(&["A10BA02"]),
            therapeutic_groups: set(&["DIABETES"]),
            side_effects: set(&["NAUSEA", "RASH"]),
            strong_pk_modulator: true,
            scaffold_id: None,
        }
    }

    #[test]
    fn all_rules_fire() {
        let s = score_pair(&full_profile(), &full_profile(), 0.3);
        assert_eq!(s.raw_sum, 6);
        assert_eq!(s.normalized, 1.0);
    }

    #[test]
    fn no_rule_fires() {
        let s = score_pair(&ClinicalProfile::default(), &ClinicalProfile::default(), 0.3);
        assert_eq!(s.raw_sum, 0);
        assert_eq!(s.normalized, 0.0);
    }

    #[test]
    fn enzyme_and_atc_only() {
        let a = ClinicalProfile {
            enzymes: set(&["CYP3A4", "CYP2D6"]),
            atc_codes: set(&["A10BA02"]),
            side_effects: set(&["NAUSEA"]),
            ..Default::default()
        };
        let b = ClinicalProfile {
            enzymes: set(&["CYP3A4"]),
            atc_codes: set(&["A10BB01"]),
            side_effects: set(&["RASH"]),
            ..Default::default()
        };
        let s = score_pair(&a, &b, 0.3);
        assert!(s.shared_enzyme && s.atc_match);
        assert_eq!(s.raw_sum, 2);
        assert_eq!(s.normalized, 2.0 / 6.0);
        assert!((s.normalized - 0.333333).abs() < 1e-6);
    }

    #[test]
    fn side_effect_threshold_is_strict() {
        let a = ClinicalProfile {
            side_effects: set(&["A", "B", "C"]),
            ..Default::default()
        };
        let b = ClinicalProfile {
            side_effects: set(&["B", "C", "D"]),
            ..Default::default()
        };
        assert!(!score_pair(&a, &b, 0.5).side_effect_sim_hit);
        assert!(score_pair(&a, &b, 0.49).side_effect_sim_hit);
    }

    #[test]
    fn one_modulator_is_enough() {
        let a = ClinicalProfile {
            strong_pk_modulator: true,
            ..Default::default()
        };
        let s = score_pair(&a, &ClinicalProfile::default(), 0.3);
        assert!(s.pk_modulator);
        assert_eq!(s, score_pair(&ClinicalProfile::default(), &a, 0.3));
    }
}
