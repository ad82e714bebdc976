//! Synthetic benchmark with planted ground truth.
//!
//! Drugs get clustered embeddings and sparse clinical profiles. A pair truly
//! interacts iff the drugs share an enzyme or their fused embeddings have
//! cosine similarity above a threshold. The documented flag written to the
//! pairs file is the truth with a fraction of flags flipped.
//!
//! Both embedding sources are written as `fused ± noise`, so fusing them with
//! equal weights recovers the planted vector.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::config::{InputPaths, RunConfig};

const ENZYMES: [&str; 12] = [
    "CYP1A2", "CYP2A6", "CYP2B6", "CYP2C8", "CYP2C9", "CYP2C19", "CYP2D6", "CYP2E1", "CYP2J2", "CYP3A4",
    "CYP3A5", "CYP4F2",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSettings {
    pub n_drugs: usize,
    pub dim: usize,
    pub clusters: usize,
    /// Spread of a drug around its cluster center, relative to the center's
    /// per-coordinate scale.
    pub cluster_spread: f64,
    /// Per-coordinate deviation of each source from the fused vector.
    pub source_noise: f64,
    /// Probability that a drug belongs to its cluster's ATC level-3 class
    /// instead of a random one. Structurally similar drugs tend to share a
    /// therapeutic class.
    pub class_coherence: f64,
    /// Probability that a drug is metabolized by one enzyme of the pool.
    pub enzyme_probability: f64,
    pub cosine_threshold: f64,
    /// Approximate number of candidate pairs written.
    pub n_pairs: usize,
    /// Share of candidate pairs drawn from truly interacting pairs.
    pub positive_fraction: f64,
    /// Probability that a documented flag disagrees with the truth.
    pub label_noise: f64,
    pub seed: u64,
}

impl Default for SynthSettings {
    fn default() -> Self {
        SynthSettings {
            n_drugs: 200,
            dim: 8,
            clusters: 10,
            cluster_spread: 0.3,
            source_noise: 0.3,
            class_coherence: 0.9,
            enzyme_probability: 0.6,
            cosine_threshold: 0.8,
            n_pairs: 2000,
            positive_fraction: 0.7,
            label_noise: 0.15,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSummary {
    pub drugs: usize,
    pub candidate_pairs: usize,
    pub truly_interacting: usize,
    pub documented: usize,
    pub flipped: usize,
    pub inputs: InputPaths,
    pub config: PathBuf,
}

struct SynthDrug {
    id: String,
    fused: Vec<f64>,
    mol2vec: Vec<f64>,
    smilesbert: Vec<f64>,
    cluster: usize,
    enzymes: Vec<&'static str>,
    targets: Vec<String>,
    atc: String,
    group: String,
    side_effects: Vec<String>,
    pk_modulator: bool,
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// A random ATC level-3 prefix such as `C07A`.
fn atc_level3(rng: &mut ChaCha8Rng) -> String {
    format!(
        "{}{:02}{}",
        (b'A' + rng.random_range(0..14u8)) as char,
        rng.random_range(1..=20),
        (b'A' + rng.random_range(0..5u8)) as char
    )
}

fn make_drugs(s: &SynthSettings, rng: &mut ChaCha8Rng) -> Vec<SynthDrug> {
    // Coordinates have variance 1/dim, so vectors have roughly unit norm.
    let unit = Normal::new(0.0, 1.0 / (s.dim.max(1) as f64).sqrt()).expect("valid normal");
    let centers: Vec<Vec<f64>> = (0..s.clusters.max(1))
        .map(|_| (0..s.dim).map(|_| unit.sample(rng)).collect())
        .collect();
    let classes: Vec<String> = (0..centers.len()).map(|_| atc_level3(rng)).collect();
    (0..s.n_drugs)
        .map(|i| {
            let cluster = i % centers.len();
            let fused: Vec<f64> = centers[cluster]
                .iter()
                .map(|c| c + s.cluster_spread * unit.sample(rng))
                .collect();
            let delta: Vec<f64> = (0..s.dim).map(|_| s.source_noise * unit.sample(rng)).collect();
            let enzymes = if rng.random::<f64>() < s.enzyme_probability {
                vec![*ENZYMES.choose(rng).expect("pool is non-empty")]
            } else {
                Vec::new()
            };
            let n_targets = rng.random_range(1..=2);
            let targets = (0..n_targets).map(|_| format!("T{:03}", rng.random_range(0..300))).collect();
            let class = if rng.random::<f64>() < s.class_coherence {
                classes[cluster].clone()
            } else {
                atc_level3(rng)
            };
            let atc = format!(
                "{class}{}{:02}",
                (b'A' + rng.random_range(0..5u8)) as char,
                rng.random_range(1..=99)
            );
            let mut side_effects = BTreeSet::new();
            while side_effects.len() < 4 {
                side_effects.insert(format!("SE{:03}", rng.random_range(0..250)));
            }
            SynthDrug {
                id: format!("D{i:03}"),
                mol2vec: fused.iter().zip(&delta).map(|(f, d)| f + d).collect(),
                smilesbert: fused.iter().zip(&delta).map(|(f, d)| f - d).collect(),
                fused,
                cluster,
                enzymes,
                targets,
                atc,
                group: format!("G{:02}", rng.random_range(0..60)),
                side_effects: side_effects.into_iter().collect(),
                pk_modulator: rng.random::<f64>() < 0.03,
            }
        })
        .collect()
}

fn interacts(a: &SynthDrug, b: &SynthDrug, threshold: f64) -> bool {
    a.enzymes.iter().any(|e| b.enzymes.contains(e)) || cosine(&a.fused, &b.fused) > threshold
}

fn create(path: &Path) -> std::io::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn json_line(out: &mut impl Write, value: &serde_json::Value) -> std::io::Result<()> {
    writeln!(out, "{value}")
}

/// Writes drugs, both embedding sources, profiles, scaffolds, candidate pairs,
/// the ground truth and a ready-to-run `config.json` into `dir`.
pub fn generate(settings: &SynthSettings, dir: &Path) -> std::io::Result<SynthSummary> {
    std::fs::create_dir_all(dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let drugs = make_drugs(settings, &mut rng);

    let inputs = InputPaths {
        drugs: dir.join("drugs.csv"),
        embeddings: vec![dir.join("mol2vec.jsonl"), dir.join("smilesbert.jsonl")],
        profiles: dir.join("profiles.jsonl"),
        scaffolds: Some(dir.join("scaffolds.csv")),
        pairs: dir.join("pairs.csv"),
    };

    let mut out = create(&inputs.drugs)?;
    writeln!(out, "drug_id,smiles")?;
    for d in &drugs {
        writeln!(out, "{},", d.id)?;
    }
    out.flush()?;

    for (path, source) in inputs.embeddings.iter().zip(["mol2vec", "smilesbert"]) {
        let mut out = create(path)?;
        for d in &drugs {
            let v = if source == "mol2vec" { &d.mol2vec } else { &d.smilesbert };
            json_line(
                &mut out,
                &serde_json::json!({"drug_id": d.id, "source": source, "vector": v}),
            )?;
        }
        out.flush()?;
    }

    let mut out = create(&inputs.profiles)?;
    for d in &drugs {
        json_line(
            &mut out,
            &serde_json::json!({
                "drug_id": d.id,
                "enzymes": d.enzymes,
                "targets": d.targets,
                "atc": [d.atc],
                "groups": [d.group],
                "side_effects": d.side_effects,
                "strong_pk_modulator": d.pk_modulator,
            }),
        )?;
    }
    out.flush()?;

    let mut out = create(inputs.scaffolds.as_ref().expect("set above"))?;
    writeln!(out, "drug_id,scaffold")?;
    for d in &drugs {
        writeln!(out, "{},S{:02}", d.id, d.cluster)?;
    }
    out.flush()?;

    // Candidate pairs: a fixed share of truly interacting pairs, the rest
    // non-interacting, in random order.
    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    for i in 0..drugs.len() {
        for j in i + 1..drugs.len() {
            if interacts(&drugs[i], &drugs[j], settings.cosine_threshold) {
                positives.push((i, j));
            } else {
                negatives.push((i, j));
            }
        }
    }
    positives.shuffle(&mut rng);
    negatives.shuffle(&mut rng);
    let n_pos = ((settings.n_pairs as f64 * settings.positive_fraction).round() as usize).min(positives.len());
    let n_neg = settings.n_pairs.saturating_sub(n_pos).min(negatives.len());
    let mut candidates: Vec<((usize, usize), bool)> = positives[..n_pos]
        .iter()
        .map(|&p| (p, true))
        .chain(negatives[..n_neg].iter().map(|&p| (p, false)))
        .collect();
    candidates.shuffle(&mut rng);

    let mut pairs_out = create(&inputs.pairs)?;
    let mut truth_out = create(&dir.join("truth.csv"))?;
    writeln!(pairs_out, "drug_a,drug_b,documented")?;
    writeln!(truth_out, "drug_a,drug_b,interacts")?;
    let (mut documented, mut flipped) = (0, 0);
    for &((i, j), truth) in &candidates {
        let flip = rng.random::<f64>() < settings.label_noise;
        let flag = truth != flip;
        documented += usize::from(flag);
        flipped += usize::from(flip);
        writeln!(pairs_out, "{},{},{}", drugs[i].id, drugs[j].id, u8::from(flag))?;
        writeln!(truth_out, "{},{},{}", drugs[i].id, drugs[j].id, u8::from(truth))?;
    }
    pairs_out.flush()?;
    truth_out.flush()?;

    let config_path = dir.join("config.json");
    let mut config = RunConfig::new(inputs.clone(), dir.join("out"));
    // Paths in the written config are relative to its directory.
    config.inputs = InputPaths {
        drugs: "drugs.csv".into(),
        embeddings: vec!["mol2vec.jsonl".into(), "smilesbert.jsonl".into()],
        profiles: "profiles.jsonl".into(),
        scaffolds: Some("scaffolds.csv".into()),
        pairs: "pairs.csv".into(),
    };
    config.output_dir = "out".into();
    std::fs::write(&config_path, config.to_json())?;

    Ok(SynthSummary {
        drugs: drugs.len(),
        candidate_pairs: candidates.len(),
        truly_interacting: n_pos,
        documented,
        flipped,
        inputs,
        config: config_path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::load_catalog;
    use crate::features::fuse;

    #[test]
    fn fusion_recovers_planted_vectors() {
        let s = SynthSettings {
            n_drugs: 10,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for d in make_drugs(&s, &mut rng) {
            let f = fuse(&d.mol2vec, &d.smilesbert, 0.5).unwrap();
            for (a, b) in f.iter().zip(&d.fused) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn generated_files_load() {
        let dir = tempfile::tempdir().unwrap();
        let s = SynthSettings {
            n_drugs: 30,
            clusters: 5,
            n_pairs: 100,
            ..Default::default()
        };
        let summary = generate(&s, dir.path()).unwrap();
        let catalog = load_catalog(&summary.inputs.catalog_sources()).unwrap();
        assert_eq!(catalog.len(), 30);
        assert_eq!(summary.candidate_pairs, 100);
        let cfg = RunConfig::load(&summary.config).unwrap();
        cfg.validate().unwrap();
    }
}
