//! Checks shared by the per-topic integration tests and the `acceptance`
//! harness. Each check returns a one-line summary on success and a
//! description of the first violation on failure.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::{Duration, Instant};

use ndarray::{Array1, Array2};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ddi_core::config::RunConfig;
use ddi_core::corpus::{
    split_dataset, ClassWeights, ClinicalProfile, DrugCatalog, DrugRecord, PairInstance, PairLabel, SplitPart,
    SplitProtocol, SplitRatios,
};
use ddi_core::eval::{pr_auc, roc_auc};
use ddi_core::hyperopt::{
    optimize, transition_probabilities, velocity_update, HyperParams, OptimizerSettings, PheromoneMatrix, PsoParams,
    SearchSpace, SurrogateFitness,
};
use ddi_core::mlp::{Dense, MlpModel};
use ddi_core::pipeline::{self, RunContext};
use ddi_core::rbscore::score_pair;
use ddi_core::synth::{generate, SynthSettings};
use ddi_core::MlpConfig;

pub type Outcome = Result<String, String>;

fn within(limit: Duration, started: Instant) -> Result<Duration, String> {
    let took = started.elapsed();
    if took > limit {
        Err(format!("took {took:.1?}, limit {limit:?}"))
    } else {
        Ok(took)
    }
}

// ---------------------------------------------------------------- gradients

/// Hidden pre-activations of every row, for checking distance from ReLU kinks.
fn pre_activations(model: &MlpModel, x: &Array2<f64>) -> Vec<f64> {
    let layers = model.layers();
    let mut out = Vec::new();
    let mut h = x.clone();
    for layer in &layers[..layers.len() - 1] {
        let z = h.dot(&layer.weights.t()) + &layer.bias;
        out.extend(z.iter().copied());
        h = z.mapv(|v| v.max(0.0));
    }
    out
}

fn loss(model: &MlpModel, x: &Array2<f64>, y: &[f64], w: ClassWeights) -> f64 {
    model
        .loss_and_gradients::<ChaCha8Rng>(x.view(), y, w, None)
        .expect("shapes agree")
        .0
}

/// Analytic gradients against central differences on random small networks.
pub fn gradient_oracle(instances: usize) -> Outcome {
    // Five-point central difference: truncation error O(H^4), so H can be
    // large enough that rounding in the loss stays far below the tolerance
    // even for gradients near 1e-5.
    const H: f64 = 1e-3;
    // Pre-activations closer than this to zero could cross a ReLU kink under
    // a perturbation of size 2H.
    const KINK_MARGIN: f64 = 0.05;
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut checked_params = 0usize;
    let mut done = 0;
    while done < instances {
        let input_dim = rng.random_range(1..=8);
        let depth = rng.random_range(1..=3);
        let widths: Vec<usize> = (0..depth).map(|_| rng.random_range(1..=8)).collect();
        let mut fan_in = input_dim;
        let mut layers = Vec::new();
        for &w in widths.iter().chain(std::iter::once(&1)) {
            layers.push(Dense {
                weights: Array2::from_shape_simple_fn((w, fan_in), || rng.random_range(-1.0..1.0)),
                bias: Array1::from_shape_simple_fn(w, || rng.random_range(-0.5..0.5)),
            });
            fan_in = w;
        }
        let mut model = MlpModel::from_layers(MlpConfig::default(), layers).map_err(|e| e.to_string())?;
        let rows = rng.random_range(1..=4);
        let x = Array2::from_shape_simple_fn((rows, input_dim), || rng.random_range(-1.0..1.0));
        if pre_activations(&model, &x).iter().any(|z| z.abs() < KINK_MARGIN) {
            continue;
        }
        let y: Vec<f64> = (0..rows).map(|_| f64::from(rng.random_range(0..2u8))).collect();
        let w = ClassWeights {
            positive: rng.random_range(0.5..3.0),
            negative: 1.0,
        };
        let (_, grads) = model
            .loss_and_gradients::<ChaCha8Rng>(x.view(), &y, w, None)
            .map_err(|e| e.to_string())?;
        for l in 0..model.layers().len() {
            let n_w = model.layers()[l].weights.len();
            let n_b = model.layers()[l].bias.len();
            let cols = model.layers()[l].inputs();
            for k in 0..n_w + n_b {
                let analytic = if k < n_w {
                    grads.layers[l].weights[(k / cols, k % cols)]
                } else {
                    grads.layers[l].bias[k - n_w]
                };
                let mut at = |delta: f64| {
                    let layer = &mut model.layers_mut()[l];
                    let slot = if k < n_w {
                        &mut layer.weights[(k / cols, k % cols)]
                    } else {
                        &mut layer.bias[k - n_w]
                    };
                    let orig = *slot;
                    *slot = orig + delta;
                    let v = loss(&model, &x, &y, w);
                    let layer = &mut model.layers_mut()[l];
                    let slot = if k < n_w {
                        &mut layer.weights[(k / cols, k % cols)]
                    } else {
                        &mut layer.bias[k - n_w]
                    };
                    *slot = orig;
                    v
                };
                let numeric = (8.0 * (at(H) - at(-H)) - (at(2.0 * H) - at(-2.0 * H))) / (12.0 * H);
                let scale = analytic.abs().max(numeric.abs());
                let rel = if scale == 0.0 { 0.0 } else { (analytic - numeric).abs() / scale };
                if rel >= 1e-6 {
                    return Err(format!(
                        "instance {done}, layer {l}, parameter {k}: analytic {analytic:e}, numeric {numeric:e}, relative error {rel:e}"
                    ));
                }
                worst = worst.max(rel);
                checked_params += 1;
            }
        }
        done += 1;
    }
    let took = within(Duration::from_secs(10), started)?;
    Ok(format!(
        "{instances} networks, {checked_params} parameters, worst relative error {worst:.2e}, {took:.2?}"
    ))
}

// ------------------------------------------------------------------ metrics

/// Half-credit pair counting over every positive–negative pair, returned as a
/// doubled count so the comparison stays in integers.
fn brute_auc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let pos: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| l).map(|(&s, _)| s).collect();
    let neg: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| !l).map(|(&s, _)| s).collect();
    if pos.is_empty() || neg.is_empty() {
        return None;
    }
    let mut doubled: u64 = 0;
    for &p in &pos {
        for &n in &neg {
            doubled += if p > n {
                2
            } else if p == n {
                1
            } else {
                0
            };
        }
    }
    Some(doubled as f64 / (2 * pos.len() * neg.len()) as f64)
}

/// Precision at every distinct threshold times the recall gained there.
fn brute_ap(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let total_pos = labels.iter().filter(|&&l| l).count();
    if total_pos == 0 {
        return None;
    }
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for t in thresholds {
        let tp = scores.iter().zip(labels).filter(|(&s, &l)| s >= t && l).count();
        let predicted = scores.iter().filter(|&&s| s >= t).count();
        let recall = tp as f64 / total_pos as f64;
        ap += (recall - prev_recall) * (tp as f64 / predicted as f64);
        prev_recall = recall;
    }
    Some(ap)
}

/// `roc_auc` and `pr_auc` against the brute-force definitions on random small
/// instances, half of them drawn from a coarse grid to force ties.
pub fn metric_oracles(instances: usize) -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (mut auc_checked, mut ap_checked, mut worst_ap) = (0, 0, 0.0f64);
    for i in 0..instances {
        let n = rng.random_range(1..=12);
        let tied = i % 2 == 0;
        let scores: Vec<f64> = (0..n)
            .map(|_| {
                if tied {
                    f64::from(rng.random_range(0..5u8)) / 4.0
                } else {
                    rng.random::<f64>()
                }
            })
            .collect();
        let labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        match (brute_auc(&scores, &labels), roc_auc(&scores, &labels)) {
            (Some(want), Ok(got)) if want == got => auc_checked += 1,
            (None, Err(_)) => {}
            (want, got) => return Err(format!("roc_auc on {scores:?} {labels:?}: want {want:?}, got {got:?}")),
        }
        match (brute_ap(&scores, &labels), pr_auc(&scores, &labels)) {
            (Some(want), Ok(got)) if (want - got).abs() <= 1e-12 => {
                worst_ap = worst_ap.max((want - got).abs());
                ap_checked += 1;
            }
            (None, Err(_)) => {}
            (want, got) => return Err(format!("pr_auc on {scores:?} {labels:?}: want {want:?}, got {got:?}")),
        }
    }
    let took = within(Duration::from_secs(10), started)?;
    if auc_checked < 1000 || ap_checked < 1000 {
        return Err(format!("only {auc_checked} AUC and {ap_checked} AP instances were defined"));
    }
    Ok(format!(
        "{auc_checked} AUC instances exact, {ap_checked} AP instances, worst AP deviation {worst_ap:.1e}, {took:.2?}"
    ))
}

// ------------------------------------------------------------ hand examples

/// Hand-evaluated examples of the search update rules.
pub fn hyperopt_hand_examples() -> Outcome {
    let p = transition_probabilities(&[1.0, 2.0], &[1.0, 1.0], 1.0, 2.0);
    if p != [1.0 / 3.0, 2.0 / 3.0] {
        return Err(format!("transition probabilities {p:?}, want [1/3, 2/3]"));
    }

    let params = PsoParams::default();
    let (v, x) = velocity_update(params, 0.1, 0.5, 0.6, 0.7, 1.0, 1.0);
    // 0.52 has no exact binary form; the update must equal the formula
    // evaluated in f64 and sit within rounding of 0.52.
    let formula = 0.8 * 0.1 + 1.2 * 1.0 * (0.6 - 0.5) + 1.6 * 1.0 * (0.7 - 0.5);
    if v != formula || (v - 0.52).abs() > 2.0 * f64::EPSILON {
        return Err(format!("velocity {v:?}, want {formula:?} (0.52)"));
    }
    if x != 1.0 {
        return Err(format!("position {x:?}, want the upper bound 1.0 (0.5 + 0.52 = 1.02 clamped)"));
    }

    let mut m = PheromoneMatrix::new(&[2], 1.0, 2.0, 0.2);
    m.evaporate_and_reinforce(&[1], 0.9);
    let (off, on) = (m.tau(0)[0], m.tau(0)[1]);
    if off != 0.8 {
        return Err(format!("evaporated pheromone {off:?}, want 0.8"));
    }
    if on != 0.8 + 0.9 || (on - 1.7).abs() > 2.0 * f64::EPSILON {
        return Err(format!("reinforced pheromone {on:?}, want 0.8 + 0.9 = 1.7"));
    }
    Ok(format!("P = {p:?}, v' = {v}, x' = {x}, tau' = {off} and {on}"))
}

// ---------------------------------------------------------------- optimizer

/// Full-budget search on the quadratic surrogate, one run per seed.
pub fn optimizer_recovery(seeds: u64, required: usize) -> Outcome {
    let started = Instant::now();
    let space = SearchSpace::default();
    let optimum = space
        .encode(&HyperParams::from_mlp_config(&MlpConfig::default()))
        .ok_or("default configuration lies outside the search space")?;
    let surrogate = SurrogateFitness::new(space.clone(), optimum.clone());
    let mut hits = 0;
    let mut misses = Vec::new();
    for seed in 0..seeds {
        let out = optimize(
            &space,
            &|p: &HyperParams| surrogate.evaluate(p),
            &OptimizerSettings::full(),
            seed,
        )
        .map_err(|e| e.to_string())?;
        let c = &out.best_candidate;
        let continuous_ok = c
            .continuous
            .iter()
            .zip(&optimum.continuous)
            .all(|(a, b)| (a - b).abs() <= 0.05);
        if c.discrete == optimum.discrete && continuous_ok {
            hits += 1;
        } else {
            misses.push(seed);
        }
    }
    let took = within(Duration::from_secs(60), started)?;
    if hits < required {
        return Err(format!("{hits}/{seeds} runs recovered the optimum (missed seeds {misses:?})"));
    }
    Ok(format!("{hits}/{seeds} runs recovered the optimum, {took:.2?}"))
}

/// Constant fitness: both search phases stop after exactly five stagnant
/// iterations.
pub fn early_stop_contract() -> Outcome {
    let space = SearchSpace::default();
    let settings = OptimizerSettings::full();
    for seed in [1u64, 2, 3] {
        let out = optimize(&space, &|_: &HyperParams| Ok(0.5), &settings, seed).map_err(|e| e.to_string())?;
        if (out.aco_iterations, out.pso_iterations) != (5, 5) {
            return Err(format!(
                "seed {seed}: ACO ran {} and PSO {} iterations, want 5 and 5",
                out.aco_iterations, out.pso_iterations
            ));
        }
        let want = settings.rsmpl_configs + 5 * settings.aco.ants + 5 * settings.pso.particles;
        if out.log.len() != want {
            return Err(format!("seed {seed}: {} log rows, want {want}", out.log.len()));
        }
    }
    Ok("ACO and PSO each stopped after 5 iterations on 3 seeds".into())
}

// ------------------------------------------------------------------ rbscore

fn random_profile(rng: &mut ChaCha8Rng) -> ClinicalProfile {
    const ENZYMES: [&str; 4] = ["CYP3A4", "CYP2D6", "CYP2C9", "CYP1A2"];
    const ATC: [&str; 6] = ["C07AB02", "C07AA05", "N06AB03", "N06AX11", "A10BA02", "C0"];
    let pick = |rng: &mut ChaCha8Rng, pool: &[&str], max: usize| -> BTreeSet<String> {
        let k = rng.random_range(0..=max);
        (0..k).map(|_| pool.choose(rng).expect("non-empty").to_string()).collect()
    };
    let targets: Vec<String> = (0..6).map(|i| format!("T{i}")).collect();
    let targets: Vec<&str> = targets.iter().map(String::as_str).collect();
    let groups = ["approved", "investigational", "withdrawn"];
    let side: Vec<String> = (0..8).map(|i| format!("SE{i}")).collect();
    let side: Vec<&str> = side.iter().map(String::as_str).collect();
    ClinicalProfile {
        enzymes: pick(rng, &ENZYMES, 2),
        targets: pick(rng, &targets, 2),
        atc_codes: pick(rng, &ATC, 2),
        therapeutic_groups: pick(rng, &groups, 1),
        side_effects: pick(rng, &side, 5),
        strong_pk_modulator: rng.random_bool(0.1),
        scaffold_id: None,
    }
}

fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

/// Score range, symmetry on random profile pairs, and the three worked examples.
pub fn rbscore_exactness(pairs: usize) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut seen = BTreeSet::new();
    for i in 0..pairs {
        let (a, b) = (random_profile(&mut rng), random_profile(&mut rng));
        let tau = [0.0, 0.1, 0.3, 0.5, 1.0][i % 5];
        let ab = score_pair(&a, &b, tau);
        let ba = score_pair(&b, &a, tau);
        if ab != ba {
            return Err(format!("asymmetric on pair {i}: {ab:?} vs {ba:?}"));
        }
        let k = ab.indicators().iter().filter(|(_, hit)| *hit).count();
        if usize::from(ab.raw_sum) != k || ab.normalized != k as f64 / 6.0 {
            return Err(format!("pair {i}: {ab:?} is not k/6 with k = {k}"));
        }
        seen.insert(k);
    }

    let full = ClinicalProfile {
        enzymes: set(&["CYP3A4"]),
        targets: set(&["P08183"]),
        atc_codes: set(&["C07AB02"]),
        therapeutic_groups: set(&["approved"]),
        side_effects: set(&["nausea", "dizziness"]),
        strong_pk_modulator: true,
        scaffold_id: None,
    };
    let all = score_pair(&full, &full, 0.3);
    if all.normalized != 1.0 {
        return Err(format!("all rules firing gave {}", all.normalized));
    }
    let empty = ClinicalProfile::default();
    let none = score_pair(&empty, &empty, 0.3);
    if none.normalized != 0.0 {
        return Err(format!("no rule firing gave {}", none.normalized));
    }
    let a = ClinicalProfile {
        enzymes: set(&["CYP3A4", "CYP2D6"]),
        atc_codes: set(&["C07AB02"]),
        targets: set(&["T1"]),
        side_effects: set(&["rash"]),
        ..Default::default()
    };
    let b = ClinicalProfile {
        enzymes: set(&["CYP3A4"]),
        atc_codes: set(&["C07AA05"]),
        targets: set(&["T2"]),
        side_effects: set(&["cough"]),
        ..Default::default()
    };
    let two = score_pair(&a, &b, 0.3);
    if two.normalized != 2.0 / 6.0 || !(two.shared_enzyme && two.atc_match) {
        return Err(format!("enzyme + ATC example gave {two:?}"));
    }
    Ok(format!(
        "{pairs} random pairs symmetric with scores in {{k/6}} (k seen: {seen:?}); examples 1, 0, 2/6 exact"
    ))
}

// ------------------------------------------------------------------- splits

fn random_catalog(rng: &mut ChaCha8Rng, n: usize) -> DrugCatalog {
    let scaffolds = rng.random_range(10..=20);
    DrugCatalog::from_records((0..n).map(|i| DrugRecord {
        drug_id: format!("D{i:03}"),
        smiles: None,
        embeddings: Default::default(),
        profile: ClinicalProfile {
            scaffold_id: Some(format!("S{}", rng.random_range(0..scaffolds))),
            ..Default::default()
        },
    }))
    .expect("unique ids")
}

fn random_pairs(rng: &mut ChaCha8Rng, n_drugs: usize) -> Vec<PairInstance> {
    let mut out = Vec::new();
    for i in 0..n_drugs {
        for j in i + 1..n_drugs {
            if rng.random_bool(0.5) {
                let label = match rng.random_range(0..3u8) {
                    0 => PairLabel::Positive,
                    1 => PairLabel::ReliableNegative,
                    _ => PairLabel::Unknown,
                };
                out.push(PairInstance::new(format!("D{i:03}"), format!("D{j:03}"), label).expect("distinct"));
            }
        }
    }
    out
}

/// Largest remainder for 80/10/10 in integer arithmetic.
fn expected_sizes(n: usize) -> [usize; 3] {
    let weights = [8usize, 1, 1];
    let mut sizes = weights.map(|w| n * w / 10);
    let remainders = weights.map(|w| n * w % 10);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| remainders[j].cmp(&remainders[i]).then(i.cmp(&j)));
    let left = n - sizes.iter().sum::<usize>();
    for &i in order.iter().take(left) {
        sizes[i] += 1;
    }
    sizes
}

fn part_of_each_group(split: &ddi_core::corpus::DataSplit, group: impl Fn(&str) -> String) -> Result<(), String> {
    let mut owner: BTreeMap<String, usize> = BTreeMap::new();
    for (part, name) in SplitPart::ALL.iter().enumerate() {
        for p in split.part(*name) {
            for id in [&p.drug_a, &p.drug_b] {
                let g = group(id);
                if let Some(&other) = owner.get(&g) {
                    if other != part {
                        return Err(format!("{g} appears in {} and {}", SplitPart::ALL[other].as_str(), name.as_str()));
                    }
                }
                owner.insert(g, part);
            }
        }
    }
    Ok(())
}

/// Group disjointness for cold-start and scaffold splits, exact sizes for
/// random splits, over random fixtures.
pub fn split_invariants(fixtures: u64) -> Outcome {
    let ratios = SplitRatios::default();
    let mut checked = [0usize; 3];
    for seed in 0..fixtures {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(40..=80);
        let catalog = random_catalog(&mut rng, n);
        let pairs = random_pairs(&mut rng, n);
        let labeled = pairs.iter().filter(|p| p.label != PairLabel::Unknown).count();

        let random = split_dataset(&pairs, &catalog, SplitProtocol::Random, &ratios, seed).map_err(|e| e.to_string())?;
        let sizes = [random.train.len(), random.validation.len(), random.test.len()];
        if sizes != expected_sizes(labeled) {
            return Err(format!("fixture {seed}: random sizes {sizes:?} for {labeled}, want {:?}", expected_sizes(labeled)));
        }
        checked[0] += 1;

        for (k, protocol) in [(1, SplitProtocol::ColdStart), (2, SplitProtocol::Scaffold)] {
            // Small fixtures can leave a partition empty; that is reported as
            // an error, not a leak, so it does not count as a checked fixture.
            let Ok(split) = split_dataset(&pairs, &catalog, protocol, &ratios, seed) else {
                continue;
            };
            let kept = split.train.len() + split.validation.len() + split.test.len();
            if kept + split.dropped != labeled {
                return Err(format!("fixture {seed}: {protocol:?} kept {kept} + dropped {} != {labeled}", split.dropped));
            }
            let result = match protocol {
                SplitProtocol::Scaffold => part_of_each_group(&split, |id| {
                    catalog.get(id).and_then(|d| d.profile.scaffold_id.clone()).expect("fixture has scaffolds")
                }),
                _ => part_of_each_group(&split, str::to_string),
            };
            result.map_err(|e| format!("fixture {seed}: {protocol:?}: {e}"))?;
            checked[k] += 1;
        }
    }
    if checked[1] < fixtures as usize * 9 / 10 || checked[2] < fixtures as usize / 2 {
        return Err(format!("too few non-degenerate fixtures: {checked:?}"));
    }
    Ok(format!(
        "random sizes exact on {}, cold-start disjoint on {}, scaffold disjoint on {} fixtures",
        checked[0], checked[1], checked[2]
    ))
}

// ---------------------------------------------------------- end to end runs

/// Runs prepare, optimize, train and evaluate(test); returns the report JSON.
pub fn run_pipeline(cfg: &RunConfig) -> Result<String, String> {
    let ctx = RunContext::default();
    pipeline::prepare(cfg, &ctx).map_err(|e| format!("prepare: {e}"))?;
    pipeline::optimize(cfg, &ctx).map_err(|e| format!("optimize: {e}"))?;
    pipeline::train(cfg, &ctx).map_err(|e| format!("train: {e}"))?;
    pipeline::evaluate(cfg, &ctx, SplitPart::Test).map_err(|e| format!("evaluate: {e}"))?;
    std::fs::read_to_string(cfg.output_dir.join("report_test.json")).map_err(|e| e.to_string())
}

/// Generates the synthetic corpus into `dir` and loads its config with the
/// smoke search budget.
pub fn synthetic_config(dir: &Path, settings: &SynthSettings) -> Result<RunConfig, String> {
    let summary = generate(settings, dir).map_err(|e| e.to_string())?;
    let mut cfg = RunConfig::load(&summary.config).map_err(|e| e.to_string())?;
    cfg.search.optimizer = OptimizerSettings::smoke();
    cfg.materialize = true;
    Ok(cfg)
}

/// Planted-truth benchmark: full model quality and the gain over a model
/// trained without the clinical score on the same split and configuration.
pub fn synthetic_benchmark() -> Outcome {
    let started = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = synthetic_config(dir.path(), &SynthSettings::default())?;
    run_pipeline(&cfg)?;
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(cfg.output_dir.join("report_test.json")).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    let roc = report["roc_auc"]["value"].as_f64().ok_or("report lacks roc_auc")?;
    let pr = report["pr_auc"]["value"].as_f64().ok_or("report lacks pr_auc")?;

    let mut ablation = cfg.clone();
    ablation.use_rbscore = false;
    ablation.output_dir = dir.path().join("ablation");
    let ctx = RunContext::default();
    pipeline::prepare(&ablation, &ctx).map_err(|e| e.to_string())?;
    std::fs::copy(cfg.output_dir.join("best_config.json"), ablation.output_dir.join("best_config.json"))
        .map_err(|e| e.to_string())?;
    pipeline::train(&ablation, &ctx).map_err(|e| e.to_string())?;
    let ablated = pipeline::evaluate(&ablation, &ctx, SplitPart::Test).map_err(|e| e.to_string())?;
    let gain = roc - ablated.roc_auc.value;

    let took = within(Duration::from_secs(300), started)?;
    let summary = format!(
        "test ROC-AUC {roc:.4} (>= 0.90), PR-AUC {pr:.4} (>= 0.85), no-RBScore ROC-AUC {:.4}, gain {gain:.4} (>= 0.02), {took:.1?}",
        ablated.roc_auc.value
    );
    if roc >= 0.90 && pr >= 0.85 && gain >= 0.02 {
        Ok(summary)
    } else {
        Err(summary)
    }
}

/// Byte-identical test reports from repeated runs at 1 and 8 workers.
pub fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut base = synthetic_config(&dir.path().join("data"), &SynthSettings::default())?;
    base.search.seeds = vec![13];
    let mut reports = Vec::new();
    for (run, workers) in [(0, 1usize), (1, 8), (2, 8)] {
        let mut cfg = base.clone();
        cfg.output_dir = dir.path().join(format!("run-{run}"));
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| e.to_string())?;
        reports.push((workers, pool.install(|| run_pipeline(&cfg))?));
    }
    for (workers, report) in &reports[1..] {
        if report != &reports[0].1 {
            return Err(format!("report at {workers} workers differs from the 1-worker report"));
        }
    }
    Ok(format!(
        "3 runs (workers 1, 8, 8) produced identical {}-byte reports",
        reports[0].1.len()
    ))
}
