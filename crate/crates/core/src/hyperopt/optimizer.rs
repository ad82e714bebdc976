use std::collections::HashMap;
use std::io::Write;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    Candidate, HeuristicMode, HyperParams, HyperoptError, OptimizerSettings, PheromoneMatrix, SearchSpace,
    Stagnation, Swarm, DISCRETE_DIMS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Rsmpl,
    Aco,
    Pso,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Rsmpl => "rsmpl",
            Phase::Aco => "aco",
            Phase::Pso => "pso",
        }
    }
}

/// One row of the evaluation log. Failed evaluations carry fitness `-inf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub phase: Phase,
    pub iteration: usize,
    pub agent: usize,
    pub params: HyperParams,
    pub fitness: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeOutcome {
    pub best: HyperParams,
    pub best_candidate: Candidate,
    pub best_fitness: f64,
    pub log: Vec<Evaluation>,
    pub aco_iterations: usize,
    pub pso_iterations: usize,
}

struct Runner<'a, F> {
    space: &'a SearchSpace,
    fitness: &'a F,
    cache: HashMap<String, f64>,
    log: Vec<Evaluation>,
    failures: usize,
    last_error: String,
    best: Option<(Candidate, f64)>,
}

impl<F> Runner<'_, F>
where
    F: Fn(&HyperParams) -> Result<f64, String> + Sync,
{
    /// Evaluates one iteration's agents. Uncached configurations run in
    /// parallel; results are committed in agent order.
    fn evaluate_batch(
        &mut self,
        phase: Phase,
        iteration: usize,
        candidates: &[Candidate],
    ) -> Result<Vec<f64>, HyperoptError> {
        let params: Vec<HyperParams> = candidates.iter().map(|c| self.space.decode(c)).collect();
        let keys: Vec<String> = params.iter().map(HyperParams::canonical_json).collect();
        let mut pending: Vec<usize> = Vec::new();
        for (i, k) in keys.iter().enumerate() {
            if !self.cache.contains_key(k) && !pending.iter().any(|&j| keys[j] == *k) {
                pending.push(i);
            }
        }
        let fitness = self.fitness;
        let fresh: Vec<(usize, Result<f64, String>, f64)> = pending
            .par_iter()
            .map(|&i| {
                let start = Instant::now();
                let result = fitness(&params[i]).and_then(|f| {
                    if f.is_nan() {
                        Err("fitness is NaN".to_string())
                    } else {
                        Ok(f)
                    }
                });
                (i, result, start.elapsed().as_secs_f64())
            })
            .collect();
        let mut seconds = vec![0.0; candidates.len()];
        for (i, result, secs) in fresh {
            seconds[i] = secs;
            let value = match result {
                Ok(f) => f,
                Err(e) => {
                    log::warn!("{} iteration {iteration} agent {i}: {e}", phase.as_str());
                    self.last_error = e;
                    f64::NEG_INFINITY
                }
            };
            self.cache.insert(keys[i].clone(), value);
        }

        let mut out = Vec::with_capacity(candidates.len());
        for (agent, (c, p)) in candidates.iter().zip(params).enumerate() {
            let f = self.cache[&keys[agent]];
            if f == f64::NEG_INFINITY {
                self.failures += 1;
            }
            if self.best.as_ref().is_none_or(|(_, b)| f > *b) {
                self.best = Some((c.clone(), f));
            }
            self.log.push(Evaluation {
                phase,
                iteration,
                agent,
                params: p,
                fitness: f,
                seconds: seconds[agent],
            });
            out.push(f);
        }
        if self.failures * 2 > self.log.len() {
            return Err(HyperoptError::SystematicFailure {
                failed: self.failures,
                total: self.log.len(),
                last_error: self.last_error.clone(),
            });
        }
        Ok(out)
    }

    fn best(&self) -> (Candidate, f64) {
        self.best.clone().expect("at least one evaluation committed")
    }
}

/// Runs random sampling, the ant colony phase and the particle swarm phase
/// in sequence and returns the best configuration with the full log.
///
/// All randomness derives from `seed`; with a deterministic fitness the log
/// (apart from wall-clock seconds) is reproducible.
pub fn optimize<F>(
    space: &SearchSpace,
    fitness: &F,
    settings: &OptimizerSettings,
    seed: u64,
) -> Result<OptimizeOutcome, HyperoptError>
where
    F: Fn(&HyperParams) -> Result<f64, String> + Sync,
{
    settings.validate()?;
    space.validate().map_err(HyperoptError::InvalidSettings)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut runner = Runner {
        space,
        fitness,
        cache: HashMap::new(),
        log: Vec::new(),
        failures: 0,
        last_error: String::new(),
        best: None,
    };

    // Random sampling; the best few seed the pheromones.
    let samples: Vec<Candidate> = (0..settings.rsmpl_configs).map(|_| space.sample(&mut rng)).collect();
    let fits = runner.evaluate_batch(super::Phase::Rsmpl, 1, &samples)?;
    let mut ranked: Vec<(usize, f64)> = fits.iter().copied().enumerate().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    let counts = space.option_counts();
    let aco = &settings.aco;
    let mut pheromones = PheromoneMatrix::new(&counts, aco.alpha, aco.beta, aco.rho);
    for &(i, f) in ranked.iter().take(settings.rsmpl_top_k) {
        pheromones.deposit(&samples[i].discrete, f);
    }
    log::info!("rsmpl: best fitness {:.6}", runner.best().1);

    // Ant colony over the discrete dimensions.
    let normal = Normal::new(0.0, aco.sigma).expect("sigma validated");
    let mut option_sums = counts.map(|n| vec![(0.0, 0usize); n]);
    let mut stagnation = Stagnation::new(runner.best().1, settings.min_gain, settings.patience);
    let mut aco_iterations = 0;
    for iteration in 1..=aco.iterations {
        aco_iterations = iteration;
        let (incumbent, _) = runner.best();
        let ants: Vec<Candidate> = (0..aco.ants)
            .map(|_| {
                let path = pheromones.sample(&mut rng);
                let mut discrete = [0; DISCRETE_DIMS];
                discrete.copy_from_slice(&path);
                let continuous = incumbent
                    .continuous
                    .iter()
                    .map(|z| (z + normal.sample(&mut rng)).clamp(0.0, 1.0))
                    .collect();
                Candidate { discrete, continuous }
            })
            .collect();
        let fits = runner.evaluate_batch(super::Phase::Aco, iteration, &ants)?;
        if aco.heuristic == HeuristicMode::RunningMean {
            for (ant, &f) in ants.iter().zip(&fits) {
                if f.is_finite() {
                    for (d, &o) in ant.discrete.iter().enumerate() {
                        option_sums[d][o].0 += f;
                        option_sums[d][o].1 += 1;
                    }
                }
            }
            for (d, sums) in option_sums.iter().enumerate() {
                for (o, &(sum, n)) in sums.iter().enumerate() {
                    if n > 0 {
                        pheromones.set_eta(d, o, sum / n as f64);
                    }
                }
            }
        }
        let (best, best_fitness) = runner.best();
        pheromones.evaporate_and_reinforce(&best.discrete, best_fitness);
        if stagnation.observe(best_fitness) {
            log::info!("aco: stagnated after iteration {iteration}");
            break;
        }
    }
    log::info!("aco: best fitness {:.6}", runner.best().1);

    // Particle swarm over the continuous dimensions, discrete choice frozen.
    let (incumbent, incumbent_fitness) = runner.best();
    let frozen = incumbent.discrete;
    let mut swarm = Swarm::new(
        settings.pso.particles,
        incumbent.continuous.clone(),
        incumbent_fitness,
        settings.pso.params,
        &mut rng,
    );
    let mut stagnation = Stagnation::new(incumbent_fitness, settings.min_gain, settings.patience);
    let mut pso_iterations = 0;
    for iteration in 1..=settings.pso.iterations {
        pso_iterations = iteration;
        if iteration > 1 {
            swarm.step_random(&mut rng);
        }
        let agents: Vec<Candidate> = swarm
            .particles
            .iter()
            .map(|p| Candidate {
                discrete: frozen,
                continuous: p.position.clone(),
            })
            .collect();
        let fits = runner.evaluate_batch(super::Phase::Pso, iteration, &agents)?;
        swarm.commit(&fits);
        if stagnation.observe(runner.best().1) {
            log::info!("pso: stagnated after iteration {iteration}");
            break;
        }
    }

    let (best_candidate, best_fitness) = runner.best();
    log::info!("pso: best fitness {best_fitness:.6}");
    Ok(OptimizeOutcome {
        best: space.decode(&best_candidate),
        best_candidate,
        best_fitness,
        log: runner.log,
        aco_iterations,
        pso_iterations,
    })
}

/// Writes the log as CSV `phase,iteration,agent,config_json,fitness,seconds`.
pub fn write_log_csv<W: Write>(log: &[Evaluation], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["phase", "iteration", "agent", "config_json", "fitness", "seconds"])?;
    for e in log {
        w.write_record([
            e.phase.as_str().to_string(),
            e.iteration.to_string(),
            e.agent.to_string(),
            e.params.canonical_json(),
            e.fitness.to_string(),
            format!("{:.6}", e.seconds),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperopt::SurrogateFitness;
    use crate::mlp::MlpConfig;

    fn surrogate() -> (SearchSpace, SurrogateFitness) {
        let space = SearchSpace::default();
        let optimum = space.encode(&HyperParams::from_mlp_config(&MlpConfig::default())).unwrap();
        (space.clone(), SurrogateFitness::new(space, optimum))
    }

    #[test]
    fn constant_fitness_stops_each_phase_after_patience() {
        let space = SearchSpace::default();
        let out = optimize(&space, &|_: &HyperParams| Ok(0.7), &OptimizerSettings::full(), 13).unwrap();
        assert_eq!((out.aco_iterations, out.pso_iterations), (5, 5));
        assert_eq!(out.log.len(), 30 + 100 + 100);
    }

    #[test]
    fn deterministic_log() {
        let (space, s) = surrogate();
        let f = |p: &HyperParams| s.evaluate(p);
        let strip = |o: OptimizeOutcome| -> Vec<(Phase, usize, usize, String, f64)> {
            o.log
                .into_iter()
                .map(|e| (e.phase, e.iteration, e.agent, e.params.canonical_json(), e.fitness))
                .collect()
        };
        let a = optimize(&space, &f, &OptimizerSettings::full(), 29).unwrap();
        let b = optimize(&space, &f, &OptimizerSettings::full(), 29).unwrap();
        assert_eq!(a.best, b.best);
        assert_eq!(strip(a), strip(b));
    }

    #[test]
    fn best_is_monotone_along_the_log() {
        let (space, s) = surrogate();
        let out = optimize(&space, &|p: &HyperParams| s.evaluate(p), &OptimizerSettings::full(), 47).unwrap();
        let max = out.log.iter().map(|e| e.fitness).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(out.best_fitness, max);
    }

    #[test]
    fn systematic_failure_aborts() {
        let space = SearchSpace::default();
        let err = optimize(
            &space,
            &|_: &HyperParams| Err("boom".to_string()),
            &OptimizerSettings::smoke(),
            1,
        )
        .unwrap_err();
        assert!(matches!(err, HyperoptError::SystematicFailure { failed: 3, total: 3, .. }));
    }

    #[test]
    fn occasional_failures_are_skipped() {
        let space = SearchSpace::default();
        let f = |p: &HyperParams| {
            if p.batch_size == 32 && p.hidden_layers == 1 {
                Err("diverged".to_string())
            } else {
                Ok(p.dropout)
            }
        };
        let out = optimize(&space, &f, &OptimizerSettings::full(), 5).unwrap();
        assert!(out.best_fitness.is_finite());
        assert!(out.log.iter().all(|e| e.fitness.is_finite() || e.fitness == f64::NEG_INFINITY));
    }

    #[test]
    fn smoke_budget_bounds_log() {
        let (space, s) = surrogate();
        let out = optimize(&space, &|p: &HyperParams| s.evaluate(p), &OptimizerSettings::smoke(), 3).unwrap();
        assert!(out.log.len() <= OptimizerSettings::smoke().max_evaluations());
        let mut buf = Vec::new();
        write_log_csv(&out.log, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("phase,iteration,agent,config_json,fitness,seconds\n"));
        assert_eq!(text.lines().count(), out.log.len() + 1);
    }
}
