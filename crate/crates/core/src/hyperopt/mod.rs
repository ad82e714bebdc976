//! Three-stage hyperparameter search: random sampling seeds an ant colony
//! over the discrete dimensions, then a particle swarm refines the
//! continuous ones with the discrete choice frozen.
//!
//! Fitness is any deterministic function of the decoded hyperparameters,
//! higher is better. Within an iteration agents are evaluated in parallel and
//! committed in agent order, so the run is independent of thread scheduling.

mod aco;
mod optimizer;
mod pso;
mod space;
mod surrogate;

use serde::{Deserialize, Serialize};

pub use aco::{transition_probabilities, PheromoneMatrix, PHEROMONE_FLOOR};
pub use optimizer::{optimize, write_log_csv, Evaluation, OptimizeOutcome, Phase};
pub use pso::{velocity_update, Particle, PsoParams, Swarm, MAX_VELOCITY};
pub use space::{Candidate, HyperParams, SearchSpace, DISCRETE_DIMS};
pub use surrogate::SurrogateFitness;

#[derive(Debug, thiserror::Error)]
pub enum HyperoptError {
    #[error("invalid optimizer settings: {0}")]
    InvalidSettings(String),
    #[error("fitness evaluation failed on {failed} of {total} evaluations; last error: {last_error}")]
    SystematicFailure {
        failed: usize,
        total: usize,
        last_error: String,
    },
}

/// Per-option heuristic desirability used by the ant colony.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeuristicMode {
    /// Every option equally desirable; pheromone alone guides the ants.
    #[default]
    Uniform,
    /// Desirability of an option is the mean fitness observed with it.
    RunningMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcoSettings {
    pub ants: usize,
    pub iterations: usize,
    pub alpha: f64,
    pub beta: f64,
    pub rho: f64,
    /// Standard deviation of the continuous perturbation around the incumbent,
    /// in normalized coordinates.
    pub sigma: f64,
    pub heuristic: HeuristicMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsoSettings {
    pub particles: usize,
    pub iterations: usize,
    #[serde(flatten)]
    pub params: PsoParams,
}

/// Budgets and coefficients of a search run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSettings {
    pub rsmpl_configs: usize,
    /// How many of the best random samples seed the pheromones.
    pub rsmpl_top_k: usize,
    pub aco: AcoSettings,
    pub pso: PsoSettings,
    /// A phase stops after `patience` iterations without a gain of at least `min_gain`.
    pub min_gain: f64,
    pub patience: usize,
}

impl OptimizerSettings {
    /// The published budget: 30 random samples, 20 ants and 20 particles for
    /// up to 25 iterations each.
    pub fn full() -> Self {
        OptimizerSettings {
            rsmpl_configs: 30,
            rsmpl_top_k: 5,
            aco: AcoSettings {
                ants: 20,
                iterations: 25,
                alpha: 1.0,
                beta: 2.0,
                rho: 0.2,
                sigma: 0.1,
                heuristic: HeuristicMode::Uniform,
            },
            pso: PsoSettings {
                particles: 20,
                iterations: 25,
                params: PsoParams::default(),
            },
            min_gain: 0.002,
            patience: 5,
        }
    }

    /// A tiny budget for smoke runs: 3 random samples, 2 ants and 2 particles
    /// for 2 iterations each.
    pub fn smoke() -> Self {
        let mut s = Self::full();
        s.rsmpl_configs = 3;
        s.rsmpl_top_k = 3;
        s.aco.ants = 2;
        s.aco.iterations = 2;
        s.pso.particles = 2;
        s.pso.iterations = 2;
        s
    }

    /// Upper bound on logged evaluations.
    pub fn max_evaluations(&self) -> usize {
        self.rsmpl_configs + self.aco.ants * self.aco.iterations + self.pso.particles * self.pso.iterations
    }

    pub fn validate(&self) -> Result<(), HyperoptError> {
        let bad = |m: &str| Err(HyperoptError::InvalidSettings(m.to_string()));
        if self.rsmpl_configs == 0 {
            return bad("rsmpl_configs must be at least 1");
        }
        if self.rsmpl_top_k == 0 {
            return bad("rsmpl_top_k must be at least 1");
        }
        if self.aco.ants == 0 || self.pso.particles == 0 {
            return bad("ants and particles must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.aco.rho) {
            return bad("rho must lie in [0, 1]");
        }
        if !(self.aco.alpha >= 0.0 && self.aco.beta >= 0.0) {
            return bad("alpha and beta must be non-negative");
        }
        if !(self.aco.sigma >= 0.0 && self.aco.sigma.is_finite()) {
            return bad("sigma must be a non-negative number");
        }
        let p = self.pso.params;
        if ![p.w, p.c1, p.c2].iter().all(|v| v.is_finite()) {
            return bad("PSO coefficients must be finite");
        }
        if !(self.min_gain >= 0.0 && self.min_gain.is_finite()) {
            return bad("min_gain must be a non-negative number");
        }
        if self.patience == 0 {
            return bad("patience must be at least 1");
        }
        Ok(())
    }
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self::full()
    }
}

/// Stagnation tracking for one phase: the reference moves only on a gain of
/// at least `min_gain`, and the phase ends after `patience` iterations
/// without one.
#[derive(Debug, Clone)]
pub(crate) struct Stagnation {
    reference: f64,
    stale: usize,
    min_gain: f64,
    patience: usize,
}

impl Stagnation {
    pub(crate) fn new(best_at_start: f64, min_gain: f64, patience: usize) -> Self {
        Stagnation {
            reference: best_at_start,
            stale: 0,
            min_gain,
            patience,
        }
    }

    /// Records the best fitness after an iteration; true when the phase should stop.
    pub(crate) fn observe(&mut self, best: f64) -> bool {
        if best - self.reference >= self.min_gain {
            self.reference = best;
            self.stale = 0;
        } else {
            self.stale += 1;
        }
        self.stale >= self.patience
    }
}
