use rand::Rng;

/// Lower bound kept on every pheromone and heuristic value.
pub const PHEROMONE_FLOOR: f64 = 1e-6;

/// Selection probabilities `tau^alpha * eta^beta`, normalized over the options.
pub fn transition_probabilities(tau: &[f64], eta: &[f64], alpha: f64, beta: f64) -> Vec<f64> {
    assert_eq!(tau.len(), eta.len(), "pheromone and heuristic vectors differ in length");
    let weights: Vec<f64> = tau
        .iter()
        .zip(eta)
        .map(|(&t, &e)| t.powf(alpha) * e.powf(beta))
        .collect();
    let total: f64 = weights.iter().sum();
    weights.iter().map(|w| w / total).collect()
}

/// Draws an index from a probability vector.
fn draw<R: Rng>(probs: &[f64], rng: &mut R) -> usize {
    let u = rng.random::<f64>();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Pheromone and heuristic values for every option of every discrete dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct PheromoneMatrix {
    tau: Vec<Vec<f64>>,
    eta: Vec<Vec<f64>>,
    pub alpha: f64,
    pub beta: f64,
    pub rho: f64,
}

impl PheromoneMatrix {
    /// All pheromones and heuristics start at 1.
    pub fn new(option_counts: &[usize], alpha: f64, beta: f64, rho: f64) -> Self {
        PheromoneMatrix {
            tau: option_counts.iter().map(|&n| vec![1.0; n]).collect(),
            eta: option_counts.iter().map(|&n| vec![1.0; n]).collect(),
            alpha,
            beta,
            rho,
        }
    }

    pub fn tau(&self, dim: usize) -> &[f64] {
        &self.tau[dim]
    }

    pub fn eta(&self, dim: usize) -> &[f64] {
        &self.eta[dim]
    }

    pub fn set_eta(&mut self, dim: usize, option: usize, value: f64) {
        self.eta[dim][option] = value.max(PHEROMONE_FLOOR);
    }

    pub fn probabilities(&self, dim: usize) -> Vec<f64> {
        transition_probabilities(&self.tau[dim], &self.eta[dim], self.alpha, self.beta)
    }

    /// One option per dimension, each drawn from its transition probabilities.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<usize> {
        (0..self.tau.len()).map(|d| draw(&self.probabilities(d), rng)).collect()
    }

    /// Adds `amount` to the options of `path`. Non-positive amounts deposit nothing.
    pub fn deposit(&mut self, path: &[usize], amount: f64) {
        if amount > 0.0 {
            for (d, &o) in path.iter().enumerate() {
                self.tau[d][o] += amount;
            }
        }
    }

    /// Evaporation `tau <- (1 - rho) * tau` on every option, then the global
    /// best deposits its fitness on the options it uses.
    pub fn evaporate_and_reinforce(&mut self, best: &[usize], best_fitness: f64) {
        for row in &mut self.tau {
            for t in row.iter_mut() {
                *t *= 1.0 - self.rho;
            }
        }
        self.deposit(best, best_fitness);
        for row in &mut self.tau {
            for t in row.iter_mut() {
                *t = t.max(PHEROMONE_FLOOR);
            }
        }
    }

    pub fn min_tau(&self) -> f64 {
        self.tau.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn probability_examples() {
        assert_eq!(transition_probabilities(&[1.0, 1.0], &[1.0, 1.0], 1.0, 2.0), vec![0.5, 0.5]);
        assert_eq!(
            transition_probabilities(&[1.0, 2.0], &[1.0, 1.0], 1.0, 2.0),
            vec![1.0 / 3.0, 2.0 / 3.0]
        );
        assert_eq!(
            transition_probabilities(&[0.3, 7.0, 2.0], &[4.0, 1.0, 0.5], 0.0, 0.0),
            vec![1.0 / 3.0; 3]
        );
    }

    #[test]
    fn evaporation_examples() {
        let mut m = PheromoneMatrix::new(&[2], 1.0, 2.0, 0.2);
        m.evaporate_and_reinforce(&[0], 0.9);
        assert_eq!(m.tau(0)[1], 0.8);
        assert_eq!(m.tau(0)[0], 0.8 + 0.9);
        assert!((m.tau(0)[0] - 1.7).abs() <= 2.0 * f64::EPSILON);
    }

    #[test]
    fn floor_holds_under_long_evaporation() {
        let mut m = PheromoneMatrix::new(&[3, 2], 1.0, 2.0, 0.9);
        for _ in 0..200 {
            m.evaporate_and_reinforce(&[0, 0], -1.0);
        }
        assert_eq!(m.min_tau(), PHEROMONE_FLOOR);
        let p = m.probabilities(0);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampling_follows_pheromone() {
        let mut m = PheromoneMatrix::new(&[2], 1.0, 1.0, 0.2);
        m.deposit(&[1], 9.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let hits = (0..10_000).filter(|_| m.sample(&mut rng)[0] == 1).count();
        assert!((hits as f64 / 10_000.0 - 0.9).abs() < 0.02, "{hits}");
    }
}
