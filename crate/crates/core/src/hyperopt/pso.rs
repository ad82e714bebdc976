use rand::Rng;
use serde::{Deserialize, Serialize};

/// Inertia and acceleration coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsoParams {
    pub w: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Default for PsoParams {
    fn default() -> Self {
        PsoParams {
            w: 0.8,
            c1: 1.2,
            c2: 1.6,
        }
    }
}

/// Velocity bound in normalized coordinates (the full range width).
pub const MAX_VELOCITY: f64 = 1.0;

/// One coordinate update: `v' = w v + c1 r1 (p - x) + c2 r2 (g - x)`,
/// `x' = x + v'`, velocity clamped to the range width and position to `[0, 1]`.
pub fn velocity_update(params: PsoParams, v: f64, x: f64, p: f64, g: f64, r1: f64, r2: f64) -> (f64, f64) {
    let v_new = (params.w * v + params.c1 * r1 * (p - x) + params.c2 * r2 * (g - x)).clamp(-MAX_VELOCITY, MAX_VELOCITY);
    (v_new, (x + v_new).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub best_position: Vec<f64>,
    pub best_fitness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Swarm {
    pub particles: Vec<Particle>,
    pub global_best: Vec<f64>,
    pub global_best_fitness: f64,
    pub params: PsoParams,
}

impl Swarm {
    /// Particles at uniform random positions with zero velocity; the global
    /// best starts at the supplied incumbent.
    pub fn new<R: Rng>(
        n_particles: usize,
        incumbent: Vec<f64>,
        incumbent_fitness: f64,
        params: PsoParams,
        rng: &mut R,
    ) -> Swarm {
        let dims = incumbent.len();
        let particles = (0..n_particles)
            .map(|_| {
                let position: Vec<f64> = (0..dims).map(|_| rng.random::<f64>()).collect();
                Particle {
                    best_position: position.clone(),
                    velocity: vec![0.0; dims],
                    position,
                    best_fitness: f64::NEG_INFINITY,
                }
            })
            .collect();
        Swarm {
            particles,
            global_best: incumbent,
            global_best_fitness: incumbent_fitness,
            params,
        }
    }

    /// Moves every particle with the given random coefficients, indexed
    /// `[particle][dimension]`.
    pub fn step(&mut self, r1: &[Vec<f64>], r2: &[Vec<f64>]) {
        for (i, p) in self.particles.iter_mut().enumerate() {
            for d in 0..p.position.len() {
                let (v, x) = velocity_update(
                    self.params,
                    p.velocity[d],
                    p.position[d],
                    p.best_position[d],
                    self.global_best[d],
                    r1[i][d],
                    r2[i][d],
                );
                p.velocity[d] = v;
                p.position[d] = x;
            }
        }
    }

    /// Draws fresh coefficients and moves every particle.
    pub fn step_random<R: Rng>(&mut self, rng: &mut R) {
        let dims = self.global_best.len();
        let n = self.particles.len();
        let draw = |rng: &mut R| -> Vec<Vec<f64>> {
            (0..n).map(|_| (0..dims).map(|_| rng.random::<f64>()).collect()).collect()
        };
        let r1 = draw(rng);
        let r2 = draw(rng);
        self.step(&r1, &r2);
    }

    /// Records fitnesses of the current positions; returns the index of the
    /// particle that improved the global best, if any.
    pub fn commit(&mut self, fitnesses: &[f64]) -> Option<usize> {
        let mut improved = None;
        for (i, (p, &f)) in self.particles.iter_mut().zip(fitnesses).enumerate() {
            if f > p.best_fitness {
                p.best_fitness = f;
                p.best_position = p.position.clone();
            }
            if f > self.global_best_fitness {
                self.global_best_fitness = f;
                self.global_best = p.position.clone();
                improved = Some(i);
            }
        }
        improved
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_point() {
        assert_eq!(velocity_update(PsoParams::default(), 0.0, 0.4, 0.4, 0.4, 0.7, 0.2), (0.0, 0.4));
    }

    #[test]
    fn hand_example_clamps_to_upper_bound() {
        let (v, x) = velocity_update(PsoParams::default(), 0.1, 0.5, 0.6, 0.7, 1.0, 1.0);
        assert_eq!(v, 0.8 * 0.1 + 1.2 * (0.6 - 0.5) + 1.6 * (0.7 - 0.5));
        assert!((v - 0.52).abs() <= 2.0 * f64::EPSILON);
        assert_eq!(x, 1.0);
    }

    #[test]
    fn velocity_is_clamped() {
        let (v, x) = velocity_update(PsoParams::default(), 0.9, 0.0, 1.0, 1.0, 1.0, 1.0);
        assert_eq!((v, x), (MAX_VELOCITY, 1.0));
    }

    #[test]
    fn commit_tracks_bests() {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(2);
        let mut s = Swarm::new(3, vec![0.5, 0.5], 0.1, PsoParams::default(), &mut rng);
        assert_eq!(s.commit(&[0.0, 0.3, 0.2]), Some(1));
        assert_eq!(s.global_best_fitness, 0.3);
        assert_eq!(s.global_best, s.particles[1].position);
        assert_eq!(s.particles[0].best_fitness, 0.0);
        s.step_random(&mut rng);
        for p in &s.particles {
            assert!(p.position.iter().all(|x| (0.0..=1.0).contains(x)));
        }
    }
}
