use super::{Candidate, HyperParams, SearchSpace};

/// Instant stand-in fitness for exercising the optimizer:
/// `1 - squared distance` to a known optimum in normalized coordinates, with
/// discrete options placed evenly on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct SurrogateFitness {
    space: SearchSpace,
    optimum: Candidate,
}

impl SurrogateFitness {
    pub fn new(space: SearchSpace, optimum: Candidate) -> Self {
        SurrogateFitness { space, optimum }
    }

    pub fn optimum(&self) -> &Candidate {
        &self.optimum
    }

    pub fn evaluate(&self, params: &HyperParams) -> Result<f64, String> {
        let c = self
            .space
            .encode(params)
            .ok_or_else(|| "hyperparameters outside the search space".to_string())?;
        let mut dist = 0.0;
        for d in 0..c.discrete.len() {
            let diff = self.space.discrete_coordinate(d, c.discrete[d])
                - self.space.discrete_coordinate(d, self.optimum.discrete[d]);
            dist += diff * diff;
        }
        for (z, z_opt) in c.continuous.iter().zip(&self.optimum.continuous) {
            dist += (z - z_opt) * (z - z_opt);
        }
        Ok(1.0 - dist)
    }
}
