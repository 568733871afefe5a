use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{check_grid, path_rng, PathSample};
use crate::bridges::{gaussian_bridge_step, BridgeSpec};
use crate::error::{domain, Result};

struct Step {
    mean_map: DMatrix<f64>,
    offset: DVector<f64>,
    factor: DMatrix<f64>,
}

/// Sequential sampler for bridges on Gaussian bases.
///
/// Each step draws from the exact conditional law `N(Mx + c, C)` of the bridge
/// kernel; the final state is set to the endpoint.
pub struct GaussianBridgeSampler {
    spec: BridgeSpec,
    grid: Vec<f64>,
    steps: Vec<Step>,
}

impl GaussianBridgeSampler {
    pub fn new(spec: &BridgeSpec, grid: &[f64]) -> Result<Self> {
        if !spec.base().is_gaussian() {
            return domain(format!("{} is not a Gaussian base", spec.base().name()));
        }
        check_grid(grid, spec.horizon())?;
        let n = grid.len();
        let steps = grid[..n - 1]
            .windows(2)
            .map(|w| {
                let g = gaussian_bridge_step(spec, w[0], w[1])?;
                Ok(Step {
                    factor: g.covariance.cholesky().l(),
                    mean_map: g.mean_map,
                    offset: g.offset,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            spec: spec.clone(),
            grid: grid.to_vec(),
            steps,
        })
    }

    pub fn spec(&self) -> &BridgeSpec {
        &self.spec
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Path number `path` of the run keyed by `seed`.
    pub fn sample(&self, seed: u64, path: u64) -> PathSample {
        let mut rng = path_rng(seed, path);
        let d = self.spec.base().dim();
        let mut states = Vec::with_capacity(self.grid.len());
        let mut x = DVector::from_column_slice(self.spec.start());
        states.push(self.spec.start().to_vec());
        for step in &self.steps {
            let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
            x = &step.mean_map * &x + &step.offset + &step.factor * z;
            states.push(x.iter().copied().collect());
        }
        states.push(self.spec.end().to_vec());
        PathSample {
            seed,
            path,
            times: self.grid.clone(),
            states,
            radial: false,
        }
    }

    /// Paths `0..paths`, generated in parallel and returned in order.
    pub fn sample_many(&self, seed: u64, paths: u64) -> Result<Vec<PathSample>> {
        Ok((0..paths).into_par_iter().map(|p| self.sample(seed, p)).collect())
    }
}

/// One bridge path on a Gaussian base with `a = b = 0`.
pub fn sample_gaussian_bridge_path(spec: &BridgeSpec, grid: &[f64], seed: u64) -> Result<PathSample> {
    if spec.start().iter().chain(spec.end()).any(|&v| v != 0.0) {
        return domain("the path sampler expects a = b = 0");
    }
    Ok(GaussianBridgeSampler::new(spec, grid)?.sample(seed, 0))
}
