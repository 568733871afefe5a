use rand::Rng;
use rayon::prelude::*;

use super::table::InverseCdfTable;
use super::{check_grid, path_rng, PathSample};
use crate::bridges::{log_radial_bridge_density, BridgeConstruction, BridgeDensity, BridgeSpec};
use crate::error::{domain, Result};

/// Upper end of each table, in spreads beyond the centre of the step law.
const TABLE_REACH: f64 = 14.0;

/// Sequential inverse-CDF sampler for zero-endpoint bridges on radial bases.
///
/// The first step always leaves the origin, so its table is built once and
/// shared; later steps tabulate the closed-form bridge kernel afresh.
pub struct RadialBridgeSampler {
    bridge: BridgeDensity,
    a: f64,
    sigma: f64,
    grid: Vec<f64>,
    first: Option<InverseCdfTable>,
}

impl RadialBridgeSampler {
    pub fn new(spec: &BridgeSpec, grid: &[f64]) -> Result<Self> {
        let Some((a, sigma)) = spec.base().isotropic_params().filter(|_| spec.base().is_radial()) else {
            return domain(format!("{} is not a radial base", spec.base().name()));
        };
        if spec.start()[0] != 0.0 || !spec.has_zero_end() {
            return domain("the radial sampler expects a = b = 0");
        }
        check_grid(grid, spec.horizon())?;
        let bridge = BridgeDensity::new(spec.clone(), BridgeConstruction::ClosedForm)?;
        let mut out = Self {
            bridge,
            a,
            sigma,
            grid: grid.to_vec(),
            first: None,
        };
        if grid.len() > 2 {
            out.first = Some(out.table(grid[0], grid[1], 0.0)?);
        }
        Ok(out)
    }

    pub fn spec(&self) -> &BridgeSpec {
        self.bridge.spec()
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Inverse-CDF table of `y ↦ p_{s,t}(x, y)`.
    pub fn table(&self, s: f64, t: f64, x: f64) -> Result<InverseCdfTable> {
        let spec = self.bridge.spec();
        let (centre, spread) = self.bridge.location_hint(s, t, &[x])?;
        let (a, sigma, d, big_t) = (self.a, self.sigma, spec.base().dim(), spec.horizon());
        let f = |y: f64| {
            log_radial_bridge_density(a, sigma, d, big_t, s, t, x, y)
                .map(f64::exp)
                .unwrap_or(0.0)
        };
        InverseCdfTable::build(f, centre[0] + TABLE_REACH * spread)
    }

    /// Path number `path` of the run keyed by `seed`.
    pub fn sample(&self, seed: u64, path: u64) -> Result<PathSample> {
        let mut rng = path_rng(seed, path);
        let n = self.grid.len();
        let mut states = Vec::with_capacity(n);
        states.push(vec![0.0]);
        let mut x = 0.0;
        for i in 1..n - 1 {
            let u: f64 = rng.random();
            x = if i == 1 {
                self.first.as_ref().expect("built for grids with interior points").quantile(u)
            } else {
                self.table(self.grid[i - 1], self.grid[i], x)?.quantile(u)
            };
            states.push(vec![x]);
        }
        states.push(vec![0.0]);
        Ok(PathSample {
            seed,
            path,
            times: self.grid.clone(),
            states,
            radial: true,
        })
    }

    /// Paths `0..paths`, generated in parallel and returned in order.
    pub fn sample_many(&self, seed: u64, paths: u64) -> Result<Vec<PathSample>> {
        (0..paths).into_par_iter().map(|p| self.sample(seed, p)).collect()
    }

    /// Draws of `Y_t` for the first interior grid time, one per path.
    pub fn first_marginal(&self, seed: u64, paths: u64) -> Result<Vec<f64>> {
        let Some(table) = &self.first else {
            return domain("the grid has no interior point");
        };
        Ok((0..paths)
            .into_par_iter()
            .map(|p| table.quantile(path_rng(seed, p).random()))
            .collect())
    }
}

/// One zero-endpoint bridge path on a radial base.
pub fn sample_radial_bridge_path(spec: &BridgeSpec, grid: &[f64], seed: u64) -> Result<PathSample> {
    RadialBridgeSampler::new(spec, grid)?.sample(seed, 0)
}
