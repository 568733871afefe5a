//! Exact path samplers for bridges and Kolmogorov-Smirnov tests.
//!
//! Every path owns one RNG stream: ChaCha8 keyed by `seed`, with the stream
//! id set to the path index. Paths are therefore reproducible individually and
//! independent of how a batch is split across threads.

mod gaussian;
mod ks;
mod radial;
pub mod table;

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::bridges::BridgeSpec;
use crate::error::{domain, Result};

pub use gaussian::{sample_gaussian_bridge_path, GaussianBridgeSampler};
pub use ks::{kolmogorov_survival, ks_one_sample, ks_two_sample, KsResult};
pub use radial::{sample_radial_bridge_path, RadialBridgeSampler};
pub use table::InverseCdfTable;

/// RNG for path number `path` of the run keyed by `seed`.
pub fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

/// `n` equal steps on `[0, T]`, i.e. `n + 1` points with both ends exact.
pub fn uniform_grid(horizon: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 {
        return domain("a grid needs at least one step");
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return domain(format!("horizon must be positive, got {horizon}"));
    }
    let mut g: Vec<f64> = (0..=steps).map(|i| horizon * i as f64 / steps as f64).collect();
    g[steps] = horizon;
    Ok(g)
}

/// Checks that `grid` runs strictly upwards from 0 to `T`.
pub fn check_grid(grid: &[f64], horizon: f64) -> Result<()> {
    if grid.len() < 2 {
        return domain("a grid needs at least two points");
    }
    if grid[0] != 0.0 {
        return domain(format!("grid must start at 0, got {}", grid[0]));
    }
    if grid[grid.len() - 1] != horizon {
        return domain(format!("grid must end at T = {horizon}, got {}", grid[grid.len() - 1]));
    }
    if grid.iter().any(|t| !t.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return domain("grid must be strictly increasing");
    }
    Ok(())
}

/// One simulated trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSample {
    pub seed: u64,
    pub path: u64,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub radial: bool,
}

impl PathSample {
    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    /// State at grid index `i`.
    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i]
    }

    /// CSV with header `time,dim0,...` (or `time,r` for radial paths).
    ///
    /// Values use Rust's shortest round-trip formatting, which is locale independent.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time");
        if self.radial {
            out.push_str(",r");
        } else {
            for i in 0..self.dim() {
                write!(out, ",dim{i}").expect("writing to a string");
            }
        }
        out.push('\n');
        for (t, x) in self.times.iter().zip(&self.states) {
            write!(out, "{t:?}").expect("writing to a string");
            for v in x {
                write!(out, ",{v:?}").expect("writing to a string");
            }
            out.push('\n');
        }
        out
    }

    /// Sidecar metadata: seed, path index, bridge spec and grid.
    pub fn metadata(&self, spec: &BridgeSpec) -> Value {
        json!({
            "schema": 1,
            "seed": self.seed,
            "path": self.path,
            "spec": spec.describe(),
            "grid": self.times,
        })
    }
}

/// Samples `paths` bridge paths in parallel, choosing the sampler from the base.
pub fn sample_bridge_paths(spec: &BridgeSpec, grid: &[f64], seed: u64, paths: u64) -> Result<Vec<PathSample>> {
    if spec.base().is_gaussian() {
        GaussianBridgeSampler::new(spec, grid)?.sample_many(seed, paths)
    } else {
        RadialBridgeSampler::new(spec, grid)?.sample_many(seed, paths)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ProcessModel;
    use rand::Rng;

    #[test]
    fn grids() {
        let g = uniform_grid(2.0, 4).unwrap();
        assert_eq!(g, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert!(check_grid(&g, 2.0).is_ok());
        assert!(check_grid(&[0.0, 1.0, 1.0, 2.0], 2.0).is_err());
        assert!(check_grid(&[0.1, 2.0], 2.0).is_err());
        assert!(check_grid(&[0.0, 1.9], 2.0).is_err());
        assert!(check_grid(&[0.0], 2.0).is_err());
        assert!(uniform_grid(1.0, 0).is_err());
    }

    #[test]
    fn streams_differ_and_repeat() {
        let a: u64 = path_rng(7, 0).random();
        let b: u64 = path_rng(7, 1).random();
        let c: u64 = path_rng(7, 0).random();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn csv_layout() {
        let p = PathSample {
            seed: 1,
            path: 0,
            times: vec![0.0, 0.5, 1.0],
            states: vec![vec![0.0, 0.0], vec![0.25, -1.5], vec![0.0, 0.0]],
            radial: false,
        };
        assert_eq!(p.to_csv(), "time,dim0,dim1\n0.0,0.0,0.0\n0.5,0.25,-1.5\n1.0,0.0,0.0\n");
        let r = PathSample {
            radial: true,
            states: vec![vec![0.0], vec![0.3], vec![0.0]],
            ..p
        };
        assert!(r.to_csv().starts_with("time,r\n"));
        let spec = BridgeSpec::zero(ProcessModel::bessel(3).unwrap(), 1.0).unwrap();
        assert_eq!(r.metadata(&spec)["grid"][1], 0.5);
    }
}
