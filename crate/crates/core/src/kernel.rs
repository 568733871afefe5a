//! The common evaluation interface shared by base processes and bridges.

use serde::Serialize;

use crate::error::Result;

/// State space of a process, always with Lebesgue reference measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StateSpace {
    /// `ℝ^d`.
    Euclidean(usize),
    /// `[0, ∞)`.
    HalfLine,
}

impl StateSpace {
    pub fn dim(self) -> usize {
        match self {
            StateSpace::Euclidean(d) => d,
            StateSpace::HalfLine => 1,
        }
    }

    /// Exact membership test; no tolerance is applied at the boundary.
    pub fn contains(self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().all(|v| v.is_finite())
            && match self {
                StateSpace::Euclidean(_) => true,
                StateSpace::HalfLine => x[0] >= 0.0,
            }
    }
}

/// A transition density frozen at a pair of times, `y ↦ p_{s,t}(x, y)`.
///
/// States are assumed to lie in the state space; validation happens where the
/// transition is built or in the public density entry points.
pub trait Transition: Send + Sync {
    /// Natural log of the density; `-∞` where the density vanishes.
    fn log_density(&self, x: &[f64], y: &[f64]) -> f64;

    fn density(&self, x: &[f64], y: &[f64]) -> f64 {
        self.log_density(x, y).exp()
    }

    /// A point near which `y ↦ p(x, y)` carries its mass.
    fn location(&self, x: &[f64]) -> Vec<f64>;

    /// Per-coordinate standard-deviation scale of `y ↦ p(x, y)`.
    fn spread(&self) -> f64;
}

/// A (possibly time-inhomogeneous) Markov transition kernel `p_{s,t}(x, y)`.
///
/// Time-homogeneous processes depend on `t - s` only.
pub trait MarkovKernel: Send + Sync {
    fn state_space(&self) -> StateSpace;

    /// Freezes the kernel on `s < t`.
    fn transition(&self, s: f64, t: f64) -> Result<Box<dyn Transition + '_>>;

    /// Short human-readable name used in reports.
    fn label(&self) -> String;
}
