//! Inverse-CDF tables for densities on `[0, ∞)`.

use crate::error::{Error, Result};
use crate::verify::quadrature::gauss_kronrod_15;

/// Cells of the coarse pass that locates the mass.
pub const COARSE_CELLS: usize = 256;
/// Target node count of the refined table.
pub const NODES: usize = 2048;
/// Largest accepted deviation of the tabulated total mass from 1.
pub const MASS_TOLERANCE: f64 = 1e-7;

/// Tabulated CDF with monotone cubic Hermite interpolation.
///
/// Nodes are half quantile-spaced (from a coarse pass) and half uniform on
/// `[0, upper]`; cell masses come from 15-point Gauss-Kronrod panels and the
/// node slopes are the density values, clamped per cell so the interpolant
/// stays monotone.
#[derive(Debug, Clone)]
pub struct InverseCdfTable {
    nodes: Vec<f64>,
    cdf: Vec<f64>,
    slopes: Vec<f64>,
    mass: f64,
}

impl InverseCdfTable {
    /// Tabulates `f` on `[0, upper]`.
    pub fn build<F: Fn(f64) -> f64>(f: F, upper: f64) -> Result<Self> {
        if !(upper > 0.0) || !upper.is_finite() {
            return Err(Error::Domain(format!("table range must be positive, got {upper}")));
        }
        let h = upper / COARSE_CELLS as f64;
        let mut coarse = vec![0.0; COARSE_CELLS + 1];
        for i in 0..COARSE_CELLS {
            let (v, _) = gauss_kronrod_15(&f, i as f64 * h, (i + 1) as f64 * h);
            coarse[i + 1] = coarse[i] + v.max(0.0);
        }
        let coarse_mass = coarse[COARSE_CELLS];
        if !(coarse_mass > 0.0) || !coarse_mass.is_finite() {
            return Err(Error::Computation {
                message: "density has no mass on the tabulation range".into(),
                primary: coarse_mass,
                reference: 1.0,
            });
        }
        let half = NODES / 2;
        let mut nodes = Vec::with_capacity(NODES + 2);
        for i in 0..=half {
            nodes.push(upper * i as f64 / half as f64);
        }
        let mut cell = 0;
        for i in 1..half {
            let p = coarse_mass * i as f64 / half as f64;
            while cell + 1 < COARSE_CELLS && coarse[cell + 1] < p {
                cell += 1;
            }
            let (lo, hi) = (coarse[cell], coarse[cell + 1]);
            let frac = if hi > lo { (p - lo) / (hi - lo) } else { 0.5 };
            nodes.push((cell as f64 + frac.clamp(0.0, 1.0)) * h);
        }
        nodes.sort_by(f64::total_cmp);
        nodes.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * upper);

        let mut cdf = vec![0.0; nodes.len()];
        for i in 0..nodes.len() - 1 {
            let (v, _) = gauss_kronrod_15(&f, nodes[i], nodes[i + 1]);
            cdf[i + 1] = cdf[i] + v.max(0.0);
        }
        let mass = cdf[cdf.len() - 1];
        if !((mass - 1.0).abs() <= MASS_TOLERANCE) {
            return Err(Error::Computation {
                message: "tabulated CDF does not reach 1".into(),
                primary: mass,
                reference: 1.0,
            });
        }
        let slopes = nodes.iter().map(|&x| f(x).max(0.0) / mass).collect();
        for v in cdf.iter_mut() {
            *v /= mass;
        }
        Ok(Self {
            nodes,
            cdf,
            slopes,
            mass,
        })
    }

    /// Total tabulated mass before normalisation.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn upper(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    fn cell_slopes(&self, i: usize) -> (f64, f64, f64, f64) {
        let (x0, x1) = (self.nodes[i], self.nodes[i + 1]);
        let dx = x1 - x0;
        let delta = (self.cdf[i + 1] - self.cdf[i]) / dx;
        if delta <= 0.0 {
            return (dx, delta, 0.0, 0.0);
        }
        let (mut m0, mut m1) = (self.slopes[i], self.slopes[i + 1]);
        let (a, b) = (m0 / delta, m1 / delta);
        let r = a * a + b * b;
        if r > 9.0 {
            let tau = 3.0 / r.sqrt();
            m0 *= tau;
            m1 *= tau;
        }
        (dx, delta, m0, m1)
    }

    fn hermite(&self, i: usize, u: f64) -> f64 {
        let (dx, _, m0, m1) = self.cell_slopes(i);
        let (f0, f1) = (self.cdf[i], self.cdf[i + 1]);
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * f0 + (u3 - 2.0 * u2 + u) * dx * m0 + (-2.0 * u3 + 3.0 * u2) * f1 + (u3 - u2) * dx * m1
    }

    /// Interpolated CDF at `x`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= self.upper() {
            return 1.0;
        }
        let i = self.nodes.partition_point(|&n| n <= x) - 1;
        let u = (x - self.nodes[i]) / (self.nodes[i + 1] - self.nodes[i]);
        self.hermite(i, u)
    }

    /// Smallest tabulated `x` with `F(x) ≥ p`, found by bisection on the interpolant.
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        let i = (self.cdf.partition_point(|&c| c < p)).clamp(1, self.cdf.len() - 1) - 1;
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.hermite(i, mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let u = 0.5 * (lo + hi);
        self.nodes[i] + u * (self.nodes[i + 1] - self.nodes[i])
    }
}
