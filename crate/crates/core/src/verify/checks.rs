//! Kolmogorov-Chapman, normalization, integral-identity and commutation checks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::quadrature::{integrate_box_with_breaks, integrate_halfline_hinted, Integral, QuadratureConfig};
use super::report::{ReportBuilder, VerificationReport};
use crate::bridges::{log_bridge_density_radial_limit, log_radial_bridge_density, BridgeSpec};
use crate::error::{domain, Result};
use crate::kernel::{MarkovKernel, StateSpace};
use crate::models::ProcessModel;
use crate::specfun::{log_bessel_i, BesselOrder, QuadratureResidual};

/// Relative comparisons are skipped or floored below this magnitude.
pub const DENSITY_FLOOR: f64 = 1e-300;

/// Draws used by the Monte Carlo fallback above three dimensions.
pub const MC_DRAWS: usize = 400_000;

const MC_SEED: u64 = 0x6b63_5f6d_6f6e_7465;

/// Both sides of an integral identity and their relative residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckValue {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    /// Quadrature error estimate of the integrated side.
    pub abs_error: f64,
    /// Standard error when the integral was estimated by Monte Carlo.
    pub std_error: Option<f64>,
}

impl CheckValue {
    fn new(lhs: f64, rhs: f64, abs_error: f64, std_error: Option<f64>) -> Self {
        Self {
            lhs,
            rhs,
            residual: (lhs - rhs).abs() / lhs.abs().max(DENSITY_FLOOR),
            abs_error,
            std_error,
        }
    }
}

/// `∫ f` over a state space, with the mass expected near `centers` on the length scale `scale`.
///
/// Half-line integrals use a hinted window plus geometric tails; `ℝ^d` with
/// `d ≤ 3` uses nested adaptive quadrature over a box truncated at
/// `truncation_radius` scales beyond the centres; larger `d` falls back to
/// importance sampling (see [`integrate_state_mc`]).
pub fn integrate_state<F>(
    space: StateSpace,
    f: F,
    centers: &[Vec<f64>],
    scale: f64,
    quad: &QuadratureConfig,
) -> Result<(Integral, Option<f64>)>
where
    F: Fn(&[f64]) -> f64,
{
    if !(scale > 0.0) || !scale.is_finite() {
        return domain(format!("integration scale must be positive, got {scale}"));
    }
    match space {
        StateSpace::HalfLine => {
            let hints: Vec<f64> = centers.iter().map(|c| c[0]).collect();
            let mut buf = [0.0];
            integrate_halfline_hinted(
                |r| {
                    buf[0] = r;
                    f(&buf)
                },
                &hints,
                scale,
                quad,
            )
            .map(|i| (i, None))
        }
        StateSpace::Euclidean(d) if d <= 3 => {
            let width = quad.truncation_radius * scale;
            let axes: Vec<Vec<f64>> = (0..d)
                .map(|i| {
                    let mut pts: Vec<f64> = centers.iter().map(|c| c[i]).collect();
                    let lo = pts.iter().copied().fold(f64::INFINITY, f64::min) - width;
                    let hi = pts.iter().copied().fold(f64::NEG_INFINITY, f64::max) + width;
                    pts.push(lo);
                    pts.push(hi);
                    pts.sort_by(f64::total_cmp);
                    pts.dedup();
                    pts
                })
                .collect();
            integrate_box_with_breaks(f, &axes, quad).map(|i| (i, None))
        }
        StateSpace::Euclidean(d) => {
            let (value, se) = integrate_state_mc(d, &f, centers, scale, MC_DRAWS, MC_SEED);
            Ok((
                Integral {
                    value,
                    abs_error: se,
                    tail_bound: 0.0,
                    subdivisions: 0,
                    evaluations: MC_DRAWS,
                },
                Some(se),
            ))
        }
    }
}

/// Importance-sampling estimate of `∫_{ℝ^d} f` with a Gaussian proposal centred
/// at the mean of `centers` and widened to cover all of them. Returns the
/// estimate and its standard error.
pub fn integrate_state_mc<F: Fn(&[f64]) -> f64>(
    d: usize,
    f: &F,
    centers: &[Vec<f64>],
    scale: f64,
    draws: usize,
    seed: u64,
) -> (f64, f64) {
    let mut mid = vec![0.0; d];
    for c in centers {
        for (m, v) in mid.iter_mut().zip(c) {
            *m += v / centers.len() as f64;
        }
    }
    let reach = centers
        .iter()
        .map(|c| c.iter().zip(&mid).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let w = 1.25 * scale.max(reach);
    let log_norm = -0.5 * d as f64 * (2.0 * std::f64::consts::PI * w * w).ln();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y = vec![0.0; d];
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..draws {
        let mut q = 0.0;
        for (yi, m) in y.iter_mut().zip(&mid) {
            let z: f64 = StandardNormal.sample(&mut rng);
            *yi = m + w * z;
            q += z * z;
        }
        let weight = f(&y) / (log_norm - 0.5 * q).exp();
        sum += weight;
        sum_sq += weight * weight;
    }
    let n = draws as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    (mean, (var / n).sqrt())
}

/// Kolmogorov-Chapman residual `|p_{s,u}(x,z) - ∫ p_{s,t}(x,y) p_{t,u}(y,z) dy| / p_{s,u}(x,z)`.
///
/// Works for any kernel, base or bridge. The `lhs` field is `p_{s,u}(x,z)`.
#[allow(clippy::too_many_arguments)]
pub fn kc_check(
    kernel: &dyn MarkovKernel,
    s: f64,
    t: f64,
    u: f64,
    x: &[f64],
    z: &[f64],
    quad: &QuadratureConfig,
) -> Result<CheckValue> {
    if !(s < t && t < u) {
        return domain(format!("KC check needs s < t < u, got {s}, {t}, {u}"));
    }
    let space = kernel.state_space();
    for (name, v) in [("x", x), ("z", z)] {
        if !space.contains(v) {
            return domain(format!("{name} = {v:?} is outside the state space"));
        }
    }
    let whole = kernel.transition(s, u)?;
    let first = kernel.transition(s, t)?;
    let second = kernel.transition(t, u)?;
    let lhs = whole.density(x, z);
    let centers = vec![first.location(x), z.to_vec()];
    let (integral, se) = integrate_state(
        space,
        |y| {
            let v = (first.log_density(x, y) + second.log_density(y, z)).exp();
            if v.is_nan() {
                0.0
            } else {
                v
            }
        },
        &centers,
        first.spread(),
        quad,
    )?;
    Ok(CheckValue::new(lhs, integral.value, integral.abs_error, se))
}

/// `|1 - ∫ p_{s,t}(x, y) dy|`.
pub fn normalization_check(
    kernel: &dyn MarkovKernel,
    s: f64,
    t: f64,
    x: &[f64],
    quad: &QuadratureConfig,
) -> Result<CheckValue> {
    let space = kernel.state_space();
    if !space.contains(x) {
        return domain(format!("x = {x:?} is outside the state space"));
    }
    let tr = kernel.transition(s, t)?;
    let (integral, se) = integrate_state(space, |y| tr.density(x, y), &[tr.location(x)], tr.spread(), quad)?;
    Ok(CheckValue::new(1.0, integral.value, integral.abs_error, se))
}

/// Residual of `∫₀^∞ y e^{-γy²} I_ν(αy) I_ν(βy) dy = (2γ)^{-1} e^{(α²+β²)/(4γ)} I_ν(αβ/(2γ))`.
///
/// The integrand is divided by the right-hand side in log-space so the
/// quadrature target is 1; `quadrature` and `closed_form` are reported
/// unscaled and may overflow to infinity for extreme parameters.
pub fn bessel_identity_check(
    alpha: f64,
    beta: f64,
    gamma: f64,
    nu: BesselOrder,
    quad: &QuadratureConfig,
) -> Result<QuadratureResidual> {
    for (name, v) in [("alpha", alpha), ("beta", beta), ("gamma", gamma)] {
        if !(v > 0.0) || !v.is_finite() {
            return domain(format!("{name} must be positive, got {v}"));
        }
    }
    let log_rhs = -(2.0 * gamma).ln() + (alpha * alpha + beta * beta) / (4.0 * gamma)
        + log_bessel_i(nu, alpha * beta / (2.0 * gamma))?;
    let integrand = |y: f64| {
        if y <= 0.0 {
            return 0.0;
        }
        let l = y.ln() - gamma * y * y + log_bessel_i(nu, alpha * y).unwrap_or(f64::NAN)
            + log_bessel_i(nu, beta * y).unwrap_or(f64::NAN)
            - log_rhs;
        l.exp()
    };
    let center = ((alpha + beta) / (2.0 * gamma)).max(1.0 / (2.0 * gamma).sqrt());
    let scale = 1.0 / (2.0 * gamma).sqrt();
    let (value, err, converged) = match integrate_halfline_hinted(integrand, &[center], scale, quad) {
        Ok(i) => (i.value, i.abs_error, true),
        Err(crate::Error::NonConvergence { estimate, error, .. }) => (estimate, error, false),
        Err(e) => return Err(e),
    };
    let rhs = log_rhs.exp();
    Ok(QuadratureResidual {
        residual: (value - 1.0).abs(),
        quadrature: value * rhs,
        closed_form: rhs,
        quadrature_error: err * rhs,
        converged,
    })
}

/// Stratified `(s, t)` pairs and a square `(x, y)` grid for bridge comparisons.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StratifiedGrid {
    /// Start times as fractions of `T`.
    pub s_fracs: Vec<f64>,
    /// Step lengths `t - s` as fractions of `T`; `None` stands for `0.99T - s`.
    pub step_fracs: Vec<Option<f64>>,
    /// Radii used for both `x` and `y`.
    pub radii: Vec<f64>,
}

impl Default for StratifiedGrid {
    fn default() -> Self {
        Self {
            s_fracs: vec![0.0, 0.1, 0.5, 0.9],
            step_fracs: vec![Some(0.05), Some(0.2), None],
            radii: (0..=20).map(|i| 0.25 * i as f64).collect(),
        }
    }
}

impl StratifiedGrid {
    /// `(s, t)` pairs with `t < T`, in grid order.
    pub fn times(&self, horizon: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for &sf in &self.s_fracs {
            for step in &self.step_fracs {
                let s = sf * horizon;
                let t = match step {
                    Some(h) => s + h * horizon,
                    None => 0.99 * horizon,
                };
                if t > s && t < horizon {
                    out.push((s, t));
                }
            }
        }
        out
    }

    pub fn describe(&self, horizon: f64) -> String {
        format!(
            "s in {:?}*T, t-s in {:?}*T (None = 0.99T-s), x,y in {} radii on [{}, {}], T = {horizon}",
            self.s_fracs,
            self.step_fracs,
            self.radii.len(),
            self.radii.first().copied().unwrap_or(0.0),
            self.radii.last().copied().unwrap_or(0.0),
        )
    }
}

/// Compares the closed-form kernel of the norm of the zero-endpoint OU bridge
/// with the zero-endpoint limit bridge of the radial OU process, pointwise.
///
/// Points where both sides fall below [`DENSITY_FLOOR`] are skipped.
pub fn commutation_check(
    a: f64,
    sigma: f64,
    d: usize,
    horizon: f64,
    grid: &StratifiedGrid,
    tolerance: f64,
) -> Result<VerificationReport> {
    let spec = BridgeSpec::zero(ProcessModel::ou_radial(a, sigma, d)?, horizon)?;
    let mut points = Vec::new();
    for (s, t) in grid.times(horizon) {
        for &x in &grid.radii {
            for &y in &grid.radii {
                points.push([s, t, x, y]);
            }
        }
    }
    let rows: Vec<Result<(f64, f64)>> = points
        .par_iter()
        .map(|&[s, t, x, y]| {
            let closed = log_radial_bridge_density(a, sigma, d, horizon, s, t, x, y)?;
            let limit = log_bridge_density_radial_limit(&spec, s, t, x, y)?;
            Ok((closed.exp(), limit.exp()))
        })
        .collect();
    let mut b = ReportBuilder::new("commutation", grid.describe(horizon), tolerance)
        .param("a", a)
        .param("sigma", sigma)
        .param("d", d)
        .param("T", horizon);
    let mut skipped = 0usize;
    for (p, row) in points.iter().zip(rows) {
        match row {
            Ok((closed, limit)) => {
                if closed < DENSITY_FLOOR && limit < DENSITY_FLOOR {
                    skipped += 1;
                    continue;
                }
                let residual = (closed - limit).abs() / closed.max(limit);
                b.record(p.to_vec(), closed, limit, residual);
            }
            Err(e) => b.record_error(p.to_vec(), e.to_string()),
        }
    }
    b.set_param("skipped_below_floor", skipped);
    Ok(b.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bridges::{BridgeConstruction, BridgeDensity};
    use crate::linalg::{DiffusionMatrix, SquareMatrix};

    #[test]
    fn wiener_kc_example() {
        let w = ProcessModel::wiener(1).unwrap();
        let r = kc_check(&w, 0.0, 0.5, 1.0, &[0.0], &[1.0], &QuadratureConfig::default()).unwrap();
        assert!(r.residual < 1e-9, "{r:?}");
    }

    #[test]
    fn bessel_kc_example() {
        let b = ProcessModel::bessel(3).unwrap();
        let r = kc_check(&b, 0.0, 0.3, 1.0, &[1.0], &[2.0], &QuadratureConfig::default()).unwrap();
        assert!(r.residual < 1e-7, "{r:?}");
    }

    #[test]
    fn matrix_kc_example() {
        let a = SquareMatrix::from_rows(&[&[-1.0, 0.5], &[-0.3, -0.8]]).unwrap();
        let m = ProcessModel::ou_matrix(a, DiffusionMatrix::scaled_identity(2, 1.0)).unwrap();
        let r = kc_check(&m, 0.0, 0.2, 0.7, &[0.3, -0.2], &[0.1, 0.4], &QuadratureConfig::default()).unwrap();
        assert!(r.residual < 1e-6, "{r:?}");
    }

    #[test]
    fn bessel_normalization_example() {
        let b = ProcessModel::bessel(3).unwrap();
        let r = normalization_check(&b, 0.0, 1.0, &[2.0], &QuadratureConfig::default()).unwrap();
        assert!(r.residual < 1e-9, "{r:?}");
    }

    #[test]
    fn bridge_normalization_near_the_end() {
        let spec = BridgeSpec::zero(ProcessModel::ou_radial(-0.8, 1.3, 2).unwrap(), 2.0).unwrap();
        let bridge = BridgeDensity::new(spec, BridgeConstruction::RadialLimit).unwrap();
        let r = normalization_check(&bridge, 1.8, 1.98, &[1.5], &QuadratureConfig::default()).unwrap();
        assert!(r.residual < 1e-8, "{r:?}");
    }

    #[test]
    fn identity_examples() {
        let q = QuadratureConfig::default();
        let r = bessel_identity_check(1.0, 1.0, 1.0, BesselOrder::new(0.5).unwrap(), &q).unwrap();
        assert!(r.residual < 1e-8);
        // RHS through the sinh closed form of I_{1/2}.
        let z: f64 = 0.5;
        let i_half = (2.0 / (std::f64::consts::PI * z)).sqrt() * z.sinh();
        let rhs = 0.5 * (0.5f64).exp() * i_half;
        assert!(((r.closed_form - rhs) / rhs).abs() < 1e-13);
        let r = bessel_identity_check(0.1, 10.0, 2.0, BesselOrder::new(0.0).unwrap(), &q).unwrap();
        assert!(r.residual < 1e-8, "{r:?}");
        assert!(bessel_identity_check(0.0, 1.0, 1.0, BesselOrder::new(0.0).unwrap(), &q).is_err());
    }

    #[test]
    fn commutation_examples() {
        let g = StratifiedGrid::default();
        for (a, sigma, d, big_t) in [(0.0, 1.0, 2, 1.0), (-0.8, 1.3, 3, 2.0), (0.5, 1.0, 1, 1.0)] {
            let r = commutation_check(a, sigma, d, big_t, &g, 1e-10).unwrap();
            assert!(r.pass, "{r:?}");
            assert!(r.points > 1000);
        }
    }

    #[test]
    fn monte_carlo_fallback_reports_standard_error() {
        let w = ProcessModel::wiener(4).unwrap();
        let r = kc_check(&w, 0.0, 0.5, 1.0, &[0.0; 4], &[0.3, 0.0, -0.2, 0.1], &QuadratureConfig::default()).unwrap();
        let se = r.std_error.unwrap();
        assert!(se > 0.0);
        assert!((r.lhs - r.rhs).abs() < 5.0 * se, "{r:?}");
    }
}
