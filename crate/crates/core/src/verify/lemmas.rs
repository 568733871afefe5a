//! Numerical stand-ins for the hypotheses of the bridge-existence lemmas.
//!
//! Each check produces one report whose residuals are normalised by the
//! allowance of their component, so the report tolerance is 1 throughout.

use serde::Serialize;

use super::checks::integrate_state;
use super::quadrature::QuadratureConfig;
use super::report::{ReportBuilder, VerificationReport};
use crate::error::{domain, Result};
use crate::kernel::StateSpace;
use crate::linalg::expm;
use crate::models::{kappa, ProcessModel};
use crate::specfun::{log_bessel_i, BesselOrder};

/// Tolerance for the sup identity of the Gaussian kernels.
pub const SUP_TOLERANCE: f64 = 1e-12;
/// Tolerance for the reverse-mass identity `∫ p_t(x, z) dx = det(e^{-tA})`.
pub const MASS_TOLERANCE: f64 = 1e-8;
/// Tolerance for the ε-sequence limit against its analytic value.
pub const LIMIT_TOLERANCE: f64 = 1e-6;
/// Largest accepted normalised difference quotient in the continuity spot check.
pub const CONTINUITY_ALLOWANCE: f64 = 10.0;

/// Fitted constants `c₁ ≤ I_ν(z)/g(z) ≤ c₂` with `g(z) = z^ν` on `(0,1)` and
/// `z^{-1/2} e^z` on `[1, ∞)`, as inf and sup over a log-spaced grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BesselBoundFit {
    pub c1: f64,
    pub c2: f64,
}

/// Fits the two-sided bound on `z ∈ [1e-8, 1e8]` (400 log-spaced points).
pub fn fit_bessel_bounds(nu: BesselOrder) -> Result<BesselBoundFit> {
    let n = nu.value();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..=400 {
        let z = 10f64.powf(-8.0 + 16.0 * i as f64 / 400.0);
        let log_g = if z < 1.0 { n * z.ln() } else { -0.5 * z.ln() + z };
        let r = (log_bessel_i(nu, z)? - log_g).exp();
        lo = lo.min(r);
        hi = hi.max(r);
    }
    if !(lo > 0.0 && hi.is_finite()) {
        return Err(crate::Error::Computation {
            message: "Bessel bound constants are not positive and finite".into(),
            primary: lo,
            reference: hi,
        });
    }
    Ok(BesselBoundFit { c1: lo, c2: hi })
}

fn radii(scale: f64) -> Vec<f64> {
    [0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0].iter().map(|r| r * scale).collect()
}

/// Certifies, on expanding grids, the hypotheses under which the KC equation
/// extends from almost every point to every point:
///
/// * `sup`: Gaussian kernels attain `((2π)^d det V_t)^{-1/2}` on the diagonal
///   `y = e^{tA}x` and never exceed it; radial kernels are finite on the grid;
/// * `mass`: `∫ p_t(x, z) dx` equals `det(e^{-tA})` (Gaussian, `d ≤ 3`) or is
///   finite (radial);
/// * `continuity`: difference quotients at step `1e-6` versus `1e-3` behave like
///   those of a continuous function (a heuristic, not a modulus).
pub fn lemma_kc_hypotheses_check(model: &ProcessModel, t: f64, quad: &QuadratureConfig) -> Result<VerificationReport> {
    let frozen = model.frozen(t)?;
    let space = model.state_space();
    let d = space.dim();
    let mut b = ReportBuilder::new(
        "lemma-kc-hypotheses",
        "components: sup (grid of radii 0..8 spreads, diagonal y = mean(x)), mass (3 end points), continuity (12 points)",
        1.0,
    )
    .param("model", model.describe())
    .param("t", t);
    use crate::kernel::Transition;
    let spread = frozen.spread();
    let dir: Vec<f64> = vec![1.0 / (d as f64).sqrt(); d];
    let along = |r: f64| -> Vec<f64> { dir.iter().map(|u| u * r).collect() };

    // sup
    let mut sup = 0.0f64;
    let mut diag_sup = 0.0f64;
    for &rx in &radii(spread) {
        let x = along(rx);
        let m = frozen.location(&x);
        diag_sup = diag_sup.max(frozen.density(&x, &m));
        for &ry in &radii(spread) {
            sup = sup.max(frozen.density(&x, &along(ry)));
            if space != StateSpace::HalfLine {
                sup = sup.max(frozen.density(&x, &along(-ry)));
            }
        }
    }
    match model {
        ProcessModel::Bessel { .. } | ProcessModel::OuRadial { .. } => {
            let r = if sup.is_finite() { 0.0 } else { f64::INFINITY };
            b.record(vec![0.0], sup, f64::INFINITY, r);
        }
        _ => {
            let parts = model.gaussian_parts(t)?;
            let bound = (-0.5 * (d as f64 * (2.0 * std::f64::consts::PI).ln() + parts.forward.log_det())).exp();
            let over = ((sup - bound) / bound).max(0.0);
            let diag = ((diag_sup - bound) / bound).abs();
            b.record(vec![0.0], sup, bound, over / SUP_TOLERANCE);
            b.record(vec![0.0], diag_sup, bound, diag / SUP_TOLERANCE);
        }
    }

    // mass
    let ends: &[f64] = if model.is_radial() { &[0.25, 0.5, 2.0] } else { &[0.0, 0.5, 2.0] };
    for &rz in ends {
        let z = along(rz * spread);
        match model {
            ProcessModel::Bessel { .. } | ProcessModel::OuRadial { .. } => {
                let (a, sigma) = model.isotropic_params().expect("radial");
                let back = (-a * t).exp();
                let width = (sigma * sigma * kappa(-a, t)?).sqrt();
                let (i, _) = integrate_state(space, |x| frozen.density(x, &z), &[vec![z[0] * back]], width, quad)?;
                let r = if i.value.is_finite() && i.value > 0.0 { 0.0 } else { f64::INFINITY };
                b.record(vec![1.0, rz], i.value, f64::INFINITY, r);
            }
            _ if d <= 3 => {
                let parts = model.gaussian_parts(t)?;
                let center: Vec<f64> = (&parts.back_map * nalgebra::DVector::from_column_slice(&z)).iter().copied().collect();
                let width = parts.backward.matrix().diagonal().max().sqrt();
                let (i, _) = integrate_state(space, |x| frozen.density(x, &z), &[center], width, quad)?;
                let want = match model {
                    ProcessModel::OuMatrix(m) => expm(&(m.drift().as_matrix() * -t))?.determinant(),
                    _ => {
                        let (a, _) = model.isotropic_params().expect("isotropic");
                        (-a * t * d as f64).exp()
                    }
                };
                b.record(vec![1.0, rz], i.value, want, ((i.value - want) / want).abs() / MASS_TOLERANCE);
            }
            _ => {}
        }
    }

    // continuity
    for (k, &rx) in radii(spread).iter().skip(1).take(6).enumerate() {
        for (j, &ry) in [0.5, 1.5].iter().enumerate() {
            let x = along(rx);
            let y = along(ry * spread + rx);
            let p = frozen.density(&x, &y);
            let shift = |h: f64| -> Vec<f64> { y.iter().map(|v| v + h).collect() };
            let coarse = (frozen.density(&x, &shift(1e-3)) - p).abs();
            let fine = (frozen.density(&x, &shift(1e-6)) - p).abs();
            let q = if coarse > 0.0 { fine / coarse / 1e-3 } else if fine == 0.0 { 0.0 } else { f64::INFINITY };
            b.record(vec![2.0, k as f64, j as f64], fine, coarse, q / CONTINUITY_ALLOWANCE);
        }
    }
    Ok(b.finish())
}

/// `p_{T-t}(y, ε) / p_{T-s}(x, ε)` for `ε = 2^{-k}`, `k = 5..=20`, extrapolated to `ε = 0`
/// with three Richardson levels in `ε²`.
pub fn epsilon_limit_oracle(model: &ProcessModel, horizon: f64, s: f64, t: f64, x: f64, y: f64) -> Result<f64> {
    let ratio = |eps: f64| -> Result<f64> {
        Ok((model.log_density(horizon - t, &[y], &[eps])? - model.log_density(horizon - s, &[x], &[eps])?).exp())
    };
    let r0: Vec<f64> = (5..=20).map(|k| ratio(2f64.powi(-k))).collect::<Result<_>>()?;
    let r1: Vec<f64> = r0.windows(2).map(|w| (4.0 * w[1] - w[0]) / 3.0).collect();
    let r2: Vec<f64> = r1.windows(2).map(|w| (16.0 * w[1] - w[0]) / 15.0).collect();
    Ok(r2[r2.len() - 1])
}

/// Certifies the zero-endpoint hypotheses for a radial base:
///
/// * `limit`: the ε-sequence oracle matches the analytic limit to `1e-6`;
/// * `origin`: at `x = 0` the limit equals `(τ_{T-s}/τ_{T-t})^{ν+1} e^{-e^{2a(T-t)} y²/(2τ_{T-t})}`;
/// * `sup`: for `x > 0` the ratio stays below `(c₂/c₁)(τ_{T-s}/τ_{T-t})^{d/2} exp(X²/(2τ_{T-s}) + τ_{T-s}/(2X²))`,
///   with `X = e^{a(T-s)}x`, over `y` and `0 < ε < τ_{T-s}/X` (fitted constants).
pub fn lemma_bessel_bridge_hypotheses_check(model: &ProcessModel, horizon: f64) -> Result<VerificationReport> {
    if !model.is_radial() {
        return domain("the zero-endpoint hypotheses concern radial models");
    }
    let (a, sigma) = model.isotropic_params().expect("radial");
    let d = model.dim();
    let nu = BesselOrder::from_dimension(d)?;
    let fit = fit_bessel_bounds(nu)?;
    let tau = |u: f64| -> Result<f64> { Ok(sigma * sigma * kappa(a, u)?) };
    let mut b = ReportBuilder::new(
        "lemma-bessel-bridge-hypotheses",
        "components: limit (10 points), origin (4 points), sup (4 (s,t,x) x 40 y x 24 eps)",
        1.0,
    )
    .param("model", model.describe())
    .param("T", horizon)
    .param("c1", fit.c1)
    .param("c2", fit.c2);

    let cases = [
        (0.0, 0.5, 1.0, 1.0),
        (0.0, 0.5, 1.0, 0.3),
        (0.1, 0.3, 0.5, 2.0),
        (0.2, 0.9, 2.0, 0.7),
        (0.0, 0.2, 0.0, 1.2),
        (0.3, 0.6, 1.5, 1.5),
        (0.5, 0.95, 0.8, 0.1),
        (0.0, 0.8, 3.0, 0.5),
        (0.4, 0.5, 0.2, 2.5),
        (0.6, 0.7, 0.0, 0.4),
    ];
    for &(sf, tf, x, y) in &cases {
        let (s, t) = (sf * horizon, tf * horizon);
        let oracle = epsilon_limit_oracle(model, horizon, s, t, x, y)?;
        let exact = (model.log_zero_endpoint_rate(horizon - t, y)? - model.log_zero_endpoint_rate(horizon - s, x)?).exp();
        b.record(vec![0.0, s, t, x, y], oracle, exact, ((oracle - exact) / exact).abs() / LIMIT_TOLERANCE);
    }

    for &(sf, tf, y) in &[(0.0, 0.5, 0.7), (0.2, 0.9, 1.3), (0.0, 0.1, 0.0), (0.5, 0.75, 2.0)] {
        let (s, t) = (sf * horizon, tf * horizon);
        let analytic = (model.log_zero_endpoint_rate(horizon - t, y)? - model.log_zero_endpoint_rate(horizon - s, 0.0)?).exp();
        let (t2, t3) = (tau(horizon - t)?, tau(horizon - s)?);
        let w2 = (2.0 * a * (horizon - t)).exp();
        let display = (t3 / t2).powf(nu.value() + 1.0) * (-w2 * y * y / (2.0 * t2)).exp();
        b.record(vec![1.0, s, t, 0.0, y], analytic, display, ((analytic - display) / display).abs() / 1e-12);
    }

    for &(sf, tf, x) in &[(0.0, 0.5, 1.0), (0.0, 0.9, 0.5), (0.3, 0.6, 2.0), (0.5, 0.99, 1.5)] {
        let (s, t) = (sf * horizon, tf * horizon);
        let (t2, t3) = (tau(horizon - t)?, tau(horizon - s)?);
        let big_x = (a * (horizon - s)).exp() * x;
        let bound = fit.c2 / fit.c1
            * (t3 / t2).powf(d as f64 / 2.0)
            * (big_x * big_x / (2.0 * t3) + t3 / (2.0 * big_x * big_x)).exp();
        let eps_max = t3 / big_x;
        let mut worst = 0.0f64;
        for i in 0..40 {
            let y = 10f64.powf(-3.0 + 5.0 * i as f64 / 39.0);
            for j in 0..24 {
                let eps = eps_max * 10f64.powf(-6.0 * j as f64 / 23.0) * (1.0 - 1e-9);
                let r = (model.log_density(horizon - t, &[y], &[eps])? - model.log_density(horizon - s, &[x], &[eps])?).exp();
                worst = worst.max(r);
            }
        }
        b.record(vec![2.0, s, t, x], worst, bound, worst / bound);
    }
    Ok(b.finish())
}
