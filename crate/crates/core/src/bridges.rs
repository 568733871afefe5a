//! Bridge transition densities.
//!
//! Two generic constructions turn a base kernel `p^Z` into the kernel of the
//! process pinned at `b` at time `T`:
//!
//! * ratio: `p_{t-s}(x,y) p_{T-t}(y,b) / p_{T-s}(x,b)`, usable while the
//!   denominator is positive;
//! * radial limit: `b = 0` on the half-line, with the ratio of the last two
//!   factors replaced by its limit as the endpoint shrinks to zero.
//!
//! Closed forms for the zero-endpoint bridges of every family are provided
//! separately and are compared against the constructions in the tests.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde_json::{json, Value};

use crate::error::{domain, Error, Result};
use crate::kernel::{MarkovKernel, StateSpace, Transition};
use crate::linalg::{expm, gramian_vt_tilde, DiffusionMatrix, Gramian, SquareMatrix};
use crate::models::{kappa, FrozenModel, ProcessModel, RadialKernel};
use crate::specfun::{ln_gamma, log_bessel_i_scaled, BesselOrder};

/// A base process together with its start point, end point and horizon.
#[derive(Debug, Clone)]
pub struct BridgeSpec {
    base: ProcessModel,
    start: Vec<f64>,
    end: Vec<f64>,
    horizon: f64,
}

impl BridgeSpec {
    pub fn new(base: ProcessModel, start: Vec<f64>, end: Vec<f64>, horizon: f64) -> Result<Self> {
        base.validate()?;
        base.check_state(&start, "start point")?;
        base.check_state(&end, "end point")?;
        if !(horizon > 0.0) || !horizon.is_finite() {
            return domain(format!("horizon must be positive and finite, got {horizon}"));
        }
        Ok(Self {
            base,
            start,
            end,
            horizon,
        })
    }

    /// Bridge from the origin to the origin.
    pub fn zero(base: ProcessModel, horizon: f64) -> Result<Self> {
        let d = base.state_space().dim();
        Self::new(base, vec![0.0; d], vec![0.0; d], horizon)
    }

    pub fn base(&self) -> &ProcessModel {
        &self.base
    }

    pub fn start(&self) -> &[f64] {
        &self.start
    }

    pub fn end(&self) -> &[f64] {
        &self.end
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn has_zero_end(&self) -> bool {
        self.end.iter().all(|v| *v == 0.0)
    }

    pub fn describe(&self) -> Value {
        json!({
            "base": self.base.describe(),
            "start": self.start,
            "end": self.end,
            "T": self.horizon,
        })
    }

    fn check_times(&self, s: f64, t: f64) -> Result<()> {
        if !(0.0 <= s && s < t && t < self.horizon) {
            return domain(format!(
                "bridge times must satisfy 0 <= s < t < T, got s={s}, t={t}, T={}",
                self.horizon
            ));
        }
        Ok(())
    }
}

/// How a [`BridgeDensity`] is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BridgeConstruction {
    Ratio,
    RadialLimit,
    ClosedForm,
}

/// Ratio form `p_{t-s}(x,y) p_{T-t}(y,b) / p_{T-s}(x,b)`, assembled in log-space.
///
/// Fails with [`Error::ConstructionInapplicable`] when `p_{T-s}(x,b) = 0`.
pub fn bridge_density_ratio(spec: &BridgeSpec, s: f64, t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    log_bridge_density_ratio(spec, s, t, x, y).map(f64::exp)
}

pub fn log_bridge_density_ratio(spec: &BridgeSpec, s: f64, t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    spec.check_times(s, t)?;
    let base = &spec.base;
    let b = &spec.end;
    let denom = base.log_density(spec.horizon - s, x, b)?;
    if denom == f64::NEG_INFINITY {
        return Err(Error::ConstructionInapplicable(format!(
            "p_(T-s)(x, b) vanishes for the {} model at x = {x:?}, b = {b:?}; use the radial limit construction",
            base.name()
        )));
    }
    Ok(base.log_density(t - s, x, y)? + base.log_density(spec.horizon - t, y, b)? - denom)
}

/// Zero-endpoint limit `p_{t-s}(x,y) lim_{ε↓0} p_{T-t}(y,ε) / p_{T-s}(x,ε)` for radial bases.
///
/// The limit is evaluated analytically from the small-argument behaviour of `I_ν`.
pub fn bridge_density_radial_limit(spec: &BridgeSpec, s: f64, t: f64, x: f64, y: f64) -> Result<f64> {
    log_bridge_density_radial_limit(spec, s, t, x, y).map(f64::exp)
}

pub fn log_bridge_density_radial_limit(spec: &BridgeSpec, s: f64, t: f64, x: f64, y: f64) -> Result<f64> {
    if !spec.base.is_radial() {
        return Err(Error::ConstructionInapplicable(format!(
            "the radial limit needs a Bessel or radial OU base, got {}",
            spec.base.name()
        )));
    }
    if !spec.has_zero_end() {
        return Err(Error::ConstructionInapplicable(
            "the radial limit is defined for the endpoint b = 0 only".into(),
        ));
    }
    spec.check_times(s, t)?;
    let base = &spec.base;
    Ok(base.log_density(t - s, &[x], &[y])? + base.log_zero_endpoint_rate(spec.horizon - t, y)?
        - base.log_zero_endpoint_rate(spec.horizon - s, x)?)
}

fn check_bridge_times(horizon: f64, s: f64, t: f64) -> Result<()> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return domain(format!("horizon must be positive and finite, got {horizon}"));
    }
    if !(0.0 <= s && s < t && t < horizon) {
        return domain(format!("bridge times must satisfy 0 <= s < t < T, got s={s}, t={t}, T={horizon}"));
    }
    Ok(())
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum()
}

/// Closed-form kernel of the `d`-dimensional Wiener bridge ending at the origin.
pub fn wiener_bridge_density(d: usize, horizon: f64, s: f64, t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    ou_scalar_bridge_density(0.0, 1.0, d, horizon, s, t, x, y)
}

/// Closed-form kernel of the bridge of `dZ = aZ dt + σ dW` ending at the origin.
#[allow(clippy::too_many_arguments)]
pub fn ou_scalar_bridge_density(
    a: f64,
    sigma: f64,
    d: usize,
    horizon: f64,
    s: f64,
    t: f64,
    x: &[f64],
    y: &[f64],
) -> Result<f64> {
    let model = ProcessModel::ou_scalar(a, sigma, d)?;
    model.check_state(x, "x")?;
    model.check_state(y, "y")?;
    check_bridge_times(horizon, s, t)?;
    let s2 = sigma * sigma;
    let k1 = kappa(a, t - s)?;
    let k2 = kappa(a, horizon - t)?;
    let k3 = kappa(a, horizon - s)?;
    let gap: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| {
            let r = yi - (a * (t - s)).exp() * xi;
            r * r
        })
        .sum();
    let log_front = 0.5 * d as f64 * (k3 / (2.0 * PI * s2 * k1 * k2)).ln();
    let expo = -gap / (2.0 * s2 * k1) - (2.0 * a * (horizon - t)).exp() * norm_sq(y) / (2.0 * s2 * k2)
        + (2.0 * a * (horizon - s)).exp() * norm_sq(x) / (2.0 * s2 * k3);
    Ok((log_front + expo).exp())
}

/// Closed-form kernel of the bridge of `dZ = AZ dt + Σ dW` ending at the origin,
/// written through the backward Gramians `Ṽ`.
#[allow(clippy::too_many_arguments)]
pub fn ou_bridge_density(
    drift: &SquareMatrix,
    diffusion: &DiffusionMatrix,
    horizon: f64,
    s: f64,
    t: f64,
    x: &[f64],
    y: &[f64],
) -> Result<f64> {
    let model = ProcessModel::ou_matrix(drift.clone(), diffusion.clone())?;
    model.check_state(x, "x")?;
    model.check_state(y, "y")?;
    Ok(MatrixBridge::new(drift, diffusion, horizon, s, t)?.log_density(x, y).exp())
}

/// The general OU bridge kernel with its Gramians factored once.
#[derive(Debug, Clone)]
pub struct MatrixBridge {
    v1: Gramian,
    v2: Gramian,
    v3: Gramian,
    back: DMatrix<f64>,
    log_front: f64,
}

impl MatrixBridge {
    pub fn new(drift: &SquareMatrix, diffusion: &DiffusionMatrix, horizon: f64, s: f64, t: f64) -> Result<Self> {
        check_bridge_times(horizon, s, t)?;
        let d = drift.dim() as f64;
        let v1 = gramian_vt_tilde(drift, diffusion, t - s)?;
        let v2 = gramian_vt_tilde(drift, diffusion, horizon - t)?;
        let v3 = gramian_vt_tilde(drift, diffusion, horizon - s)?;
        let log_front = 0.5 * (v3.log_det() - d * (2.0 * PI).ln() - v1.log_det() - v2.log_det());
        Ok(Self {
            back: expm(&(drift.as_matrix() * -(t - s)))?,
            v1,
            v2,
            v3,
            log_front,
        })
    }

    pub fn log_density(&self, x: &[f64], y: &[f64]) -> f64 {
        let moved = &self.back * DVector::from_column_slice(y);
        let diff: Vec<f64> = x.iter().zip(moved.iter()).map(|(a, b)| a - b).collect();
        self.log_front - 0.5 * self.v1.quadratic_form(&diff) - 0.5 * self.v2.quadratic_form(y)
            + 0.5 * self.v3.quadratic_form(x)
    }
}

/// Closed-form kernel of the norm of the zero-endpoint OU bridge in dimension `d`.
///
/// Covers `x > 0` through the Bessel-function row and `x = 0` through its
/// explicit limit; at `y = 0` the kernel vanishes for `d ≥ 2`.
#[allow(clippy::too_many_arguments)]
pub fn radial_bridge_density(
    a: f64,
    sigma: f64,
    d: usize,
    horizon: f64,
    s: f64,
    t: f64,
    x: f64,
    y: f64,
) -> Result<f64> {
    log_radial_bridge_density(a, sigma, d, horizon, s, t, x, y).map(f64::exp)
}

#[allow(clippy::too_many_arguments)]
pub fn log_radial_bridge_density(
    a: f64,
    sigma: f64,
    d: usize,
    horizon: f64,
    s: f64,
    t: f64,
    x: f64,
    y: f64,
) -> Result<f64> {
    ProcessModel::ou_radial(a, sigma, d)?;
    for (name, v) in [("x", x), ("y", y)] {
        if !(v >= 0.0) || !v.is_finite() {
            return domain(format!("{name} must be a nonnegative radius, got {v}"));
        }
    }
    check_bridge_times(horizon, s, t)?;
    let nu = BesselOrder::from_dimension(d)?;
    let n = nu.value();
    let s2 = sigma * sigma;
    let tau1 = s2 * kappa(a, t - s)?;
    let tau2 = s2 * kappa(a, horizon - t)?;
    let tau3 = s2 * kappa(a, horizon - s)?;
    let w2 = (2.0 * a * (horizon - t)).exp();
    let w3 = (2.0 * a * (horizon - s)).exp();
    let pin = (n + 1.0) * (tau3 / tau2).ln() - w2 * y * y / (2.0 * tau2);
    if x == 0.0 {
        let y_pow = if d == 1 { 0.0 } else { (2.0 * n + 1.0) * y.ln() };
        return Ok(y_pow - n * std::f64::consts::LN_2 - (n + 1.0) * tau1.ln() - ln_gamma(n + 1.0)? - y * y / (2.0 * tau1)
            + pin);
    }
    let big_x = (a * (t - s)).exp() * x;
    let release = w3 * x * x / (2.0 * tau3);
    if y == 0.0 {
        if d >= 2 {
            return Ok(f64::NEG_INFINITY);
        }
        return Ok(0.5 * (2.0 / (PI * tau1)).ln() - big_x * big_x / (2.0 * tau1) + pin + release);
    }
    let z = big_x * y / tau1;
    let gap = big_x - y;
    Ok(-a * n * (t - s) + (n + 1.0) * y.ln() - tau1.ln() - n * x.ln() + log_bessel_i_scaled(nu, z)?
        - gap * gap / (2.0 * tau1)
        + pin
        + release)
}

/// One-step law `N(M x + c, C)` of a Gaussian bridge from time `s` to `t`.
#[derive(Debug, Clone)]
pub struct GaussianStep {
    pub mean_map: DMatrix<f64>,
    pub offset: DVector<f64>,
    pub covariance: Gramian,
}

impl GaussianStep {
    pub fn mean(&self, x: &[f64]) -> DVector<f64> {
        &self.mean_map * DVector::from_column_slice(x) + &self.offset
    }
}

/// Conditional mean map and covariance of `Y_t` given `Y_s = x` for a bridge on a Gaussian base.
///
/// The bridge kernel is proportional in `y` to `N(y; Φx, V_h) · N(y; e^{-uA}b, Ṽ_u)`
/// with `h = t - s` and `u = T - t`, so its precision is `V_h^{-1} + Ṽ_u^{-1}`.
pub fn gaussian_bridge_step(spec: &BridgeSpec, s: f64, t: f64) -> Result<GaussianStep> {
    if !spec.base.is_gaussian() {
        return domain("gaussian_bridge_step needs a Gaussian base");
    }
    spec.check_times(s, t)?;
    let fwd = spec.base.gaussian_parts(t - s)?;
    let bwd = spec.base.gaussian_parts(spec.horizon - t)?;
    let p1 = fwd.forward.inverse();
    let p2 = bwd.backward.inverse();
    let precision = &p1 + &p2;
    let precision = (&precision + precision.transpose()) * 0.5;
    let chol = nalgebra::Cholesky::new(precision).ok_or_else(|| Error::Computation {
        message: "bridge precision is not positive definite".into(),
        primary: f64::NAN,
        reference: f64::NAN,
    })?;
    let cov = chol.inverse();
    let mean_map = &cov * p1 * fwd.mean_map;
    let b = DVector::from_column_slice(&spec.end);
    let offset = &cov * (p2 * (bwd.back_map * b));
    Ok(GaussianStep {
        mean_map,
        offset,
        covariance: Gramian::new(t - s, (&cov + cov.transpose()) * 0.5)?,
    })
}

/// A bridge kernel: a spec and the construction used to evaluate it.
#[derive(Debug, Clone)]
pub struct BridgeDensity {
    spec: BridgeSpec,
    construction: BridgeConstruction,
}

impl BridgeDensity {
    /// Fails with [`Error::ConstructionInapplicable`] when the construction does
    /// not fit the base or the endpoint.
    pub fn new(spec: BridgeSpec, construction: BridgeConstruction) -> Result<Self> {
        match construction {
            BridgeConstruction::RadialLimit => {
                if !spec.base.is_radial() || !spec.has_zero_end() {
                    return Err(Error::ConstructionInapplicable(
                        "the radial limit needs a radial base and b = 0".into(),
                    ));
                }
            }
            BridgeConstruction::ClosedForm => {
                if !spec.has_zero_end() {
                    return Err(Error::ConstructionInapplicable(
                        "closed forms are available for the endpoint b = 0 only".into(),
                    ));
                }
            }
            BridgeConstruction::Ratio => {
                if spec.base.is_radial() && spec.has_zero_end() && spec.base.dim() >= 2 {
                    return Err(Error::ConstructionInapplicable(
                        "p_t(x, 0) = 0 for radial kernels in d >= 2; use the radial limit".into(),
                    ));
                }
            }
        }
        Ok(Self { spec, construction })
    }

    /// Ratio for Gaussian bases and for radial bases with `b ≠ 0` or `d = 1`;
    /// radial limit otherwise.
    pub fn preferred(spec: BridgeSpec) -> Result<Self> {
        let c = if spec.base.is_radial() && spec.has_zero_end() {
            BridgeConstruction::RadialLimit
        } else {
            BridgeConstruction::Ratio
        };
        Self::new(spec, c)
    }

    pub fn spec(&self) -> &BridgeSpec {
        &self.spec
    }

    pub fn construction(&self) -> BridgeConstruction {
        self.construction
    }

    /// `ln p_{s,t}(x, y)`.
    pub fn log_density(&self, s: f64, t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
        let spec = &self.spec;
        match self.construction {
            BridgeConstruction::Ratio => log_bridge_density_ratio(spec, s, t, x, y),
            BridgeConstruction::RadialLimit => {
                spec.base.check_state(x, "x")?;
                spec.base.check_state(y, "y")?;
                log_bridge_density_radial_limit(spec, s, t, x[0], y[0])
            }
            BridgeConstruction::ClosedForm => {
                let (h, base) = (spec.horizon, &spec.base);
                match base {
                    ProcessModel::Wiener { dim } => wiener_bridge_density(*dim, h, s, t, x, y).map(f64::ln),
                    ProcessModel::OuScalar { a, sigma, dim } => {
                        ou_scalar_bridge_density(*a, *sigma, *dim, h, s, t, x, y).map(f64::ln)
                    }
                    ProcessModel::OuMatrix(m) => {
                        ou_bridge_density(m.drift(), m.diffusion(), h, s, t, x, y).map(f64::ln)
                    }
                    ProcessModel::Bessel { .. } | ProcessModel::OuRadial { .. } => {
                        base.check_state(x, "x")?;
                        base.check_state(y, "y")?;
                        let (a, sigma) = base.isotropic_params().expect("radial models are isotropic");
                        log_radial_bridge_density(a, sigma, base.dim(), h, s, t, x[0], y[0])
                    }
                }
            }
        }
    }

    /// `p_{s,t}(x, y)`.
    pub fn density(&self, s: f64, t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
        self.log_density(s, t, x, y).map(f64::exp)
    }

    /// Centre and spread of `y ↦ p_{s,t}(x, y)`, used to place quadrature windows.
    ///
    /// For radial bases this is the norm of the matching isotropic Gaussian bridge.
    pub fn location_hint(&self, s: f64, t: f64, x: &[f64]) -> Result<(Vec<f64>, f64)> {
        let base = &self.spec.base;
        if base.is_gaussian() {
            let step = gaussian_bridge_step(&self.spec, s, t)?;
            let spread = step.covariance.matrix().diagonal().max().sqrt();
            return Ok((step.mean(x).iter().copied().collect(), spread));
        }
        let (a, sigma) = base.isotropic_params().expect("radial models are isotropic");
        let d = base.dim();
        let mut start = vec![0.0; d];
        start[0] = x[0];
        let mut end = vec![0.0; d];
        end[0] = self.spec.end[0];
        let gauss = BridgeSpec::new(
            ProcessModel::ou_scalar(a, sigma, d)?,
            vec![0.0; d],
            end,
            self.spec.horizon,
        )?;
        let step = gaussian_bridge_step(&gauss, s, t)?;
        let mean = step.mean(&start);
        let var = step.covariance.matrix()[(0, 0)];
        Ok((vec![(mean.norm_squared() + d as f64 * var).sqrt()], var.sqrt()))
    }
}

impl MarkovKernel for BridgeDensity {
    fn state_space(&self) -> StateSpace {
        self.spec.base.state_space()
    }

    fn transition(&self, s: f64, t: f64) -> Result<Box<dyn Transition + '_>> {
        self.spec.check_times(s, t)?;
        let (_, spread) = self.location_hint(s, t, self.spec.start())?;
        let base = &self.spec.base;
        let h = self.spec.horizon;
        let form = match (self.construction, base) {
            (BridgeConstruction::Ratio, _) => Frozen::Ratio {
                near: base.frozen(t - s)?,
                far: base.frozen(h - t)?,
                whole: base.frozen(h - s)?,
            },
            (BridgeConstruction::RadialLimit, _) => {
                let (FrozenModel::Radial(far), FrozenModel::Radial(whole)) = (base.frozen(h - t)?, base.frozen(h - s)?)
                else {
                    unreachable!("radial limit is only built on radial bases")
                };
                Frozen::RadialLimit {
                    near: base.frozen(t - s)?,
                    far,
                    whole,
                }
            }
            (BridgeConstruction::ClosedForm, ProcessModel::OuMatrix(m)) => {
                Frozen::Matrix(MatrixBridge::new(m.drift(), m.diffusion(), h, s, t)?)
            }
            (BridgeConstruction::ClosedForm, _) => Frozen::Direct,
        };
        Ok(Box::new(BridgeTransition {
            bridge: self,
            s,
            t,
            spread,
            form,
        }))
    }

    fn label(&self) -> String {
        format!("{}-bridge", self.spec.base.name())
    }
}

enum Frozen {
    Ratio {
        near: FrozenModel,
        far: FrozenModel,
        whole: FrozenModel,
    },
    RadialLimit {
        near: FrozenModel,
        far: RadialKernel,
        whole: RadialKernel,
    },
    Matrix(MatrixBridge),
    Direct,
}

struct BridgeTransition<'a> {
    bridge: &'a BridgeDensity,
    s: f64,
    t: f64,
    spread: f64,
    form: Frozen,
}

impl Transition for BridgeTransition<'_> {
    /// `NaN` if the construction fails at this point.
    fn log_density(&self, x: &[f64], y: &[f64]) -> f64 {
        let end = self.bridge.spec.end();
        match &self.form {
            Frozen::Ratio { near, far, whole } => {
                let denom = whole.log_density(x, end);
                if denom == f64::NEG_INFINITY {
                    return f64::NAN;
                }
                near.log_density(x, y) + far.log_density(y, end) - denom
            }
            Frozen::RadialLimit { near, far, whole } => {
                near.log_density(x, y) + far.log_zero_rate(y[0]) - whole.log_zero_rate(x[0])
            }
            Frozen::Matrix(m) => m.log_density(x, y),
            Frozen::Direct => self.bridge.log_density(self.s, self.t, x, y).unwrap_or(f64::NAN),
        }
    }

    fn location(&self, x: &[f64]) -> Vec<f64> {
        self.bridge
            .location_hint(self.s, self.t, x)
            .map(|(c, _)| c)
            .unwrap_or_else(|_| x.to_vec())
    }

    fn spread(&self) -> f64 {
        self.spread
    }
}
