//! Transition densities of the Wiener, Bessel and Ornstein-Uhlenbeck processes
//! and of their radial parts.
//!
//! The scalar OU kernel is the Wiener kernel evaluated at variance
//! `σ²κ(a,t)` and start `e^{at}x`; likewise the radial OU kernel is the Bessel
//! kernel under the substitution `(t, x, y) → (σ²κ(a,t), e^{at}x, y)`. The
//! `e^{-aνt}` factor of the radial OU density is exactly what the substitution
//! produces from `x^{-ν}`, so each family has a single code path.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde_json::{json, Value};

use crate::error::{domain, Result};
use crate::kernel::{MarkovKernel, StateSpace, Transition};
use crate::linalg::{expm, gramian_vt, gramian_vt_tilde, DiffusionMatrix, Gramian, SquareMatrix};
use crate::specfun::{ln_gamma, log_bessel_i_scaled, sine_power_integral, BesselOrder};
use crate::verify::quadrature::{integrate_box, integrate_with_breaks, QuadratureConfig};

/// `κ(a,t) = (e^{2at} - 1)/(2a)`, with `κ(0,t) = t`.
///
/// Uses a four-term Taylor expansion when `|a|t < 1e-6`.
pub fn kappa(a: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return domain(format!("kappa requires t > 0, got {t}"));
    }
    if !a.is_finite() {
        return domain("kappa requires a finite drift");
    }
    let at = a * t;
    if at.abs() < 1e-6 {
        Ok(t * (1.0 + at + 2.0 / 3.0 * at * at + at * at * at / 3.0))
    } else {
        Ok((2.0 * at).exp_m1() / (2.0 * a))
    }
}

/// Drift and diffusion of the general OU equation `dZ = AZ dt + Σ dW`.
#[derive(Debug, Clone)]
pub struct OuMatrixModel {
    drift: SquareMatrix,
    diffusion: DiffusionMatrix,
}

impl OuMatrixModel {
    /// Requires `ΣΣᵀ` to be positive definite.
    pub fn new(drift: SquareMatrix, diffusion: DiffusionMatrix) -> Result<Self> {
        if drift.dim() != diffusion.dim() {
            return domain("drift and diffusion dimensions differ");
        }
        if nalgebra::Cholesky::new(diffusion.covariance()).is_none() {
            return domain("diffusion covariance must be positive definite");
        }
        Ok(Self { drift, diffusion })
    }

    pub fn drift(&self) -> &SquareMatrix {
        &self.drift
    }

    pub fn diffusion(&self) -> &DiffusionMatrix {
        &self.diffusion
    }

    pub fn dim(&self) -> usize {
        self.drift.dim()
    }
}

/// One of the five process families, each with a transition density with
/// respect to Lebesgue measure on its state space.
#[derive(Debug, Clone)]
pub enum ProcessModel {
    /// Standard `d`-dimensional Wiener process.
    Wiener { dim: usize },
    /// Radial part of the `d`-dimensional Wiener process.
    Bessel { dim: usize },
    /// `dZ = aZ dt + σ dW` in `ℝ^d`.
    OuScalar { a: f64, sigma: f64, dim: usize },
    /// Radial part of [`ProcessModel::OuScalar`].
    OuRadial { a: f64, sigma: f64, dim: usize },
    /// `dZ = AZ dt + Σ dW`.
    OuMatrix(OuMatrixModel),
}

impl ProcessModel {
    pub fn wiener(dim: usize) -> Result<Self> {
        let m = ProcessModel::Wiener { dim };
        m.validate().map(|_| m)
    }

    pub fn bessel(dim: usize) -> Result<Self> {
        let m = ProcessModel::Bessel { dim };
        m.validate().map(|_| m)
    }

    pub fn ou_scalar(a: f64, sigma: f64, dim: usize) -> Result<Self> {
        let m = ProcessModel::OuScalar { a, sigma, dim };
        m.validate().map(|_| m)
    }

    pub fn ou_radial(a: f64, sigma: f64, dim: usize) -> Result<Self> {
        let m = ProcessModel::OuRadial { a, sigma, dim };
        m.validate().map(|_| m)
    }

    pub fn ou_matrix(drift: SquareMatrix, diffusion: DiffusionMatrix) -> Result<Self> {
        Ok(ProcessModel::OuMatrix(OuMatrixModel::new(drift, diffusion)?))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ProcessModel::Wiener { dim } | ProcessModel::Bessel { dim } => {
                if *dim == 0 {
                    return domain("dimension must be at least 1");
                }
            }
            ProcessModel::OuScalar { a, sigma, dim } | ProcessModel::OuRadial { a, sigma, dim } => {
                if *dim == 0 {
                    return domain("dimension must be at least 1");
                }
                if !a.is_finite() || !sigma.is_finite() {
                    return domain("OU parameters must be finite");
                }
                if *sigma == 0.0 {
                    return domain("sigma must be nonzero");
                }
            }
            ProcessModel::OuMatrix(_) => {}
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            ProcessModel::Wiener { .. } => "wiener",
            ProcessModel::Bessel { .. } => "bessel",
            ProcessModel::OuScalar { .. } => "ou-scalar",
            ProcessModel::OuRadial { .. } => "ou-radial",
            ProcessModel::OuMatrix(_) => "ou-matrix",
        }
    }

    /// Dimension of the underlying (non-radial) process.
    pub fn dim(&self) -> usize {
        match self {
            ProcessModel::Wiener { dim }
            | ProcessModel::Bessel { dim }
            | ProcessModel::OuScalar { dim, .. }
            | ProcessModel::OuRadial { dim, .. } => *dim,
            ProcessModel::OuMatrix(m) => m.dim(),
        }
    }

    pub fn is_radial(&self) -> bool {
        matches!(self, ProcessModel::Bessel { .. } | ProcessModel::OuRadial { .. })
    }

    pub fn is_gaussian(&self) -> bool {
        !self.is_radial()
    }

    pub fn state_space(&self) -> StateSpace {
        if self.is_radial() {
            StateSpace::HalfLine
        } else {
            StateSpace::Euclidean(self.dim())
        }
    }

    /// `(a, σ)` for the isotropic families; Wiener and Bessel are `(0, 1)`.
    pub fn isotropic_params(&self) -> Option<(f64, f64)> {
        match self {
            ProcessModel::Wiener { .. } | ProcessModel::Bessel { .. } => Some((0.0, 1.0)),
            ProcessModel::OuScalar { a, sigma, .. } | ProcessModel::OuRadial { a, sigma, .. } => Some((*a, *sigma)),
            ProcessModel::OuMatrix(_) => None,
        }
    }

    /// JSON description used in report and sample metadata.
    pub fn describe(&self) -> Value {
        match self {
            ProcessModel::Wiener { dim } | ProcessModel::Bessel { dim } => json!({"model": self.name(), "d": dim}),
            ProcessModel::OuScalar { a, sigma, dim } | ProcessModel::OuRadial { a, sigma, dim } => {
                json!({"model": self.name(), "a": a, "sigma": sigma, "d": dim})
            }
            ProcessModel::OuMatrix(m) => {
                let rows = |mat: &DMatrix<f64>| -> Vec<Vec<f64>> {
                    mat.row_iter().map(|r| r.iter().copied().collect()).collect()
                };
                json!({
                    "model": self.name(),
                    "A": rows(m.drift.as_matrix()),
                    "Sigma": rows(m.diffusion.as_matrix()),
                })
            }
        }
    }

    pub(crate) fn check_state(&self, x: &[f64], what: &str) -> Result<()> {
        if !self.state_space().contains(x) {
            return domain(format!(
                "{what} = {x:?} is not in the state space of the {} model ({:?})",
                self.name(),
                self.state_space()
            ));
        }
        Ok(())
    }

    /// The density `y ↦ p_t(x, y)` frozen at `t`.
    pub fn frozen(&self, t: f64) -> Result<FrozenModel> {
        self.validate()?;
        if !(t > 0.0) || !t.is_finite() {
            return domain(format!("time must be positive and finite, got {t}"));
        }
        Ok(match self {
            ProcessModel::Wiener { dim } => FrozenModel::Isotropic(IsotropicGaussian::new(*dim, 1.0, t)),
            ProcessModel::OuScalar { a, sigma, dim } => {
                FrozenModel::Isotropic(IsotropicGaussian::new(*dim, (a * t).exp(), sigma * sigma * kappa(*a, t)?))
            }
            ProcessModel::Bessel { dim } => FrozenModel::Radial(RadialKernel::new(*dim, 1.0, t)?),
            ProcessModel::OuRadial { a, sigma, dim } => {
                FrozenModel::Radial(RadialKernel::new(*dim, (a * t).exp(), sigma * sigma * kappa(*a, t)?)?)
            }
            ProcessModel::OuMatrix(m) => FrozenModel::Matrix(MatrixGaussian::new(m, t)?),
        })
    }

    /// `ln p_t(x, y)`.
    pub fn log_density(&self, t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_state(x, "x")?;
        self.check_state(y, "y")?;
        Ok(self.frozen(t)?.log_density(x, y))
    }

    /// `p_t(x, y)`.
    pub fn density(&self, t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
        self.log_density(t, x, y).map(f64::exp)
    }

    /// The second form of the general OU density, through `e^{-tA}` and `Ṽ_t`.
    pub fn density_tilde(&self, t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
        let ProcessModel::OuMatrix(m) = self else {
            return domain("density_tilde is defined for the general OU model only");
        };
        self.check_state(x, "x")?;
        self.check_state(y, "y")?;
        if !(t > 0.0) || !t.is_finite() {
            return domain(format!("time must be positive and finite, got {t}"));
        }
        let back = expm(&(m.drift.as_matrix() * -t))?;
        let vt = gramian_vt(&m.drift, &m.diffusion, t)?;
        let vtilde = gramian_vt_tilde(&m.drift, &m.diffusion, t)?;
        let yv = DVector::from_column_slice(y);
        let diff: Vec<f64> = x.iter().zip((back * yv).iter()).map(|(a, b)| a - b).collect();
        let d = x.len() as f64;
        Ok((-0.5 * (d * (2.0 * PI).ln() + vt.log_det()) - 0.5 * vtilde.quadratic_form(&diff)).exp())
    }

    /// `lim_{ε↓0} ε^{-(2ν+1)} p_t(x, ε)` in log form, for the radial families.
    ///
    /// From `I_ν(z) ~ (z/2)^ν / Γ(ν+1)` as `z ↓ 0` this equals
    /// `(2^ν τ^{ν+1} Γ(ν+1))^{-1} exp(-X²/(2τ))` with `τ = σ²κ(a,t)`, `X = e^{at}x`.
    pub fn log_zero_endpoint_rate(&self, t: f64, x: f64) -> Result<f64> {
        let FrozenModel::Radial(k) = self.frozen(t)? else {
            return domain("the zero-endpoint rate is defined for radial models only");
        };
        if !(x >= 0.0) || !x.is_finite() {
            return domain(format!("radial state must be nonnegative, got {x}"));
        }
        Ok(k.log_zero_rate(x))
    }

    /// Mean map, forward Gramian and backward Gramian for a Gaussian model over a step `h`.
    pub fn gaussian_parts(&self, h: f64) -> Result<GaussianParts> {
        self.validate()?;
        if !(h > 0.0) || !h.is_finite() {
            return domain(format!("time step must be positive, got {h}"));
        }
        let d = self.dim();
        let id = DMatrix::<f64>::identity(d, d);
        match self {
            ProcessModel::Wiener { .. } | ProcessModel::OuScalar { .. } => {
                let (a, sigma) = self.isotropic_params().expect("isotropic");
                let s2 = sigma * sigma;
                Ok(GaussianParts {
                    mean_map: &id * (a * h).exp(),
                    forward: Gramian::new(h, &id * (s2 * kappa(a, h)?))?,
                    backward: Gramian::new(h, &id * (s2 * kappa(-a, h)?))?,
                    back_map: &id * (-a * h).exp(),
                })
            }
            ProcessModel::OuMatrix(m) => Ok(GaussianParts {
                mean_map: expm(&(m.drift.as_matrix() * h))?,
                forward: gramian_vt(&m.drift, &m.diffusion, h)?,
                backward: gramian_vt_tilde(&m.drift, &m.diffusion, h)?,
                back_map: expm(&(m.drift.as_matrix() * -h))?,
            }),
            _ => domain("Gaussian parts requested for a radial model"),
        }
    }
}

impl MarkovKernel for ProcessModel {
    fn state_space(&self) -> StateSpace {
        ProcessModel::state_space(self)
    }

    fn transition(&self, s: f64, t: f64) -> Result<Box<dyn Transition + '_>> {
        Ok(Box::new(self.frozen(t - s)?))
    }

    fn label(&self) -> String {
        self.describe().to_string()
    }
}

/// `e^{hA}`, `V_h`, `Ṽ_h` and `e^{-hA}` for a Gaussian model.
#[derive(Debug, Clone)]
pub struct GaussianParts {
    pub mean_map: DMatrix<f64>,
    pub forward: Gramian,
    pub backward: Gramian,
    pub back_map: DMatrix<f64>,
}

/// A base-model density frozen at a time.
#[derive(Debug, Clone)]
pub enum FrozenModel {
    Isotropic(IsotropicGaussian),
    Radial(RadialKernel),
    Matrix(MatrixGaussian),
}

impl Transition for FrozenModel {
    fn log_density(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            FrozenModel::Isotropic(k) => k.log_density(x, y),
            FrozenModel::Radial(k) => k.log_density(x[0], y[0]),
            FrozenModel::Matrix(k) => k.log_density(x, y),
        }
    }

    fn location(&self, x: &[f64]) -> Vec<f64> {
        match self {
            FrozenModel::Isotropic(k) => x.iter().map(|v| v * k.drift_scale).collect(),
            FrozenModel::Radial(k) => vec![k.location(x[0])],
            FrozenModel::Matrix(k) => (&k.mean_map * DVector::from_column_slice(x)).iter().copied().collect(),
        }
    }

    fn spread(&self) -> f64 {
        match self {
            FrozenModel::Isotropic(k) => k.var.sqrt(),
            FrozenModel::Radial(k) => k.var.sqrt(),
            FrozenModel::Matrix(k) => k.gram.matrix().diagonal().max().sqrt(),
        }
    }
}

/// `N(c·x, v I)` in `ℝ^d`: the Wiener kernel at variance `v` and start `c·x`.
#[derive(Debug, Clone)]
pub struct IsotropicGaussian {
    dim: usize,
    drift_scale: f64,
    var: f64,
    log_norm: f64,
}

impl IsotropicGaussian {
    pub fn new(dim: usize, drift_scale: f64, var: f64) -> Self {
        let log_norm = -0.5 * dim as f64 * (2.0 * PI * var).ln();
        Self {
            dim,
            drift_scale,
            var,
            log_norm,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn variance(&self) -> f64 {
        self.var
    }

    pub fn drift_scale(&self) -> f64 {
        self.drift_scale
    }

    pub fn log_density(&self, x: &[f64], y: &[f64]) -> f64 {
        let sq: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| {
                let r = b - self.drift_scale * a;
                r * r
            })
            .sum();
        self.log_norm - sq / (2.0 * self.var)
    }
}

/// The Bessel kernel at variance parameter `τ`, applied to the rescaled start `c·x`.
#[derive(Debug, Clone)]
pub struct RadialKernel {
    dim: usize,
    nu: BesselOrder,
    drift_scale: f64,
    var: f64,
    ln_gamma_nu1: f64,
}

impl RadialKernel {
    pub fn new(dim: usize, drift_scale: f64, var: f64) -> Result<Self> {
        let nu = BesselOrder::from_dimension(dim)?;
        Ok(Self {
            dim,
            nu,
            drift_scale,
            var,
            ln_gamma_nu1: ln_gamma(nu.value() + 1.0)?,
        })
    }

    pub fn order(&self) -> BesselOrder {
        self.nu
    }

    pub fn variance(&self) -> f64 {
        self.var
    }

    pub fn drift_scale(&self) -> f64 {
        self.drift_scale
    }

    /// `ln p(x, y)` for `x, y ≥ 0`, covering the `y = 0` limits and the `x = 0` row.
    pub fn log_density(&self, x: f64, y: f64) -> f64 {
        let nu = self.nu.value();
        let tau = self.var;
        let big_x = self.drift_scale * x;
        if y == 0.0 {
            if self.dim == 1 {
                return 0.5 * (2.0 / (PI * tau)).ln() - big_x * big_x / (2.0 * tau);
            }
            return f64::NEG_INFINITY;
        }
        if big_x == 0.0 {
            return (2.0 * nu + 1.0) * y.ln()
                - nu * std::f64::consts::LN_2
                - (nu + 1.0) * tau.ln()
                - self.ln_gamma_nu1
                - y * y / (2.0 * tau);
        }
        let z = big_x * y / tau;
        let lbi = log_bessel_i_scaled(self.nu, z).expect("argument is positive");
        let gap = big_x - y;
        (nu + 1.0) * y.ln() - nu * big_x.ln() - tau.ln() - gap * gap / (2.0 * tau) + lbi
    }

    /// `ln lim_{ε↓0} ε^{-(2ν+1)} p(x, ε)`.
    pub fn log_zero_rate(&self, x: f64) -> f64 {
        let nu = self.nu.value();
        let big_x = self.drift_scale * x;
        -nu * std::f64::consts::LN_2 - (nu + 1.0) * self.var.ln() - self.ln_gamma_nu1 - big_x * big_x / (2.0 * self.var)
    }

    fn location(&self, x: f64) -> f64 {
        let big_x = self.drift_scale * x;
        (big_x * big_x + self.dim as f64 * self.var).sqrt()
    }
}

/// `N(e^{tA}x, V_t)` with `V_t` factored once.
#[derive(Debug, Clone)]
pub struct MatrixGaussian {
    mean_map: DMatrix<f64>,
    gram: Gramian,
    log_norm: f64,
}

impl MatrixGaussian {
    pub fn new(m: &OuMatrixModel, t: f64) -> Result<Self> {
        let gram = gramian_vt(&m.drift, &m.diffusion, t)?;
        let d = m.dim() as f64;
        Ok(Self {
            mean_map: expm(&(m.drift.as_matrix() * t))?,
            log_norm: -0.5 * (d * (2.0 * PI).ln() + gram.log_det()),
            gram,
        })
    }

    pub fn log_density(&self, x: &[f64], y: &[f64]) -> f64 {
        let mean = &self.mean_map * DVector::from_column_slice(x);
        let diff: Vec<f64> = y.iter().zip(mean.iter()).map(|(a, b)| a - b).collect();
        self.log_norm - 0.5 * self.gram.quadratic_form(&diff)
    }
}

/// `P(‖Z_t‖ < b | Z_0 = (0,…,0,x))` for the isotropic OU process in dimension
/// `d ≥ 2`, by two-dimensional quadrature in polar coordinates.
///
/// The integrand is `r^{d-1} sin^{d-2}θ (2πτ)^{-d/2} exp(-(r² + X² - 2rX cos θ)/(2τ))`
/// over `r ∈ [0, b]`, `θ ∈ [0, π]`; the remaining angles contribute the constant
/// `2π ∏_{k=2}^{d-2} ∫₀^π sin^{d-k-1}` (or `2` when `d = 2`). This is independent
/// of the Bessel-function closed form and is used to validate it. An infinite `b`
/// is truncated at `X + (R + √d)√τ` with `R` the configured truncation radius.
pub fn radial_oracle(d: usize, a: f64, sigma: f64, t: f64, x: f64, b: f64, quad: &QuadratureConfig) -> Result<f64> {
    if d < 2 {
        return domain("the polar-coordinate oracle needs d >= 2");
    }
    if sigma == 0.0 || !sigma.is_finite() {
        return domain("sigma must be nonzero");
    }
    if !(x >= 0.0) || !x.is_finite() {
        return domain("start radius must be nonnegative");
    }
    if !(b > 0.0) {
        return domain("radius b must be positive");
    }
    let tau = sigma * sigma * kappa(a, t)?;
    let big_x = (a * t).exp() * x;
    let angular = if d == 2 {
        2.0
    } else {
        2.0 * PI * (2..=d - 2).map(|k| sine_power_integral((d - k - 1) as u32)).product::<f64>()
    };
    let df = d as f64;
    let log_front = angular.ln() - 0.5 * df * (2.0 * PI * tau).ln();
    let r_max = b.min(big_x + (quad.truncation_radius + df.sqrt()) * tau.sqrt());
    let power = (d - 2) as i32;
    let integrand = |p: &[f64]| {
        let (r, theta) = (p[0], p[1]);
        if r == 0.0 {
            return 0.0;
        }
        let gap = r - big_x;
        let expo = log_front + (df - 1.0) * r.ln() - gap * gap / (2.0 * tau) - r * big_x * (1.0 - theta.cos()) / tau;
        theta.sin().powi(power) * expo.exp()
    };
    integrate_box(integrand, &[(0.0, r_max), (0.0, PI)], quad).map(|i| i.value)
}

/// `∫₀^b p_t(x, r) dr` for a radial model, by one-dimensional quadrature of the closed form.
pub fn radial_cdf(model: &ProcessModel, t: f64, x: f64, b: f64, quad: &QuadratureConfig) -> Result<f64> {
    if !model.is_radial() {
        return domain("radial_cdf needs a radial model");
    }
    model.check_state(&[x], "x")?;
    let FrozenModel::Radial(k) = model.frozen(t)? else {
        unreachable!()
    };
    let peak = k.location(x);
    let mut pts = vec![0.0];
    if peak < b {
        pts.push(peak);
    }
    let upper = b.min(peak + (quad.truncation_radius + model.dim() as f64) * k.var.sqrt());
    if upper <= pts[pts.len() - 1] {
        pts.pop();
    }
    pts.push(upper);
    integrate_with_breaks(|r| k.log_density(x, r).exp(), &pts, quad).map(|i| i.value)
}
