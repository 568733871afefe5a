//! Special functions used by the density formulas.

pub mod bessel;

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::verify::quadrature::{integrate, QuadratureConfig};

pub use bessel::{bessel_i, bessel_i_scaled, log_bessel_i, log_bessel_i_scaled};

/// Order `ν ≥ -1/2` of a modified Bessel function; `ν = d/2 - 1` for a radial
/// process in dimension `d`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct BesselOrder(f64);

impl BesselOrder {
    pub fn new(nu: f64) -> Result<Self> {
        if nu.is_nan() || nu < -0.5 {
            return domain(format!("Bessel order must be at least -1/2, got {nu}"));
        }
        Ok(Self(nu))
    }

    pub fn from_dimension(d: usize) -> Result<Self> {
        if d == 0 {
            return domain("dimension must be at least 1");
        }
        Ok(Self(d as f64 / 2.0 - 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `Γ(x)` for `x > 0`.
pub fn gamma(x: f64) -> Result<f64> {
    if x.is_nan() || x <= 0.0 {
        return domain(format!("gamma requires a positive argument, got {x}"));
    }
    Ok(statrs::function::gamma::gamma(x))
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if x.is_nan() || x <= 0.0 {
        return domain(format!("ln_gamma requires a positive argument, got {x}"));
    }
    Ok(statrs::function::gamma::ln_gamma(x))
}

/// `∫₀^π sin^k θ dθ = c_k (k-1)!!/k!!` with `c_k = π` for even `k` and `2` for odd `k`.
///
/// `k = 0` gives `π`.
pub fn sine_power_integral(k: u32) -> f64 {
    let mut ratio = 1.0;
    let mut i = k;
    while i >= 2 {
        ratio *= (i - 1) as f64 / i as f64;
        i -= 2;
    }
    let c = if k.is_multiple_of(2) { std::f64::consts::PI } else { 2.0 };
    c * ratio
}

/// Outcome of comparing a quadrature against a closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureResidual {
    pub residual: f64,
    pub quadrature: f64,
    pub closed_form: f64,
    pub quadrature_error: f64,
    pub converged: bool,
}

/// Checks `∫₀^π sin^{2ν}θ e^{c cos θ} dθ = Γ(ν+½)Γ(½)(c/2)^{-ν} I_ν(c)` for `ν ≥ 0`, `c > 0`.
///
/// Both sides carry a common factor `e^{-c}`. Non-convergence of the quadrature
/// is reported through `converged` with the partial estimate.
pub fn gr8431_check(nu: BesselOrder, c: f64, quad: &QuadratureConfig) -> Result<QuadratureResidual> {
    let n = nu.value();
    if n < 0.0 {
        return domain("the angular integral needs dimension at least 2 (nu >= 0)");
    }
    if c.is_nan() || c <= 0.0 {
        return domain(format!("c must be positive, got {c}"));
    }
    let power = 2.0 * n;
    let integrand = |theta: f64| {
        let s = theta.sin();
        let base = if power == 0.0 { 1.0 } else { s.powf(power) };
        base * (c * (theta.cos() - 1.0)).exp()
    };
    let (quadrature, quadrature_error, converged) =
        match integrate(integrand, 0.0, std::f64::consts::PI, quad) {
            Ok(i) => (i.value, i.abs_error, true),
            Err(Error::NonConvergence { estimate, error, .. }) => (estimate, error, false),
            Err(e) => return Err(e),
        };
    let closed_form = (ln_gamma(n + 0.5)? + ln_gamma(0.5)? - n * (0.5 * c).ln()
        + log_bessel_i_scaled(nu, c)?)
    .exp();
    Ok(QuadratureResidual {
        residual: ((quadrature - closed_form) / closed_form).abs(),
        quadrature,
        closed_form,
        quadrature_error,
        converged,
    })
}
