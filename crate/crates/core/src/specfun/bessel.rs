//! Modified Bessel function of the first kind, `I_ν(z)`, for real `ν ≥ -1/2`
//! and `z ≥ 0`.
//!
//! Below the crossover `z* = max(20, 2ν²)` the defining power series is summed
//! outward from its largest term in log-space; above it the large-argument
//! expansion of `e^{-z} I_ν(z)` is used. Everything is available in log form so
//! density code never forms `I_ν` itself.

use statrs::function::gamma::ln_gamma;

use super::BesselOrder;
use crate::error::{domain, Result};

const SERIES_EPS: f64 = 1e-17;
const MAX_ASYMPTOTIC_TERMS: usize = 200;

/// Argument above which the asymptotic expansion replaces the power series.
pub fn crossover(nu: f64) -> f64 {
    20f64.max(2.0 * nu * nu)
}

fn check(nu: BesselOrder, z: f64) -> Result<f64> {
    if z.is_nan() || z < 0.0 {
        return domain(format!("Bessel argument must be nonnegative, got {z}"));
    }
    Ok(nu.value())
}

/// `ln I_ν(z)` from the power series, for any `z > 0`.
///
/// Terms are summed in both directions from the largest one so the result is
/// finite even where `I_ν(z)` itself overflows.
pub fn log_series(nu: f64, z: f64) -> f64 {
    debug_assert!(z > 0.0);
    let half = 0.5 * z;
    let q = half * half;
    let ln_half = half.ln();
    // Largest term: (m+1)(m+1+ν) ≈ q.
    let x = 0.5 * (-nu + (nu * nu + 4.0 * q).sqrt());
    let peak = (x - 1.0).ceil().max(0.0) as u64;
    let pf = peak as f64;
    let ln_peak = (2.0 * pf + nu) * ln_half - ln_gamma(pf + 1.0) - ln_gamma(nu + pf + 1.0);

    let mut sum = 1.0;
    let mut rel = 1.0;
    let mut m = pf;
    loop {
        rel *= q / ((m + 1.0) * (m + nu + 1.0));
        sum += rel;
        m += 1.0;
        if rel < SERIES_EPS * sum {
            break;
        }
    }
    let mut rel = 1.0;
    let mut m = pf;
    while m >= 1.0 {
        rel *= m * (m + nu) / q;
        sum += rel;
        m -= 1.0;
        if rel < SERIES_EPS * sum {
            break;
        }
    }
    ln_peak + sum.ln()
}

/// `e^{-z} I_ν(z)` from the large-argument expansion
/// `(2πz)^{-1/2} Σ_k (-1)^k a_k(ν) z^{-k}`.
///
/// Summation stops once a term drops below `1e-17` of the partial sum, the
/// terms start growing, or the series terminates (half-integer orders).
pub fn asymptotic_scaled(nu: f64, z: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    for k in 1..=MAX_ASYMPTOTIC_TERMS {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        let next = -term * (mu - odd * odd) / (8.0 * kf * z);
        if next == 0.0 {
            break;
        }
        if next.abs() > term.abs() && k > 8 {
            break;
        }
        sum += next;
        term = next;
        if term.abs() < SERIES_EPS * sum.abs() {
            break;
        }
    }
    sum / (2.0 * std::f64::consts::PI * z).sqrt()
}

/// `ln I_ν(z)`. Returns `-∞` for `I_ν(0) = 0` (ν > 0) and `+∞` for ν < 0 at z = 0.
pub fn log_bessel_i(nu: BesselOrder, z: f64) -> Result<f64> {
    let n = check(nu, z)?;
    if z == 0.0 {
        return Ok(at_zero(n).ln());
    }
    if z < crossover(n) {
        Ok(log_series(n, z))
    } else {
        Ok(z + asymptotic_scaled(n, z).ln())
    }
}

/// `ln(e^{-z} I_ν(z))`.
pub fn log_bessel_i_scaled(nu: BesselOrder, z: f64) -> Result<f64> {
    let n = check(nu, z)?;
    if z == 0.0 {
        return Ok(at_zero(n).ln());
    }
    if z < crossover(n) {
        Ok(log_series(n, z) - z)
    } else {
        Ok(asymptotic_scaled(n, z).ln())
    }
}

/// `I_ν(z)`; overflows to `+∞` for `z` beyond roughly 713.
pub fn bessel_i(nu: BesselOrder, z: f64) -> Result<f64> {
    log_bessel_i(nu, z).map(f64::exp)
}

/// `e^{-z} I_ν(z)`, finite for every `z > 0`.
pub fn bessel_i_scaled(nu: BesselOrder, z: f64) -> Result<f64> {
    log_bessel_i_scaled(nu, z).map(f64::exp)
}

fn at_zero(nu: f64) -> f64 {
    if nu == 0.0 {
        1.0
    } else if nu > 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::gamma;
    use std::f64::consts::PI;

    fn order(nu: f64) -> BesselOrder {
        BesselOrder::new(nu).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn value_at_origin() {
        assert_eq!(bessel_i(order(0.0), 0.0).unwrap(), 1.0);
        assert_eq!(bessel_i(order(1.0), 0.0).unwrap(), 0.0);
        assert_eq!(bessel_i(order(-0.5), 0.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn negative_argument_is_domain_error() {
        assert!(bessel_i(order(0.0), -1.0).is_err());
        assert!(bessel_i(order(0.0), f64::NAN).is_err());
    }

    #[test]
    fn half_integer_closed_forms() {
        for z in [0.5, 1.0, 2.0, 7.5, 19.9, 20.0, 35.0, 300.0] {
            let sinh = (2.0 / (PI * z)).sqrt() * z.sinh();
            let cosh = (2.0 / (PI * z)).sqrt() * z.cosh();
            assert!(rel(bessel_i(order(0.5), z).unwrap(), sinh) < 1e-12, "z={z}");
            assert!(rel(bessel_i(order(-0.5), z).unwrap(), cosh) < 1e-12, "z={z}");
            // I_{3/2}(z) = sqrt(2/(πz)) (cosh z - sinh z / z)
            let i32 = (2.0 / (PI * z)).sqrt() * (z.cosh() - z.sinh() / z);
            assert!(rel(bessel_i(order(1.5), z).unwrap(), i32) < 1e-12, "z={z}");
        }
    }

    #[test]
    fn reference_values() {
        // Reference values from scipy.special.iv / ive.
        assert!(rel(bessel_i(order(0.0), 1.0).unwrap(), 1.266_065_877_752_008_4) < 1e-14);
        assert!(rel(bessel_i(order(1.0), 1.0).unwrap(), 0.565_159_103_992_485_0) < 1e-14);
        assert!(rel(bessel_i(order(0.0), 10.0).unwrap(), 2_815.716_628_466_254) < 1e-13);
        assert!(rel(bessel_i_scaled(order(0.0), 50.0).unwrap(), 0.056_561_626_647_454_2) < 1e-12);
    }

    #[test]
    fn small_argument_limit() {
        for nu in [0.0, 0.5, 1.0, 1.5] {
            let expected = 1.0 / (2f64.powf(nu) * gamma(nu + 1.0).unwrap());
            let z: f64 = 1e-9;
            let got = bessel_i(order(nu), z).unwrap() / z.powf(nu);
            assert!(rel(got, expected) < 1e-12, "nu={nu}");
        }
    }

    #[test]
    fn crossover_continuity() {
        for nu in [0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 7.3] {
            let z = crossover(nu);
            let series = (log_series(nu, z) - z).exp();
            let asym = asymptotic_scaled(nu, z);
            assert!(rel(asym, series) < 1e-11, "nu={nu} series={series} asym={asym}");
        }
    }

    #[test]
    fn scaled_bounded_by_leading_asymptotic() {
        for nu in [0.0, 0.5, 1.0, 2.5] {
            for z in [25.0, 100.0, 1e4, 1e8] {
                let s = bessel_i_scaled(order(nu), z).unwrap();
                let lead = 1.0 / (2.0 * PI * z).sqrt();
                assert!(s > 0.0 && s <= lead * (1.0 + 1.0 / z), "nu={nu} z={z}");
            }
        }
    }

    #[test]
    fn huge_argument_stays_finite_in_log_space() {
        let l = log_bessel_i(order(1.0), 1e6).unwrap();
        assert!(l.is_finite());
        assert!(bessel_i(order(1.0), 1e6).unwrap().is_infinite());
        // Large order, argument below the crossover: series in log space.
        let l = log_bessel_i(order(40.0), 2000.0).unwrap();
        let asym = 2000.0 + asymptotic_scaled(40.0, 2000.0).ln();
        assert!((l - asym).abs() < 1e-11 * asym);
    }
}
