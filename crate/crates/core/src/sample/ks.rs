use serde::Serialize;

use crate::error::{domain, Result};

/// Smallest sample size accepted by the tests.
pub const MIN_SAMPLE: usize = 100;

/// Kolmogorov-Smirnov statistic with its asymptotic p-value.
///
/// `m` is 0 for one-sample tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub n: usize,
    pub m: usize,
    pub p_value_bound: f64,
}

impl KsResult {
    /// True when the test does not reject at level `alpha`.
    pub fn accepts(&self, alpha: f64) -> bool {
        self.p_value_bound > alpha
    }
}

/// `Q(λ) = 2 Σ_{k≥1} (-1)^{k-1} exp(-2k²λ²)`, the Kolmogorov survival function.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-17 * sum.abs() {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn p_value(ne: f64, d: f64) -> f64 {
    let root = ne.sqrt();
    kolmogorov_survival((root + 0.12 + 0.11 / root) * d)
}

fn sorted(xs: &[f64], what: &str) -> Result<Vec<f64>> {
    if xs.len() < MIN_SAMPLE {
        return domain(format!("{what} has {} values, need at least {MIN_SAMPLE}", xs.len()));
    }
    if xs.iter().any(|x| x.is_nan()) {
        return domain(format!("{what} contains NaN"));
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Two-sample test: exact sup-distance between the empirical CDFs.
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> Result<KsResult> {
    let a = sorted(xs, "first sample")?;
    let b = sorted(ys, "second sample")?;
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = a[i].min(b[j]);
        while i < n && a[i] <= v {
            i += 1;
        }
        while j < m && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    Ok(KsResult {
        statistic: d,
        n,
        m,
        p_value_bound: p_value(ne, d),
    })
}

/// One-sample test against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> Result<KsResult> {
    let a = sorted(xs, "sample")?;
    let n = a.len();
    let mut d: f64 = 0.0;
    for (i, &x) in a.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n as f64 - f).max(f - i as f64 / n as f64);
    }
    Ok(KsResult {
        statistic: d,
        n,
        m: 0,
        p_value_bound: p_value(n as f64, d),
    })
}
