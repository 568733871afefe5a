//! Default grids and the report-producing suites driven by the command line
//! and the acceptance tests.

use rayon::prelude::*;
use serde::Serialize;

use super::checks::{bessel_identity_check, commutation_check, kc_check, normalization_check, StratifiedGrid};
use super::lemmas::{lemma_bessel_bridge_hypotheses_check, lemma_kc_hypotheses_check};
use super::quadrature::QuadratureConfig;
use super::report::{ReportBuilder, VerificationReport};
use crate::bridges::{BridgeConstruction, BridgeDensity, BridgeSpec};
use crate::error::Result;
use crate::kernel::MarkovKernel;
use crate::models::ProcessModel;
use crate::specfun::BesselOrder;

pub const KC_TOLERANCE: f64 = 1e-7;
pub const KC_TOLERANCE_MATRIX: f64 = 1e-6;
pub const NORMALIZATION_TOLERANCE: f64 = 1e-8;
pub const IDENTITY_TOLERANCE: f64 = 1e-8;
pub const COMMUTATION_TOLERANCE: f64 = 1e-10;

/// One Kolmogorov-Chapman evaluation point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KcCase {
    pub s: f64,
    pub t: f64,
    pub u: f64,
    pub x: Vec<f64>,
    pub z: Vec<f64>,
}

fn flatten(parts: &[&[f64]]) -> Vec<f64> {
    parts.iter().flat_map(|p| p.iter().copied()).collect()
}

/// Evaluates [`kc_check`] on each case, in parallel, reporting in case order.
pub fn kc_report(
    kernel: &dyn MarkovKernel,
    cases: &[KcCase],
    tolerance: f64,
    quad: &QuadratureConfig,
) -> VerificationReport {
    let rows: Vec<_> = cases
        .par_iter()
        .map(|c| kc_check(kernel, c.s, c.t, c.u, &c.x, &c.z, quad))
        .collect();
    let mut b = ReportBuilder::new(
        "kolmogorov-chapman",
        format!("{} cases; point = [s, t, u, x.., z..]", cases.len()),
        tolerance,
    )
    .param("kernel", kernel.label());
    let mut mc = false;
    for (c, row) in cases.iter().zip(rows) {
        let point = flatten(&[&[c.s, c.t, c.u], &c.x, &c.z]);
        match row {
            Ok(v) => {
                mc |= v.std_error.is_some();
                b.record(point, v.lhs, v.rhs, v.residual)
            }
            Err(e) => b.record_error(point, e.to_string()),
        }
    }
    if mc {
        b.set_param("method", "monte-carlo");
    }
    b.finish()
}

/// Evaluates [`normalization_check`] on `(s, t, x)` cases.
pub fn normalization_report(
    kernel: &dyn MarkovKernel,
    cases: &[(f64, f64, Vec<f64>)],
    tolerance: f64,
    quad: &QuadratureConfig,
) -> VerificationReport {
    let rows: Vec<_> = cases
        .par_iter()
        .map(|(s, t, x)| normalization_check(kernel, *s, *t, x, quad))
        .collect();
    let mut b = ReportBuilder::new(
        "normalization",
        format!("{} cases; point = [s, t, x..]", cases.len()),
        tolerance,
    )
    .param("kernel", kernel.label());
    for ((s, t, x), row) in cases.iter().zip(rows) {
        let point = flatten(&[&[*s, *t], x]);
        match row {
            Ok(v) => b.record(point, v.lhs, v.rhs, v.residual),
            Err(e) => b.record_error(point, e.to_string()),
        }
    }
    b.finish()
}

fn along(d: usize, r: f64) -> Vec<f64> {
    (0..d).map(|i| if i % 2 == 0 { r } else { -0.5 * r }).collect()
}

fn sample_states(model: &ProcessModel) -> Vec<Vec<f64>> {
    let d = model.state_space().dim();
    if model.is_radial() {
        vec![vec![0.0], vec![0.6], vec![1.7]]
    } else {
        vec![vec![0.0; d], along(d, 0.6), along(d, -1.1)]
    }
}

/// KC cases for a time-homogeneous base kernel.
pub fn base_kc_cases(model: &ProcessModel) -> Vec<KcCase> {
    let states = sample_states(model);
    let mut out = Vec::new();
    for &(s, t, u) in &[(0.0, 0.3, 1.0), (0.2, 0.7, 1.5)] {
        for (i, x) in states.iter().enumerate() {
            let z = &states[(i + 1) % states.len()];
            out.push(KcCase {
                s,
                t,
                u,
                x: x.clone(),
                z: z.clone(),
            });
        }
    }
    out
}

/// KC cases for a bridge on `[0, T]`.
pub fn bridge_kc_cases(model: &ProcessModel, horizon: f64) -> Vec<KcCase> {
    let states = sample_states(model);
    let mut out = Vec::new();
    for &(s, t, u) in &[(0.0, 0.3, 0.6), (0.1, 0.5, 0.9), (0.5, 0.7, 0.95)] {
        for (i, x) in states.iter().enumerate() {
            let z = &states[(i + 2) % states.len()];
            out.push(KcCase {
                s: s * horizon,
                t: t * horizon,
                u: u * horizon,
                x: x.clone(),
                z: z.clone(),
            });
        }
    }
    out
}

/// Stratified `(s, t, x)` normalization cases for a bridge on `[0, T]`.
pub fn bridge_normalization_cases(model: &ProcessModel, horizon: f64) -> Vec<(f64, f64, Vec<f64>)> {
    let states = sample_states(model);
    let mut out = Vec::new();
    for (s, t) in StratifiedGrid::default().times(horizon) {
        for x in &states {
            out.push((s, t, x.clone()));
        }
    }
    out
}

/// Every product bridge kernel on `model` ending at zero: ratio and closed form
/// for Gaussian bases; radial limit and closed form (plus ratio when `d = 1`)
/// for radial bases.
pub fn zero_bridges(model: &ProcessModel, horizon: f64) -> Result<Vec<BridgeDensity>> {
    let spec = BridgeSpec::zero(model.clone(), horizon)?;
    let constructions: &[BridgeConstruction] = if model.is_gaussian() {
        &[BridgeConstruction::Ratio, BridgeConstruction::ClosedForm]
    } else if model.dim() == 1 {
        &[
            BridgeConstruction::RadialLimit,
            BridgeConstruction::ClosedForm,
            BridgeConstruction::Ratio,
        ]
    } else {
        &[BridgeConstruction::RadialLimit, BridgeConstruction::ClosedForm]
    };
    constructions
        .iter()
        .map(|c| BridgeDensity::new(spec.clone(), *c))
        .collect()
}

fn tag(mut r: VerificationReport, key: &str, value: impl Into<serde_json::Value>) -> VerificationReport {
    r.params.insert(key.to_string(), value.into());
    r
}

/// KC reports for the base kernel and every zero-endpoint bridge on it.
pub fn kc_suite(model: &ProcessModel, horizon: f64, quad: &QuadratureConfig) -> Result<Vec<VerificationReport>> {
    let tol = if matches!(model, ProcessModel::OuMatrix(_)) {
        KC_TOLERANCE_MATRIX
    } else {
        KC_TOLERANCE
    };
    let mut out = vec![tag(kc_report(model, &base_kc_cases(model), tol, quad), "model", model.describe())];
    for bridge in zero_bridges(model, horizon)? {
        let r = kc_report(&bridge, &bridge_kc_cases(model, horizon), tol, quad);
        out.push(tag(
            tag(r, "bridge", bridge.spec().describe()),
            "construction",
            serde_json::to_value(bridge.construction()).expect("enum serialises"),
        ));
    }
    Ok(out)
}

/// Normalization reports for the base kernel and every zero-endpoint bridge on it.
pub fn normalization_suite(
    model: &ProcessModel,
    horizon: f64,
    quad: &QuadratureConfig,
) -> Result<Vec<VerificationReport>> {
    let base_cases: Vec<_> = sample_states(model)
        .into_iter()
        .flat_map(|x| [(0.0, 0.4, x.clone()), (0.0, 1.7, x)])
        .collect();
    let mut out = vec![tag(
        normalization_report(model, &base_cases, NORMALIZATION_TOLERANCE, quad),
        "model",
        model.describe(),
    )];
    for bridge in zero_bridges(model, horizon)? {
        let r = normalization_report(
            &bridge,
            &bridge_normalization_cases(model, horizon),
            NORMALIZATION_TOLERANCE,
            quad,
        );
        out.push(tag(
            tag(r, "bridge", bridge.spec().describe()),
            "construction",
            serde_json::to_value(bridge.construction()).expect("enum serialises"),
        ));
    }
    Ok(out)
}

/// Parameter grid for the Bessel integral identity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityGrid {
    pub nus: Vec<f64>,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub gammas: Vec<f64>,
}

impl Default for IdentityGrid {
    fn default() -> Self {
        Self {
            nus: vec![0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0],
            alphas: vec![0.1, 1.0, 10.0],
            betas: vec![0.1, 1.0, 10.0],
            gammas: vec![0.5, 1.0, 5.0],
        }
    }
}

/// The Bessel integral identity over a parameter grid.
pub fn bessel_identity_report(grid: &IdentityGrid, quad: &QuadratureConfig) -> Result<VerificationReport> {
    let mut points = Vec::new();
    for &nu in &grid.nus {
        BesselOrder::new(nu)?;
        for &a in &grid.alphas {
            for &b in &grid.betas {
                for &g in &grid.gammas {
                    points.push([nu, a, b, g]);
                }
            }
        }
    }
    let rows: Vec<_> = points
        .par_iter()
        .map(|&[nu, a, b, g]| bessel_identity_check(a, b, g, BesselOrder::new(nu).expect("checked"), quad))
        .collect();
    let mut r = ReportBuilder::new(
        "bessel-identity",
        format!(
            "nu in {:?}, alpha in {:?}, beta in {:?}, gamma in {:?}; point = [nu, alpha, beta, gamma]",
            grid.nus, grid.alphas, grid.betas, grid.gammas
        ),
        IDENTITY_TOLERANCE,
    );
    for (p, row) in points.iter().zip(rows) {
        match row {
            Ok(v) if v.converged => r.record(p.to_vec(), v.quadrature, v.closed_form, v.residual),
            Ok(v) => r.record_error(p.to_vec(), format!("quadrature did not converge (residual {:e})", v.residual)),
            Err(e) => r.record_error(p.to_vec(), e.to_string()),
        }
    }
    Ok(r.finish())
}

/// The `(a, σ, d)` triples and horizons of the standard commutation grid.
pub fn default_commutation_cases() -> Vec<(f64, f64, usize, f64)> {
    let mut out = Vec::new();
    for &(a, sigma, d) in &[(0.0, 1.0, 1), (0.0, 1.0, 2), (0.0, 1.0, 3), (-0.8, 1.3, 2), (0.5, 0.7, 3)] {
        for &big_t in &[1.0, 2.0] {
            out.push((a, sigma, d, big_t));
        }
    }
    out
}

/// Commutation reports for each `(a, σ, d, T)`.
pub fn commutation_suite(cases: &[(f64, f64, usize, f64)], grid: &StratifiedGrid) -> Result<Vec<VerificationReport>> {
    cases
        .iter()
        .map(|&(a, sigma, d, big_t)| commutation_check(a, sigma, d, big_t, grid, COMMUTATION_TOLERANCE))
        .collect()
}

/// Lemma-hypothesis reports: the KC hypotheses at time `t`, and for radial
/// models the zero-endpoint hypotheses on `[0, T]`.
pub fn lemma_suite(model: &ProcessModel, t: f64, horizon: f64, quad: &QuadratureConfig) -> Result<Vec<VerificationReport>> {
    let mut out = vec![lemma_kc_hypotheses_check(model, t, quad)?];
    if model.is_radial() {
        out.push(lemma_bessel_bridge_hypotheses_check(model, horizon)?);
    }
    Ok(out)
}
