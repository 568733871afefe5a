//! Quadrature and the executable checks, with JSON reports.

pub mod checks;
pub mod lemmas;
pub mod quadrature;
pub mod report;
pub mod suites;

pub use checks::{
    bessel_identity_check, commutation_check, integrate_state, kc_check, normalization_check, CheckValue,
    StratifiedGrid, DENSITY_FLOOR,
};
pub use lemmas::{
    epsilon_limit_oracle, fit_bessel_bounds, lemma_bessel_bridge_hypotheses_check, lemma_kc_hypotheses_check,
    BesselBoundFit,
};
pub use quadrature::{integrate_halfline, Integral, QuadratureConfig};
pub use report::{ReportBuilder, SuiteReport, VerificationReport, Witness};
