use std::fmt;
use std::path::Path;

use bridgelab_core::sample::{sample_bridge_paths, uniform_grid};
use bridgelab_core::verify::suites::{
    bessel_identity_report, commutation_suite, kc_suite, lemma_suite, normalization_suite, IdentityGrid,
};
use bridgelab_core::verify::{StratifiedGrid, SuiteReport};
use bridgelab_core::{
    BridgeConstruction, BridgeDensity, BridgeSpec, DiffusionMatrix, ProcessModel, QuadratureConfig, SquareMatrix,
    VerificationReport,
};

use crate::args::{Construction, DensityArgs, ModelArgs, ModelKind, QuadArgs, SampleArgs, Suite, VerifyArgs};
use crate::format::general;
use crate::output::write_atomic;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Domain(_) => EXIT_DOMAIN,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Domain(m) => f.write_str(m),
        }
    }
}

impl From<bridgelab_core::Error> for CliError {
    fn from(e: bridgelab_core::Error) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Domain(format!("i/o: {e}"))
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("{what}: cannot parse '{v}' as a number")))
        })
        .collect()
}

fn parse_matrix(s: &str, what: &str) -> Result<Vec<Vec<f64>>> {
    s.split(';').map(|row| parse_list(row, what)).collect()
}

fn rows_ref(rows: &[Vec<f64>]) -> Vec<&[f64]> {
    rows.iter().map(Vec::as_slice).collect()
}

pub fn build_model(m: &ModelArgs) -> Result<ProcessModel> {
    Ok(match m.model {
        ModelKind::Wiener => ProcessModel::wiener(m.dim)?,
        ModelKind::Bessel => ProcessModel::bessel(m.dim)?,
        ModelKind::OuScalar => ProcessModel::ou_scalar(m.a, m.sigma, m.dim)?,
        ModelKind::OuRadial => ProcessModel::ou_radial(m.a, m.sigma, m.dim)?,
        ModelKind::OuMatrix => {
            let drift = m
                .drift
                .as_deref()
                .ok_or_else(|| CliError::Usage("ou-matrix needs --drift".into()))?;
            let drift = SquareMatrix::from_rows(&rows_ref(&parse_matrix(drift, "--drift")?))?;
            let diffusion = match m.diffusion.as_deref() {
                Some(s) => {
                    let square = SquareMatrix::from_rows(&rows_ref(&parse_matrix(s, "--diffusion")?))?;
                    DiffusionMatrix::new(square.into_matrix())?
                }
                None => DiffusionMatrix::scaled_identity(drift.dim(), 1.0),
            };
            ProcessModel::ou_matrix(drift, diffusion)?
        }
    })
}

fn state(arg: Option<&str>, model: &ProcessModel, what: &str) -> Result<Vec<f64>> {
    let n = model.state_space().dim();
    match arg {
        None => Ok(vec![0.0; n]),
        Some(s) => {
            let v = parse_list(s, what)?;
            if v.len() != n {
                return Err(CliError::Domain(format!(
                    "{what} has {} components, the {} state space needs {n}",
                    v.len(),
                    model.name()
                )));
            }
            Ok(v)
        }
    }
}

pub fn density(args: &DensityArgs) -> Result<i32> {
    let model = build_model(&args.model)?;
    let x = state(args.x.as_deref(), &model, "-x")?;
    let y = state(args.y.as_deref(), &model, "-y")?;
    let value = match args.horizon {
        None => model.density(args.t, &x, &y)?,
        Some(horizon) => {
            let start = state(args.start.as_deref(), &model, "--start")?;
            let end = state(args.end.as_deref(), &model, "--end")?;
            let spec = BridgeSpec::new(model, start, end, horizon)?;
            let bridge = match args.construction {
                None => BridgeDensity::preferred(spec)?,
                Some(c) => BridgeDensity::new(
                    spec,
                    match c {
                        Construction::Ratio => BridgeConstruction::Ratio,
                        Construction::RadialLimit => BridgeConstruction::RadialLimit,
                        Construction::ClosedForm => BridgeConstruction::ClosedForm,
                    },
                )?,
            };
            bridge.density(args.s, args.t, &x, &y)?
        }
    };
    println!("{}", general(value, 15));
    Ok(EXIT_PASS)
}

fn quadrature(q: &QuadArgs) -> Result<QuadratureConfig> {
    let mut cfg = QuadratureConfig::default();
    if let Some(v) = q.abs_tol {
        cfg.abs_tol = v;
    }
    if let Some(v) = q.rel_tol {
        cfg.rel_tol = v;
    }
    if let Some(v) = q.max_subdivisions {
        cfg.max_subdivisions = v;
    }
    if let Some(v) = q.truncation_radius {
        cfg.truncation_radius = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn suite_name(s: Suite) -> &'static str {
    match s {
        Suite::Kc => "kc",
        Suite::Normalization => "normalization",
        Suite::Commute => "commute",
        Suite::BesselIdentity => "bessel-identity",
        Suite::LemmaHypotheses => "lemma-hypotheses",
        Suite::All => "all",
    }
}

fn run_suite(suite: Suite, args: &VerifyArgs, model: &ProcessModel, quad: &QuadratureConfig) -> Result<Vec<VerificationReport>> {
    let m = &args.model;
    Ok(match suite {
        Suite::Kc => kc_suite(model, args.horizon, quad)?,
        Suite::Normalization => normalization_suite(model, args.horizon, quad)?,
        Suite::Commute => commutation_suite(&[(m.a, m.sigma, m.dim, args.horizon)], &StratifiedGrid::default())?,
        Suite::BesselIdentity => vec![bessel_identity_report(&IdentityGrid::default(), quad)?],
        Suite::LemmaHypotheses => lemma_suite(model, args.t, args.horizon, quad)?,
        Suite::All => {
            let mut out = Vec::new();
            for s in [
                Suite::Kc,
                Suite::Normalization,
                Suite::Commute,
                Suite::BesselIdentity,
                Suite::LemmaHypotheses,
            ] {
                out.extend(run_suite(s, args, model, quad)?);
            }
            out
        }
    })
}

pub fn verify(args: &VerifyArgs) -> Result<i32> {
    let model = build_model(&args.model)?;
    let quad = quadrature(&args.quad)?;
    let name = suite_name(args.suite);
    let report = SuiteReport::new(name, run_suite(args.suite, args, &model, &quad)?);
    let json = report.to_json();
    match &args.output {
        Some(path) => write_atomic(Path::new(path), &json)?,
        None => print!("{json}"),
    }
    let failed = report.reports.iter().filter(|r| !r.pass).count();
    eprintln!(
        "{name}: {} ({} reports, {failed} failing)",
        if report.pass { "PASS" } else { "FAIL" },
        report.reports.len()
    );
    Ok(if report.pass { EXIT_PASS } else { EXIT_FAIL })
}

pub fn sample(args: &SampleArgs) -> Result<i32> {
    let model = build_model(&args.model)?;
    let start = vec![0.0; model.state_space().dim()];
    let end = state(args.end.as_deref(), &model, "--end")?;
    if args.grid < 2 {
        return Err(CliError::Usage("--grid needs at least 2 points".into()));
    }
    let spec = BridgeSpec::new(model, start, end, args.horizon)?;
    let grid = uniform_grid(args.horizon, args.grid - 1)?;
    let paths = sample_bridge_paths(&spec, &grid, args.seed, args.paths)?;
    let dir = Path::new(&args.out_dir);
    for p in &paths {
        let stem = format!("path_{:05}", p.path);
        write_atomic(&dir.join(format!("{stem}.csv")), &p.to_csv())?;
        let meta = serde_json::to_string_pretty(&p.metadata(&spec)).expect("metadata serialises") + "\n";
        write_atomic(&dir.join(format!("{stem}.json")), &meta)?;
    }
    eprintln!("wrote {} paths to {}", paths.len(), dir.display());
    Ok(EXIT_PASS)
}
