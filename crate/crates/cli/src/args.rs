use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "bridgelab",
    version,
    about = "Transition densities, bridges and numerical checks for Wiener, Bessel and OU processes",
    args_override_self = true
)]
pub struct Cli {
    /// TOML file whose keys preload flags; explicit flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a transition or bridge density.
    Density(DensityArgs),
    /// Run a verification suite and write its JSON report.
    Verify(VerifyArgs),
    /// Sample bridge paths to CSV files.
    Sample(SampleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Wiener,
    Bessel,
    OuScalar,
    OuRadial,
    OuMatrix,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Base process.
    #[arg(long, visible_alias = "bridge", value_enum, default_value = "wiener")]
    pub model: ModelKind,
    /// Dimension.
    #[arg(short = 'd', long = "dim", default_value_t = 1, allow_negative_numbers = true)]
    pub dim: usize,
    /// Drift of the scalar OU models.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub a: f64,
    /// Diffusion of the scalar OU models.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub sigma: f64,
    /// Drift matrix A of ou-matrix, rows separated by ';', entries by ','.
    #[arg(long, allow_hyphen_values = true)]
    pub drift: Option<String>,
    /// Diffusion matrix Σ of ou-matrix, same layout as --drift.
    #[arg(long, allow_hyphen_values = true)]
    pub diffusion: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Construction {
    Ratio,
    RadialLimit,
    ClosedForm,
}

#[derive(Debug, Clone, Args)]
pub struct DensityArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Time t (or the bridge's end time of the step).
    #[arg(short = 't', long = "time", default_value_t = 1.0, allow_negative_numbers = true)]
    pub t: f64,
    /// Start state, comma separated; defaults to the origin.
    #[arg(short = 'x', allow_hyphen_values = true)]
    pub x: Option<String>,
    /// End state, comma separated; defaults to the origin.
    #[arg(short = 'y', allow_hyphen_values = true)]
    pub y: Option<String>,
    /// Evaluate the bridge on [0, T] instead of the base kernel.
    #[arg(short = 'T', long = "horizon", allow_negative_numbers = true)]
    pub horizon: Option<f64>,
    /// Bridge step start time s.
    #[arg(short = 's', long = "start-time", default_value_t = 0.0, allow_negative_numbers = true)]
    pub s: f64,
    /// Bridge start point, comma separated; defaults to the origin.
    #[arg(long, allow_hyphen_values = true)]
    pub start: Option<String>,
    /// Bridge end point, comma separated; defaults to the origin.
    #[arg(long, allow_hyphen_values = true)]
    pub end: Option<String>,
    /// Bridge construction; defaults to the one that applies.
    #[arg(long, value_enum)]
    pub construction: Option<Construction>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Kc,
    Normalization,
    Commute,
    BesselIdentity,
    LemmaHypotheses,
    All,
}

#[derive(Debug, Clone, Args)]
pub struct QuadArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub abs_tol: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub max_subdivisions: Option<usize>,
    /// Integration window half-width in spreads.
    #[arg(long, allow_negative_numbers = true)]
    pub truncation_radius: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub suite: Suite,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Bridge horizon T.
    #[arg(short = 'T', long = "horizon", default_value_t = 1.0, allow_negative_numbers = true)]
    pub horizon: f64,
    /// Time at which the lemma hypotheses are checked.
    #[arg(short = 't', long = "time", default_value_t = 0.7, allow_negative_numbers = true)]
    pub t: f64,
    #[command(flatten)]
    pub quad: QuadArgs,
    /// Report path; standard output when absent.
    #[arg(short = 'o', long)]
    pub output: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Horizon T.
    #[arg(short = 'T', long = "horizon", default_value_t = 1.0, allow_negative_numbers = true)]
    pub horizon: f64,
    /// Number of grid points, endpoints included.
    #[arg(long, default_value_t = 101)]
    pub grid: usize,
    #[arg(long, default_value_t = 1)]
    pub paths: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Bridge end point for Gaussian bases, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub end: Option<String>,
    /// Directory receiving path_NNNNN.csv and path_NNNNN.json.
    #[arg(short = 'o', long = "out-dir", default_value = "paths")]
    pub out_dir: String,
}
