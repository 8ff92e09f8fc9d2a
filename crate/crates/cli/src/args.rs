use clap::{Args, Parser, Subcommand, ValueEnum};

pub const DEFAULT_MAX_TERMS: u64 = 50_000_000;

#[derive(Debug, Parser)]
#[command(
    name = "ccgroup",
    version,
    about = "Coupon collector with group drawings"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact expectation, survival table and law of the collection time.
    Exact(ExactArgs),
    /// Seeded Monte Carlo estimate of the collection time.
    Simulate(SimulateArgs),
    /// Asymptotic prediction for one of the regimes.
    Predict(PredictArgs),
    /// Tabulates the periodic correction g(c, x).
    Gtable(GtableArgs),
    /// Reference values against predictions over a list of n.
    Converge(ConvergeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Regime {
    ConstS,
    Proportional,
    NearComplete,
    Window,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[arg(long)]
    pub n: u64,
    #[arg(long)]
    pub s: u64,
    /// Also emit the law of the collection time.
    #[arg(long)]
    pub pmf: bool,
    /// Report the expectation as an exact fraction.
    #[arg(long)]
    pub rational: bool,
    /// Absolute truncation tolerance.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Largest admissible horizon.
    #[arg(long, default_value_t = DEFAULT_MAX_TERMS)]
    pub max_terms: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub n: u64,
    #[arg(long)]
    pub s: u64,
    #[arg(long)]
    pub trials: u64,
    #[arg(long)]
    pub seed: u64,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Record the number of uncollected coupons after K draws.
    #[arg(long, value_name = "K")]
    pub record_xk: Option<u64>,
    /// Draw explicit subsets instead of hypergeometric hit counts.
    #[arg(long)]
    pub naive: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct RegimeArgs {
    #[arg(long, value_enum)]
    pub regime: Regime,
    #[arg(long)]
    pub s: Option<u64>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub t: Option<u32>,
    #[arg(long)]
    pub lambda: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub regime: RegimeArgs,
    #[arg(long)]
    pub n: Option<u64>,
    /// Classify (n, s) against the near-complete exponents.
    #[arg(long)]
    pub classify: bool,
    /// Absolute tolerance for the g series.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct GtableArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub c: Vec<f64>,
    #[arg(long, value_name = "P")]
    pub points: u64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub regime: RegimeArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    pub n_list: Vec<u64>,
    /// Monte Carlo trials where the exact horizon is out of reach.
    #[arg(long, requires = "seed")]
    pub trials: Option<u64>,
    #[arg(long, requires = "trials")]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_TERMS)]
    pub max_terms: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}
