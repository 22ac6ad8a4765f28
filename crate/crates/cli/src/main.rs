//! `dpa`: seeded batch experiments on directed preferential attachment
//! graphs and their branching-process limit.

mod commands;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::output::Format;

#[derive(Parser)]
#[command(
    name = "dpa",
    version,
    about = "Directed preferential attachment experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Grow a DPA(m, β) graph and write its edge list.
    Generate(GenerateArgs),
    /// PageRank of every vertex of a generated or loaded graph.
    Pagerank(PagerankArgs),
    /// (in-degree, PageRank) pairs of the root of limit trees.
    LimitSample(LimitArgs),
    /// The same pairs drawn from the Pólya point tree.
    PolyaSample(LimitArgs),
    /// Two-sample KS tests between the branching-process and Pólya pairs.
    CoupleTest(LimitArgs),
    /// Martingale means and moment bounds over a time grid.
    MartingaleTest(MartingaleArgs),
    /// Hill and CCDF-regression tail fits of one CSV or JSONL column.
    TailFit(TailFitArgs),
    /// Joint tail of (D⁻, R) in a finite graph against limit samples.
    JointCompare(JointArgs),
    /// Per-trajectory growth slope of the root's PageRank (m = 1).
    RootGrowth(RootGrowthArgs),
    /// Closed-form tail and growth exponents.
    Exponents(ExponentsArgs),
}

#[derive(Args, Serialize)]
pub struct Common {
    /// Base seed; replica r uses stream r.
    #[arg(long, env = "DPA_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: all logical cores).
    #[arg(long)]
    #[serde(skip)]
    pub jobs: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct Model {
    /// Out-edges per new vertex.
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    #[arg(long, default_value_t = 0.0)]
    pub beta: f64,
}

#[derive(Args, Serialize)]
pub struct GenerateArgs {
    #[arg(long)]
    pub n: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: Model,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Backward solve over the acyclic graph.
    Exact,
    Power,
    /// Normalized variant that sends the root's mass back uniformly.
    Dangling,
}

#[derive(Args, Serialize)]
pub struct PagerankArgs {
    /// Edge list `source,target`; otherwise a graph is generated from --n.
    #[arg(long, conflicts_with = "n")]
    pub input: Option<PathBuf>,
    #[arg(long, required_unless_present = "input")]
    pub n: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: Model,
    #[arg(long, default_value_t = 0.85)]
    pub c: f64,
    #[arg(long, value_enum, default_value_t = Method::Exact)]
    pub method: Method,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, default_value_t = 100_000)]
    pub max_iter: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Serialize)]
pub struct LimitArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: Model,
    #[arg(long, default_value_t = 0.85)]
    pub c: f64,
    #[arg(long, default_value_t = 10_000)]
    pub replicas: usize,
    /// Relative pruning tolerance; 0 grows every node. Defaults to exact
    /// for m = 1 and 1e-6 otherwise.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Serialize)]
pub struct MartingaleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: Model,
    #[arg(long, default_value_t = 0.85)]
    pub c: f64,
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
    pub t_grid: Vec<f64>,
    #[arg(long, default_value_t = 1_000)]
    pub replicas: usize,
    #[arg(long, default_value_t = 4)]
    pub max_moment: u32,
    /// Where to write the moment table `quantity,k,t,empirical_moment,bound`.
    #[arg(long)]
    pub moments_out: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Serialize)]
pub struct TailFitArgs {
    /// CSV with a header row, or JSON lines; stdin when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value = "pagerank")]
    pub column: String,
    /// Hill order statistics; default ⌈N^0.6⌉.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_delimiter = ',', num_args = 2, default_value = "0.9,0.999")]
    pub window: Vec<f64>,
    /// Add Uniform(0,1) noise first, for integer data.
    #[arg(long)]
    pub jitter: bool,
    /// Subtracted before fitting; values that end up <= 0 are dropped.
    #[arg(long, default_value_t = 0.0)]
    pub shift: f64,
    /// k values for a Hill plot.
    #[arg(long, value_delimiter = ',')]
    pub hill_plot: Vec<usize>,
    /// Where to write the Hill plot `k,exponent`.
    #[arg(long, requires = "hill_plot")]
    pub plot_out: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Serialize)]
pub struct JointArgs {
    #[arg(long, default_value_t = 1_000_000)]
    pub n: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: Model,
    #[arg(long, default_value_t = 0.5)]
    pub c: f64,
    /// Number of limit samples.
    #[arg(long, default_value_t = 100_000)]
    pub replicas: usize,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Serialize)]
pub struct RootGrowthArgs {
    #[arg(long, default_value_t = 0.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.5)]
    pub c: f64,
    #[arg(long, default_value_t = 1_000)]
    pub lo: usize,
    #[arg(long, default_value_t = 100_000)]
    pub hi: usize,
    #[arg(long, default_value_t = 10)]
    pub per_decade: usize,
    #[arg(long, default_value_t = 200)]
    pub replicas: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Serialize)]
pub struct ExponentsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: Model,
    #[arg(long, default_value_t = 0.85)]
    pub c: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Generate(a) => &a.common,
            Command::Pagerank(a) => &a.common,
            Command::LimitSample(a) | Command::PolyaSample(a) | Command::CoupleTest(a) => &a.common,
            Command::MartingaleTest(a) => &a.common,
            Command::TailFit(a) => &a.common,
            Command::JointCompare(a) => &a.common,
            Command::RootGrowth(a) => &a.common,
            Command::Exponents(a) => &a.common,
        }
    }
}
