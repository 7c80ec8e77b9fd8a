use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use longmem_core::{Model, QuadratureSpec};

#[derive(Debug, Parser)]
#[command(
    name = "longmem",
    version,
    about = "Drift estimation under long-memory noise: simulation and Monte Carlo experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate noise paths and dump them.
    Simulate(SimulateArgs),
    /// Estimate the drift from a path or observation file.
    Estimate(EstimateArgs),
    /// Monte Carlo sweep over Hurst indices, drifts and grids.
    ReproduceTables(SweepArgs),
    /// Martingale and bracket-growth diagnostics of the walk.
    Diagnostics(DiagnosticsArgs),
    /// Closed-form fBm MSE scaling and Gershgorin row-sum sweep.
    ScalingStudy(ScalingArgs),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Wiener,
    Fbm,
    Rosenblatt,
}

impl From<ModelArg> for Model {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Wiener => Model::Wiener,
            ModelArg::Fbm => Model::Fbm,
            ModelArg::Rosenblatt => Model::Rosenblatt,
        }
    }
}

/// Output and numerical settings shared by every command.
#[derive(Debug, Args)]
pub struct Common {
    /// Output file (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Gauss-Legendre nodes per panel.
    #[arg(long, default_value_t = 8)]
    pub quad_nodes: usize,
    /// Dyadic grading depth toward singular endpoints.
    #[arg(long, default_value_t = 12)]
    pub quad_depth: usize,
    /// Replications per batch (does not change results).
    #[arg(long)]
    pub batch: Option<usize>,
    /// Record wall-clock runtimes in the output.
    #[arg(long)]
    pub timings: bool,
}

impl Common {
    pub fn quadrature(&self) -> QuadratureSpec {
        QuadratureSpec { nodes_per_panel: self.quad_nodes, grading_depth: self.quad_depth, ..QuadratureSpec::default() }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = ModelArg::Rosenblatt)]
    pub model: ModelArg,
    #[arg(long)]
    pub hurst: Option<f64>,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    /// Number of paths.
    #[arg(long, default_value_t = 1)]
    pub reps: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// CSV written by `simulate`, or observations with columns `t,Y`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = ModelArg::Rosenblatt)]
    pub model: ModelArg,
    #[arg(long)]
    pub hurst: Option<f64>,
    #[arg(long)]
    pub n: usize,
    /// Drift added to a noise dump; with observations, the true drift for the envelope.
    #[arg(long, allow_negative_numbers = true)]
    pub drift: Vec<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum, default_value_t = ModelArg::Rosenblatt)]
    pub model: ModelArg,
    /// Hurst index (repeatable; default 0.55, 0.75, 0.9).
    #[arg(long)]
    pub hurst: Vec<f64>,
    /// True drift (repeatable; default 2, 20).
    #[arg(long, allow_negative_numbers = true)]
    pub drift: Vec<f64>,
    /// Grid resolution (repeatable; default 100, plus 200 with --full).
    #[arg(long)]
    pub n: Vec<usize>,
    /// Observation exponent, M = round(N^alpha) (repeatable).
    #[arg(long, default_values_t = [2.0])]
    pub alpha: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Allow walk cells with more than 20000 steps.
    #[arg(long)]
    pub full: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct DiagnosticsArgs {
    #[arg(long, default_value_t = 0.75)]
    pub hurst: f64,
    /// Grid resolutions of the sweep (repeatable; default 20, 40).
    #[arg(long)]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 200)]
    pub reps: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Exponent of the bracket normalization (default: midpoint of the admissible interval).
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub full: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ScalingArgs {
    #[arg(long, default_values_t = [0.75])]
    pub hurst: Vec<f64>,
    #[arg(long, default_values_t = [1.0, 1.2, 1.5])]
    pub alpha: Vec<f64>,
    #[arg(long, default_values_t = [10, 20, 40])]
    pub n: Vec<usize>,
    /// Observation counts of the Gershgorin sweep.
    #[arg(long = "gershgorin-m", default_values_t = [100, 200, 400])]
    pub gershgorin_m: Vec<usize>,
    /// Accepted for uniformity; the study is deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub common: Common,
}

/// Everything needed to rerun a command; embedded in every output file.
/// Output path, batching and timing flags are excluded since they do not
/// affect results.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub model: Option<String>,
    pub hurst: Vec<f64>,
    pub drift: Vec<f64>,
    pub n: Vec<usize>,
    pub alpha: Vec<f64>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub gamma: Option<f64>,
    pub full: bool,
    pub input: Option<String>,
    pub extra: Vec<(String, String)>,
    pub quadrature: QuadratureSpec,
    pub format: Format,
}

impl Manifest {
    pub fn new(command: &str, common: &Common) -> Self {
        Manifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            quadrature: common.quadrature(),
            format: common.format,
            ..Manifest::default()
        }
    }

    /// Command line that reproduces the output.
    pub fn rerun(&self) -> String {
        let mut s = format!("longmem {}", self.command);
        if let Some(m) = &self.model {
            let _ = write!(s, " --model {m}");
        }
        if let Some(input) = &self.input {
            let _ = write!(s, " --input {input}");
        }
        for h in &self.hurst {
            let _ = write!(s, " --hurst {h}");
        }
        for a in &self.drift {
            let _ = write!(s, " --drift {a}");
        }
        for n in &self.n {
            let _ = write!(s, " --n {n}");
        }
        for a in &self.alpha {
            let _ = write!(s, " --alpha {a}");
        }
        if let Some(r) = self.reps {
            let _ = write!(s, " --reps {r}");
        }
        if let Some(seed) = self.seed {
            let _ = write!(s, " --seed {seed}");
        }
        if let Some(g) = self.gamma {
            let _ = write!(s, " --gamma {g}");
        }
        for (k, v) in &self.extra {
            let _ = write!(s, " --{k} {v}");
        }
        if self.full {
            s.push_str(" --full");
        }
        let q = &self.quadrature;
        let _ = write!(s, " --quad-nodes {} --quad-depth {}", q.nodes_per_panel, q.grading_depth);
        if self.format == Format::Json {
            s.push_str(" --format json");
        }
        s
    }

    /// `# key=value` comment lines for CSV output.
    pub fn comment_lines(&self) -> Vec<String> {
        let join = |v: &[String]| v.join(" ");
        let mut out = vec![format!("# longmem {} {}", self.version, self.command)];
        if let Some(m) = &self.model {
            out.push(format!("# model={m}"));
        }
        if let Some(i) = &self.input {
            out.push(format!("# input={i}"));
        }
        if !self.hurst.is_empty() {
            out.push(format!("# hurst={}", join(&self.hurst.iter().map(|v| v.to_string()).collect::<Vec<_>>())));
        }
        if !self.drift.is_empty() {
            out.push(format!("# drift={}", join(&self.drift.iter().map(|v| v.to_string()).collect::<Vec<_>>())));
        }
        if !self.n.is_empty() {
            out.push(format!("# n={}", join(&self.n.iter().map(|v| v.to_string()).collect::<Vec<_>>())));
        }
        if !self.alpha.is_empty() {
            out.push(format!("# alpha={}", join(&self.alpha.iter().map(|v| v.to_string()).collect::<Vec<_>>())));
        }
        if let Some(r) = self.reps {
            out.push(format!("# reps={r}"));
        }
        if let Some(s) = self.seed {
            out.push(format!("# seed={s}"));
        }
        if let Some(g) = self.gamma {
            out.push(format!("# gamma={g}"));
        }
        for (k, v) in &self.extra {
            out.push(format!("# {k}={v}"));
        }
        let q = &self.quadrature;
        out.push(format!("# quadrature nodes={} depth={} rel_tol={:e}", q.nodes_per_panel, q.grading_depth, q.rel_tol));
        out.push(format!("# rerun: {}", self.rerun()));
        out
    }
}
