//! Config layering and the exit-code discipline.
//!
//! Every run resolves to a single [`RunConfig`]: per-command defaults,
//! overridden by the JSON config file, overridden by command-line flags.
//! The resolved record is embedded verbatim in every output file, so a run
//! can be reproduced from its own artifact.

use std::fmt::Display;
use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use polylens::{BumpSpec, Error as CoreError, QuadratureSpec};
use serde::{Deserialize, Serialize};

/// Exit codes: 1 config error, 2 numerical failure, 3 insufficient range.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
    Range(String),
}

impl CliError {
    pub fn config(msg: impl Display) -> Self {
        CliError::Config(msg.to_string())
    }

    pub fn numeric(msg: impl Display) -> Self {
        CliError::Numeric(msg.to_string())
    }

    pub fn range(msg: impl Display) -> Self {
        CliError::Range(msg.to_string())
    }

    pub fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numeric(_) => 2,
            CliError::Range(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Numeric(m) | CliError::Range(m) => m,
        }
    }
}

/// Library errors split into "the request was wrong" (exit 1) and "the
/// computation could not deliver" (exit 2).
pub fn from_core(err: CoreError) -> CliError {
    match err {
        CoreError::OutsideDomain(..)
        | CoreError::CornerProximity { .. }
        | CoreError::UnsupportedOrder(..)
        | CoreError::UnsupportedClosedForm(..)
        | CoreError::MissingMoment { .. }
        | CoreError::Precondition(..) => CliError::config(err),
        _ => CliError::numeric(err),
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "polylens",
    version,
    about = "Experiment runner for the polylens numerics",
    disable_help_subcommand = true
)]
pub struct Cli {
    /// JSON config file; flags override its fields.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output file (atomic write); stdout when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutFormat>,
    /// RNG seed for sampling commands.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Quadrature subdivision depth.
    #[arg(long, global = true, value_name = "N")]
    pub depth: Option<u32>,
    /// Largest monomial degree for moment and trace commands.
    #[arg(long, global = true, value_name = "N")]
    pub kmax: Option<u32>,
    /// Command-level tolerance (projection mismatch, moment comparison,
    /// exceptional-point threshold).
    #[arg(long, global = true, value_name = "X")]
    pub tolerance: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    /// Project the bump transplant and compare against c·F′.
    Project,
    /// Sobolev refinement ladders with boundedness verdicts.
    Sobolev,
    /// Lᵖ masses of the stocked functions.
    Lp,
    /// Reproducing-kernel values at stocked interior points.
    Kernel,
    /// Monomial moment tables: closed forms against quadrature.
    Moments,
    /// Hilbert–Schmidt diagnostics for the stocked Reinhardt domains.
    Hs,
    /// Intersection sampling and exceptional-point detection.
    Exceptional,
    /// Plurisubharmonicity certificate for a squared distance.
    Psh,
}

impl Command {
    pub fn label(self) -> &'static str {
        match self {
            Command::Project => "project",
            Command::Sobolev => "sobolev",
            Command::Lp => "lp",
            Command::Kernel => "kernel",
            Command::Moments => "moments",
            Command::Hs => "hs",
            Command::Exceptional => "exceptional",
            Command::Psh => "psh",
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutFormat {
    Csv,
    Json,
}

/// Sampling box for the psh command, kept as flat reals so the JSON config
/// stays hand-writable.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub center: [f64; 4],
    pub half_width: f64,
    pub per_axis: usize,
}

/// The fully resolved run record embedded in every output.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    pub domain: String,
    pub quadrature: QuadratureSpec,
    pub bump: BumpSpec,
    pub kmax: u32,
    pub depths: Vec<u32>,
    pub samples: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub p_values: Vec<f64>,
    pub pair: String,
    pub patch: String,
    pub margin: f64,
    pub region: RegionConfig,
    pub format: OutFormat,
}

/// Optional overrides read from the JSON config file. Unknown fields are
/// config errors, not silent typo sinks.
#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    domain: Option<String>,
    quadrature: Option<QuadFileConfig>,
    bump: Option<BumpFileConfig>,
    kmax: Option<u32>,
    depths: Option<Vec<u32>>,
    samples: Option<usize>,
    seed: Option<u64>,
    tolerance: Option<f64>,
    p_values: Option<Vec<f64>>,
    pair: Option<String>,
    patch: Option<String>,
    margin: Option<f64>,
    region: Option<RegionConfig>,
    format: Option<OutFormat>,
    out: Option<PathBuf>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuadFileConfig {
    base_rule: Option<usize>,
    depth: Option<u32>,
    corner_grading: Option<f64>,
    tail_cutoff: Option<f64>,
    tolerance: Option<f64>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BumpFileConfig {
    r0: Option<f64>,
    r1: Option<f64>,
}

fn defaults(cmd: Command) -> RunConfig {
    let mut cfg = RunConfig {
        command: cmd.label(),
        domain: "lens".to_owned(),
        quadrature: QuadratureSpec::default(),
        bump: BumpSpec::default(),
        kmax: 8,
        depths: (4..=12).collect(),
        samples: 60,
        seed: 7,
        tolerance: 1e-3,
        p_values: vec![2.0, 4.0, 10.0],
        pair: "two_spheres".to_owned(),
        patch: "real_plane".to_owned(),
        margin: 1.0,
        region: RegionConfig {
            center: [0.1, 0.3, -0.2, 0.5],
            half_width: 0.4,
            per_axis: 3,
        },
        format: OutFormat::Csv,
    };
    match cmd {
        Command::Moments => {
            cfg.domain = "omega".to_owned();
            cfg.kmax = 6;
            cfg.tolerance = 1e-6;
        }
        Command::Hs => {
            cfg.domain = "omega".to_owned();
            cfg.kmax = 256;
        }
        Command::Exceptional => {
            cfg.tolerance = 1e-8;
            cfg.format = OutFormat::Json;
        }
        Command::Psh => {
            cfg.format = OutFormat::Json;
        }
        _ => {}
    }
    cfg
}

/// Defaults ← config file ← flags, then shared validation.
pub fn resolve(cli: &Cli) -> Result<(RunConfig, Option<PathBuf>), CliError> {
    let mut cfg = defaults(cli.command);
    let mut out = None;

    if let Some(path) = &cli.config {
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let file: FileConfig = serde_json::from_str(&text).map_err(|e| {
            CliError::config(format!(
                "config parse error at line {}, column {}: {e}",
                e.line(),
                e.column()
            ))
        })?;
        apply_file(&mut cfg, &file);
        if file.out.is_some() {
            out = file.out;
        }
    }

    if let Some(depth) = cli.depth {
        cfg.quadrature.depth = depth;
    }
    if let Some(kmax) = cli.kmax {
        cfg.kmax = kmax;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(tolerance) = cli.tolerance {
        cfg.tolerance = tolerance;
    }
    if let Some(format) = cli.format {
        cfg.format = format;
    }
    if cli.out.is_some() {
        out = cli.out.clone();
    }

    cfg.quadrature.validate().map_err(from_core)?;
    cfg.bump.validate().map_err(from_core)?;
    if !(cfg.tolerance > 0.0 && cfg.tolerance.is_finite()) {
        return Err(CliError::config(format!(
            "tolerance must be positive and finite, got {}",
            cfg.tolerance
        )));
    }
    Ok((cfg, out))
}

fn apply_file(cfg: &mut RunConfig, file: &FileConfig) {
    if let Some(domain) = &file.domain {
        cfg.domain = domain.clone();
    }
    if let Some(q) = &file.quadrature {
        if let Some(v) = q.base_rule {
            cfg.quadrature.base_rule = v;
        }
        if let Some(v) = q.depth {
            cfg.quadrature.depth = v;
        }
        if let Some(v) = q.corner_grading {
            cfg.quadrature.corner_grading = v;
        }
        if let Some(v) = q.tail_cutoff {
            cfg.quadrature.tail_cutoff = v;
        }
        if let Some(v) = q.tolerance {
            cfg.quadrature.tolerance = v;
        }
    }
    if let Some(b) = &file.bump {
        if let Some(v) = b.r0 {
            cfg.bump.r0 = v;
        }
        if let Some(v) = b.r1 {
            cfg.bump.r1 = v;
        }
    }
    if let Some(v) = file.kmax {
        cfg.kmax = v;
    }
    if let Some(v) = &file.depths {
        cfg.depths = v.clone();
    }
    if let Some(v) = file.samples {
        cfg.samples = v;
    }
    if let Some(v) = file.seed {
        cfg.seed = v;
    }
    if let Some(v) = file.tolerance {
        cfg.tolerance = v;
    }
    if let Some(v) = &file.p_values {
        cfg.p_values = v.clone();
    }
    if let Some(v) = &file.pair {
        cfg.pair = v.clone();
    }
    if let Some(v) = &file.patch {
        cfg.patch = v.clone();
    }
    if let Some(v) = file.margin {
        cfg.margin = v;
    }
    if let Some(v) = file.region {
        cfg.region = v;
    }
    if let Some(v) = file.format {
        cfg.format = v;
    }
}
