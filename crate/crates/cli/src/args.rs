use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pqharm_core::expr;
use pqharm_core::immersion::SamplePath;
use serde::Serialize;

/// Verify (p,q)-harmonic hypersurfaces and curves in space forms.
#[derive(Debug, Parser)]
#[command(name = "pqharm", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List builtin charts with their closed-form expectations.
    Catalog(CatalogArgs),
    /// Evaluate the hypersurface system on a grid and classify the chart.
    VerifyHypersurface(VerifyHypersurfaceArgs),
    /// Evaluate the Frenet curve system and classify the curve.
    VerifyCurve(VerifyCurveArgs),
    /// Solve for p, or for (p, family parameter).
    Solve(SolveArgs),
    /// Classify along a range of one parameter; optional CSV output.
    Sweep(SweepArgs),
    /// Compare the numerical first variation of the energy with the tension field.
    VariationCheck(VariationArgs),
}

pub fn number(s: &str) -> Result<f64, String> {
    expr::eval_constant(s).map_err(|e| e.to_string())
}

pub fn pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected 'lo,hi', got '{s}'"))?;
    Ok((number(a.trim())?, number(b.trim())?))
}

/// Comma-separated numbers.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct NumList(pub Vec<f64>);

pub fn list(s: &str) -> Result<NumList, String> {
    s.split(',')
        .map(|x| number(x.trim()))
        .collect::<Result<_, _>>()
        .map(NumList)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathArg {
    Auto,
    Analytic,
    Stencil,
}

impl From<PathArg> for SamplePath {
    fn from(p: PathArg) -> Self {
        match p {
            PathArg::Auto => SamplePath::Auto,
            PathArg::Analytic => SamplePath::Analytic,
            PathArg::Stencil => SamplePath::Stencil,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expect {
    Minimal,
    Proper,
    Not,
    Mixed,
}

/// Chart selection: a builtin with parameters, or a chart file.
#[derive(Debug, Clone, Args, Serialize)]
pub struct Selector {
    #[arg(long, conflicts_with = "chart")]
    pub builtin: Option<String>,
    /// TOML chart file.
    #[arg(long)]
    pub chart: Option<PathBuf>,
    #[arg(long, value_parser = number)]
    pub m: Option<f64>,
    #[arg(long, value_parser = number)]
    pub a2: Option<f64>,
    #[arg(long, value_parser = number)]
    pub r: Option<f64>,
    #[arg(long, value_parser = number)]
    pub alpha: Option<f64>,
    #[arg(long, value_parser = number)]
    pub a: Option<f64>,
    #[arg(long, value_parser = number)]
    pub b: Option<f64>,
    #[arg(long, value_parser = number)]
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Output {
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CatalogArgs {
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyHypersurfaceArgs {
    #[command(flatten)]
    pub selector: Selector,
    #[arg(long, value_parser = number)]
    pub p: f64,
    #[arg(long, value_parser = number)]
    pub q: f64,
    /// Treat the ambient as Einstein with this scalar curvature.
    #[arg(long, value_parser = number)]
    pub einstein_s: Option<f64>,
    /// Points per axis.
    #[arg(long, default_value_t = 16)]
    pub grid: usize,
    /// Per-axis margins, comma separated (default: two stencil widths).
    #[arg(long, value_parser = list)]
    pub margin: Option<NumList>,
    #[arg(long, value_parser = number)]
    pub tol: Option<f64>,
    #[arg(long, value_enum, default_value_t = PathArg::Auto)]
    pub path: PathArg,
    #[arg(long, value_enum)]
    pub expect: Option<Expect>,
    /// Keep the full tangential residual of every point.
    #[arg(long)]
    pub verbose: bool,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyCurveArgs {
    #[command(flatten)]
    pub selector: Selector,
    #[arg(long, value_parser = number)]
    pub p: f64,
    #[arg(long, value_parser = number)]
    pub q: f64,
    /// Number of sample points along the curve.
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
    #[arg(long, value_parser = number, default_value = "1e-6")]
    pub tol: f64,
    #[arg(long, value_enum)]
    pub expect: Option<Expect>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolveArgs {
    #[command(flatten)]
    pub selector: Selector,
    #[arg(long, value_parser = number)]
    pub q: f64,
    /// `p`, or `p,<family parameter>` (`p,r` for the cone, `p,a` for sphere-in-sphere).
    #[arg(long, default_value = "p")]
    pub unknowns: String,
    #[arg(long, value_parser = pair)]
    pub p_bracket: Option<(f64, f64)>,
    #[arg(long, value_parser = pair)]
    pub theta_bracket: Option<(f64, f64)>,
    #[arg(long, default_value_t = 8)]
    pub grid: usize,
    #[arg(long, value_parser = number)]
    pub tol: Option<f64>,
    #[arg(long, value_enum, default_value_t = PathArg::Auto)]
    pub path: PathArg,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub selector: Selector,
    /// Swept parameter: `p`, `q`, or a builtin parameter such as `r` or `a2`.
    #[arg(long)]
    pub param: String,
    #[arg(long, value_parser = number)]
    pub from: f64,
    #[arg(long, value_parser = number)]
    pub to: f64,
    #[arg(long, default_value_t = 11)]
    pub steps: usize,
    #[arg(long, value_parser = number)]
    pub p: Option<f64>,
    #[arg(long, value_parser = number)]
    pub q: Option<f64>,
    /// Points per axis (hypersurfaces, default 8) or samples (curves, default 64).
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long, value_parser = number)]
    pub tol: Option<f64>,
    #[arg(long, value_enum, default_value_t = PathArg::Auto)]
    pub path: PathArg,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VariationArgs {
    #[command(flatten)]
    pub selector: Selector,
    #[arg(long, value_parser = number)]
    pub p: f64,
    #[arg(long, value_parser = number)]
    pub q: f64,
    /// Quadrature intervals (even).
    #[arg(long, default_value_t = 1024)]
    pub nodes: usize,
    /// Number of random bump fields.
    #[arg(long, default_value_t = 5)]
    pub bumps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Central-difference steps before scaling by 1/|v|.
    #[arg(long = "eps-steps", value_parser = list, default_value = "1e-2,5e-3,2.5e-3")]
    pub eps_steps: NumList,
    /// Bound on the relative error.
    #[arg(long, value_parser = number, default_value = "1e-4")]
    pub tol: f64,
    #[command(flatten)]
    pub output: Output,
}
