use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use hsrecon::{InitMode, TransformKind};

#[derive(Debug, Parser)]
#[command(
    name = "hsrecon",
    version,
    about = "Hyperspectral reconstruction from RGB"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic low-rank scene.
    Synth(SynthArgs),
    /// Fit the forward operator from paired RGB and cube files.
    Calibrate(CalibrateArgs),
    /// Recover a cube from an RGB image.
    Reconstruct(ReconstructArgs),
    /// Time full SVT against the subspace proximal.
    SvtBench(SvtBenchArgs),
    /// Compare a test cube against a reference.
    Metrics(MetricsArgs),
}

/// `auto` or a positive number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AutoOr {
    Auto,
    Value(f64),
}

pub fn parse_auto_or(s: &str) -> Result<AutoOr, String> {
    if s == "auto" {
        return Ok(AutoOr::Auto);
    }
    let v: f64 = s
        .parse()
        .map_err(|_| format!("expected `auto` or a number, got {s:?}"))?;
    if !v.is_finite() || v < 0.0 {
        return Err(format!("expected a finite non-negative number, got {s}"));
    }
    Ok(AutoOr::Value(v))
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 31)]
    pub bands: usize,
    /// Image height and width.
    #[arg(long, default_value_t = 64)]
    pub size: usize,
    #[arg(long, default_value_t = 4)]
    pub rank: usize,
    /// Standard deviation of additive Gaussian noise.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the RGB rendering under the synthetic sensitivity and a
    /// flat illuminant.
    #[arg(long)]
    pub rgb_out: Option<PathBuf>,
    /// Also write the forward operator used for `--rgb-out`.
    #[arg(long)]
    pub phi_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub rgb: PathBuf,
    #[arg(long)]
    pub cube: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub ridge: f64,
    #[arg(long)]
    pub out_phi: PathBuf,
    /// Known camera sensitivity CSV; enables illuminant recovery.
    #[arg(long, requires = "out_illuminant")]
    pub css: Option<PathBuf>,
    #[arg(long, requires = "css")]
    pub out_illuminant: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("operator").required(true).args(["phi", "calibrate_from"])))]
pub struct ReconstructArgs {
    #[arg(long)]
    pub rgb: PathBuf,
    /// Forward operator CSV (3 rows by B columns).
    #[arg(long)]
    pub phi: Option<PathBuf>,
    /// Estimate the operator from a calibration RGB/cube pair.
    #[arg(long, num_args = 2, value_names = ["RGB", "CUBE"])]
    pub calibrate_from: Option<Vec<PathBuf>>,
    /// Ridge weight for `--calibrate-from`.
    #[arg(long, default_value_t = 0.0)]
    pub ridge: f64,
    #[arg(long, default_value_t = 3)]
    pub stages: usize,
    #[arg(long, default_value = "auto", value_parser = parse_auto_or)]
    pub eta: AutoOr,
    #[arg(long, default_value_t = 1e-3)]
    pub lambda: f64,
    /// Shrinkage threshold; `auto` uses lambda times the step size.
    #[arg(long, default_value = "auto", value_parser = parse_auto_or)]
    pub theta: AutoOr,
    #[arg(long, default_value = "dct", value_parser = parse_transform)]
    pub transform: TransformKind,
    #[arg(long, default_value = "pseudoinverse", value_parser = parse_init)]
    pub init: InitMode,
    #[arg(long, default_value_t = 8)]
    pub rank: usize,
    #[arg(long, default_value_t = 64)]
    pub kappa: usize,
    #[arg(long, default_value_t = 8)]
    pub probes: usize,
    #[arg(long, default_value_t = 3)]
    pub inner_steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Run the proximal in its exact regime (all columns, full rank, open
    /// gate); `--rank`, `--kappa`, `--probes`, `--inner-steps` are ignored.
    #[arg(long)]
    pub exact: bool,
    #[arg(long)]
    pub out: PathBuf,
    /// Per-stage CSV `stage,objective,fidelity,elapsed_ns`.
    #[arg(long)]
    pub report: PathBuf,
    /// Ground-truth cube for `--mse-map`.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Per-pixel MSE against `--reference`, as a single-band cube.
    #[arg(long, requires = "reference")]
    pub mse_map: Option<PathBuf>,
    /// Per-step proximal diagnostics CSV.
    #[arg(long)]
    pub diagnostics: Option<PathBuf>,
}

fn parse_transform(s: &str) -> Result<TransformKind, String> {
    s.parse().map_err(|e: hsrecon::Error| e.to_string())
}

fn parse_init(s: &str) -> Result<InitMode, String> {
    s.parse().map_err(|e: hsrecon::Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct SvtBenchArgs {
    #[arg(long, default_value_t = 64)]
    pub d: usize,
    #[arg(long, default_value_t = 4096)]
    pub n: usize,
    /// Rank of the test matrices and of the subspace proximal.
    #[arg(long, default_value_t = 8)]
    pub r: usize,
    /// Column budget; defaults to min(64, n).
    #[arg(long)]
    pub kappa: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub theta: f64,
    /// Signal-to-noise ratio of the test matrices in dB.
    #[arg(long, default_value_t = 40.0)]
    pub snr: f64,
    /// Number of seeds (0..COUNT).
    #[arg(long, default_value_t = 3)]
    pub seeds: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    /// Forward operator for the colour difference.
    #[arg(long)]
    pub phi: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}
