//! The unfolded reconstruction loop.
//!
//! Each of the `K` stages takes a gradient step on the data term,
//! `R = Y − η Φᵀ(ΦY − X)`, moves to the transform domain, applies the LRSP
//! proximal, and synthesizes back. The LRSP state (cumulative threshold and
//! column-importance memory) threads through the stages.
//!
//! In [`ProximalMode::Exact`] with `η = 1/σ_max(Φ)²` and `θ = λη` each stage
//! is one ISTA step on `½‖ΦY − X‖²_F + λ‖𝒯(Y)‖∗`, so the objective is
//! non-increasing.

use std::io::{self, Write};
use std::time::Instant;

use nalgebra::DMatrix;

use crate::cube::{RgbImage, SpectralCube};
use crate::error::{Error, Result};
use crate::forward_model::{apply_phi, apply_phi_adjoint, spectral_norm_sq, ForwardOperator};
use crate::lrsp::{lrsp_apply, LrspConfig, LrspDiagnostics, LrspState};
use crate::svt::{nuclear_norm, ShrinkageThreshold};
use crate::transform::{SpectralTransform, TransformKind};

/// Growth of `‖Y_k‖_F` over the reference norm that counts as divergence.
pub const DIVERGENCE_FACTOR: f64 = 10.0;

const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITER: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub enum StepSize {
    /// `η_k = 1 / σ_max(Φ)²` for every stage.
    Auto,
    /// One value for all stages, or one per stage.
    Fixed(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitMode {
    Zeros,
    Adjoint,
    #[default]
    Pseudoinverse,
}

impl std::str::FromStr for InitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zeros" => Ok(Self::Zeros),
            "adjoint" => Ok(Self::Adjoint),
            "pseudoinverse" | "pinv" => Ok(Self::Pseudoinverse),
            other => Err(Error::InvalidArgument(format!(
                "unknown init mode {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThresholdRule {
    /// `θ_k = λ · η_k`: the proximal threshold of the objective.
    #[default]
    LambdaEta,
    /// Use `LrspConfig::theta` unchanged.
    Fixed,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProximalMode {
    /// LRSP in its exactness regime (`κ = n`, `r = d`, open gate), sized to
    /// the input at solve time.
    Exact,
    Subspace(LrspConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub stages: usize,
    pub step: StepSize,
    pub lambda: f64,
    pub transform: TransformKind,
    pub proximal: ProximalMode,
    pub threshold: ThresholdRule,
    pub init: InitMode,
    /// Decay of the column-importance memory.
    pub memory_decay: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            stages: 3,
            step: StepSize::Auto,
            lambda: 1e-3,
            transform: TransformKind::SpectralDct,
            proximal: ProximalMode::Subspace(LrspConfig::default()),
            threshold: ThresholdRule::LambdaEta,
            init: InitMode::Pseudoinverse,
            memory_decay: 0.5,
        }
    }
}

impl SolverConfig {
    /// ISTA-equivalent configuration.
    pub fn exact(stages: usize, lambda: f64, transform: TransformKind) -> Self {
        Self {
            stages,
            lambda,
            transform,
            proximal: ProximalMode::Exact,
            ..Self::default()
        }
    }

    fn resolve_steps(&self, lipschitz: f64) -> Result<Vec<f64>> {
        let steps = match &self.step {
            StepSize::Auto => {
                if lipschitz <= 0.0 {
                    return Err(Error::InvalidArgument(
                        "automatic step size needs a nonzero forward operator".into(),
                    ));
                }
                vec![1.0 / lipschitz; self.stages]
            }
            StepSize::Fixed(v) if v.len() == 1 => vec![v[0]; self.stages],
            StepSize::Fixed(v) if v.len() == self.stages => v.clone(),
            StepSize::Fixed(v) => {
                return Err(Error::dims(
                    "step sizes",
                    format!("1 or {}", self.stages),
                    v.len(),
                ))
            }
        };
        if let Some(bad) = steps.iter().find(|&&e| !(e > 0.0 && e.is_finite())) {
            return Err(Error::InvalidArgument(format!(
                "step sizes must be > 0, got {bad}"
            )));
        }
        Ok(steps)
    }
}

/// Per-stage record of a solve.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveReport {
    /// Objective at the initial iterate `Y_0`.
    pub initial_objective: f64,
    pub objectives: Vec<f64>,
    /// `½‖ΦY_k − X‖²_F`.
    pub fidelities: Vec<f64>,
    pub step_sizes: Vec<f64>,
    pub lipschitz: f64,
    pub diagnostics: Vec<LrspDiagnostics>,
    pub stage_elapsed_ns: Vec<u64>,
    pub elapsed_ns: u64,
}

pub const REPORT_HEADER: &str = "stage,objective,fidelity,elapsed_ns";

impl SolveReport {
    pub fn stages(&self) -> usize {
        self.objectives.len()
    }

    /// CSV with header `stage,objective,fidelity,elapsed_ns`, one row per stage.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "{REPORT_HEADER}")?;
        for k in 0..self.stages() {
            writeln!(
                out,
                "{},{},{},{}",
                k + 1,
                self.objectives[k],
                self.fidelities[k],
                self.stage_elapsed_ns[k]
            )?;
        }
        Ok(())
    }

    /// LRSP step records for every stage, with header.
    pub fn write_diagnostics<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "{}", crate::lrsp::DIAGNOSTICS_HEADER)?;
        for (k, d) in self.diagnostics.iter().enumerate() {
            d.write_records(k + 1, out)?;
        }
        Ok(())
    }
}

/// `R = Y − η Φᵀ(ΦY − X)`.
pub fn gradient_step(
    y: &SpectralCube,
    op: &ForwardOperator,
    x: &RgbImage,
    eta: f64,
) -> Result<SpectralCube> {
    if x.pixels() != y.pixels() {
        return Err(Error::dims("gradient_step pixels", y.pixels(), x.pixels()));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "step size must be > 0, got {eta}"
        )));
    }
    let residual = apply_phi(op, y)?.into_data() - x.data();
    let grad = op.matrix().tr_mul(&residual);
    SpectralCube::new(y.data() - grad * eta, y.height(), y.width())
}

/// Moore-Penrose pseudoinverse of `Φ` (B×3).
pub fn phi_pseudoinverse(op: &ForwardOperator) -> Result<DMatrix<f64>> {
    let phi = op.matrix();
    let svd = phi.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if smax == 0.0 {
        return Ok(DMatrix::zeros(phi.ncols(), 3));
    }
    let eps = phi.ncols().max(3) as f64 * f64::EPSILON * smax;
    svd.pseudo_inverse(eps)
        .map_err(|_| Error::Svd("phi pseudoinverse"))
}

/// Initial iterate `Y_0`.
pub fn initialize(x: &RgbImage, op: &ForwardOperator, mode: InitMode) -> Result<SpectralCube> {
    match mode {
        InitMode::Zeros => Ok(SpectralCube::zeros(op.bands(), x.height(), x.width())),
        InitMode::Adjoint => apply_phi_adjoint(op, x),
        InitMode::Pseudoinverse => {
            let pinv = phi_pseudoinverse(op)?;
            SpectralCube::new(pinv * x.data(), x.height(), x.width())
        }
    }
}

/// `½‖ΦY − X‖²_F`.
pub fn fidelity(y: &SpectralCube, op: &ForwardOperator, x: &RgbImage) -> Result<f64> {
    if x.pixels() != y.pixels() {
        return Err(Error::dims("fidelity pixels", y.pixels(), x.pixels()));
    }
    Ok(0.5 * (apply_phi(op, y)?.into_data() - x.data()).norm_squared())
}

/// `½‖ΦY − X‖²_F + λ‖𝒯(Y)‖∗`.
pub fn objective(
    y: &SpectralCube,
    op: &ForwardOperator,
    x: &RgbImage,
    lambda: f64,
    kind: TransformKind,
) -> Result<f64> {
    let data = fidelity(y, op, x)?;
    if lambda == 0.0 {
        return Ok(data);
    }
    let u = SpectralTransform::new(kind, y.bands()).analyze(y)?;
    Ok(data + lambda * nuclear_norm(&u))
}

fn elapsed_ns(start: Instant) -> u64 {
    u64::try_from(start.elapsed().as_nanos()).unwrap_or(u64::MAX)
}

/// Runs the `K`-stage unfolded solver and returns `Y_K` with its report.
pub fn unfold_solve(
    x: &RgbImage,
    op: &ForwardOperator,
    config: &SolverConfig,
) -> Result<(SpectralCube, SolveReport)> {
    let start = Instant::now();
    if config.stages == 0 {
        return Err(Error::InvalidArgument("stages must be >= 1".into()));
    }
    if !(config.lambda >= 0.0 && config.lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be >= 0, got {}",
            config.lambda
        )));
    }
    let (b, n) = (op.bands(), x.pixels());

    let lipschitz = spectral_norm_sq(op, POWER_TOL, POWER_MAX_ITER)?;
    let steps = config.resolve_steps(lipschitz)?;
    for (k, &eta) in steps.iter().enumerate() {
        let gain = eta * lipschitz;
        if gain > 2.0 {
            return Err(Error::UnsafeStepSize { stage: k + 1, gain });
        }
    }

    let base = match &config.proximal {
        ProximalMode::Exact => LrspConfig::exact(b, n, ShrinkageThreshold::ZERO),
        ProximalMode::Subspace(c) => c.clone(),
    };
    base.validate(b, n)?;
    let mut state = LrspState::new(base.beta1, config.memory_decay)?;
    let transform = SpectralTransform::new(config.transform, b);

    let mut y = initialize(x, op, config.init)?;
    let reference = {
        let pinv_norm = (phi_pseudoinverse(op)? * x.data()).norm();
        y.data().norm().max(pinv_norm).max(f64::MIN_POSITIVE)
    };

    let mut report = SolveReport {
        initial_objective: objective(&y, op, x, config.lambda, config.transform)?,
        step_sizes: steps.clone(),
        lipschitz,
        ..SolveReport::default()
    };

    for (k, &eta) in steps.iter().enumerate() {
        let stage = k + 1;
        let stage_start = Instant::now();
        let r = gradient_step(&y, op, x, eta).map_err(|e| match e {
            Error::NonFinite(_) => Error::NumericStage { stage },
            other => other,
        })?;
        let u = transform.analyze(&r)?;

        let mut stage_config = base.clone();
        if config.threshold == ThresholdRule::LambdaEta || config.proximal == ProximalMode::Exact {
            stage_config.theta = ShrinkageThreshold::new(config.lambda * eta)?;
        }
        let (u_hat, next_state, diag) = lrsp_apply(&u, &stage_config, &state)?;
        state = next_state;

        y = transform
            .synthesize(&u_hat, x.height(), x.width())
            .map_err(|_| Error::NumericStage { stage })?;
        let growth = y.data().norm() / reference;
        if !growth.is_finite() {
            return Err(Error::NumericStage { stage });
        }
        if growth > DIVERGENCE_FACTOR {
            return Err(Error::Diverged { stage, growth });
        }

        let data = fidelity(&y, op, x)?;
        let obj = if config.lambda == 0.0 {
            data
        } else {
            data + config.lambda * nuclear_norm(&transform.analyze(&y)?)
        };
        report.objectives.push(obj);
        report.fidelities.push(data);
        report.diagnostics.push(diag);
        report.stage_elapsed_ns.push(elapsed_ns(stage_start));
    }
    report.elapsed_ns = elapsed_ns(start);
    Ok((y, report))
}
