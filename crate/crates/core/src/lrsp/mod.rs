//! Low-rank subspace proximal (LRSP): singular-value thresholding restricted
//! to a data-selected rank-`r` subspace, avoiding a full SVD of the d×n input.
//!
//! One call runs `T` inner steps. Each step
//!
//! 1. weights columns by importance `g` and seeded random-projection scores,
//! 2. softly selects `κ` columns (temperature `τ_t`) into a sketch `U Ω`,
//! 3. orthonormalizes the sketch into `Q` (d×r),
//! 4. probes the residual ratio `ρ̃` of `U Diag(g)` outside `range(Q)`,
//! 5. advances the cumulative threshold `β` by `c_β (1 − ρ̂)`,
//! 6. shrinks `QᵀU` with gate `α = σ(β)` and lifts it back with `Q`.
//!
//! Proposals are fused with softmin weights on `ρ̂`. Per call the cost is
//! `O(dnr + r²n)` for fixed `κ`, `s` and `T`.
//!
//! With `κ = n`, `r = d` and an open gate (`α = 1`) every proposal equals
//! [`crate::svt::svt_full`]; [`LrspConfig::exact`] builds that configuration.

mod schedule;
mod selection;
mod subspace;

use std::io::{self, Write};
use std::time::Instant;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::svt::ShrinkageThreshold;

pub use schedule::{fuse_proposals, fusion_weights, refine_and_increment, temperature};
pub use selection::{
    build_selector, column_importance, score_columns, soft_topk, sparse_pool, Selector,
};
pub use subspace::{orthonormal_subspace, residual_ratio, subspace_proximal, SubspaceBasis};

pub(crate) const STREAM_SCORES: u64 = 0;
const STREAM_PROBES: u64 = 1 << 20;
const STREAM_COMPLETION: u64 = 2 << 20;

pub(crate) fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `β` large enough that `σ(β)` rounds to exactly 1.0 in f64.
pub const OPEN_GATE_BETA: f64 = 64.0;

#[derive(Debug, Clone, PartialEq)]
pub struct LrspConfig {
    /// Target rank `r`.
    pub rank: usize,
    /// Column budget `κ`.
    pub kappa: usize,
    /// Gaussian probe count `s`.
    pub probes: usize,
    /// Inner steps `T`.
    pub inner_steps: usize,
    pub tau0: f64,
    pub gamma: f64,
    pub tau_min: f64,
    /// Initial cumulative threshold `β_1`.
    pub beta1: f64,
    pub c_beta: f64,
    /// Fusion sharpness `ν`.
    pub nu: f64,
    pub theta: ShrinkageThreshold,
    pub seed: u64,
    /// Denominator guard of the residual probe.
    pub eps: f64,
}

impl Default for LrspConfig {
    fn default() -> Self {
        Self {
            rank: 8,
            kappa: 64,
            probes: 8,
            inner_steps: 3,
            tau0: 1.0,
            gamma: 0.5,
            tau_min: 0.05,
            beta1: 4.0,
            c_beta: 0.5,
            nu: 5.0,
            theta: ShrinkageThreshold::new(0.5).expect("constant"),
            seed: 0,
            eps: 1e-12,
        }
    }
}

impl LrspConfig {
    /// The exactness regime for a d×n input: all columns, full rank, gate
    /// open, one inner step.
    pub fn exact(d: usize, n: usize, theta: ShrinkageThreshold) -> Self {
        Self {
            rank: d,
            kappa: n,
            inner_steps: 1,
            beta1: OPEN_GATE_BETA,
            c_beta: 0.0,
            theta,
            ..Self::default()
        }
    }

    pub fn is_exact_for(&self, d: usize, n: usize) -> bool {
        self.rank == d && self.kappa == n
    }

    /// Checks every invariant against a d×n input.
    pub fn validate(&self, d: usize, n: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.rank == 0 || self.rank > self.kappa || self.kappa > n || self.rank > d {
            return bad(format!(
                "need 1 <= r <= kappa <= n and r <= d; got r={}, kappa={}, d={d}, n={n}",
                self.rank, self.kappa
            ));
        }
        if self.probes == 0 || self.inner_steps == 0 {
            return bad("probes and inner_steps must be >= 1".into());
        }
        if !(self.tau0 > 0.0 && self.tau0.is_finite())
            || !(self.tau_min > 0.0 && self.tau_min.is_finite())
        {
            return bad(format!(
                "tau0 and tau_min must be > 0; got {}, {}",
                self.tau0, self.tau_min
            ));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad(format!("gamma must lie in (0, 1); got {}", self.gamma));
        }
        if !(self.beta1 > 0.0 && self.beta1.is_finite()) {
            return bad(format!("beta1 must be > 0; got {}", self.beta1));
        }
        if !(self.c_beta >= 0.0 && self.c_beta.is_finite()) {
            return bad(format!("c_beta must be >= 0; got {}", self.c_beta));
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return bad(format!("nu must be > 0; got {}", self.nu));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return bad(format!("eps must be > 0; got {}", self.eps));
        }
        Ok(())
    }
}

/// State carried across calls: the cumulative threshold and an EMA of
/// column importances (the cross-stage memory).
#[derive(Debug, Clone, PartialEq)]
pub struct LrspState {
    pub beta: f64,
    /// Empty until the first call.
    pub memory_g: Vec<f64>,
    /// EMA decay `μ ∈ [0, 1)`.
    pub mu: f64,
}

impl LrspState {
    pub fn new(beta: f64, mu: f64) -> Result<Self> {
        if !beta.is_finite() {
            return Err(Error::NonFinite("lrsp beta"));
        }
        if !(0.0..1.0).contains(&mu) {
            return Err(Error::InvalidArgument(format!(
                "memory decay must lie in [0, 1); got {mu}"
            )));
        }
        Ok(Self {
            beta,
            memory_g: Vec::new(),
            mu,
        })
    }

    pub fn initial(config: &LrspConfig) -> Self {
        Self {
            beta: config.beta1,
            memory_g: Vec::new(),
            mu: 0.5,
        }
    }
}

/// One inner step's record.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics {
    pub t: usize,
    pub tau: f64,
    /// `β_t` used for the gate of this step.
    pub beta: f64,
    pub alpha: f64,
    pub rho_tilde: f64,
    pub rho_hat: f64,
    pub delta_beta: f64,
    /// Fusion weight `w_t`.
    pub weight: f64,
    /// Basis columns filled by random completion.
    pub completed: usize,
    pub pooled_norm: f64,
    pub elapsed_ns: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LrspDiagnostics {
    pub steps: Vec<StepDiagnostics>,
    pub elapsed_ns: u64,
}

pub const DIAGNOSTICS_HEADER: &str = "stage,t,tau,beta,rho_hat,w,elapsed_ns";

impl LrspDiagnostics {
    /// Writes one `stage,t,tau,beta,rho_hat,w,elapsed_ns` line per step.
    pub fn write_records<W: Write>(&self, stage: usize, out: &mut W) -> io::Result<()> {
        for s in &self.steps {
            writeln!(
                out,
                "{stage},{},{},{},{},{},{}",
                s.t, s.tau, s.beta, s.rho_hat, s.weight, s.elapsed_ns
            )?;
        }
        Ok(())
    }
}

fn elapsed_ns(start: Instant) -> u64 {
    u64::try_from(start.elapsed().as_nanos()).unwrap_or(u64::MAX)
}

/// Runs the `T` inner steps on `u` and fuses the proposals.
///
/// Returns the fused d×n matrix, the advanced state, and per-step diagnostics.
pub fn lrsp_apply(
    u: &DMatrix<f64>,
    config: &LrspConfig,
    state: &LrspState,
) -> Result<(DMatrix<f64>, LrspState, LrspDiagnostics)> {
    let start = Instant::now();
    let (d, n) = u.shape();
    config.validate(d, n)?;
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("lrsp input"));
    }

    let g = column_importance(u, state)?;
    let scores = score_columns(u, config.seed);
    let min_score = scores.iter().cloned().fold(f64::INFINITY, f64::min);

    let mut beta = state.beta;
    let mut proposals = Vec::with_capacity(config.inner_steps);
    let mut rho_hats = Vec::with_capacity(config.inner_steps);
    let mut steps = Vec::with_capacity(config.inner_steps);

    for t in 1..=config.inner_steps {
        let step_start = Instant::now();
        let tau = temperature(t, config);
        let soft = if config.kappa < n {
            soft_topk(&scores, config.kappa, tau)?
        } else {
            // Every column is kept; pivot on the smallest score instead.
            selection::soft_weights(&scores, min_score, tau)
        };
        let omega = build_selector(&g, &soft, config.kappa)?;
        let stream = t as u64;
        let basis = orthonormal_subspace(
            u,
            &omega,
            config.rank,
            config.seed,
            STREAM_COMPLETION + stream,
        )?;
        let rho_tilde = residual_ratio(
            u,
            &basis.q,
            &g,
            config.probes,
            config.seed,
            STREAM_PROBES + stream,
            config.eps,
        )?;
        let pooled = sparse_pool(u, &omega);
        let (rho_hat, delta_beta) = refine_and_increment(rho_tilde, &pooled, config);
        let compact = subspace::gated_compact(u, &basis.q, config.theta, beta)?;

        steps.push(StepDiagnostics {
            t,
            tau,
            beta,
            alpha: selection::sigmoid(beta),
            rho_tilde,
            rho_hat,
            delta_beta,
            weight: 0.0,
            completed: basis.completed,
            pooled_norm: pooled.norm(),
            elapsed_ns: elapsed_ns(step_start),
        });
        proposals.push((basis.q, compact));
        rho_hats.push(rho_hat);
        beta += delta_beta;
    }

    // Proposals stay factored as Q_t · B̃_t; the fused sum is one product
    // [w_1 Q_1 | … | w_T Q_T] · [B̃_1; …; B̃_T].
    let weights = if proposals.len() == 1 {
        vec![1.0]
    } else {
        fusion_weights(&rho_hats, config.nu)
    };
    let r = config.rank;
    let mut left = DMatrix::zeros(d, r * proposals.len());
    let mut right = DMatrix::zeros(r * proposals.len(), n);
    for (t, ((q, b), &w)) in proposals.iter().zip(&weights).enumerate() {
        left.columns_mut(t * r, r).copy_from(&(q * w));
        right.rows_mut(t * r, r).copy_from(b);
    }
    let fused = left * right;
    for (s, w) in steps.iter_mut().zip(weights) {
        s.weight = w;
    }

    let memory_g = if state.memory_g.is_empty() {
        g
    } else {
        state
            .memory_g
            .iter()
            .zip(&g)
            .map(|(m, gi)| state.mu * m + (1.0 - state.mu) * gi)
            .collect()
    };
    let next = LrspState {
        beta,
        memory_g,
        mu: state.mu,
    };
    let diagnostics = LrspDiagnostics {
        steps,
        elapsed_ns: elapsed_ns(start),
    };
    Ok((fused, next, diagnostics))
}
