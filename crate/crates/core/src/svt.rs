//! Reference singular-value thresholding on a full SVD.
//!
//! `svt_full(M, θ)` is the exact proximal map of `θ‖·‖∗`. Everything in
//! [`crate::lrsp`] is validated against it.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Shrinkage threshold `θ ≥ 0`, in singular-value units.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ShrinkageThreshold(f64);

impl ShrinkageThreshold {
    pub const ZERO: Self = Self(0.0);

    pub fn new(theta: f64) -> Result<Self> {
        if !(theta.is_finite() && theta >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "shrinkage threshold must be finite and >= 0, got {theta}"
            )));
        }
        Ok(Self(theta))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[inline]
pub fn shrink(v: f64, theta: f64) -> f64 {
    v.signum() * (v.abs() - theta).max(0.0)
}

/// Entrywise `sign(v) · max(|v| − θ, 0)`.
pub fn soft_threshold(v: &[f64], theta: ShrinkageThreshold) -> Vec<f64> {
    v.iter().map(|&x| shrink(x, theta.0)).collect()
}

fn checked_svd(
    m: &DMatrix<f64>,
    context: &'static str,
) -> Result<nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(context));
    }
    m.clone()
        .try_svd(true, true, f64::EPSILON, 0)
        .ok_or(Error::Svd(context))
}

/// Exact SVT: `U · diag(soft(σ, θ)) · Vᵀ`.
pub fn svt_full(m: &DMatrix<f64>, theta: ShrinkageThreshold) -> Result<DMatrix<f64>> {
    let (d, n) = m.shape();
    if d == 0 || n == 0 {
        return Ok(m.clone());
    }
    let svd = checked_svd(m, "svt_full")?;
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::Svd("svt_full")),
    };
    let mut out = DMatrix::zeros(d, n);
    for (k, &sigma) in svd.singular_values.iter().enumerate() {
        let s = (sigma - theta.0).max(0.0);
        if s > 0.0 {
            out.ger(s, &u.column(k), &v_t.row(k).transpose(), 1.0);
        }
    }
    Ok(out)
}

/// Sum of singular values.
pub fn nuclear_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().sum()
}

/// Rank with tolerance `max(d, n) · ε · σ_max`.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().singular_values();
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    let tol = m.nrows().max(m.ncols()) as f64 * f64::EPSILON * smax;
    sv.iter().filter(|&&s| s > tol).count()
}

/// Plain randomized range-finder SVT: `Q = orth(M Ω)` with a seeded Gaussian
/// `Ω` (n×rank, no oversampling, no power iterations), then
/// `Q · svt_full(QᵀM, θ)`. Baseline for the subspace proximal.
pub fn range_finder_svt(
    m: &DMatrix<f64>,
    rank: usize,
    theta: ShrinkageThreshold,
    seed: u64,
) -> Result<DMatrix<f64>> {
    let (d, n) = m.shape();
    if rank == 0 || rank > d.min(n) {
        return Err(Error::InvalidArgument(format!(
            "range finder rank {rank} outside 1..={}",
            d.min(n)
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = DMatrix::from_fn(n, rank, |_, _| StandardNormal.sample(&mut rng));
    let q = (m * omega).qr().q();
    let compact = q.tr_mul(m);
    Ok(q * svt_full(&compact, theta)?)
}
