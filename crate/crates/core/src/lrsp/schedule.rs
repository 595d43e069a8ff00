//! Temperature schedule, threshold increments, and residual-aware fusion.

use nalgebra::{DMatrix, DVector};

use super::LrspConfig;
use crate::error::{Error, Result};

/// `τ_t = max(τ_min, τ0 · γ^(t−1))` for `t >= 1`.
pub fn temperature(t: usize, config: &LrspConfig) -> f64 {
    assert!(t >= 1, "inner steps are 1-based");
    let exp = i32::try_from(t - 1).unwrap_or(i32::MAX);
    config.tau_min.max(config.tau0 * config.gamma.powi(exp))
}

/// Deterministic refinement: `ρ̂ = ρ̃` and `Δβ = c_β (1 − ρ̃)`.
///
/// `pooled` is the sparse-pooled sketch summary. It is part of the
/// refinement input but the deterministic rule does not read it.
pub fn refine_and_increment(
    rho_tilde: f64,
    pooled: &DVector<f64>,
    config: &LrspConfig,
) -> (f64, f64) {
    let _ = pooled;
    (rho_tilde, config.c_beta * (1.0 - rho_tilde))
}

/// Softmin weights `exp(−ν ρ̂_t) / Σ_s exp(−ν ρ̂_s)`.
pub fn fusion_weights(rho_hats: &[f64], nu: f64) -> Vec<f64> {
    let floor = rho_hats.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut w: Vec<f64> = rho_hats.iter().map(|r| (-nu * (r - floor)).exp()).collect();
    let total: f64 = w.iter().sum();
    for wi in &mut w {
        *wi /= total;
    }
    w
}

/// `Σ_t w_t · proposal_t` with [`fusion_weights`]. Returns the fused matrix
/// and the weights.
pub fn fuse_proposals(
    proposals: &[DMatrix<f64>],
    rho_hats: &[f64],
    nu: f64,
) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let first = proposals
        .first()
        .ok_or_else(|| Error::InvalidArgument("no proposals to fuse".into()))?;
    if rho_hats.len() != proposals.len() {
        return Err(Error::dims(
            "fuse_proposals",
            proposals.len(),
            rho_hats.len(),
        ));
    }
    if let Some(p) = proposals.iter().find(|p| p.shape() != first.shape()) {
        return Err(Error::dims(
            "fuse_proposals shapes",
            format!("{:?}", first.shape()),
            format!("{:?}", p.shape()),
        ));
    }
    if nu.is_nan() || nu <= 0.0 {
        return Err(Error::InvalidArgument(format!("nu must be > 0, got {nu}")));
    }
    if proposals.len() == 1 {
        return Ok((first.clone(), vec![1.0]));
    }
    let weights = fusion_weights(rho_hats, nu);
    let mut fused = DMatrix::zeros(first.nrows(), first.ncols());
    for (p, &w) in proposals.iter().zip(&weights) {
        fused += p * w;
    }
    Ok((fused, weights))
}
