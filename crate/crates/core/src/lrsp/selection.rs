//! Column importance, scoring, soft top-κ weighting and the selector `Ω`.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use super::{seeded_rng, LrspState, STREAM_SCORES};
use crate::error::{Error, Result};

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Descending by value, ascending by index on ties. Total on finite input.
fn rank_order(values: &[f64]) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    move |&a, &b| {
        values[b]
            .partial_cmp(&values[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    }
}

/// Indices of the `k` largest entries, in rank order. O(n + k log k).
fn top_k(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    let cmp = rank_order(values);
    if k < idx.len() {
        idx.select_nth_unstable_by(k, &cmp);
        idx.truncate(k);
    }
    idx.sort_unstable_by(&cmp);
    idx
}

/// Value of the `(k+1)`-th largest entry (ties by lower index).
fn kth_plus_one(values: &[f64], k: usize) -> f64 {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    let (_, pivot, _) = idx.select_nth_unstable_by(k, rank_order(values));
    values[*pivot]
}

/// Column importances `g ∈ (0,1)^n`: sigmoid of the standardized column
/// norms, blended with the memory state as `(1 − μ)·g + μ·memory`.
/// An empty memory means no blending.
pub fn column_importance(u: &DMatrix<f64>, state: &LrspState) -> Result<Vec<f64>> {
    let n = u.ncols();
    let norms: Vec<f64> = u.column_iter().map(|c| c.norm()).collect();
    let mean = norms.iter().sum::<f64>() / n as f64;
    let var = norms.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    let std = var.sqrt();
    let mut g: Vec<f64> = norms
        .iter()
        .map(|v| sigmoid((v - mean) / (std + 1e-12)))
        .collect();
    if !state.memory_g.is_empty() {
        if state.memory_g.len() != n {
            return Err(Error::dims("lrsp memory", n, state.memory_g.len()));
        }
        let mu = state.mu;
        for (gi, mi) in g.iter_mut().zip(&state.memory_g) {
            *gi = (1.0 - mu) * *gi + mu * mi;
        }
    }
    Ok(g)
}

/// Scores `s_i = ⟨P u_i, q⟩` for a seeded Gaussian projection `P`
/// (m×d, m = min(d, 16)) and query `q`. Linear in each column.
pub fn score_columns(u: &DMatrix<f64>, seed: u64) -> Vec<f64> {
    let d = u.nrows();
    let m = d.min(16);
    let mut rng = seeded_rng(seed, STREAM_SCORES);
    let p = DMatrix::<f64>::from_fn(m, d, |_, _| StandardNormal.sample(&mut rng));
    let q = DVector::<f64>::from_fn(m, |_, _| StandardNormal.sample(&mut rng));
    // ⟨P u_i, q⟩ = ⟨u_i, Pᵀ q⟩
    let direction = p.tr_mul(&q);
    u.tr_mul(&direction).iter().copied().collect()
}

/// Softplus weights `softplus((s_i − pivot)/τ)`, normalized to sum to one.
pub(crate) fn soft_weights(s: &[f64], pivot: f64, tau: f64) -> Vec<f64> {
    let mut w: Vec<f64> = s.iter().map(|&si| softplus((si - pivot) / tau)).collect();
    let total: f64 = w.iter().sum();
    for wi in &mut w {
        *wi /= total;
    }
    w
}

/// Soft top-κ weights pivoted on the `(κ+1)`-th largest score.
pub fn soft_topk(s: &[f64], kappa: usize, tau: f64) -> Result<Vec<f64>> {
    let n = s.len();
    if kappa == 0 || kappa >= n {
        return Err(Error::InvalidArgument(format!(
            "soft_topk needs 1 <= kappa < n, got kappa={kappa}, n={n}"
        )));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "temperature must be > 0, got {tau}"
        )));
    }
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("soft_topk scores"));
    }
    Ok(soft_weights(s, kth_plus_one(s, kappa), tau))
}

/// Realization of `Ω = Diag(g) · SoftTop_κ`: the κ columns with the largest
/// soft weights, each scaled by `g_i · w_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Selector {
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
}

impl Selector {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// The d×κ sketch `U Ω`.
    pub fn sketch(&self, u: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(u.nrows(), self.len());
        for (j, (&i, &w)) in self.indices.iter().zip(&self.weights).enumerate() {
            out.column_mut(j).copy_from(&(u.column(i) * w));
        }
        out
    }
}

pub fn build_selector(g: &[f64], w: &[f64], kappa: usize) -> Result<Selector> {
    let n = w.len();
    if g.len() != n {
        return Err(Error::dims("build_selector gate", n, g.len()));
    }
    if kappa == 0 || kappa > n {
        return Err(Error::InvalidArgument(format!(
            "build_selector needs 1 <= kappa <= n, got kappa={kappa}, n={n}"
        )));
    }
    if w.iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateSelection);
    }
    let indices = top_k(w, kappa);
    let weights = indices.iter().map(|&i| g[i] * w[i]).collect();
    Ok(Selector { indices, weights })
}

/// `Σ_i Ω(i) U[:, i]` over the selected columns.
pub fn sparse_pool(u: &DMatrix<f64>, omega: &Selector) -> DVector<f64> {
    let mut acc = DVector::zeros(u.nrows());
    for (&i, &w) in omega.indices.iter().zip(&omega.weights) {
        acc.axpy(w, &u.column(i), 1.0);
    }
    acc
}
