//! Orthonormal subspace from the sketch, probe residual, and the gated
//! subspace proximal.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use super::seeded_rng;
use super::selection::{sigmoid, Selector};
use crate::error::{Error, Result};
use crate::svt::{svt_full, ShrinkageThreshold};

/// A d×r orthonormal basis. The last `completed` columns did not come from
/// the sketch (it had rank below r) and were filled with seeded random
/// directions.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    pub q: DMatrix<f64>,
    pub completed: usize,
}

fn orthogonalize_against(v: &mut DVector<f64>, basis: &[DVector<f64>]) {
    // Two passes of classical Gram-Schmidt keep QᵀQ = I to working precision.
    for _ in 0..2 {
        for b in basis {
            let c = b.dot(v);
            v.axpy(-c, b, 1.0);
        }
    }
}

/// `Q = orth(U Ω)` truncated to rank `r`.
///
/// Orthonormalizes the weighted sketch with column-pivoted Gram-Schmidt, so
/// the first `r` columns come from the `r` most independent sketch columns.
/// When the sketch has rank `ρ < r` the basis is completed with random
/// directions drawn from `(seed, stream)`.
pub fn orthonormal_subspace(
    u: &DMatrix<f64>,
    omega: &Selector,
    r: usize,
    seed: u64,
    stream: u64,
) -> Result<SubspaceBasis> {
    let d = u.nrows();
    if r == 0 || r > d || r > omega.len() {
        return Err(Error::InvalidArgument(format!(
            "subspace rank {r} must satisfy 1 <= r <= min(d={d}, kappa={})",
            omega.len()
        )));
    }
    let sketch = omega.sketch(u);
    let mut residual: Vec<DVector<f64>> = sketch.column_iter().map(|c| c.into_owned()).collect();
    let scale = residual.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let tol = d.max(residual.len()) as f64 * f64::EPSILON * scale * 16.0;

    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(r);
    let mut used = vec![false; residual.len()];
    while basis.len() < r && scale > 0.0 {
        let mut best = None;
        let mut best_norm = 0.0;
        for (j, c) in residual.iter().enumerate() {
            if used[j] {
                continue;
            }
            let nrm = c.norm();
            if nrm > best_norm {
                best_norm = nrm;
                best = Some(j);
            }
        }
        let Some(j) = best else { break };
        if best_norm <= tol {
            break;
        }
        used[j] = true;
        let mut q = residual[j].clone();
        orthogonalize_against(&mut q, &basis);
        let nrm = q.norm();
        if nrm <= tol {
            continue;
        }
        q /= nrm;
        for (k, c) in residual.iter_mut().enumerate() {
            if !used[k] {
                let proj = q.dot(c);
                c.axpy(-proj, &q, 1.0);
            }
        }
        basis.push(q);
    }

    let from_sketch = basis.len();
    let mut rng = seeded_rng(seed, stream);
    while basis.len() < r {
        let mut v = DVector::<f64>::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
        orthogonalize_against(&mut v, &basis);
        let nrm = v.norm();
        if nrm > 1e-8 {
            basis.push(v / nrm);
        }
    }
    Ok(SubspaceBasis {
        q: DMatrix::from_columns(&basis),
        completed: r - from_sketch,
    })
}

/// Probe estimate of the fraction of `U Diag(g)` left outside `range(Q)`:
/// `‖(I − QQᵀ) U G‖_F / (‖U G‖_F + ε)` with `G = Diag(g) Ξ`, `Ξ` an n×s
/// seeded Gaussian block.
///
/// A probe with no energy at all (`U G = 0`) reports `1 − ε_mach`: the
/// subspace is treated as having captured nothing.
pub fn residual_ratio(
    u: &DMatrix<f64>,
    q: &DMatrix<f64>,
    g: &[f64],
    probes: usize,
    seed: u64,
    stream: u64,
    eps: f64,
) -> Result<f64> {
    let (d, n) = u.shape();
    if probes == 0 || eps.is_nan() || eps <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "residual_ratio needs probes >= 1 and eps > 0, got {probes}, {eps}"
        )));
    }
    if g.len() != n || q.nrows() != d {
        return Err(Error::dims(
            "residual_ratio",
            format!("g: {n}, q rows: {d}"),
            format!("g: {}, q rows: {}", g.len(), q.nrows()),
        ));
    }
    let mut rng = seeded_rng(seed, stream);
    let mut probe = DMatrix::<f64>::zeros(n, probes);
    // Row-major draw order so the probe block depends only on (seed, n, s).
    for i in 0..n {
        for j in 0..probes {
            let xi: f64 = StandardNormal.sample(&mut rng);
            probe[(i, j)] = g[i] * xi;
        }
    }
    let ug = u * probe;
    let total = ug.norm();
    let ceiling = 1.0 - f64::EPSILON;
    if total == 0.0 {
        return Ok(ceiling);
    }
    let res = &ug - q * (q.transpose() * &ug);
    Ok((res.norm() / (total + eps)).min(ceiling))
}

/// Compact half of [`subspace_proximal`]: the r×n matrix
/// `(1 − α)B + α · svt_full(B, θ)` with `B = Qᵀu`.
pub(crate) fn gated_compact(
    u: &DMatrix<f64>,
    q: &DMatrix<f64>,
    theta: ShrinkageThreshold,
    beta: f64,
) -> Result<DMatrix<f64>> {
    if q.nrows() != u.nrows() {
        return Err(Error::dims("subspace_proximal", u.nrows(), q.nrows()));
    }
    let alpha = sigmoid(beta);
    // Explicit transpose so the product goes through the blocked GEMM path.
    let compact = q.transpose() * u;
    if theta.value() == 0.0 || alpha == 0.0 {
        return Ok(compact);
    }
    let shrunk = svt_full(&compact, theta)?;
    Ok(if alpha == 1.0 {
        shrunk
    } else {
        compact * (1.0 - alpha) + shrunk * alpha
    })
}

/// Gated subspace shrinkage: with `B = Qᵀu` and `α = σ(β)`,
/// returns `Q · ((1 − α)B + α · svt_full(B, θ))`.
pub fn subspace_proximal(
    u: &DMatrix<f64>,
    q: &DMatrix<f64>,
    theta: ShrinkageThreshold,
    beta: f64,
) -> Result<DMatrix<f64>> {
    Ok(q * gated_compact(u, q, theta, beta)?)
}
