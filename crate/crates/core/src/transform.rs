//! Fixed orthonormal analysis/synthesis transforms along the spectral axis.
//!
//! Both variants are isometries, so the nuclear-norm proximal step taken in
//! the transform domain is exactly the proximal step of the composite
//! objective in the cube domain.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::cube::SpectralCube;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransformKind {
    Identity,
    #[default]
    SpectralDct,
}

impl FromStr for TransformKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Self::Identity),
            "dct" | "spectral_dct" => Ok(Self::SpectralDct),
            other => Err(Error::InvalidArgument(format!(
                "unknown transform {other:?}"
            ))),
        }
    }
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Identity => "identity",
            Self::SpectralDct => "dct",
        })
    }
}

/// Orthonormal DCT-II matrix `C` (b×b); row `k` is the `k`-th cosine basis vector.
pub fn dct_matrix(b: usize) -> DMatrix<f64> {
    let bf = b as f64;
    DMatrix::from_fn(b, b, |k, j| {
        let scale = if k == 0 {
            (1.0 / bf).sqrt()
        } else {
            (2.0 / bf).sqrt()
        };
        scale * (PI * (j as f64 + 0.5) * k as f64 / bf).cos()
    })
}

/// A transform bound to a band count, with its basis precomputed.
#[derive(Debug, Clone)]
pub struct SpectralTransform {
    kind: TransformKind,
    basis: Option<DMatrix<f64>>,
}

impl SpectralTransform {
    pub fn new(kind: TransformKind, bands: usize) -> Self {
        let basis = match kind {
            TransformKind::Identity => None,
            TransformKind::SpectralDct => Some(dct_matrix(bands)),
        };
        Self { kind, basis }
    }

    pub fn kind(&self) -> TransformKind {
        self.kind
    }

    pub fn analyze(&self, y: &SpectralCube) -> Result<DMatrix<f64>> {
        match &self.basis {
            None => Ok(y.data().clone()),
            Some(c) => {
                if c.nrows() != y.bands() {
                    return Err(Error::dims("analyze bands", c.nrows(), y.bands()));
                }
                Ok(c * y.data())
            }
        }
    }

    pub fn synthesize(
        &self,
        u: &DMatrix<f64>,
        height: usize,
        width: usize,
    ) -> Result<SpectralCube> {
        let data = match &self.basis {
            None => u.clone(),
            Some(c) => {
                if c.nrows() != u.nrows() {
                    return Err(Error::dims("synthesize rows", c.nrows(), u.nrows()));
                }
                c.tr_mul(u)
            }
        };
        SpectralCube::new(data, height, width)
    }
}

/// `𝒯(Y)`: the d×n transform-domain matrix (d = B, n = N).
pub fn analyze(y: &SpectralCube, kind: TransformKind) -> Result<DMatrix<f64>> {
    SpectralTransform::new(kind, y.bands()).analyze(y)
}

/// `𝒯†(U)`: exact inverse of [`analyze`].
pub fn synthesize(
    u: &DMatrix<f64>,
    kind: TransformKind,
    height: usize,
    width: usize,
) -> Result<SpectralCube> {
    SpectralTransform::new(kind, u.nrows()).synthesize(u, height, width)
}
