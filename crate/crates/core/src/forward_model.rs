//! The physical forward operator `Φ = S · Diag(ℓ)` mapping spectra to RGB.
//!
//! `S` is the 3×B camera spectral sensitivity and `ℓ` the length-B scene
//! illuminant. [`estimate_phi_ls`] is the calibration route: a ridge
//! least-squares fit of `Φ` from paired RGB/cube data. [`estimate_illuminant`]
//! recovers `ℓ` from such an estimate when `S` is known.

use nalgebra::{DMatrix, DVector};

use crate::cube::{RgbImage, SpectralCube};
use crate::error::{Error, Result};

fn check_wavelengths(context: &'static str, wavelengths: &[f64]) -> Result<()> {
    if wavelengths.iter().any(|w| !w.is_finite()) {
        return Err(Error::NonFinite(context));
    }
    if let Some(i) = wavelengths.windows(2).position(|p| p[1] <= p[0]) {
        return Err(Error::InvalidArgument(format!(
            "{context}: wavelengths not strictly increasing at index {}",
            i + 1
        )));
    }
    Ok(())
}

/// Camera spectral sensitivity `S` (3×B) on a wavelength grid in nm.
#[derive(Debug, Clone, PartialEq)]
pub struct Sensitivity {
    matrix: DMatrix<f64>,
    wavelengths: Vec<f64>,
}

impl Sensitivity {
    pub fn new(matrix: DMatrix<f64>, wavelengths: Vec<f64>) -> Result<Self> {
        if matrix.nrows() != 3 {
            return Err(Error::dims("sensitivity", "3 rows", matrix.nrows()));
        }
        if matrix.ncols() != wavelengths.len() || wavelengths.is_empty() {
            return Err(Error::dims(
                "sensitivity",
                format!("{} wavelengths", matrix.ncols()),
                wavelengths.len(),
            ));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sensitivity"));
        }
        if matrix.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidArgument(
                "sensitivity has negative entries".into(),
            ));
        }
        for (c, row) in matrix.row_iter().enumerate() {
            if !row.iter().any(|&v| v > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "sensitivity channel {c} has no positive response"
                )));
            }
        }
        check_wavelengths("sensitivity", &wavelengths)?;
        Ok(Self {
            matrix,
            wavelengths,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn wavelengths(&self) -> &[f64] {
        &self.wavelengths
    }

    pub fn bands(&self) -> usize {
        self.matrix.ncols()
    }
}

/// Scene illuminant spectrum `ℓ` (relative spectral power per band).
#[derive(Debug, Clone, PartialEq)]
pub struct Illuminant {
    spectrum: Vec<f64>,
    wavelengths: Vec<f64>,
}

impl Illuminant {
    /// Validated constructor: nonnegative, finite, not identically zero.
    pub fn new(spectrum: Vec<f64>, wavelengths: Vec<f64>) -> Result<Self> {
        let ell = Self::dark_or_lit(spectrum, wavelengths)?;
        if ell.is_dark() {
            return Err(Error::InvalidArgument(
                "illuminant is identically zero".into(),
            ));
        }
        Ok(ell)
    }

    /// Equal-energy illuminant on the given grid.
    pub fn flat(wavelengths: Vec<f64>) -> Result<Self> {
        Self::new(vec![1.0; wavelengths.len()], wavelengths)
    }

    /// The zero illuminant. Renders black; only useful as a limit case and
    /// as a possible outcome of [`estimate_illuminant`].
    pub fn dark(wavelengths: Vec<f64>) -> Result<Self> {
        Self::dark_or_lit(vec![0.0; wavelengths.len()], wavelengths)
    }

    fn dark_or_lit(spectrum: Vec<f64>, wavelengths: Vec<f64>) -> Result<Self> {
        if spectrum.len() != wavelengths.len() || spectrum.is_empty() {
            return Err(Error::dims(
                "illuminant",
                format!("{} wavelengths", spectrum.len()),
                wavelengths.len(),
            ));
        }
        if spectrum.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("illuminant"));
        }
        if spectrum.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidArgument(
                "illuminant has negative power".into(),
            ));
        }
        check_wavelengths("illuminant", &wavelengths)?;
        Ok(Self {
            spectrum,
            wavelengths,
        })
    }

    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn wavelengths(&self) -> &[f64] {
        &self.wavelengths
    }

    pub fn is_dark(&self) -> bool {
        self.spectrum.iter().all(|&v| v == 0.0)
    }

    /// Returns a copy with every band scaled by `factor >= 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::dark_or_lit(
            self.spectrum.iter().map(|v| v * factor).collect(),
            self.wavelengths.clone(),
        )
    }
}

/// The forward operator `Φ` (3×B), optionally with the factors it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOperator {
    phi: DMatrix<f64>,
    factors: Option<(Sensitivity, Illuminant)>,
}

impl ForwardOperator {
    pub fn from_matrix(phi: DMatrix<f64>) -> Result<Self> {
        if phi.nrows() != 3 || phi.ncols() == 0 {
            return Err(Error::dims(
                "forward operator",
                "3xB with B >= 1",
                format!("{}x{}", phi.nrows(), phi.ncols()),
            ));
        }
        if phi.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("forward operator"));
        }
        Ok(Self { phi, factors: None })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn bands(&self) -> usize {
        self.phi.ncols()
    }

    pub fn factors(&self) -> Option<(&Sensitivity, &Illuminant)> {
        self.factors.as_ref().map(|(s, l)| (s, l))
    }

    /// Number of negative entries. Least-squares estimates may contain some;
    /// they are kept but worth reporting.
    pub fn negative_entries(&self) -> usize {
        self.phi.iter().filter(|&&v| v < 0.0).count()
    }
}

/// `Φ[c][b] = S[c][b] · ℓ[b]`.
pub fn make_phi(s: &Sensitivity, ell: &Illuminant) -> Result<ForwardOperator> {
    if s.bands() != ell.spectrum.len() {
        return Err(Error::dims("make_phi bands", s.bands(), ell.spectrum.len()));
    }
    if s.wavelengths != ell.wavelengths {
        return Err(Error::dims(
            "make_phi wavelength grid",
            "identical grids",
            "differing grids",
        ));
    }
    let mut phi = s.matrix.clone();
    for (mut col, &l) in phi.column_iter_mut().zip(&ell.spectrum) {
        col *= l;
    }
    Ok(ForwardOperator {
        phi,
        factors: Some((s.clone(), ell.clone())),
    })
}

/// `X = Φ Y`.
pub fn apply_phi(op: &ForwardOperator, y: &SpectralCube) -> Result<RgbImage> {
    if y.bands() != op.bands() {
        return Err(Error::dims("apply_phi bands", op.bands(), y.bands()));
    }
    let x = &op.phi * y.data();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("apply_phi output"));
    }
    Ok(RgbImage::from_parts_unchecked(x, y.height(), y.width()))
}

/// `Φᵀ X`.
pub fn apply_phi_adjoint(op: &ForwardOperator, x: &RgbImage) -> Result<SpectralCube> {
    let y = op.phi.tr_mul(x.data());
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("apply_phi_adjoint output"));
    }
    Ok(SpectralCube::from_parts_unchecked(y, x.height(), x.width()))
}

/// Ridge least-squares calibration:
/// `argmin_Φ ‖ΦY − X‖²_F + ridge · ‖Φ‖²_F`, solved through the normal
/// equations `Φ (YYᵀ + ridge·I) = XYᵀ`.
pub fn estimate_phi_ls(x: &RgbImage, y: &SpectralCube, ridge: f64) -> Result<ForwardOperator> {
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "ridge must be finite and >= 0, got {ridge}"
        )));
    }
    if x.pixels() != y.pixels() {
        return Err(Error::dims(
            "estimate_phi_ls pixels",
            y.pixels(),
            x.pixels(),
        ));
    }
    let b = y.bands();
    let mut gram = y.data() * y.data().transpose();
    for i in 0..b {
        gram[(i, i)] += ridge;
    }
    let eig = gram.clone().symmetric_eigen();
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if max <= 0.0 || min <= (b as f64) * f64::EPSILON * max {
        return Err(Error::Singular("estimate_phi_ls normal equations"));
    }
    let rhs = y.data() * x.data().transpose();
    let chol = gram
        .cholesky()
        .ok_or(Error::Singular("estimate_phi_ls normal equations"))?;
    let phi_t = chol.solve(&rhs);
    ForwardOperator::from_matrix(phi_t.transpose())
}

/// Per-band nonnegative scalar fit `ℓ_b = max(0, ⟨Φ̂[:,b], S[:,b]⟩ / ‖S[:,b]‖²)`.
/// Bands where `S[:,b]` vanishes get `ℓ_b = 0`.
pub fn estimate_illuminant(s: &Sensitivity, phi_hat: &ForwardOperator) -> Result<Illuminant> {
    if s.bands() != phi_hat.bands() {
        return Err(Error::dims(
            "estimate_illuminant bands",
            s.bands(),
            phi_hat.bands(),
        ));
    }
    let spectrum = s
        .matrix
        .column_iter()
        .zip(phi_hat.phi.column_iter())
        .map(|(sc, pc)| {
            let energy = sc.norm_squared();
            if energy == 0.0 {
                0.0
            } else {
                (sc.dot(&pc) / energy).max(0.0)
            }
        })
        .collect();
    Illuminant::dark_or_lit(spectrum, s.wavelengths.clone())
}

/// `σ_max(Φ)²` by power iteration on `ΦᵀΦ`, starting from the normalized
/// all-ones vector. Stops once the Rayleigh quotient changes by at most
/// `tol` relative between iterations.
pub fn spectral_norm_sq(op: &ForwardOperator, tol: f64, max_iter: usize) -> Result<f64> {
    if max_iter == 0 {
        return Err(Error::InvalidArgument("max_iter must be >= 1".into()));
    }
    let phi = &op.phi;
    if phi.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    let b = phi.ncols();
    let mut v = DVector::from_element(b, 1.0 / (b as f64).sqrt());
    if (phi * &v).norm() == 0.0 {
        // All-ones lies in the null space; restart on the heaviest column.
        let j = phi
            .column_iter()
            .enumerate()
            .fold((0, -1.0), |acc, (j, c)| {
                let n = c.norm_squared();
                if n > acc.1 {
                    (j, n)
                } else {
                    acc
                }
            })
            .0;
        v.fill(0.0);
        v[j] = 1.0;
    }

    let mut estimate = (phi * &v).norm_squared();
    for _ in 0..max_iter {
        let w = phi.tr_mul(&(phi * &v));
        let norm = w.norm();
        if norm == 0.0 {
            return Ok(0.0);
        }
        v = w / norm;
        let next = (phi * &v).norm_squared();
        let converged = (next - estimate).abs() <= tol * next;
        estimate = next;
        if converged {
            return Ok(estimate);
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        last_estimate: estimate,
        last_iterate: v.iter().copied().collect(),
    })
}
