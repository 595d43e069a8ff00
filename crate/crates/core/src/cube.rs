//! Pixel-column containers shared by every module.
//!
//! Both containers store one pixel per column. Pixel `p` sits at image row
//! `p / width` and column `p % width`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

fn check_layout(
    context: &'static str,
    data: &DMatrix<f64>,
    height: usize,
    width: usize,
) -> Result<()> {
    if height == 0 || width == 0 || data.nrows() == 0 {
        return Err(Error::InvalidArgument(format!(
            "{context}: empty dimensions {}x{height}x{width}",
            data.nrows()
        )));
    }
    let pixels = height
        .checked_mul(width)
        .ok_or_else(|| Error::InvalidArgument(format!("{context}: {height}x{width} overflows")))?;
    if data.ncols() != pixels {
        return Err(Error::dims(
            context,
            format!("{pixels} pixel columns"),
            data.ncols(),
        ));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(context));
    }
    Ok(())
}

fn plane(data: &DMatrix<f64>, row: usize, height: usize, width: usize) -> DMatrix<f64> {
    DMatrix::from_fn(height, width, |i, j| data[(row, i * width + j)])
}

/// A hyperspectral cube `Y`: `B` bands by `N = H * W` pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCube {
    data: DMatrix<f64>,
    height: usize,
    width: usize,
}

impl SpectralCube {
    pub fn new(data: DMatrix<f64>, height: usize, width: usize) -> Result<Self> {
        check_layout("spectral cube", &data, height, width)?;
        Ok(Self {
            data,
            height,
            width,
        })
    }

    pub fn zeros(bands: usize, height: usize, width: usize) -> Self {
        Self {
            data: DMatrix::zeros(bands, height * width),
            height,
            width,
        }
    }

    /// Builds a cube from `B` planes, each `H x W`.
    pub fn from_planes(planes: &[DMatrix<f64>]) -> Result<Self> {
        let first = planes
            .first()
            .ok_or_else(|| Error::InvalidArgument("no planes".into()))?;
        let (h, w) = first.shape();
        if let Some(bad) = planes.iter().find(|p| p.shape() != (h, w)) {
            return Err(Error::dims(
                "cube planes",
                format!("{h}x{w}"),
                format!("{}x{}", bad.nrows(), bad.ncols()),
            ));
        }
        let data = DMatrix::from_fn(planes.len(), h * w, |b, p| planes[b][(p / w, p % w)]);
        Self::new(data, h, w)
    }

    pub fn bands(&self) -> usize {
        self.data.nrows()
    }

    pub fn pixels(&self) -> usize {
        self.data.ncols()
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_data(self) -> DMatrix<f64> {
        self.data
    }

    pub fn band_plane(&self, band: usize) -> DMatrix<f64> {
        plane(&self.data, band, self.height, self.width)
    }

    pub(crate) fn from_parts_unchecked(data: DMatrix<f64>, height: usize, width: usize) -> Self {
        Self {
            data,
            height,
            width,
        }
    }
}

/// An RGB observation `X`: 3 channels by `N = H * W` pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    data: DMatrix<f64>,
    height: usize,
    width: usize,
}

impl RgbImage {
    pub fn new(data: DMatrix<f64>, height: usize, width: usize) -> Result<Self> {
        if data.nrows() != 3 {
            return Err(Error::dims("rgb image", "3 channel rows", data.nrows()));
        }
        check_layout("rgb image", &data, height, width)?;
        Ok(Self {
            data,
            height,
            width,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            data: DMatrix::zeros(3, height * width),
            height,
            width,
        }
    }

    pub fn pixels(&self) -> usize {
        self.data.ncols()
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_data(self) -> DMatrix<f64> {
        self.data
    }

    pub fn channel_plane(&self, channel: usize) -> DMatrix<f64> {
        plane(&self.data, channel, self.height, self.width)
    }

    /// Views the image as a three-band cube (the on-disk representation).
    pub fn to_cube(&self) -> SpectralCube {
        SpectralCube::from_parts_unchecked(self.data.clone(), self.height, self.width)
    }

    pub fn from_cube(cube: SpectralCube) -> Result<Self> {
        let (h, w) = (cube.height(), cube.width());
        Self::new(cube.into_data(), h, w)
    }

    pub(crate) fn from_parts_unchecked(data: DMatrix<f64>, height: usize, width: usize) -> Self {
        Self {
            data,
            height,
            width,
        }
    }
}
