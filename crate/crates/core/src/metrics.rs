//! Reconstruction quality metrics: PSNR, SSIM, SAM, CIEDE2000 and per-pixel
//! MSE maps.

use std::io::{self, Write};

use nalgebra::DMatrix;

use crate::cube::{RgbImage, SpectralCube};
use crate::error::{Error, Result};
use crate::forward_model::{apply_phi, ForwardOperator};

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;

fn check_same(context: &'static str, a: &SpectralCube, b: &SpectralCube) -> Result<()> {
    let sa = (a.bands(), a.height(), a.width());
    let sb = (b.bands(), b.height(), b.width());
    if sa != sb {
        return Err(Error::dims(context, format!("{sa:?}"), format!("{sb:?}")));
    }
    Ok(())
}

/// Mean squared error over all entries.
pub fn mse(a: &SpectralCube, b: &SpectralCube) -> Result<f64> {
    check_same("mse", a, b)?;
    Ok((a.data() - b.data()).norm_squared() / a.data().len() as f64)
}

/// `10·log10(peak² / MSE)`; `+∞` when the inputs are identical.
pub fn psnr(a: &SpectralCube, b: &SpectralCube, peak: f64) -> Result<f64> {
    if !(peak > 0.0 && peak.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "peak must be > 0, got {peak}"
        )));
    }
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / m).log10())
}

fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    for (i, v) in w.iter_mut().enumerate() {
        let x = i as f64 - c;
        *v = (-x * x / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = w.iter().sum();
    w.map(|v| v / s)
}

/// Separable "valid" filtering with the normalized Gaussian window.
fn filter_valid(p: &DMatrix<f64>, k: &[f64; SSIM_WINDOW]) -> DMatrix<f64> {
    let (h, w) = p.shape();
    let (oh, ow) = (h - SSIM_WINDOW + 1, w - SSIM_WINDOW + 1);
    let rows: DMatrix<f64> = DMatrix::from_fn(h, ow, |i, j| {
        (0..SSIM_WINDOW).map(|t| k[t] * p[(i, j + t)]).sum()
    });
    DMatrix::from_fn(oh, ow, |i, j| {
        (0..SSIM_WINDOW).map(|t| k[t] * rows[(i + t, j)]).sum()
    })
}

/// Mean local SSIM of two planes over all fully contained 11×11 windows.
pub fn ssim_plane(a: &DMatrix<f64>, b: &DMatrix<f64>, peak: f64) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::dims(
            "ssim",
            format!("{:?}", a.shape()),
            format!("{:?}", b.shape()),
        ));
    }
    if !(peak > 0.0 && peak.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "peak must be > 0, got {peak}"
        )));
    }
    let (h, w) = a.shape();
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::InvalidArgument(format!(
            "ssim window {SSIM_WINDOW}x{SSIM_WINDOW} exceeds {h}x{w} image"
        )));
    }
    let k = gaussian_window();
    let c1 = (0.01 * peak).powi(2);
    let c2 = (0.03 * peak).powi(2);

    let mu_a = filter_valid(a, &k);
    let mu_b = filter_valid(b, &k);
    let aa = filter_valid(&a.component_mul(a), &k);
    let bb = filter_valid(&b.component_mul(b), &k);
    let ab = filter_valid(&a.component_mul(b), &k);

    let mut total = 0.0;
    for idx in 0..mu_a.len() {
        let (ma, mb) = (mu_a[idx], mu_b[idx]);
        let va = aa[idx] - ma * ma;
        let vb = bb[idx] - mb * mb;
        let cov = ab[idx] - ma * mb;
        total +=
            ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    Ok(total / mu_a.len() as f64)
}

/// Band-averaged SSIM.
pub fn ssim(a: &SpectralCube, b: &SpectralCube, peak: f64) -> Result<f64> {
    check_same("ssim", a, b)?;
    let mut total = 0.0;
    for band in 0..a.bands() {
        total += ssim_plane(&a.band_plane(band), &b.band_plane(band), peak)?;
    }
    Ok(total / a.bands() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralAngle {
    /// Mean angle over pixels where both spectra are nonzero, in degrees.
    pub mean_deg: f64,
    /// Pixels skipped because one of the spectra has zero norm.
    pub excluded: usize,
}

/// Spectral angle mapper in degrees.
pub fn sam(a: &SpectralCube, b: &SpectralCube) -> Result<SpectralAngle> {
    check_same("sam", a, b)?;
    let mut total = 0.0;
    let mut used = 0usize;
    for (ca, cb) in a.data().column_iter().zip(b.data().column_iter()) {
        let (na, nb) = (ca.norm(), cb.norm());
        if na == 0.0 || nb == 0.0 {
            continue;
        }
        // Same angle as acos of the normalized inner product, but accurate
        // near 0° and 180°.
        let (ua, ub) = (ca / na, cb / nb);
        total += (2.0 * (&ua - &ub).norm().atan2((&ua + &ub).norm())).to_degrees();
        used += 1;
    }
    if used == 0 {
        return Err(Error::AllZeroPixels("sam"));
    }
    Ok(SpectralAngle {
        mean_deg: total / used as f64,
        excluded: a.pixels() - used,
    })
}

/// Per-pixel mean over bands of the squared error, as an H×W plane.
pub fn mse_map(a: &SpectralCube, b: &SpectralCube) -> Result<DMatrix<f64>> {
    check_same("mse_map", a, b)?;
    let bands = a.bands() as f64;
    let diff = a.data() - b.data();
    Ok(DMatrix::from_fn(a.height(), a.width(), |i, j| {
        diff.column(i * a.width() + j).norm_squared() / bands
    }))
}

/// The MSE map packed as a single-band cube for the cube file format.
pub fn mse_map_cube(a: &SpectralCube, b: &SpectralCube) -> Result<SpectralCube> {
    let map = mse_map(a, b)?;
    let (h, w) = map.shape();
    let row = DMatrix::from_fn(1, h * w, |_, p| map[(p / w, p % w)]);
    SpectralCube::new(row, h, w)
}

/// CIE L*a*b* coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lab {
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

impl Lab {
    pub const fn new(l: f64, a: f64, b: f64) -> Self {
        Self { l, a, b }
    }
}

const SRGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.412_456_4, 0.357_576_1, 0.180_437_5],
    [0.212_672_9, 0.715_152_2, 0.072_175_0],
    [0.019_333_9, 0.119_192_0, 0.950_304_1],
];
const D65_WHITE: [f64; 3] = [0.950_47, 1.0, 1.088_83];

fn lab_f(t: f64) -> f64 {
    const DELTA: f64 = 6.0 / 29.0;
    if t > DELTA * DELTA * DELTA {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

/// Linear sRGB (D65) to L*a*b*.
pub fn linear_srgb_to_lab(rgb: [f64; 3]) -> Lab {
    let mut f = [0.0; 3];
    for (k, row) in SRGB_TO_XYZ.iter().enumerate() {
        let xyz = row[0] * rgb[0] + row[1] * rgb[1] + row[2] * rgb[2];
        f[k] = lab_f(xyz / D65_WHITE[k]);
    }
    Lab::new(
        116.0 * f[1] - 16.0,
        500.0 * (f[0] - f[1]),
        200.0 * (f[1] - f[2]),
    )
}

fn hue_deg(b: f64, a: f64) -> f64 {
    if a == 0.0 && b == 0.0 {
        return 0.0;
    }
    let h = b.atan2(a).to_degrees();
    if h < 0.0 {
        h + 360.0
    } else {
        h
    }
}

/// CIEDE2000 colour difference with unit weighting factors.
pub fn ciede2000(x: Lab, y: Lab) -> f64 {
    const POW25_7: f64 = 6_103_515_625.0;
    let c1 = x.a.hypot(x.b);
    let c2 = y.a.hypot(y.b);
    let cbar7 = ((c1 + c2) / 2.0).powi(7);
    let g = 0.5 * (1.0 - (cbar7 / (cbar7 + POW25_7)).sqrt());
    let a1 = (1.0 + g) * x.a;
    let a2 = (1.0 + g) * y.a;
    let c1p = a1.hypot(x.b);
    let c2p = a2.hypot(y.b);
    let h1 = hue_deg(x.b, a1);
    let h2 = hue_deg(y.b, a2);

    let dl = y.l - x.l;
    let dc = c2p - c1p;
    let chroma_zero = c1p * c2p == 0.0;
    let dh = if chroma_zero {
        0.0
    } else {
        let d = h2 - h1;
        if d > 180.0 {
            d - 360.0
        } else if d < -180.0 {
            d + 360.0
        } else {
            d
        }
    };
    let dhh = 2.0 * (c1p * c2p).sqrt() * (dh / 2.0).to_radians().sin();

    let lbar = (x.l + y.l) / 2.0;
    let cbar = (c1p + c2p) / 2.0;
    let hbar = if chroma_zero {
        h1 + h2
    } else if (h1 - h2).abs() <= 180.0 {
        (h1 + h2) / 2.0
    } else if h1 + h2 < 360.0 {
        (h1 + h2 + 360.0) / 2.0
    } else {
        (h1 + h2 - 360.0) / 2.0
    };

    let cos = |deg: f64| deg.to_radians().cos();
    let t = 1.0 - 0.17 * cos(hbar - 30.0) + 0.24 * cos(2.0 * hbar) + 0.32 * cos(3.0 * hbar + 6.0)
        - 0.20 * cos(4.0 * hbar - 63.0);
    let dtheta = 30.0 * (-((hbar - 275.0) / 25.0).powi(2)).exp();
    let cbar7 = cbar.powi(7);
    let rc = 2.0 * (cbar7 / (cbar7 + POW25_7)).sqrt();
    let l50 = (lbar - 50.0).powi(2);
    let sl = 1.0 + 0.015 * l50 / (20.0 + l50).sqrt();
    let sc = 1.0 + 0.045 * cbar;
    let sh = 1.0 + 0.015 * cbar * t;
    let rt = -(2.0 * dtheta).to_radians().sin() * rc;

    let (tl, tc, th) = (dl / sl, dc / sc, dhh / sh);
    (tl * tl + tc * tc + th * th + rt * tc * th).max(0.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColorDifference {
    /// Mean per-pixel CIEDE2000.
    pub mean: f64,
    /// Channel values that were clamped into [0, 1] before conversion.
    pub clamped: usize,
}

/// Mean CIEDE2000 between two linear-sRGB images.
pub fn delta_e00(x: &RgbImage, y: &RgbImage) -> Result<ColorDifference> {
    if (x.height(), x.width()) != (y.height(), y.width()) {
        return Err(Error::dims(
            "delta_e00",
            format!("{}x{}", x.height(), x.width()),
            format!("{}x{}", y.height(), y.width()),
        ));
    }
    let mut clamped = 0usize;
    let mut clamp = |v: f64| {
        let c = v.clamp(0.0, 1.0);
        if c != v {
            clamped += 1;
        }
        c
    };
    let mut total = 0.0;
    for (px, py) in x.data().column_iter().zip(y.data().column_iter()) {
        let a = linear_srgb_to_lab([clamp(px[0]), clamp(px[1]), clamp(px[2])]);
        let b = linear_srgb_to_lab([clamp(py[0]), clamp(py[1]), clamp(py[2])]);
        total += ciede2000(a, b);
    }
    Ok(ColorDifference {
        mean: total / x.pixels() as f64,
        clamped,
    })
}

/// One evaluation row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub psnr_db: f64,
    pub ssim: f64,
    pub sam_deg: f64,
    pub delta_e00: Option<f64>,
}

pub const METRIC_HEADER: &str = "psnr_db,ssim,sam_deg,delta_e00";

impl MetricReport {
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "{METRIC_HEADER}")?;
        let de = self.delta_e00.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{}",
            self.psnr_db, self.ssim, self.sam_deg, de
        )
    }
}

/// Full metric set of `test` against `reference` with peak 1.
///
/// With `phi`, both cubes are rendered to RGB and scaled by the largest
/// reference RGB value before ΔE00, so the reference sits inside [0, 1].
pub fn evaluate(
    reference: &SpectralCube,
    test: &SpectralCube,
    phi: Option<&ForwardOperator>,
) -> Result<MetricReport> {
    let delta_e00 = match phi {
        None => None,
        Some(op) => {
            let xr = apply_phi(op, reference)?;
            let xt = apply_phi(op, test)?;
            let scale = xr.data().max();
            let scale = if scale > 0.0 { scale } else { 1.0 };
            let (h, w) = (xr.height(), xr.width());
            let xr = RgbImage::new(xr.into_data() / scale, h, w)?;
            let xt = RgbImage::new(xt.into_data() / scale, h, w)?;
            Some(delta_e00(&xr, &xt)?.mean)
        }
    };
    Ok(MetricReport {
        psnr_db: psnr(reference, test, 1.0)?,
        ssim: ssim(reference, test, 1.0)?,
        sam_deg: sam(reference, test)?.mean_deg,
        delta_e00,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cube(rng: &mut ChaCha8Rng, b: usize, h: usize, w: usize) -> SpectralCube {
        SpectralCube::new(
            DMatrix::from_fn(b, h * w, |_, _| rng.random_range(0.0..1.0)),
            h,
            w,
        )
        .unwrap()
    }

    #[test]
    fn psnr_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_cube(&mut rng, 3, 4, 5);
        assert_eq!(psnr(&a, &a, 1.0).unwrap(), f64::INFINITY);

        let zero = SpectralCube::zeros(1, 1, 4);
        let b = SpectralCube::new(DMatrix::from_element(1, 4, 0.1), 1, 4).unwrap();
        assert!((psnr(&zero, &b, 1.0).unwrap() - 20.0).abs() <= 1e-12);

        let b = random_cube(&mut rng, 3, 4, 5);
        let mut sum = 0.0;
        for (x, y) in a.data().iter().zip(b.data().iter()) {
            sum += (x - y) * (x - y);
        }
        let naive = 10.0 * (1.0 / (sum / 60.0)).log10();
        assert!((psnr(&a, &b, 1.0).unwrap() - naive).abs() <= 1e-9);
    }

    #[test]
    fn psnr_decreases_with_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_cube(&mut rng, 4, 6, 6);
        let noise = DMatrix::from_fn(4, 36, |_, _| rng.random_range(-1.0..1.0));
        let mut last = f64::INFINITY;
        for amp in [0.01, 0.05, 0.2] {
            let b = SpectralCube::new(a.data() + &noise * amp, 6, 6).unwrap();
            let p = psnr(&a, &b, 1.0).unwrap();
            assert!(p < last);
            last = p;
        }
    }

    #[test]
    fn psnr_rejects_shape_mismatch() {
        let a = SpectralCube::zeros(2, 3, 3);
        let b = SpectralCube::zeros(3, 3, 3);
        assert!(matches!(psnr(&a, &b, 1.0), Err(Error::Dimension { .. })));
    }

    /// Direct 2-D windowed SSIM, one window at a time.
    fn ssim_reference(a: &DMatrix<f64>, b: &DMatrix<f64>, peak: f64) -> f64 {
        let r = SSIM_WINDOW / 2;
        let mut g = [[0.0; SSIM_WINDOW]; SSIM_WINDOW];
        let mut norm = 0.0;
        for (i, row) in g.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                let (di, dj) = (i as f64 - r as f64, j as f64 - r as f64);
                *v = (-(di * di + dj * dj) / (2.0 * 1.5 * 1.5)).exp();
                norm += *v;
            }
        }
        let (c1, c2) = ((0.01 * peak).powi(2), (0.03 * peak).powi(2));
        let (h, w) = a.shape();
        let mut total = 0.0;
        let mut count = 0;
        for i0 in 0..=h - SSIM_WINDOW {
            for j0 in 0..=w - SSIM_WINDOW {
                let (mut ma, mut mb) = (0.0, 0.0);
                for i in 0..SSIM_WINDOW {
                    for j in 0..SSIM_WINDOW {
                        let wt = g[i][j] / norm;
                        ma += wt * a[(i0 + i, j0 + j)];
                        mb += wt * b[(i0 + i, j0 + j)];
                    }
                }
                let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
                for i in 0..SSIM_WINDOW {
                    for j in 0..SSIM_WINDOW {
                        let wt = g[i][j] / norm;
                        let da = a[(i0 + i, j0 + j)] - ma;
                        let db = b[(i0 + i, j0 + j)] - mb;
                        va += wt * da * da;
                        vb += wt * db * db;
                        cov += wt * da * db;
                    }
                }
                total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                    / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                count += 1;
            }
        }
        total / count as f64
    }

    #[test]
    fn ssim_identity_and_constants() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = DMatrix::from_fn(16, 14, |_, _| rng.random_range(0.0..1.0));
        assert!((ssim_plane(&a, &a, 1.0).unwrap() - 1.0).abs() <= 1e-12);
        let c = DMatrix::from_element(12, 12, 0.4);
        assert!((ssim_plane(&c, &c, 1.0).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn ssim_inverted_binary_plane_matches_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = DMatrix::from_fn(15, 17, |_, _| if rng.random_bool(0.5) { 1.0 } else { 0.0 });
        let b = a.map(|v| 1.0 - v);
        let got = ssim_plane(&a, &b, 1.0).unwrap();
        assert!(got < 1.0);
        assert!((got - ssim_reference(&a, &b, 1.0)).abs() <= 1e-10);
    }

    #[test]
    fn ssim_random_matches_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = DMatrix::from_fn(13, 20, |_, _| rng.random_range(0.0..1.0));
        let b = a.map(|v| (v + rng.random_range(-0.1..0.1_f64)).clamp(0.0, 1.0));
        assert!((ssim_plane(&a, &b, 1.0).unwrap() - ssim_reference(&a, &b, 1.0)).abs() <= 1e-10);
    }

    #[test]
    fn ssim_window_must_fit() {
        let a = DMatrix::zeros(10, 20);
        assert!(matches!(
            ssim_plane(&a, &a, 1.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn ssim_cube_averages_bands() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random_cube(&mut rng, 3, 12, 12);
        let b = random_cube(&mut rng, 3, 12, 12);
        let mean = (0..3)
            .map(|k| ssim_plane(&a.band_plane(k), &b.band_plane(k), 1.0).unwrap())
            .sum::<f64>()
            / 3.0;
        assert!((ssim(&a, &b, 1.0).unwrap() - mean).abs() <= 1e-14);
    }

    #[test]
    fn sam_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let b = random_cube(&mut rng, 5, 3, 4);
        let a = SpectralCube::new(b.data() * 3.5, 3, 4).unwrap();
        assert!(sam(&a, &b).unwrap().mean_deg.abs() <= 1e-6);

        let x =
            SpectralCube::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]), 1, 2).unwrap();
        let y =
            SpectralCube::new(DMatrix::from_row_slice(2, 2, &[0.0, 3.0, 1.0, 0.0]), 1, 2).unwrap();
        assert!((sam(&x, &y).unwrap().mean_deg - 90.0).abs() <= 1e-12);

        let c = random_cube(&mut rng, 5, 3, 4);
        let mut total = 0.0;
        for p in 0..12 {
            let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
            for k in 0..5 {
                dot += b.data()[(k, p)] * c.data()[(k, p)];
                na += b.data()[(k, p)].powi(2);
                nb += c.data()[(k, p)].powi(2);
            }
            total += (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0).acos() * 180.0
                / std::f64::consts::PI;
        }
        assert!((sam(&b, &c).unwrap().mean_deg - total / 12.0).abs() <= 1e-9);
    }

    #[test]
    fn sam_per_pixel_scaling_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = random_cube(&mut rng, 6, 4, 4);
        let b = random_cube(&mut rng, 6, 4, 4);
        let mut scaled = b.data().clone();
        for mut col in scaled.column_iter_mut() {
            col *= rng.random_range(0.1..10.0);
        }
        let scaled = SpectralCube::new(scaled, 4, 4).unwrap();
        let d = sam(&a, &b).unwrap().mean_deg - sam(&a, &scaled).unwrap().mean_deg;
        assert!(d.abs() <= 1e-9);
    }

    #[test]
    fn sam_zero_pixels() {
        let a =
            SpectralCube::new(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 1.0]), 1, 2).unwrap();
        let r = sam(&a, &a).unwrap();
        assert_eq!(r.excluded, 1);
        let z = SpectralCube::zeros(2, 1, 2);
        assert!(matches!(sam(&z, &a), Err(Error::AllZeroPixels(_))));
    }

    #[test]
    fn mse_map_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_cube(&mut rng, 4, 3, 5);
        assert!(mse_map(&a, &a).unwrap().iter().all(|&v| v == 0.0));

        let b = random_cube(&mut rng, 4, 3, 5);
        let map = mse_map(&a, &b).unwrap();
        for i in 0..3 {
            for j in 0..5 {
                let mut s = 0.0;
                for k in 0..4 {
                    s += (a.data()[(k, i * 5 + j)] - b.data()[(k, i * 5 + j)]).powi(2);
                }
                assert!((map[(i, j)] - s / 4.0).abs() <= 1e-15);
            }
        }
        assert!((map.mean() - mse(&a, &b).unwrap()).abs() <= 1e-12);

        let s1 = random_cube(&mut rng, 1, 2, 3);
        let s2 = random_cube(&mut rng, 1, 2, 3);
        let m = mse_map(&s1, &s2).unwrap();
        let expected = (s1.band_plane(0) - s2.band_plane(0)).map(|v| v * v);
        assert_eq!(m, expected);
        let packed = mse_map_cube(&s1, &s2).unwrap();
        assert_eq!(packed.band_plane(0), expected);
    }

    #[test]
    fn ciede2000_first_verification_pair() {
        let d = ciede2000(
            Lab::new(50.0, 2.6772, -79.7751),
            Lab::new(50.0, 0.0, -82.7485),
        );
        assert!((d - 2.0425).abs() <= 1e-4, "{d}");
    }

    #[test]
    fn srgb_white_maps_to_lab_white() {
        let lab = linear_srgb_to_lab([1.0, 1.0, 1.0]);
        assert!((lab.l - 100.0).abs() <= 1e-3);
        assert!(lab.a.abs() <= 1e-2 && lab.b.abs() <= 1e-2);
        assert_eq!(linear_srgb_to_lab([0.0; 3]), Lab::new(0.0, 0.0, 0.0));
    }

    #[test]
    fn delta_e_identity_symmetry_and_clamping() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let x = RgbImage::new(
            DMatrix::from_fn(3, 20, |_, _| rng.random_range(0.0..1.0)),
            4,
            5,
        )
        .unwrap();
        let y = RgbImage::new(
            DMatrix::from_fn(3, 20, |_, _| rng.random_range(0.0..1.0)),
            4,
            5,
        )
        .unwrap();
        assert_eq!(delta_e00(&x, &x).unwrap().mean, 0.0);
        let d1 = delta_e00(&x, &y).unwrap().mean;
        let d2 = delta_e00(&y, &x).unwrap().mean;
        assert!(d1 > 0.0);
        assert!((d1 - d2).abs() <= 1e-12);

        let hot = RgbImage::new(x.data().map(|v| v + 2.0), 4, 5).unwrap();
        let ones = RgbImage::new(DMatrix::from_element(3, 20, 1.0), 4, 5).unwrap();
        let r = delta_e00(&hot, &ones).unwrap();
        assert_eq!(r.mean, 0.0);
        assert_eq!(r.clamped, 60);
    }

    #[test]
    fn report_csv_row() {
        let r = MetricReport {
            psnr_db: 30.5,
            ssim: 0.9,
            sam_deg: 2.0,
            delta_e00: None,
        };
        let mut out = Vec::new();
        r.write_csv(&mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "psnr_db,ssim,sam_deg,delta_e00\n30.5,0.9,2,\n"
        );
    }
}
