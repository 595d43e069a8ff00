//! Synthetic scenes and sensitivities, RGB rendering, and file formats.
//!
//! Cube files (`HSC1`) are a 4-byte magic, then `b`, `h`, `w` as little-endian
//! `u32`, then `b·h·w` little-endian `f32` values, band-major then row-major.
//! RGB images are stored as three-band cube files.
//!
//! Every writer goes through a temporary file in the target directory and a
//! rename, so a failed write never leaves a partial output behind.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::cube::{RgbImage, SpectralCube};
use crate::error::{Error, Result};
use crate::forward_model::{apply_phi, make_phi, ForwardOperator, Illuminant, Sensitivity};

pub const CUBE_MAGIC: [u8; 4] = *b"HSC1";
const HEADER_LEN: u64 = 16;

pub const WAVELENGTH_MIN_NM: f64 = 400.0;
pub const WAVELENGTH_MAX_NM: f64 = 700.0;

/// Uniform grid of `bands` wavelengths over 400–700 nm.
pub fn wavelength_grid(bands: usize) -> Vec<f64> {
    match bands {
        0 => Vec::new(),
        1 => vec![(WAVELENGTH_MIN_NM + WAVELENGTH_MAX_NM) / 2.0],
        _ => {
            let step = (WAVELENGTH_MAX_NM - WAVELENGTH_MIN_NM) / (bands - 1) as f64;
            (0..bands)
                .map(|i| WAVELENGTH_MIN_NM + step * i as f64)
                .collect()
        }
    }
}

/// Parameters of a synthetic low-rank scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneSpec {
    pub bands: usize,
    pub height: usize,
    pub width: usize,
    pub rank: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.bands == 0 || self.height == 0 || self.width == 0 {
            return Err(Error::InvalidArgument(format!(
                "scene dimensions must be positive, got {}x{}x{}",
                self.bands, self.height, self.width
            )));
        }
        if self.rank == 0 || self.rank > self.bands {
            return Err(Error::InvalidArgument(format!(
                "scene rank must be in 1..={}, got {}",
                self.bands, self.rank
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "noise sigma must be >= 0, got {}",
                self.noise_sigma
            )));
        }
        Ok(())
    }
}

fn bump(x: f64, center: f64, width: f64) -> f64 {
    let z = (x - center) / width;
    (-0.5 * z * z).exp()
}

/// `Y = clamp(A·C + noise, 0, 1)`.
///
/// Columns of `A` are mixtures of two Gaussian bumps with peak 1. Columns of
/// `C` are smooth blob fields normalized to sum to one, times a smooth
/// brightness in [0.5, 1]. The clean product is bounded by 0.9, so with zero
/// noise the clamp is inactive and the cube has rank at most `spec.rank`.
pub fn synth_scene(spec: &SceneSpec) -> Result<SpectralCube> {
    spec.validate()?;
    let SceneSpec {
        bands: b,
        height: h,
        width: w,
        rank,
        noise_sigma,
        seed,
    } = *spec;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = wavelength_grid(b);

    let mut a = DMatrix::zeros(b, rank);
    for k in 0..rank {
        let c1 = rng.random_range(WAVELENGTH_MIN_NM..WAVELENGTH_MAX_NM);
        let c2 = rng.random_range(WAVELENGTH_MIN_NM..WAVELENGTH_MAX_NM);
        let w1 = rng.random_range(25.0..90.0);
        let w2 = rng.random_range(25.0..90.0);
        let mix = rng.random_range(0.2..1.0);
        for (i, &lambda) in grid.iter().enumerate() {
            a[(i, k)] = bump(lambda, c1, w1) + mix * bump(lambda, c2, w2) + 0.02;
        }
        let peak = a.column(k).max();
        a.column_mut(k).unscale_mut(peak);
    }

    let field = |rng: &mut ChaCha8Rng, blobs: usize| -> Vec<(f64, f64, f64, f64)> {
        (0..blobs)
            .map(|_| {
                (
                    rng.random_range(0.0..1.0),
                    rng.random_range(0.0..1.0),
                    rng.random_range(0.15..0.45),
                    rng.random_range(0.3..1.0),
                )
            })
            .collect()
    };
    let eval = |blobs: &[(f64, f64, f64, f64)], y: f64, x: f64| -> f64 {
        blobs
            .iter()
            .map(|&(cy, cx, s, amp)| {
                amp * (-((y - cy).powi(2) + (x - cx).powi(2)) / (2.0 * s * s)).exp()
            })
            .sum()
    };
    let abundance: Vec<_> = (0..rank).map(|_| field(&mut rng, 3)).collect();
    let brightness = field(&mut rng, 2);

    let coord = |i: usize, len: usize| {
        if len > 1 {
            i as f64 / (len - 1) as f64
        } else {
            0.5
        }
    };
    let mut c = DMatrix::zeros(rank, h * w);
    for p in 0..h * w {
        let (y, x) = (coord(p / w, h), coord(p % w, w));
        let mut total = 0.0;
        for (k, blobs) in abundance.iter().enumerate() {
            let v = eval(blobs, y, x) + 0.05;
            c[(k, p)] = v;
            total += v;
        }
        let bright = eval(&brightness, y, x);
        let bright = 0.5 + 0.5 * bright / (1.0 + bright);
        c.column_mut(p).scale_mut(bright / total);
    }

    let mut y = (a * c) * 0.9;
    if noise_sigma > 0.0 {
        let normal = Normal::new(0.0, noise_sigma)
            .map_err(|e| Error::InvalidArgument(format!("noise sigma: {e}")))?;
        for v in y.iter_mut() {
            *v = (*v + normal.sample(&mut rng)).clamp(0.0, 1.0);
        }
    } else {
        y.apply(|v| *v = v.clamp(0.0, 1.0));
    }
    SpectralCube::new(y, h, w)
}

/// Three Gaussian channel responses (R at 650 nm, G at 550 nm, B at 450 nm,
/// 50 nm width) sampled on the 400–700 nm grid and scaled to peak 1.
pub fn synth_css(bands: usize) -> Result<Sensitivity> {
    if bands < 3 {
        return Err(Error::InvalidArgument(format!(
            "synth_css needs >= 3 bands, got {bands}"
        )));
    }
    let grid = wavelength_grid(bands);
    let mut s = DMatrix::zeros(3, bands);
    for (c, center) in [650.0, 550.0, 450.0].into_iter().enumerate() {
        for (i, &lambda) in grid.iter().enumerate() {
            s[(c, i)] = bump(lambda, center, 50.0);
        }
        let peak = s.row(c).max();
        s.row_mut(c).unscale_mut(peak);
    }
    Sensitivity::new(s, grid)
}

/// Seeded `d×n` test matrix `G₁G₂ + E` with Gaussian factors of inner
/// dimension `rank`. With `snr_db`, `E` is Gaussian noise scaled so that
/// `‖G₁G₂‖_F / ‖E‖_F = 10^(snr_db/20)`; otherwise `E = 0`.
pub fn low_rank_matrix(
    d: usize,
    n: usize,
    rank: usize,
    snr_db: Option<f64>,
    seed: u64,
) -> Result<DMatrix<f64>> {
    if d == 0 || n == 0 || rank == 0 || rank > d.min(n) {
        return Err(Error::InvalidArgument(format!(
            "low_rank_matrix needs 1 <= rank <= min(d, n); got d={d}, n={n}, rank={rank}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gaussian = |r: usize, c: usize| -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(&mut rng))
    };
    let g1 = gaussian(d, rank);
    let g2 = gaussian(rank, n);
    let clean = g1 * g2;
    match snr_db {
        None => Ok(clean),
        Some(snr) if snr.is_finite() => {
            let noise = gaussian(d, n);
            let scale = clean.norm() / (noise.norm() * 10f64.powf(snr / 20.0));
            Ok(clean + noise * scale)
        }
        Some(snr) => Err(Error::InvalidArgument(format!(
            "snr must be finite, got {snr}"
        ))),
    }
}

/// `X = make_phi(s, ell) · Y`; the same code path as [`apply_phi`].
pub fn render_rgb(y: &SpectralCube, s: &Sensitivity, ell: &Illuminant) -> Result<RgbImage> {
    apply_phi(&make_phi(s, ell)?, y)
}

/// Writes `bytes` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Serializes a cube to the `HSC1` byte layout. Values are stored as `f32`.
pub fn encode_cube(y: &SpectralCube) -> Result<Vec<u8>> {
    let dim = |v: usize| {
        u32::try_from(v).map_err(|_| Error::InvalidArgument(format!("dimension {v} exceeds u32")))
    };
    let (b, h, w) = (dim(y.bands())?, dim(y.height())?, dim(y.width())?);
    let mut out = Vec::with_capacity(HEADER_LEN as usize + 4 * y.data().len());
    out.extend_from_slice(&CUBE_MAGIC);
    for d in [b, h, w] {
        out.extend_from_slice(&d.to_le_bytes());
    }
    let data = y.data();
    for band in 0..y.bands() {
        for p in 0..y.pixels() {
            let v = data[(band, p)] as f32;
            if !v.is_finite() {
                return Err(Error::NonFinite("cube value out of f32 range"));
            }
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

/// Parses the `HSC1` byte layout, validating magic and payload length.
pub fn decode_cube(bytes: &[u8]) -> Result<SpectralCube> {
    let actual = bytes.len() as u64;
    if bytes.len() < 4 {
        return Err(Error::Truncated {
            expected: HEADER_LEN,
            actual,
        });
    }
    let found: [u8; 4] = bytes[..4].try_into().expect("length checked");
    if found != CUBE_MAGIC {
        return Err(Error::BadMagic { found });
    }
    if actual < HEADER_LEN {
        return Err(Error::Truncated {
            expected: HEADER_LEN,
            actual,
        });
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("length checked"));
    let (b, h, w) = (word(4), word(8), word(12));
    let expected = (b as u64)
        .checked_mul(h as u64)
        .and_then(|v| v.checked_mul(w as u64))
        .and_then(|v| v.checked_mul(4))
        .and_then(|v| v.checked_add(HEADER_LEN))
        .filter(|&v| usize::try_from(v).is_ok())
        .ok_or(Error::DimensionOverflow { b, h, w })?;
    if actual < expected {
        return Err(Error::Truncated { expected, actual });
    }
    if actual > expected {
        return Err(Error::TrailingBytes {
            extra: actual - expected,
        });
    }
    let (b, n) = (b as usize, h as usize * w as usize);
    let payload = &bytes[HEADER_LEN as usize..];
    let value = |band: usize, p: usize| {
        let i = 4 * (band * n + p);
        f32::from_le_bytes(payload[i..i + 4].try_into().expect("length checked")) as f64
    };
    SpectralCube::new(DMatrix::from_fn(b, n, value), h as usize, w as usize)
}

pub fn write_cube(path: impl AsRef<Path>, y: &SpectralCube) -> Result<()> {
    write_atomic(path.as_ref(), &encode_cube(y)?)
}

pub fn read_cube(path: impl AsRef<Path>) -> Result<SpectralCube> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_cube(&bytes)
}

pub fn write_rgb(path: impl AsRef<Path>, x: &RgbImage) -> Result<()> {
    write_cube(path, &x.to_cube())
}

pub fn read_rgb(path: impl AsRef<Path>) -> Result<RgbImage> {
    RgbImage::from_cube(read_cube(path)?)
}

fn csv_error(path: &Path, message: impl ToString) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

fn parse_field(path: &Path, line: usize, field: &str) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| csv_error(path, format!("line {line}: not a number: {field:?}")))?;
    if !v.is_finite() {
        return Err(csv_error(path, format!("line {line}: non-finite value")));
    }
    Ok(v)
}

/// Reads a spectra table `wavelength_nm,v1[,v2,...]`. Returns the wavelength
/// column and one vector per value column.
fn read_spectra(path: &Path, columns: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => csv_error(path, format!("{other:?}")),
        })?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if headers.len() != columns + 1 || &headers[0] != "wavelength_nm" {
        return Err(csv_error(
            path,
            format!(
                "expected header wavelength_nm plus {columns} value column(s), got {:?}",
                headers.iter().collect::<Vec<_>>()
            ),
        ));
    }
    let mut wavelengths = Vec::new();
    let mut values = vec![Vec::new(); columns];
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| csv_error(path, e))?;
        if record.len() != columns + 1 {
            return Err(csv_error(
                path,
                format!("line {line}: expected {} fields", columns + 1),
            ));
        }
        wavelengths.push(parse_field(path, line, &record[0])?);
        for (c, col) in values.iter_mut().enumerate() {
            col.push(parse_field(path, line, &record[c + 1])?);
        }
    }
    if wavelengths.is_empty() {
        return Err(csv_error(path, "no data rows"));
    }
    if let Some(i) = wavelengths.windows(2).position(|p| p[1] <= p[0]) {
        return Err(csv_error(
            path,
            format!("line {}: wavelengths not strictly increasing", i + 3),
        ));
    }
    Ok((wavelengths, values))
}

fn write_spectra(
    path: &Path,
    names: &[&str],
    wavelengths: &[f64],
    columns: &[Vec<f64>],
) -> Result<()> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["wavelength_nm"];
    header.extend_from_slice(names);
    writer
        .write_record(&header)
        .map_err(|e| csv_error(path, e))?;
    for (i, wl) in wavelengths.iter().enumerate() {
        let mut row = vec![wl.to_string()];
        row.extend(columns.iter().map(|c| c[i].to_string()));
        writer.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    let bytes = writer.into_inner().map_err(|e| csv_error(path, e))?;
    write_atomic(path, &bytes)
}

pub fn read_sensitivity_csv(path: impl AsRef<Path>) -> Result<Sensitivity> {
    let path = path.as_ref();
    let (wl, cols) = read_spectra(path, 3)?;
    let b = wl.len();
    let m = DMatrix::from_fn(3, b, |c, i| cols[c][i]);
    Sensitivity::new(m, wl)
}

pub fn write_sensitivity_csv(path: impl AsRef<Path>, s: &Sensitivity) -> Result<()> {
    let cols: Vec<Vec<f64>> = s
        .matrix()
        .row_iter()
        .map(|r| r.iter().copied().collect())
        .collect();
    write_spectra(path.as_ref(), &["r", "g", "b"], s.wavelengths(), &cols)
}

pub fn read_illuminant_csv(path: impl AsRef<Path>) -> Result<Illuminant> {
    let (wl, mut cols) = read_spectra(path.as_ref(), 1)?;
    Illuminant::new(cols.remove(0), wl)
}

pub fn write_illuminant_csv(path: impl AsRef<Path>, ell: &Illuminant) -> Result<()> {
    write_spectra(
        path.as_ref(),
        &["power"],
        ell.wavelengths(),
        &[ell.spectrum().to_vec()],
    )
}

/// Reads `Φ` as a headerless CSV of 3 rows by `B` columns.
pub fn read_phi_csv(path: impl AsRef<Path>) -> Result<ForwardOperator> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => csv_error(path, format!("{other:?}")),
        })?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let row = record
            .iter()
            .map(|f| parse_field(path, i + 1, f))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.len() != 3 {
        return Err(csv_error(
            path,
            format!("expected 3 rows, found {}", rows.len()),
        ));
    }
    let b = rows[0].len();
    if b == 0 {
        return Err(csv_error(path, "empty rows"));
    }
    let phi = DMatrix::from_fn(3, b, |c, i| rows[c][i]);
    ForwardOperator::from_matrix(phi)
}

/// Writes `Φ` as a headerless 3-row CSV. Values use the shortest decimal
/// form that round-trips exactly.
pub fn write_phi_csv(path: impl AsRef<Path>, op: &ForwardOperator) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    for row in op.matrix().row_iter() {
        let fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writer
            .write_record(&fields)
            .map_err(|e| csv_error(path, e))?;
    }
    let bytes = writer.into_inner().map_err(|e| csv_error(path, e))?;
    write_atomic(path, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::sam;
    use crate::svt::numerical_rank;

    fn spec(rank: usize, noise: f64, seed: u64) -> SceneSpec {
        SceneSpec {
            bands: 16,
            height: 12,
            width: 10,
            rank,
            noise_sigma: noise,
            seed,
        }
    }

    #[test]
    fn grid_spans_visible_range() {
        let g = wavelength_grid(31);
        assert_eq!(g[0], 400.0);
        assert_eq!(g[30], 700.0);
        assert!((g[1] - 410.0).abs() <= 1e-12);
    }

    #[test]
    fn rank_one_scene_has_one_signature() {
        let y = synth_scene(&spec(1, 0.0, 3)).unwrap();
        let first = y.data().column(0).into_owned();
        let first_cube =
            SpectralCube::new(DMatrix::from_column_slice(16, 1, first.as_slice()), 1, 1).unwrap();
        for p in 0..y.pixels() {
            let px = SpectralCube::new(y.data().columns(p, 1).into_owned(), 1, 1).unwrap();
            assert!(sam(&px, &first_cube).unwrap().mean_deg <= 1e-6);
        }
        let ref_cube =
            SpectralCube::new(DMatrix::from_fn(16, 120, |i, _| first[i]), 12, 10).unwrap();
        assert!(sam(&y, &ref_cube).unwrap().mean_deg <= 1e-6);
    }

    #[test]
    fn noiseless_scene_is_low_rank_and_bounded() {
        for rank in 1..=6 {
            let y = synth_scene(&spec(rank, 0.0, 10 + rank as u64)).unwrap();
            assert!(numerical_rank(y.data()) <= rank);
            assert!(y.data().iter().all(|&v| (0.0..=0.9 + 1e-12).contains(&v)));
        }
    }

    #[test]
    fn noisy_scene_is_clamped() {
        let y = synth_scene(&spec(3, 0.5, 4)).unwrap();
        assert!(y.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert!(y.data().iter().any(|&v| v == 0.0 || v == 1.0));
    }

    #[test]
    fn scene_is_deterministic() {
        let a = synth_scene(&spec(4, 0.01, 9)).unwrap();
        let b = synth_scene(&spec(4, 0.01, 9)).unwrap();
        assert_eq!(a, b);
        let c = synth_scene(&spec(4, 0.01, 10)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn scene_spec_validation() {
        assert!(synth_scene(&spec(0, 0.0, 1)).is_err());
        assert!(synth_scene(&spec(17, 0.0, 1)).is_err());
        assert!(synth_scene(&spec(2, -0.1, 1)).is_err());
    }

    #[test]
    fn css_shape() {
        let s = synth_css(31).unwrap();
        let mut argmax = Vec::new();
        for row in s.matrix().row_iter() {
            assert!((row.max() - 1.0).abs() <= 1e-15);
            let m = row
                .iter()
                .cloned()
                .enumerate()
                .fold((0, f64::MIN), |a, (i, v)| if v > a.1 { (i, v) } else { a })
                .0;
            for i in 1..31 {
                if i <= m {
                    assert!(row[i] >= row[i - 1]);
                } else {
                    assert!(row[i] <= row[i - 1]);
                }
            }
            argmax.push(m);
        }
        assert_eq!(argmax, vec![25, 15, 5]);
        assert!(synth_css(3).is_ok());
        assert!(synth_css(2).is_err());
    }

    #[test]
    fn render_matches_forward_model() {
        let y = synth_scene(&spec(3, 0.0, 5)).unwrap();
        let s = synth_css(16).unwrap();
        let ell = Illuminant::new(
            (0..16).map(|i| 0.5 + i as f64 / 16.0).collect(),
            wavelength_grid(16),
        )
        .unwrap();
        let x = render_rgb(&y, &s, &ell).unwrap();
        assert_eq!(x, apply_phi(&make_phi(&s, &ell).unwrap(), &y).unwrap());

        let dark = Illuminant::dark(wavelength_grid(16)).unwrap();
        assert!(render_rgb(&y, &s, &dark)
            .unwrap()
            .data()
            .iter()
            .all(|&v| v == 0.0));

        let doubled = render_rgb(&y, &s, &ell.scaled(2.0).unwrap()).unwrap();
        assert!((doubled.data() - x.data() * 2.0).norm() <= 1e-12 * x.data().norm());
    }

    #[test]
    fn low_rank_matrix_rank_and_snr() {
        let m = low_rank_matrix(20, 30, 4, None, 1).unwrap();
        assert_eq!(numerical_rank(&m), 4);
        let clean = low_rank_matrix(20, 30, 4, None, 2).unwrap();
        let noisy = low_rank_matrix(20, 30, 4, Some(40.0), 2).unwrap();
        let snr = 20.0 * (clean.norm() / (&noisy - &clean).norm()).log10();
        assert!((snr - 40.0).abs() <= 1e-9);
        assert_eq!(noisy, low_rank_matrix(20, 30, 4, Some(40.0), 2).unwrap());
        assert!(low_rank_matrix(3, 30, 4, None, 2).is_err());
    }

    fn f32_cube(seed: u64) -> SpectralCube {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SpectralCube::new(
            DMatrix::from_fn(5, 12, |_, _| rng.random_range(-2.0f32..2.0) as f64),
            3,
            4,
        )
        .unwrap()
    }

    #[test]
    fn cube_roundtrip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.hsc");
        let y = f32_cube(1);
        write_cube(&path, &y).unwrap();
        let back = read_cube(&path).unwrap();
        assert_eq!((back.bands(), back.height(), back.width()), (5, 3, 4));
        for (a, b) in y.data().iter().zip(back.data().iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(fs::read(&path).unwrap().len(), 16 + 4 * 60);
    }

    #[test]
    fn cube_layout_is_band_major_row_major() {
        let y =
            SpectralCube::new(DMatrix::from_fn(2, 6, |b, p| (10 * b + p) as f64), 2, 3).unwrap();
        let bytes = encode_cube(&y).unwrap();
        assert_eq!(&bytes[..4], b"HSC1");
        assert_eq!(&bytes[4..16], &[2, 0, 0, 0, 2, 0, 0, 0, 3, 0, 0, 0]);
        let vals: Vec<f32> = bytes[16..]
            .chunks(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        assert_eq!(
            vals,
            vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 10.0, 11.0, 12.0, 13.0, 14.0, 15.0]
        );
    }

    #[test]
    fn cube_decode_errors() {
        let good = encode_cube(&f32_cube(2)).unwrap();

        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(decode_cube(&bad), Err(Error::BadMagic { found }) if &found == b"XSC1"));

        let cut = &good[..good.len() - 7];
        match decode_cube(cut) {
            Err(Error::Truncated { expected, actual }) => {
                assert_eq!(expected, good.len() as u64);
                assert_eq!(actual, cut.len() as u64);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            decode_cube(&good[..10]),
            Err(Error::Truncated {
                expected: 16,
                actual: 10
            })
        ));

        let mut long = good.clone();
        long.extend_from_slice(&[0, 0]);
        assert!(matches!(
            decode_cube(&long),
            Err(Error::TrailingBytes { extra: 2 })
        ));

        let mut huge = b"HSC1".to_vec();
        for _ in 0..3 {
            huge.extend_from_slice(&u32::MAX.to_le_bytes());
        }
        let err = decode_cube(&huge).unwrap_err();
        assert!(
            matches!(
                err,
                Error::DimensionOverflow { .. } | Error::Truncated { .. }
            ),
            "{err:?}"
        );
    }

    #[test]
    fn failed_write_leaves_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.hsc");
        let y = SpectralCube::new(DMatrix::from_element(1, 1, 1e300), 1, 1).unwrap();
        assert!(write_cube(&path, &y).is_err());
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn spectra_csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let s = synth_css(8).unwrap();
        let sp = dir.path().join("css.csv");
        write_sensitivity_csv(&sp, &s).unwrap();
        assert_eq!(read_sensitivity_csv(&sp).unwrap(), s);
        let text = fs::read_to_string(&sp).unwrap();
        assert!(text.starts_with("wavelength_nm,r,g,b\n"));

        let ell = Illuminant::new(
            vec![1.0, 0.5, 0.25, 2.0, 1.0, 1.0, 1.0, 3.0],
            wavelength_grid(8),
        )
        .unwrap();
        let lp = dir.path().join("ill.csv");
        write_illuminant_csv(&lp, &ell).unwrap();
        assert_eq!(read_illuminant_csv(&lp).unwrap(), ell);
    }

    #[test]
    fn spectra_csv_rejects_unsorted_wavelengths() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        fs::write(&p, "wavelength_nm,v1\n400,1\n420,1\n410,1\n").unwrap();
        assert!(matches!(read_illuminant_csv(&p), Err(Error::Csv { .. })));
        fs::write(&p, "nm,v1\n400,1\n").unwrap();
        assert!(matches!(read_illuminant_csv(&p), Err(Error::Csv { .. })));
        fs::write(&p, "wavelength_nm,v1\n400,abc\n").unwrap();
        assert!(matches!(read_illuminant_csv(&p), Err(Error::Csv { .. })));
    }

    #[test]
    fn phi_csv_roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let op = ForwardOperator::from_matrix(DMatrix::from_fn(3, 7, |_, _| {
            rng.random_range(-1.0..1.0)
        }))
        .unwrap();
        let p = dir.path().join("phi.csv");
        write_phi_csv(&p, &op).unwrap();
        assert_eq!(read_phi_csv(&p).unwrap().matrix(), op.matrix());
        fs::write(&p, "1,2\n3,4\n").unwrap();
        assert!(matches!(read_phi_csv(&p), Err(Error::Csv { .. })));
        assert!(matches!(
            read_phi_csv(dir.path().join("missing.csv")),
            Err(Error::Io { .. })
        ));
    }
}
