//! Hyperspectral reconstruction from RGB with a low-rank subspace proximal.
//!
//! The observation model is `X = ΦY` with `Φ = S · Diag(ℓ)` (3×B). The solver
//! unrolls a fixed number of proximal-gradient stages on
//! `½‖ΦY − X‖²_F + λ‖𝒯(Y)‖∗`, where the nuclear-norm proximal is the LRSP
//! operator: a randomized subspace approximation to singular-value
//! thresholding that is exact for `κ = n`, `r = d` and an open gate.
//!
//! ```
//! use hsrecon::{synth_css, synth_scene, unfold_solve, make_phi, apply_phi, Illuminant};
//! use hsrecon::{SceneSpec, SolverConfig, TransformKind, wavelength_grid};
//!
//! let scene = synth_scene(&SceneSpec {
//!     bands: 8, height: 12, width: 12, rank: 2, noise_sigma: 0.0, seed: 1,
//! })?;
//! let css = synth_css(8)?;
//! let phi = make_phi(&css, &Illuminant::flat(wavelength_grid(8))?)?;
//! let rgb = apply_phi(&phi, &scene)?;
//! let (estimate, report) = unfold_solve(&rgb, &phi, &SolverConfig::exact(5, 1e-3, TransformKind::SpectralDct))?;
//! assert_eq!(estimate.bands(), 8);
//! assert_eq!(report.stages(), 5);
//! # Ok::<(), hsrecon::Error>(())
//! ```

pub mod cube;
pub mod data_io;
pub mod error;
pub mod forward_model;
pub mod lrsp;
pub mod metrics;
pub mod solver;
pub mod svt;
pub mod transform;

pub use cube::{RgbImage, SpectralCube};
pub use data_io::{
    low_rank_matrix, read_cube, read_phi_csv, read_rgb, render_rgb, synth_css, synth_scene,
    wavelength_grid, write_cube, write_phi_csv, write_rgb, SceneSpec,
};
pub use error::{Error, ErrorClass, Result};
pub use forward_model::{
    apply_phi, apply_phi_adjoint, estimate_illuminant, estimate_phi_ls, make_phi, spectral_norm_sq,
    ForwardOperator, Illuminant, Sensitivity,
};
pub use lrsp::{lrsp_apply, LrspConfig, LrspDiagnostics, LrspState, OPEN_GATE_BETA};
pub use metrics::{MetricReport, SpectralAngle};
pub use solver::{
    unfold_solve, InitMode, ProximalMode, SolveReport, SolverConfig, StepSize, ThresholdRule,
};
pub use svt::{nuclear_norm, svt_full, ShrinkageThreshold};
pub use transform::{SpectralTransform, TransformKind};
