//! Shared fixtures for the criterion benches.

use hsrecon::{
    apply_phi, low_rank_matrix, make_phi, synth_css, synth_scene, wavelength_grid, ForwardOperator,
    Illuminant, LrspConfig, RgbImage, SceneSpec, ShrinkageThreshold,
};
use nalgebra::DMatrix;

/// Column counts of the proximal scaling grid.
pub const N_GRID: [usize; 4] = [256, 1024, 4096, 16384];

/// Rank-8 plus 40 dB noise, 64 rows.
pub fn proximal_input(n: usize) -> DMatrix<f64> {
    low_rank_matrix(64, n, 8, Some(40.0), n as u64).expect("valid sizes")
}

pub fn proximal_config() -> LrspConfig {
    LrspConfig {
        rank: 8,
        kappa: 64,
        theta: ShrinkageThreshold::new(0.5).expect("constant"),
        seed: 1,
        ..LrspConfig::default()
    }
}

/// A noiseless rank-4 scene rendered through the synthetic camera.
pub fn solver_problem(bands: usize, size: usize) -> (RgbImage, ForwardOperator) {
    let scene = synth_scene(&SceneSpec {
        bands,
        height: size,
        width: size,
        rank: 4,
        noise_sigma: 0.0,
        seed: 7,
    })
    .expect("valid scene");
    let phi = make_phi(
        &synth_css(bands).expect("bands >= 3"),
        &Illuminant::flat(wavelength_grid(bands)).expect("nonempty grid"),
    )
    .expect("matching grids");
    let rgb = apply_phi(&phi, &scene).expect("matching bands");
    (rgb, phi)
}
