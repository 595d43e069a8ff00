use hsrecon::lrsp::lrsp_apply;
use hsrecon::metrics::{mse, mse_map, psnr, sam};
use hsrecon::svt::numerical_rank;
use hsrecon::{
    apply_phi, apply_phi_adjoint, svt_full, ForwardOperator, LrspConfig, LrspState, RgbImage,
    ShrinkageThreshold, SpectralCube,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0f64..1.0, rows * cols)
        .prop_map(move |v| DMatrix::from_vec(rows, cols, v))
}

fn dims() -> impl Strategy<Value = (usize, usize, usize)> {
    (1usize..12, 1usize..6, 1usize..6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adjoint_identity((b, h, w) in dims(), seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut gen = |r: usize, c: usize| DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0));
        let op = ForwardOperator::from_matrix(gen(3, b)).unwrap();
        let y = SpectralCube::new(gen(b, h * w), h, w).unwrap();
        let x = RgbImage::new(gen(3, h * w), h, w).unwrap();
        let lhs = apply_phi(&op, &y).unwrap().data().dot(x.data());
        let rhs = y.data().dot(apply_phi_adjoint(&op, &x).unwrap().data());
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (y.data().norm() * x.data().norm() + 1.0));
    }

    #[test]
    fn svt_shrinks_nuclear_structure(m in matrix(5, 7), t in 0.0f64..2.0) {
        let theta = ShrinkageThreshold::new(t).unwrap();
        let z = svt_full(&m, theta).unwrap();
        prop_assert!(z.norm() <= m.norm() + 1e-12);
        prop_assert!(numerical_rank(&z) <= numerical_rank(&m));
        let sv_m = m.clone().singular_values();
        let sv_z = z.clone().singular_values();
        let mut a: Vec<f64> = sv_m.iter().map(|s| (s - t).max(0.0)).collect();
        let mut b: Vec<f64> = sv_z.iter().copied().collect();
        a.sort_by(|x, y| y.total_cmp(x));
        b.sort_by(|x, y| y.total_cmp(x));
        for (p, q) in a.iter().zip(&b) {
            prop_assert!((p - q).abs() <= 1e-10);
        }
    }

    #[test]
    fn lrsp_output_rank_and_determinism(m in matrix(6, 20), seed in any::<u64>(), r in 1usize..6) {
        let config = LrspConfig { rank: r, kappa: 10, seed, ..LrspConfig::default() };
        let state = LrspState::initial(&config);
        let (a, sa, _) = lrsp_apply(&m, &config, &state).unwrap();
        let (b, sb, _) = lrsp_apply(&m, &config, &state).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(sa, sb);
        prop_assert!(a.iter().all(|v| v.is_finite()));
        prop_assert!(numerical_rank(&a) <= r * config.inner_steps);
    }

    #[test]
    fn lrsp_exact_regime(m in matrix(4, 9), t in 0.0f64..1.5) {
        let theta = ShrinkageThreshold::new(t).unwrap();
        let config = LrspConfig::exact(4, 9, theta);
        let (z, _, _) = lrsp_apply(&m, &config, &LrspState::initial(&config)).unwrap();
        let reference = svt_full(&m, theta).unwrap();
        prop_assert!((z - &reference).norm() <= 1e-8 * reference.norm().max(1e-300) + 1e-12);
    }

    #[test]
    fn metric_identities(a in matrix(4, 12), scale in 0.1f64..10.0) {
        let a = SpectralCube::new(a.map(|v| v.abs() + 0.01), 3, 4).unwrap();
        let scaled = SpectralCube::new(a.data() * scale, 3, 4).unwrap();
        prop_assert!(sam(&a, &scaled).unwrap().mean_deg <= 1e-6);
        prop_assert_eq!(psnr(&a, &a, 1.0).unwrap(), f64::INFINITY);
        let map = mse_map(&a, &scaled).unwrap();
        prop_assert!((map.mean() - mse(&a, &scaled).unwrap()).abs() <= 1e-12);
    }
}
