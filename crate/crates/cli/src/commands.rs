use std::time::Instant;

use hsrecon::data_io::{read_sensitivity_csv, write_atomic, write_illuminant_csv};
use hsrecon::metrics::{evaluate, mse_map_cube};
use hsrecon::svt::range_finder_svt;
use hsrecon::{
    estimate_illuminant, estimate_phi_ls, low_rank_matrix, lrsp_apply, make_phi, read_cube,
    read_phi_csv, read_rgb, svt_full, synth_css, synth_scene, wavelength_grid, write_cube,
    write_phi_csv, write_rgb, Error, ForwardOperator, Illuminant, LrspConfig, LrspState,
    ProximalMode, Result, SceneSpec, ShrinkageThreshold, SolverConfig, StepSize, ThresholdRule,
    OPEN_GATE_BETA,
};

use crate::args::{AutoOr, CalibrateArgs, MetricsArgs, ReconstructArgs, SvtBenchArgs, SynthArgs};

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn csv_bytes(write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Vec<u8> {
    let mut out = Vec::new();
    write(&mut out).expect("writing to a Vec cannot fail");
    out
}

pub fn synth(args: &SynthArgs) -> Result<()> {
    let spec = SceneSpec {
        bands: args.bands,
        height: args.size,
        width: args.size,
        rank: args.rank,
        noise_sigma: args.noise,
        seed: args.seed,
    };
    let scene = synth_scene(&spec)?;
    let rendered = if args.rgb_out.is_some() || args.phi_out.is_some() {
        let phi = make_phi(
            &synth_css(args.bands)?,
            &Illuminant::flat(wavelength_grid(args.bands))?,
        )?;
        let rgb = hsrecon::apply_phi(&phi, &scene)?;
        Some((phi, rgb))
    } else {
        None
    };

    write_cube(&args.out, &scene)?;
    if let Some((phi, rgb)) = &rendered {
        if let Some(path) = &args.rgb_out {
            write_rgb(path, rgb)?;
        }
        if let Some(path) = &args.phi_out {
            write_phi_csv(path, phi)?;
        }
    }
    Ok(())
}

pub fn calibrate(args: &CalibrateArgs) -> Result<()> {
    let rgb = read_rgb(&args.rgb)?;
    let cube = read_cube(&args.cube)?;
    let phi = estimate_phi_ls(&rgb, &cube, args.ridge)?;
    let negative = phi.negative_entries();
    if negative > 0 {
        eprintln!("warning: estimated operator has {negative} negative entries");
    }
    let illuminant = match &args.css {
        Some(path) => Some(estimate_illuminant(&read_sensitivity_csv(path)?, &phi)?),
        None => None,
    };

    write_phi_csv(&args.out_phi, &phi)?;
    if let (Some(path), Some(ell)) = (&args.out_illuminant, &illuminant) {
        write_illuminant_csv(path, ell)?;
    }
    Ok(())
}

fn load_operator(args: &ReconstructArgs) -> Result<ForwardOperator> {
    match (&args.phi, &args.calibrate_from) {
        (Some(path), None) => read_phi_csv(path),
        (None, Some(pair)) => {
            let rgb = read_rgb(&pair[0])?;
            let cube = read_cube(&pair[1])?;
            estimate_phi_ls(&rgb, &cube, args.ridge)
        }
        _ => Err(usage(
            "exactly one of --phi and --calibrate-from is required",
        )),
    }
}

pub fn solver_config(args: &ReconstructArgs) -> Result<SolverConfig> {
    let step = match args.eta {
        AutoOr::Auto => StepSize::Auto,
        AutoOr::Value(v) => StepSize::Fixed(vec![v]),
    };
    let (threshold, theta) = match args.theta {
        AutoOr::Auto => (ThresholdRule::LambdaEta, ShrinkageThreshold::ZERO),
        AutoOr::Value(v) => (ThresholdRule::Fixed, ShrinkageThreshold::new(v)?),
    };
    if args.exact && threshold == ThresholdRule::Fixed {
        return Err(usage("--exact uses theta = lambda * eta; drop --theta"));
    }
    let proximal = if args.exact {
        ProximalMode::Exact
    } else {
        ProximalMode::Subspace(LrspConfig {
            rank: args.rank,
            kappa: args.kappa,
            probes: args.probes,
            inner_steps: args.inner_steps,
            seed: args.seed,
            theta,
            ..LrspConfig::default()
        })
    };
    Ok(SolverConfig {
        stages: args.stages,
        step,
        lambda: args.lambda,
        transform: args.transform,
        proximal,
        threshold,
        init: args.init,
        ..SolverConfig::default()
    })
}

pub fn reconstruct(args: &ReconstructArgs) -> Result<()> {
    let config = solver_config(args)?;
    let reference = match &args.reference {
        Some(path) => Some(read_cube(path)?),
        None => None,
    };
    let rgb = read_rgb(&args.rgb)?;
    let phi = load_operator(args)?;

    let (estimate, report) = hsrecon::unfold_solve(&rgb, &phi, &config)?;

    let mse_map = match (&args.mse_map, &reference) {
        (Some(_), Some(truth)) => Some(mse_map_cube(truth, &estimate)?),
        _ => None,
    };
    let report_csv = csv_bytes(|out| report.write_csv(out));
    let diagnostics_csv = args
        .diagnostics
        .as_ref()
        .map(|_| csv_bytes(|out| report.write_diagnostics(out)));

    write_cube(&args.out, &estimate)?;
    write_atomic(&args.report, &report_csv)?;
    if let (Some(path), Some(map)) = (&args.mse_map, &mse_map) {
        write_cube(path, map)?;
    }
    if let (Some(path), Some(bytes)) = (&args.diagnostics, &diagnostics_csv) {
        write_atomic(path, bytes)?;
    }
    Ok(())
}

fn elapsed_ns(start: Instant) -> u128 {
    start.elapsed().as_nanos()
}

pub const BENCH_HEADER: &str = "method,d,n,r,seed,elapsed_ns,rel_err";

pub fn svt_bench(args: &SvtBenchArgs) -> Result<()> {
    if args.seeds == 0 {
        return Err(usage("--seeds must be >= 1"));
    }
    let theta = ShrinkageThreshold::new(args.theta)?;
    let kappa = args.kappa.unwrap_or(args.n.min(64));
    let (d, n, r) = (args.d, args.n, args.r);

    let mut out = String::from(BENCH_HEADER);
    out.push('\n');
    for seed in 0..args.seeds {
        let m = low_rank_matrix(d, n, r, Some(args.snr), seed)?;

        let start = Instant::now();
        let full = svt_full(&m, theta)?;
        let t_full = elapsed_ns(start);
        let scale = full.norm().max(f64::MIN_POSITIVE);

        let config = LrspConfig {
            rank: r,
            kappa,
            theta,
            seed,
            beta1: OPEN_GATE_BETA,
            ..LrspConfig::default()
        };
        config.validate(d, n)?;
        let state = LrspState::initial(&config);
        let start = Instant::now();
        let (approx, _, _) = lrsp_apply(&m, &config, &state)?;
        let t_lrsp = elapsed_ns(start);

        let start = Instant::now();
        let rf = range_finder_svt(&m, r, theta, seed)?;
        let t_rf = elapsed_ns(start);

        for (method, t, err) in [
            ("full_svt", t_full, 0.0),
            ("lrsp", t_lrsp, (&approx - &full).norm() / scale),
            ("range_finder", t_rf, (&rf - &full).norm() / scale),
        ] {
            out.push_str(&format!("{method},{d},{n},{r},{seed},{t},{err}\n"));
        }
    }
    write_atomic(&args.out, out.as_bytes())
}

pub fn metrics(args: &MetricsArgs) -> Result<()> {
    let reference = read_cube(&args.reference)?;
    let test = read_cube(&args.test)?;
    let phi = args.phi.as_deref().map(read_phi_csv).transpose()?;
    let report = evaluate(&reference, &test, phi.as_ref())?;
    write_atomic(&args.out, &csv_bytes(|out| report.write_csv(out)))
}
