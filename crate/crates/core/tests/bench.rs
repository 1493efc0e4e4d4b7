mod common;

use common::random_image;
use salsa_core::bench::{
    degrade, isnr, run_experiment, synthetic_scene, ExperimentId, ExperimentSpec, StopSpec,
};
use salsa_core::{apply_filter, build_psf, psf_to_otf, BlurKind, BlurParams, ImageBuffer, NoClock, SolverKind};

#[test]
fn noise_has_the_requested_variance() {
    let psf = build_psf(BlurKind::Gaussian, &BlurParams::default_for(BlurKind::Gaussian)).unwrap();
    let x = synthetic_scene(256, 256);
    let y = degrade(&x, &psf, 8.0, 4).unwrap();
    let hx = apply_filter(&psf_to_otf(&psf, (256, 256)).unwrap(), &x).unwrap();
    let n = (256 * 256) as f64;
    let diff: Vec<f64> = y.data().iter().zip(hx.data()).map(|(a, b)| a - b).collect();
    let mean = diff.iter().sum::<f64>() / n;
    let var = diff.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    assert!((var / 8.0 - 1.0).abs() < 0.05, "sample variance {var}");
    assert!(mean.abs() < 0.05);
}

#[test]
fn noiseless_identity_degradation_is_exact() {
    let psf = build_psf(BlurKind::Uniform, &BlurParams { size: 1, sigma: 1.0 }).unwrap();
    let x = random_image(16, 16, 3);
    assert_eq!(degrade(&x, &psf, 0.0, 9).unwrap(), x);
    assert!(degrade(&x, &psf, -1.0, 9).is_err());
}

#[test]
fn degradation_depends_only_on_the_seed() {
    let psf = build_psf(BlurKind::InverseQuadratic, &BlurParams::default_for(BlurKind::InverseQuadratic)).unwrap();
    let x = synthetic_scene(32, 32);
    assert_eq!(degrade(&x, &psf, 2.0, 5).unwrap(), degrade(&x, &psf, 2.0, 5).unwrap());
    assert_ne!(degrade(&x, &psf, 2.0, 5).unwrap(), degrade(&x, &psf, 2.0, 6).unwrap());
}

#[test]
fn isnr_definition() {
    let x = ImageBuffer::zeros(4, 4);
    let y = ImageBuffer::from_fn(4, 4, |_, _| 1.0);
    assert_eq!(isnr(&x, &y, &y).unwrap(), 0.0);
    let tenth = ImageBuffer::from_fn(4, 4, |_, _| 0.1f64.sqrt());
    assert!((isnr(&x, &y, &tenth).unwrap() - 10.0).abs() < 1e-12);
    assert_eq!(isnr(&x, &y, &x).unwrap(), f64::INFINITY);
    assert!(isnr(&x, &y, &ImageBuffer::zeros(2, 2)).is_err());
}

fn small_spec(id: ExperimentId) -> ExperimentSpec {
    ExperimentSpec {
        levels: 2,
        stop: StopSpec::RelTol { rel_tol: 1e-5, max_iters: 60 },
        ..ExperimentSpec::preset(id)
    }
}

#[test]
fn experiments_are_reproducible() {
    let x = synthetic_scene(64, 64);
    let spec = small_spec(ExperimentId::E2B);
    let a = run_experiment(&spec, &x, &NoClock).unwrap();
    let b = run_experiment(&spec, &x, &NoClock).unwrap();
    assert_eq!(a.observation_digest, b.observation_digest);
    assert_eq!(a.problem_digest, b.problem_digest);
    for (ra, rb) in a.runs.iter().zip(&b.runs) {
        assert_eq!(ra.output().unwrap().trace, rb.output().unwrap().trace);
    }
}

#[test]
fn single_solver_report() {
    let spec = ExperimentSpec { solvers: vec![SolverKind::Salsa], ..small_spec(ExperimentId::E1) };
    let report = run_experiment(&spec, &synthetic_scene(32, 32), &NoClock).unwrap();
    assert_eq!(report.runs.len(), 1);
    assert!(report.run(SolverKind::Salsa).is_some());
    assert!(report.all_succeeded());
}

#[test]
fn target_mode_shares_one_target() {
    let spec = ExperimentSpec {
        stop: StopSpec::Target { target: None, reference_rel_tol: 1e-6, reference_max_iters: 15, max_iters: 5000 },
        ..small_spec(ExperimentId::E3A)
    };
    let report = run_experiment(&spec, &synthetic_scene(32, 32), &NoClock).unwrap();
    let target = report.target_objective.unwrap();
    for run in &report.runs {
        assert!(run.time_to(target).is_some(), "{:?}", run.solver);
        assert!(run.output().unwrap().objective <= target);
    }
}

#[test]
fn invalid_specs_are_rejected() {
    let x = synthetic_scene(16, 16);
    let bad = [
        ExperimentSpec { noise_variance: -1.0, ..small_spec(ExperimentId::E1) },
        ExperimentSpec { solvers: vec![], ..small_spec(ExperimentId::E1) },
        ExperimentSpec { solvers: vec![SolverKind::Ist, SolverKind::Ist], ..small_spec(ExperimentId::E1) },
        ExperimentSpec { tau: 0.0, ..small_spec(ExperimentId::E1) },
        ExperimentSpec { levels: 5, ..small_spec(ExperimentId::E1) },
    ];
    for spec in bad {
        assert!(run_experiment(&spec, &x, &NoClock).is_err(), "{spec:?}");
    }
}

#[test]
fn preset_labels_parse() {
    for id in ExperimentId::ALL {
        assert_eq!(id.label().parse::<ExperimentId>().unwrap(), id);
    }
    assert!("4".parse::<ExperimentId>().is_err());
}
