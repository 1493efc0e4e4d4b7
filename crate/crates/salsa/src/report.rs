//! The `report.json` written next to reconstructions and traces.

use std::path::Path;

use salsa_core::bench::{ExperimentReport, MuSetting, StopSpec};
use salsa_core::solver::StopReason;
use salsa_core::{BlurKind, SolverKind};
use serde::Serialize;

pub const REPORT_FILE: &str = "report.json";
pub const OBSERVATION_FILE: &str = "observation.pgm";

pub fn reconstruction_file(solver: SolverKind) -> String {
    format!("{}_reconstruction.pgm", solver.name())
}

pub fn trace_file(solver: SolverKind) -> String {
    format!("{}_trace.csv", solver.name())
}

pub fn blur_name(kind: BlurKind) -> &'static str {
    match kind {
        BlurKind::Uniform => "uniform9",
        BlurKind::Gaussian => "gaussian",
        BlurKind::InverseQuadratic => "invquad",
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub experiment: SpecEcho,
    pub intensity_scale: [f64; 2],
    pub image: ImageInfo,
    pub inputs: Inputs,
    pub target_objective: Option<f64>,
    pub solvers: Vec<SolverSummary>,
    pub all_succeeded: bool,
}

#[derive(Debug, Serialize)]
pub struct SpecEcho {
    pub id: String,
    pub blur: &'static str,
    pub blur_size: usize,
    pub gaussian_sigma: Option<f64>,
    pub noise_variance: f64,
    pub tau: f64,
    pub mu: f64,
    pub mu_auto: bool,
    pub seed: u64,
    pub levels: usize,
    pub penalize_approximation: bool,
    pub solvers: Vec<&'static str>,
    pub stop: StopEcho,
    pub time_limit_s: Option<f64>,
}

#[derive(Debug, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum StopEcho {
    RelTol {
        rel_tol: f64,
        max_iters: usize,
    },
    Target {
        target: Option<f64>,
        reference_rel_tol: f64,
        reference_max_iters: usize,
        max_iters: usize,
    },
}

#[derive(Debug, Serialize)]
pub struct ImageInfo {
    pub height: usize,
    pub width: usize,
    /// Input file, or `None` for the built-in synthetic scene.
    pub source: Option<String>,
    pub observation_file: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct Inputs {
    pub observation_sha256: String,
    pub problem_sha256: String,
}

#[derive(Debug, Serialize)]
pub struct SolverSummary {
    pub solver: &'static str,
    pub status: &'static str,
    pub error: Option<String>,
    pub iterations: Option<usize>,
    pub final_objective: Option<f64>,
    pub elapsed_s: Option<f64>,
    /// Solver seconds until the common target was first reached.
    pub time_to_target_s: Option<f64>,
    pub stop_reason: Option<&'static str>,
    /// `None` when no reference image is known, or when the reconstruction
    /// is exact.
    pub isnr_db: Option<f64>,
    pub splitting_residual: Option<f64>,
    pub reconstruction_file: Option<String>,
    pub trace_file: Option<String>,
}

fn stop_name(reason: StopReason) -> &'static str {
    match reason {
        StopReason::Converged => "converged",
        StopReason::ReachedTarget => "reached_target",
        StopReason::MaxIterations => "max_iterations",
        StopReason::TimeLimit => "time_limit",
    }
}

fn finite(v: Option<f64>) -> Option<f64> {
    v.filter(|x| x.is_finite())
}

impl Report {
    pub fn new(report: &ExperimentReport, source: Option<&Path>, observation_written: bool) -> Self {
        let spec = &report.spec;
        let stop = match spec.stop {
            StopSpec::RelTol { rel_tol, max_iters } => StopEcho::RelTol { rel_tol, max_iters },
            StopSpec::Target {
                target,
                reference_rel_tol,
                reference_max_iters,
                max_iters,
            } => StopEcho::Target {
                target,
                reference_rel_tol,
                reference_max_iters,
                max_iters,
            },
        };
        let experiment = SpecEcho {
            id: spec.id.clone(),
            blur: blur_name(spec.blur),
            blur_size: spec.blur_params.size,
            gaussian_sigma: (spec.blur == BlurKind::Gaussian).then_some(spec.blur_params.sigma),
            noise_variance: spec.noise_variance,
            tau: spec.tau,
            mu: spec.mu(),
            mu_auto: spec.mu == MuSetting::Auto,
            seed: spec.seed,
            levels: spec.levels,
            penalize_approximation: spec.regularizer.penalize_approximation,
            solvers: spec.solvers.iter().map(|s| s.name()).collect(),
            stop,
            time_limit_s: spec.time_limit,
        };
        let solvers = report
            .runs
            .iter()
            .map(|run| match &run.outcome {
                Ok(o) => SolverSummary {
                    solver: run.solver.name(),
                    status: "ok",
                    error: None,
                    iterations: Some(o.iterations),
                    final_objective: Some(o.objective),
                    elapsed_s: Some(o.elapsed_seconds),
                    time_to_target_s: report.target_objective.and_then(|t| run.time_to(t)),
                    stop_reason: Some(stop_name(o.stop_reason)),
                    isnr_db: finite(run.isnr_db),
                    splitting_residual: o.splitting_residual,
                    reconstruction_file: Some(reconstruction_file(run.solver)),
                    trace_file: Some(trace_file(run.solver)),
                },
                Err(e) => SolverSummary {
                    solver: run.solver.name(),
                    status: "failed",
                    error: Some(e.to_string()),
                    iterations: None,
                    final_objective: None,
                    elapsed_s: None,
                    time_to_target_s: None,
                    stop_reason: None,
                    isnr_db: None,
                    splitting_residual: None,
                    reconstruction_file: None,
                    trace_file: None,
                },
            })
            .collect();
        Report {
            experiment,
            intensity_scale: [0.0, 255.0],
            image: ImageInfo {
                height: report.shape.0,
                width: report.shape.1,
                source: source.map(|p| p.display().to_string()),
                observation_file: observation_written.then(|| OBSERVATION_FILE.to_owned()),
            },
            inputs: Inputs {
                observation_sha256: report.observation_digest.clone(),
                problem_sha256: report.problem_digest.clone(),
            },
            target_objective: report.target_objective,
            solvers,
            all_succeeded: report.all_succeeded(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
