//! Benchmark harness for the five classic deblurring experiments.
//!
//! | id | blur                       | σ²     |
//! |----|----------------------------|--------|
//! | 1  | 9×9 uniform                | 0.56²  |
//! | 2A | Gaussian                   | 2      |
//! | 2B | Gaussian                   | 8      |
//! | 3A | `1/(1 + i² + j²)`, 15×15   | 2      |
//! | 3B | `1/(1 + i² + j²)`, 15×15   | 8      |
//!
//! Intensities live in `[0, 255]`. Noise is drawn from ChaCha20 seeded
//! through `SeedableRng::seed_from_u64`, with a Box–Muller transform using
//! both outputs of each pair, so a seed fixes the observation bit for bit on
//! every platform.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;
use core::str::FromStr;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::convolution::{apply_filter, build_psf, psf_to_otf, BlurKind, BlurParams, Psf};
use crate::error::{Error, Result};
use crate::frame::FrameSpec;
use crate::image::ImageBuffer;
use crate::prox::Regularizer;
use crate::solver::{solve, Clock, Problem, SolverConfig, SolverKind, SolverOutput};

/// Standard normal deviates from a seeded ChaCha20 stream.
#[derive(Debug, Clone)]
pub struct GaussianNoise {
    rng: ChaCha20Rng,
    spare: Option<f64>,
}

impl GaussianNoise {
    pub fn new(seed: u64) -> Self {
        GaussianNoise {
            rng: ChaCha20Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    // 53 random mantissa bits
    fn unit(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_standard(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // u1 in (0, 1] keeps the log finite
        let u1 = 1.0 - self.unit();
        let u2 = self.unit();
        let radius = libm::sqrt(-2.0 * libm::log(u1));
        let angle = 2.0 * core::f64::consts::PI * u2;
        self.spare = Some(radius * libm::sin(angle));
        radius * libm::cos(angle)
    }
}

/// `y = H x + w` with `w ~ N(0, noise_variance)` i.i.d., `H` periodic.
pub fn degrade(x: &ImageBuffer, blur: &Psf, noise_variance: f64, seed: u64) -> Result<ImageBuffer> {
    if !(noise_variance >= 0.0 && noise_variance.is_finite()) {
        return Err(Error::invalid(format!(
            "noise variance must be nonnegative, got {noise_variance}"
        )));
    }
    let mut y = if blur.support() == (1, 1) {
        // skip the FFT round trip so a unit kernel is exact
        let gain = blur.taps()[0];
        ImageBuffer::from_fn(x.height(), x.width(), |r, c| gain * x.get(r, c))
    } else {
        apply_filter(&psf_to_otf(blur, x.shape())?, x)?
    };
    if noise_variance > 0.0 {
        let sigma = libm::sqrt(noise_variance);
        let mut noise = GaussianNoise::new(seed);
        for v in y.data_mut() {
            *v += sigma * noise.next_standard();
        }
    }
    Ok(y)
}

/// Improvement in SNR, `10 log₁₀(‖y − x‖² / ‖x̂ − x‖²)` dB. Returns
/// `+∞` when `x̂ == x`.
pub fn isnr(x_true: &ImageBuffer, y: &ImageBuffer, x_hat: &ImageBuffer) -> Result<f64> {
    let before = y.distance_squared(x_true)?;
    let after = x_hat.distance_squared(x_true)?;
    if after == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * libm::log10(before / after))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentId {
    E1,
    E2A,
    E2B,
    E3A,
    E3B,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 5] = [
        ExperimentId::E1,
        ExperimentId::E2A,
        ExperimentId::E2B,
        ExperimentId::E3A,
        ExperimentId::E3B,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            ExperimentId::E1 => "1",
            ExperimentId::E2A => "2A",
            ExperimentId::E2B => "2B",
            ExperimentId::E3A => "3A",
            ExperimentId::E3B => "3B",
        }
    }

    pub fn blur_kind(&self) -> BlurKind {
        match self {
            ExperimentId::E1 => BlurKind::Uniform,
            ExperimentId::E2A | ExperimentId::E2B => BlurKind::Gaussian,
            ExperimentId::E3A | ExperimentId::E3B => BlurKind::InverseQuadratic,
        }
    }

    pub fn noise_variance(&self) -> f64 {
        match self {
            ExperimentId::E1 => 0.56 * 0.56,
            ExperimentId::E2A | ExperimentId::E3A => 2.0,
            ExperimentId::E2B | ExperimentId::E3B => 8.0,
        }
    }

    /// τ picked by maximizing ISNR over `{2^k · 10⁻³ : k = 0..10}` on the
    /// bundled synthetic scene at 256×256, seed 0, SALSA with the default
    /// stopping rule.
    pub fn default_tau(&self) -> f64 {
        match self {
            ExperimentId::E1 => 0.016,
            ExperimentId::E2A => 0.032,
            ExperimentId::E2B => 0.128,
            ExperimentId::E3A => 0.128,
            ExperimentId::E3B => 0.256,
        }
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentId::ALL
            .into_iter()
            .find(|e| e.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown experiment id {s:?}")))
    }
}

/// μ given explicitly or as the `0.1 τ` rule of thumb.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuSetting {
    Auto,
    Value(f64),
}

impl MuSetting {
    pub fn resolve(&self, tau: f64) -> f64 {
        match self {
            MuSetting::Auto => 0.1 * tau,
            MuSetting::Value(mu) => *mu,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopSpec {
    /// Every solver stops on its own relative objective change.
    RelTol { rel_tol: f64, max_iters: usize },
    /// Every solver runs until it reaches a common objective value. With
    /// `target = None` the value is the one SALSA reaches at
    /// `reference_rel_tol`, or after `reference_max_iters` iterations.
    Target {
        target: Option<f64>,
        reference_rel_tol: f64,
        reference_max_iters: usize,
        max_iters: usize,
    },
}

impl StopSpec {
    pub const REFERENCE_REL_TOL: f64 = 1e-6;

    /// Target mode with the target taken from a SALSA reference run under
    /// the default iteration cap.
    pub fn reference_target(max_iters: usize) -> Self {
        StopSpec::Target {
            target: None,
            reference_rel_tol: Self::REFERENCE_REL_TOL,
            reference_max_iters: SolverConfig::DEFAULT_MAX_ITERS,
            max_iters,
        }
    }

    pub fn max_iters(&self) -> usize {
        match self {
            StopSpec::RelTol { max_iters, .. } | StopSpec::Target { max_iters, .. } => *max_iters,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub id: String,
    pub blur: BlurKind,
    pub blur_params: BlurParams,
    pub noise_variance: f64,
    pub tau: f64,
    pub mu: MuSetting,
    pub seed: u64,
    pub levels: usize,
    pub regularizer: Regularizer,
    pub solvers: Vec<SolverKind>,
    pub stop: StopSpec,
    /// Per-solver cap on iteration seconds.
    pub time_limit: Option<f64>,
}

impl ExperimentSpec {
    pub const DEFAULT_LEVELS: usize = 4;

    /// One of the five standard setups, with every solver and the default
    /// relative-tolerance stopping rule.
    pub fn preset(id: ExperimentId) -> Self {
        let blur = id.blur_kind();
        ExperimentSpec {
            id: String::from(id.label()),
            blur,
            blur_params: BlurParams::default_for(blur),
            noise_variance: id.noise_variance(),
            tau: id.default_tau(),
            mu: MuSetting::Auto,
            seed: 0,
            levels: Self::DEFAULT_LEVELS,
            regularizer: Regularizer::l1(),
            solvers: SolverKind::ALL.to_vec(),
            stop: StopSpec::RelTol {
                rel_tol: SolverConfig::DEFAULT_REL_TOL,
                max_iters: SolverConfig::DEFAULT_MAX_ITERS,
            },
            time_limit: None,
        }
    }

    pub fn mu(&self) -> f64 {
        self.mu.resolve(self.tau)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            return Err(Error::invalid("noise variance must be nonnegative"));
        }
        if self.solvers.is_empty() {
            return Err(Error::invalid("no solvers requested"));
        }
        for (i, s) in self.solvers.iter().enumerate() {
            if self.solvers[..i].contains(s) {
                return Err(Error::invalid(format!("solver {} requested twice", s.name())));
            }
        }
        if let StopSpec::Target {
            target,
            reference_rel_tol,
            reference_max_iters,
            ..
        } = self.stop
        {
            if target.is_some_and(|t| !t.is_finite()) {
                return Err(Error::invalid("target objective must be finite"));
            }
            if reference_rel_tol.is_nan() || reference_rel_tol < 0.0 || reference_max_iters == 0 {
                return Err(Error::invalid("reference run needs rel_tol >= 0 and at least one iteration"));
            }
        }
        FrameSpec::new(self.levels)?;
        self.base_config().validate()
    }

    fn base_config(&self) -> SolverConfig {
        let mut cfg = SolverConfig::new(self.tau);
        cfg.mu = self.mu();
        cfg.time_limit = self.time_limit;
        match self.stop {
            StopSpec::RelTol { rel_tol, max_iters } => {
                cfg.objective_rel_tol = rel_tol;
                cfg.max_iters = max_iters;
            }
            StopSpec::Target {
                target, max_iters, ..
            } => {
                cfg.max_iters = max_iters;
                cfg.target_objective = target;
            }
        }
        cfg
    }
}

#[derive(Debug, Clone)]
pub struct SolverRun {
    pub solver: SolverKind,
    pub outcome: core::result::Result<SolverOutput, Error>,
    /// ISNR of the final reconstruction.
    pub isnr_db: Option<f64>,
}

impl SolverRun {
    pub fn output(&self) -> Option<&SolverOutput> {
        self.outcome.as_ref().ok()
    }

    /// Seconds of solver work until the objective first hit `target`.
    pub fn time_to(&self, target: f64) -> Option<f64> {
        self.output()?
            .trace
            .first_reaching(target)
            .map(|r| r.elapsed_seconds)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub spec: ExperimentSpec,
    pub shape: (usize, usize),
    /// SHA-256 of the degraded observation.
    pub observation_digest: String,
    /// SHA-256 over observation, OTF, τ, frame depth and regularizer.
    pub problem_digest: String,
    pub observation: ImageBuffer,
    /// Common objective value in target mode.
    pub target_objective: Option<f64>,
    pub runs: Vec<SolverRun>,
}

impl ExperimentReport {
    pub fn run(&self, solver: SolverKind) -> Option<&SolverRun> {
        self.runs.iter().find(|r| r.solver == solver)
    }

    pub fn all_succeeded(&self) -> bool {
        self.runs.iter().all(|r| r.outcome.is_ok())
    }
}

fn hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        let _ = write!(s, "{b:02x}");
    }
    s
}

pub fn image_digest(image: &ImageBuffer) -> String {
    let mut h = Sha256::new();
    h.update((image.height() as u64).to_le_bytes());
    h.update((image.width() as u64).to_le_bytes());
    for v in image.data() {
        h.update(v.to_bits().to_le_bytes());
    }
    hex(&h.finalize())
}

/// Fingerprint of everything that defines the objective being minimized.
pub fn problem_digest(problem: &Problem, tau: f64) -> String {
    let mut h = Sha256::new();
    let (rows, cols) = problem.shape();
    h.update((rows as u64).to_le_bytes());
    h.update((cols as u64).to_le_bytes());
    for v in problem.y().data() {
        h.update(v.to_bits().to_le_bytes());
    }
    for d in problem.otf().values() {
        h.update(d.re.to_bits().to_le_bytes());
        h.update(d.im.to_bits().to_le_bytes());
    }
    h.update(tau.to_bits().to_le_bytes());
    h.update((problem.frame().levels() as u64).to_le_bytes());
    h.update([problem.regularizer().penalize_approximation as u8]);
    hex(&h.finalize())
}

/// Builds the problem for `spec` from a clean image: blur, add noise, wrap.
pub fn build_problem(spec: &ExperimentSpec, x_true: &ImageBuffer) -> Result<Problem> {
    let psf = build_psf(spec.blur, &spec.blur_params)?;
    let y = degrade(x_true, &psf, spec.noise_variance, spec.seed)?;
    let otf = psf_to_otf(&psf, x_true.shape())?;
    let frame = FrameSpec::new(spec.levels)?;
    Problem::new(y, otf, frame, spec.regularizer)?.with_reference(x_true.clone())
}

/// Degrades `x_true` and runs every requested solver on the same problem.
///
/// In target mode without an explicit target, SALSA is first run to
/// `reference_rel_tol` and its final objective becomes the target. Solver
/// failures land in the report instead of aborting the experiment.
pub fn run_experiment(
    spec: &ExperimentSpec,
    x_true: &ImageBuffer,
    clock: &dyn Clock,
) -> Result<ExperimentReport> {
    spec.validate()?;
    let problem = build_problem(spec, x_true)?;
    run_problem(spec, &problem, clock)
}

/// Like [`run_experiment`], but starts from an already degraded image.
/// `noise_variance` and `seed` in `spec` are not used. ISNR is reported
/// only when a clean `reference` is given.
pub fn run_on_observation(
    spec: &ExperimentSpec,
    y: &ImageBuffer,
    reference: Option<&ImageBuffer>,
    clock: &dyn Clock,
) -> Result<ExperimentReport> {
    spec.validate()?;
    let psf = build_psf(spec.blur, &spec.blur_params)?;
    let otf = psf_to_otf(&psf, y.shape())?;
    let frame = FrameSpec::new(spec.levels)?;
    let mut problem = Problem::new(y.clone(), otf, frame, spec.regularizer)?;
    if let Some(x) = reference {
        problem = problem.with_reference(x.clone())?;
    }
    run_problem(spec, &problem, clock)
}

fn run_problem(spec: &ExperimentSpec, problem: &Problem, clock: &dyn Clock) -> Result<ExperimentReport> {
    let mut cfg = spec.base_config();

    let target_objective = match spec.stop {
        StopSpec::RelTol { .. } => None,
        StopSpec::Target {
            target: Some(t), ..
        } => Some(t),
        StopSpec::Target {
            target: None,
            reference_rel_tol,
            reference_max_iters,
            ..
        } => {
            let reference_cfg = SolverConfig {
                objective_rel_tol: reference_rel_tol,
                target_objective: None,
                max_iters: reference_max_iters,
                time_limit: None,
                record_trace: false,
                ..cfg.clone()
            };
            let reference = solve(SolverKind::Salsa, problem, &reference_cfg, clock)?;
            Some(reference.objective)
        }
    };
    cfg.target_objective = target_objective;

    let runs = spec
        .solvers
        .iter()
        .map(|&solver| {
            let outcome = solve(solver, problem, &cfg, clock);
            let isnr_db = match (&outcome, problem.reference()) {
                (Ok(o), Some(x)) => isnr(x, problem.y(), &o.image).ok(),
                _ => None,
            };
            SolverRun {
                solver,
                outcome,
                isnr_db,
            }
        })
        .collect();

    Ok(ExperimentReport {
        spec: spec.clone(),
        shape: problem.shape(),
        observation_digest: image_digest(problem.y()),
        problem_digest: problem_digest(problem, spec.tau),
        observation: problem.y().clone(),
        target_objective,
        runs,
    })
}

/// Deterministic piecewise-smooth test scene in `[0, 255]`: sky gradient,
/// textured ground, a dark standing figure with a tripod and a distant
/// building. Used in place of a photograph when none is supplied.
pub fn synthetic_scene(height: usize, width: usize) -> ImageBuffer {
    ImageBuffer::from_fn(height, width, |r, c| {
        let u = (r as f64 + 0.5) / height as f64;
        let v = (c as f64 + 0.5) / width as f64;
        let mut value = 195.0 - 60.0 * u;
        // building
        if (0.55..0.75).contains(&v) && u > 0.45 {
            value = 160.0;
            let wx = libm::fmod(v * 40.0, 1.0);
            let wy = libm::fmod(u * 30.0, 1.0);
            if wx > 0.55 && wy > 0.5 && u < 0.7 {
                value = 90.0;
            }
        }
        // ground
        if u > 0.7 {
            value = 120.0
                + 25.0 * libm::sin(37.0 * u + 5.0 * libm::sin(23.0 * v))
                + 12.0 * libm::cos(91.0 * v * u);
        }
        // figure: head, coat, legs
        let (hu, hv) = (0.22, 0.32);
        let head = ((u - hu) / 0.06) * ((u - hu) / 0.06) + ((v - hv) / 0.045) * ((v - hv) / 0.045);
        if head <= 1.0 {
            value = 35.0 + 30.0 * (1.0 - head);
        }
        let coat_half = 0.06 + 0.08 * (u - 0.28);
        if (0.28..0.72).contains(&u) && (v - 0.32).abs() < coat_half {
            value = 22.0 + 10.0 * libm::sin(60.0 * u);
        }
        if (0.72..0.95).contains(&u) && ((v - 0.29).abs() < 0.018 || (v - 0.36).abs() < 0.018) {
            value = 28.0;
        }
        // camera on a tripod
        if (0.26..0.33).contains(&u) && (0.40..0.50).contains(&v) {
            value = 15.0;
        }
        if u > 0.33 && u < 0.92 {
            let t = (u - 0.33) / (0.92 - 0.33);
            for foot in [0.39, 0.45, 0.51] {
                if (v - (0.45 + t * (foot - 0.45))).abs() < 0.006 {
                    value = 40.0;
                }
            }
        }
        value.clamp(0.0, 255.0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convolution::FreqFilter;
    use crate::solver::NoClock;

    #[test]
    fn noiseless_identity_degradation_is_exact() {
        let x = synthetic_scene(32, 32);
        let psf = build_psf(BlurKind::Uniform, &BlurParams { size: 1, sigma: 1.0 }).unwrap();
        let y = degrade(&x, &psf, 0.0, 7).unwrap();
        for (a, b) in y.data().iter().zip(x.data()) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(degrade(&x, &psf, -1.0, 7).is_err());
    }

    #[test]
    fn noise_is_reproducible_and_seed_dependent() {
        let mut a = GaussianNoise::new(42);
        let mut b = GaussianNoise::new(42);
        let mut c = GaussianNoise::new(43);
        let xs: Vec<f64> = (0..16).map(|_| a.next_standard()).collect();
        let ys: Vec<f64> = (0..16).map(|_| b.next_standard()).collect();
        let zs: Vec<f64> = (0..16).map(|_| c.next_standard()).collect();
        assert_eq!(xs, ys);
        assert_ne!(xs, zs);
    }

    #[test]
    fn isnr_definition() {
        let x = ImageBuffer::from_fn(4, 4, |r, c| (r * 4 + c) as f64);
        let y = ImageBuffer::from_fn(4, 4, |r, c| (r * 4 + c) as f64 + 1.0);
        assert_eq!(isnr(&x, &y, &y).unwrap(), 0.0);
        let closer = ImageBuffer::from_fn(4, 4, |r, c| (r * 4 + c) as f64 + libm::sqrt(0.1));
        assert!((isnr(&x, &y, &closer).unwrap() - 10.0).abs() < 1e-12);
        assert_eq!(isnr(&x, &y, &x).unwrap(), f64::INFINITY);
        assert!(isnr(&x, &y, &ImageBuffer::zeros(2, 8)).is_err());
    }

    #[test]
    fn experiment_ids_parse() {
        for id in ExperimentId::ALL {
            assert_eq!(id.label().parse::<ExperimentId>().unwrap(), id);
        }
        assert!("9".parse::<ExperimentId>().is_err());
        assert_eq!(ExperimentId::E1.noise_variance(), 0.56 * 0.56);
    }

    #[test]
    fn single_solver_report() {
        let mut spec = ExperimentSpec::preset(ExperimentId::E3A);
        spec.levels = 2;
        spec.blur_params.size = 7;
        spec.solvers = alloc::vec![SolverKind::Salsa];
        spec.stop = StopSpec::RelTol {
            rel_tol: 1e-4,
            max_iters: 50,
        };
        let report = run_experiment(&spec, &synthetic_scene(32, 32), &NoClock).unwrap();
        assert_eq!(report.runs.len(), 1);
        assert!(report.run(SolverKind::Salsa).is_some());
        assert!(report.all_succeeded());
        assert_eq!(report.problem_digest.len(), 64);
    }

    #[test]
    fn duplicate_solvers_rejected() {
        let mut spec = ExperimentSpec::preset(ExperimentId::E1);
        spec.solvers = alloc::vec![SolverKind::Ist, SolverKind::Ist];
        assert!(spec.validate().is_err());
    }

    #[test]
    fn digests_track_inputs() {
        let x = synthetic_scene(16, 16);
        let frame = FrameSpec::new(2).unwrap();
        let p = Problem::new(x.clone(), FreqFilter::ones(16, 16), frame, Regularizer::l1()).unwrap();
        assert_eq!(problem_digest(&p, 1.0), problem_digest(&p, 1.0));
        assert_ne!(problem_digest(&p, 1.0), problem_digest(&p, 2.0));
        assert_ne!(image_digest(&x), image_digest(&synthetic_scene(16, 32)));
    }
}
