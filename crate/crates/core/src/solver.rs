//! SALSA and the IST/FISTA baselines for
//!
//! ```text
//! minimize_β  ½‖H W β − y‖² + τ φ(β)
//! ```
//!
//! SALSA splits `β` into two copies tied by `β = θ` and runs alternating
//! augmented Lagrangian steps:
//!
//! ```text
//! r      = ȳ + μ (θ + d)                      ȳ = Wᵀ Hᵀ y
//! β⁺     = (1/μ)(r − Wᵀ F W r)                F = Hᵀ(H Hᵀ + μI)⁻¹ H
//! θ⁺     = Ψ_{τφ/μ}(β⁺ − d)
//! d⁺     = d − β⁺ + θ⁺
//! ```
//!
//! The `β` step is the exact minimizer of the quadratic subproblem because
//! `W Wᵀ = I` turns the Woodbury identity into a pure DFT-domain filter.
//!
//! All three solvers share the stopping rule, the trace format and the
//! timing policy: only iteration work is timed, objective and ISNR
//! evaluation for the trace are not.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::convolution::{
    adjoint_filter, apply_filter, build_inversion_filter, FilterWorkspace, FreqFilter,
};
use crate::error::{Error, Result};
use crate::frame::{analysis, synthesis, FrameCoeffs, FrameSpec, FrameWorkspace};
use crate::image::ImageBuffer;
use crate::prox::{soft_threshold, Regularizer};

/// Source of elapsed time, in seconds from an arbitrary origin.
pub trait Clock {
    fn now(&self) -> f64;
}

/// A clock that never advances; traces get all-zero timings.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SolverKind {
    Salsa,
    Ist,
    Fista,
}

impl SolverKind {
    pub const ALL: [SolverKind; 3] = [SolverKind::Salsa, SolverKind::Ist, SolverKind::Fista];

    pub fn name(&self) -> &'static str {
        match self {
            SolverKind::Salsa => "salsa",
            SolverKind::Ist => "ist",
            SolverKind::Fista => "fista",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(name))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Regularization weight τ.
    pub tau: f64,
    /// Augmented Lagrangian penalty μ (SALSA only).
    pub mu: f64,
    pub max_iters: usize,
    /// Stop once `|f_k − f_{k−1}| / f_{k−1}` drops to this value; 0 disables
    /// the check. Ignored when `target_objective` is set.
    pub objective_rel_tol: f64,
    /// Stop as soon as the objective is at or below this value.
    pub target_objective: Option<f64>,
    /// IST/FISTA step; `None` means `1/L` with `L = max |d|²`.
    pub step_size: Option<f64>,
    /// Give up once this many seconds of iteration time have been spent.
    pub time_limit: Option<f64>,
    pub record_trace: bool,
}

impl SolverConfig {
    pub const DEFAULT_MAX_ITERS: usize = 500;
    pub const DEFAULT_REL_TOL: f64 = 1e-5;

    /// Defaults with `μ = 0.1 τ`.
    pub fn new(tau: f64) -> Self {
        SolverConfig {
            tau,
            mu: 0.1 * tau,
            max_iters: Self::DEFAULT_MAX_ITERS,
            objective_rel_tol: Self::DEFAULT_REL_TOL,
            target_objective: None,
            step_size: None,
            time_limit: None,
            record_trace: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::invalid(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(Error::invalid(format!("mu must be positive, got {}", self.mu)));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        if self.objective_rel_tol.is_nan() || self.objective_rel_tol < 0.0 {
            return Err(Error::invalid("objective_rel_tol must be nonnegative"));
        }
        if let Some(t) = self.target_objective {
            if t.is_nan() {
                return Err(Error::invalid("target objective is NaN"));
            }
        }
        if let Some(s) = self.step_size {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::invalid("step size must be positive"));
            }
        }
        if let Some(t) = self.time_limit {
            if t.is_nan() || t <= 0.0 {
                return Err(Error::invalid("time limit must be positive"));
            }
        }
        Ok(())
    }
}

/// One deconvolution instance with the quantities every solver reuses.
#[derive(Debug, Clone)]
pub struct Problem {
    y: ImageBuffer,
    otf: FreqFilter,
    frame: FrameSpec,
    reg: Regularizer,
    reference: Option<ImageBuffer>,
    gram: FreqFilter,
    lipschitz: f64,
    ybar: FrameCoeffs,
    /// `Hᵀy` as an image.
    hty: Vec<f64>,
}

impl Problem {
    pub fn new(y: ImageBuffer, otf: FreqFilter, frame: FrameSpec, reg: Regularizer) -> Result<Self> {
        y.check_shape(otf.shape())?;
        frame.check_shape(y.shape())?;
        let hty = adjoint_filter(&otf, &y)?;
        let ybar = analysis(&hty, &frame)?;
        let gram = otf.gram();
        let lipschitz = otf.max_gain_squared();
        Ok(Problem {
            y,
            otf,
            frame,
            reg,
            reference: None,
            gram,
            lipschitz,
            ybar,
            hty: hty.into_data(),
        })
    }

    /// Ground truth used only to report ISNR in traces.
    pub fn with_reference(mut self, x_true: ImageBuffer) -> Result<Self> {
        x_true.check_shape(self.y.shape())?;
        self.reference = Some(x_true);
        Ok(self)
    }

    pub fn y(&self) -> &ImageBuffer {
        &self.y
    }

    pub fn otf(&self) -> &FreqFilter {
        &self.otf
    }

    pub fn frame(&self) -> &FrameSpec {
        &self.frame
    }

    pub fn regularizer(&self) -> &Regularizer {
        &self.reg
    }

    pub fn reference(&self) -> Option<&ImageBuffer> {
        self.reference.as_ref()
    }

    /// `L = max |d|² = ‖HW‖²` since `‖W‖ = 1`.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// `ȳ = Wᵀ Hᵀ y`.
    pub fn ybar(&self) -> &FrameCoeffs {
        &self.ybar
    }

    pub fn shape(&self) -> (usize, usize) {
        self.y.shape()
    }

    /// Warm start shared by all solvers: `Wᵀ y`.
    pub fn initial_coeffs(&self) -> FrameCoeffs {
        analysis(&self.y, &self.frame).expect("shape validated at construction")
    }

    pub fn objective(&self, coeffs: &FrameCoeffs, tau: f64) -> Result<f64> {
        let image = synthesis(coeffs, &self.frame)?;
        self.objective_for_image(&image, coeffs, tau)
    }

    fn objective_for_image(&self, image: &ImageBuffer, coeffs: &FrameCoeffs, tau: f64) -> Result<f64> {
        let blurred = apply_filter(&self.otf, image)?;
        Ok(0.5 * blurred.distance_squared(&self.y)? + tau * self.reg.value(coeffs))
    }

    /// `g = Wᵀ Hᵀ (H W β − y)`, the gradient of the data term.
    pub fn gradient(&self, coeffs: &FrameCoeffs) -> Result<FrameCoeffs> {
        coeffs.check_spec(&self.frame, self.shape())?;
        let mut g = FrameCoeffs::zeros(&self.frame, self.shape());
        self.gradient_into(&mut self.workspace(), coeffs, &mut g)?;
        Ok(g)
    }

    /// Largest violation of `0 ∈ g + τ ∂φ(β)` over all coefficients.
    ///
    /// Nonzero entries contribute `|g_i + τ sign(β_i)|`, zero entries
    /// `max(|g_i| − τ, 0)`, unpenalized entries `|g_i|`.
    pub fn optimality_residual(&self, coeffs: &FrameCoeffs, tau: f64) -> Result<f64> {
        let g = self.gradient(coeffs)?;
        let (h, w) = self.shape();
        let penalized = if self.reg.penalize_approximation {
            coeffs.len()
        } else {
            coeffs.len() - h * w
        };
        let mut worst = 0.0f64;
        for (i, (&b, &gi)) in coeffs.data().iter().zip(g.data()).enumerate() {
            let r = if i >= penalized {
                gi.abs()
            } else if b > 0.0 {
                (gi + tau).abs()
            } else if b < 0.0 {
                (gi - tau).abs()
            } else {
                (gi.abs() - tau).max(0.0)
            };
            worst = worst.max(r);
        }
        Ok(worst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub elapsed_seconds: f64,
    pub objective: f64,
    pub isnr_db: Option<f64>,
}

/// Per-iteration history; record 0 is the starting point.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverTrace {
    pub records: Vec<TraceRecord>,
}

impl SolverTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// First record whose objective is at or below `target`.
    pub fn first_reaching(&self, target: f64) -> Option<&TraceRecord> {
        self.records.iter().find(|r| r.objective <= target)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Relative objective change fell below the tolerance.
    Converged,
    ReachedTarget,
    MaxIterations,
    TimeLimit,
}

#[derive(Debug, Clone)]
pub struct SolverOutput {
    pub solver: SolverKind,
    /// For SALSA this is θ, the output of the shrinkage step.
    pub coeffs: FrameCoeffs,
    pub image: ImageBuffer,
    pub trace: SolverTrace,
    pub iterations: usize,
    pub objective: f64,
    /// Iteration seconds, excluding objective bookkeeping.
    pub elapsed_seconds: f64,
    pub stop_reason: StopReason,
    /// `‖β − θ‖ / ‖θ‖` at exit (SALSA only).
    pub splitting_residual: Option<f64>,
}

/// Transform plans and image-sized buffers reused across iterations.
#[derive(Debug, Clone)]
pub struct Workspace {
    filter: FilterWorkspace,
    frame: FrameWorkspace,
    image: Vec<f64>,
    filtered: Vec<f64>,
}

impl Workspace {
    pub fn new(frame: FrameSpec, shape: (usize, usize)) -> Result<Self> {
        let n = shape.0 * shape.1;
        Ok(Workspace {
            filter: FilterWorkspace::new(shape),
            frame: FrameWorkspace::new(frame, shape)?,
            image: vec![0.0; n],
            filtered: vec![0.0; n],
        })
    }

    /// `out = Wᵀ K W coeffs` for the filter `K`.
    fn frame_filter(&mut self, coeffs: &FrameCoeffs, filter: &FreqFilter, out: &mut FrameCoeffs) -> Result<()> {
        self.frame.synthesis_into(coeffs, &mut self.image)?;
        self.filter
            .apply(filter, &self.image, &mut self.filtered, false)?;
        self.frame.analysis_into(&self.filtered, out)
    }

    /// `out = Wᵀ (HᵀH W coeffs − Hᵀy)`, subtracting in the image domain.
    fn gradient(&mut self, problem: &Problem, coeffs: &FrameCoeffs, out: &mut FrameCoeffs) -> Result<()> {
        self.frame.synthesis_into(coeffs, &mut self.image)?;
        self.filter
            .apply(&problem.gram, &self.image, &mut self.filtered, false)?;
        for (f, b) in self.filtered.iter_mut().zip(&problem.hty) {
            *f -= b;
        }
        self.frame.analysis_into(&self.filtered, out)
    }
}

impl Problem {
    pub fn workspace(&self) -> Workspace {
        Workspace::new(self.frame, self.shape()).expect("shape validated at construction")
    }

    /// `out = Wᵀ Hᵀ (H W coeffs − y)`.
    pub fn gradient_into(&self, ws: &mut Workspace, coeffs: &FrameCoeffs, out: &mut FrameCoeffs) -> Result<()> {
        ws.gradient(self, coeffs, out)
    }

    /// Objective at `coeffs`; leaves `W coeffs` in the workspace image.
    fn objective_in(&self, ws: &mut Workspace, coeffs: &FrameCoeffs, tau: f64) -> Result<f64> {
        ws.frame.synthesis_into(coeffs, &mut ws.image)?;
        ws.filter
            .apply(&self.otf, &ws.image, &mut ws.filtered, false)?;
        let misfit: f64 = ws
            .filtered
            .iter()
            .zip(self.y.data())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok(0.5 * misfit + tau * self.reg.value(coeffs))
    }
}

fn beta_update_in(
    ws: &mut Workspace,
    r: &FrameCoeffs,
    inv_filter: &FreqFilter,
    mu: f64,
    out: &mut FrameCoeffs,
) -> Result<()> {
    ws.frame_filter(r, inv_filter, out)?;
    let inv_mu = 1.0 / mu;
    for (o, r) in out.data_mut().iter_mut().zip(r.data()) {
        *o = inv_mu * (r - *o);
    }
    Ok(())
}

/// `(1/μ)(r − Wᵀ F W r)`, which solves `(WᵀHᵀHW + μI) β = r` when
/// `inv_filter` holds the gains `|d|²/(|d|² + μ)`.
pub fn beta_update(
    r: &FrameCoeffs,
    inv_filter: &FreqFilter,
    frame: &FrameSpec,
    mu: f64,
) -> Result<FrameCoeffs> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::invalid(format!("mu must be positive, got {mu}")));
    }
    r.check_spec(frame, inv_filter.shape())?;
    let mut ws = Workspace::new(*frame, inv_filter.shape())?;
    let mut out = FrameCoeffs::zeros(frame, inv_filter.shape());
    beta_update_in(&mut ws, r, inv_filter, mu, &mut out)?;
    Ok(out)
}

/// Iterates of one SALSA run.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub beta: FrameCoeffs,
    pub theta: FrameCoeffs,
    /// Scaled Lagrange multiplier estimate.
    pub d: FrameCoeffs,
    pub k: usize,
}

/// SALSA stepped one iteration at a time.
#[derive(Debug, Clone)]
pub struct Salsa<'a> {
    problem: &'a Problem,
    tau: f64,
    mu: f64,
    inv_filter: FreqFilter,
    /// `(HᵀH + μI)⁻¹ Hᵀ y`.
    data_term: Vec<f64>,
    state: SolverState,
    ws: Workspace,
}

impl<'a> Salsa<'a> {
    /// Starts from `θ₀ = β₀ = Wᵀy`, `d₀ = 0`.
    pub fn new(problem: &'a Problem, tau: f64, mu: f64) -> Result<Self> {
        let theta = problem.initial_coeffs();
        let d = FrameCoeffs::zeros(&problem.frame, problem.shape());
        Self::with_state(
            problem,
            tau,
            mu,
            SolverState {
                beta: theta.clone(),
                theta,
                d,
                k: 0,
            },
        )
    }

    pub fn with_state(problem: &'a Problem, tau: f64, mu: f64, state: SolverState) -> Result<Self> {
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(Error::invalid("tau must be nonnegative"));
        }
        let inv_filter = build_inversion_filter(&problem.otf, mu)?;
        let shape = problem.shape();
        for c in [&state.beta, &state.theta, &state.d] {
            c.check_spec(&problem.frame, shape)?;
        }
        let mut ws = problem.workspace();
        let pseudo_inverse = FreqFilter::new(
            shape.0,
            shape.1,
            problem
                .otf
                .values()
                .iter()
                .map(|d| d.conj() / (d.norm_sqr() + mu))
                .collect(),
        )?;
        let mut data_term = vec![0.0; shape.0 * shape.1];
        ws.filter
            .apply(&pseudo_inverse, problem.y.data(), &mut data_term, false)?;
        Ok(Salsa {
            problem,
            tau,
            mu,
            inv_filter,
            data_term,
            state,
            ws,
        })
    }

    pub fn state(&self) -> &SolverState {
        &self.state
    }

    pub fn inversion_filter(&self) -> &FreqFilter {
        &self.inv_filter
    }

    /// The right-hand side `r_k = ȳ + μ(θ_k + d_k)` of the next β step.
    pub fn rhs(&self) -> FrameCoeffs {
        let mut shifted = self.state.theta.clone();
        let mut r = self.problem.ybar.clone();
        shifted
            .axpy(1.0, &self.state.d)
            .and_then(|_| r.axpy(self.mu, &shifted))
            .expect("layouts checked at construction");
        r
    }

    /// One iteration.
    ///
    /// The β step is evaluated as `β′ + Wᵀ(a − F W β′)`, `β′ = θ + d`, with
    /// `a = (HᵀH + μI)⁻¹Hᵀy`. Substituting `r = ȳ + μβ′` into
    /// `(1/μ)(r − WᵀFWr)` gives the same value, but this form does not
    /// divide a cancellation by μ and stays accurate as μ → 0.
    pub fn step(&mut self) -> Result<()> {
        let ws = &mut self.ws;
        let st = &mut self.state;
        ws.frame
            .synthesis_of_sum_into(&st.theta, &st.d, &mut ws.image)?;
        ws.filter
            .apply(&self.inv_filter, &ws.image, &mut ws.filtered, false)?;
        for (f, a) in ws.filtered.iter_mut().zip(&self.data_term) {
            *f = a - *f;
        }
        ws.frame.analysis_into(&ws.filtered, &mut st.beta)?;
        let threshold = self.tau / self.mu;
        let active = self.problem.reg.active_len(&st.theta);
        // β⁺ = (θ + d) + correction, θ⁺ = Ψ(β⁺ − d), d⁺ = (d − β⁺) + θ⁺
        // in one sweep
        let beta = st.beta.data_mut().iter_mut();
        let theta = st.theta.data_mut().iter_mut();
        let d = st.d.data_mut().iter_mut();
        for (i, ((b, t), d)) in beta.zip(theta).zip(d).enumerate() {
            *b += *t + *d;
            let v = *b - *d;
            *t = if i < active { soft_threshold(v, threshold) } else { v };
            *d = (*d - *b) + *t;
        }
        st.k += 1;
        Ok(())
    }

    pub fn splitting_residual(&self) -> f64 {
        let diff: f64 = self
            .state
            .beta
            .data()
            .iter()
            .zip(self.state.theta.data())
            .map(|(b, t)| (b - t) * (b - t))
            .sum();
        let norm = self.state.theta.norm2();
        if norm == 0.0 {
            if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            libm::sqrt(diff) / norm
        }
    }
}

/// `t_{k+1} = (1 + √(1 + 4t_k²)) / 2`.
pub fn fista_next_t(t: f64) -> f64 {
    (1.0 + libm::sqrt(1.0 + 4.0 * t * t)) / 2.0
}

trait Iteration {
    fn step(&mut self) -> Result<()>;
    fn estimate(&self) -> &FrameCoeffs;
    fn is_finite(&self) -> bool;
    fn splitting_residual(&self) -> Option<f64> {
        None
    }
}

impl Iteration for Salsa<'_> {
    fn step(&mut self) -> Result<()> {
        Salsa::step(self)
    }

    fn estimate(&self) -> &FrameCoeffs {
        &self.state.theta
    }

    fn is_finite(&self) -> bool {
        self.state.beta.is_finite() && self.state.theta.is_finite() && self.state.d.is_finite()
    }

    fn splitting_residual(&self) -> Option<f64> {
        Some(Salsa::splitting_residual(self))
    }
}

/// `out = Ψ(at − step · ∇f(at))`; `grad` is scratch.
fn forward_backward(
    problem: &Problem,
    ws: &mut Workspace,
    at: &FrameCoeffs,
    step: f64,
    tau: f64,
    grad: &mut FrameCoeffs,
    out: &mut FrameCoeffs,
) -> Result<()> {
    ws.gradient(problem, at, grad)?;
    let threshold = tau * step;
    let active = problem.reg.active_len(at);
    let terms = at.data().iter().zip(grad.data());
    for (i, (o, (a, g))) in out.data_mut().iter_mut().zip(terms).enumerate() {
        let v = a - step * g;
        *o = if i < active { soft_threshold(v, threshold) } else { v };
    }
    Ok(())
}

struct Ist<'a> {
    problem: &'a Problem,
    tau: f64,
    step: f64,
    beta: FrameCoeffs,
    next: FrameCoeffs,
    grad: FrameCoeffs,
    ws: Workspace,
}

impl<'a> Ist<'a> {
    fn new(problem: &'a Problem, tau: f64, step: f64) -> Self {
        let beta = problem.initial_coeffs();
        Ist {
            problem,
            tau,
            step,
            next: beta.clone(),
            grad: beta.clone(),
            beta,
            ws: problem.workspace(),
        }
    }
}

impl Iteration for Ist<'_> {
    fn step(&mut self) -> Result<()> {
        forward_backward(
            self.problem,
            &mut self.ws,
            &self.beta,
            self.step,
            self.tau,
            &mut self.grad,
            &mut self.next,
        )?;
        core::mem::swap(&mut self.beta, &mut self.next);
        Ok(())
    }

    fn estimate(&self) -> &FrameCoeffs {
        &self.beta
    }

    fn is_finite(&self) -> bool {
        self.beta.is_finite()
    }
}

struct Fista<'a> {
    problem: &'a Problem,
    tau: f64,
    step: f64,
    x: FrameCoeffs,
    /// Extrapolated point the gradient step is taken from.
    v: FrameCoeffs,
    grad: FrameCoeffs,
    t: f64,
    ws: Workspace,
}

impl<'a> Fista<'a> {
    fn new(problem: &'a Problem, tau: f64, step: f64) -> Self {
        let x = problem.initial_coeffs();
        Fista {
            problem,
            tau,
            step,
            v: x.clone(),
            grad: x.clone(),
            x,
            t: 1.0,
            ws: problem.workspace(),
        }
    }
}

impl Iteration for Fista<'_> {
    fn step(&mut self) -> Result<()> {
        let problem = self.problem;
        self.ws.gradient(problem, &self.v, &mut self.grad)?;
        let step = self.step;
        let threshold = self.tau * step;
        let active = problem.reg.active_len(&self.x);
        let t_next = fista_next_t(self.t);
        let momentum = (self.t - 1.0) / t_next;
        // x⁺ = Ψ(v − s∇f(v)), v⁺ = x⁺ + m(x⁺ − x) in one sweep
        let x = self.x.data_mut().iter_mut();
        let v = self.v.data_mut().iter_mut();
        for (i, ((x, v), g)) in x.zip(v).zip(self.grad.data()).enumerate() {
            let u = *v - step * g;
            let xn = if i < active { soft_threshold(u, threshold) } else { u };
            *v = xn + momentum * (xn - *x);
            *x = xn;
        }
        self.t = t_next;
        Ok(())
    }

    fn estimate(&self) -> &FrameCoeffs {
        &self.x
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.v.is_finite()
    }
}

fn observe(problem: &Problem, ws: &mut Workspace, coeffs: &FrameCoeffs, tau: f64) -> Result<(f64, Option<f64>)> {
    let f = problem.objective_in(ws, coeffs, tau)?;
    let isnr_db = match &problem.reference {
        Some(x) => {
            let before = problem.y.distance_squared(x)?;
            let after: f64 = ws
                .image
                .iter()
                .zip(x.data())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            Some(if after == 0.0 {
                f64::INFINITY
            } else {
                10.0 * libm::log10(before / after)
            })
        }
        None => None,
    };
    Ok((f, isnr_db))
}

fn drive<I: Iteration>(
    solver: SolverKind,
    problem: &Problem,
    cfg: &SolverConfig,
    clock: &dyn Clock,
    setup_seconds: f64,
    mut it: I,
) -> Result<SolverOutput> {
    let mut ws = problem.workspace();
    let mut elapsed = setup_seconds;
    let mut trace = SolverTrace::default();
    let (mut f_prev, isnr0) = observe(problem, &mut ws, it.estimate(), cfg.tau)?;
    if !f_prev.is_finite() {
        return Err(Error::Diverged { iteration: 0 });
    }
    if cfg.record_trace {
        trace.records.push(TraceRecord {
            iter: 0,
            elapsed_seconds: elapsed,
            objective: f_prev,
            isnr_db: isnr0,
        });
    }
    let mut stop_reason = StopReason::MaxIterations;
    let mut iterations = 0;
    if cfg.target_objective.is_some_and(|t| f_prev <= t) {
        stop_reason = StopReason::ReachedTarget;
    } else {
        for k in 1..=cfg.max_iters {
            let start = clock.now();
            it.step()?;
            let stop = clock.now();
            elapsed += (stop - start).max(0.0);
            iterations = k;
            if !it.is_finite() {
                return Err(Error::Diverged { iteration: k });
            }
            let (f, isnr_db) = observe(problem, &mut ws, it.estimate(), cfg.tau)?;
            if !f.is_finite() {
                return Err(Error::Diverged { iteration: k });
            }
            if cfg.record_trace {
                trace.records.push(TraceRecord {
                    iter: k,
                    elapsed_seconds: elapsed,
                    objective: f,
                    isnr_db,
                });
            }
            let done = match cfg.target_objective {
                Some(target) => {
                    if f <= target {
                        stop_reason = StopReason::ReachedTarget;
                    }
                    f <= target
                }
                None => {
                    let change = (f - f_prev).abs();
                    let converged = if cfg.objective_rel_tol == 0.0 {
                        false
                    } else if f_prev > 0.0 {
                        change / f_prev <= cfg.objective_rel_tol
                    } else {
                        change == 0.0
                    };
                    if converged {
                        stop_reason = StopReason::Converged;
                    }
                    converged
                }
            };
            f_prev = f;
            if done {
                break;
            }
            if cfg.time_limit.is_some_and(|limit| elapsed >= limit) {
                stop_reason = StopReason::TimeLimit;
                break;
            }
        }
    }
    let (h, w) = problem.shape();
    Ok(SolverOutput {
        solver,
        coeffs: it.estimate().clone(),
        // the last observe() left W·estimate in the workspace
        image: ImageBuffer::from_raw(h, w, ws.image),
        trace,
        iterations,
        objective: f_prev,
        elapsed_seconds: elapsed,
        stop_reason,
        splitting_residual: it.splitting_residual(),
    })
}

fn step_size(problem: &Problem, cfg: &SolverConfig) -> Result<f64> {
    let lipschitz = problem.lipschitz();
    if lipschitz.is_nan() || lipschitz <= 0.0 {
        return Err(Error::invalid("blur operator is zero"));
    }
    let max_step = 1.0 / lipschitz;
    match cfg.step_size {
        None => Ok(max_step),
        Some(s) if s <= max_step * (1.0 + 1e-12) => Ok(s),
        Some(s) => Err(Error::invalid(format!(
            "step size {s} exceeds 1/L = {max_step}"
        ))),
    }
}

pub fn salsa_solve(problem: &Problem, cfg: &SolverConfig, clock: &dyn Clock) -> Result<SolverOutput> {
    cfg.validate()?;
    let start = clock.now();
    let it = Salsa::new(problem, cfg.tau, cfg.mu)?;
    let setup = (clock.now() - start).max(0.0);
    drive(SolverKind::Salsa, problem, cfg, clock, setup, it)
}

pub fn ist_solve(problem: &Problem, cfg: &SolverConfig, clock: &dyn Clock) -> Result<SolverOutput> {
    cfg.validate()?;
    let step = step_size(problem, cfg)?;
    drive(SolverKind::Ist, problem, cfg, clock, 0.0, Ist::new(problem, cfg.tau, step))
}

pub fn fista_solve(problem: &Problem, cfg: &SolverConfig, clock: &dyn Clock) -> Result<SolverOutput> {
    cfg.validate()?;
    let step = step_size(problem, cfg)?;
    drive(SolverKind::Fista, problem, cfg, clock, 0.0, Fista::new(problem, cfg.tau, step))
}

/// Dispatches to the solver named by `kind`.
pub fn solve(
    kind: SolverKind,
    problem: &Problem,
    cfg: &SolverConfig,
    clock: &dyn Clock,
) -> Result<SolverOutput> {
    match kind {
        SolverKind::Salsa => salsa_solve(problem, cfg, clock),
        SolverKind::Ist => ist_solve(problem, cfg, clock),
        SolverKind::Fista => fista_solve(problem, cfg, clock),
    }
}
