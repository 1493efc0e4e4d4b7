//! Frame-based image deconvolution by variable splitting and augmented
//! Lagrangian iterations (SALSA), with iterative shrinkage baselines.
//!
//! The crate is `no_std` and only needs `alloc`. Everything that touches
//! the outside world (files, wall clocks, command lines) lives in the
//! companion `salsa` crate; here, time is read through the [`Clock`] trait.
//!
//! Images are real `H×W` grids in row-major order. Blur operators are
//! periodic convolutions stored as their DFT diagonal ([`FreqFilter`]). The
//! sparsifying dictionary is a Parseval undecimated Haar frame
//! ([`FrameSpec`]), so `synthesis(analysis(x)) == x`.
#![no_std]

extern crate alloc;

pub mod bench;
pub mod convolution;
mod error;
pub mod fft;
pub mod frame;
pub mod image;
pub mod prox;
pub mod solver;

pub use convolution::{
    adjoint_filter, apply_filter, build_inversion_filter, build_psf, psf_to_otf, BlurKind,
    BlurParams, FreqFilter, Psf,
};
pub use error::{Error, Result};
pub use frame::{analysis, synthesis, FrameCoeffs, FrameSpec};
pub use image::ImageBuffer;
pub use prox::{objective, prox, Regularizer, RegularizerKind};
pub use solver::{
    beta_update, fista_solve, ist_solve, salsa_solve, Clock, NoClock, Problem, SolverConfig,
    SolverKind, SolverOutput, SolverTrace, TraceRecord,
};
