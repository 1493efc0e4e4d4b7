//! File formats, wall-clock timing and the `salsa` command line on top of
//! [`salsa_core`].
//!
//! A `run` or `deblur` writes into its output directory:
//!
//! - `observation.pgm` (`run` only), the degraded input
//! - `<solver>_reconstruction.pgm` and `<solver>_trace.csv` per solver
//! - `report.json`
//!
//! Solver names are `salsa`, `ist` and `fista`.

pub mod app;
pub mod cli;
pub mod clock;
pub mod pgm;
pub mod report;
pub mod trace_csv;

pub use clock::WallClock;
