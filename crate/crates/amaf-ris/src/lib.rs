//! Simulation toolkit for a passive reflective surface driven by a small
//! active feed array.
//!
//! The crate builds the feed-to-surface transmission matrix two ways —
//! from an analytic spherical-spreading model and from imported full-wave
//! S-parameter exports — configures the feed along the matrix's principal
//! eigenmode, and quantifies the downstream impact: excitation taper,
//! far-field pattern metrics, and Monte-Carlo rate CDFs under beam
//! pointing errors and discrete phase shifters.
//!
//! # Examples
//!
//! The `examples/` directory is the front door; each file is a runnable
//! walkthrough of one capability:
//!
//! - **`build_friis`** - assemble the analytic transmission matrix and
//!   inspect its principal singular value and excitation taper
//! - **`pem_feed`** - principal-eigenmode feed weights, the passivity
//!   ceiling, and the surface magnitude taper grid
//! - **`far_field`** - pattern synthesis, peak/sidelobe/beamwidth
//!   metrics, and steering
//! - **`ingest_fullwave`** - write and re-ingest solver exports in both
//!   file formats, then extract the transmission block
//! - **`rate_cdf`** - Monte-Carlo rate CDFs and a run comparison
//! - **`pointing_error`** - rate degradation versus Gaussian beam
//!   pointing error
//! - **`quantization_sweep`** - phase-shifter resolution sweep
//! - **`pattern_sensitivity`** - element-pattern sensitivity study
//!
//! ```bash
//! cargo run --release --example build_friis
//! cargo run --release --example rate_cdf
//! ```
//!
//! The same pipelines are scriptable through the thin `amaf-ris` binary
//! (`build-friis`, `import`, `pem`, `pattern`, `simulate`, `compare`).

// `!(x > 0.0)` guards deliberately reject NaN alongside non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod cli;
pub mod config;
pub mod error;
pub mod farfield;
pub mod geometry;
pub mod ingest;
pub mod output;
pub mod pem;
pub mod report;
pub mod syssim;

pub use error::{Error, Result};
