//! Finite-dimensional projective measurement simulator.
//!
//! States live on a tensor product of small subsystems. Measurements are
//! complete families of orthogonal projectors, lifted onto the joint space
//! one slot at a time. On top of that calculus sit the experiment models:
//!
//! * [`measure`]: Born rule, collapse, conditional and sequential joint
//!   probabilities.
//! * [`orderprop`]: exhaustive interleaving checks showing that reordering
//!   measurements across subsystems leaves joint probabilities unchanged.
//! * [`eraser`]: the delayed-choice quantum eraser with its four idler
//!   detectors and the signal screen.
//! * [`wheeler`]: two spherical waves, the far-field fringe law, and the
//!   screen-versus-telescope choice.
//! * [`everett`]: premeasurement isometries and a branch ledger.
//!
//! [`cli`] wires everything to config files and deterministic CSV/JSON output.

pub mod cli;
pub mod eraser;
mod error;
pub mod everett;
pub mod measure;
pub mod orderprop;
pub mod pattern;
pub mod qcore;
pub mod wheeler;

pub use error::{Error, Result};

/// Absolute tolerance used for every structural equality check.
pub const TOL: f64 = 1e-12;
