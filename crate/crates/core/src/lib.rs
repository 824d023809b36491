//! Penalized first-passage percolation on spatial inhomogeneous random graphs.
//!
//! The crate generates GIRG, windowed IGIRG, windowed scale-free percolation
//! and hyperbolic random graphs, equips every edge with an i.i.d. length, and
//! measures cost-distances where the directed edge `u -> v` costs
//! `L_e * f(W_u, W_v)` for a polynomial weight penalty `f`.
//!
//! Module map:
//! - [`randomness`]: counter-based random streams and the weight, length and
//!   Poisson samplers.
//! - [`geometry`]: windows, distances and doubly-exponential boxing systems.
//! - [`models`]: graph generators and the pairwise connection oracle.
//! - [`cost`]: penalties, thresholds, the phase classifier and the boxing
//!   parameter solver.
//! - [`metrics`]: cost searches, explosion diagnostics, components, leaders and
//!   greedy paths.
//! - [`experiments`]: Monte-Carlo harness (sweeps, degree and tail diagnostics).
//! - [`cli`]: configuration, file formats and the command implementations.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod cli;
pub mod cost;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod metrics;
pub mod models;
pub mod randomness;

pub use error::{Error, Result};
