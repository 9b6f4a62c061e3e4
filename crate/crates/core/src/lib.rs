//! Game-theoretic power control on multi-carrier interference channels.
//!
//! The crate is organised bottom-up:
//!
//! - [`network`]: scenario data model (normalized gains, noise), effective
//!   interference, SINR and rates, plus the random scenario generator.
//! - [`single_carrier`]: target-SINR tracking (TPC) and opportunistic power
//!   control (OPC) updates and the TPC feasibility test.
//! - [`best_response`]: per-user optimal allocations for the opportunistic
//!   GNE game, power minimization, waterfilling, interference-priced
//!   waterfilling and the fixed-price comparator, each with a KKT certificate.
//! - [`analysis`]: uniqueness/convergence condition matrices and the
//!   P-matrix / spectral-radius tests that evaluate them.
//! - [`engine`]: simultaneous (Jacobi) best-response iteration, trajectories,
//!   multi-start uniqueness probes.
//! - [`experiment`]: preset experiments, CSV/JSON artifacts and scheme
//!   comparison used by the `opcgame` binary.
//!
//! Rates are in nats throughout.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod best_response;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod network;
pub mod single_carrier;

pub use error::{Error, Result};
pub use network::{PowerProfile, Scenario, UserParams};
