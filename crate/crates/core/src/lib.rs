//! Conservative solver and verification harness for the fast diffusion
//! equation u_t = Delta u^m (0 < m <= (n-2)/n) on domains with holes.
//!
//! The crate provides:
//!
//! - `model`: problem parameters, hypothesis validation, barrier functions
//!   and the closed-form coefficients (A1, A2, alpha, hole-flux scaling);
//! - `radial`: an implicit flux-form finite-volume integrator on the annulus
//!   delta <= r <= R with prescribed Neumann flux on both boundaries;
//! - `planar`: a 2D masked-Cartesian analogue for multi-hole property checks;
//! - `continuation`: the shrinking-hole and expanding-domain limit drivers
//!   that manufacture singular solutions, with blow-up-exponent diagnostics;
//! - `verify`: pass/fail checks with margins for every desk-checkable
//!   statement (mass balance, L1 contraction, the intrinsic u_t bound,
//!   barrier sandwiches, positivity, clamp insensitivity);
//! - `config`, `io`, `plot`: TOML run configuration, CSV/JSON persistence,
//!   and SVG plot emission for the command-line driver.

pub mod config;
pub mod continuation;
pub mod error;
pub mod io;
pub mod model;
pub mod planar;
pub mod plot;
pub mod radial;
pub mod stepping;
pub mod verify;

pub use error::{CheckError, ModelError, SolverError};
pub use stepping::{sync_times, StepperConfig};
