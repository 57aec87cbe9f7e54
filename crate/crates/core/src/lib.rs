//! Numerical laboratory for line solitary waves of the Camassa–Holm–KP-I
//! equation
//!
//! ```text
//! [(1 - ∂x²) u_t + 3 u u_x + 2κ u_x - 2 u_x u_xx - u u_xxx]_x - u_yy = 0
//! ```
//!
//! The crate is organised bottom-up:
//!
//! * [`spectral`]: periodic grids, FFT transforms and Fourier multipliers.
//! * [`soliton`]: the Camassa–Holm solitary wave `Q_c` and its checks.
//! * [`linear`]: the linearised flow `𝒥𝓛(η)` acting on x-profiles.
//! * [`stability`]: dense operator matrices, unstable branch scans, the four
//!   sufficient conditions for transverse instability and the asymptotic
//!   characteristic polynomial.
//! * [`grenier`]: the high-order approximate solution `v^ap`.
//! * [`sim`]: the full nonlinear CH-KP-I solver in the moving frame.
//! * [`experiment`]: end-to-end escape-time experiments and report output.

// `!(x > 0.0)` is used deliberately so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod grenier;
pub mod integrator;
pub mod linear;
pub mod sim;
pub mod soliton;
pub mod spectral;
pub mod stability;

pub use error::{Error, Result};
pub use grenier::{HierarchyResult, ModeStack};
pub use linear::LinearizedFlow;
pub use sim::{SimState, Simulator};
pub use soliton::{PhysicalParams, SolitaryWave};
pub use spectral::{Field2D, Grid1D, Grid2D, Multiplier, SpectralField};
pub use stability::{ConditionReport, EigenBranch, OperatorMatrix, UnstableMode};

pub use num_complex::Complex64 as C64;
