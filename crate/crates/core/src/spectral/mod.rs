//! Periodic grids, transforms and Fourier multipliers.

mod fft;
mod field;
mod field2d;
mod grid;
mod multiplier;

pub use fft::{XTransform, YTransform};
pub(crate) use field::coefficient_sobolev_norm;
pub use field::{
    apply_j, dealias, helmholtz_inverse, sobolev_norm, x_antiderivative2, x_derivative, x_second_derivative,
    SpectralField,
};
pub(crate) use field2d::coefficient_sobolev_norm_2d;
pub use field2d::{Field2D, Transform2D};
pub use grid::{Grid1D, Grid2D};
pub use multiplier::{Multiplier, NyquistPolicy, ZeroModePolicy, MEAN_TOLERANCE};
