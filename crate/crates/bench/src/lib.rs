//! Shared fixtures for the criterion benchmarks.

use chkp_core::soliton::compute_soliton;
use chkp_core::{Field2D, Grid1D, Grid2D, SolitaryWave};

/// Reference speed and capillarity parameter.
pub const C: f64 = 3.0;
pub const KAPPA: f64 = 1.0;
/// Transverse wavenumber near the most unstable one.
pub const K0: f64 = 0.2;

pub fn reference_wave(nx: usize) -> SolitaryWave {
    compute_soliton(C, KAPPA, Grid1D::for_wave(C, KAPPA, nx).expect("valid grid")).expect("soliton converges")
}

/// Smooth mean-free perturbation satisfying the KP constraint.
pub fn smooth_perturbation(grid: Grid2D, amp: f64) -> Field2D {
    let k0 = grid.k0();
    let mut f = Field2D::from_fn(grid, |x, y| {
        let g = (-(x / 6.0).powi(2)).exp();
        amp * g * (1.0 + 0.5 * (k0 * y).cos()) * (x / 4.0).sin()
    });
    f.project_kp_constraint();
    f
}
