use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use super::Grid1D;
use crate::error::{Error, Result};

/// Relative size of the x-mean above which `∂x⁻¹`-type symbols refuse data.
pub const MEAN_TOLERANCE: f64 = 1e-12;

/// What a multiplier does with the `ξ = 0` coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZeroModePolicy {
    /// Output zero-mode is set to zero.
    Zero,
    /// Symbol is evaluated at `ξ = 0` like any other mode.
    Pass,
    /// Input must be mean-free (see [`MEAN_TOLERANCE`]); output zero-mode is zero.
    Reject,
}

/// Treatment of the unpaired Nyquist coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NyquistPolicy {
    /// Use the Hermitian part `Re m(ξ_N)`, which keeps real fields real.
    /// Odd symbols therefore annihilate the Nyquist mode.
    Hermitian,
    /// Annihilate the Nyquist mode.
    Zero,
}

type Symbol = dyn Fn(f64, f64) -> Complex64 + Send + Sync;

/// Fourier multiplier with symbol `m(ξ, η)`.
#[derive(Clone)]
pub struct Multiplier {
    name: &'static str,
    symbol: Arc<Symbol>,
    zero_mode: ZeroModePolicy,
    nyquist: NyquistPolicy,
}

impl fmt::Debug for Multiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Multiplier")
            .field("name", &self.name)
            .field("zero_mode", &self.zero_mode)
            .field("nyquist", &self.nyquist)
            .finish()
    }
}

impl Multiplier {
    pub fn new(
        name: &'static str,
        zero_mode: ZeroModePolicy,
        symbol: impl Fn(f64, f64) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name,
            symbol: Arc::new(symbol),
            zero_mode,
            nyquist: NyquistPolicy::Hermitian,
        }
    }

    pub fn with_nyquist(mut self, policy: NyquistPolicy) -> Self {
        self.nyquist = policy;
        self
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn zero_mode(&self) -> ZeroModePolicy {
        self.zero_mode
    }

    pub fn symbol(&self, xi: f64, eta: f64) -> Complex64 {
        (self.symbol)(xi, eta)
    }

    /// `∂x`
    pub fn x_derivative() -> Self {
        Self::new("dx", ZeroModePolicy::Zero, |xi, _| Complex64::new(0.0, xi))
    }

    /// `∂x²`
    pub fn x_second_derivative() -> Self {
        Self::new("dxx", ZeroModePolicy::Zero, |xi, _| Complex64::new(-xi * xi, 0.0))
    }

    /// `(1 - ∂x²)⁻¹`
    pub fn helmholtz_inverse() -> Self {
        Self::new("helmholtz_inverse", ZeroModePolicy::Pass, |xi, _| {
            Complex64::new(1.0 / (1.0 + xi * xi), 0.0)
        })
    }

    /// `𝒥 = (1 - ∂x²)⁻¹ ∂x`
    pub fn skew_j() -> Self {
        Self::new("J", ZeroModePolicy::Zero, |xi, _| {
            Complex64::new(0.0, xi / (1.0 + xi * xi))
        })
    }

    /// `∂x⁻²` on mean-free data.
    pub fn x_antiderivative2() -> Self {
        Self::new("dx^-2", ZeroModePolicy::Reject, |xi, _| {
            Complex64::new(-1.0 / (xi * xi), 0.0)
        })
    }

    /// `∂x⁻¹` on mean-free data.
    pub fn x_antiderivative() -> Self {
        Self::new("dx^-1", ZeroModePolicy::Reject, |xi, _| Complex64::new(0.0, -1.0 / xi))
    }

    /// `∂y²`
    pub fn y_second_derivative() -> Self {
        Self::new("dyy", ZeroModePolicy::Pass, |_, eta| Complex64::new(-eta * eta, 0.0))
    }

    /// Same operator with the zero-mode policy replaced (used where a
    /// projection convention, not an error, is wanted).
    pub fn with_zero_mode(mut self, policy: ZeroModePolicy) -> Self {
        self.zero_mode = policy;
        self
    }

    /// Symbol values on the grid (FFT ordering) at transverse wavenumber `eta`,
    /// with both policies applied.
    pub fn values_on(&self, grid: &Grid1D, eta: f64) -> Vec<Complex64> {
        let nyq = grid.nyquist_index();
        (0..grid.len())
            .map(|i| {
                if i == 0 {
                    match self.zero_mode {
                        ZeroModePolicy::Pass => self.symbol(0.0, eta),
                        _ => Complex64::new(0.0, 0.0),
                    }
                } else if i == nyq {
                    match self.nyquist {
                        NyquistPolicy::Hermitian => Complex64::new(self.symbol(grid.wavenumber(i), eta).re, 0.0),
                        NyquistPolicy::Zero => Complex64::new(0.0, 0.0),
                    }
                } else {
                    self.symbol(grid.wavenumber(i), eta)
                }
            })
            .collect()
    }

    /// Multiplies coefficients in place; `scale` is the magnitude the mean is
    /// compared against under [`ZeroModePolicy::Reject`].
    pub fn apply(&self, grid: &Grid1D, eta: f64, coeffs: &mut [Complex64], scale: f64) -> Result<()> {
        if self.zero_mode == ZeroModePolicy::Reject {
            check_mean_free(coeffs[0].norm(), scale)?;
        }
        for (c, m) in coeffs.iter_mut().zip(self.values_on(grid, eta)) {
            *c *= m;
        }
        Ok(())
    }

    /// `m(-ξ) = conj m(ξ)` on every paired grid mode.
    pub fn preserves_reality(&self, grid: &Grid1D, eta: f64, tol: f64) -> bool {
        let v = self.values_on(grid, eta);
        let n = grid.len();
        (1..n / 2).all(|i| (v[n - i] - v[i].conj()).norm() <= tol * (1.0 + v[i].norm())) && v[n / 2].im == 0.0
    }
}

fn check_mean_free(mean: f64, scale: f64) -> Result<()> {
    if mean > MEAN_TOLERANCE * scale.max(f64::MIN_POSITIVE) {
        let amplitude = if scale > 0.0 { mean / scale } else { mean };
        return Err(Error::NonzeroMean {
            amplitude,
            tolerance: MEAN_TOLERANCE,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_operator_symbols_are_hermitian() {
        let g = Grid1D::new(3.0, 64).unwrap();
        for m in [
            Multiplier::x_derivative(),
            Multiplier::x_second_derivative(),
            Multiplier::helmholtz_inverse(),
            Multiplier::skew_j(),
            Multiplier::x_antiderivative2(),
            Multiplier::x_antiderivative(),
        ] {
            assert!(m.preserves_reality(&g, 0.7, 1e-15), "{}", m.name());
        }
    }

    #[test]
    fn odd_symbols_drop_nyquist() {
        let g = Grid1D::new(3.0, 16).unwrap();
        assert_eq!(Multiplier::skew_j().values_on(&g, 0.0)[8], Complex64::new(0.0, 0.0));
        let d2 = Multiplier::x_second_derivative().values_on(&g, 0.0)[8];
        assert!((d2.re + g.max_wavenumber().powi(2)).abs() < 1e-12);
    }

    #[test]
    fn reject_policy_checks_relative_mean() {
        let g = Grid1D::new(3.0, 16).unwrap();
        let mut c = vec![Complex64::new(0.0, 0.0); 16];
        c[0] = Complex64::new(1e-3, 0.0);
        c[1] = Complex64::new(1.0, 0.0);
        assert!(matches!(
            Multiplier::x_antiderivative2().apply(&g, 0.0, &mut c, 1.0),
            Err(Error::NonzeroMean { .. })
        ));
        c[0] = Complex64::new(1e-14, 0.0);
        Multiplier::x_antiderivative2().apply(&g, 0.0, &mut c, 1.0).unwrap();
        assert_eq!(c[0], Complex64::new(0.0, 0.0));
    }
}
