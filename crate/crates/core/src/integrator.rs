//! Fourth-order integrating-factor Runge–Kutta (Lawson RK4) for
//! `u' = Λ u + N(t, u)` with diagonal `Λ` in a spectral basis.
//!
//! The constant-coefficient part is advanced exactly; `N` is treated with
//! the classical four-stage scheme in the transformed variable
//! `e^{-Λt} u`. All states are flat complex coefficient vectors so the same
//! stepper drives the 2D solver and the mode-stack hierarchy.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Real-axis extent of the classical RK4 stability region along the
/// imaginary axis (`2√2`).
pub const RK4_IMAGINARY_LIMIT: f64 = 2.0 * std::f64::consts::SQRT_2;

pub struct LawsonRk4 {
    dt: f64,
    half: Vec<Complex64>,
    full: Vec<Complex64>,
    scratch: [Vec<Complex64>; 5],
}

impl LawsonRk4 {
    /// `symbol` holds the diagonal of `Λ`.
    pub fn new(symbol: &[Complex64], dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Parameter(format!("time step must be positive, got {dt}")));
        }
        let half: Vec<Complex64> = symbol.iter().map(|l| (l * (0.5 * dt)).exp()).collect();
        let full = half.iter().map(|e| e * e).collect();
        let n = symbol.len();
        let z = vec![Complex64::new(0.0, 0.0); n];
        Ok(Self {
            dt,
            half,
            full,
            scratch: [z.clone(), z.clone(), z.clone(), z.clone(), z],
        })
    }

    /// Errors with [`Error::Stability`] when `dt·rate` leaves the RK4
    /// stability interval, `rate` being a bound on the spectral radius of
    /// the explicit part.
    pub fn check_stability(dt: f64, rate: f64) -> Result<()> {
        let limit = RK4_IMAGINARY_LIMIT / rate.max(f64::MIN_POSITIVE);
        if dt > limit {
            return Err(Error::Stability { dt, limit });
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.half.len()
    }

    pub fn is_empty(&self) -> bool {
        self.half.is_empty()
    }

    /// Advances `u` from `t` to `t + dt`; `rhs(t, u, out)` writes `N(t, u)`.
    pub fn step<F>(&mut self, t: f64, u: &mut [Complex64], mut rhs: F)
    where
        F: FnMut(f64, &[Complex64], &mut [Complex64]),
    {
        let dt = self.dt;
        let h2 = 0.5 * dt;
        let [a, b, c, d, w] = &mut self.scratch;
        let (e, e2) = (&self.half, &self.full);

        rhs(t, u, a);
        for i in 0..u.len() {
            w[i] = e[i] * (u[i] + a[i] * h2);
        }
        rhs(t + h2, w, b);
        for i in 0..u.len() {
            w[i] = e[i] * u[i] + b[i] * h2;
        }
        rhs(t + h2, w, c);
        for i in 0..u.len() {
            w[i] = e2[i] * u[i] + e[i] * c[i] * dt;
        }
        rhs(t + dt, w, d);
        let sixth = dt / 6.0;
        for i in 0..u.len() {
            u[i] = e2[i] * u[i] + (e2[i] * a[i] + e[i] * (b[i] + c[i]) * 2.0 + d[i]) * sixth;
        }
    }
}
