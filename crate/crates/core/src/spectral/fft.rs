use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plans(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(n), p.plan_fft_inverse(n))
    })
}

/// Length-`N` transform between nodal values on `[-L, L)` and Fourier-series
/// coefficients about `x = 0`:
///
/// ```text
/// f(x_j) = Σ_i c_i exp(i ξ_i x_j),   x_j = -L + j·h
/// ```
///
/// Shifting the origin from `-L` to `0` multiplies coefficient `i` by
/// `(-1)^i`, which is folded into both directions.
#[derive(Clone)]
pub struct XTransform {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl XTransform {
    pub fn new(n: usize) -> Self {
        let (fwd, inv) = plans(n);
        Self { n, fwd, inv }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Nodal values to coefficients, in place.
    pub fn forward(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.n);
        self.fwd.process(buf);
        let scale = 1.0 / self.n as f64;
        for (i, c) in buf.iter_mut().enumerate() {
            *c *= if i % 2 == 0 { scale } else { -scale };
        }
    }

    /// Coefficients to nodal values, in place.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.n);
        for c in buf.iter_mut().skip(1).step_by(2) {
            *c = -*c;
        }
        self.inv.process(buf);
    }

    pub fn forward_real(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }

    /// Inverse transform keeping only the real part.
    pub fn inverse_real(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut buf = coeffs.to_vec();
        self.inverse(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }
}

/// Plain periodic transform in `y` on `[0, a)` (no origin shift), normalised
/// so the forward direction yields Fourier-series coefficients.
#[derive(Clone)]
pub struct YTransform {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl YTransform {
    pub fn new(n: usize) -> Self {
        let (fwd, inv) = plans(n);
        Self { n, fwd, inv }
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.fwd.process(buf);
        let scale = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
    }

    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.inv.process(buf);
    }
}
