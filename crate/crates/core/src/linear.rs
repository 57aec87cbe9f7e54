//! Matrix-free action of the linearised flow `𝒥𝓛(η)` on x-profiles.
//!
//! With `V = φ'' - 3φ`,
//!
//! ```text
//! 𝒥𝓛(η) v = Λ(ξ, η) v + 𝒥∂x(φ v_x) + 𝒥(V v),
//! Λ(ξ, η)  = i (c ξ³ + (c - 2κ) ξ + η²/ξ) / (1 + ξ²).
//! ```
//!
//! `𝒥∂x = (1 - ∂x²)⁻¹∂x²` has the bounded symbol `-ξ²/(1 + ξ²)`, i.e.
//! `𝒥∂x g = -g + (1 - ∂x²)⁻¹ g`, so the quasilinear part never forms a raw
//! third derivative. Profiles are complex x-coefficient vectors (the
//! transverse mode `e^{iηy}` is implicit).

use num_complex::Complex64;

use crate::soliton::SolitaryWave;
use crate::spectral::{Grid1D, XTransform};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `Λ(ξ, η)` with the zero mode and the Nyquist mode mapped to 0.
pub fn constant_symbol(grid: &Grid1D, c: f64, kappa: f64, eta: f64) -> Vec<Complex64> {
    let nyq = grid.nyquist_index();
    (0..grid.len())
        .map(|i| {
            if i == 0 || i == nyq {
                return ZERO;
            }
            let xi = grid.wavenumber(i);
            let num = c * xi.powi(3) + (c - 2.0 * kappa) * xi + eta * eta / xi;
            Complex64::new(0.0, num / (1.0 + xi * xi))
        })
        .collect()
}

/// Symbols of `𝒥` and `𝒥∂x` with zero and Nyquist modes removed.
pub fn j_symbols(grid: &Grid1D) -> (Vec<Complex64>, Vec<Complex64>) {
    let nyq = grid.nyquist_index();
    (0..grid.len())
        .map(|i| {
            if i == 0 || i == nyq {
                return (ZERO, ZERO);
            }
            let xi = grid.wavenumber(i);
            let s = 1.0 / (1.0 + xi * xi);
            (Complex64::new(0.0, xi * s), Complex64::new(-xi * xi * s, 0.0))
        })
        .unzip()
}

/// `iξ` with the Nyquist mode removed.
pub fn dx_symbol(grid: &Grid1D) -> Vec<Complex64> {
    let nyq = grid.nyquist_index();
    (0..grid.len())
        .map(|i| {
            if i == nyq {
                ZERO
            } else {
                Complex64::new(0.0, grid.wavenumber(i))
            }
        })
        .collect()
}

#[derive(Clone)]
pub struct LinearizedFlow {
    grid: Grid1D,
    c: f64,
    kappa: f64,
    phi: Vec<f64>,
    potential: Vec<f64>,
    j: Vec<Complex64>,
    jdx: Vec<Complex64>,
    dx: Vec<Complex64>,
    fft: XTransform,
}

impl LinearizedFlow {
    pub fn new(wave: &SolitaryWave) -> Self {
        let grid = *wave.grid();
        let (j, jdx) = j_symbols(&grid);
        Self {
            grid,
            c: wave.c(),
            kappa: wave.kappa(),
            phi: wave.q().to_vec(),
            potential: wave.q().iter().zip(wave.d2q()).map(|(q, q2)| q2 - 3.0 * q).collect(),
            j,
            jdx,
            dx: dx_symbol(&grid),
            fft: XTransform::new(grid.len()),
        }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    /// `φ'' - 3φ`.
    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn j_symbol(&self) -> &[Complex64] {
        &self.j
    }

    pub fn jdx_symbol(&self) -> &[Complex64] {
        &self.jdx
    }

    pub fn dx_symbol(&self) -> &[Complex64] {
        &self.dx
    }

    pub fn constant_symbol(&self, eta: f64) -> Vec<Complex64> {
        constant_symbol(&self.grid, self.c, self.kappa, eta)
    }

    /// Bound on the spectral radius of the variable-coefficient part,
    /// `max φ · ξ_max + max |V| / 2`.
    pub fn explicit_rate(&self) -> f64 {
        let phi = self.phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let pot = self.potential.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        phi * self.grid.max_wavenumber() + 0.5 * pot
    }

    /// Writes `𝒥∂x(φ v_x) + 𝒥(V v)` for the coefficient vector `v`.
    pub fn apply_variable(&self, v: &[Complex64], out: &mut [Complex64]) {
        let mut vx: Vec<Complex64> = v.iter().zip(&self.dx).map(|(a, b)| a * b).collect();
        let mut vv = v.to_vec();
        self.fft.inverse(&mut vx);
        self.fft.inverse(&mut vv);
        for i in 0..vx.len() {
            vx[i] *= self.phi[i];
            vv[i] *= self.potential[i];
        }
        self.fft.forward(&mut vx);
        self.fft.forward(&mut vv);
        for i in 0..out.len() {
            out[i] = self.jdx[i] * vx[i] + self.j[i] * vv[i];
        }
    }

    /// `𝒥𝓛(η) v`.
    pub fn apply(&self, eta: f64, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![ZERO; v.len()];
        self.apply_variable(v, &mut out);
        for ((o, l), vi) in out.iter_mut().zip(self.constant_symbol(eta)).zip(v) {
            *o += l * vi;
        }
        out
    }
}
