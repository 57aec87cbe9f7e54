use std::sync::OnceLock;

use num_complex::Complex64;

use super::{Grid1D, Multiplier, XTransform};
use crate::error::Result;

/// Real field on a [`Grid1D`]: nodal values plus lazily computed
/// Fourier-series coefficients.
#[derive(Debug)]
pub struct SpectralField {
    grid: Grid1D,
    values: Vec<f64>,
    coeffs: OnceLock<Vec<Complex64>>,
}

impl Clone for SpectralField {
    fn clone(&self) -> Self {
        let coeffs = OnceLock::new();
        if let Some(c) = self.coeffs.get() {
            let _ = coeffs.set(c.clone());
        }
        Self {
            grid: self.grid,
            values: self.values.clone(),
            coeffs,
        }
    }
}

impl PartialEq for SpectralField {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.values == other.values
    }
}

impl SpectralField {
    pub fn from_values(grid: Grid1D, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len(), "value count does not match grid");
        Self {
            grid,
            values,
            coeffs: OnceLock::new(),
        }
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Self {
        Self::from_values(grid, grid.nodes().into_iter().map(f).collect())
    }

    pub fn zeros(grid: Grid1D) -> Self {
        Self::from_values(grid, vec![0.0; grid.len()])
    }

    /// Builds a real field from coefficients, projecting onto Hermitian
    /// symmetric data first (`c_{-n} = conj c_n`, real Nyquist).
    pub fn from_coefficients(grid: Grid1D, mut coeffs: Vec<Complex64>) -> Self {
        hermitian_project(&mut coeffs);
        let values = XTransform::new(grid.len()).inverse_real(&coeffs);
        let cell = OnceLock::new();
        let _ = cell.set(coeffs);
        Self {
            grid,
            values,
            coeffs: cell,
        }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn coefficients(&self) -> &[Complex64] {
        self.coeffs
            .get_or_init(|| XTransform::new(self.grid.len()).forward_real(&self.values))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Applies a multiplier; the result is re-projected onto real data.
    pub fn apply(&self, m: &Multiplier) -> Result<SpectralField> {
        let mut c = self.coefficients().to_vec();
        m.apply(&self.grid, 0.0, &mut c, self.max_abs())?;
        Ok(Self::from_coefficients(self.grid, c))
    }

    /// Trapezoidal `∫ f g dx` over the period.
    pub fn inner(&self, other: &SpectralField) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>() * self.grid.spacing()
    }

    pub fn sub(&self, other: &SpectralField) -> SpectralField {
        Self::from_values(
            self.grid,
            self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        )
    }
}

pub(crate) fn hermitian_project(c: &mut [Complex64]) {
    let n = c.len();
    c[0].im = 0.0;
    c[n / 2].im = 0.0;
    for i in 1..n / 2 {
        let avg = (c[i] + c[n - i].conj()) * 0.5;
        c[i] = avg;
        c[n - i] = avg.conj();
    }
}

/// `(1 - ∂x²)⁻¹ f`
pub fn helmholtz_inverse(f: &SpectralField) -> SpectralField {
    f.apply(&Multiplier::helmholtz_inverse())
        .expect("helmholtz inverse is defined on every mode")
}

/// `𝒥 f = (1 - ∂x²)⁻¹ ∂x f`
pub fn apply_j(f: &SpectralField) -> SpectralField {
    f.apply(&Multiplier::skew_j()).expect("J is defined on every mode")
}

pub fn x_derivative(f: &SpectralField) -> SpectralField {
    f.apply(&Multiplier::x_derivative())
        .expect("∂x is defined on every mode")
}

pub fn x_second_derivative(f: &SpectralField) -> SpectralField {
    f.apply(&Multiplier::x_second_derivative())
        .expect("∂x² is defined on every mode")
}

/// `∂x⁻² f`; errors with [`crate::Error::NonzeroMean`] unless `f` is mean-free.
pub fn x_antiderivative2(f: &SpectralField) -> Result<SpectralField> {
    f.apply(&Multiplier::x_antiderivative2())
}

/// 2/3-rule truncation: modes with `|n| > N/3` are removed.
pub fn dealias(f: &SpectralField) -> SpectralField {
    let g = *f.grid();
    let mut c = f.coefficients().to_vec();
    for (i, ci) in c.iter_mut().enumerate() {
        if !g.is_resolved(i) {
            *ci = Complex64::new(0.0, 0.0);
        }
    }
    SpectralField::from_coefficients(g, c)
}

/// `(Σ (1 + ξ²)^s |c_n|² · 2L)^{1/2}`, which equals the continuum `H^s`
/// norm of the periodic interpolant.
pub fn sobolev_norm(f: &SpectralField, s: f64) -> f64 {
    coefficient_sobolev_norm(f.grid(), f.coefficients(), s)
}

pub(crate) fn coefficient_sobolev_norm(g: &Grid1D, c: &[Complex64], s: f64) -> f64 {
    let sum: f64 = c
        .iter()
        .enumerate()
        .map(|(i, ci)| {
            let xi = g.wavenumber(i);
            (1.0 + xi * xi).powf(s) * ci.norm_sqr()
        })
        .sum();
    (sum * 2.0 * g.half_length()).sqrt()
}
