use num_complex::Complex64;

use super::{Grid2D, SpectralField, XTransform, YTransform};

/// 2D transform between nodal values on `[-L, L) × 𝕋_a` and mixed Fourier
/// coefficients `c[l·Nx + i]` (transverse index `l`, x-index `i`, both in FFT
/// order).
#[derive(Clone)]
pub struct Transform2D {
    nx: usize,
    ny: usize,
    x: XTransform,
    y: YTransform,
}

impl Transform2D {
    pub fn new(grid: &Grid2D) -> Self {
        Self {
            nx: grid.nx(),
            ny: grid.ny(),
            x: XTransform::new(grid.nx()),
            y: YTransform::new(grid.ny()),
        }
    }

    /// Coefficients to nodal values, in place (row `q` holds `y = y_q`).
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.columns(buf, |y, col| y.inverse(col));
        for row in buf.chunks_exact_mut(self.nx) {
            if row.iter().any(|c| c.re != 0.0 || c.im != 0.0) {
                self.x.inverse(row);
            }
        }
    }

    /// Nodal values to coefficients, in place.
    pub fn forward(&self, buf: &mut [Complex64]) {
        for row in buf.chunks_exact_mut(self.nx) {
            self.x.forward(row);
        }
        self.columns(buf, |y, col| y.forward(col));
    }

    fn columns(&self, buf: &mut [Complex64], f: impl Fn(&YTransform, &mut [Complex64])) {
        let mut col = vec![Complex64::new(0.0, 0.0); self.ny];
        for i in 0..self.nx {
            for (l, c) in col.iter_mut().enumerate() {
                *c = buf[l * self.nx + i];
            }
            f(&self.y, &mut col);
            for (l, c) in col.iter().enumerate() {
                buf[l * self.nx + i] = *c;
            }
        }
    }

    pub fn values_to_coefficients(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }

    pub fn coefficients_to_values(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut buf = coeffs.to_vec();
        self.inverse(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }
}

/// Real field on a [`Grid2D`], stored as mixed Fourier coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Field2D {
    grid: Grid2D,
    coeffs: Vec<Complex64>,
}

impl Field2D {
    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_values(grid: Grid2D, values: &[f64]) -> Self {
        assert_eq!(values.len(), grid.len());
        let coeffs = Transform2D::new(&grid).values_to_coefficients(values);
        Self { grid, coeffs }
    }

    /// Samples `f(x, y)` at the nodes.
    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let xs = grid.x.nodes();
        let mut values = Vec::with_capacity(grid.len());
        for q in 0..grid.ny() {
            let y = grid.y_node(q);
            values.extend(xs.iter().map(|&x| f(x, y)));
        }
        Self::from_values(grid, &values)
    }

    /// Builds a field from coefficients, projecting onto real data.
    pub fn from_coefficients(grid: Grid2D, coeffs: Vec<Complex64>) -> Self {
        assert_eq!(coeffs.len(), grid.len());
        let mut f = Self { grid, coeffs };
        f.enforce_hermitian();
        f
    }

    /// y-independent extension of a 1D field.
    pub fn from_profile(grid: Grid2D, profile: &SpectralField) -> Self {
        assert_eq!(profile.grid(), &grid.x);
        let mut f = Self::zeros(grid);
        f.coeffs[..grid.nx()].copy_from_slice(profile.coefficients());
        f
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coefficients(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// x-coefficients of transverse mode `m`.
    pub fn mode_row(&self, m: i64) -> &[Complex64] {
        let nx = self.grid.nx();
        let l = self.grid.y_index_of_mode(m);
        &self.coeffs[l * nx..(l + 1) * nx]
    }

    /// Nodal values, row-major with `y` as the slow index.
    pub fn values(&self) -> Vec<f64> {
        Transform2D::new(&self.grid).coefficients_to_values(&self.coeffs)
    }

    /// Enforces `c(-l, -i) = conj c(l, i)`.
    pub fn enforce_hermitian(&mut self) {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        for l in 0..ny {
            let lm = (ny - l) % ny;
            if lm < l {
                continue;
            }
            for i in 0..nx {
                let im = (nx - i) % nx;
                let (a, b) = (l * nx + i, lm * nx + im);
                if b < a {
                    continue;
                }
                let avg = (self.coeffs[a] + self.coeffs[b].conj()) * 0.5;
                self.coeffs[a] = avg;
                self.coeffs[b] = avg.conj();
            }
        }
    }

    /// `(2L·a Σ (1 + ξ² + η²)^s |c|²)^{1/2}`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        coefficient_sobolev_norm_2d(&self.grid, &self.coeffs, s)
    }

    /// 2/3-rule truncation in both directions.
    pub fn dealias(&self) -> Field2D {
        let mut out = self.clone();
        dealias_coefficients(&self.grid, &mut out.coeffs);
        out
    }

    /// Removes the normalized y-mean, i.e. zeroes every `m = 0` coefficient.
    pub fn project_offzero_y(&self) -> Field2D {
        let mut out = self.clone();
        out.coeffs[..self.grid.nx()].fill(Complex64::new(0.0, 0.0));
        out
    }

    /// The normalized y-mean `a⁻¹ ∫ u dy` as a 1D field.
    pub fn y_mean(&self) -> SpectralField {
        SpectralField::from_coefficients(self.grid.x, self.coeffs[..self.grid.nx()].to_vec())
    }

    /// Largest x-mean carried by a transverse mode `m ≠ 0`.
    pub fn kp_constraint_violation(&self) -> f64 {
        let nx = self.grid.nx();
        (1..self.grid.ny())
            .map(|l| self.coeffs[l * nx].norm())
            .fold(0.0, f64::max)
    }

    /// Zeroes the x-mean of every transverse mode `m ≠ 0`.
    pub fn project_kp_constraint(&mut self) {
        let nx = self.grid.nx();
        for l in 1..self.grid.ny() {
            self.coeffs[l * nx] = Complex64::new(0.0, 0.0);
        }
    }

    pub fn scaled(&self, a: f64) -> Field2D {
        Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
        }
    }

    pub fn add(&self, other: &Field2D) -> Field2D {
        Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Field2D) -> Field2D {
        Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
        }
    }

    /// Translates in x by `shift` (exact Fourier shift): `u(x - shift, y)`.
    pub fn shifted_x(&self, shift: f64) -> Field2D {
        let g = self.grid;
        let nx = g.nx();
        let phase: Vec<Complex64> = (0..nx)
            .map(|i| Complex64::from_polar(1.0, -g.x.wavenumber(i) * shift))
            .collect();
        let mut out = self.clone();
        for row in out.coeffs.chunks_exact_mut(nx) {
            for (i, c) in row.iter_mut().enumerate() {
                *c *= if i == g.x.nyquist_index() {
                    Complex64::new(phase[i].re, 0.0)
                } else {
                    phase[i]
                };
            }
        }
        out
    }
}

fn dealias_coefficients(grid: &Grid2D, coeffs: &mut [Complex64]) {
    let nx = grid.nx();
    for (l, row) in coeffs.chunks_exact_mut(nx).enumerate() {
        if !grid.is_y_resolved(l) {
            row.fill(Complex64::new(0.0, 0.0));
            continue;
        }
        for (i, c) in row.iter_mut().enumerate() {
            if !grid.x.is_resolved(i) {
                *c = Complex64::new(0.0, 0.0);
            }
        }
    }
}

pub(crate) fn coefficient_sobolev_norm_2d(grid: &Grid2D, coeffs: &[Complex64], s: f64) -> f64 {
    let nx = grid.nx();
    let xi2: Vec<f64> = grid.x.wavenumbers().iter().map(|x| x * x).collect();
    let mut sum = 0.0;
    for (l, row) in coeffs.chunks_exact(nx).enumerate() {
        let eta2 = grid.y_wavenumber(l).powi(2);
        for (c, x2) in row.iter().zip(&xi2) {
            let w = if s == 0.0 { 1.0 } else { (1.0 + x2 + eta2).powf(s) };
            sum += w * c.norm_sqr();
        }
    }
    (sum * grid.area()).sqrt()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use proptest::prelude::*;

    use super::*;
    use crate::spectral::Grid1D;

    fn grid() -> Grid2D {
        Grid2D::new(Grid1D::new(PI, 32).unwrap(), 1.0, 16).unwrap()
    }

    #[test]
    fn separable_mode_lands_in_one_coefficient_pair() {
        let g = grid();
        let f = Field2D::from_fn(g, |x, y| (2.0 * x).cos() * y.cos());
        for (idx, c) in f.coefficients().iter().enumerate() {
            let (l, i) = (idx / 32, idx % 32);
            let on = (l == 1 || l == 15) && (i == 2 || i == 30);
            if on {
                assert!((c.re - 0.25).abs() < 1e-14, "{l} {i} {c}");
            } else {
                assert!(c.norm() < 1e-14);
            }
        }
        assert!((f.sobolev_norm(0.0) - PI).abs() < 1e-12);
    }

    #[test]
    fn offzero_projection() {
        let g = grid();
        let flat = Field2D::from_fn(g, |x, _| x.sin());
        assert!(flat.project_offzero_y().sobolev_norm(0.0) < 1e-14);
        let wave = Field2D::from_fn(g, |x, y| y.cos() * x.sin());
        assert!(wave.project_offzero_y().sub(&wave).sobolev_norm(0.0) < 1e-14);
    }

    #[test]
    fn dealias_clears_high_transverse_modes() {
        let g = grid();
        let f = Field2D::from_fn(g, |x, y| (7.0 * y).cos() * x.cos() + (2.0 * y).sin());
        let d = f.dealias();
        let want = Field2D::from_fn(g, |_, y| (2.0 * y).sin());
        assert!(d.sub(&want).sobolev_norm(0.0) < 1e-13);
    }

    #[test]
    fn shift_matches_resampling() {
        let g = grid();
        let f = Field2D::from_fn(g, |x, y| (x.cos() + 0.3 * (3.0 * x).sin()) * (1.0 + y.sin()));
        let s = f.shifted_x(0.7);
        let want = Field2D::from_fn(g, |x, y| {
            ((x - 0.7).cos() + 0.3 * (3.0 * (x - 0.7)).sin()) * (1.0 + y.sin())
        });
        assert!(s.sub(&want).sobolev_norm(0.0) < 1e-12);
    }

    proptest! {
        #[test]
        fn roundtrip_and_reality(seed in prop::collection::vec(-1.0..1.0f64, 8)) {
            let g = grid();
            let f = Field2D::from_fn(g, |x, y| {
                seed[0] * (x + seed[1] * y).sin() + seed[2] * (2.0 * x).cos() * (seed[3] * 2.0 * y).cos()
                    + seed[4] * (seed[5] + y).sin() + seed[6] * (3.0 * x - 2.0 * y).cos() + seed[7]
            });
            let back = Field2D::from_values(g, &f.values());
            prop_assert!(back.sub(&f).sobolev_norm(0.0) < 1e-12);
            let mut buf = f.coefficients().to_vec();
            Transform2D::new(&g).inverse(&mut buf);
            prop_assert!(buf.iter().all(|c| c.im.abs() < 1e-12));
        }

        #[test]
        fn projection_is_idempotent_and_contracting(seed in prop::collection::vec(-1.0..1.0f64, 4)) {
            let g = grid();
            let f = Field2D::from_fn(g, |x, y| seed[0] * x.sin() + seed[1] * (x + y).cos() + seed[2] * (2.0 * y).sin() * x.cos() + seed[3]);
            let p = f.project_offzero_y();
            prop_assert!(p.project_offzero_y() == p);
            prop_assert!(p.sobolev_norm(0.0) <= f.sobolev_norm(0.0) + 1e-15);
        }
    }
}
