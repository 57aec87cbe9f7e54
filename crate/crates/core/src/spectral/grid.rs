use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform periodic grid on `[-L, L)` with `N` nodes, `N` a power of two.
///
/// Arrays indexed by this grid use FFT ordering for wavenumbers: index `i`
/// carries the integer mode `i` for `i < N/2` and `i - N` otherwise, so the
/// Nyquist mode `-N/2` sits at index `N/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    half_length: f64,
    n: usize,
}

impl Grid1D {
    pub fn new(half_length: f64, n: usize) -> Result<Self> {
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(Error::Grid(format!("half length must be positive, got {half_length}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::Grid(format!("node count must be a power of two >= 8, got {n}")));
        }
        Ok(Self { half_length, n })
    }

    /// Domain long enough for a solitary wave of speed `c` to decay far below
    /// round-off at the boundary: `L = 40 / sqrt(1 - 2κ/c)`.
    pub fn for_wave(c: f64, kappa: f64, n: usize) -> Result<Self> {
        let rate = (1.0 - 2.0 * kappa / c).sqrt();
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::Parameter(format!(
                "need c > 2κ > 0 to size the grid, got c = {c}, κ = {kappa}"
            )));
        }
        Self::new(40.0 / rate, n)
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / self.n as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        -self.half_length + i as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Index of the node at `x = 0`.
    pub fn origin_index(&self) -> usize {
        self.n / 2
    }

    pub fn nyquist_index(&self) -> usize {
        self.n / 2
    }

    /// Signed integer mode carried by FFT index `i`.
    pub fn mode(&self, i: usize) -> i64 {
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// FFT index carrying the signed mode `m` (taken modulo `N`).
    pub fn index_of_mode(&self, m: i64) -> usize {
        m.rem_euclid(self.n as i64) as usize
    }

    pub fn fundamental(&self) -> f64 {
        PI / self.half_length
    }

    pub fn wavenumber(&self, i: usize) -> f64 {
        self.mode(i) as f64 * self.fundamental()
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.wavenumber(i)).collect()
    }

    /// Largest wavenumber magnitude on the grid (the Nyquist wavenumber).
    pub fn max_wavenumber(&self) -> f64 {
        self.n as f64 / 2.0 * self.fundamental()
    }

    /// Modes kept by the 2/3 rule: `|n| <= N/3`.
    pub fn is_resolved(&self, i: usize) -> bool {
        3 * self.mode(i).unsigned_abs() as usize <= self.n
    }
}

/// Grid on `[-L, L) × 𝕋_a` with transverse period `a = 2π/k0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub x: Grid1D,
    k0: f64,
    ny: usize,
}

impl Grid2D {
    pub fn new(x: Grid1D, k0: f64, ny: usize) -> Result<Self> {
        if !(k0.is_finite() && k0 > 0.0) {
            return Err(Error::Grid(format!(
                "transverse base frequency must be positive, got {k0}"
            )));
        }
        if ny < 4 || ny % 2 != 0 {
            return Err(Error::Grid(format!(
                "transverse node count must be even and >= 4, got {ny}"
            )));
        }
        Ok(Self { x, k0, ny })
    }

    pub fn k0(&self) -> f64 {
        self.k0
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn nx(&self) -> usize {
        self.x.len()
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.k0
    }

    pub fn y_spacing(&self) -> f64 {
        self.period() / self.ny as f64
    }

    pub fn y_node(&self, l: usize) -> f64 {
        l as f64 * self.y_spacing()
    }

    /// Signed transverse mode at FFT index `l`.
    pub fn y_mode(&self, l: usize) -> i64 {
        if l < self.ny / 2 {
            l as i64
        } else {
            l as i64 - self.ny as i64
        }
    }

    pub fn y_index_of_mode(&self, m: i64) -> usize {
        m.rem_euclid(self.ny as i64) as usize
    }

    pub fn y_wavenumber(&self, l: usize) -> f64 {
        self.y_mode(l) as f64 * self.k0
    }

    /// Largest transverse mode kept by the 2/3 rule.
    pub fn max_resolved_y_mode(&self) -> usize {
        self.ny / 3
    }

    pub fn is_y_resolved(&self, l: usize) -> bool {
        3 * self.y_mode(l).unsigned_abs() as usize <= self.ny
    }

    /// Quadrature weight `dx·dy` of one node.
    pub fn cell_area(&self) -> f64 {
        self.x.spacing() * self.y_spacing()
    }

    /// Area of the whole periodic domain, `2L·a`.
    pub fn area(&self) -> f64 {
        2.0 * self.x.half_length() * self.period()
    }

    pub fn len(&self) -> usize {
        self.nx() * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_are_uniform_and_start_at_minus_l() {
        let g = Grid1D::new(PI, 16).unwrap();
        let x = g.nodes();
        assert_eq!(x[0], -PI);
        for w in x.windows(2) {
            assert!((w[1] - w[0] - g.spacing()).abs() < 1e-14);
        }
        assert!(x[g.origin_index()].abs() < 1e-15);
    }

    #[test]
    fn wavenumbers_symmetric_except_nyquist() {
        let g = Grid1D::new(2.0, 32).unwrap();
        let xi = g.wavenumbers();
        for i in 1..16 {
            assert_eq!(xi[i], -xi[32 - i]);
        }
        assert_eq!(g.mode(16), -16);
        assert_eq!(xi[0], 0.0);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid1D::new(1.0, 12).is_err());
        assert!(Grid1D::new(-1.0, 16).is_err());
        assert!(Grid1D::for_wave(2.0, 1.0, 64).is_err());
        let g = Grid1D::new(1.0, 16).unwrap();
        assert!(Grid2D::new(g, 0.5, 5).is_err());
    }

    #[test]
    fn transverse_period_times_k0_is_two_pi() {
        let g = Grid2D::new(Grid1D::new(10.0, 64).unwrap(), 0.37, 16).unwrap();
        assert!((g.period() * g.k0() - 2.0 * PI).abs() < 1e-15);
        assert_eq!(g.y_mode(8), -8);
        assert_eq!(g.y_index_of_mode(-1), 15);
    }
}
