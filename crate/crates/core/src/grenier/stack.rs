use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{coefficient_sobolev_norm, Field2D, Grid1D, Grid2D, XTransform};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Field with finitely many transverse harmonics of a base frequency `β`:
/// `u(x, y) = Σ_{|j| ≤ K} u_j(x) e^{i j β y}`, each `u_j` stored as x-Fourier
/// coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeStack {
    grid: Grid1D,
    max_index: usize,
    base_frequency: f64,
    entries: Vec<Vec<Complex64>>,
}

/// Pointwise bilinear form used by [`mode_product`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProductForm {
    /// `a_x b_x`
    GradGrad,
    /// `a b_xx`
    IdDxx,
    /// `a b_x`
    IdDx,
    /// `a b`
    IdId,
}

impl ModeStack {
    pub fn zeros(grid: Grid1D, max_index: usize, base_frequency: f64) -> Self {
        Self {
            grid,
            max_index,
            base_frequency,
            entries: vec![vec![ZERO; grid.len()]; 2 * max_index + 1],
        }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn max_index(&self) -> usize {
        self.max_index
    }

    /// `β = m₀k₀`.
    pub fn base_frequency(&self) -> f64 {
        self.base_frequency
    }

    fn slot(&self, j: i64) -> Option<usize> {
        (j.unsigned_abs() as usize <= self.max_index).then(|| (j + self.max_index as i64) as usize)
    }

    /// Entry `u_j`; panics if `|j| > K`.
    pub fn entry(&self, j: i64) -> &[Complex64] {
        &self.entries[self.slot(j).expect("index within the stack")]
    }

    pub fn entry_mut(&mut self, j: i64) -> &mut [Complex64] {
        let s = self.slot(j).expect("index within the stack");
        &mut self.entries[s]
    }

    /// Sets `u_j = coeffs` and `u_{-j}` to its real-field partner.
    pub fn set_pair(&mut self, j: i64, coeffs: &[Complex64]) {
        let n = self.grid.len();
        self.entry_mut(j).copy_from_slice(coeffs);
        let partner: Vec<Complex64> = (0..n).map(|i| coeffs[(n - i) % n].conj()).collect();
        if j == 0 {
            let e = self.entry_mut(0);
            for i in 0..n {
                e[i] = 0.5 * (coeffs[i] + partner[i]);
            }
        } else {
            self.entry_mut(-j).copy_from_slice(&partner);
        }
    }

    /// Indices with a nonzero entry.
    pub fn support(&self) -> Vec<i64> {
        (-(self.max_index as i64)..=self.max_index as i64)
            .filter(|&j| self.entry(j).iter().any(|c| *c != ZERO))
            .collect()
    }

    /// `max_j |u_j|_s`.
    pub fn norm(&self, s: f64) -> f64 {
        self.entries
            .iter()
            .map(|e| coefficient_sobolev_norm(&self.grid, e, s))
            .fold(0.0, f64::max)
    }

    /// Largest violation of `u_{-j}(ξ) = conj u_j(-ξ)`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.grid.len();
        let k = self.max_index as i64;
        let mut worst: f64 = 0.0;
        for j in -k..=k {
            let (a, b) = (self.entry(j), self.entry(-j));
            for i in 0..n {
                worst = worst.max((a[i] - b[(n - i) % n].conj()).norm());
            }
        }
        worst
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.entries.iter_mut().flatten().for_each(|c| *c *= a);
        out
    }

    /// Sum with another stack on the same grid and base frequency; the
    /// result holds `max(K, K')` modes.
    pub fn add(&self, other: &ModeStack) -> ModeStack {
        let k = self.max_index.max(other.max_index);
        let mut out = ModeStack::zeros(self.grid, k, self.base_frequency);
        for s in [self, other] {
            let kk = s.max_index as i64;
            for j in -kk..=kk {
                for (o, v) in out.entry_mut(j).iter_mut().zip(s.entry(j)) {
                    *o += v;
                }
            }
        }
        out
    }

    /// Flat concatenation `[u_{-K}, …, u_K]`.
    pub fn as_flat(&self) -> Vec<Complex64> {
        self.entries.concat()
    }

    pub fn from_flat(grid: Grid1D, max_index: usize, base_frequency: f64, flat: &[Complex64]) -> Self {
        let n = grid.len();
        assert_eq!(flat.len(), n * (2 * max_index + 1));
        Self {
            grid,
            max_index,
            base_frequency,
            entries: flat.chunks_exact(n).map(<[Complex64]>::to_vec).collect(),
        }
    }

    /// Real field on `grid`, whose base frequency must divide `β`.
    pub fn synthesize(&self, grid: &Grid2D) -> Result<Field2D> {
        if grid.x != self.grid {
            return Err(Error::Grid("stack and target x-grids differ".into()));
        }
        let ratio = self.base_frequency / grid.k0();
        let step = ratio.round();
        if (ratio - step).abs() > 1e-9 || step < 1.0 {
            return Err(Error::Grid(format!(
                "stack frequency {} is not a multiple of k0 = {}",
                self.base_frequency,
                grid.k0()
            )));
        }
        let nx = grid.nx();
        let k = self.max_index as i64;
        let top = (k as f64 * step) as usize;
        if top > 0 && 2 * top >= grid.ny() {
            return Err(Error::Truncation {
                needed: top,
                available: (grid.ny() - 1) / 2,
            });
        }
        let mut coeffs = vec![ZERO; grid.len()];
        for j in -k..=k {
            let l = grid.y_index_of_mode(j * step as i64);
            coeffs[l * nx..(l + 1) * nx].copy_from_slice(self.entry(j));
        }
        Ok(Field2D::from_coefficients(*grid, coeffs))
    }
}

/// `out_n = Σ_{j + l = n} form(a_j, b_l)` with x-products dealiased by the
/// 2/3 rule. Errors with [`Error::Truncation`] if the combined support does
/// not fit in `out_max`.
pub fn mode_product(a: &ModeStack, b: &ModeStack, form: ProductForm, out_max: usize) -> Result<ModeStack> {
    let mut out = ModeStack::zeros(a.grid, out_max, a.base_frequency);
    accumulate_product(a, b, form, 1.0, &mut out)?;
    Ok(out)
}

/// `out += scale · mode_product(a, b, form)`.
pub(crate) fn accumulate_product(
    a: &ModeStack,
    b: &ModeStack,
    form: ProductForm,
    scale: f64,
    out: &mut ModeStack,
) -> Result<()> {
    if a.grid != b.grid || a.grid != out.grid {
        return Err(Error::Grid("mode stacks live on different grids".into()));
    }
    let (sa, sb) = (a.support(), b.support());
    let needed = sa
        .iter()
        .flat_map(|j| sb.iter().map(move |l| (j + l).unsigned_abs() as usize))
        .max()
        .unwrap_or(0);
    if needed > out.max_index {
        return Err(Error::Truncation {
            needed,
            available: out.max_index,
        });
    }
    let g = a.grid;
    let n = g.len();
    let fft = XTransform::new(n);
    let nyq = g.nyquist_index();
    let nodal = |c: &[Complex64], order: u32| {
        let mut buf: Vec<Complex64> = c
            .iter()
            .enumerate()
            .map(|(i, v)| {
                if order > 0 && i == nyq {
                    return ZERO;
                }
                v * Complex64::new(0.0, g.wavenumber(i)).powu(order)
            })
            .collect();
        fft.inverse(&mut buf);
        buf
    };
    let (oa, ob) = match form {
        ProductForm::GradGrad => (1, 1),
        ProductForm::IdDxx => (0, 2),
        ProductForm::IdDx => (0, 1),
        ProductForm::IdId => (0, 0),
    };
    let av: Vec<(i64, Vec<Complex64>)> = sa.iter().map(|&j| (j, nodal(a.entry(j), oa))).collect();
    let bv: Vec<(i64, Vec<Complex64>)> = sb.iter().map(|&l| (l, nodal(b.entry(l), ob))).collect();
    let mut buf = vec![ZERO; n];
    for (j, x) in &av {
        for (l, y) in &bv {
            for i in 0..n {
                buf[i] = x[i] * y[i];
            }
            fft.forward(&mut buf);
            let e = out.entry_mut(j + l);
            for i in 0..n {
                if g.is_resolved(i) {
                    e[i] += buf[i] * scale;
                }
            }
        }
    }
    Ok(())
}
