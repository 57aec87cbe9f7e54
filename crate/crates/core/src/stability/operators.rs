use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::soliton::SolitaryWave;
use crate::spectral::{Grid1D, XTransform};

/// Which operator a matrix discretizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorTag {
    /// `H_c = -∂x((c - φ)∂x) + φ'' - 3φ - 2κ + c`
    Hc,
    /// `𝓛(k) = H_c - k²∂x⁻²`
    Lk,
    /// `𝒥 = (1 - ∂x²)⁻¹∂x`
    Jop,
    /// `𝓛̃(k) = 𝒥𝓛(k)𝒥*`
    LtildeK,
    /// `n_∞(k) = c∂x⁴ - (c - 2κ)∂x² + k²`
    NK,
    /// `𝒥𝓛(k)`
    JLk,
}

/// Coordinates a matrix is expressed in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    /// Nodal values on all `N` grid points.
    Collocation,
    /// Orthonormal real Fourier modes `cos(ξ_n x), sin(ξ_n x)`,
    /// `1 ≤ n < N/2` (mean and Nyquist mode excluded), dimension `N - 2`.
    MeanFreeFourier,
}

/// Dense real matrix with its provenance.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    pub tag: OperatorTag,
    pub k: f64,
    pub basis: Basis,
    pub matrix: Mat<f64>,
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn frobenius(&self) -> f64 {
        self.matrix.norm_l2()
    }

    /// `‖M - Mᵀ‖ / ‖M‖`.
    pub fn symmetry_defect(&self) -> f64 {
        let m = &self.matrix;
        let d = m - m.transpose();
        d.norm_l2() / m.norm_l2().max(f64::MIN_POSITIVE)
    }

    /// `‖M + Mᵀ‖ / ‖M‖`.
    pub fn skew_defect(&self) -> f64 {
        let m = &self.matrix;
        let d = m + m.transpose();
        d.norm_l2() / m.norm_l2().max(f64::MIN_POSITIVE)
    }

    /// Eigenvalues of the symmetric part, ascending.
    pub fn symmetric_eigenvalues(&self) -> Result<Vec<f64>> {
        let m = &self.matrix;
        let sym = (m + m.transpose()) * faer::Scale(0.5);
        sym.self_adjoint_eigenvalues(faer::Side::Lower)
            .map_err(|e| Error::Convergence(format!("{e:?}")))
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.symmetric_eigenvalues()?[0])
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let m = &self.matrix;
        (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum())
            .collect()
    }
}

/// Per-wave cache of everything needed to assemble the stability operators
/// quickly: the Fourier basis data and `L0 = Bᵀ H_c B`.
#[derive(Clone, Debug)]
pub struct WaveOperators {
    grid: Grid1D,
    c: f64,
    kappa: f64,
    /// `ξ` for every basis column (`cos_n` and `sin_n` share `ξ_n`).
    xi: Vec<f64>,
    l0: Mat<f64>,
}

/// Number of basis functions of [`Basis::MeanFreeFourier`] on `grid`.
pub fn basis_dim(grid: &Grid1D) -> usize {
    grid.len() - 2
}

fn partner(p: usize) -> usize {
    p ^ 1
}

fn is_cos(p: usize) -> bool {
    p % 2 == 0
}

/// Mode number `n` of basis column `p`.
fn mode_of(p: usize) -> usize {
    p / 2 + 1
}

impl WaveOperators {
    pub fn new(wave: &SolitaryWave) -> Self {
        let grid = *wave.grid();
        let (c, kappa) = (wave.c(), wave.kappa());
        let xi: Vec<f64> = (0..basis_dim(&grid)).map(|p| grid.wavenumber(mode_of(p))).collect();
        let coef: Vec<f64> = wave.q().iter().map(|q| c - q).collect();
        let pot: Vec<f64> = wave
            .q()
            .iter()
            .zip(wave.d2q())
            .map(|(q, q2)| q2 - 3.0 * q - 2.0 * kappa + c)
            .collect();
        let a = multiplication_matrix(&grid, &coef);
        let w = multiplication_matrix(&grid, &pot);
        let dim = xi.len();
        // (DB)ᵀ diag(c - φ) (DB) with D_B e_p = σ_p ξ_p e_{p'}.
        let sign = |p: usize| if is_cos(p) { -1.0 } else { 1.0 };
        let l0 = Mat::from_fn(dim, dim, |p, q| {
            sign(p) * sign(q) * xi[p] * xi[q] * a[(partner(p), partner(q))] + w[(p, q)]
        });
        Self { grid, c, kappa, xi, l0 }
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

    pub fn dim(&self) -> usize {
        self.xi.len()
    }

    pub fn basis_wavenumbers(&self) -> &[f64] {
        &self.xi
    }

    /// `Bᵀ H_c B`.
    pub fn l0(&self) -> &Mat<f64> {
        &self.l0
    }

    /// Symbol of `𝒥` restricted to a `(cos_n, sin_n)` pair: `ξ/(1 + ξ²)`.
    fn s_j(&self, p: usize) -> f64 {
        self.xi[p] / (1.0 + self.xi[p] * self.xi[p])
    }

    /// `𝓛(k) = L0 + k² diag(1/ξ²)`; `k = 0` is rejected.
    pub fn assemble_lk(&self, k: f64) -> Result<OperatorMatrix> {
        if k == 0.0 {
            return Err(Error::ZeroFrequency);
        }
        Ok(OperatorMatrix {
            tag: OperatorTag::Lk,
            k,
            basis: Basis::MeanFreeFourier,
            matrix: self.lk_unchecked(k),
        })
    }

    fn lk_unchecked(&self, k: f64) -> Mat<f64> {
        let mut m = self.l0.clone();
        for p in 0..self.dim() {
            m[(p, p)] += k * k / (self.xi[p] * self.xi[p]);
        }
        m
    }

    /// `𝒥` in the Fourier basis: `𝒥 cos_n = -s_n sin_n`, `𝒥 sin_n = s_n cos_n`.
    pub fn assemble_j(&self) -> OperatorMatrix {
        let dim = self.dim();
        let mut m = Mat::zeros(dim, dim);
        for p in 0..dim {
            let s = self.s_j(p);
            // column p is the image of e_p
            m[(partner(p), p)] = if is_cos(p) { -s } else { s };
        }
        OperatorMatrix {
            tag: OperatorTag::Jop,
            k: 0.0,
            basis: Basis::MeanFreeFourier,
            matrix: m,
        }
    }

    /// `𝒥𝓛(k)`, exploiting the 2×2 block structure of `𝒥`.
    pub fn assemble_jl(&self, k: f64) -> OperatorMatrix {
        let lk = self.lk_unchecked(k);
        let dim = self.dim();
        let m = Mat::from_fn(dim, dim, |p, q| {
            // (𝒥X)_{pq} = 𝒥_{p p'} X_{p' q}; 𝒥_{cos, sin} = s, 𝒥_{sin, cos} = -s.
            let s = self.s_j(p);
            let jpp = if is_cos(p) { s } else { -s };
            jpp * lk[(partner(p), q)]
        });
        OperatorMatrix {
            tag: OperatorTag::JLk,
            k,
            basis: Basis::MeanFreeFourier,
            matrix: m,
        }
    }

    /// `𝓛̃(k) = 𝒥𝓛(k)𝒥ᵀ` as a dense triple product. At `k = 0` the
    /// transverse term is dropped exactly.
    pub fn assemble_ltilde(&self, k: f64) -> OperatorMatrix {
        let j = self.assemble_j().matrix;
        let lk = self.lk_unchecked(k);
        let m = &j * &lk * j.transpose();
        OperatorMatrix {
            tag: OperatorTag::LtildeK,
            k,
            basis: Basis::MeanFreeFourier,
            matrix: m,
        }
    }

    /// `𝓛̃(k)` through the symbol factorization `𝒥 = S∂x`,
    /// `𝓛̃(k) = S (∂x L0 ∂xᵀ + k²) S` with `S = (1 - ∂x²)⁻¹` diagonal.
    pub fn assemble_ltilde_symbolic(&self, k: f64) -> OperatorMatrix {
        let dim = self.dim();
        let sign = |p: usize| if is_cos(p) { -1.0 } else { 1.0 };
        let s = |p: usize| 1.0 / (1.0 + self.xi[p] * self.xi[p]);
        let m = Mat::from_fn(dim, dim, |p, q| {
            let inner = sign(p) * sign(q) * self.xi[p] * self.xi[q] * self.l0[(partner(p), partner(q))]
                + if p == q { k * k } else { 0.0 };
            s(p) * inner * s(q)
        });
        OperatorMatrix {
            tag: OperatorTag::LtildeK,
            k,
            basis: Basis::MeanFreeFourier,
            matrix: m,
        }
    }

    /// `n_∞(k)`, diagonal in the Fourier basis.
    pub fn assemble_n_infinity(&self, k: f64) -> OperatorMatrix {
        let dim = self.dim();
        let mut m = Mat::zeros(dim, dim);
        for p in 0..dim {
            let x2 = self.xi[p] * self.xi[p];
            m[(p, p)] = self.c * x2 * x2 + (self.c - 2.0 * self.kappa) * x2 + k * k;
        }
        OperatorMatrix {
            tag: OperatorTag::NK,
            k,
            basis: Basis::MeanFreeFourier,
            matrix: m,
        }
    }

    /// Basis coordinates to complex Fourier coefficients (grid convention).
    pub fn to_coefficients(&self, u: &[Complex64]) -> Vec<Complex64> {
        let n = self.grid.len();
        let a = (2.0 / n as f64).sqrt() * 0.5;
        let mut c = vec![Complex64::new(0.0, 0.0); n];
        let i = Complex64::new(0.0, 1.0);
        for m in 1..n / 2 {
            let (uc, us) = (u[2 * (m - 1)], u[2 * (m - 1) + 1]);
            c[m] = (uc - i * us) * a;
            c[n - m] = (uc + i * us) * a;
        }
        c
    }

    /// Complex Fourier coefficients to basis coordinates; the mean and
    /// Nyquist coefficients are dropped.
    pub fn from_coefficients(&self, c: &[Complex64]) -> Vec<Complex64> {
        let n = self.grid.len();
        let r = (2.0 / n as f64).sqrt();
        let i = Complex64::new(0.0, 1.0);
        let mut u = vec![Complex64::new(0.0, 0.0); self.dim()];
        for m in 1..n / 2 {
            u[2 * (m - 1)] = (c[m] + c[n - m]) / r;
            u[2 * (m - 1) + 1] = i * (c[m] - c[n - m]) / r;
        }
        u
    }

    /// Nodal values of the basis columns as an `N × (N - 2)` matrix.
    pub fn basis_matrix(&self) -> Mat<f64> {
        let n = self.grid.len();
        let r = (2.0 / n as f64).sqrt();
        let x = self.grid.nodes();
        Mat::from_fn(n, self.dim(), |j, p| {
            let t = self.xi[p] * x[j];
            r * if is_cos(p) { t.cos() } else { t.sin() }
        })
    }
}

/// `Bᵀ diag(a) B` in `O(N²)` from the Fourier coefficients of `a`:
/// with `â_q` the coefficients,
/// `cc = Re â_{m-n} + Re â_{m+n}`, `ss = Re â_{m-n} - Re â_{m+n}`,
/// `cs(m, n) = -Im â_{n+m} - Im â_{n-m}`.
fn multiplication_matrix(grid: &Grid1D, a: &[f64]) -> Mat<f64> {
    let n = grid.len();
    let ahat = XTransform::new(n).forward_real(a);
    let at = |q: i64| ahat[q.rem_euclid(n as i64) as usize];
    let dim = basis_dim(grid);
    Mat::from_fn(dim, dim, |p, q| {
        let (m, l) = (mode_of(p) as i64, mode_of(q) as i64);
        match (is_cos(p), is_cos(q)) {
            (true, true) => at(m - l).re + at(m + l).re,
            (false, false) => at(m - l).re - at(m + l).re,
            (true, false) => -at(l + m).im - at(l - m).im,
            (false, true) => -at(m + l).im - at(m - l).im,
        }
    })
}

/// Nodal Fourier differentiation matrix (Nyquist mode annihilated):
/// `D_jk = (π/L)·½(-1)^{j-k} cot((j - k)π/N)`.
pub fn differentiation_matrix(grid: &Grid1D) -> Mat<f64> {
    let n = grid.len();
    let scale = grid.fundamental();
    let h = 2.0 * std::f64::consts::PI / n as f64;
    Mat::from_fn(n, n, |j, k| {
        if j == k {
            return 0.0;
        }
        let d = j as i64 - k as i64;
        let sign = if d.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        scale * 0.5 * sign / (d as f64 * h / 2.0).tan()
    })
}

/// `H_c` on the full collocation grid.
pub fn assemble_hc(wave: &SolitaryWave) -> OperatorMatrix {
    let grid = *wave.grid();
    let n = grid.len();
    let d = differentiation_matrix(&grid);
    let (c, kappa) = (wave.c(), wave.kappa());
    let coef: Vec<f64> = wave.q().iter().map(|q| c - q).collect();
    // -D diag(a) D = Dᵀ diag(a) D
    let ad = Mat::from_fn(n, n, |j, k| coef[j] * d[(j, k)]);
    let mut m = d.transpose() * &ad;
    for (j, (q, q2)) in wave.q().iter().zip(wave.d2q()).enumerate() {
        m[(j, j)] += q2 - 3.0 * q - 2.0 * kappa + c;
    }
    OperatorMatrix {
        tag: OperatorTag::Hc,
        k: 0.0,
        basis: Basis::Collocation,
        matrix: m,
    }
}
