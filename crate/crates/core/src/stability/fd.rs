//! Independent fourth-order finite-difference discretization of `𝒥𝓛(k)`,
//! used as an oracle for the spectral growth rates.

use faer::linalg::solvers::DenseSolveCore;
use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::soliton::SolitaryWave;

fn circulant(n: usize, stencil: &[(i64, f64)]) -> Mat<f64> {
    let mut m = Mat::zeros(n, n);
    for j in 0..n {
        for &(off, w) in stencil {
            let k = (j as i64 + off).rem_euclid(n as i64) as usize;
            m[(j, k)] += w;
        }
    }
    m
}

/// Dense nodal matrix of `𝒥𝓛(k)` built from 4th-order central differences:
/// `𝒥 = (I - D₂)⁻¹D₁`, `∂x⁻² = (D₂ - 𝟙𝟙ᵀ/N)⁻¹` on mean-free data,
/// `H = -D₁ diag(c - φ) D₁ + diag(D₂φ - 3φ - 2κ + c)`.
pub fn fd_jl_matrix(wave: &SolitaryWave, k: f64) -> Mat<f64> {
    let g = wave.grid();
    let n = g.len();
    let h = g.spacing();
    let d1 = circulant(
        n,
        &[
            (-2, 1.0 / (12.0 * h)),
            (-1, -8.0 / (12.0 * h)),
            (1, 8.0 / (12.0 * h)),
            (2, -1.0 / (12.0 * h)),
        ],
    );
    let h2 = 12.0 * h * h;
    let d2 = circulant(
        n,
        &[
            (-2, -1.0 / h2),
            (-1, 16.0 / h2),
            (0, -30.0 / h2),
            (1, 16.0 / h2),
            (2, -1.0 / h2),
        ],
    );
    let (c, kappa) = (wave.c(), wave.kappa());
    let phi = wave.q();
    let phi2: Vec<f64> = (0..n).map(|j| (0..n).map(|i| d2[(j, i)] * phi[i]).sum()).collect();

    let ad1 = Mat::from_fn(n, n, |j, i| (c - phi[j]) * d1[(j, i)]);
    let mut hmat = -(&d1 * &ad1);
    for j in 0..n {
        hmat[(j, j)] += phi2[j] - 3.0 * phi[j] - 2.0 * kappa + c;
    }
    if k != 0.0 {
        let mean = 1.0 / n as f64;
        let shifted = Mat::from_fn(n, n, |i, j| d2[(i, j)] - mean);
        let proj = Mat::from_fn(n, n, |i, j| if i == j { 1.0 - mean } else { -mean });
        let inv = shifted.partial_piv_lu().inverse() * &proj;
        hmat -= &inv * faer::Scale(k * k);
    }
    let helm = Mat::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 }) - &d2;
    let j = helm.partial_piv_lu().inverse() * &d1;
    j * hmat
}

/// Leading eigenvalue (maximal real part) of the finite-difference `𝒥𝓛(k)`.
pub fn fd_leading_eigenvalue(wave: &SolitaryWave, k: f64) -> Result<Complex64> {
    let ev = fd_jl_matrix(wave, k)
        .eigenvalues()
        .map_err(|e| Error::Convergence(format!("{e:?}")))?;
    Ok(ev
        .into_iter()
        .max_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)))
        .unwrap_or_default())
}
