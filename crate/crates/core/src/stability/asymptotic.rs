//! Characteristic polynomial of the limiting matrix at `|x| → ∞`,
//!
//! ```text
//! P(λ) = c λ⁴ - σ λ³ - (c - 2κ) λ² + σ λ + k²,
//! ```
//!
//! whose roots must stay off the imaginary axis when `Re σ > 0`. On
//! `λ = iμ` the real part is `c μ⁴ + (c - 2κ) μ² + k² ≥ k²` when `σ` is real,
//! and the imaginary part `Re σ (μ³ + μ)` forces `μ = 0` in general.

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AInfinitySample {
    pub sigma: Complex64,
    pub k: f64,
    pub roots: Vec<Complex64>,
    /// `min |Re λ|` over the roots.
    pub min_abs_re: f64,
    /// `min_μ (c μ⁴ + (c - 2κ) μ² + k²) = k²`.
    pub analytic_margin: f64,
    /// `max |P(λ)|` at the computed roots, relative to the coefficients.
    pub root_residual: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AInfinityVerdict {
    pub samples: Vec<AInfinitySample>,
    pub pass: bool,
}

fn poly(c: f64, kappa: f64, sigma: Complex64, k: f64) -> [Complex64; 5] {
    // coefficients of λ⁰..λ⁴
    [
        Complex64::new(k * k, 0.0),
        sigma,
        Complex64::new(-(c - 2.0 * kappa), 0.0),
        -sigma,
        Complex64::new(c, 0.0),
    ]
}

fn eval(p: &[Complex64; 5], z: Complex64) -> (Complex64, Complex64) {
    let mut v = p[4];
    let mut d = Complex64::new(0.0, 0.0);
    for &a in p[..4].iter().rev() {
        d = d * z + v;
        v = v * z + a;
    }
    (v, d)
}

/// Roots of the quartic via the companion matrix, polished by Newton steps.
pub fn quartic_roots(c: f64, kappa: f64, sigma: Complex64, k: f64) -> Result<Vec<Complex64>> {
    let p = poly(c, kappa, sigma, k);
    let mut comp = Mat::<Complex64>::zeros(4, 4);
    for i in 1..4 {
        comp[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..4 {
        comp[(i, 3)] = -p[i] / p[4];
    }
    let mut roots = comp.eigenvalues().map_err(|e| Error::Convergence(format!("{e:?}")))?;
    for z in roots.iter_mut() {
        for _ in 0..3 {
            let (v, d) = eval(&p, *z);
            if d.norm() > 0.0 {
                *z -= v / d;
            }
        }
    }
    Ok(roots)
}

/// Checks every `σ` in `sigmas` (with `Re σ > 0`) at transverse frequency `k`.
pub fn a_infinity_check(c: f64, kappa: f64, k: f64, sigmas: &[Complex64]) -> Result<AInfinityVerdict> {
    if !(c > 2.0 * kappa) || k == 0.0 {
        return Err(Error::Parameter(format!(
            "need c > 2κ and k ≠ 0, got c = {c}, κ = {kappa}, k = {k}"
        )));
    }
    let mut samples = Vec::new();
    for &sigma in sigmas.iter().filter(|s| s.re > 0.0) {
        let roots = quartic_roots(c, kappa, sigma, k)?;
        let p = poly(c, kappa, sigma, k);
        let scale: f64 = p.iter().map(|a| a.norm()).sum();
        let root_residual = roots
            .iter()
            .map(|&z| eval(&p, z).0.norm() / (scale * z.norm().max(1.0).powi(4)))
            .fold(0.0, f64::max);
        samples.push(AInfinitySample {
            sigma,
            k,
            min_abs_re: roots.iter().map(|z| z.re.abs()).fold(f64::INFINITY, f64::min),
            analytic_margin: analytic_margin(c, kappa, k),
            roots,
            root_residual,
        });
    }
    let pass = !samples.is_empty()
        && samples
            .iter()
            .all(|s| s.roots.len() == 4 && s.min_abs_re > 0.0 && s.analytic_margin > 0.0);
    Ok(AInfinityVerdict { samples, pass })
}

/// `min_{μ ≥ 0} c μ⁴ + (c - 2κ) μ² + k²`, attained at `μ = 0` when `c > 2κ`.
pub fn analytic_margin(c: f64, kappa: f64, k: f64) -> f64 {
    let f = |mu: f64| c * mu.powi(4) + (c - 2.0 * kappa) * mu * mu + k * k;
    // Both quartic coefficients are positive, so the minimum is at μ = 0.
    f(0.0)
}
