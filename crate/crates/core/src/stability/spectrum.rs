use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::operators::{assemble_hc, OperatorMatrix, WaveOperators};
use crate::error::{Error, Result};
use crate::spectral::{Field2D, Grid1D, Grid2D, XTransform};

/// Growth rates at or below this value are treated as discretization noise.
pub const TOL_GROWTH: f64 = 1e-6;

/// An eigenpair of `𝒥𝓛(k)`.
#[derive(Clone, Debug)]
pub struct EigenPair {
    pub k: f64,
    pub sigma: Complex64,
    /// Complex Fourier coefficients of the eigenfunction (grid convention).
    pub coefficients: Vec<Complex64>,
    /// `‖σU - 𝒥𝓛(k)U‖ / ‖U‖` in the discrete norm.
    pub residual: f64,
}

impl EigenPair {
    /// Nodal values of the eigenfunction.
    pub fn values(&self, grid: &Grid1D) -> Vec<Complex64> {
        let mut buf = self.coefficients.clone();
        XTransform::new(grid.len()).inverse(&mut buf);
        buf
    }
}

fn evd_error(e: impl std::fmt::Debug) -> Error {
    Error::Convergence(format!("{e:?}"))
}

/// Eigenvalues of `𝒥𝓛(k)`.
pub fn jl_eigenvalues(ops: &WaveOperators, k: f64) -> Result<Vec<Complex64>> {
    ops.assemble_jl(k).matrix.eigenvalues().map_err(evd_error)
}

/// Largest real part in the spectrum of `𝒥𝓛(k)` together with its eigenvalue.
pub fn leading_eigenvalue(ops: &WaveOperators, k: f64) -> Result<Complex64> {
    let ev = jl_eigenvalues(ops, k)?;
    Ok(leading(&ev))
}

fn leading(ev: &[Complex64]) -> Complex64 {
    // Prefer the upper member of a conjugate pair for determinism.
    ev.iter()
        .copied()
        .max_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)))
        .unwrap_or_default()
}

/// Number of unstable eigenvalues modulo complex conjugation.
fn unstable_count(ev: &[Complex64], tol: f64) -> usize {
    ev.iter().filter(|z| z.re > tol && z.im >= -1e-12).count()
}

/// Eigenpair of `𝒥𝓛(k)` with maximal real part, if `Re σ > tol`.
pub fn unstable_eigen(ops: &WaveOperators, k: f64, tol: f64) -> Result<Option<EigenPair>> {
    let m = ops.assemble_jl(k).matrix;
    let evd = m.eigen().map_err(evd_error)?;
    let s = evd.S().column_vector();
    let (idx, sigma) = (0..s.nrows())
        .map(|i| (i, s[i]))
        .max_by(|a, b| a.1.re.total_cmp(&b.1.re).then(a.1.im.total_cmp(&b.1.im)))
        .ok_or_else(|| Error::Convergence("empty spectrum".into()))?;
    if sigma.re <= tol {
        return Ok(None);
    }
    let u = evd.U();
    let v: Vec<Complex64> = (0..u.nrows()).map(|i| u[(i, idx)]).collect();
    let residual = eigen_residual(&m, sigma, &v);
    Ok(Some(EigenPair {
        k,
        sigma,
        coefficients: ops.to_coefficients(&v),
        residual,
    }))
}

/// `‖σv - Mv‖ / ‖v‖`.
pub fn eigen_residual(m: &Mat<f64>, sigma: Complex64, v: &[Complex64]) -> f64 {
    let n = v.len();
    let mut num = 0.0;
    for i in 0..n {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..n {
            acc += v[j] * m[(i, j)];
        }
        num += (sigma * v[i] - acc).norm_sqr();
    }
    let den: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    (num / den).sqrt()
}

/// Spectrum of `H_c` on the collocation grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HcSpectrum {
    pub eigenvalues: Vec<f64>,
    pub negative_count: usize,
    pub near_zero_count: usize,
    /// Smallest eigenvalue above the near-zero window.
    pub first_positive: f64,
    /// `|cos∠(kernel vector, Q')|`.
    pub kernel_cosine: f64,
    pub symmetry_defect: f64,
}

/// Eigen-analysis of `H_c`: counts below `-tol`, within `±tol`, and the
/// alignment of the near-kernel vector with `dq`.
pub fn hc_spectrum(hc: &OperatorMatrix, dq: &[f64], tol: f64) -> Result<HcSpectrum> {
    let m = &hc.matrix;
    let sym = (m + m.transpose()) * faer::Scale(0.5);
    let evd = sym.self_adjoint_eigen(faer::Side::Lower).map_err(evd_error)?;
    let s = evd.S().column_vector();
    let eigenvalues: Vec<f64> = (0..s.nrows()).map(|i| s[i]).collect();
    let negative_count = eigenvalues.iter().filter(|&&l| l < -tol).count();
    let near: Vec<usize> = (0..eigenvalues.len()).filter(|&i| eigenvalues[i].abs() < tol).collect();
    let first_positive = eigenvalues.iter().copied().find(|&l| l >= tol).unwrap_or(f64::NAN);
    let kernel_cosine = near
        .first()
        .map(|&i| {
            let u = evd.U();
            let dot: f64 = (0..dq.len()).map(|j| u[(j, i)] * dq[j]).sum();
            let nu: f64 = (0..dq.len()).map(|j| u[(j, i)].powi(2)).sum::<f64>().sqrt();
            let nd: f64 = dq.iter().map(|v| v * v).sum::<f64>().sqrt();
            (dot / (nu * nd)).abs()
        })
        .unwrap_or(0.0);
    Ok(HcSpectrum {
        eigenvalues,
        negative_count,
        near_zero_count: near.len(),
        first_positive,
        kernel_cosine,
        symmetry_defect: hc.symmetry_defect(),
    })
}

/// Convenience wrapper assembling `H_c` from a wave.
pub fn wave_hc_spectrum(wave: &crate::soliton::SolitaryWave, tol: f64) -> Result<HcSpectrum> {
    hc_spectrum(&assemble_hc(wave), wave.dq(), tol)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BranchSample {
    pub k: f64,
    /// Eigenvalue of `𝒥𝓛(k)` with maximal real part.
    pub sigma: Complex64,
    pub unstable: bool,
    /// Unstable eigenvalues counted modulo conjugation.
    pub unstable_count: usize,
    /// Phase-aligned eigenfunction coefficients (unstable samples only).
    #[serde(skip)]
    pub eigenfunction: Option<Vec<Complex64>>,
    /// Solver failure at this sample, if any.
    pub error: Option<String>,
}

/// `σ(k)` along a k-grid with the unstable band bracketed.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EigenBranch {
    pub samples: Vec<BranchSample>,
    /// Refined band edges `[k_lo, k_hi]`, if a band was found.
    pub band: Option<(f64, f64)>,
    /// Leading growth rate evaluated just inside each refined edge.
    pub edge_growth: Option<(f64, f64)>,
    pub tol_growth: f64,
}

impl EigenBranch {
    pub fn unstable_samples(&self) -> impl Iterator<Item = &BranchSample> {
        self.samples.iter().filter(|s| s.unstable)
    }

    pub fn max_growth(&self) -> Option<&BranchSample> {
        self.samples
            .iter()
            .filter(|s| s.error.is_none())
            .max_by(|a, b| a.sigma.re.total_cmp(&b.sigma.re))
    }

    /// Largest jump of `Re σ` across a k-interval relative to ten times the
    /// steepest slope on the neighbouring intervals (values `< 1` satisfy
    /// the continuity invariant). Kinks at the band edges pass; isolated
    /// jumps do not.
    pub fn continuity_ratio(&self) -> f64 {
        let s: Vec<&BranchSample> = self.samples.iter().filter(|s| s.error.is_none()).collect();
        let slopes: Vec<f64> = s
            .windows(2)
            .map(|w| (w[1].sigma.re - w[0].sigma.re).abs() / (w[1].k - w[0].k))
            .collect();
        let mut worst: f64 = 0.0;
        for i in 0..slopes.len() {
            let left = i.checked_sub(1).map_or(0.0, |j| slopes[j]);
            let right = slopes.get(i + 1).copied().unwrap_or(0.0);
            let local = left.max(right).max(1e-3);
            worst = worst.max(slopes[i] / (10.0 * local));
        }
        worst
    }

    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["k", "re_sigma", "im_sigma"])?;
        for s in &self.samples {
            w.serialize((s.k, s.sigma.re, s.sigma.im))?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

fn align_phase(v: &mut [Complex64], previous: Option<&[Complex64]>) {
    let target = match previous {
        Some(p) => p.iter().zip(v.iter()).map(|(a, b)| a * b.conj()).sum::<Complex64>(),
        None => {
            // Make the largest coefficient-space component real positive.
            v.iter()
                .copied()
                .max_by(|a, b| a.norm().total_cmp(&b.norm()))
                .map(|z| z.conj())
                .unwrap_or(Complex64::new(1.0, 0.0))
        }
    };
    if target.norm() > 0.0 {
        let rot = target / target.norm();
        for z in v.iter_mut() {
            *z *= rot;
        }
    }
}

/// Scans `σ(k)` on `n` equispaced samples of `[k_min, k_max]`, then refines
/// the band edges by bisection to `edge_tol`.
pub fn scan_branch(ops: &WaveOperators, k_min: f64, k_max: f64, n: usize) -> Result<EigenBranch> {
    scan_branch_with(ops, k_min, k_max, n, TOL_GROWTH, 1e-9)
}

pub fn scan_branch_with(
    ops: &WaveOperators,
    k_min: f64,
    k_max: f64,
    n: usize,
    tol: f64,
    edge_tol: f64,
) -> Result<EigenBranch> {
    if !(k_min >= 0.0 && k_max > k_min && n >= 2) {
        return Err(Error::Parameter(format!(
            "scan needs 0 <= k_min < k_max and n >= 2, got [{k_min}, {k_max}], n = {n}"
        )));
    }
    let ks: Vec<f64> = (0..n)
        .map(|i| k_min + (k_max - k_min) * i as f64 / (n - 1) as f64)
        .collect();
    let mut samples: Vec<BranchSample> = ks
        .par_iter()
        .map(|&k| match jl_eigenvalues(ops, k) {
            Ok(ev) => {
                let sigma = leading(&ev);
                BranchSample {
                    k,
                    sigma,
                    unstable: sigma.re > tol,
                    unstable_count: unstable_count(&ev, tol),
                    eigenfunction: None,
                    error: None,
                }
            }
            Err(e) => BranchSample {
                k,
                sigma: Complex64::new(f64::NAN, f64::NAN),
                unstable: false,
                unstable_count: 0,
                eigenfunction: None,
                error: Some(e.to_string()),
            },
        })
        .collect();

    // Eigenfunctions on the unstable samples, phase-aligned along k.
    let mut previous: Option<Vec<Complex64>> = None;
    for s in samples.iter_mut().filter(|s| s.unstable) {
        if let Some(mut pair) = unstable_eigen(ops, s.k, tol)? {
            let mut basis = ops.from_coefficients(&pair.coefficients);
            align_phase(&mut basis, previous.as_deref());
            pair.coefficients = ops.to_coefficients(&basis);
            previous = Some(basis);
            s.eigenfunction = Some(pair.coefficients);
        }
    }

    let band = bracket_band(&samples).map(|(lo_out, lo_in, hi_in, hi_out)| {
        let unstable = |k: f64| leading_eigenvalue(ops, k).map(|s| s.re > tol).unwrap_or(false);
        let lo = match lo_out {
            Some(out) => bisect_edge(out, lo_in, edge_tol, &unstable),
            None => (lo_in, lo_in),
        };
        let hi = match hi_out {
            Some(out) => bisect_edge(out, hi_in, edge_tol, &unstable),
            None => (hi_in, hi_in),
        };
        (lo, hi)
    });
    let edge_growth = match &band {
        Some(((_, lo_in), (_, hi_in))) => {
            Some((leading_eigenvalue(ops, *lo_in)?.re, leading_eigenvalue(ops, *hi_in)?.re))
        }
        None => None,
    };
    Ok(EigenBranch {
        samples,
        band: band.map(|((lo_out, _), (hi_out, _))| (lo_out, hi_out)),
        edge_growth,
        tol_growth: tol,
    })
}

/// Stable/unstable neighbours of the first contiguous unstable run:
/// `(stable below, first unstable, last unstable, stable above)`.
fn bracket_band(s: &[BranchSample]) -> Option<(Option<f64>, f64, f64, Option<f64>)> {
    let first = s.iter().position(|x| x.unstable)?;
    let mut last = first;
    while last + 1 < s.len() && s[last + 1].unstable {
        last += 1;
    }
    Some((
        first.checked_sub(1).map(|i| s[i].k),
        s[first].k,
        s[last].k,
        s.get(last + 1).map(|x| x.k),
    ))
}

/// Bisection between a stable `out` and an unstable `inside` point;
/// returns `(stable end, unstable end)` of the final bracket.
fn bisect_edge(mut out: f64, mut inside: f64, tol: f64, unstable: &impl Fn(f64) -> bool) -> (f64, f64) {
    while (inside - out).abs() > tol {
        let mid = 0.5 * (out + inside);
        if unstable(mid) {
            inside = mid;
        } else {
            out = mid;
        }
    }
    (out, inside)
}

/// Golden-section maximisation of `Re σ(k)` on `[a, b]`.
pub fn argmax_growth(ops: &WaveOperators, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, Complex64)> {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = leading_eigenvalue(ops, x1)?.re;
    let mut f2 = leading_eigenvalue(ops, x2)?.re;
    while b - a > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = leading_eigenvalue(ops, x2)?.re;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = leading_eigenvalue(ops, x1)?.re;
        }
    }
    let k = 0.5 * (a + b);
    Ok((k, leading_eigenvalue(ops, k)?))
}

/// Record of how `U₀` was scaled.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Normalization {
    /// Transverse period `a = 2π/k₀`.
    pub torus_period: f64,
    /// `|U₀|₀`, chosen so that `‖v⁰(0)‖₀ = 1` on `ℝ × 𝕋_a`.
    pub profile_l2: f64,
    pub v0_norm: f64,
}

/// The seed mode `v⁰ = 2 Re(e^{σ₀t} e^{i m₀ k₀ y} U₀)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UnstableMode {
    pub k0: f64,
    pub m0: i64,
    pub sigma0: Complex64,
    /// Complex Fourier coefficients of `U₀`.
    pub profile: Vec<Complex64>,
    pub grid: Grid1D,
    pub normalization: Normalization,
    pub residual: f64,
    /// Largest integer `m` with `m k₀` in the unstable band (alternative
    /// reading of "maximal m₀").
    pub largest_unstable_m: i64,
    /// `|Im σ₀| > 1e-8`.
    pub complex_sigma_flag: bool,
}

impl UnstableMode {
    pub fn rate(&self) -> f64 {
        self.sigma0.re
    }

    /// Transverse frequency of the seed, `m₀ k₀`.
    pub fn frequency(&self) -> f64 {
        self.m0 as f64 * self.k0
    }

    pub fn profile_values(&self) -> Vec<Complex64> {
        let mut buf = self.profile.clone();
        XTransform::new(self.grid.len()).inverse(&mut buf);
        buf
    }

    /// Seed `v⁰(0) = 2 Re(e^{i m₀k₀ y} U₀)` on `grid`, whose base frequency
    /// must divide `m₀k₀`.
    pub fn seed_field(&self, grid: Grid2D) -> Result<Field2D> {
        if grid.x != self.grid {
            return Err(Error::Grid("seed field needs the eigenmode's x-grid".into()));
        }
        let ratio = self.frequency() / grid.k0();
        let m = ratio.round();
        if (ratio - m).abs() > 1e-9 || m < 1.0 || !grid.is_y_resolved(grid.y_index_of_mode(m as i64)) {
            return Err(Error::Grid(format!(
                "transverse frequency {} is not a resolved multiple of k0 = {}",
                self.frequency(),
                grid.k0()
            )));
        }
        Ok(mode_pair_field(grid, m as i64, &self.profile))
    }

    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x", "re_U", "im_U"])?;
        for (x, u) in self.grid.nodes().into_iter().zip(self.profile_values()) {
            w.serialize((x, u.re, u.im))?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// Picks the integer multiple `m k₀` inside the unstable band with the
/// largest `Re σ`, and normalizes `U₀` so that `‖v⁰(0)‖₀ = 1`.
pub fn select_most_unstable(ops: &WaveOperators, branch: &EigenBranch, k0: f64) -> Result<UnstableMode> {
    let band_hi = branch.band.map_or(0.0, |b| b.1);
    if !(k0 > 0.0) || branch.band.is_none() {
        return Err(Error::NoUnstableMode { k0, band_hi });
    }
    let (lo, hi) = branch.band.expect("checked above");
    let ms: Vec<i64> = (1..)
        .map(|m| m as i64)
        .take_while(|&m| m as f64 * k0 < hi)
        .filter(|&m| m as f64 * k0 > lo)
        .collect();
    let mut best: Option<EigenPair> = None;
    let mut best_m = 0;
    for &m in &ms {
        if let Some(pair) = unstable_eigen(ops, m as f64 * k0, branch.tol_growth)? {
            if best.as_ref().is_none_or(|b| pair.sigma.re > b.sigma.re) {
                best = Some(pair);
                best_m = m;
            }
        }
    }
    let pair = best.ok_or(Error::NoUnstableMode { k0, band_hi })?;
    let grid = *ops.grid();
    let mut basis = ops.from_coefficients(&pair.coefficients);
    align_phase(&mut basis, None);
    let torus_period = 2.0 * std::f64::consts::PI / k0;
    // |U₀|₀² = 2L Σ|c|² and ‖v⁰‖₀² = 2a|U₀|₀².
    let mut coefficients = ops.to_coefficients(&basis);
    let l2 = |c: &[Complex64]| (2.0 * grid.half_length() * c.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt();
    let target = (1.0 / (2.0 * torus_period)).sqrt();
    let scale = target / l2(&coefficients);
    coefficients.iter_mut().for_each(|z| *z *= scale);
    let profile_l2 = l2(&coefficients);
    Ok(UnstableMode {
        k0,
        m0: best_m,
        sigma0: pair.sigma,
        profile: coefficients,
        grid,
        normalization: Normalization {
            torus_period,
            profile_l2,
            v0_norm: (2.0 * torus_period).sqrt() * profile_l2,
        },
        residual: pair.residual,
        largest_unstable_m: ms.last().copied().unwrap_or(0),
        complex_sigma_flag: pair.sigma.im.abs() > 1e-8,
    })
}

/// `coeffs e^{i m k₀ y} + c.c.` as a real 2D field.
pub(crate) fn mode_pair_field(grid: Grid2D, m: i64, coeffs: &[Complex64]) -> Field2D {
    let nx = grid.nx();
    let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
    let (lp, lm) = (grid.y_index_of_mode(m), grid.y_index_of_mode(-m));
    for i in 0..nx {
        let im = (nx - i) % nx;
        out[lp * nx + i] += coeffs[i];
        out[lm * nx + im] += coeffs[i].conj();
    }
    Field2D::from_coefficients(grid, out)
}
