use serde::{Deserialize, Serialize};

use super::operators::WaveOperators;
use crate::error::{Error, Result};

/// Tolerance for the monotonicity condition `𝓛̃(k₁) ≥ 𝓛̃(k₂)`.
pub const COND3_TOL: f64 = 1e-10;
/// Eigenvalues below `-NEGATIVE_TOL` count as negative.
pub const NEGATIVE_TOL: f64 = 1e-6;

/// One sufficient condition with the data its verdict is computed from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionEntry {
    pub pass: bool,
    /// Worst-case margin; positive means satisfied.
    pub margin: f64,
    pub k_samples: Vec<f64>,
    /// Per-sample measured quantity.
    pub values: Vec<f64>,
}

/// Verdicts for the four conditions that imply transverse instability.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    /// Threshold `K` beyond which `𝓛̃(k)` was found positive definite.
    pub k_threshold: f64,
    /// `min spec 𝓛̃(k) ≥ α > 0` for sampled `k ≥ K`, increasing in `k`.
    pub cond1: ConditionEntry,
    /// Hellmann–Feynman slopes `d λ_min / d(k²) = |S u_min|²` at the cond1 samples.
    pub cond1_hf_slopes: Vec<f64>,
    /// Secant slopes of `λ_min` in `k²` between consecutive cond1 samples.
    pub cond1_secant_slopes: Vec<f64>,
    /// Symbol positivity `c ξ⁴ + (c - 2κ) ξ² + k² ≥ k² > 0`.
    pub cond2: ConditionEntry,
    /// `min spec (𝓛̃(k₁) - 𝓛̃(k₂)) ≥ -1e-10` for `k₁ ≥ k₂`; `k_samples`
    /// holds the pairs flattened as `[k₁, k₂, ...]`.
    pub cond3: ConditionEntry,
    /// `𝓛̃(0)` has exactly one negative eigenvalue, isolated; `values` holds
    /// the three smallest eigenvalues.
    pub cond4: ConditionEntry,
}

impl ConditionReport {
    pub fn all_pass(&self) -> bool {
        self.cond1.pass && self.cond2.pass && self.cond3.pass && self.cond4.pass
    }

    /// Recomputes each verdict from the stored values only.
    pub fn verdicts_from_data(&self) -> [bool; 4] {
        let c1 = !self.cond1.values.is_empty()
            && self.cond1.values.iter().all(|&v| v > 0.0)
            && self.cond1.values.windows(2).all(|w| w[1] > w[0]);
        let c2 = !self.cond2.values.is_empty()
            && self
                .cond2
                .values
                .iter()
                .zip(&self.cond2.k_samples)
                .all(|(&v, &k)| v > 0.0 && v == k * k);
        let c3 = self.cond3.values.iter().all(|&v| v >= -COND3_TOL);
        let c4 = self.cond4.values.iter().filter(|&&v| v < -NEGATIVE_TOL).count() == 1;
        [c1, c2, c3, c4]
    }
}

fn min_eig(ops: &WaveOperators, k: f64) -> Result<f64> {
    ops.assemble_ltilde_symbolic(k).min_eigenvalue()
}

/// Smallest eigenvalue of `𝓛̃(k)` with the Hellmann–Feynman derivative
/// `d λ / d(k²) = |S u|²`, `S = (1 - ∂x²)⁻¹`.
pub fn ltilde_min_with_slope(ops: &WaveOperators, k: f64) -> Result<(f64, f64)> {
    let m = ops.assemble_ltilde_symbolic(k).matrix;
    let evd = m
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Convergence(format!("{e:?}")))?;
    let lambda = evd.S().column_vector()[0];
    let u = evd.U();
    let slope = ops
        .basis_wavenumbers()
        .iter()
        .enumerate()
        .map(|(p, xi)| (u[(p, 0)] / (1.0 + xi * xi)).powi(2))
        .sum();
    Ok((lambda, slope))
}

/// Bisection for the smallest `K` with `min spec 𝓛̃(k) > 0` for `k ≥ K`,
/// assuming monotonicity in `k` (condition 3).
pub fn positivity_threshold(ops: &WaveOperators, k_hi: f64, tol: f64) -> Result<f64> {
    if min_eig(ops, k_hi)? <= 0.0 {
        return Err(Error::Parameter(format!(
            "𝓛̃(k) is not positive at k = {k_hi}; enlarge the sampling range"
        )));
    }
    let (mut lo, mut hi) = (0.0, k_hi);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if min_eig(ops, mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Evaluates the four conditions on `k_samples` (which should cover
/// `[0, 2K]`).
pub fn verify_rt_conditions(ops: &WaveOperators, k_samples: &[f64]) -> Result<ConditionReport> {
    let mut ks: Vec<f64> = k_samples.iter().map(|k| k.abs()).collect();
    ks.sort_by(f64::total_cmp);
    ks.dedup();
    let k_max = *ks.last().ok_or_else(|| Error::Parameter("no k samples".into()))?;
    let k_threshold = positivity_threshold(ops, k_max, 1e-6)?;

    // Condition 1.
    let c1_ks: Vec<f64> = ks.iter().copied().filter(|&k| k >= k_threshold).collect();
    let mut c1_vals = Vec::new();
    let mut hf = Vec::new();
    for &k in &c1_ks {
        let (l, s) = ltilde_min_with_slope(ops, k)?;
        c1_vals.push(l);
        hf.push(s);
    }
    let secants: Vec<f64> = c1_ks
        .windows(2)
        .zip(c1_vals.windows(2))
        .map(|(k, v)| (v[1] - v[0]) / (k[1] * k[1] - k[0] * k[0]))
        .collect();
    let cond1 = ConditionEntry {
        pass: !c1_vals.is_empty() && c1_vals.iter().all(|&v| v > 0.0) && c1_vals.windows(2).all(|w| w[1] > w[0]),
        margin: c1_vals.iter().copied().fold(f64::INFINITY, f64::min),
        k_samples: c1_ks,
        values: c1_vals,
    };

    // Condition 2: minimum over the grid wavenumbers (ξ = 0 included).
    let (c, kappa) = (ops.c(), ops.kappa());
    let xi = ops.grid().wavenumbers();
    let c2_ks: Vec<f64> = ks.iter().copied().filter(|&k| k != 0.0).collect();
    let c2_vals: Vec<f64> = c2_ks
        .iter()
        .map(|&k| {
            xi.iter()
                .map(|x| c * x.powi(4) + (c - 2.0 * kappa) * x * x + k * k)
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let cond2 = ConditionEntry {
        pass: !c2_vals.is_empty() && c2_vals.iter().zip(&c2_ks).all(|(&v, &k)| v > 0.0 && v == k * k),
        margin: c2_vals.iter().copied().fold(f64::INFINITY, f64::min),
        k_samples: c2_ks,
        values: c2_vals,
    };

    // Condition 3 on consecutive pairs plus the equality case.
    let mut pairs: Vec<(f64, f64)> = ks.windows(2).map(|w| (w[1], w[0])).collect();
    pairs.push((ks[0], ks[0]));
    let mut c3_vals = Vec::new();
    for &(k1, k2) in &pairs {
        let a = ops.assemble_ltilde(k1).matrix;
        let b = ops.assemble_ltilde(k2).matrix;
        let d = super::OperatorMatrix {
            tag: super::OperatorTag::LtildeK,
            k: k1,
            basis: super::Basis::MeanFreeFourier,
            matrix: &a - &b,
        };
        c3_vals.push(d.min_eigenvalue()?);
    }
    let cond3 = ConditionEntry {
        pass: c3_vals.iter().all(|&v| v >= -COND3_TOL),
        margin: c3_vals.iter().copied().fold(f64::INFINITY, f64::min) + COND3_TOL,
        k_samples: pairs.iter().flat_map(|&(a, b)| [a, b]).collect(),
        values: c3_vals,
    };

    // Condition 4.
    let ev = ops.assemble_ltilde(0.0).symmetric_eigenvalues()?;
    let negatives = ev.iter().filter(|&&v| v < -NEGATIVE_TOL).count();
    let gap = ev[1] - ev[0];
    let cond4 = ConditionEntry {
        pass: negatives == 1,
        margin: if negatives == 1 { gap } else { -1.0 },
        k_samples: vec![0.0],
        values: ev[..3.min(ev.len())].to_vec(),
    };

    Ok(ConditionReport {
        k_threshold,
        cond1,
        cond1_hf_slopes: hf,
        cond1_secant_slopes: secants,
        cond2,
        cond3,
        cond4,
    })
}
