use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::distance::orbital_distance;
use super::report::{BranchPoint, DeltaRecord, ModeSummary, RunReport, ScalingFit, ScalingRow, TracePoint, Verdict};
use crate::error::{Error, Result};
use crate::grenier::{build_hierarchy, HierarchyConfig, HierarchyResult};
use crate::sim::{error_field, SimState, Simulator, StateKind};
use crate::soliton::{compute_soliton, linear_fit, SolitaryWave};
use crate::spectral::{Field2D, Grid2D};
use crate::stability::{
    argmax_growth, scan_branch_with, select_most_unstable, verify_rt_conditions, ConditionReport, EigenBranch,
    UnstableMode, WaveOperators,
};

/// `θ / (c - 2κ)` factors of the θ sweep.
pub const THETA_SWEEP: [f64; 3] = [0.01, 0.05, 0.1];

/// The linear window ends where `‖Πv‖₀` reaches this fraction of the escape
/// threshold.
const LINEAR_WINDOW_FRACTION: f64 = 0.1;
/// `max |v(±L, y)| / max |v|` above which a run is flagged.
const BOUNDARY_FLAG: f64 = 1e-3;

pub type ScalingTable = ScalingFit;

/// Everything upstream of the nonlinear runs.
#[derive(Clone)]
pub struct Prepared {
    pub config: ExperimentConfig,
    pub wave: SolitaryWave,
    pub branch: EigenBranch,
    pub conditions: ConditionReport,
    pub mode: UnstableMode,
    /// `ℝ × 𝕋_a` grid with `a = 2π/k₀`.
    pub grid: Grid2D,
}

/// Soliton, branch scan, condition report and mode selection. The
/// transverse period is set by the maximizer `k₀` of `Re σ(k)` on the band.
pub fn prepare(config: &ExperimentConfig) -> Result<Prepared> {
    config.validate()?;
    let p = config.params()?;
    let wave = compute_soliton(p.c, p.kappa, config.x_grid()?)?;
    let ops = WaveOperators::new(&wave);
    let st = &config.stability;
    let branch = scan_branch_with(&ops, 0.0, st.k_max, st.k_samples, st.tol_growth, 1e-9)?;
    let (lo, hi) = branch.band.ok_or(Error::NoUnstableMode { k0: 0.0, band_hi: 0.0 })?;
    let cond_ks: Vec<f64> = (0..st.cond_samples)
        .map(|i| st.cond_k_max * i as f64 / (st.cond_samples - 1) as f64)
        .collect();
    let conditions = verify_rt_conditions(&ops, &cond_ks)?;
    let (k0, _) = argmax_growth(&ops, lo, hi, 1e-4)?;
    let mode = select_most_unstable(&ops, &branch, k0)?;
    let grid = Grid2D::new(*wave.grid(), mode.k0, config.grid.ny)?;
    Ok(Prepared {
        config: config.clone(),
        wave,
        branch,
        conditions,
        mode,
        grid,
    })
}

pub fn run_instability(config: &ExperimentConfig) -> Result<RunReport> {
    run_prepared(&prepare(config)?)
}

/// `T^δ = log(θ/δ) / Re σ₀`.
fn predicted_time(theta: f64, delta: f64, sigma: f64) -> f64 {
    (theta / delta).ln() / sigma
}

/// The nonlinear sweep over `δ` on top of [`prepare`]. Per-δ failures are
/// recorded in the corresponding [`DeltaRecord`] and do not abort the sweep.
pub fn run_prepared(p: &Prepared) -> Result<RunReport> {
    let cfg = &p.config;
    let sigma = p.mode.rate();
    let theta = cfg.theta();
    let seed = p.mode.seed_field(p.grid)?;
    let c_s = seed.project_offzero_y().sobolev_norm(0.0);

    let step_time = cfg.run.dt * cfg.run.stride as f64;
    let t_last = cfg
        .run
        .delta_list
        .iter()
        .map(|&d| predicted_time(theta, d, sigma))
        .fold(0.0, f64::max);
    let horizon = t_last + 2f64.ln() / sigma + 2.0 * step_time;
    let hierarchy = build_hierarchy(
        &p.wave,
        &p.mode,
        HierarchyConfig {
            order: cfg.run.hierarchy_order,
            dt: cfg.run.dt,
            t_end: horizon,
            stride: cfg.run.stride,
        },
    )?;

    let runs: Vec<DeltaRecord> = cfg
        .run
        .delta_list
        .par_iter()
        .map(|&delta| {
            run_delta(p, &hierarchy, c_s, delta)
                .unwrap_or_else(|e| DeltaRecord::failed(delta, predicted_time(theta, delta, sigma), &e))
        })
        .collect();

    let scaling = fit_scaling(&runs, sigma).ok();
    let eta = runs
        .iter()
        .map(|r| r.distance)
        .collect::<Option<Vec<f64>>>()
        .filter(|d| !d.is_empty())
        .map(|d| d.into_iter().fold(f64::INFINITY, f64::min));

    let conditions = vec![
        Verdict::new("cond1_positivity", p.conditions.cond1.pass, p.conditions.cond1.margin),
        Verdict::new("cond2_symbol", p.conditions.cond2.pass, p.conditions.cond2.margin),
        Verdict::new("cond3_monotone", p.conditions.cond3.pass, p.conditions.cond3.margin),
        Verdict::new("cond4_one_negative", p.conditions.cond4.pass, p.conditions.cond4.margin),
    ];
    let verdicts = experiment_verdicts(&runs, scaling.as_ref(), eta, sigma);

    Ok(RunReport {
        c: cfg.physics.c,
        kappa: cfg.physics.kappa,
        nx: cfg.grid.nx,
        ny: cfg.grid.ny,
        half_length: p.wave.grid().half_length(),
        theta,
        hierarchy_order: cfg.run.hierarchy_order,
        sobolev_s: cfg.run.sobolev_s,
        dt: cfg.run.dt,
        mode: ModeSummary {
            k0: p.mode.k0,
            m0: p.mode.m0,
            sigma0_re: p.mode.sigma0.re,
            sigma0_im: p.mode.sigma0.im,
            largest_unstable_m: p.mode.largest_unstable_m,
            complex_sigma_flag: p.mode.complex_sigma_flag,
            c_s,
        },
        band: p.branch.band,
        branch: p
            .branch
            .samples
            .iter()
            .map(|s| BranchPoint {
                k: s.k,
                re_sigma: s.sigma.re,
                im_sigma: s.sigma.im,
            })
            .collect(),
        conditions,
        runs,
        scaling,
        eta,
        verdicts,
        artifacts: Vec::new(),
    })
}

fn experiment_verdicts(
    runs: &[DeltaRecord],
    scaling: Option<&ScalingFit>,
    eta: Option<f64>,
    sigma: f64,
) -> Vec<Verdict> {
    let mut out = Vec::new();
    let all_ok = runs.iter().all(DeltaRecord::succeeded);
    out.push(Verdict::new(
        "runs_succeeded",
        all_ok,
        runs.iter().filter(|r| r.succeeded()).count() as f64 - runs.len() as f64,
    ));

    // Runs whose initial amplitude already exceeds the linear window carry
    // no fit; the verdict needs at least one fitted run and judges those.
    let growth_devs: Vec<f64> = runs
        .iter()
        .filter_map(|r| r.growth_rate.map(|g| (g / sigma - 1.0).abs()))
        .collect();
    let margin = if growth_devs.is_empty() {
        f64::NEG_INFINITY
    } else {
        0.05 - growth_devs.iter().copied().fold(0.0, f64::max)
    };
    out.push(Verdict::new("growth_rate_within_5pct", margin >= 0.0, margin));

    match scaling {
        Some(s) => {
            let slope_dev = (s.slope / s.predicted_slope - 1.0).abs();
            out.push(Verdict::new(
                "scaling_slope_within_10pct",
                slope_dev <= 0.1,
                0.1 - slope_dev,
            ));
            out.push(Verdict::new("scaling_r2", s.r2 > 0.99, s.r2 - 0.99));
            if let Some(shift) = s.theta_doubling_shift {
                let dev = (shift / s.theta_doubling_predicted - 1.0).abs();
                out.push(Verdict::new("theta_doubling_shift_within_10pct", dev <= 0.1, 0.1 - dev));
            }
        }
        None => out.push(Verdict::new("scaling_fit", false, f64::NEG_INFINITY)),
    }

    let floor = eta.unwrap_or(f64::NEG_INFINITY);
    out.push(Verdict::new("distance_floor_positive", all_ok && floor > 0.0, floor));
    let chain = runs.iter().all(|r| r.chain_holds == Some(true));
    out.push(Verdict::new(
        "triangle_chain",
        chain,
        runs.iter()
            .filter_map(|r| Some(r.distance? - (r.norm_pi_vap_eval? - r.norm_w_eval?)))
            .fold(f64::INFINITY, f64::min),
    ));
    out
}

/// Least-squares fit of the measured escape times against `log(1/δ)`.
///
/// Errors with [`Error::InsufficientData`] when fewer than three runs have
/// an escape time.
pub fn fit_scaling(runs: &[DeltaRecord], sigma: f64) -> Result<ScalingFit> {
    let ok: Vec<&DeltaRecord> = runs.iter().filter(|r| r.succeeded() && r.t_meas.is_some()).collect();
    if ok.len() < 3 {
        return Err(Error::InsufficientData {
            succeeded: ok.len(),
            required: 3,
        });
    }
    let pts: Vec<(f64, f64)> = ok
        .iter()
        .map(|r| ((1.0 / r.delta).ln(), r.t_meas.expect("filtered")))
        .collect();
    let (slope, intercept, r2) = linear_fit(&pts).ok_or(Error::InsufficientData {
        succeeded: ok.len(),
        required: 3,
    })?;
    let doubled: Vec<(f64, f64)> = ok
        .iter()
        .filter_map(|r| Some(((1.0 / r.delta).ln(), r.t_meas_2theta?)))
        .collect();
    let theta_doubling_shift = (doubled.len() == pts.len())
        .then(|| linear_fit(&doubled))
        .flatten()
        .map(|(_, b2, _)| b2 - intercept);
    Ok(ScalingFit {
        slope,
        intercept,
        r2,
        predicted_slope: 1.0 / sigma,
        rows: ok
            .iter()
            .map(|r| ScalingRow {
                delta: r.delta,
                t_delta_pred: r.t_pred,
                t_meas: r.t_meas.expect("filtered"),
                distance_at_t: r.distance.unwrap_or(f64::NAN),
            })
            .collect(),
        theta_doubling_shift,
        theta_doubling_predicted: 2f64.ln() / sigma,
    })
}

/// Escape-time study: needs at least three `δ` spanning two decades.
pub fn scaling_study(config: &ExperimentConfig) -> Result<ScalingTable> {
    let d = &config.run.delta_list;
    let (lo, hi) = d
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    if d.len() < 3 || hi / lo < 100.0 * (1.0 - 1e-9) {
        return Err(Error::Config(format!(
            "scaling needs at least 3 values of δ spanning 2 decades, got {d:?}"
        )));
    }
    let report = run_instability(config)?;
    fit_scaling(&report.runs, report.mode.sigma0_re)
}

/// Runs the experiment for `θ = f·(c - 2κ)`, `f ∈ THETA_SWEEP`, dropping
/// the values of `δ` that are not below `θ`.
pub fn theta_sweep(config: &ExperimentConfig) -> Result<Vec<RunReport>> {
    let base = prepare(config)?;
    let scale = config.physics.c - 2.0 * config.physics.kappa;
    THETA_SWEEP
        .iter()
        .map(|f| {
            let mut p = base.clone();
            let theta = f * scale;
            p.config.run.theta = Some(theta);
            p.config.run.delta_list.retain(|&d| d < theta);
            run_prepared(&p)
        })
        .collect()
}

/// First time at which the sampled series `(t, n)` reaches `threshold`,
/// interpolating `log n` linearly between samples.
pub fn escape_time(series: &[(f64, f64)], threshold: f64) -> Option<f64> {
    if let Some(&(t, n)) = series.first() {
        if n >= threshold {
            return Some(t);
        }
    }
    series.windows(2).find_map(|w| crossing(w[0], w[1], threshold))
}

fn crossing((t0, n0): (f64, f64), (t1, n1): (f64, f64), threshold: f64) -> Option<f64> {
    (n0 < threshold && n1 >= threshold && n0 > 0.0).then(|| {
        let (a, b, c) = (n0.ln(), n1.ln(), threshold.ln());
        t0 + (t1 - t0) * (c - a) / (b - a)
    })
}

/// Nonlinear run from `φ + v^ap(0) = φ + δ v⁰(0)`, evolved as the
/// perturbation `v`; starting from the assembled `v^ap(0)` makes `w(0) = 0`
/// exactly.
fn run_delta(p: &Prepared, h: &HierarchyResult, c_s: f64, delta: f64) -> Result<DeltaRecord> {
    let cfg = &p.config;
    let (dt, stride) = (cfg.run.dt, cfg.run.stride);
    let sigma = p.mode.rate();
    let theta = cfg.theta();
    let t_pred = predicted_time(theta, delta, sigma);
    let thr = c_s * theta / 2.0;
    let thr2 = c_s * theta;
    let order = h.order();

    let mut sim = Simulator::with_regularization(&p.wave, p.grid, dt, cfg.run.regularization)?;
    let v0 = h.vap_stack(delta, 0, order).synthesize(&p.grid)?;
    let mut state = SimState::new(v0, StateKind::Perturbation, sim.c());

    let n_eval = ((t_pred / dt / stride as f64).ceil() as usize).max(1) * stride;
    let t_hier = *h.times().last().expect("hierarchy stores its initial state");
    let n_max = ((t_hier / dt) + 0.5).floor() as usize;
    if n_eval > n_max {
        return Err(Error::Parameter(format!(
            "evaluation time {} beyond the hierarchy horizon {t_hier}",
            n_eval as f64 * dt
        )));
    }

    let mut rec = DeltaRecord::failed(delta, t_pred, &Error::Config(String::new()));
    rec.error = None;
    let mut window: Vec<(f64, f64)> = Vec::new();
    let mut prev = (0.0, state.field.project_offzero_y().sobolev_norm(0.0));
    if prev.1 >= thr {
        rec.t_meas = Some(0.0);
    }
    let (mut max_w, mut max_ws) = (0.0f64, 0.0f64);
    let (mut h0, mut q0) = (f64::NAN, f64::NAN);
    let (mut dh, mut dq) = (0.0f64, 0.0f64);

    let mut n = 0usize;
    loop {
        let t = n as f64 * dt;
        let npv = prev.1;
        if npv <= LINEAR_WINDOW_FRACTION * thr && npv > 0.0 {
            window.push((t, npv.ln()));
        }
        if n % stride == 0 {
            let idx = h.index_of(t)?;
            let vap = h.vap_stack(delta, idx, order).synthesize(&p.grid)?;
            let err = error_field(&state.field, &vap)?;
            let (hv, qv) = sim.invariants(&state)?;
            if n == 0 {
                (h0, q0) = (hv, qv);
            }
            dh = dh.max(((hv - h0) / h0).abs());
            dq = dq.max(((qv - q0) / q0).abs());
            max_w = max_w.max(err.norms[0]);
            max_ws = max_ws.max(err.w.sobolev_norm(cfg.run.sobolev_s));
            rec.trace.push(TracePoint {
                t,
                norm_pi_v: npv,
                norm_w: err.norms[0],
                h: hv,
                q: qv,
            });
            if n == n_eval {
                let u = sim.full_field(&state);
                let od = orbital_distance(&u, &p.wave);
                let pi_vap = vap.project_offzero_y().sobolev_norm(0.0);
                let lower = pi_vap - err.norms[0];
                rec.t_eval = Some(t);
                rec.distance = Some(od.distance);
                rec.shift = Some(od.shift);
                rec.norm_pi_v_eval = Some(npv);
                rec.norm_pi_vap_eval = Some(pi_vap);
                rec.norm_w_eval = Some(err.norms[0]);
                rec.chain_holds = Some(od.distance >= lower - 1e-12 * lower.abs().max(1.0));
                let amp = boundary_amplitude(&state.field);
                rec.boundary_amplitude = Some(amp);
                rec.boundary_flag = amp > BOUNDARY_FLAG;
            }
        }
        let done_2theta = !cfg.run.theta_doubling || rec.t_meas_2theta.is_some();
        if (n >= n_eval && rec.t_meas.is_some() && done_2theta && n % stride == 0) || n >= n_max {
            break;
        }
        sim.step(&mut state)?;
        n += 1;
        let cur = (n as f64 * dt, state.field.project_offzero_y().sobolev_norm(0.0));
        if rec.t_meas.is_none() {
            rec.t_meas = crossing(prev, cur, thr);
        }
        if cfg.run.theta_doubling && rec.t_meas_2theta.is_none() {
            rec.t_meas_2theta = crossing(prev, cur, thr2);
        }
        prev = cur;
    }

    if window.len() >= 3 {
        rec.growth_rate = linear_fit(&window).map(|f| f.0);
        rec.growth_window = Some((window[0].0, window[window.len() - 1].0));
    }
    rec.max_norm_w = Some(max_w);
    rec.max_norm_w_s = Some(max_ws);
    rec.h_drift = Some(dh);
    rec.q_drift = Some(dq);
    Ok(rec)
}

/// `max_y |v(-L, y)| / max |v|`.
fn boundary_amplitude(v: &Field2D) -> f64 {
    let nx = v.grid().nx();
    let vals = v.values();
    let peak = vals.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let edge = vals.chunks_exact(nx).map(|row| row[0].abs()).fold(0.0f64, f64::max);
    if peak > 0.0 {
        edge / peak
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn escape_time_interpolates_in_log() {
        let s: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 1e-3 * (0.5 * i as f64).exp())).collect();
        let t = escape_time(&s, 1e-2).unwrap();
        assert!((t - (10f64).ln() / 0.5).abs() < 1e-12);
        assert_eq!(escape_time(&s, 1.0), None);
        assert_eq!(escape_time(&s, 1e-4), Some(0.0));
    }

    fn rec(delta: f64, t: Option<f64>) -> DeltaRecord {
        let mut r = DeltaRecord::failed(delta, 0.0, &Error::Config(String::new()));
        r.error = None;
        r.t_meas = t;
        r.t_meas_2theta = t.map(|t| t + 2f64.ln() / 0.1);
        r
    }

    #[test]
    fn scaling_fit_recovers_the_formula() {
        let sigma = 0.1;
        let runs: Vec<DeltaRecord> = [1e-3, 1e-4, 1e-5]
            .iter()
            .map(|&d: &f64| rec(d, Some((0.02 / d).ln() / sigma)))
            .collect();
        let fit = fit_scaling(&runs, sigma).unwrap();
        assert!((fit.slope - 10.0).abs() < 1e-9 && (fit.r2 - 1.0).abs() < 1e-12);
        assert!((fit.theta_doubling_shift.unwrap() - fit.theta_doubling_predicted).abs() < 1e-9);
    }

    #[test]
    fn scaling_needs_three_runs() {
        let mut runs = vec![rec(1e-3, Some(10.0)), rec(1e-4, Some(20.0)), rec(1e-5, None)];
        assert!(matches!(
            fit_scaling(&runs, 0.1),
            Err(Error::InsufficientData {
                succeeded: 2,
                required: 3
            })
        ));
        runs[2] = DeltaRecord::failed(1e-5, 1.0, &Error::Config("boom".into()));
        assert!(fit_scaling(&runs, 0.1).is_err());
    }

    #[test]
    fn scaling_study_checks_the_delta_span() {
        let mut cfg = ExperimentConfig::default();
        cfg.run.delta_list = vec![1e-3, 3e-4, 1e-4 * 1.5];
        assert!(matches!(scaling_study(&cfg), Err(Error::Config(_))));
    }
}
