//! Acceptance suite at the reference parameters `(c, κ) = (3, 1)`,
//! `Nx = 1024`, `Ny = 32`. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::time::Instant;

use chkp_core::experiment::{prepare, run_prepared, ExperimentConfig, Prepared};
use chkp_core::grenier::{build_hierarchy, HierarchyConfig, HierarchyResult};
use chkp_core::sim::{error_field, SimState, StateKind};
use chkp_core::soliton::{compute_soliton, linear_fit, properties_report, traveling_wave_residual};
use chkp_core::stability::{a_infinity_check, fd_leading_eigenvalue, wave_hc_spectrum};
use chkp_core::{Field2D, Grid1D, Result, Simulator, C64};

const C: f64 = 3.0;
const KAPPA: f64 = 1.0;
const DT: f64 = 0.02;
const STRIDE: usize = 25;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn c1_solitary_wave() -> Result<Outcome> {
    let start = Instant::now();
    let w = compute_soliton(C, KAPPA, Grid1D::for_wave(C, KAPPA, 1024)?)?;
    let elapsed = start.elapsed().as_secs_f64();
    let res = traveling_wave_residual(&w);
    let props = properties_report(&w);
    let expected = -(1.0 - 2.0 * KAPPA / C).sqrt();
    let tail_err = ((-props.decay_rate) / expected - 1.0).abs();
    outcome(
        res < 1e-8 && props.peak_error < 1e-10 && tail_err < 0.01 && elapsed < 5.0,
        format!(
            "residual {res:.2e}, peak error {:.2e}, tail slope {:.5} (rel err {tail_err:.2e}), {elapsed:.2}s",
            props.peak_error, -props.decay_rate
        ),
    )
}

fn c2_hc_spectrum() -> Result<Outcome> {
    let mut parts = Vec::new();
    let mut pass = true;
    for n in [1024, 2048] {
        let w = compute_soliton(C, KAPPA, Grid1D::for_wave(C, KAPPA, n)?)?;
        let s = wave_hc_spectrum(&w, 1e-6)?;
        pass &= s.negative_count == 1 && s.near_zero_count == 1 && s.kernel_cosine > 0.999 && s.first_positive > 1e-4;
        parts.push(format!(
            "Nx={n}: {} neg, {} zero (cos {:.6}), first positive {:.4}",
            s.negative_count, s.near_zero_count, s.kernel_cosine, s.first_positive
        ));
    }
    outcome(pass, parts.join("; "))
}

fn c3_conditions(p: &Prepared) -> Result<Outcome> {
    let r = &p.conditions;
    let increasing = r.cond1.values.windows(2).all(|w| w[1] > w[0]);
    let c2_exact = r
        .cond2
        .values
        .iter()
        .zip(&r.cond2.k_samples)
        .all(|(v, k)| *v == k * k && *v > 0.0);
    let c3_ok = r.cond3.values.iter().all(|&v| v >= -1e-10);
    let pass = r.all_pass() && increasing && c2_exact && c3_ok && r.verdicts_from_data().iter().all(|&b| b);
    outcome(
        pass,
        format!(
            "K = {:.4}; cond1 min {:.3e} on {} samples (increasing: {increasing}); cond2 = k² exactly: {c2_exact}; \
             cond3 min {:.2e}; cond4 eigenvalues {:?}",
            r.k_threshold,
            r.cond1.margin,
            r.cond1.values.len(),
            r.cond3.values.iter().copied().fold(f64::INFINITY, f64::min),
            r.cond4.values
        ),
    )
}

fn c4_band(p: &Prepared) -> Result<Outcome> {
    let b = &p.branch;
    let k_found = p.conditions.k_threshold;
    let (lo, hi) = b.band.unwrap_or((f64::NAN, f64::NAN));
    let has_band = b.samples.iter().any(|s| s.sigma.re > 1e-4) && lo < hi;
    let beyond = b
        .samples
        .iter()
        .filter(|s| s.k >= k_found)
        .all(|s| s.sigma.re <= b.tol_growth)
        && hi <= k_found;
    let fd = fd_leading_eigenvalue(&p.wave, p.mode.k0)?;
    let rel = (fd.re - p.mode.sigma0.re).abs() / p.mode.sigma0.re;
    outcome(
        has_band && beyond && rel < 5e-3,
        format!(
            "band ({lo:.3e}, {hi:.5}), K = {k_found:.4}, stable beyond K: {beyond}; σ(k₀={:.4}) spectral {:.7} vs FD {:.7} (rel {rel:.2e})",
            p.mode.k0, p.mode.sigma0.re, fd.re
        ),
    )
}

fn c5_a_infinity() -> Result<Outcome> {
    let sigmas: Vec<C64> = (0..5)
        .map(|i| C64::new(0.02 + 0.1 * i as f64, 0.05 * i as f64))
        .collect();
    let mut pass = true;
    let mut worst = f64::INFINITY;
    for k in [0.05, 0.1, 0.2, 0.5, 1.0] {
        let v = a_infinity_check(C, KAPPA, k, &sigmas)?;
        pass &= v.pass && v.samples.len() == 5;
        for s in &v.samples {
            pass &= s.roots.len() == 4 && s.min_abs_re > 0.0 && s.analytic_margin == k * k;
            worst = worst.min(s.min_abs_re);
        }
    }
    outcome(
        pass,
        format!("25 samples, min |Re λ| = {worst:.3e}, analytic margin = k² at every k"),
    )
}

fn c6_linear_regime(p: &Prepared) -> Result<Outcome> {
    let sigma = p.mode.rate();
    let delta = 1e-6;
    let mut sim = Simulator::new(&p.wave, p.grid, DT)?;
    let v0 = p.mode.seed_field(p.grid)?.scaled(delta);
    let n0 = v0.sobolev_norm(0.0);
    let mut state = SimState::new(v0, StateKind::Perturbation, C);
    let steps = (2.0 / sigma / DT).ceil() as usize;
    let mut worst: f64 = 0.0;
    for _ in 0..steps {
        sim.step(&mut state)?;
        let ratio = state.field.sobolev_norm(0.0) / n0 / (sigma * state.t).exp();
        worst = worst.max((ratio - 1.0).abs());
    }
    outcome(
        worst < 0.01,
        format!("max |‖v‖/(δ e^(σ₀t)) - 1| = {worst:.2e} over t ∈ [0, {:.2}]", state.t),
    )
}

fn c7_conservation(p: &Prepared) -> Result<Outcome> {
    let grid = p.grid;
    let k0 = grid.k0();
    let mut v = Field2D::from_fn(grid, |x, y| {
        let g = (-(x / 6.0).powi(2)).exp();
        0.1 * (g * (1.0 + 0.5 * (k0 * y).cos()) * (x / 4.0).sin() + 0.3 * g * x / 5.0 * (2.0 * k0 * y + 0.4).sin())
    });
    v.project_kp_constraint();
    let drift = |dt: f64| -> Result<(f64, f64)> {
        let mut sim = Simulator::new(&p.wave, grid, dt)?;
        let mut s = SimState::new(v.add(sim.wave_field()), StateKind::Full, C);
        let tr = sim.run_until(&mut s, 10.0, 10)?;
        Ok((tr.h_drift(), tr.q_drift()))
    };
    let (h1, q1) = drift(DT)?;
    let (h2, q2) = drift(DT / 2.0)?;
    let (rh, rq) = (h1 / h2, q1 / q2);
    outcome(
        h1 < 1e-6 && q1 < 1e-6 && rh >= 8.0 && rq >= 8.0,
        format!(
            "T = 10, dt {DT} → {}: H drift {h1:.2e} → {h2:.2e} (×{rh:.1}), Q drift {q1:.2e} → {q2:.2e} (×{rq:.1})",
            DT / 2.0
        ),
    )
}

fn c8_hierarchy(p: &Prepared, h: &HierarchyResult) -> Result<Outcome> {
    let sigma = p.mode.rate();
    let zero_init = h.stacks(0)[1..]
        .iter()
        .all(|s| s.as_flat().iter().all(|c| *c == C64::new(0.0, 0.0)));
    let last = h.times().len() - 1;
    let support_ok = h
        .stacks(last)
        .iter()
        .enumerate()
        .all(|(k, s)| s.support().iter().all(|j| j.unsigned_abs() as usize <= k + 1));
    let ladder_ok = h.growth().iter().all(|g| g.fitted_rate <= g.predicted_rate * 1.02);
    let ladder: Vec<String> = h
        .growth()
        .iter()
        .map(|g| format!("{:.4}/{:.4}", g.fitted_rate, g.predicted_rate))
        .collect();
    let sim = Simulator::new(&p.wave, p.grid, DT)?;
    let idx = h.index_of(10.0)?;
    let mut slopes = Vec::new();
    for order in [1usize, 2] {
        let mut pts = Vec::new();
        for d in [1e-2f64, 1e-3, 1e-4] {
            pts.push((d.ln(), h.residual(&sim, d, idx, order)?.sobolev_norm(0.0).ln()));
        }
        slopes.push(linear_fit(&pts).map_or(f64::NAN, |f| f.0));
    }
    let slope_ok = slopes.iter().zip([3.0, 4.0]).all(|(s, e)| (s - e).abs() <= 0.15);
    outcome(
        zero_init && support_ok && ladder_ok && slope_ok,
        format!(
            "vᵏ(0)=0: {zero_init}; support ⊆ [-(k+1), k+1]: {support_ok}; fitted/predicted rates (σ₀ = {sigma:.5}) [{}]; \
             ‖G‖ slopes at t = 10: M=1 {:.3}, M=2 {:.3}",
            ladder.join(", "),
            slopes[0],
            slopes[1]
        ),
    )
}

fn c9_error_field(p: &Prepared, h: &HierarchyResult) -> Result<Outcome> {
    let t_fixed = 10.0;
    let steps = (t_fixed / DT).round() as usize;
    let idx = h.index_of(t_fixed)?;
    let order = h.order();
    let mut pts = Vec::new();
    let mut w0_exact = true;
    for d in [1e-2f64, 1e-3, 1e-4] {
        let mut sim = Simulator::new(&p.wave, p.grid, DT)?;
        let v0 = h.vap_stack(d, 0, order).synthesize(&p.grid)?;
        w0_exact &= error_field(&v0, &h.vap_stack(d, 0, order).synthesize(&p.grid)?)?.norms == [0.0; 3];
        let seed = p.mode.seed_field(p.grid)?.scaled(d);
        w0_exact &= v0.sub(&seed).sobolev_norm(0.0) <= 1e-14 * seed.sobolev_norm(0.0);
        let mut state = SimState::new(v0, StateKind::Perturbation, C);
        for _ in 0..steps {
            sim.step(&mut state)?;
        }
        let vap = h.vap_stack(d, idx, order).synthesize(&p.grid)?;
        let w = error_field(&state.field, &vap)?;
        pts.push((d.ln(), w.norms[0].ln()));
    }
    let slope = linear_fit(&pts).map_or(f64::NAN, |f| f.0);
    let expected = order as f64 + 2.0;
    let norms: Vec<String> = pts.iter().map(|q| format!("{:.2e}", q.1.exp())).collect();
    outcome(
        w0_exact && (slope - expected).abs() <= 0.2,
        format!(
            "w(0) = 0 exactly: {w0_exact}; ‖w(10)‖₀ for δ = 1e-2, 1e-3, 1e-4: [{}], slope {slope:.3} (M+2 = {expected})",
            norms.join(", ")
        ),
    )
}

fn c10_instability(p: &Prepared) -> Result<Outcome> {
    let r = run_prepared(p)?;
    let s = r.scaling.as_ref();
    let slope_dev = s.map_or(f64::INFINITY, |s| (s.slope / s.predicted_slope - 1.0).abs());
    let r2 = s.map_or(0.0, |s| s.r2);
    let chain = r.runs.iter().all(|x| x.chain_holds == Some(true));
    let eta = r.eta.unwrap_or(0.0);
    let succeeded = r.runs.iter().all(|x| x.succeeded());
    let dists: Vec<String> = r
        .runs
        .iter()
        .map(|x| {
            format!(
                "{:e}: T_meas {:.3} d {:.4}",
                x.delta,
                x.t_meas.unwrap_or(f64::NAN),
                x.distance.unwrap_or(f64::NAN)
            )
        })
        .collect();
    outcome(
        succeeded && r2 > 0.99 && slope_dev <= 0.1 && eta > 0.0 && chain,
        format!(
            "θ = {}, slope {:.4} vs 1/Re σ₀ = {:.4} (dev {slope_dev:.2e}), R² = {r2:.6}, η = {eta:.4}, chain holds: {chain}; [{}]",
            r.theta,
            s.map_or(f64::NAN, |s| s.slope),
            1.0 / r.mode.sigma0_re,
            dists.join("; ")
        ),
    )
}

fn report(n: usize, name: &str, r: Result<Outcome>) -> bool {
    let (pass, detail) = match r {
        Ok(o) => (o.pass, o.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    println!(
        "criterion {n:>2} [{name}]: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}

fn main() {
    let start = Instant::now();
    let mut all = true;
    all &= report(1, "solitary wave", c1_solitary_wave());
    all &= report(2, "H_c spectrum", c2_hc_spectrum());

    let cfg = ExperimentConfig::default();
    let prepared = match prepare(&cfg) {
        Ok(p) => p,
        Err(e) => {
            for (n, name) in (3..=10).zip([
                "conditions",
                "band",
                "A_inf",
                "linear",
                "conservation",
                "hierarchy",
                "error field",
                "instability",
            ]) {
                report(n, name, Err(e.clone_message()));
            }
            std::process::exit(1);
        }
    };
    all &= report(3, "RT conditions", c3_conditions(&prepared));
    all &= report(4, "unstable band", c4_band(&prepared));
    all &= report(5, "A_inf check", c5_a_infinity());
    all &= report(6, "linear regime", c6_linear_regime(&prepared));
    all &= report(7, "conservation", c7_conservation(&prepared));
    let hierarchy = build_hierarchy(
        &prepared.wave,
        &prepared.mode,
        HierarchyConfig {
            order: 2,
            dt: DT,
            t_end: 40.0,
            stride: STRIDE,
        },
    );
    match &hierarchy {
        Ok(h) => {
            all &= report(8, "Grenier hierarchy", c8_hierarchy(&prepared, h));
            all &= report(9, "error field", c9_error_field(&prepared, h));
        }
        Err(e) => {
            all &= report(8, "Grenier hierarchy", Err(e.clone_message()));
            all &= report(9, "error field", Err(e.clone_message()));
        }
    }
    all &= report(10, "instability experiment", c10_instability(&prepared));
    println!(
        "acceptance: {} in {:.0}s",
        if all { "ALL PASS" } else { "FAILURES" },
        start.elapsed().as_secs_f64()
    );
    if !all {
        std::process::exit(1);
    }
}

trait CloneMessage {
    fn clone_message(&self) -> chkp_core::Error;
}

impl CloneMessage for chkp_core::Error {
    fn clone_message(&self) -> chkp_core::Error {
        chkp_core::Error::Config(self.to_string())
    }
}
