use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::svg::{LinePlot, Series};
use crate::error::{Error, Result};

/// A pass/fail verdict with its worst-case margin (positive = satisfied).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub margin: Option<f64>,
}

impl Verdict {
    pub fn new(name: &str, pass: bool, margin: f64) -> Self {
        Self {
            name: name.into(),
            pass,
            margin: margin.is_finite().then_some(margin),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    pub k0: f64,
    pub m0: i64,
    pub sigma0_re: f64,
    pub sigma0_im: f64,
    /// Largest integer `m` with `m k₀` inside the band.
    pub largest_unstable_m: i64,
    pub complex_sigma_flag: bool,
    /// `c_s = ‖Π v⁰(0)‖₀`.
    pub c_s: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub k: f64,
    pub re_sigma: f64,
    pub im_sigma: f64,
}

/// One row of `growth_<δ>.csv`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub t: f64,
    pub norm_pi_v: f64,
    pub norm_w: f64,
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "Q")]
    pub q: f64,
}

/// Outcome of the nonlinear run for one `δ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaRecord {
    pub delta: f64,
    /// `T^δ = log(θ/δ) / Re σ₀`.
    pub t_pred: f64,
    /// First time with `‖Πv‖₀ ≥ c_sθ/2`.
    pub t_meas: Option<f64>,
    /// Same with `θ` doubled.
    pub t_meas_2theta: Option<f64>,
    /// Stored time at which the distance and the chain are evaluated
    /// (first stored time `≥ T^δ`).
    pub t_eval: Option<f64>,
    pub distance: Option<f64>,
    pub shift: Option<f64>,
    pub norm_pi_v_eval: Option<f64>,
    pub norm_pi_vap_eval: Option<f64>,
    pub norm_w_eval: Option<f64>,
    /// `distance ≥ ‖Πv^ap‖₀ - ‖w‖₀` at `t_eval`.
    pub chain_holds: Option<bool>,
    /// Log-slope of `‖Πv‖₀` over the linear window.
    pub growth_rate: Option<f64>,
    pub growth_window: Option<(f64, f64)>,
    pub max_norm_w: Option<f64>,
    /// `max ‖w‖_s` with the configured Sobolev index.
    pub max_norm_w_s: Option<f64>,
    /// `max |v(±L, y)| / max |v|` at `t_eval`.
    pub boundary_amplitude: Option<f64>,
    pub boundary_flag: bool,
    pub h_drift: Option<f64>,
    pub q_drift: Option<f64>,
    pub trace: Vec<TracePoint>,
    pub error: Option<String>,
}

impl DeltaRecord {
    pub(crate) fn failed(delta: f64, t_pred: f64, error: &Error) -> Self {
        Self {
            delta,
            t_pred,
            t_meas: None,
            t_meas_2theta: None,
            t_eval: None,
            distance: None,
            shift: None,
            norm_pi_v_eval: None,
            norm_pi_vap_eval: None,
            norm_w_eval: None,
            chain_holds: None,
            growth_rate: None,
            growth_window: None,
            max_norm_w: None,
            max_norm_w_s: None,
            boundary_amplitude: None,
            boundary_flag: false,
            h_drift: None,
            q_drift: None,
            trace: Vec::new(),
            error: Some(error.to_string()),
        }
    }

    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }
}

/// One row of `scaling.csv`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub delta: f64,
    #[serde(rename = "T_delta_pred")]
    pub t_delta_pred: f64,
    #[serde(rename = "T_meas")]
    pub t_meas: f64,
    #[serde(rename = "distance_at_T")]
    pub distance_at_t: f64,
}

/// Least-squares fit `T_meas ≈ slope · log(1/δ) + intercept`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// `1 / Re σ₀`.
    pub predicted_slope: f64,
    pub rows: Vec<ScalingRow>,
    /// Intercept shift between the `2θ` and `θ` fits, and its prediction
    /// `log 2 / Re σ₀`.
    pub theta_doubling_shift: Option<f64>,
    pub theta_doubling_predicted: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub c: f64,
    pub kappa: f64,
    pub nx: usize,
    pub ny: usize,
    pub half_length: f64,
    pub theta: f64,
    pub hierarchy_order: usize,
    pub sobolev_s: f64,
    pub dt: f64,
    pub mode: ModeSummary,
    pub band: Option<(f64, f64)>,
    pub branch: Vec<BranchPoint>,
    /// The four sufficient conditions for instability.
    pub conditions: Vec<Verdict>,
    pub runs: Vec<DeltaRecord>,
    pub scaling: Option<ScalingFit>,
    /// Common distance floor: the minimum distance at `T^δ` over the runs.
    pub eta: Option<f64>,
    /// Experiment verdicts (growth, scaling, distance floor, chain).
    pub verdicts: Vec<Verdict>,
    /// Paths written by [`emit_outputs`], relative to the output directory.
    pub artifacts: Vec<String>,
}

impl RunReport {
    pub fn all_pass(&self) -> bool {
        self.conditions.iter().chain(&self.verdicts).all(|v| v.pass)
    }
}

pub(crate) fn delta_tag(delta: f64) -> String {
    format!("{delta:e}")
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

pub fn write_branch_csv(path: &Path, branch: &[BranchPoint]) -> Result<()> {
    let mut w = csv_writer(path)?;
    for p in branch {
        w.serialize(p)?;
    }
    if branch.is_empty() {
        w.write_record(["k", "re_sigma", "im_sigma"])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_growth_csv(path: &Path, trace: &[TracePoint]) -> Result<()> {
    let mut w = csv_writer(path)?;
    for p in trace {
        w.serialize(p)?;
    }
    if trace.is_empty() {
        w.write_record(["t", "norm_pi_v", "norm_w", "H", "Q"])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_scaling_csv(path: &Path, rows: &[ScalingRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record(["delta", "T_delta_pred", "T_meas", "distance_at_T"])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_report(path: &Path) -> Result<RunReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Writes `branch.csv`, `growth_<δ>.csv`, `scaling.csv`, the three SVG
/// plots and `report.json` (which lists the other artifacts) into `dir`.
/// Returns the report as written.
pub fn emit_outputs(report: &RunReport, dir: &Path) -> Result<RunReport> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut artifacts = Vec::new();
    let mut put = |name: String| -> PathBuf {
        artifacts.push(name.clone());
        dir.join(name)
    };

    write_branch_csv(&put("branch.csv".into()), &report.branch)?;
    for run in report.runs.iter().filter(|r| !r.trace.is_empty()) {
        write_growth_csv(&put(format!("growth_{}.csv", delta_tag(run.delta))), &run.trace)?;
    }
    let rows = report.scaling.as_ref().map_or(&[][..], |s| &s.rows[..]);
    write_scaling_csv(&put("scaling.csv".into()), rows)?;

    write_text(&put("branch.svg".into()), &branch_plot(report).render())?;
    write_text(&put("growth.svg".into()), &growth_plot(report).render())?;
    write_text(&put("scaling.svg".into()), &scaling_plot(report).render())?;

    let mut out = report.clone();
    artifacts.push("report.json".into());
    out.artifacts = artifacts;
    let json = serde_json::to_string_pretty(&out)?;
    write_text(&dir.join("report.json"), &json)?;
    Ok(out)
}

fn branch_plot(r: &RunReport) -> LinePlot {
    let mut p = LinePlot::new("Unstable branch", "k", "Re σ(k)");
    p.push(Series::line("Re σ", r.branch.iter().map(|b| (b.k, b.re_sigma)).collect()).with_markers());
    p.push(Series::line(
        "Re σ (line)",
        r.branch.iter().map(|b| (b.k, b.re_sigma)).collect(),
    ));
    p
}

fn growth_plot(r: &RunReport) -> LinePlot {
    let mut p = LinePlot::new("Growth of the off-mean part", "t", "log ‖Πv‖₀");
    let sigma = r.mode.sigma0_re;
    for run in r.runs.iter().filter(|r| !r.trace.is_empty()) {
        let pts = run
            .trace
            .iter()
            .filter(|q| q.norm_pi_v > 0.0)
            .map(|q| (q.t, q.norm_pi_v.ln()))
            .collect();
        p.push(Series::line(format!("δ = {}", delta_tag(run.delta)), pts));
    }
    // Reference slope σ₀ through the smallest δ's start.
    if let Some(run) = r
        .runs
        .iter()
        .filter(|r| !r.trace.is_empty())
        .min_by(|a, b| a.delta.total_cmp(&b.delta))
    {
        let t_end = run.trace.last().map_or(0.0, |q| q.t);
        let y0 = (run.delta * r.mode.c_s).ln();
        p.push(Series::line("slope Re σ₀", vec![(0.0, y0), (t_end, y0 + sigma * t_end)]).dashed());
    }
    p
}

fn scaling_plot(r: &RunReport) -> LinePlot {
    let mut p = LinePlot::new("Escape time", "log(1/δ)", "T");
    if let Some(s) = &r.scaling {
        let pts: Vec<(f64, f64)> = s.rows.iter().map(|q| ((1.0 / q.delta).ln(), q.t_meas)).collect();
        let (lo, hi) = pts
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), q| (a.min(q.0), b.max(q.0)));
        p.push(Series::line("T_meas", pts).with_markers());
        if lo.is_finite() {
            p.push(Series::line(
                "fit",
                vec![(lo, s.intercept + s.slope * lo), (hi, s.intercept + s.slope * hi)],
            ));
            p.push(
                Series::line(
                    "T^δ = log(θ/δ)/Re σ₀",
                    s.rows.iter().map(|q| ((1.0 / q.delta).ln(), q.t_delta_pred)).collect(),
                )
                .dashed(),
            );
        }
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(delta: f64) -> DeltaRecord {
        let trace = (0..5)
            .map(|i| TracePoint {
                t: i as f64 * 0.5,
                norm_pi_v: delta * (0.12 * i as f64 * 0.5).exp(),
                norm_w: 1e-3 * delta * delta,
                h: -1.2345678901234567,
                q: 10.0 + 1.0 / 3.0,
            })
            .collect();
        DeltaRecord {
            t_meas: Some(50.0),
            t_eval: Some(51.0),
            distance: Some(0.04),
            chain_holds: Some(true),
            growth_window: Some((0.0, 2.0)),
            error: None,
            trace,
            ..DeltaRecord::failed(delta, 60.0, &Error::Config("x".into()))
        }
    }

    pub(crate) fn sample_report() -> RunReport {
        RunReport {
            c: 3.0,
            kappa: 1.0,
            nx: 1024,
            ny: 32,
            half_length: 69.28203230275509,
            theta: 0.05,
            hierarchy_order: 2,
            sobolev_s: 1.0,
            dt: 0.02,
            mode: ModeSummary {
                k0: 0.2085,
                m0: 1,
                sigma0_re: 0.1221679,
                sigma0_im: 0.0,
                largest_unstable_m: 1,
                complex_sigma_flag: false,
                c_s: 1.0,
            },
            band: Some((1e-6, 0.3216)),
            branch: vec![
                BranchPoint {
                    k: 0.0,
                    re_sigma: 0.0,
                    im_sigma: 0.0,
                },
                BranchPoint {
                    k: 0.1,
                    re_sigma: 0.09,
                    im_sigma: 0.0,
                },
            ],
            conditions: vec![
                Verdict::new("cond1", true, 0.3),
                Verdict::new("cond2", true, f64::INFINITY),
            ],
            runs: vec![record(1e-3), record(1e-4), record(1e-5)],
            scaling: Some(ScalingFit {
                slope: 8.2,
                intercept: 1.0,
                r2: 0.9999,
                predicted_slope: 8.18,
                rows: vec![ScalingRow {
                    delta: 1e-3,
                    t_delta_pred: 32.0,
                    t_meas: 26.0,
                    distance_at_t: 0.05,
                }],
                theta_doubling_shift: Some(5.6),
                theta_doubling_predicted: 5.67,
            }),
            eta: Some(0.04),
            verdicts: vec![Verdict::new("growth", true, 0.01)],
            artifacts: Vec::new(),
        }
    }

    #[test]
    fn json_roundtrip_is_exact() {
        let r = sample_report();
        let text = serde_json::to_string(&r).unwrap();
        let back: RunReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(r.conditions[1].margin, None);
    }

    #[test]
    fn emitted_files_match_the_schemas() {
        let dir = tempfile::tempdir().unwrap();
        let written = emit_outputs(&sample_report(), dir.path()).unwrap();
        let head = |name: &str| {
            std::fs::read_to_string(dir.path().join(name))
                .unwrap()
                .lines()
                .next()
                .unwrap()
                .to_string()
        };
        assert_eq!(head("branch.csv"), "k,re_sigma,im_sigma");
        assert_eq!(head("growth_1e-3.csv"), "t,norm_pi_v,norm_w,H,Q");
        assert_eq!(head("scaling.csv"), "delta,T_delta_pred,T_meas,distance_at_T");
        let svg = std::fs::read_to_string(dir.path().join("growth.svg")).unwrap();
        let deltas = svg.matches("data-label=\"δ = ").count();
        assert_eq!(deltas, 3);
        let back = read_report(&dir.path().join("report.json")).unwrap();
        assert_eq!(back, written);
        assert!(written.artifacts.contains(&"growth_1e-5.csv".to_string()));
    }

    #[test]
    fn empty_tables_still_get_headers() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        write_scaling_csv(&p, &[]).unwrap();
        assert_eq!(
            std::fs::read_to_string(&p).unwrap().trim(),
            "delta,T_delta_pred,T_meas,distance_at_T"
        );
    }

    #[test]
    fn io_errors_carry_the_path() {
        let err = emit_outputs(&sample_report(), Path::new("/proc/definitely/not/writable")).unwrap_err();
        assert!(err.to_string().contains("/proc/definitely"), "{err}");
    }
}
