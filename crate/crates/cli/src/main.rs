//! `chkp`: command-line driver for the CH-KP-I transverse instability
//! experiments.
//!
//! Every subcommand reads the same TOML configuration (`--config`, with
//! `--set key=value` overrides), prints a JSON summary on stdout and writes
//! its data files into `out.dir`. Exit status: 0 when every verdict passes,
//! 2 when a verdict fails, 1 on a runtime error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use chkp_core::experiment::{
    emit_outputs, prepare, read_report, run_instability, scaling_study, theta_sweep, write_scaling_csv,
    ExperimentConfig, Prepared,
};
use chkp_core::grenier::{build_hierarchy, HierarchyConfig};
use chkp_core::sim::{write_snapshot, write_traces, SimState, StateKind};
use chkp_core::soliton::{compute_soliton, properties_report, traveling_wave_residual};
use chkp_core::stability::{jl_eigenvalues, scan_branch_with, verify_rt_conditions, wave_hc_spectrum, WaveOperators};
use chkp_core::{Error, Result, Simulator};

#[derive(Parser, Debug)]
#[command(
    name = "chkp",
    version,
    about = "Transverse instability experiments for CH-KP-I line solitary waves"
)]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// TOML configuration file; built-in defaults when omitted.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set grid.nx=512`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Output directory (overrides `out.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute the solitary wave and check its properties.
    Soliton,
    /// Spectrum of H_c, or of JL(k) when `--k` is given.
    Spectrum {
        #[arg(long)]
        k: Option<f64>,
        /// Number of eigenvalues (largest real part first) printed for JL(k).
        #[arg(long, default_value_t = 6)]
        count: usize,
    },
    /// Scan the unstable branch σ(k) and write branch.csv.
    Scan,
    /// Check the four sufficient conditions for transverse instability.
    RtCheck,
    /// Build the approximate solution hierarchy and report growth rates.
    Grenier {
        /// Final time (defaults to 40).
        #[arg(long, default_value_t = 40.0)]
        t_end: f64,
    },
    /// Evolve the wave plus δ times the unstable mode.
    Simulate {
        #[arg(long, default_value_t = 10.0)]
        t_end: f64,
        /// Perturbation amplitude; first entry of `run.delta_list` by default.
        #[arg(long)]
        delta: Option<f64>,
        /// Evolve the perturbation equation instead of the full field.
        #[arg(long)]
        perturbation: bool,
    },
    /// Full escape-time experiment with CSV, JSON and SVG outputs.
    Instability,
    /// Escape-time scaling fit over `run.delta_list`.
    Scaling {
        /// Repeat the experiment for θ = {0.01, 0.05, 0.1}·(c - 2κ).
        #[arg(long)]
        sweep: bool,
    },
    /// Summarize a report.json written by `instability`.
    Report {
        /// Path to report.json (defaults to `<out.dir>/report.json`).
        path: Option<PathBuf>,
    },
}

/// Result of a subcommand: summary printed on stdout and overall verdict.
struct Outcome {
    summary: Value,
    pass: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(o) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&o.summary).expect("JSON value serializes")
            );
            if o.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn load_config(common: &CommonArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path, &common.overrides)?,
        None => ExperimentConfig::from_toml_with_overrides("", &common.overrides)?,
    };
    if let Some(out) = &common.out {
        cfg.out.dir = out.clone();
    }
    Ok(cfg)
}

fn out_dir(cfg: &ExperimentConfig) -> Result<&Path> {
    let dir = cfg.out.dir.as_path();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    Ok(dir)
}

fn to_json<T: serde::Serialize + ?Sized>(v: &T) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

fn run(cli: Cli) -> Result<Outcome> {
    if let Command::Report { path } = &cli.command {
        let path = match path {
            Some(p) => p.clone(),
            None => load_config(&cli.common)?.out.dir.join("report.json"),
        };
        return report(&path);
    }
    let cfg = load_config(&cli.common)?;
    match cli.command {
        Command::Soliton => soliton(&cfg),
        Command::Spectrum { k, count } => spectrum(&cfg, k, count),
        Command::Scan => scan(&cfg),
        Command::RtCheck => rt_check(&cfg),
        Command::Grenier { t_end } => grenier(&cfg, t_end),
        Command::Simulate {
            t_end,
            delta,
            perturbation,
        } => simulate(&cfg, t_end, delta, perturbation),
        Command::Instability => instability(&cfg),
        Command::Scaling { sweep } => scaling(&cfg, sweep),
        Command::Report { .. } => unreachable!("handled above"),
    }
}

fn soliton(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p = cfg.params()?;
    let wave = compute_soliton(p.c, p.kappa, cfg.x_grid()?)?;
    let path = out_dir(cfg)?.join("soliton.csv");
    wave.write_csv(&path)?;
    let residual = traveling_wave_residual(&wave);
    let props = properties_report(&wave);
    let pass = props.all_pass() && residual < 1e-8;
    Ok(Outcome {
        summary: json!({
            "half_length": wave.grid().half_length(),
            "nx": wave.grid().len(),
            "residual": residual,
            "properties": to_json(&props)?,
            "pass": pass,
            "csv": path,
        }),
        pass,
    })
}

fn spectrum(cfg: &ExperimentConfig, k: Option<f64>, count: usize) -> Result<Outcome> {
    let p = cfg.params()?;
    let wave = compute_soliton(p.c, p.kappa, cfg.x_grid()?)?;
    match k {
        None => {
            let s = wave_hc_spectrum(&wave, 1e-6)?;
            let pass = s.negative_count == 1 && s.near_zero_count == 1 && s.kernel_cosine > 0.999;
            let lowest: Vec<f64> = s.eigenvalues.iter().take(count.max(3)).copied().collect();
            Ok(Outcome {
                summary: json!({
                    "operator": "H_c",
                    "negative_count": s.negative_count,
                    "near_zero_count": s.near_zero_count,
                    "kernel_cosine": s.kernel_cosine,
                    "first_positive": s.first_positive,
                    "lowest": lowest,
                    "pass": pass,
                }),
                pass,
            })
        }
        Some(k) => {
            let ops = WaveOperators::new(&wave);
            let mut ev = jl_eigenvalues(&ops, k)?;
            ev.sort_by(|a, b| b.re.total_cmp(&a.re));
            ev.truncate(count);
            let leading: Vec<[f64; 2]> = ev.iter().map(|z| [z.re, z.im]).collect();
            Ok(Outcome {
                summary: json!({ "operator": "JL(k)", "k": k, "leading": leading }),
                pass: true,
            })
        }
    }
}

fn scan(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p = cfg.params()?;
    let wave = compute_soliton(p.c, p.kappa, cfg.x_grid()?)?;
    let ops = WaveOperators::new(&wave);
    let st = &cfg.stability;
    let branch = scan_branch_with(&ops, 0.0, st.k_max, st.k_samples, st.tol_growth, 1e-9)?;
    let path = out_dir(cfg)?.join("branch.csv");
    branch.write_csv(&path)?;
    let max = branch
        .max_growth()
        .map(|s| json!({ "k": s.k, "re_sigma": s.sigma.re, "im_sigma": s.sigma.im }));
    Ok(Outcome {
        summary: json!({
            "band": branch.band,
            "edge_growth": branch.edge_growth,
            "max_sampled_growth": max,
            "continuity_ratio": branch.continuity_ratio(),
            "csv": path,
        }),
        pass: branch.band.is_some(),
    })
}

fn rt_check(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p = cfg.params()?;
    let wave = compute_soliton(p.c, p.kappa, cfg.x_grid()?)?;
    let ops = WaveOperators::new(&wave);
    let st = &cfg.stability;
    let ks: Vec<f64> = (0..st.cond_samples)
        .map(|i| st.cond_k_max * i as f64 / (st.cond_samples - 1) as f64)
        .collect();
    let r = verify_rt_conditions(&ops, &ks)?;
    let pass = r.all_pass();
    let path = out_dir(cfg)?.join("conditions.json");
    std::fs::write(&path, serde_json::to_vec_pretty(&r)?).map_err(|e| Error::io(&path, e))?;
    Ok(Outcome {
        summary: json!({
            "k_threshold": r.k_threshold,
            "cond1": { "pass": r.cond1.pass, "margin": r.cond1.margin },
            "cond2": { "pass": r.cond2.pass, "margin": r.cond2.margin },
            "cond3": { "pass": r.cond3.pass, "margin": r.cond3.margin },
            "cond4": { "pass": r.cond4.pass, "margin": r.cond4.margin, "smallest": r.cond4.values },
            "pass": pass,
            "json": path,
        }),
        pass,
    })
}

fn mode_json(p: &Prepared) -> Value {
    json!({
        "k0": p.mode.k0,
        "m0": p.mode.m0,
        "sigma0": [p.mode.sigma0.re, p.mode.sigma0.im],
        "largest_unstable_m": p.mode.largest_unstable_m,
    })
}

fn grenier(cfg: &ExperimentConfig, t_end: f64) -> Result<Outcome> {
    let p = prepare(cfg)?;
    let h = build_hierarchy(
        &p.wave,
        &p.mode,
        HierarchyConfig {
            order: cfg.run.hierarchy_order,
            dt: cfg.run.dt,
            t_end,
            stride: cfg.run.stride,
        },
    )?;
    let path = out_dir(cfg)?.join("grenier_norms.csv");
    let mut text = String::from("t");
    for k in 0..=h.order() {
        text.push_str(&format!(",norm_v{k}"));
    }
    text.push('\n');
    for (t, row) in h.norm_times().iter().zip(h.norms()).step_by(cfg.run.stride) {
        text.push_str(&t.to_string());
        for n in row {
            text.push_str(&format!(",{n}"));
        }
        text.push('\n');
    }
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    let pass = h.growth().iter().all(|g| g.fitted_rate <= g.predicted_rate * 1.02);
    Ok(Outcome {
        summary: json!({
            "mode": mode_json(&p),
            "order": h.order(),
            "t_end": t_end,
            "growth": to_json(h.growth())?,
            "pass": pass,
            "csv": path,
        }),
        pass,
    })
}

fn simulate(cfg: &ExperimentConfig, t_end: f64, delta: Option<f64>, perturbation: bool) -> Result<Outcome> {
    let delta = delta
        .or_else(|| cfg.run.delta_list.first().copied())
        .ok_or_else(|| Error::Config("no δ given and run.delta_list is empty".into()))?;
    let p = prepare(cfg)?;
    let mut sim = Simulator::with_regularization(&p.wave, p.grid, cfg.run.dt, cfg.run.regularization)?;
    let v0 = p.mode.seed_field(p.grid)?.scaled(delta);
    let c = cfg.physics.c;
    let mut state = if perturbation {
        SimState::new(v0, StateKind::Perturbation, c)
    } else {
        SimState::new(v0.add(sim.wave_field()), StateKind::Full, c)
    };
    let trace = sim.run_until(&mut state, t_end, cfg.run.stride)?;
    let dir = out_dir(cfg)?;
    let traces = dir.join("traces.csv");
    write_traces(&traces, &trace)?;
    let snapshot = dir.join("snapshot.bin");
    write_snapshot(&snapshot, &state)?;
    Ok(Outcome {
        summary: json!({
            "mode": mode_json(&p),
            "delta": delta,
            "t": state.t,
            "steps": state.steps,
            "h_drift": trace.h_drift(),
            "q_drift": trace.q_drift(),
            "traces": traces,
            "snapshot": snapshot,
        }),
        pass: true,
    })
}

fn verdict_json(report: &chkp_core::experiment::RunReport) -> Result<Value> {
    Ok(json!({
        "theta": report.theta,
        "mode": to_json(&report.mode)?,
        "eta": report.eta,
        "scaling": report.scaling.as_ref().map(|s| json!({
            "slope": s.slope,
            "predicted_slope": s.predicted_slope,
            "r2": s.r2,
        })),
        "verdicts": to_json(&report.conditions.iter().chain(&report.verdicts).collect::<Vec<_>>())?,
        "pass": report.all_pass(),
    }))
}

fn instability(cfg: &ExperimentConfig) -> Result<Outcome> {
    let dir = out_dir(cfg)?;
    let report = emit_outputs(&run_instability(cfg)?, dir)?;
    let mut summary = verdict_json(&report)?;
    summary["artifacts"] = to_json(&report.artifacts)?;
    Ok(Outcome {
        pass: report.all_pass(),
        summary,
    })
}

fn scaling(cfg: &ExperimentConfig, sweep: bool) -> Result<Outcome> {
    let dir = out_dir(cfg)?;
    if !sweep {
        let fit = scaling_study(cfg)?;
        write_scaling_csv(&dir.join("scaling.csv"), &fit.rows)?;
        let dev = (fit.slope / fit.predicted_slope - 1.0).abs();
        let pass = fit.r2 > 0.99 && dev <= 0.1;
        return Ok(Outcome {
            summary: json!({ "fit": to_json(&fit)?, "slope_deviation": dev, "pass": pass }),
            pass,
        });
    }
    let mut runs = Vec::new();
    let mut pass = true;
    for report in theta_sweep(cfg)? {
        let sub = dir.join(format!("theta_{:e}", report.theta));
        let report = emit_outputs(&report, &sub)?;
        pass &= report.all_pass();
        let mut v = verdict_json(&report)?;
        v["dir"] = to_json(&sub)?;
        runs.push(v);
    }
    Ok(Outcome {
        summary: json!({ "sweep": runs, "pass": pass }),
        pass,
    })
}

fn report(path: &Path) -> Result<Outcome> {
    let r = read_report(path)?;
    let runs: Vec<Value> = r
        .runs
        .iter()
        .map(|d| {
            json!({
                "delta": d.delta,
                "t_pred": d.t_pred,
                "t_meas": d.t_meas,
                "distance": d.distance,
                "chain_holds": d.chain_holds,
                "error": d.error,
            })
        })
        .collect();
    let mut summary = verdict_json(&r)?;
    summary["runs"] = Value::Array(runs);
    summary["path"] = to_json(&path)?;
    Ok(Outcome {
        pass: r.all_pass(),
        summary,
    })
}
