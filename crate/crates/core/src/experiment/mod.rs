//! End-to-end transverse-instability experiments.
//!
//! [`run_instability`] chains every stage of the crate: the solitary wave,
//! the unstable branch and the sufficient conditions, the most unstable
//! mode, the approximate solution `v^ap`, and one nonlinear run per `δ`
//! started from `φ + δv⁰(0)`. Each run records `‖Πv‖₀`, the error
//! `w = v - v^ap`, the invariants, the escape time and the orbital
//! distance; [`scaling_study`] fits the escape times against `log(1/δ)`.
//! [`emit_outputs`] writes the CSV, JSON and SVG artifacts.

mod config;
mod distance;
mod report;
mod run;
mod svg;

pub use config::{ExperimentConfig, GridConfig, OutConfig, PhysicsConfig, RunConfig, StabilityConfig};
pub use distance::{orbital_distance, project_offzero_y, OrbitalDistance};
pub use report::{
    emit_outputs, read_report, write_branch_csv, write_growth_csv, write_scaling_csv, BranchPoint, DeltaRecord,
    ModeSummary, RunReport, ScalingFit, ScalingRow, TracePoint, Verdict,
};
pub use run::{
    escape_time, fit_scaling, prepare, run_instability, run_prepared, scaling_study, theta_sweep, Prepared,
    ScalingTable, THETA_SWEEP,
};
pub use svg::{LinePlot, Series};
