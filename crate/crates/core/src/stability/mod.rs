//! Linear stability of the line solitary wave.
//!
//! All `𝒥`-dependent operators live on the mean-free Fourier subspace (the
//! domain of `∂x⁻²`), represented in an orthonormal real basis of
//! `cos(ξ_n x)`, `sin(ξ_n x)`. `H_c` itself is also available on the full
//! collocation grid.

mod asymptotic;
mod conditions;
mod fd;
mod operators;
mod spectrum;

pub use asymptotic::{a_infinity_check, analytic_margin, quartic_roots, AInfinitySample, AInfinityVerdict};
pub use conditions::{
    ltilde_min_with_slope, positivity_threshold, verify_rt_conditions, ConditionEntry, ConditionReport, COND3_TOL,
    NEGATIVE_TOL,
};
pub use fd::{fd_jl_matrix, fd_leading_eigenvalue};
pub use operators::{
    assemble_hc, basis_dim, differentiation_matrix, Basis, OperatorMatrix, OperatorTag, WaveOperators,
};
pub use spectrum::{
    argmax_growth, eigen_residual, hc_spectrum, jl_eigenvalues, leading_eigenvalue, scan_branch, scan_branch_with,
    select_most_unstable, unstable_eigen, wave_hc_spectrum, BranchSample, EigenBranch, EigenPair, HcSpectrum,
    Normalization, UnstableMode, TOL_GROWTH,
};
