//! High-order approximate unstable solution
//! `v^ap = δ(v⁰ + Σ_{k=1}^{M} δᵏvᵏ)`.
//!
//! Matching powers of `δ` in the perturbation equation gives, for each
//! order `k`, a linear problem forced by quadratic interactions of lower
//! orders,
//!
//! ```text
//! ∂t vᵏ = 𝒥𝓛vᵏ + 𝒥(½Σ v^a_x v^b_x + Σ v^a v^b_xx - (3/2)Σ v^a v^b),  a + b = k - 1,
//! ```
//!
//! with `vᵏ(0) = 0` for `k ≥ 1` and `v⁰ = 2 Re(e^{σ₀t} e^{iβy} U₀)`. Every
//! order is a [`ModeStack`] of transverse harmonics of `β = m₀k₀` supported
//! on `|j| ≤ k + 1`. All orders are advanced together by one Lawson RK4
//! stepper using the same step as the 2D solver, so the residual of
//! `v^ap` is exactly the truncated part of the quadratic expansion.

mod hierarchy;
mod stack;

pub use hierarchy::{build_hierarchy, solve_forced_mode, HierarchyConfig, HierarchyResult, OrderGrowth, MAX_ORDER};
pub use stack::{mode_product, ModeStack, ProductForm};
