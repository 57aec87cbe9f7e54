use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stack::{accumulate_product, ModeStack, ProductForm};
use crate::error::{Error, Result};
use crate::integrator::LawsonRk4;
use crate::linear::LinearizedFlow;
use crate::sim::{SimState, Simulator, StateKind};
use crate::soliton::{linear_fit, SolitaryWave};
use crate::spectral::{Field2D, Grid2D};
use crate::stability::UnstableMode;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Highest supported hierarchy order.
pub const MAX_ORDER: usize = 4;

/// Time-stepping parameters of the hierarchy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HierarchyConfig {
    pub order: usize,
    pub dt: f64,
    pub t_end: f64,
    /// Keep every `stride`-th state (the final one is always kept).
    pub stride: usize,
}

/// Right-hand side of the coupled order-by-order system
/// `∂t vᵏ = 𝒥𝓛vᵏ + 𝒥(½Σ v^a_x v^b_x + Σ v^a v^b_xx - (3/2)Σ v^a v^b)`,
/// `a + b = k - 1`, on one flat vector holding all orders.
#[derive(Clone)]
struct HierarchyRhs {
    flow: LinearizedFlow,
    order: usize,
    base: f64,
    n: usize,
    /// `Λ(jβ)` for `j = 0..=order+1`.
    lambda: Vec<Vec<Complex64>>,
}

impl HierarchyRhs {
    fn new(wave: &SolitaryWave, order: usize, base: f64) -> Self {
        let flow = LinearizedFlow::new(wave);
        let lambda = (0..=order + 1).map(|j| flow.constant_symbol(j as f64 * base)).collect();
        Self {
            n: wave.grid().len(),
            flow,
            order,
            base,
            lambda,
        }
    }

    fn offset(&self, k: usize) -> usize {
        // Σ_{i<k} (2i + 3) N
        k * (k + 2) * self.n
    }

    fn len(&self) -> usize {
        self.offset(self.order + 1)
    }

    fn stacks(&self, flat: &[Complex64]) -> Vec<ModeStack> {
        (0..=self.order)
            .map(|k| {
                ModeStack::from_flat(
                    *self.flow.grid(),
                    k + 1,
                    self.base,
                    &flat[self.offset(k)..self.offset(k + 1)],
                )
            })
            .collect()
    }

    fn flat_symbol(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.len());
        for k in 0..=self.order {
            let kk = k as i64 + 1;
            for j in -kk..=kk {
                out.extend_from_slice(&self.lambda[j.unsigned_abs() as usize]);
            }
        }
        out
    }

    /// Forcing `(P, S)` of order `k` with `𝒥F = 𝒥∂x P + 𝒥S`,
    /// `P = Σ v^a v^b_x`, `S = -Σ(½ v^a_x v^b_x + (3/2) v^a v^b)`.
    fn forcing(&self, stacks: &[ModeStack], k: usize) -> Result<(ModeStack, ModeStack)> {
        let g = *self.flow.grid();
        let mut p = ModeStack::zeros(g, k + 1, self.base);
        let mut s = ModeStack::zeros(g, k + 1, self.base);
        for a in 0..k {
            let b = k - 1 - a;
            accumulate_product(&stacks[a], &stacks[b], ProductForm::IdDx, 1.0, &mut p)?;
            accumulate_product(&stacks[a], &stacks[b], ProductForm::GradGrad, -0.5, &mut s)?;
            accumulate_product(&stacks[a], &stacks[b], ProductForm::IdId, -1.5, &mut s)?;
        }
        Ok((p, s))
    }

    /// Explicit part (everything except `Λ`).
    fn explicit(&self, flat: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        let n = self.n;
        out.par_chunks_mut(n).zip(flat.par_chunks(n)).for_each(|(o, v)| {
            if v.iter().all(|c| *c == ZERO) {
                o.fill(ZERO);
            } else {
                self.flow.apply_variable(v, o);
            }
        });
        let stacks = self.stacks(flat);
        let (jsym, jdx) = (self.flow.j_symbol(), self.flow.jdx_symbol());
        for k in 1..=self.order {
            let (p, s) = self.forcing(&stacks, k).map_err(|e| Error::Hierarchy {
                order: k,
                source: Box::new(e),
            })?;
            let kk = k as i64 + 1;
            for (idx, j) in (-kk..=kk).enumerate() {
                let o = &mut out[self.offset(k) + idx * n..self.offset(k) + (idx + 1) * n];
                let (pj, sj) = (p.entry(j), s.entry(j));
                for i in 0..n {
                    o[i] += jdx[i] * pj[i] + jsym[i] * sj[i];
                }
            }
        }
        Ok(())
    }

    fn tendency(&self, flat: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut out = vec![ZERO; flat.len()];
        self.explicit(flat, &mut out)?;
        for ((o, l), v) in out.iter_mut().zip(self.flat_symbol()).zip(flat) {
            *o += l * v;
        }
        Ok(out)
    }
}

/// Growth data of one order `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderGrowth {
    pub order: usize,
    /// Log-fit slope of `|vᵏ|_{V}` over `t ∈ [T/2, T]`.
    pub fitted_rate: f64,
    /// `(k + 1) Re σ₀`.
    pub predicted_rate: f64,
    /// `max_t |vᵏ(t)| e^{-(k+1) Re σ₀ t}`.
    pub bound_constant: f64,
}

/// Trajectories `t ↦ vᵏ(t)`, `k = 0…M`, of the approximate solution.
#[derive(Clone)]
pub struct HierarchyResult {
    config: HierarchyConfig,
    sigma0: Complex64,
    rhs: HierarchyRhs,
    times: Vec<f64>,
    snapshots: Vec<Vec<Complex64>>,
    /// Every-step `|vᵏ|_{V}` (L² profiles), indexed `[step][k]`.
    norm_times: Vec<f64>,
    norms: Vec<Vec<f64>>,
    growth: Vec<OrderGrowth>,
}

impl HierarchyResult {
    pub fn order(&self) -> usize {
        self.config.order
    }

    pub fn config(&self) -> &HierarchyConfig {
        &self.config
    }

    pub fn sigma0(&self) -> Complex64 {
        self.sigma0
    }

    pub fn base_frequency(&self) -> f64 {
        self.rhs.base
    }

    /// Times of the stored states.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn norm_times(&self) -> &[f64] {
        &self.norm_times
    }

    /// `|vᵏ(t)|_{V}` at every step, indexed `[step][k]`.
    pub fn norms(&self) -> &[Vec<f64>] {
        &self.norms
    }

    pub fn growth(&self) -> &[OrderGrowth] {
        &self.growth
    }

    /// Index of the stored state nearest to `t`.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let last = *self.times.last().expect("at least the initial state");
        if t < -0.5 * self.config.dt || t > last + 0.5 * self.config.dt {
            return Err(Error::Parameter(format!(
                "t = {t} outside the stored horizon [0, {last}]"
            )));
        }
        Ok(self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(i, _)| i)
            .expect("nonempty"))
    }

    /// `[v⁰, …, v^M]` at stored state `idx`.
    pub fn stacks(&self, idx: usize) -> Vec<ModeStack> {
        self.rhs.stacks(&self.snapshots[idx])
    }

    /// `[∂t v⁰, …, ∂t v^M]` at stored state `idx`, from the hierarchy's
    /// right-hand side.
    pub fn time_derivatives(&self, idx: usize) -> Result<Vec<ModeStack>> {
        Ok(self.rhs.stacks(&self.rhs.tendency(&self.snapshots[idx])?))
    }

    fn weighted(&self, stacks: &[ModeStack], delta: f64, order: usize) -> ModeStack {
        let mut out = ModeStack::zeros(*self.rhs.flow.grid(), order + 1, self.rhs.base);
        for (k, s) in stacks.iter().enumerate().take(order + 1) {
            out = out.add(&s.scaled(delta.powi(k as i32 + 1)));
        }
        out
    }

    /// `δ(v⁰ + Σ_{k=1}^{M'} δᵏvᵏ)` as a stack, with `M' ≤ M`.
    pub fn vap_stack(&self, delta: f64, idx: usize, order: usize) -> ModeStack {
        self.weighted(&self.stacks(idx), delta, order.min(self.order()))
    }

    /// The approximate solution at the stored time nearest `t`.
    pub fn assemble_vap(&self, delta: f64, t: f64, grid: &Grid2D) -> Result<Field2D> {
        self.assemble_vap_order(delta, t, self.order(), grid)
    }

    /// As [`Self::assemble_vap`] truncated at order `order ≤ M`.
    pub fn assemble_vap_order(&self, delta: f64, t: f64, order: usize, grid: &Grid2D) -> Result<Field2D> {
        let idx = self.index_of(t)?;
        self.vap_stack(delta, idx, order).synthesize(grid)
    }

    /// `G = -∂t v^ap + 𝒥𝓛v^ap + 𝒥(½(v^ap_x)² + v^ap v^ap_xx - (3/2)(v^ap)²)`
    /// at stored state `idx`, with `v^ap` truncated at `order`. The
    /// nonlinear action comes from the 2D solver.
    pub fn residual(&self, sim: &Simulator, delta: f64, idx: usize, order: usize) -> Result<Field2D> {
        let order = order.min(self.order());
        let grid = sim.grid();
        let vap = self.vap_stack(delta, idx, order).synthesize(grid)?;
        let dt_vap = self
            .weighted(&self.time_derivatives(idx)?, delta, order)
            .synthesize(grid)?;
        let tend = sim.tendency(&SimState::new(vap, StateKind::Perturbation, sim.c()))?;
        Ok(tend.sub(&dt_vap))
    }
}

/// Integrates `v⁰, …, v^M` jointly from `v⁰(0)_{±1} = U₀`, `vᵏ(0) = 0`.
pub fn build_hierarchy(wave: &SolitaryWave, mode: &UnstableMode, config: HierarchyConfig) -> Result<HierarchyResult> {
    if config.order > MAX_ORDER {
        return Err(Error::Parameter(format!(
            "hierarchy order {} exceeds the supported maximum {MAX_ORDER}",
            config.order
        )));
    }
    if !(config.t_end >= 0.0) {
        return Err(Error::Parameter(format!("horizon must be >= 0, got {}", config.t_end)));
    }
    if mode.grid != *wave.grid() {
        return Err(Error::Grid("eigenmode and wave grids differ".into()));
    }
    let rhs = HierarchyRhs::new(wave, config.order, mode.frequency());
    let attach = |e: Error| Error::Hierarchy {
        order: 0,
        source: Box::new(e),
    };
    LawsonRk4::check_stability(config.dt, rhs.flow.explicit_rate()).map_err(attach)?;
    let mut stepper = LawsonRk4::new(&rhs.flat_symbol(), config.dt).map_err(attach)?;

    let mut state = vec![ZERO; rhs.len()];
    {
        let mut v0 = ModeStack::zeros(*wave.grid(), 1, rhs.base);
        v0.set_pair(1, &mode.profile);
        state[..rhs.offset(1)].copy_from_slice(&v0.as_flat());
    }
    let stride = config.stride.max(1);
    let steps = (config.t_end / config.dt).round() as usize;
    let norms_of = |flat: &[Complex64]| -> Vec<f64> { rhs.stacks(flat).iter().map(|s| s.norm(0.0)).collect() };

    let mut times = vec![0.0];
    let mut snapshots = vec![state.clone()];
    let mut norm_times = vec![0.0];
    let mut norms = vec![norms_of(&state)];
    let mut failure = None;
    for n in 1..=steps {
        let t = (n - 1) as f64 * config.dt;
        stepper.step(t, &mut state, |_, v, out| {
            if let Err(e) = rhs.explicit(v, out) {
                failure.get_or_insert(e);
            }
        });
        if let Some(e) = failure.take() {
            return Err(e);
        }
        let t = n as f64 * config.dt;
        norm_times.push(t);
        norms.push(norms_of(&state));
        if n % stride == 0 || n == steps {
            times.push(t);
            snapshots.push(state.clone());
        }
    }

    let sigma = mode.rate();
    let t_end = *norm_times.last().expect("initial state");
    let growth = (0..=config.order)
        .map(|k| {
            let pts: Vec<(f64, f64)> = norm_times
                .iter()
                .zip(&norms)
                .filter(|(t, nk)| **t >= 0.5 * t_end && nk[k] > 0.0)
                .map(|(t, nk)| (*t, nk[k].ln()))
                .collect();
            let predicted = (k + 1) as f64 * sigma;
            OrderGrowth {
                order: k,
                fitted_rate: linear_fit(&pts).map_or(f64::NAN, |f| f.0),
                predicted_rate: predicted,
                bound_constant: norm_times
                    .iter()
                    .zip(&norms)
                    .map(|(t, nk)| nk[k] * (-predicted * t).exp())
                    .fold(0.0, f64::max),
            }
        })
        .collect();

    Ok(HierarchyResult {
        config,
        sigma0: mode.sigma0,
        rhs,
        times,
        snapshots,
        norm_times,
        norms,
        growth,
    })
}

/// Solves `∂t u = 𝒥𝓛(jβ)u + 𝒥F(t)`, `u(0) = 0`, returning `u` at every
/// step (including `t = 0`). `forcing(t)` is evaluated at the integrator's
/// stage times (whole and half steps).
pub fn solve_forced_mode<F>(
    wave: &SolitaryWave,
    eta: f64,
    mut forcing: F,
    t_end: f64,
    dt: f64,
) -> Result<Vec<Vec<Complex64>>>
where
    F: FnMut(f64) -> Vec<Complex64>,
{
    let flow = LinearizedFlow::new(wave);
    LawsonRk4::check_stability(dt, flow.explicit_rate())?;
    let lambda = flow.constant_symbol(eta);
    let mut stepper = LawsonRk4::new(&lambda, dt)?;
    let jsym = flow.j_symbol().to_vec();
    let n = wave.grid().len();
    let mut u = vec![ZERO; n];
    let mut out = vec![u.clone()];
    let steps = (t_end / dt).round() as usize;
    for s in 0..steps {
        stepper.step(s as f64 * dt, &mut u, |t, v, o| {
            flow.apply_variable(v, o);
            let f = forcing(t);
            for i in 0..n {
                o[i] += jsym[i] * f[i];
            }
        });
        out.push(u.clone());
    }
    Ok(out)
}
