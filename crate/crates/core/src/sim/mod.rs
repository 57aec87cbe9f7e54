//! Pseudo-spectral CH-KP-I solver on `[-L, L) × 𝕋_a` in the frame moving
//! with the solitary wave.
//!
//! Two state representations are supported: the full field `u`, evolved by
//!
//! ```text
//! u_t = 𝒥(½u_x² + u u_xx - 2κu - (3/2)u² + ∂x⁻²∂y²u + c(u - u_xx)),
//! ```
//!
//! and the perturbation `v = u - φ`, evolved by
//! `v_t = 𝒥𝓛v + 𝒥(½v_x² + v v_xx - (3/2)v²)`. Both split off the
//! constant-coefficient symbol `Λ(ξ, η)` and advance it exactly with the
//! Lawson RK4 scheme of [`crate::integrator`]. Quasilinear terms are
//! written as `𝒥∂x(·)` with the bounded symbol `-ξ²/(1 + ξ²)`
//! (equivalently `g ↦ -g + (1 - ∂x²)⁻¹g`), so no raw third derivative is
//! formed. Quadratic products are dealiased by the 2/3 rule; the products
//! with `φ` in the linear part are not, so the linear part matches the
//! stability matrices exactly.

mod output;

use std::cell::RefCell;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use output::{read_snapshot, write_snapshot, write_traces, InvariantTrace, SnapshotMeta};

use crate::error::{Error, Result};
use crate::integrator::LawsonRk4;
use crate::linear::LinearizedFlow;
use crate::soliton::SolitaryWave;
use crate::spectral::{coefficient_sobolev_norm_2d, Field2D, Grid2D, Transform2D};

/// KP-constraint tolerance on the x-mean of nonzero transverse modes.
pub const CONSTRAINT_TOL: f64 = 1e-10;
/// Blow-up guard: `max |u_x| > BLOWUP_FACTOR · (c - 2κ)`.
pub const BLOWUP_FACTOR: f64 = 50.0;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StateKind {
    /// The full field `u`.
    Full,
    /// The perturbation `v = u - φ`.
    Perturbation,
}

#[derive(Clone, Debug)]
pub struct SimState {
    pub t: f64,
    pub field: Field2D,
    pub kind: StateKind,
    pub c: f64,
    pub steps: u64,
}

impl SimState {
    pub fn new(field: Field2D, kind: StateKind, c: f64) -> Self {
        Self {
            t: 0.0,
            field,
            kind,
            c,
            steps: 0,
        }
    }
}

/// Per-row spectral data: symbols at every `(η_l, ξ_i)`.
struct Symbols {
    lambda: Vec<Complex64>,
    j: Vec<Complex64>,
    jdx: Vec<Complex64>,
    dx: Vec<Complex64>,
    /// 2/3-rule mask.
    keep: Vec<bool>,
}

impl Symbols {
    fn new(grid: &Grid2D, c: f64, kappa: f64, regularization: f64) -> Self {
        let (nx, ny) = (grid.nx(), grid.ny());
        let nyq = grid.x.nyquist_index();
        let mut s = Symbols {
            lambda: Vec::with_capacity(nx * ny),
            j: Vec::with_capacity(nx * ny),
            jdx: Vec::with_capacity(nx * ny),
            dx: Vec::with_capacity(nx * ny),
            keep: Vec::with_capacity(nx * ny),
        };
        for l in 0..ny {
            let eta = grid.y_wavenumber(l);
            for i in 0..nx {
                let xi = grid.x.wavenumber(i);
                let (lam, j, jdx, dx) = if i == 0 || i == nyq {
                    (ZERO, ZERO, ZERO, ZERO)
                } else {
                    let den = 1.0 + xi * xi + regularization * (xi * xi + eta * eta).powi(2);
                    let jsym = xi / den;
                    let bracket = c * (1.0 + xi * xi) - 2.0 * kappa + eta * eta / (xi * xi);
                    (
                        Complex64::new(0.0, jsym * bracket),
                        Complex64::new(0.0, jsym),
                        Complex64::new(-xi * jsym, 0.0),
                        Complex64::new(0.0, xi),
                    )
                };
                s.lambda.push(lam);
                s.j.push(j);
                s.jdx.push(jdx);
                s.dx.push(dx);
                s.keep.push(grid.x.is_resolved(i) && grid.is_y_resolved(l));
            }
        }
        s
    }
}

struct Workspace {
    a: Vec<Complex64>,
    b: Vec<Complex64>,
    c: Vec<Complex64>,
    d: Vec<Complex64>,
}

/// Time stepper for one simulation (not shareable across threads; build
/// one per job).
pub struct Simulator {
    grid: Grid2D,
    c: f64,
    kappa: f64,
    dt: f64,
    phi: Vec<f64>,
    dphi: Vec<f64>,
    potential: Vec<f64>,
    phi_field: Field2D,
    symbols: Symbols,
    transform: Transform2D,
    stepper: RefCell<LawsonRk4>,
    work: RefCell<Workspace>,
    blowup_threshold: f64,
    regularization: f64,
}

impl Simulator {
    /// Errors with [`Error::Stability`] if `dt` violates the RK4 bound for
    /// the explicit transport by `φ`.
    pub fn new(wave: &SolitaryWave, grid: Grid2D, dt: f64) -> Result<Self> {
        Self::with_regularization(wave, grid, dt, 0.0)
    }

    /// Uses `𝒥^ε = (1 - ∂x² + εΔ²)⁻¹∂x` in place of `𝒥`.
    pub fn with_regularization(wave: &SolitaryWave, grid: Grid2D, dt: f64, eps: f64) -> Result<Self> {
        if grid.x != *wave.grid() {
            return Err(Error::Grid("simulation x-grid differs from the wave grid".into()));
        }
        if eps < 0.0 {
            return Err(Error::Parameter(format!("regularization must be >= 0, got {eps}")));
        }
        let flow = LinearizedFlow::new(wave);
        LawsonRk4::check_stability(dt, flow.explicit_rate())?;
        let symbols = Symbols::new(&grid, wave.c(), wave.kappa(), eps);
        let stepper = LawsonRk4::new(&symbols.lambda, dt)?;
        let n = grid.len();
        let phi: Vec<f64> = wave.q().to_vec();
        Ok(Self {
            grid,
            c: wave.c(),
            kappa: wave.kappa(),
            dt,
            dphi: wave.dq().to_vec(),
            potential: flow.potential().to_vec(),
            phi_field: Field2D::from_profile(grid, wave.profile()),
            phi,
            symbols,
            transform: Transform2D::new(&grid),
            stepper: RefCell::new(stepper),
            work: RefCell::new(Workspace {
                a: vec![ZERO; n],
                b: vec![ZERO; n],
                c: vec![ZERO; n],
                d: vec![ZERO; n],
            }),
            blowup_threshold: BLOWUP_FACTOR * wave.params().amplitude(),
            regularization: eps,
        })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn regularization(&self) -> f64 {
        self.regularization
    }

    /// The line solitary wave as a 2D field.
    pub fn wave_field(&self) -> &Field2D {
        &self.phi_field
    }

    /// Constant-coefficient symbol `Λ` (row-major, like the coefficients).
    pub fn linear_symbol(&self) -> &[Complex64] {
        &self.symbols.lambda
    }

    fn check_constraint(&self, f: &Field2D) -> Result<()> {
        let violation = f.kp_constraint_violation();
        if violation > CONSTRAINT_TOL {
            return Err(Error::Constraint { violation });
        }
        Ok(())
    }

    /// Explicit part of the perturbation equation,
    /// `𝒥∂x(φ v_x) + 𝒥(V v) + 𝒥∂x D(v v_x) + 𝒥 D(-½v_x² - (3/2)v²)`, using
    /// `½v_x² + v v_xx = ∂x(v v_x) - ½v_x²`. Returns `max |φ' + v_x|`.
    fn explicit_perturbation(&self, v: &[Complex64], out: &mut [Complex64]) -> f64 {
        let nx = self.grid.nx();
        let s = &self.symbols;
        let mut guard = self.work.borrow_mut();
        let Workspace { a, b, c, d } = &mut *guard;
        for i in 0..v.len() {
            a[i] = v[i] * s.dx[i];
            b[i] = v[i];
        }
        self.transform.inverse(a);
        self.transform.inverse(b);
        let mut max_slope: f64 = 0.0;
        for p in 0..v.len() {
            let x = p % nx;
            let (vx, vv) = (a[p].re, b[p].re);
            max_slope = max_slope.max((vx + self.dphi[x]).abs());
            a[p] = Complex64::new(self.phi[x] * vx, 0.0);
            b[p] = Complex64::new(self.potential[x] * vv, 0.0);
            c[p] = Complex64::new(vv * vx, 0.0);
            d[p] = Complex64::new(-0.5 * vx * vx - 1.5 * vv * vv, 0.0);
        }
        self.transform.forward(a);
        self.transform.forward(b);
        self.transform.forward(c);
        self.transform.forward(d);
        for i in 0..v.len() {
            let lin = s.jdx[i] * a[i] + s.j[i] * b[i];
            out[i] = if s.keep[i] {
                lin + s.jdx[i] * c[i] + s.j[i] * d[i]
            } else {
                lin
            };
        }
        max_slope
    }

    /// Explicit part of the full equation:
    /// `𝒥∂x D(u u_x) + 𝒥 D(-½u_x² - (3/2)u²)`. Returns `max |u_x|`.
    fn explicit_full(&self, u: &[Complex64], out: &mut [Complex64]) -> f64 {
        let s = &self.symbols;
        let mut guard = self.work.borrow_mut();
        let Workspace { a: ux, b: uu, .. } = &mut *guard;
        for i in 0..u.len() {
            ux[i] = u[i] * s.dx[i];
            uu[i] = u[i];
        }
        self.transform.inverse(ux);
        self.transform.inverse(uu);
        let mut max_slope: f64 = 0.0;
        for p in 0..u.len() {
            let (a, c) = (ux[p].re, uu[p].re);
            max_slope = max_slope.max(a.abs());
            ux[p] = Complex64::new(c * a, 0.0);
            uu[p] = Complex64::new(-0.5 * a * a - 1.5 * c * c, 0.0);
        }
        self.transform.forward(ux);
        self.transform.forward(uu);
        for i in 0..u.len() {
            out[i] = if s.keep[i] {
                s.jdx[i] * ux[i] + s.j[i] * uu[i]
            } else {
                ZERO
            };
        }
        max_slope
    }

    fn explicit(&self, kind: StateKind, u: &[Complex64], out: &mut [Complex64]) -> f64 {
        match kind {
            StateKind::Full => self.explicit_full(u, out),
            StateKind::Perturbation => self.explicit_perturbation(u, out),
        }
    }

    /// Full tendency `Λu + N(u)` of a state.
    pub fn tendency(&self, state: &SimState) -> Result<Field2D> {
        self.check_constraint(&state.field)?;
        let u = state.field.coefficients();
        let mut out = vec![ZERO; u.len()];
        self.explicit(state.kind, u, &mut out);
        for ((o, l), ui) in out.iter_mut().zip(&self.symbols.lambda).zip(u) {
            *o += l * ui;
        }
        Ok(Field2D::from_coefficients(self.grid, out))
    }

    /// One Lawson RK4 step; the KP constraint is re-projected afterwards.
    ///
    /// Errors with [`Error::Blowup`] when `max |u_x|` exceeds the guard (or
    /// the state stops being finite); the state is left at the new time so
    /// the failure can be inspected.
    pub fn step(&mut self, state: &mut SimState) -> Result<()> {
        self.check_constraint(&state.field)?;
        let kind = state.kind;
        let mut first_slope = None;
        {
            let mut stepper = self.stepper.borrow_mut();
            let u = state.field.coefficients_mut();
            stepper.step(state.t, u, |_, w, out| {
                let slope = self.explicit(kind, w, out);
                first_slope.get_or_insert(slope);
            });
        }
        state.field.project_kp_constraint();
        state.field.enforce_hermitian();
        state.t += self.dt;
        state.steps += 1;
        let max_slope = first_slope.unwrap_or(0.0);
        let finite = state
            .field
            .coefficients()
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite());
        if !finite || !(max_slope <= self.blowup_threshold) {
            return Err(Error::Blowup {
                t: state.t,
                max_slope: if finite { max_slope } else { f64::INFINITY },
                threshold: self.blowup_threshold,
            });
        }
        Ok(())
    }

    /// Steps until `state.t ≥ t_end - dt/2`, sampling the invariants every
    /// `stride` steps (and at both ends).
    pub fn run_until(&mut self, state: &mut SimState, t_end: f64, stride: usize) -> Result<InvariantTrace> {
        let stride = stride.max(1);
        let mut trace = InvariantTrace::default();
        trace.push(state.t, self.invariants(state)?);
        let mut n = 0usize;
        while state.t < t_end - 0.5 * self.dt {
            self.step(state)?;
            n += 1;
            if n % stride == 0 {
                trace.push(state.t, self.invariants(state)?);
            }
        }
        if n % stride != 0 {
            trace.push(state.t, self.invariants(state)?);
        }
        Ok(trace)
    }

    /// The full field `u` of a state (adds `φ` to a perturbation).
    pub fn full_field(&self, state: &SimState) -> Field2D {
        match state.kind {
            StateKind::Full => state.field.clone(),
            StateKind::Perturbation => state.field.add(&self.phi_field),
        }
    }

    /// `(𝓗, 𝒬)` of the full field, with
    /// `𝓗 = -½∫ u³ + u u_x² + 2κu² - (∂x⁻¹∂y u)²` and `𝒬 = ½∫ u² + u_x²`.
    pub fn invariants(&self, state: &SimState) -> Result<(f64, f64)> {
        self.check_constraint(&state.field)?;
        Ok(invariants_of(&self.full_field(state), self.kappa))
    }
}

/// `(𝓗, 𝒬)` of a field satisfying the KP constraint. The cubic terms use
/// nodal quadrature, the quadratic ones Parseval.
pub fn invariants_of(u: &Field2D, kappa: f64) -> (f64, f64) {
    let grid = u.grid();
    let nx = grid.nx();
    let area = grid.area();
    let coeffs = u.coefficients();
    let mut q = 0.0;
    let mut u2 = 0.0;
    let mut transverse = 0.0;
    for (l, row) in coeffs.chunks_exact(nx).enumerate() {
        let eta = grid.y_wavenumber(l);
        for (i, c) in row.iter().enumerate() {
            let xi = grid.x.wavenumber(i);
            let p = c.norm_sqr();
            u2 += p;
            q += (1.0 + xi * xi) * p;
            if i != 0 {
                transverse += (eta / xi).powi(2) * p;
            }
        }
    }
    let transform = Transform2D::new(grid);
    let mut ux: Vec<Complex64> = coeffs
        .chunks_exact(nx)
        .flat_map(|row| {
            row.iter()
                .enumerate()
                .map(|(i, c)| c * Complex64::new(0.0, dx_factor(grid, i)))
        })
        .collect();
    transform.inverse(&mut ux);
    let vals = u.values();
    let cubic: f64 = vals
        .iter()
        .zip(&ux)
        .map(|(v, d)| v * v * v + v * d.re * d.re)
        .sum::<f64>()
        * grid.cell_area();
    let h = -0.5 * (cubic + area * (2.0 * kappa * u2 - transverse));
    (h, 0.5 * area * q)
}

fn dx_factor(grid: &Grid2D, i: usize) -> f64 {
    if i == grid.x.nyquist_index() {
        0.0
    } else {
        grid.x.wavenumber(i)
    }
}

/// `w = v - v^ap` with its Sobolev norms for `s = 0, 1, 2`.
#[derive(Clone, Debug)]
pub struct ErrorField {
    pub w: Field2D,
    pub norms: [f64; 3],
}

/// Error field of a perturbation state against the approximate solution.
pub fn error_field(v: &Field2D, vap: &Field2D) -> Result<ErrorField> {
    if v.grid() != vap.grid() {
        return Err(Error::Grid("error field needs matching grids".into()));
    }
    let w = v.sub(vap);
    let norms = [0.0, 1.0, 2.0].map(|s| coefficient_sobolev_norm_2d(w.grid(), w.coefficients(), s));
    Ok(ErrorField { w, norms })
}
