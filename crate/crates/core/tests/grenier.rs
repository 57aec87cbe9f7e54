mod common;

use std::sync::OnceLock;

use chkp_core::grenier::{
    build_hierarchy, mode_product, solve_forced_mode, HierarchyConfig, HierarchyResult, ModeStack, ProductForm,
};
use chkp_core::linear::j_symbols;
use chkp_core::soliton::linear_fit;
use chkp_core::{Error, Field2D, Simulator, C64};
use common::{fixture, grid2d};
use proptest::prelude::*;

const DT: f64 = 0.02;
/// Long enough for the log-slopes to settle on the forcing rates.
const T_END: f64 = 40.0;

fn hierarchy() -> &'static HierarchyResult {
    static H: OnceLock<HierarchyResult> = OnceLock::new();
    H.get_or_init(|| {
        let fx = fixture();
        let cfg = HierarchyConfig {
            order: 2,
            dt: DT,
            t_end: T_END,
            stride: 50,
        };
        build_hierarchy(&fx.wave, &fx.mode, cfg).unwrap()
    })
}

/// Complex Gaussian-type profile `f(x) = (1 + i a x) e^{-x²/w²}` and its
/// derivatives.
fn profile(a: f64, w: f64) -> impl Fn(f64) -> [C64; 3] {
    move |x: f64| {
        let e = (-(x / w).powi(2)).exp();
        let p = C64::new(1.0, a * x);
        let dp = C64::new(0.0, a);
        let de = -2.0 * x / (w * w);
        let d2e = (4.0 * x * x / w.powi(4) - 2.0 / (w * w)) * e;
        [p * e, (dp + p * de) * e, 2.0 * dp * de * e + p * d2e]
    }
}

fn stack_from(f: &dyn Fn(f64) -> [C64; 3], j: i64, k: usize) -> ModeStack {
    let g = *fixture().wave.grid();
    let mut buf: Vec<C64> = g.nodes().into_iter().map(|x| f(x)[0]).collect();
    chkp_core::spectral::XTransform::new(g.len()).forward(&mut buf);
    let mut s = ModeStack::zeros(g, k, fixture().mode.frequency());
    s.set_pair(j, &buf);
    s
}

#[test]
fn product_support_is_the_index_convolution() {
    let f = profile(0.3, 3.0);
    let a = stack_from(&f, 1, 1);
    let p = mode_product(&a, &a, ProductForm::IdId, 2).unwrap();
    assert_eq!(p.support(), vec![-2, 0, 2]);
    let zero = ModeStack::zeros(*a.grid(), 1, a.base_frequency());
    for form in [
        ProductForm::GradGrad,
        ProductForm::IdDxx,
        ProductForm::IdDx,
        ProductForm::IdId,
    ] {
        assert!(mode_product(&a, &zero, form, 2).unwrap().support().is_empty());
    }
    assert!(matches!(
        mode_product(&a, &a, ProductForm::IdId, 1),
        Err(Error::Truncation {
            needed: 2,
            available: 1
        })
    ));
}

#[test]
fn product_matches_the_physical_product() {
    let grid = grid2d(32);
    let beta = fixture().mode.frequency();
    let (fa, fb) = (profile(0.3, 3.0), profile(-0.5, 2.5));
    let a = stack_from(&fa, 1, 1);
    let b = stack_from(&fb, 2, 2);
    // Physical fields 2 Re(f(x) e^{ijβy}) and their x-derivatives.
    let phys = |f: &dyn Fn(f64) -> [C64; 3], j: f64, d: usize| {
        Field2D::from_fn(grid, move |x, y| {
            2.0 * (f(x)[d] * C64::from_polar(1.0, j * beta * y)).re
        })
        .values()
    };
    for (form, (da, db)) in [
        (ProductForm::GradGrad, (1, 1)),
        (ProductForm::IdDxx, (0, 2)),
        (ProductForm::IdDx, (0, 1)),
        (ProductForm::IdId, (0, 0)),
    ] {
        let (x, y) = (phys(&fa, 1.0, da), phys(&fb, 2.0, db));
        let prod: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p * q).collect();
        let oracle = Field2D::from_values(grid, &prod).dealias();
        let out = mode_product(&a, &b, form, 3).unwrap().synthesize(&grid).unwrap();
        let err = out.sub(&oracle).values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(err < 1e-10, "{form:?}: {err}");
    }
}

#[test]
fn synthesized_stacks_are_real() {
    let h = hierarchy();
    let last = h.times().len() - 1;
    for s in h.stacks(last) {
        assert!(s.hermitian_defect() < 1e-12 * s.norm(0.0).max(1e-300));
    }
}

#[test]
fn zero_forcing_gives_zero() {
    let fx = fixture();
    let n = fx.wave.grid().len();
    let traj = solve_forced_mode(&fx.wave, 0.2, |_| vec![C64::new(0.0, 0.0); n], 1.0, DT).unwrap();
    assert!(traj.iter().flatten().all(|c| c.norm() == 0.0));
    assert!(matches!(
        solve_forced_mode(&fx.wave, 0.2, |_| vec![C64::new(0.0, 0.0); n], 1.0, 5.0),
        Err(Error::Stability { .. })
    ));
}

/// `J⁻¹U₀`, well defined because `U₀` has no mean or Nyquist content.
fn j_inverse_of_mode() -> Vec<C64> {
    let fx = fixture();
    let (j, _) = j_symbols(fx.wave.grid());
    fx.mode
        .profile
        .iter()
        .zip(&j)
        .map(|(u, s)| if s.norm() > 0.0 { u / s } else { C64::new(0.0, 0.0) })
        .collect()
}

#[test]
fn eigen_direction_forcing_matches_duhamel() {
    // 𝒥F = e^{γt}U₀ with 𝒥𝓛U₀ = σU₀ gives u = (e^{γt} - e^{σt})/(γ - σ) U₀.
    let fx = fixture();
    let sigma = fx.mode.rate();
    let gamma = 2.0 * sigma;
    let f0 = j_inverse_of_mode();
    let t_end = 4.0;
    let traj = solve_forced_mode(
        &fx.wave,
        fx.mode.frequency(),
        |t| f0.iter().map(|c| c * (gamma * t).exp()).collect(),
        t_end,
        DT,
    )
    .unwrap();
    let u = traj.last().unwrap();
    let coef = ((gamma * t_end).exp() - (sigma * t_end).exp()) / (gamma - sigma);
    let (mut num, mut den) = (0.0, 0.0);
    for (a, b) in u.iter().zip(&fx.mode.profile) {
        num += (a - b * coef).norm_sqr();
        den += (b * coef).norm_sqr();
    }
    let rel = (num / den).sqrt();
    assert!(rel < 1e-6, "Duhamel mismatch {rel}");
}

#[test]
fn forced_growth_rate_is_bounded_by_the_forcing_rate() {
    // Generic forcing profile with |F| ~ e^{γt}, γ = 2σ₀.
    let fx = fixture();
    let gamma = 2.0 * fx.mode.rate();
    let g = *fx.wave.grid();
    let shape: Vec<C64> = {
        let mut b: Vec<C64> = g
            .nodes()
            .iter()
            .map(|x| C64::new((-(x / 4.0).powi(2)).exp() * x, 0.0))
            .collect();
        chkp_core::spectral::XTransform::new(g.len()).forward(&mut b);
        b[0] = C64::new(0.0, 0.0);
        b
    };
    let t_end = 60.0;
    let traj = solve_forced_mode(
        &fx.wave,
        fx.mode.frequency(),
        |t| shape.iter().map(|c| c * (gamma * t).exp()).collect(),
        t_end,
        DT,
    )
    .unwrap();
    let pts: Vec<(f64, f64)> = traj
        .iter()
        .enumerate()
        .map(|(i, u)| (i as f64 * DT, u.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()))
        .filter(|(t, n)| *t >= t_end / 2.0 && *n > 0.0)
        .map(|(t, n)| (t, n.ln()))
        .collect();
    let (rate, _, _) = linear_fit(&pts).unwrap();
    assert!(rate <= gamma * 1.02, "rate {rate} vs γ {gamma}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]
    #[test]
    fn forced_solve_is_linear(a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let fx = fixture();
        let f0 = j_inverse_of_mode();
        let g0: Vec<C64> = f0.iter().map(|c| c * C64::new(0.0, 1.0)).collect();
        let beta = fx.mode.frequency();
        let solve = |wa: f64, wb: f64| {
            solve_forced_mode(&fx.wave, beta, |t| {
                f0.iter().zip(&g0).map(|(p, q)| p * wa * (0.1 * t).exp() + q * wb * t).collect()
            }, 1.0, DT).unwrap()
        };
        let (fa, fb, fab) = (solve(a, 0.0), solve(0.0, b), solve(a, b));
        let lhs = fab.last().unwrap();
        let scale: f64 = lhs.iter().map(|c| c.norm()).fold(1e-300, f64::max);
        for ((x, y), z) in fa.last().unwrap().iter().zip(fb.last().unwrap()).zip(lhs) {
            prop_assert!((x + y - z).norm() <= 1e-12 * scale);
        }
    }
}

#[test]
fn initial_orders_vanish_and_supports_obey_the_law() {
    let h = hierarchy();
    let s0 = h.stacks(0);
    assert_eq!(s0[0].support(), vec![-1, 1]);
    for s in &s0[1..] {
        assert!(s.as_flat().iter().all(|c| *c == C64::new(0.0, 0.0)));
    }
    let last = h.times().len() - 1;
    let stacks = h.stacks(last);
    assert_eq!(stacks[1].support(), vec![-2, 0, 2]);
    for (k, s) in stacks.iter().enumerate() {
        let k = k as i64;
        assert!(s.support().iter().all(|j| j.abs() <= k + 1));
        // Parity: vᵏ only carries harmonics j ≡ k + 1 (mod 2).
        assert!(s.support().iter().all(|j| (j - k - 1).rem_euclid(2) == 0));
    }
}

#[test]
fn growth_rates_obey_the_ladder() {
    let h = hierarchy();
    let sigma = h.sigma0().re;
    for g in h.growth() {
        assert!(g.fitted_rate <= g.predicted_rate * 1.02, "{g:?}");
        assert!(g.fitted_rate >= g.order as f64 * sigma, "{g:?}");
        assert!(g.bound_constant.is_finite());
    }
    // v⁰ is the eigenmode: its rate is σ₀ up to time-stepping error.
    assert!((h.growth()[0].fitted_rate - sigma).abs() < 1e-6 * sigma);
}

#[test]
fn vap_limits() {
    let h = hierarchy();
    let grid = grid2d(32);
    let t = 5.0;
    let v0 = h.assemble_vap_order(1.0, t, 0, &grid).unwrap();
    let delta = 1e-3;
    let idx = h.index_of(t).unwrap();
    assert_eq!(h.vap_stack(delta, idx, 0), h.stacks(idx)[0].scaled(delta));
    let full = h.assemble_vap(1e-9, t, &grid).unwrap();
    let ratio = full.sobolev_norm(0.0) / 1e-9 / v0.sobolev_norm(0.0);
    assert!((ratio - 1.0).abs() < 1e-6);
    assert!(h.assemble_vap(1e-3, T_END + 1.0, &grid).is_err());
}

#[test]
fn residual_scales_with_order_plus_two() {
    let fx = fixture();
    let h = hierarchy();
    let sim = Simulator::new(&fx.wave, grid2d(32), DT).unwrap();
    let idx = h.index_of(10.0).unwrap();
    for order in [1usize, 2] {
        let pts: Vec<(f64, f64)> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&d: &f64| {
                let g = h.residual(&sim, d, idx, order).unwrap();
                (d.ln(), g.sobolev_norm(0.0).ln())
            })
            .collect();
        let (slope, _, _) = linear_fit(&pts).unwrap();
        assert!(
            (slope - (order as f64 + 2.0)).abs() < 0.15,
            "M = {order}: slope {slope}"
        );
    }
}
