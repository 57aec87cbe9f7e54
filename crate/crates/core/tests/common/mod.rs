#![allow(dead_code)]

use std::sync::OnceLock;

use chkp_core::soliton::compute_soliton;
use chkp_core::stability::{select_most_unstable, EigenBranch, WaveOperators};
use chkp_core::{Grid1D, Grid2D, SolitaryWave, UnstableMode};

pub const C: f64 = 3.0;
pub const KAPPA: f64 = 1.0;
/// Transverse base frequency used by the shared fixture (inside the band).
pub const K0: f64 = 0.2;

pub struct Fixture {
    pub wave: SolitaryWave,
    pub mode: UnstableMode,
}

/// Reference wave at `Nx = 1024` and its unstable mode at `k = K0`.
pub fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let grid = Grid1D::for_wave(C, KAPPA, 1024).unwrap();
        let wave = compute_soliton(C, KAPPA, grid).unwrap();
        let ops = WaveOperators::new(&wave);
        let branch = EigenBranch {
            samples: Vec::new(),
            band: Some((1e-3, 0.32)),
            edge_growth: None,
            tol_growth: 1e-6,
        };
        let mode = select_most_unstable(&ops, &branch, K0).unwrap();
        Fixture { wave, mode }
    })
}

pub fn grid2d(ny: usize) -> Grid2D {
    Grid2D::new(*fixture().wave.grid(), K0, ny).unwrap()
}
