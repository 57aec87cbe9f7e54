use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::soliton::SolitaryWave;
use crate::spectral::{Field2D, XTransform};

/// Result of [`orbital_distance`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitalDistance {
    pub distance: f64,
    /// Minimizing shift `l*` in `[-L, L)`.
    pub shift: f64,
}

/// `inf_l ‖u - φ(· - l)‖₀` over periodic shifts.
///
/// Only the y-mean of `u` correlates with the line wave, so the problem
/// reduces to maximizing `C(l) = a Σ Re(û₀(ξ) conj φ̂(ξ) e^{iξl})`: a coarse
/// scan over grid shifts (one inverse FFT), Newton refinement of `C'(l) = 0`,
/// then a direct evaluation of the difference norm at `l*`.
pub fn orbital_distance(u: &Field2D, wave: &SolitaryWave) -> OrbitalDistance {
    let grid = u.grid();
    assert_eq!(&grid.x, wave.grid(), "orbital distance needs matching x-grids");
    let g = grid.x;
    let n = g.len();
    let nyq = g.nyquist_index();
    let u0 = &u.coefficients()[..n];
    let phi = wave.profile().coefficients();
    let w: Vec<Complex64> = u0.iter().zip(phi).map(|(a, b)| a * b.conj()).collect();

    // C(x_j) for all grid shifts: Σ w_i e^{iξ_i x_j} is an inverse transform.
    let mut corr = w.clone();
    corr[nyq] = Complex64::new(corr[nyq].re, 0.0);
    XTransform::new(n).inverse(&mut corr);
    let j_best = (0..n)
        .max_by(|&a, &b| corr[a].re.total_cmp(&corr[b].re))
        .expect("nonempty grid");
    let mut l = g.node(j_best);

    let derivs = |l: f64| {
        let (mut d1, mut d2) = (0.0, 0.0);
        for (i, wi) in w.iter().enumerate() {
            if i == nyq || i == 0 {
                continue;
            }
            let xi = g.wavenumber(i);
            let z = wi * Complex64::from_polar(1.0, xi * l);
            d1 -= xi * z.im;
            d2 -= xi * xi * z.re;
        }
        (d1, d2)
    };
    let h = g.spacing();
    for _ in 0..30 {
        let (d1, d2) = derivs(l);
        if d2 >= 0.0 {
            break;
        }
        let step = (-d1 / d2).clamp(-h, h);
        l += step;
        if step.abs() < 1e-14 * g.half_length() {
            break;
        }
    }
    let period = 2.0 * g.half_length();
    l = (l + g.half_length()).rem_euclid(period) - g.half_length();

    let shifted = Field2D::from_profile(*grid, wave.profile()).shifted_x(l);
    OrbitalDistance {
        distance: u.sub(&shifted).sobolev_norm(0.0),
        shift: l,
    }
}

/// `Π u = u - a⁻¹∫u dy`: removes every `m = 0` transverse mode.
pub fn project_offzero_y(u: &Field2D) -> Field2D {
    u.project_offzero_y()
}
