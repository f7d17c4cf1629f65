//! Random valid parameter draws for structure checks.

use num_complex::Complex64 as C64;
use rand::Rng;

use crate::model::Momentum;
use crate::numerics::linalg::c;
use crate::scheme::five_level::{ constrained_rabis, BareScheme, RamanPhases };
use crate::scheme::lasers::LaserSet;

/// A bare scheme whose Rabi frequencies satisfy the dressing constraints.
pub fn random_bare_scheme<R: Rng>(rng: &mut R) -> BareScheme {
    let phases = RamanPhases {
        phi12: rng.gen_range(-1.0..1.0),
        phi23: rng.gen_range(-1.0..1.0),
        phi31: rng.gen_range(-1.0..1.0),
    };
    let chi11 = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let chi22 = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    BareScheme {
        chi: constrained_rabis(chi11, chi22, phases),
        phases,
        omega: rng.gen_range(0.5..3.0),
        delta: rng.gen_range(-2.0..2.0),
        k_soc: rng.gen_range(0.1..1.0),
        mass: rng.gen_range(0.5..2.0),
    }
}

/// A laser set in the far-detuned, weak-drive regime.
pub fn random_laser_set<R: Rng>(rng: &mut R) -> LaserSet {
    let d2 = rng.gen_range(0.02..0.5);
    let d1 = d2 + rng.gen_range(5.0..20.0);
    let omega = rng.gen_range(8.0..15.0);
    let o2 = rng.gen_range(0.001..0.01) * d2;
    let o1 = rng.gen_range(0.01..0.1) * o2;
    LaserSet::new(
        C64::from_polar(o1, rng.gen_range(-3.0..3.0)),
        C64::from_polar(o2, rng.gen_range(-3.0..3.0)),
        d1, d2, omega, rng.gen_range(0.1..0.5), rng.gen_range(0.5..2.0),
    )
    .expect("sampled detunings are consistent")
}

pub fn random_momentum<R: Rng>(rng: &mut R) -> Momentum {
    Momentum::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Momentum with `|k| ∈ [0.05, 1)`.
pub fn random_window_momentum<R: Rng>(rng: &mut R) -> Momentum {
    Momentum::polar(rng.gen_range(0.05..1.0), rng.gen_range(-3.0..3.0))
}
