//! Berry curvature and Chern number of spinor families, by finite
//! differences of the n-field, by the radial endpoint formula, and by the
//! gauge-invariant plaquette (Fukui-Hatsugai-Suzuki) method.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{ Error, Result };
use crate::flow::{ analytic_state, FlowScale };
use crate::model::{ ground_spinor, ModelParams, Momentum, Spinor };
use crate::numerics::quad::{ integrate, integrate_to_infinity, QuadConfig };

/// A smooth map from momentum to a normalized spinor.
pub trait StateFamily: Sync {
    fn state(&self, k: Momentum) -> Spinor;

    /// Characteristic momentum where the family's structure lives.
    fn k_scale(&self) -> f64 {
        1.0
    }
}

/// The renormalized wavefunction at a fixed scale (the ground state at `u = 0`).
#[derive(Copy, Clone, Debug)]
pub struct AnalyticFamily {
    pub scale: FlowScale,
    pub params: ModelParams,
}

impl StateFamily for AnalyticFamily {
    fn state(&self, k: Momentum) -> Spinor {
        analytic_state(self.scale, k, self.params)
    }

    fn k_scale(&self) -> f64 {
        self.scale.u.exp() * self.params.m.sqrt()
    }
}

#[derive(Copy, Clone, Debug)]
pub struct GroundFamily {
    pub params: ModelParams,
}

impl StateFamily for GroundFamily {
    fn state(&self, k: Momentum) -> Spinor {
        ground_spinor(k, self.params)
    }

    fn k_scale(&self) -> f64 {
        self.params.m.sqrt()
    }
}

/// The infrared product state `(0, e^{−iθ})`.
#[derive(Copy, Clone, Debug, Default)]
pub struct InfraredFamily;

impl StateFamily for InfraredFamily {
    fn state(&self, k: Momentum) -> Spinor {
        Spinor::new(C64::new(0.0, 0.0), C64::from_polar(1.0, -k.theta()))
    }
}

/// The same spinor at every momentum.
#[derive(Copy, Clone, Debug)]
pub struct ConstantFamily(pub Spinor);

impl StateFamily for ConstantFamily {
    fn state(&self, _k: Momentum) -> Spinor {
        self.0
    }
}

#[derive(Copy, Clone, Debug, Serialize)]
pub struct CurvatureSample {
    pub k: Momentum,
    pub f: f64,
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// `F(k) = ½ n·(∂ₓn × ∂ᵧn)` with central differences of step
/// `max(1e-4·|k|, 1e-6)`.
pub fn berry_curvature<S: StateFamily + ?Sized>(family: &S, k: Momentum) -> f64 {
    let h = (1e-4 * k.k()).max(1e-6);
    let n = |kx: f64, ky: f64| family.state(Momentum::new(kx, ky)).n_field();
    let (xp, xm) = (n(k.kx + h, k.ky), n(k.kx - h, k.ky));
    let (yp, ym) = (n(k.kx, k.ky + h), n(k.kx, k.ky - h));
    let dx: [f64; 3] = std::array::from_fn(|i| (xp[i] - xm[i]) / (2.0 * h));
    let dy: [f64; 3] = std::array::from_fn(|i| (yp[i] - ym[i]) / (2.0 * h));
    0.5 * dot(n(k.kx, k.ky), cross(dx, dy))
}

/// Closed-form curvature of the renormalized state,
/// `F_u(k) = e^{−2u} (m + x²) / (2 (x² + (m − x²)²)^{3/2})` with `x = e^{−u}k`.
pub fn curvature_closed_form(s: FlowScale, k: f64, p: ModelParams) -> f64 {
    let x = k * (-s.u).exp();
    let x2 = x * x;
    let r2 = x2 + (p.m - x2) * (p.m - x2);
    (-2.0 * s.u).exp() * (p.m + x2) / (2.0 * r2 * r2.sqrt())
}

/// Radial profile `F(k)` along the x axis.
pub fn curvature_profile<S: StateFamily>(family: &S, radii: &[f64]) -> Vec<CurvatureSample> {
    radii.par_iter()
        .map(|&r| {
            let k = Momentum::new(r, 0.0);
            CurvatureSample { k, f: berry_curvature(family, k) }
        })
        .collect()
}

#[derive(Copy, Clone, Debug, Serialize)]
pub struct RadialChern {
    /// `(n_z(0) − n_z(∞)) / 2` with the limit Richardson-extrapolated.
    pub endpoint: f64,
    /// `∫₀^∞ F(k) k dk` with finite-difference curvature.
    pub integral: f64,
    pub integral_error: f64,
    /// Momentum used as the infinity proxy and the bound `|n_z(k_max) + 1| / 2`.
    pub k_max: f64,
    pub tail_bound: f64,
}

fn n_z<S: StateFamily + ?Sized>(family: &S, k: f64) -> f64 {
    family.state(Momentum::new(k, 0.0)).n_field()[2]
}

/// Chern number of a rotationally covariant family from the n_z endpoints
/// and from the radial curvature integral.
pub fn chern_number_radial<S: StateFamily>(family: &S) -> Result<RadialChern> {
    let scale = family.k_scale();
    let mut k_max = 100.0 * scale.max(1e-300);
    // n_z(K) = n_z(∞) + a/K² + O(K⁻⁴): one Richardson step on K, 2K.
    let mut prev = f64::NAN;
    let mut limit = n_z(family, k_max);
    for _ in 0..40 {
        let a = n_z(family, k_max);
        let b = n_z(family, 2.0 * k_max);
        limit = (4.0 * b - a) / 3.0;
        if (limit - prev).abs() < 1e-13 {
            break;
        }
        prev = limit;
        k_max *= 2.0;
    }
    let nz0 = n_z(family, 0.0);
    let endpoint = (nz0 - limit) / 2.0;
    let tail_bound = (n_z(family, k_max) - limit).abs() / 2.0;

    let integrand = |k: f64| berry_curvature(family, Momentum::new(k, 0.0)) * k;
    let cfg = QuadConfig { abs_tol: 1e-10, rel_tol: 1e-10, max_intervals: 4000 };
    let split = 20.0 * scale;
    let head = integrate(integrand, 0.0, split, cfg)?;
    let tail = integrate_to_infinity(integrand, split, split, cfg)?;
    Ok(RadialChern {
        endpoint,
        integral: head.value + tail.value,
        integral_error: head.abs_err + tail.abs_err,
        k_max,
        tail_bound,
    })
}

#[derive(Copy, Clone, Debug, Serialize)]
pub struct PlaquetteChern {
    pub value: f64,
    /// `|value − round(value)|`.
    pub quantization_gap: f64,
    /// Largest single-plaquette flux in units of π; values near 1 mean the
    /// grid is too coarse.
    pub max_plaquette_flux: f64,
    pub grid_n: usize,
    pub k_max: f64,
}

fn overlap(a: &Spinor, b: &Spinor) -> C64 {
    let ua = a.band_amplitudes();
    let ub = b.band_amplitudes();
    ua[0].conj() * ub[0] + ua[1].conj() * ub[1]
}

/// Overall sign making the UV ground state come out as `+1` with links
/// `⟨ψ(k)|ψ(k + δ)⟩` on the band amplitudes.
const PLAQUETTE_SIGN: f64 = -1.0;

/// Gauge-invariant plaquette Chern number on an `n × n` grid whose
/// coordinates follow `k = min(k_scale · tan(ρπ/2), k_max)` for `ρ ∈ [−1, 1]`.
pub fn chern_number_plaquette<S: StateFamily>(family: &S, grid_n: usize, k_max: f64, k_scale: f64)
    -> Result<PlaquetteChern>
{
    if grid_n < 16 {
        return Err(Error::invalid("grid_n", format!("need at least 16 points per side, got {grid_n}")));
    }
    if !(k_max > 0.0 && k_scale > 0.0) {
        return Err(Error::invalid("k_max", "k_max and k_scale must be positive"));
    }
    let axis: Vec<f64> = (0..grid_n)
        .map(|i| {
            let rho = -1.0 + 2.0 * i as f64 / (grid_n - 1) as f64;
            let t = (k_scale * (rho * PI / 2.0).tan()).clamp(-k_max, k_max);
            if rho.abs() == 1.0 { rho * k_max } else { t }
        })
        .collect();
    let states: Vec<Vec<Spinor>> = axis.par_iter()
        .map(|&kx| axis.iter().map(|&ky| family.state(Momentum::new(kx, ky))).collect())
        .collect();
    let link = |a: &Spinor, b: &Spinor| {
        let z = overlap(a, b);
        let n = z.norm();
        if n == 0.0 { C64::new(1.0, 0.0) } else { z / n }
    };
    let fluxes: Vec<(f64, f64)> = (0..grid_n - 1).into_par_iter()
        .map(|i| {
            let mut sum = 0.0;
            let mut worst = 0.0f64;
            for j in 0..grid_n - 1 {
                let (a, b, c, d) = (&states[i][j], &states[i + 1][j], &states[i + 1][j + 1], &states[i][j + 1]);
                let w = link(a, b) * link(b, c) * link(c, d) * link(d, a);
                let f = w.arg();
                worst = worst.max(f.abs() / PI);
                sum += f;
            }
            (sum, worst)
        })
        .collect();
    let total: f64 = fluxes.iter().map(|f| f.0).sum();
    let worst = fluxes.iter().fold(0.0f64, |acc, f| acc.max(f.1));
    let value = PLAQUETTE_SIGN * total / (2.0 * PI);
    Ok(PlaquetteChern {
        value,
        quantization_gap: (value - value.round()).abs(),
        max_plaquette_flux: worst,
        grid_n,
        k_max,
    })
}

/// Radius enclosing the fraction `frac` of the total curvature weight,
/// from `∫₀^R F k dk = (n_z(0) − n_z(R)) / 2`.
pub fn weight_radius<S: StateFamily>(family: &S, frac: f64) -> f64 {
    let nz0 = n_z(family, 0.0);
    let total = chern_number_radial_endpoint(family);
    let target = nz0 - 2.0 * frac * total;
    let (mut lo, mut hi) = (0.0, family.k_scale());
    while n_z(family, hi) > target {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if n_z(family, mid) > target { lo = mid } else { hi = mid }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn chern_number_radial_endpoint<S: StateFamily>(family: &S) -> f64 {
    let mut k = 100.0 * family.k_scale();
    let mut limit = 0.0;
    for _ in 0..40 {
        limit = (4.0 * n_z(family, 2.0 * k) - n_z(family, k)) / 3.0;
        if (n_z(family, k) - limit).abs() < 1e-13 {
            break;
        }
        k *= 2.0;
    }
    (n_z(family, 0.0) - limit) / 2.0
}

#[derive(Copy, Clone, Debug, Serialize)]
pub struct ChernRow {
    pub u: f64,
    pub radial: f64,
    pub radial_integral: f64,
    pub plaquette: f64,
}

pub fn write_chern_table<W: Write>(rows: &[ChernRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["u", "c_radial", "c_radial_integral", "c_plaquette"])?;
    for r in rows {
        w.write_record([r.u, r.radial, r.radial_integral, r.plaquette].iter().map(|v| format!("{v:.12}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_curvature_profile<W: Write>(u: f64, samples: &[CurvatureSample], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["u", "k", "f"])?;
    for s in samples {
        w.write_record([format!("{u}"), format!("{:.12e}", s.k.k()), format!("{:.12e}", s.f)])?;
    }
    w.flush()?;
    Ok(())
}
