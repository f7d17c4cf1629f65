//! Scale-invariant disentangler profile, the closed-form renormalized
//! wavefunction, and numerical integration of the interaction-picture flow.

use std::io::Write;

use nalgebra::Matrix2;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{ Deserialize, Serialize };

use crate::error::{ Error, Result };
use crate::model::{ ground_spinor, ModelParams, Momentum, Spinor };
use crate::numerics::ode::{ self, OdeStats, Stepper };
use crate::numerics::quad::{ integrate_to_infinity, QuadConfig };

pub const DEFAULT_U_MIN: f64 = -8.0;

/// Renormalization scale `u <= 0` (UV at 0, IR towards `-∞`).
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowScale {
    pub u: f64,
}

impl FlowScale {
    pub const UV: FlowScale = FlowScale { u: 0.0 };

    /// Validated scale within `[u_min, 0]`.
    pub fn new(u: f64, u_min: f64) -> Result<Self> {
        if !u.is_finite() || u > 0.0 || u < u_min {
            return Err(Error::invalid("u", format!("scale {u} outside [{u_min}, 0]")));
        }
        Ok(Self { u })
    }

    /// Unchecked constructor for internal use and analytic evaluations.
    pub fn at(u: f64) -> Self {
        Self { u }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RootKind {
    Real,
    Degenerate,
    Complex,
}

/// Roots of `x² + (1 − 2m)x + m² = 0`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootPair {
    pub lambda_plus: C64,
    pub lambda_minus: C64,
    pub kind: RootKind,
}

impl RootPair {
    /// Real parts, for callers that require the quasi-local regime.
    pub fn real(&self) -> Result<(f64, f64)> {
        match self.kind {
            RootKind::Complex => Err(Error::ComplexRoots {
                m: (self.lambda_plus * self.lambda_minus).re.sqrt(),
            }),
            _ => Ok((self.lambda_plus.re, self.lambda_minus.re)),
        }
    }
}

pub fn lambda_roots(p: ModelParams) -> RootPair {
    let m = p.m;
    let disc = 1.0 - 4.0 * m;
    let b = 2.0 * m - 1.0;
    if disc > 0.0 {
        let s = disc.sqrt();
        // The larger-magnitude root from the stable formula, the other by Vieta.
        let minus = (b - s) / 2.0;
        let plus = m * m / minus;
        RootPair { lambda_plus: C64::new(plus, 0.0), lambda_minus: C64::new(minus, 0.0), kind: RootKind::Real }
    } else if disc == 0.0 {
        let r = C64::new(b / 2.0, 0.0);
        RootPair { lambda_plus: r, lambda_minus: r, kind: RootKind::Degenerate }
    } else {
        let s = (-disc).sqrt();
        RootPair {
            lambda_plus: C64::new(b / 2.0, s / 2.0),
            lambda_minus: C64::new(b / 2.0, -s / 2.0),
            kind: RootKind::Complex,
        }
    }
}

/// The disentangler profile `H(k) = k(m + k²) / (2[k⁴ + k²(1 − 2m) + m²])`.
pub fn disentangler_profile(k: f64, p: ModelParams) -> f64 {
    let m = p.m;
    let k2 = k * k;
    k * (m + k2) / (2.0 * (k2 * k2 + k2 * (1.0 - 2.0 * m) + m * m))
}

/// Residues `(c₊, c₋)` of `H(k) = c₊ k/(k² − λ₊) + c₋ k/(k² − λ₋)`.
pub fn residues(p: ModelParams) -> Result<(f64, f64)> {
    if !p.quasi_local_regime {
        return Err(Error::ComplexRoots { m: p.m });
    }
    let s = (1.0 - 4.0 * p.m).sqrt();
    Ok(((1.0 - s) / 4.0, (1.0 + s) / 4.0))
}

/// The coefficient pair as printed alongside the partial-fraction form,
/// `((−1 + s)/(4s), (1 + s)/(4s))` with `s = √(1 − 4m)`. Kept for
/// comparison only; it does not reproduce [`disentangler_profile`].
pub fn printed_residues(p: ModelParams) -> Result<(f64, f64)> {
    if !p.quasi_local_regime {
        return Err(Error::ComplexRoots { m: p.m });
    }
    let s = (1.0 - 4.0 * p.m).sqrt();
    Ok(((-1.0 + s) / (4.0 * s), (1.0 + s) / (4.0 * s)))
}

/// Partial-fraction evaluation of the disentangler profile.
pub fn partial_fraction_profile(k: f64, p: ModelParams) -> Result<f64> {
    let (lp, lm) = lambda_roots(p).real()?;
    let (cp, cm) = residues(p)?;
    let k2 = k * k;
    Ok(cp * k / (k2 - lp) + cm * k / (k2 - lm))
}

/// `φ(k) = ∫_k^∞ H(t) dt / t` by adaptive quadrature.
pub fn phi_with(k: f64, p: ModelParams, cfg: QuadConfig) -> Result<f64> {
    let m = p.m;
    let integrand = |t: f64| {
        let t2 = t * t;
        (m + t2) / (2.0 * (t2 * t2 + t2 * (1.0 - 2.0 * m) + m * m))
    };
    let split = (10.0 * m.sqrt().max(1.0)).max(k);
    Ok(integrate_to_infinity(integrand, k, split, cfg)?.value)
}

pub fn phi(k: f64, p: ModelParams) -> Result<f64> {
    phi_with(k, p, QuadConfig { abs_tol: 1e-10, rel_tol: 1e-13, max_intervals: 2000 })
}

/// The closed-form renormalized state at scale `u`,
/// `P ∝ (m − k²e^{−2u}) + √((m − k²e^{−2u})² + k²e^{−2u})`, `Q ∝ k e^{−u} e^{−iθ}`.
///
/// The state is the UV ground state evaluated at the rescaled momentum
/// `e^{−u}k`, so the stable ground-state evaluation is reused.
pub fn analytic_state(s: FlowScale, k: Momentum, p: ModelParams) -> Spinor {
    ground_spinor(k.scaled((-s.u).exp()), p)
}

/// `(sin φ(e^{−u}k), e^{−iθ} cos φ(e^{−u}k))` with `φ` from quadrature.
pub fn analytic_state_from_phi(s: FlowScale, k: Momentum, p: ModelParams) -> Result<Spinor> {
    let angle = phi(k.k() * (-s.u).exp(), p)?;
    Ok(Spinor::new(C64::new(angle.sin(), 0.0), C64::from_polar(angle.cos(), -k.theta())))
}

/// Generator `G` with `d/du (P, Q)ᵀ = G (P, Q)ᵀ`.
pub fn flow_generator(s: FlowScale, k: Momentum, p: ModelParams) -> Matrix2<C64> {
    let h = disentangler_profile(k.k() * (-s.u).exp(), p);
    let theta = k.theta();
    Matrix2::new(
        C64::new(0.0, 0.0), C64::from_polar(h, theta),
        -C64::from_polar(h, -theta), C64::new(0.0, 0.0),
    )
}

pub fn fidelity(a: &Spinor, b: &Spinor) -> f64 {
    (a.p.conj() * b.p + a.q.conj() * b.q).norm()
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub k: Momentum,
    pub state: Spinor,
}

/// A set of momenta with their spinors at a common scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowStateGrid {
    pub scale: FlowScale,
    pub points: Vec<GridPoint>,
}

impl FlowStateGrid {
    /// Log-spaced radial momenta in `[k_min, k_max]` along direction `theta`.
    pub fn radial_momenta(n: usize, k_min: f64, k_max: f64, theta: f64) -> Vec<Momentum> {
        if n == 1 {
            return vec![Momentum::polar(k_min, theta)];
        }
        let (a, b) = (k_min.ln(), k_max.ln());
        (0..n)
            .map(|i| Momentum::polar((a + (b - a) * i as f64 / (n - 1) as f64).exp(), theta))
            .collect()
    }

    pub fn analytic(s: FlowScale, momenta: &[Momentum], p: ModelParams) -> Self {
        let points = momenta.iter().map(|&k| GridPoint { k, state: analytic_state(s, k, p) }).collect();
        Self { scale: s, points }
    }

    pub fn max_norm_deviation(&self) -> f64 {
        self.points.iter().fold(0.0, |acc, pt| acc.max((pt.state.norm_sqr().sqrt() - 1.0).abs()))
    }

    /// CSV with columns `kx, ky, re_p, im_p, re_q, im_q`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["kx", "ky", "re_p", "im_p", "re_q", "im_q"])?;
        for pt in &self.points {
            let s = pt.state;
            w.write_record(
                [pt.k.kx, pt.k.ky, s.p.re, s.p.im, s.q.re, s.q.im].iter().map(|v| format!("{v:.17e}")),
            )?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Copy, Clone, Debug, Serialize, Deserialize)]
pub struct FlowConfig {
    pub stepper: Stepper,
    /// Integration fails if any point's norm deviates by more than this.
    pub norm_tolerance: f64,
    pub u_min: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self { stepper: Stepper::default(), norm_tolerance: 1e-6, u_min: DEFAULT_U_MIN }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FlowOutcome {
    pub grid: FlowStateGrid,
    /// Largest `| |ψ| − 1 |` over the grid after integration.
    pub max_norm_drift: f64,
    pub total_steps: usize,
}

fn evolve_point(k: Momentum, start: Spinor, u0: f64, u1: f64, p: ModelParams, stepper: Stepper)
    -> Result<(Spinor, OdeStats)>
{
    let kk = k.k();
    let (c, s) = (k.theta().cos(), k.theta().sin());
    let rhs = |u: f64, y: &[C64], dy: &mut [C64]| {
        let h = disentangler_profile(kk * (-u).exp(), p);
        let up = C64::new(h * c, h * s);
        dy[0] = up * y[1];
        dy[1] = -up.conj() * y[0];
    };
    let mut y = [start.p, start.q];
    let stats = ode::integrate(rhs, u0, u1, &mut y, stepper)?;
    Ok((Spinor::new(y[0], y[1]), stats))
}

/// Evolve every grid point independently from the grid scale to `u_target`.
pub fn integrate_flow(initial: &FlowStateGrid, u_target: FlowScale, p: ModelParams, cfg: &FlowConfig)
    -> Result<FlowOutcome>
{
    FlowScale::new(u_target.u, cfg.u_min)?;
    let u0 = initial.scale.u;
    let evolved: Vec<Result<(GridPoint, OdeStats)>> = initial.points.par_iter()
        .map(|pt| {
            let (state, stats) = evolve_point(pt.k, pt.state, u0, u_target.u, p, cfg.stepper)?;
            Ok((GridPoint { k: pt.k, state }, stats))
        })
        .collect();
    let mut points = Vec::with_capacity(evolved.len());
    let mut total_steps = 0;
    let mut drift = 0.0f64;
    for (pt, r) in initial.points.iter().zip(evolved) {
        let (next, stats) = r?;
        drift = drift.max((next.state.norm_sqr().sqrt() - pt.state.norm_sqr().sqrt()).abs());
        total_steps += stats.steps;
        points.push(next);
    }
    if drift > cfg.norm_tolerance {
        return Err(Error::NormDrift { drift, tolerance: cfg.norm_tolerance });
    }
    Ok(FlowOutcome { grid: FlowStateGrid { scale: u_target, points }, max_norm_drift: drift, total_steps })
}

/// Residual of `d/dk arcsin(u_k) + H(k)/k`, with the derivative taken by a
/// five-point stencil of `atan2(u_k, |v_k|)`.
pub fn boundary_identity_residual(k: f64, p: ModelParams) -> f64 {
    let angle = |x: f64| {
        let s = ground_spinor(Momentum::new(x, 0.0), p);
        s.p.re.atan2(s.q.norm())
    };
    let h = 1e-3 * k;
    let d = (angle(k - 2.0 * h) - 8.0 * angle(k - h) + 8.0 * angle(k + h) - angle(k + 2.0 * h)) / (12.0 * h);
    d + disentangler_profile(k, p) / k
}
