//! Exact dynamics of the bare five-level model compared with the effective
//! two-level coupling.
//!
//! In the frame rotating at the first set's common detuning the model with
//! one set is static and is propagated by exact diagonalization. A second set
//! adds a single harmonic at the beat frequency; that case is solved through
//! the Fourier-truncated Floquet Hamiltonian, which gives the propagator at
//! arbitrary times without step-error accumulation over long durations.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{ Deserialize, Serialize };

use crate::error::{ Error, Result };
use crate::model::Momentum;
use crate::numerics::fit::{ log_log_slope, LineFit };
use crate::numerics::linalg::{ cis, hermitian_eigen, max_abs, propagator, CMat, I };
use crate::scheme::assumptions::{ assumption_report, AssumptionBounds };
use crate::scheme::five_level::five_level_hamiltonian;
use crate::scheme::lasers::LaserSet;
use crate::scheme::reduction::{ combined_display, exact_ground_block };

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleOptions {
    /// Number of equally spaced comparison times in `(0, T]`.
    pub checkpoints: usize,
    /// Largest Fourier cutoff tried for the Floquet Hamiltonian.
    pub max_harmonics: usize,
    /// Convergence tolerance of the Floquet propagator under increasing cutoff.
    pub floquet_tolerance: f64,
    pub bounds: AssumptionBounds,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { checkpoints: 256, max_harmonics: 32, floquet_tolerance: 1e-11, bounds: AssumptionBounds::default() }
    }
}

/// `H(t) = H₀ + V e^{iωt} + V† e^{−iωt}` on `(g₁, g₂, e_bare,1..3)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FullModel {
    pub static_part: CMat,
    pub drive: Option<(CMat, f64)>,
    /// Diagonal counterterms added to the ground states.
    pub counterterms: [f64; 2],
}

impl FullModel {
    pub fn at(&self, t: f64) -> CMat {
        let mut h = self.static_part.clone();
        if let Some((v, w)) = &self.drive {
            h += v * cis(w * t) + v.adjoint() * cis(-w * t);
        }
        h
    }
}

/// Builds the bare model with all sets on, in the frame of the first set,
/// with the ground-state light shifts nulled by counterterms.
pub fn full_model(k: Momentum, sets: &[LaserSet]) -> Result<FullModel> {
    let first = sets.first().ok_or_else(|| Error::invalid("sets", "at least one laser set is required"))?;
    if sets.len() > 2 {
        return Err(Error::invalid("sets", "at most two laser sets are supported"));
    }
    for s in &sets[1..] {
        if s.omega != first.omega || s.phi != first.phi || s.k_soc != first.k_soc || s.mass != first.mass {
            return Err(Error::invalid("sets", "all sets must share the Raman dressing (omega, phi, k_soc, mass)"));
        }
    }
    let base = first.to_bare();
    let mut h0 = five_level_hamiltonian(k, &base, 0.0);
    for j in 2..5 {
        h0[(j, j)] -= base.delta;
    }
    let mut counter = [0.0; 2];
    for s in sets {
        let g = exact_ground_block(k, s)?;
        counter[0] -= g[(0, 0)].re;
        counter[1] -= g[(1, 1)].re;
    }
    h0[(0, 0)] += counter[0];
    h0[(1, 1)] += counter[1];
    let drive = sets.get(1).map(|s| {
        let b = s.to_bare();
        let mut v = CMat::zeros(5, 5);
        for i in 0..2 {
            for j in 0..3 {
                v[(i, 2 + j)] = b.chi[i][j].conj();
            }
        }
        (v, b.delta - base.delta)
    });
    Ok(FullModel { static_part: h0, drive, counterterms: counter })
}

/// Time-evolution operator of a [`FullModel`].
pub enum Evolution {
    Static { values: Vec<f64>, vectors: CMat },
    Floquet { quasi: Vec<f64>, modes: Vec<Vec<CMat>>, omega: f64, harmonics: usize },
}

impl Evolution {
    pub fn new(model: &FullModel, max_harmonics: usize, tol: f64) -> Result<Self> {
        match &model.drive {
            None => {
                let (mut values, mut vectors) = hermitian_eigen(&model.static_part);
                refine_ground_modes(&model.static_part, &mut values, &mut vectors)?;
                Ok(Evolution::Static { values, vectors })
            }
            Some((v, w)) => {
                let period = 2.0 * std::f64::consts::PI / w.abs();
                let mut n = 2;
                let mut prev = Self::floquet(&model.static_part, v, *w, n)?;
                loop {
                    let next_n = (2 * n).min(max_harmonics);
                    let next = Self::floquet(&model.static_part, v, *w, next_n)?;
                    let diff = max_abs(&(next.propagator(period) - prev.propagator(period)));
                    if diff < tol {
                        return Ok(next);
                    }
                    if next_n == max_harmonics {
                        return Err(Error::NormDrift { drift: diff, tolerance: tol });
                    }
                    n = next_n;
                    prev = next;
                }
            }
        }
    }

    fn floquet(h0: &CMat, v: &CMat, w: f64, n: usize) -> Result<Self> {
        let d = h0.nrows();
        let blocks = 2 * n + 1;
        let mut f = CMat::zeros(d * blocks, d * blocks);
        for b in 0..blocks {
            let m = b as f64 - n as f64;
            for i in 0..d {
                for j in 0..d {
                    f[(b * d + i, b * d + j)] = h0[(i, j)];
                    if b > 0 {
                        f[(b * d + i, (b - 1) * d + j)] = v[(i, j)];
                        f[((b - 1) * d + i, b * d + j)] = v[(j, i)].conj();
                    }
                }
                f[(b * d + i, b * d + i)] += m * w;
            }
        }
        let (values, vectors) = hermitian_eigen(&f);
        let weight = |col: usize| (0..d).map(|i| vectors[(n * d + i, col)].norm_sqr()).sum::<f64>();
        let mut order: Vec<usize> = (0..d * blocks).collect();
        order.sort_by(|&a, &b| weight(b).total_cmp(&weight(a)));
        let chosen = &order[..d];
        let quasi = chosen.iter().map(|&c| values[c]).collect();
        let modes = chosen
            .iter()
            .map(|&c| (0..blocks).map(|b| vectors.view((b * d, c), (d, 1)).into_owned()).collect())
            .collect();
        let out = Evolution::Floquet { quasi, modes, omega: w, harmonics: n };
        let defect = crate::numerics::linalg::unitarity_defect(&out.propagator(0.0));
        if defect > 1e-8 {
            return Err(Error::NormDrift { drift: defect, tolerance: 1e-8 });
        }
        Ok(out)
    }

    /// `U(t, 0)`.
    pub fn propagator(&self, t: f64) -> CMat {
        match self {
            Evolution::Static { values, vectors } => {
                let n = values.len();
                let phases = CMat::from_fn(n, n, |i, j| if i == j { cis(-values[i] * t) } else { C64::new(0.0, 0.0) });
                vectors * phases * vectors.adjoint()
            }
            Evolution::Floquet { quasi, modes, omega, harmonics } => {
                let d = modes[0][0].nrows();
                let mut u = CMat::zeros(d, d);
                for (e, blocks) in quasi.iter().zip(modes) {
                    let mut at_t = CMat::zeros(d, 1);
                    let mut at_0 = CMat::zeros(d, 1);
                    for (b, phi) in blocks.iter().enumerate() {
                        let m = b as f64 - *harmonics as f64;
                        at_t += phi * cis(m * omega * t);
                        at_0 += phi;
                    }
                    u += at_t * at_0.adjoint() * cis(-e * t);
                }
                u
            }
        }
    }

    pub fn harmonics(&self) -> usize {
        match self {
            Evolution::Static { .. } => 0,
            Evolution::Floquet { harmonics, .. } => *harmonics,
        }
    }
}

/// Recomputes the two ground-like eigenpairs from the energy-dependent Schur
/// complement `H_gg + B (E − H_ee)⁻¹ B†`, iterated to self-consistency.
///
/// The ground splitting can be many orders of magnitude below the excited
/// energies; a direct diagonalization resolves it only to `ε_mach ‖H‖`, which
/// limits the usable evolution time. The complement involves only the small
/// couplings and so resolves the splitting to relative machine precision.
fn refine_ground_modes(h: &CMat, values: &mut [f64], vectors: &mut CMat) -> Result<()> {
    let n = h.nrows();
    let weight = |col: usize| vectors[(0, col)].norm_sqr() + vectors[(1, col)].norm_sqr();
    let mut cols: Vec<usize> = (0..n).collect();
    cols.sort_by(|&a, &b| weight(b).total_cmp(&weight(a)));
    let mut ground = [cols[0], cols[1]];
    ground.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let hgg = h.view((0, 0), (2, 2)).into_owned();
    let b = h.view((0, 2), (2, n - 2)).into_owned();
    let hee = h.view((2, 2), (n - 2, n - 2)).into_owned();
    let resolvent = |e: f64| -> Result<CMat> {
        let shifted = CMat::identity(n - 2, n - 2) * C64::new(e, 0.0) - &hee;
        shifted.try_inverse().ok_or_else(|| Error::invalid("sets", "ground energy coincides with an excited level"))
    };
    for (branch, &col) in ground.iter().enumerate() {
        let mut e = values[col];
        let mut vg = CMat::zeros(2, 1);
        for _ in 0..50 {
            let heff = &hgg + &b * resolvent(e)? * b.adjoint();
            let (ev, vv) = hermitian_eigen(&heff);
            let next = ev[branch];
            vg = vv.columns(branch, 1).into_owned();
            let done = (next - e).abs() <= 1e-15 * next.abs().max(f64::MIN_POSITIVE);
            e = next;
            if done {
                break;
            }
        }
        let excited = resolvent(e)? * b.adjoint() * &vg;
        let mut full = CMat::zeros(n, 1);
        full.view_mut((0, 0), (2, 1)).copy_from(&vg);
        full.view_mut((2, 0), (n - 2, 1)).copy_from(&excited);
        let norm = full.norm();
        let old = vectors.column(col).into_owned();
        let overlap = old.dotc(&full);
        let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { C64::new(1.0, 0.0) };
        vectors.set_column(col, &(full * (phase / norm)).column(0));
        values[col] = e;
    }
    Ok(())
}

/// Fourth-order Magnus propagator of a time-dependent Hamiltonian on `[t0, t1]`.
pub fn magnus_propagator<F: Fn(f64) -> CMat>(h: F, t0: f64, t1: f64, steps: usize) -> CMat {
    let n = h(t0).nrows();
    let dt = (t1 - t0) / steps as f64;
    let c = 3f64.sqrt() / 6.0;
    let mut u = CMat::identity(n, n);
    for i in 0..steps {
        let t = t0 + i as f64 * dt;
        let h1 = h(t + (0.5 - c) * dt);
        let h2 = h(t + (0.5 + c) * dt);
        let comm = &h2 * &h1 - &h1 * &h2;
        let k = (&h1 + &h2) * C64::new(0.5 * dt, 0.0) - comm * (I * (3f64.sqrt() / 12.0) * dt * dt);
        u = propagator(&k, 1.0) * u;
    }
    u
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleResult {
    pub k: Momentum,
    pub duration: f64,
    /// Worst `1 − |⟨ψ_eff|P_g ψ_full⟩|²` over checkpoints and both initial ground states.
    pub infidelity: f64,
    pub epsilon: f64,
    pub coupling: C64,
    /// Global phase removed at the final time (initial state `g₁`).
    pub removed_phase: f64,
    pub counterterms: [f64; 2],
    pub norm_drift: f64,
    pub harmonics: usize,
}

/// Compares the full model with the effective coupling over `[0, T]`;
/// `T` defaults to `1/|J|`.
pub fn evolve_full_vs_effective(k: Momentum, sets: &[LaserSet], duration: Option<f64>, opts: &OracleOptions)
    -> Result<OracleResult>
{
    let model = full_model(k, sets)?;
    let heff = combined_display(k, sets);
    let coupling = heff[(0, 1)];
    let duration = match duration {
        Some(t) if t > 0.0 => t,
        Some(_) => return Err(Error::invalid("duration", "must be positive")),
        None if coupling.norm() > 0.0 => 1.0 / coupling.norm(),
        None => return Err(Error::invalid("duration", "required when the effective coupling vanishes")),
    };
    let evo = Evolution::new(&model, opts.max_harmonics, opts.floquet_tolerance)?;
    let mut worst: f64 = 0.0;
    let mut drift: f64 = 0.0;
    let mut removed = 0.0;
    let n = opts.checkpoints.max(1);
    for i in 1..=n {
        let t = duration * i as f64 / n as f64;
        let u = evo.propagator(t);
        let ue = propagator(&heff, t);
        for g in 0..2 {
            let full = u.column(g);
            let eff = ue.column(g);
            let overlap = eff[0].conj() * full[0] + eff[1].conj() * full[1];
            worst = worst.max(1.0 - overlap.norm_sqr());
            drift = drift.max((full.norm() - 1.0).abs());
            if i == n && g == 0 {
                removed = overlap.arg();
            }
        }
    }
    let mut bounds = opts.bounds;
    bounds.k_window = (k.k(), k.k());
    let epsilon = assumption_report(sets, &bounds).epsilon();
    Ok(OracleResult {
        k,
        duration,
        infidelity: worst.max(0.0),
        epsilon,
        coupling,
        removed_phase: removed,
        counterterms: model.counterterms,
        norm_drift: drift,
        harmonics: evo.harmonics(),
    })
}

/// A laser set with every small ratio scaled by `s`: the splitting and
/// dressing by `1/s`, `Ω₂` by `s` and `Ω₁` by `s²`.
pub fn scaled_set(base: &LaserSet, s: f64) -> Result<LaserSet> {
    LaserSet::new(
        base.omega1 * s * s,
        base.omega2 * s,
        base.delta2 + (base.delta1 - base.delta2) / s,
        base.delta2,
        base.omega / s,
        base.k_soc,
        base.mass,
    )
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub scale: f64,
    pub epsilon: f64,
    pub infidelity: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EpsilonSweep {
    pub k: Momentum,
    pub points: Vec<SweepPoint>,
    pub fit: LineFit,
    /// Smallest `c` with `infidelity ≤ c ε²` at every point.
    pub constant: f64,
}

impl EpsilonSweep {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["scale", "epsilon", "infidelity"])?;
        for p in &self.points {
            w.write_record([format!("{:.6e}", p.scale), format!("{:.10e}", p.epsilon), format!("{:.10e}", p.infidelity)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs the oracle for each scale (in parallel) and fits `log infidelity` against `log ε`.
pub fn epsilon_sweep(base: &LaserSet, k: Momentum, scales: &[f64], opts: &OracleOptions) -> Result<EpsilonSweep> {
    let points = scales
        .par_iter()
        .map(|&s| {
            let set = scaled_set(base, s)?;
            let r = evolve_full_vs_effective(k, &[set], None, opts)?;
            Ok(SweepPoint { scale: s, epsilon: r.epsilon, infidelity: r.infidelity })
        })
        .collect::<Result<Vec<_>>>()?;
    let eps: Vec<f64> = points.iter().map(|p| p.epsilon).collect();
    let inf: Vec<f64> = points.iter().map(|p| p.infidelity).collect();
    let fit = log_log_slope(&eps, &inf);
    let constant = points.iter().map(|p| p.infidelity / (p.epsilon * p.epsilon)).fold(0.0, f64::max);
    Ok(EpsilonSweep { k, points, fit, constant })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linalg::c;

    fn base() -> LaserSet {
        let d2 = 1.0 / 32.0;
        let o2 = d2 / 10.0;
        LaserSet::new(c(o2 * 0.05, 0.0), c(0.0, o2), d2 + 10.0, d2, 10.0 / 3f64.sqrt(), 0.5, 1.0).unwrap()
    }

    #[test]
    fn switched_off_lasers_do_nothing() {
        let s = base().switched_off();
        let r = evolve_full_vs_effective(Momentum::polar(0.5, 0.2), &[s], Some(100.0), &OracleOptions::default()).unwrap();
        assert!(r.infidelity < 1e-14, "{}", r.infidelity);
    }

    #[test]
    fn infidelity_scales_quadratically() {
        let sweep = epsilon_sweep(&base(), Momentum::polar(0.5, 0.3), &[1.0, 0.5, 0.25, 0.125], &OracleOptions::default()).unwrap();
        assert!((sweep.fit.slope - 2.0).abs() < 0.3, "{:?}", sweep);
        assert!(sweep.points[0].infidelity < 1e-2);
    }

    #[test]
    fn floquet_matches_direct_integration() {
        let a = base();
        let mut b = base();
        b.delta2 = 9.0 / 32.0;
        b.delta1 = b.delta2 + (a.delta1 - a.delta2);
        b.omega2 *= 2.0;
        let model = full_model(Momentum::polar(0.4, 1.0), &[a, b]).unwrap();
        let evo = Evolution::new(&model, 32, 1e-12).unwrap();
        let (_, w) = model.drive.as_ref().unwrap();
        let t = 2.5 * 2.0 * std::f64::consts::PI / w.abs();
        let direct = magnus_propagator(|t| model.at(t), 0.0, t, 4000);
        assert!(max_abs(&(direct - evo.propagator(t))) < 1e-9);
    }

    #[test]
    fn two_sets_with_crosstalk_stay_close() {
        let a = base();
        let mut b = a;
        b.delta2 = 9.0 / 32.0;
        b.delta1 = b.delta2 + (a.delta1 - a.delta2);
        b.omega1 = a.omega1 * 3.0;
        let r = evolve_full_vs_effective(Momentum::polar(0.5, 0.3), &[a, b], None, &OracleOptions::default()).unwrap();
        assert!(r.infidelity < 1e-2, "{r:?}");
        assert!(r.norm_drift < 1e-9, "{r:?}");
        assert!(r.harmonics > 0);
    }
}
