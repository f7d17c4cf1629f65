//! Choosing two laser sets whose summed effective couplings reproduce the
//! scale-dependent disentangler profile.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64 as C64;
use serde::{ Deserialize, Serialize };

use crate::error::{ Error, Result };
use crate::flow::{ disentangler_profile, lambda_roots, residues, FlowScale };
use crate::model::{ ModelParams, Momentum };
use crate::numerics::linalg::cis;
use crate::numerics::optimize::nelder_mead;
use crate::scheme::assumptions::{ assumption_report, AssumptionBounds, AssumptionReport };
use crate::scheme::lasers::LaserSet;
use crate::scheme::reduction::{ effective_coupling, exact_ground_block };

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapperOptions {
    pub bounds: AssumptionBounds,
    /// Margin every condition is pushed to before the circuit rate is maximized.
    pub target_margin: f64,
    pub max_iter: usize,
}

impl Default for MapperOptions {
    fn default() -> Self {
        Self { bounds: AssumptionBounds::default(), target_margin: 50.0, max_iter: 4000 }
    }
}

/// How the summed coupling is evaluated when checking a mapping.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingRoute {
    /// The simplified closed form.
    Simplified,
    /// The exact zero-energy Schur complement of the bare five-level model.
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LaserMapping {
    pub scale: FlowScale,
    /// Set matched to the pole `λ₊`.
    pub unprimed: LaserSet,
    /// Set matched to the pole `λ₋`.
    pub primed: LaserSet,
    /// Circuit rate `Γ = du/dt`.
    pub rate: f64,
    /// `χ` in `J(k) = Γ e^{iχ} (−H(e^{−u}k) e^{−iθ})`.
    pub global_phase: f64,
    /// Shared dressing splitting `Δ₁ − Δ₂`.
    pub splitting: f64,
    pub report: AssumptionReport,
}

impl LaserMapping {
    pub fn sets(&self) -> [LaserSet; 2] {
        [self.unprimed, self.primed]
    }

    /// Coupling demanded by the flow at this scale.
    pub fn target(&self, k: Momentum, p: ModelParams) -> C64 {
        let h = disentangler_profile(k.k() * (-self.scale.u).exp(), p);
        -self.rate * cis(self.global_phase) * h * cis(-k.theta())
    }

    pub fn coupling(&self, k: Momentum, route: CouplingRoute) -> Result<C64> {
        let mut total = C64::new(0.0, 0.0);
        for s in self.sets() {
            total += match route {
                CouplingRoute::Simplified => effective_coupling(k, &s).value,
                CouplingRoute::Exact => exact_ground_block(k, &s)?[(0, 1)],
            };
        }
        Ok(total)
    }

    /// Largest relative deviation `|J − target| / |target|` over `momenta`.
    pub fn reproduction_error(&self, p: ModelParams, momenta: &[Momentum], route: CouplingRoute) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for &k in momenta {
            let want = self.target(k, p);
            worst = worst.max((self.coupling(k, route)? - want).norm() / want.norm());
        }
        Ok(worst)
    }
}

struct Problem {
    /// `(Δ₂, c)` for the unprimed and primed poles.
    poles: [(f64, f64); 2],
    u: f64,
    mass: f64,
    k_soc: f64,
    budget: f64,
    opts: MapperOptions,
}

impl Problem {
    fn sets(&self, x: &[f64], rate: f64) -> Result<[LaserSet; 2]> {
        let split = x[0].exp();
        let omega = (split / 3f64.sqrt()).min(self.budget);
        let mut out = Vec::with_capacity(2);
        for (i, &(d2, c)) in self.poles.iter().enumerate() {
            let ratio = x[1 + i].exp();
            let d1 = d2 + split;
            let product = rate * c * self.u.exp() * d1 / self.k_soc;
            let o2 = (product / ratio).sqrt();
            let o1 = ratio * o2;
            // Ω₁*Ω₂ = i|Ω₁Ω₂| gives J = iΓ H e^{−iθ}.
            out.push(LaserSet::new(C64::new(o1, 0.0), C64::new(0.0, o2), d1, d2, omega, self.k_soc, self.mass)?);
        }
        Ok([out[0], out[1]])
    }

    /// Largest rate keeping the rate-dependent margins at the target.
    fn rate(&self, x: &[f64]) -> Result<f64> {
        let unit = self.sets(x, 1.0)?;
        let r = assumption_report(&unit, &self.opts.bounds);
        let w = self.opts.target_margin;
        let m5 = r.margin(5).unwrap_or(f64::INFINITY);
        let m7 = r.margin(7).unwrap_or(f64::INFINITY);
        let rabi = unit.iter().map(|s| s.omega1.norm().max(s.omega2.norm())).fold(0.0, f64::max);
        Ok((m5 / w).powi(2).min(m7 / w).min((self.budget / rabi).powi(2)))
    }

    fn objective(&self, x: &[f64]) -> f64 {
        let eval = || -> Result<f64> {
            let rate = self.rate(x)?;
            let r = assumption_report(&self.sets(x, rate)?, &self.opts.bounds);
            let w = self.opts.target_margin;
            let penalty: f64 = r.entries.iter().filter_map(|e| e.margin).map(|m| (w / m).ln().max(0.0)).sum();
            Ok(-rate.ln() + 100.0 * penalty)
        };
        eval().unwrap_or(1e12)
    }
}

/// Maps the two partial-fraction terms of the profile at scale `s` onto two laser sets.
///
/// Poles are matched by `Δ₂ = −λ₊e^{2u}/2M`, `Δ₂′ = −λ₋e^{2u}/2M`; amplitudes by
/// `k_SOC |Ω₁Ω₂| / Δ₁ = Γ c± e^u`. The split `|Ω₁|/|Ω₂|` of each set and the
/// shared splitting `Δ₁ − Δ₂` are chosen to maximize the rate `Γ` while all
/// seven margins stay at `target_margin`; the Raman dressing is common to both sets.
pub fn map_lasers_to_disentangler(
    p: ModelParams,
    s: FlowScale,
    mass: f64,
    k_soc: f64,
    amplitude_budget: f64,
    opts: &MapperOptions,
) -> Result<LaserMapping> {
    if !p.quasi_local_regime {
        return Err(Error::ComplexRoots { m: p.m });
    }
    if !(mass > 0.0) {
        return Err(Error::invalid("mass", "must be positive"));
    }
    if !(k_soc > 0.0) {
        return Err(Error::invalid("k_soc", "must be positive"));
    }
    if !(amplitude_budget > 0.0) {
        return Err(Error::invalid("amplitude_budget", "must be positive"));
    }
    let (lp, lm) = lambda_roots(p).real()?;
    let (cp, cm) = residues(p)?;
    let e2u = (2.0 * s.u).exp();
    let problem = Problem {
        poles: [(-lp * e2u / (2.0 * mass), cp), (-lm * e2u / (2.0 * mass), cm)],
        u: s.u,
        mass,
        k_soc,
        budget: amplitude_budget,
        opts: *opts,
    };
    let mut x = vec![30f64.ln(), 0.005f64.ln(), 0.005f64.ln()];
    for _ in 0..3 {
        x = nelder_mead(|x| problem.objective(x), &x, 0.5, 1e-12, opts.max_iter).x;
    }
    let rate = problem.rate(&x)?;
    let sets = problem.sets(&x, rate)?;
    let report = assumption_report(&sets, &opts.bounds);
    if let Some(worst) = report.worst() {
        if worst.margin.unwrap() < opts.bounds.threshold {
            return Err(Error::Infeasible { constraint: worst.binding.clone(), margin: worst.margin.unwrap() });
        }
    }
    Ok(LaserMapping {
        scale: s,
        unprimed: sets[0],
        primed: sets[1],
        rate,
        global_phase: -FRAC_PI_2,
        splitting: x[0].exp(),
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window() -> Vec<Momentum> {
        (0..40).map(|i| Momentum::polar(0.05 * 20f64.powf(i as f64 / 39.0), 0.3 * i as f64)).collect()
    }

    #[test]
    fn uv_mapping_reproduces_profile() {
        let p = ModelParams::new(3.0 / 16.0).unwrap();
        let m = map_lasers_to_disentangler(p, FlowScale::UV, 1.0, 0.3, 100.0, &MapperOptions::default()).unwrap();
        assert!(m.report.all_pass(), "{:#?}", m.report);
        for e in &m.report.entries {
            assert!(e.margin.is_none_or(|v| v >= 10.0));
        }
        let simple = m.reproduction_error(p, &window(), CouplingRoute::Simplified).unwrap();
        assert!(simple < 1e-12, "{simple}");
        let exact = m.reproduction_error(p, &window(), CouplingRoute::Exact).unwrap();
        assert!(exact < 0.05, "{exact}");
        assert!((m.unprimed.delta2 / m.primed.delta2 - 1.0 / 9.0).abs() < 1e-14);
        assert!((m.unprimed.delta1 - m.unprimed.delta2 - (m.primed.delta1 - m.primed.delta2)).abs() < 1e-12);
        assert!(m.rate > 0.0);
    }

    #[test]
    fn poles_follow_scale() {
        let p = ModelParams::new(3.0 / 16.0).unwrap();
        let opts = MapperOptions::default();
        let a = map_lasers_to_disentangler(p, FlowScale::UV, 1.0, 0.3, 100.0, &opts).unwrap();
        let b = map_lasers_to_disentangler(p, FlowScale::at(-0.5), 1.0, 0.3, 100.0, &opts).unwrap();
        assert!((b.unprimed.delta2 / a.unprimed.delta2 - (-1.0f64).exp()).abs() < 1e-14);
        let exact = b.reproduction_error(p, &window(), CouplingRoute::Exact).unwrap();
        assert!(exact < 0.05, "{exact}");
    }

    #[test]
    fn rejects_non_local_mass() {
        let p = ModelParams::new(0.3).unwrap();
        assert!(matches!(
            map_lasers_to_disentangler(p, FlowScale::UV, 1.0, 0.3, 100.0, &MapperOptions::default()),
            Err(Error::ComplexRoots { .. })
        ));
    }

    #[test]
    fn impossible_bounds_are_reported() {
        let p = ModelParams::new(3.0 / 16.0).unwrap();
        let mut opts = MapperOptions::default();
        opts.bounds.lattice_constant = 1.0;
        match map_lasers_to_disentangler(p, FlowScale::UV, 1.0, 0.3, 100.0, &opts) {
            Err(Error::Infeasible { constraint, .. }) => assert!(constraint.contains("k_SOC a")),
            other => panic!("{other:?}"),
        }
    }
}
