//! The acceptance criteria as executable checks, shared by the test suite and
//! the `repro` command.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64 as C64;
use rand::{ Rng, SeedableRng };
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{ Deserialize, Serialize };

use crate::error::Result;
use crate::flow::{
    analytic_state, boundary_identity_residual, disentangler_profile, fidelity, integrate_flow,
    partial_fraction_profile, phi, printed_residues, FlowConfig, FlowScale, FlowStateGrid,
};
use crate::irprep::{ preparation_round_trip, selection_rule_defect, LatticeSpec, DEFAULT_THRESHOLD };
use crate::kernel::{ adjudicate_decay_length, fit_decay_length, kernel_closed_form, real_space_kernel };
use crate::model::{ ground_spinor, ModelParams, Momentum };
use crate::numerics::linalg::{ max_abs, CMat };
use crate::scheme::five_level::{ dressed_display, dressed_hamiltonian, drop_third_dressed, four_level_display, PhaseExpansion };
use crate::scheme::mapping::{ map_lasers_to_disentangler, CouplingRoute, LaserMapping, MapperOptions };
use crate::scheme::oracle::{ epsilon_sweep, OracleOptions };
use crate::scheme::reduction::{
    adiabatic_eliminate, combined_display, rotating_frame_display, rotating_frame_numeric, second_order_display,
    simplified_display, truncated_display,
};
use crate::scheme::sampling::{ random_bare_scheme, random_laser_set, random_momentum, random_window_momentum };
use crate::scheme::toy::{ synthetic_rule_check, ToyParams };
use crate::topology::{ chern_number_plaquette, chern_number_radial, AnalyticFamily, InfraredFamily, StateFamily };

pub const CRITERIA: [(u8, &str); 10] = [
    (1, "Chern quantization"),
    (2, "Flow invariance of topology"),
    (3, "Integrated flow vs closed form"),
    (4, "Boundary-condition identity"),
    (5, "Angle endpoints"),
    (6, "Partial-fraction identity"),
    (7, "Kernel decay"),
    (8, "Synthetic selection rule"),
    (9, "Five-level pipeline"),
    (10, "Lattice momentum addressing"),
];

pub const MASSES: [f64; 3] = [0.05, 3.0 / 16.0, 0.22];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcceptanceConfig {
    /// Seed for every random draw.
    pub seed: u64,
    /// Number of random parameter draws in the structure checks.
    pub draws: usize,
    pub plaquette_grid: usize,
    pub flow_points: usize,
    pub sweep_scales: Vec<f64>,
    pub lattice_n: usize,
    pub preparation_u0: f64,
}

impl Default for AcceptanceConfig {
    fn default() -> Self {
        Self {
            seed: 20240917,
            draws: 100,
            plaquette_grid: 256,
            flow_points: 64,
            sweep_scales: vec![2.0, 1.0, 0.5, 0.25],
            lattice_n: 32,
            preparation_u0: -4.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: String,
    pub pass: bool,
    pub metrics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl CriterionResult {
    fn new(id: u8) -> Self {
        let name = CRITERIA.iter().find(|c| c.0 == id).map_or("unknown", |c| c.1).to_string();
        Self { id, name, pass: true, metrics: BTreeMap::new(), notes: Vec::new() }
    }

    fn metric(&mut self, key: impl Into<String>, value: f64) -> f64 {
        self.metrics.insert(key.into(), value);
        value
    }

    /// Records `value` and requires `value < limit`.
    fn below(&mut self, key: &str, value: f64, limit: f64) {
        self.metric(key, value);
        if !(value < limit) {
            self.pass = false;
            self.notes.push(format!("{key} = {value:.3e} is not below {limit:.0e}"));
        }
    }

    fn fail(&mut self, msg: impl Into<String>) {
        self.pass = false;
        self.notes.push(msg.into());
    }

    /// One-line summary: status, id, name and the metrics.
    pub fn line(&self) -> String {
        let metrics: Vec<String> = self.metrics.iter().map(|(k, v)| format!("{k}={v:.4e}")).collect();
        let mut s = format!("[{}] {:>2} {}: {}", if self.pass { "PASS" } else { "FAIL" }, self.id, self.name, metrics.join(", "));
        for n in &self.notes {
            s.push_str(" | ");
            s.push_str(n);
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AcceptanceReport {
    pub all_pass: bool,
    pub criteria: Vec<CriterionResult>,
}

impl AcceptanceReport {
    pub fn from_results(criteria: Vec<CriterionResult>) -> Self {
        Self { all_pass: criteria.iter().all(|c| c.pass), criteria }
    }
}

/// Runs one criterion; internal errors turn into a failing result that names them.
pub fn run_criterion(id: u8, cfg: &AcceptanceConfig) -> CriterionResult {
    let mut r = CriterionResult::new(id);
    let outcome = match id {
        1 => chern_quantization(&mut r, cfg),
        2 => flow_invariance(&mut r),
        3 => flow_integration(&mut r, cfg),
        4 => boundary_identity(&mut r),
        5 => angle_endpoints(&mut r),
        6 => partial_fractions(&mut r),
        7 => kernel_decay(&mut r),
        8 => synthetic_rule(&mut r, cfg),
        9 => five_level_pipeline(&mut r, cfg),
        10 => lattice_addressing(&mut r, cfg),
        _ => {
            r.fail(format!("unknown criterion {id}"));
            Ok(())
        }
    };
    if let Err(e) = outcome {
        r.fail(format!("error: {e}"));
    }
    r
}

pub fn run_all(cfg: &AcceptanceConfig) -> AcceptanceReport {
    AcceptanceReport::from_results(CRITERIA.iter().map(|&(id, _)| run_criterion(id, cfg)).collect())
}

fn log_grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

fn chern_quantization(r: &mut CriterionResult, cfg: &AcceptanceConfig) -> Result<()> {
    for m in MASSES {
        let f = AnalyticFamily { scale: FlowScale::UV, params: ModelParams::quasi_local(m)? };
        let radial = chern_number_radial(&f)?;
        r.below(&format!("radial_dev_m{m:.4}"), (radial.integral - 1.0).abs(), 1e-6);
        let plaq = chern_number_plaquette(&f, cfg.plaquette_grid, 20.0, f.k_scale())?;
        r.below(&format!("plaquette_dev_m{m:.4}"), (plaq.value - 1.0).abs(), 1e-3);
    }
    Ok(())
}

fn flow_invariance(r: &mut CriterionResult) -> Result<()> {
    let p = ModelParams::quasi_local(3.0 / 16.0)?;
    let devs: Vec<Result<f64>> = [-1.0, -2.0, -3.0, -4.0]
        .par_iter()
        .map(|&u| Ok((chern_number_radial(&AnalyticFamily { scale: FlowScale::at(u), params: p })?.integral - 1.0).abs()))
        .collect();
    let mut worst: f64 = 0.0;
    for d in devs {
        worst = worst.max(d?);
    }
    r.below("max_dev_u_-1_to_-4", worst, 1e-4);
    let ir = chern_number_radial(&InfraredFamily)?;
    r.below("infrared_chern", ir.integral.abs().max(ir.endpoint.abs()), 1e-9);
    Ok(())
}

fn flow_integration(r: &mut CriterionResult, cfg: &AcceptanceConfig) -> Result<()> {
    let p = ModelParams::quasi_local(3.0 / 16.0)?;
    let momenta = FlowStateGrid::radial_momenta(cfg.flow_points, 0.01, 10.0, 0.4);
    let start = FlowStateGrid::analytic(FlowScale::at(-5.0), &momenta, p);
    let out = integrate_flow(&start, FlowScale::UV, p, &FlowConfig::default())?;
    let worst = out.grid.points.iter()
        .map(|pt| fidelity(&analytic_state(FlowScale::UV, pt.k, p), &pt.state))
        .fold(1.0, f64::min);
    r.below("infidelity", 1.0 - worst, 1e-8);
    r.below("norm_drift", out.max_norm_drift, 1e-9);
    Ok(())
}

fn boundary_identity(r: &mut CriterionResult) -> Result<()> {
    let p = ModelParams::quasi_local(3.0 / 16.0)?;
    let worst = log_grid(200, 0.01, 10.0).iter().map(|&k| boundary_identity_residual(k, p).abs()).fold(0.0, f64::max);
    r.below("max_residual", worst, 1e-8);
    Ok(())
}

fn angle_endpoints(r: &mut CriterionResult) -> Result<()> {
    let p = ModelParams::quasi_local(3.0 / 16.0)?;
    r.below("phi0_dev", (phi(0.0, p)? - FRAC_PI_2).abs(), 1e-8);
    let mut worst: f64 = 0.0;
    for k in log_grid(200, 0.01, 10.0) {
        let a = phi(k, p)?;
        let g = ground_spinor(Momentum::new(k, 0.0), p);
        worst = worst.max((a.sin() - g.p.re).abs()).max((a.cos() - g.q.norm()).abs());
    }
    r.below("max_arc_dev", worst, 1e-8);
    Ok(())
}

fn partial_fractions(r: &mut CriterionResult) -> Result<()> {
    let mut worst: f64 = 0.0;
    let mut printed: f64 = 0.0;
    for m in MASSES {
        let p = ModelParams::quasi_local(m)?;
        let (lp, lm) = crate::flow::lambda_roots(p).real()?;
        let (a, b) = printed_residues(p)?;
        for k in log_grid(500, 1e-3, 50.0) {
            let h = disentangler_profile(k, p);
            worst = worst.max(((partial_fraction_profile(k, p)? - h) / h).abs());
            let alt = a * k / (k * k - lp) + b * k / (k * k - lm);
            printed = printed.max(((alt - h) / h).abs());
        }
    }
    r.below("max_rel_dev", worst, 1e-12);
    r.metric("printed_coefficients_rel_dev", printed);
    r.notes.push("residues (1 -/+ sqrt(1-4m))/4; the printed coefficient pair does not satisfy the identity".into());
    Ok(())
}

fn kernel_decay(r: &mut CriterionResult) -> Result<()> {
    let p = ModelParams::quasi_local(3.0 / 16.0)?;
    let us = [0.0, -0.5, -1.0];
    let mut xi0 = f64::NAN;
    let mut hankel: f64 = 0.0;
    for (i, &u) in us.iter().enumerate() {
        let s = FlowScale::at(u);
        let scale = (-u).exp();
        let radii: Vec<f64> = (0..=20).map(|j| (20.0 + j as f64) * scale).collect();
        let prof = real_space_kernel(s, p, &radii)?;
        let fit = fit_decay_length(&prof, (20.0 * scale, 40.0 * scale))?;
        let adj = adjudicate_decay_length(s, p, &fit)?;
        r.metric(format!("xi_u{u}"), fit.xi);
        r.metric(format!("candidate_sqrt_u{u}"), adj.candidate_sqrt);
        r.metric(format!("candidate_inverse_sqrt_u{u}"), adj.candidate_inverse_sqrt);
        r.notes.push(format!(
            "u={u}: fitted xi={:.6}, e^-u*max sqrt(-lambda)={:.6} (rel err {:.3e}), e^-u/min sqrt(-lambda)={:.6} (rel err {:.3e}); fit supports {}",
            fit.xi, adj.candidate_sqrt, adj.relative_error_sqrt, adj.candidate_inverse_sqrt,
            adj.relative_error_inverse_sqrt, adj.supported
        ));
        if i == 0 {
            xi0 = fit.xi;
        } else {
            r.below(&format!("scaling_dev_u{u}"), (fit.xi / (xi0 * scale) - 1.0).abs(), 0.02);
        }
        let near: Vec<f64> = (0..=39).map(|j| 1.0 + j as f64).collect();
        let numeric = real_space_kernel(s, p, &near)?;
        for (&rr, &g) in near.iter().zip(&numeric.values) {
            let exact = kernel_closed_form(s, p, rr)?;
            hankel = hankel.max(((g - exact) / exact).abs());
        }
    }
    r.below("hankel_vs_bessel_rel_dev", hankel, 1e-6);
    Ok(())
}

fn synthetic_rule(r: &mut CriterionResult, cfg: &AcceptanceConfig) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut forbidden, mut allowed): (f64, f64) = (0.0, 0.0);
    for _ in 0..cfg.draws {
        let chi = C64::from_polar(rng.gen_range(0.01..0.2), rng.gen_range(-3.0..3.0));
        let p = ToyParams {
            omega1: rng.gen_range(50.0..100.0),
            omega2: rng.gen_range(10.0..40.0),
            rabi: rng.gen_range(1.0..5.0),
            chi1: chi,
            chi2: -chi,
            delta: rng.gen_range(-0.5..0.5),
            min_separation_ratio: 20.0,
        };
        let rule = synthetic_rule_check(&p);
        let want = chi * 2f64.sqrt();
        forbidden = forbidden.max(rule.coupling_to_d1.norm());
        allowed = allowed.max((rule.coupling_to_d2 - want).norm());
    }
    r.below("forbidden_coupling", forbidden, 1e-12);
    r.below("allowed_coupling_dev", allowed, 1e-12);
    Ok(())
}

/// Largest deviation of every exactly reproducible display from its numerical
/// construction over random valid draws.
pub fn structure_defects(seed: u64, draws: usize) -> Result<BTreeMap<String, f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: BTreeMap<String, f64> = BTreeMap::new();
    let mut record = |key: &str, v: f64| {
        let e = out.entry(key.to_string()).or_insert(0.0);
        *e = e.max(v);
    };
    for _ in 0..draws {
        let s = random_bare_scheme(&mut rng);
        let k = random_momentum(&mut rng);
        let t = rng.gen_range(0.0..10.0);
        let numeric = dressed_hamiltonian(k, &s, t)?;
        record("dressed", max_abs(&(&numeric - dressed_display(k, &s, t))));
        let forbidden = [(0, 3), (0, 4), (1, 2), (1, 4)].iter().map(|&(i, j)| numeric[(i, j)].norm()).fold(0.0, f64::max);
        record("dressed_forbidden_entries", forbidden);
        let four = drop_third_dressed(&numeric, false, 0.0) - four_level_display(k, &s, t, PhaseExpansion::Exact);
        record("four_level", max_abs(&four));

        let set = random_laser_set(&mut rng);
        let kw = random_window_momentum(&mut rng);
        let tw = rng.gen_range(0.0..5.0);
        let rot = rotating_frame_numeric(kw, &set, tw, false)? - rotating_frame_display(kw, &set);
        record("rotating_frame_rel", max_abs(&rot) / (1.0 + set.delta1));
        let want = second_order_display(kw, &set);
        let elim = adiabatic_eliminate(&truncated_display(kw, &set), &[0, 1], 0.0, 10.0)?.matrix;
        record("second_order_rel", max_abs(&(elim - &want)) / max_abs(&want));
        let other = random_laser_set(&mut rng);
        let sum: CMat = simplified_display(kw, &set) + simplified_display(kw, &other);
        let mut off = sum.clone();
        off[(0, 0)] = C64::new(0.0, 0.0);
        off[(1, 1)] = C64::new(0.0, 0.0);
        record("combined_rel", max_abs(&(combined_display(kw, &[set, other]) - off)) / max_abs(&sum));
    }
    Ok(out)
}

/// Laser mapping used by the pipeline criterion and the `scheme` command.
pub fn reference_mapping(u: f64) -> Result<LaserMapping> {
    let p = ModelParams::quasi_local(3.0 / 16.0)?;
    map_lasers_to_disentangler(p, FlowScale::at(u), 1.0, 0.3, 100.0, &MapperOptions::default())
}

fn five_level_pipeline(r: &mut CriterionResult, cfg: &AcceptanceConfig) -> Result<()> {
    for (key, v) in structure_defects(cfg.seed, cfg.draws)? {
        r.below(&format!("structure_{key}"), v, 1e-12);
    }
    let p = ModelParams::quasi_local(3.0 / 16.0)?;
    let window: Vec<Momentum> = log_grid(40, 0.05, 1.0).iter().enumerate().map(|(i, &k)| Momentum::polar(k, 0.3 * i as f64)).collect();
    for u in [0.0, -0.5] {
        let m = reference_mapping(u)?;
        let err = m.reproduction_error(p, &window, CouplingRoute::Exact)?;
        r.below(&format!("mapping_rel_err_u{u}"), err, 0.05);
        let worst = m.report.entries.iter().filter_map(|e| e.margin).fold(f64::INFINITY, f64::min);
        r.metric(format!("mapping_min_margin_u{u}"), worst);
        if !(worst >= 10.0) || !m.report.all_pass() {
            r.fail(format!("assumption margin below 10 at u={u}"));
        }
    }
    let base = reference_mapping(0.0)?.unprimed;
    let sweep = epsilon_sweep(&base, Momentum::polar(0.5, 0.3), &cfg.sweep_scales, &OracleOptions::default())?;
    r.metric("oracle_slope", sweep.fit.slope);
    r.metric("oracle_constant", sweep.constant);
    if (sweep.fit.slope - 2.0).abs() > 0.3 {
        r.fail(format!("infidelity slope {:.3} outside 2.0 +/- 0.3", sweep.fit.slope));
    }
    Ok(())
}

fn lattice_addressing(r: &mut CriterionResult, cfg: &AcceptanceConfig) -> Result<()> {
    let mut worst: f64 = 0.0;
    for n in 2..=8 {
        worst = worst.max(selection_rule_defect(&LatticeSpec::new(n)?));
    }
    r.below("overlap_defect", worst, 1e-10);
    let p = ModelParams::quasi_local(3.0 / 16.0)?;
    let report = preparation_round_trip(&LatticeSpec::new(cfg.lattice_n)?, cfg.preparation_u0, p, DEFAULT_THRESHOLD, &FlowConfig::default())?;
    r.metric("addressed_points", report.addressed as f64);
    r.below("round_trip_infidelity", 1.0 - report.worst_addressed_fidelity, 1e-4);
    Ok(())
}
