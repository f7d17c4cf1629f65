//! One function per subcommand. Each computes its artifacts, writes them to
//! the output directory and returns the summary for `report.json`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::{ Path, PathBuf };

use cmera::acceptance::{ run_criterion, structure_defects, CriterionResult };
use cmera::error::Result;
use cmera::flow::{
    analytic_state, boundary_identity_residual, disentangler_profile, fidelity, integrate_flow,
    partial_fraction_profile, phi, FlowConfig, FlowScale, FlowStateGrid,
};
use cmera::irprep::{ preparation_round_trip, selection_rule_defect, LatticeSpec };
use cmera::kernel::{
    adjudicate_decay_length, fit_decay_length, kernel_closed_form, real_space_kernel, write_fit_summaries, FitSummary,
};
use cmera::model::{ ground_spinor, ModelParams, Momentum };
use cmera::numerics::ode::Stepper;
use cmera::scheme::mapping::{ map_lasers_to_disentangler, CouplingRoute };
use cmera::scheme::oracle::{ epsilon_sweep, OracleOptions };
use cmera::topology::{
    chern_number_plaquette, chern_number_radial, curvature_profile, write_chern_table, write_curvature_profile,
    AnalyticFamily, ChernRow, InfraredFamily, StateFamily,
};
use serde::Serialize;
use serde_json::{ json, Value };

use crate::config::RunConfig;

/// Collects written files and pass/fail checks for one run.
pub struct Run {
    dir: PathBuf,
    pub artifacts: Vec<String>,
    pub checks: Vec<Check>,
    pub summary: BTreeMap<String, Value>,
    pub criteria: Vec<CriterionResult>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

impl Run {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), artifacts: Vec::new(), checks: Vec::new(), summary: BTreeMap::new(), criteria: Vec::new() })
    }

    /// Writes a file produced by `fill` into the output directory.
    fn write<F: FnOnce(&mut Vec<u8>) -> Result<()>>(&mut self, name: &str, fill: F) -> Result<()> {
        let mut buf = Vec::new();
        fill(&mut buf)?;
        fs::write(self.dir.join(name), buf)?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
        self.write(name, |buf| {
            let mut w = csv::Writer::from_writer(buf);
            w.write_record(header)?;
            for r in rows {
                w.write_record(r)?;
            }
            w.flush()?;
            Ok(())
        })
    }

    /// Requires `value < limit`.
    fn below(&mut self, name: &str, value: f64, limit: f64) {
        self.checks.push(Check { name: name.into(), value, limit, pass: value < limit });
    }

    fn note(&mut self, key: &str, value: impl Serialize) {
        self.summary.insert(key.into(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass) && self.criteria.iter().all(|c| c.pass)
    }

    pub fn criteria(&mut self, ids: &[u8], cfg: &RunConfig) {
        for &id in ids {
            let r = run_criterion(id, &cfg.acceptance);
            println!("{}", r.line());
            self.criteria.push(r);
        }
    }

    pub fn finish(&mut self, command: &str, cfg: &RunConfig) -> Result<()> {
        let report = json!({
            "command": command,
            "schema_version": cfg.schema_version,
            "scenario": cfg.scenario,
            "seed": cfg.seed,
            "pass": self.pass(),
            "checks": self.checks,
            "criteria": self.criteria,
            "summary": self.summary,
            "artifacts": self.artifacts,
            "config": cfg,
        });
        let text = serde_json::to_string_pretty(&report)? + "\n";
        fs::write(self.dir.join("report.json"), text)?;
        Ok(())
    }
}

fn f(v: f64) -> String {
    format!("{v:.17e}")
}

fn log_grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

fn lin_grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

pub fn flow(run: &mut Run, cfg: &RunConfig) -> Result<()> {
    let p = ModelParams::new(cfg.model.m)?;
    let fc = &cfg.flow;
    let momenta = FlowStateGrid::radial_momenta(fc.points, fc.k_min, fc.k_max, fc.theta);
    let start = FlowStateGrid::analytic(FlowScale::at(fc.u_start), &momenta, p);
    let flow_cfg = FlowConfig { stepper: Stepper::Rk4 { step: fc.step }, norm_tolerance: f64::INFINITY, ..FlowConfig::default() };
    let out = integrate_flow(&start, FlowScale::at(fc.u_end), p, &flow_cfg)?;
    run.write("flow_initial.csv", |b| start.write_csv(b))?;
    run.write("flow_final.csv", |b| out.grid.write_csv(b))?;

    let target = FlowScale::at(fc.u_end);
    let mut rows = Vec::new();
    let mut worst: f64 = 1.0;
    for pt in &out.grid.points {
        let fid = fidelity(&analytic_state(target, pt.k, p), &pt.state);
        worst = worst.min(fid);
        rows.push(vec![f(pt.k.kx), f(pt.k.ky), f(pt.k.k()), f(fid), f(1.0 - fid)]);
    }
    run.csv("flow_fidelity.csv", &["kx", "ky", "k", "fidelity", "infidelity"], rows)?;
    run.below("infidelity", 1.0 - worst, fc.fidelity_tolerance);
    run.below("norm_drift", out.max_norm_drift, fc.norm_tolerance);
    run.note("total_steps", out.total_steps);

    let mut rows = Vec::new();
    for k in log_grid(fc.points, fc.k_min, fc.k_max) {
        let g = ground_spinor(Momentum::new(k, 0.0), p);
        let pf = if p.quasi_local_regime { partial_fraction_profile(k, p)? } else { f64::NAN };
        rows.push(vec![
            f(k),
            f(disentangler_profile(k, p)),
            f(pf),
            f(boundary_identity_residual(k, p)),
            f(phi(k, p)?),
            f(g.p.re.asin()),
        ]);
    }
    run.csv("flow_identities.csv", &["k", "profile", "partial_fraction", "boundary_residual", "phi", "arcsin_u"], rows)
}

pub fn chern(run: &mut Run, cfg: &RunConfig) -> Result<()> {
    let p = ModelParams::new(cfg.model.m)?;
    let cc = &cfg.chern;
    let mut rows = Vec::new();
    for &u in &cc.u_values {
        let fam = AnalyticFamily { scale: FlowScale::at(u), params: p };
        let radial = chern_number_radial(&fam)?;
        let plaq = chern_number_plaquette(&fam, cc.plaquette_grid, cc.plaquette_extent * u.exp(), fam.k_scale())?;
        run.below(&format!("radial_dev_u{u}"), (radial.integral - 1.0).abs(), cc.radial_tolerance);
        run.below(&format!("plaquette_dev_u{u}"), (plaq.value - 1.0).abs(), cc.plaquette_tolerance);
        rows.push(ChernRow { u, radial: radial.endpoint, radial_integral: radial.integral, plaquette: plaq.value });
        let radii = log_grid(64, 1e-3 * fam.k_scale(), 100.0 * fam.k_scale());
        let samples = curvature_profile(&fam, &radii);
        run.write(&format!("curvature_u{u}.csv"), |b| write_chern_curvature(u, &samples, b))?;
    }
    run.write("chern_table.csv", |b| write_chern_table(&rows, b))?;
    let ir = chern_number_radial(&InfraredFamily)?;
    run.below("infrared_chern", ir.integral.abs().max(ir.endpoint.abs()), 1e-9);
    run.note("infrared_chern", ir.integral);
    Ok(())
}

fn write_chern_curvature(u: f64, samples: &[cmera::topology::CurvatureSample], b: &mut Vec<u8>) -> Result<()> {
    write_curvature_profile(u, samples, b)
}

pub fn kernel(run: &mut Run, cfg: &RunConfig) -> Result<()> {
    let p = ModelParams::quasi_local(cfg.model.m)?;
    let kc = &cfg.kernel;
    let mut fits = Vec::new();
    let mut adjudications = Vec::new();
    let mut compare = Vec::new();
    let mut worst: f64 = 0.0;
    let mut first: Option<(f64, f64)> = None;
    for &u in &kc.u_values {
        let s = FlowScale::at(u);
        let radii = lin_grid(kc.r_points, kc.r_min, kc.r_max);
        let prof = real_space_kernel(s, p, &radii)?;
        for (&r, &g) in radii.iter().zip(&prof.values) {
            let exact = kernel_closed_form(s, p, r)?;
            let dev = ((g - exact) / exact).abs();
            worst = worst.max(dev);
            compare.push(vec![format!("{u}"), f(r), f(g), f(exact), f(dev)]);
        }
        run.write(&format!("kernel_profile_u{u}.csv"), |b| prof.write_csv(b))?;

        let scale = (-u).exp();
        let window = (kc.fit_window[0] * scale, kc.fit_window[1] * scale);
        let fit_radii = lin_grid(kc.fit_points, window.0, window.1);
        let fit = fit_decay_length(&real_space_kernel(s, p, &fit_radii)?, window)?;
        let adj = adjudicate_decay_length(s, p, &fit)?;
        println!(
            "u = {u}: fitted xi = {:.6}; candidate e^-u*max sqrt(-lambda) = {:.6} (rel err {:.3e}); candidate e^-u/min sqrt(-lambda) = {:.6} (rel err {:.3e}); fit supports {}",
            fit.xi, adj.candidate_sqrt, adj.relative_error_sqrt, adj.candidate_inverse_sqrt, adj.relative_error_inverse_sqrt, adj.supported
        );
        match first {
            None => first = Some((u, fit.xi)),
            Some((u0, xi0)) => {
                let dev = (fit.xi / (xi0 * (u0 - u).exp()) - 1.0).abs();
                run.below(&format!("xi_scaling_dev_u{u}"), dev, kc.scaling_tolerance);
            }
        }
        fits.push(FitSummary { u, xi: fit.xi, r_squared: fit.r_squared });
        adjudications.push(adj);
    }
    run.below("hankel_vs_bessel_rel_dev", worst, kc.hankel_tolerance);
    run.csv("kernel_compare.csv", &["u", "r", "numeric", "closed_form", "rel_dev"], compare)?;
    run.write("kernel_fits.csv", |b| write_fit_summaries(&fits, b))?;
    run.note("adjudication", &adjudications);
    Ok(())
}

pub fn scheme(run: &mut Run, cfg: &RunConfig) -> Result<()> {
    let p = ModelParams::quasi_local(cfg.model.m)?;
    let sc = &cfg.scheme;
    let defects = structure_defects(cfg.seed, cfg.acceptance.draws)?;
    let rows = defects.iter().map(|(k, v)| vec![k.clone(), f(*v)]).collect();
    run.csv("structure_defects.csv", &["display", "max_defect"], rows)?;
    for (k, v) in &defects {
        run.below(&format!("structure_{k}"), *v, 1e-12);
    }

    let window: Vec<Momentum> = log_grid(40, 0.05, 1.0).iter().enumerate()
        .map(|(i, &k)| Momentum::polar(k, 0.3 * i as f64))
        .collect();
    let mut lasers = Vec::new();
    let mut sweep_base = None;
    for &u in &sc.u_values {
        let m = map_lasers_to_disentangler(p, FlowScale::at(u), sc.mass, sc.k_soc, sc.amplitude_budget, &sc.mapper)?;
        run.write(&format!("assumption_margins_u{u}.csv"), |b| m.report.write_csv(b))?;
        let worst = m.report.entries.iter().filter_map(|e| e.margin).fold(f64::INFINITY, f64::min);
        run.checks.push(Check {
            name: format!("min_assumption_margin_u{u}"),
            value: worst,
            limit: m.report.threshold,
            pass: m.report.all_pass(),
        });
        let mut rows = Vec::new();
        for &k in &window {
            let target = m.target(k, p);
            let simple = m.coupling(k, CouplingRoute::Simplified)?;
            let exact = m.coupling(k, CouplingRoute::Exact)?;
            rows.push(vec![
                f(k.k()), f(k.theta()), f(target.re), f(target.im), f(simple.re), f(simple.im), f(exact.re), f(exact.im),
                f((exact - target).norm() / target.norm()),
            ]);
        }
        run.csv(
            &format!("mapping_reproduction_u{u}.csv"),
            &["k", "theta", "target_re", "target_im", "simplified_re", "simplified_im", "exact_re", "exact_im", "rel_err"],
            rows,
        )?;
        let err = m.reproduction_error(p, &window, CouplingRoute::Exact)?;
        run.below(&format!("reproduction_rel_err_u{u}"), err, sc.reproduction_tolerance);
        for (name, s) in [("unprimed", m.unprimed), ("primed", m.primed)] {
            lasers.push(vec![
                format!("{u}"), name.into(), f(s.omega1.re), f(s.omega1.im), f(s.omega2.re), f(s.omega2.im),
                f(s.delta1), f(s.delta2), f(s.omega), f(s.phi), f(s.k_soc), f(s.mass), f(m.rate),
            ]);
        }
        sweep_base.get_or_insert(m.unprimed);
    }
    run.csv(
        "laser_sets.csv",
        &["u", "set", "omega1_re", "omega1_im", "omega2_re", "omega2_im", "delta1", "delta2", "omega", "phi", "k_soc", "mass", "rate"],
        lasers,
    )?;
    if let Some(base) = sweep_base {
        let sweep = epsilon_sweep(&base, Momentum::polar(sc.sweep_k, 0.3), &sc.sweep_scales, &OracleOptions::default())?;
        run.write("epsilon_sweep.csv", |b| sweep.write_csv(b))?;
        run.below("oracle_slope_dev", (sweep.fit.slope - 2.0).abs(), 0.3);
        run.note("oracle_slope", sweep.fit.slope);
        run.note("oracle_constant", sweep.constant);
    }
    Ok(())
}

pub fn irprep(run: &mut Run, cfg: &RunConfig) -> Result<()> {
    let p = ModelParams::quasi_local(cfg.model.m)?;
    let ic = &cfg.irprep;
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for n in 2..=ic.selection_n_max {
        let d = selection_rule_defect(&LatticeSpec::new(n)?);
        worst = worst.max(d);
        rows.push(vec![n.to_string(), f(d)]);
    }
    run.csv("selection_rule.csv", &["n", "max_rel_defect"], rows)?;
    run.below("overlap_defect", worst, 1e-10);

    let spec = LatticeSpec::new(ic.n)?;
    let flow_cfg = FlowConfig { norm_tolerance: f64::INFINITY, ..FlowConfig::default() };
    let report = preparation_round_trip(&spec, ic.u0, p, ic.threshold, &flow_cfg)?;
    run.write("pulse_plan.json", |b| {
        b.extend(report.plan.to_json()?.into_bytes());
        b.push(b'\n');
        Ok(())
    })?;
    run.write("prepared_grid.csv", |b| report.prepared.write_csv(b))?;
    run.write("evolved_grid.csv", |b| report.evolved.write_csv(b))?;
    let rows = report.points.iter()
        .map(|pt| vec![
            pt.k.n1.to_string(), pt.k.n2.to_string(), pt.addressed.to_string(), f(pt.prepared_fidelity), f(pt.final_fidelity),
        ])
        .collect();
    run.csv("preparation.csv", &["n1", "n2", "addressed", "prepared_fidelity", "final_fidelity"], rows)?;
    run.below("round_trip_infidelity", 1.0 - report.worst_addressed_fidelity, ic.fidelity_tolerance);
    run.note("addressed_points", report.addressed);
    run.note("grid_spacing", 2.0 * PI / ic.n as f64);
    Ok(())
}

pub fn repro(run: &mut Run) -> Result<()> {
    let rows = run.criteria.iter().map(|c| vec![c.id.to_string(), c.name.clone(), c.pass.to_string()]).collect();
    run.csv("acceptance.csv", &["id", "name", "pass"], rows)
}
