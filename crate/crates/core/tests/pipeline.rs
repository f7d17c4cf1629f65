//! End-to-end checks that chain several modules through the public API.

use cmera::flow::{ analytic_state, fidelity, integrate_flow, FlowConfig, FlowScale, FlowStateGrid };
use cmera::irprep::{ pulse_plan, pulse_target, simulate_pulses, from_pulse_basis, LatticeSpec };
use cmera::kernel::{ kernel_closed_form, real_space_kernel };
use cmera::model::ModelParams;
use cmera::numerics::ode::Stepper;
use cmera::scheme::mapping::{ map_lasers_to_disentangler, CouplingRoute, MapperOptions };
use cmera::scheme::oracle::{ evolve_full_vs_effective, OracleOptions };
use cmera::topology::{ chern_number_radial, AnalyticFamily };

fn params() -> ModelParams {
    ModelParams::new(3.0 / 16.0).unwrap()
}

#[test]
fn integrated_states_keep_unit_chern_number() {
    let p = params();
    let momenta = FlowStateGrid::radial_momenta(24, 0.02, 5.0, 0.7);
    let start = FlowStateGrid::analytic(FlowScale::at(-3.0), &momenta, p);
    let cfg = FlowConfig { stepper: Stepper::Rk4 { step: 1e-3 }, ..FlowConfig::default() };
    let out = integrate_flow(&start, FlowScale::at(-1.0), p, &cfg).unwrap();
    for pt in &out.grid.points {
        let f = fidelity(&analytic_state(FlowScale::at(-1.0), pt.k, p), &pt.state);
        assert!(1.0 - f < 1e-9, "{f}");
    }
    let c = chern_number_radial(&AnalyticFamily { scale: FlowScale::at(-1.0), params: p }).unwrap();
    assert!((c.integral - 1.0).abs() < 1e-4);
}

#[test]
fn kernel_quadrature_tracks_closed_form_at_several_scales() {
    let p = params();
    for u in [0.0, -0.7] {
        let s = FlowScale::at(u);
        let radii = [0.5, 2.0, 8.0];
        let prof = real_space_kernel(s, p, &radii).unwrap();
        for (&r, &g) in radii.iter().zip(&prof.values) {
            let exact = kernel_closed_form(s, p, r).unwrap();
            assert!(((g - exact) / exact).abs() < 1e-6, "u={u} r={r}");
        }
    }
}

#[test]
fn mapped_lasers_drive_the_full_model_like_the_flow() {
    let p = params();
    let m = map_lasers_to_disentangler(p, FlowScale::UV, 1.0, 0.3, 100.0, &MapperOptions::default()).unwrap();
    let k = cmera::model::Momentum::polar(0.4, 1.1);
    let exact = m.coupling(k, CouplingRoute::Exact).unwrap();
    assert!((exact - m.target(k, p)).norm() / m.target(k, p).norm() < 0.05);
    let r = evolve_full_vs_effective(k, &[m.unprimed], None, &OracleOptions::default()).unwrap();
    assert!(r.infidelity < 0.05, "{}", r.infidelity);
    assert!(r.norm_drift < 1e-7, "{r:?}");
}

#[test]
fn pulse_plan_prepares_flow_spinors_on_the_lattice() {
    let p = params();
    let spec = LatticeSpec::new(6).unwrap();
    let targets: Vec<_> = spec
        .grid()
        .into_iter()
        .map(|q| (q, pulse_target(&analytic_state(FlowScale::at(-2.0), spec.momentum(q), p))))
        .collect();
    let plan = pulse_plan(&targets).unwrap();
    plan.validate(&spec).unwrap();
    let prepared = simulate_pulses(&plan, &spec).unwrap();
    assert!(prepared.max_bus_population < 1e-12);
    for (q, target) in &targets {
        let got = from_pulse_basis(&prepared.get(*q).unwrap());
        let want = from_pulse_basis(target);
        assert!(1.0 - fidelity(&want, &got) < 1e-12);
    }
}
