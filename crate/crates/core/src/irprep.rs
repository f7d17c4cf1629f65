//! Finite-lattice momentum addressing and pulse preparation of the near-IR state.
//!
//! The atoms live on an `(N+2) × (N+2)` square lattice whose wavefunctions
//! vanish on the outer ring. A bus level with a standing-wave profile and a
//! light field shaped as its inverse produce an exact Kronecker selection rule
//! between grid momenta, so each momentum point can be driven on its own.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{ Deserialize, Serialize };

use crate::error::{ Error, Result };
use crate::flow::{ analytic_state, fidelity, integrate_flow, FlowConfig, FlowScale, FlowStateGrid, GridPoint };
use crate::model::{ ground_spinor, ModelParams, Momentum, Spinor };

/// Residual bus population tolerated after a pulse pair.
pub const BUS_TOLERANCE: f64 = 1e-12;

/// Default amplitude threshold for addressing a momentum point.
pub const DEFAULT_THRESHOLD: f64 = 1e-3;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSpec {
    /// Active sites per side.
    pub n: usize,
}

/// Lattice site `(x₁, x₂)` on the full lattice `0 ..= N+1`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Site {
    pub x1: i64,
    pub x2: i64,
}

/// Grid momentum `2π(n₁, n₂)/N` with `n ∈ (−N/2, N/2]`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridMomentum {
    pub n1: i64,
    pub n2: i64,
}

impl LatticeSpec {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("n", format!("need at least 2 active sites per side, got {n}")));
        }
        Ok(Self { n })
    }

    fn side(&self) -> i64 {
        self.n as i64
    }

    pub fn active_sites(&self) -> impl Iterator<Item = Site> + '_ {
        let n = self.side();
        (1..=n).flat_map(move |x1| (1..=n).map(move |x2| Site { x1, x2 }))
    }

    pub fn is_active(&self, x: Site) -> bool {
        let n = self.side();
        (1..=n).contains(&x.x1) && (1..=n).contains(&x.x2)
    }

    pub fn index_range(&self) -> std::ops::RangeInclusive<i64> {
        let n = self.side();
        (n.div_euclid(2) - n + 1)..=n.div_euclid(2)
    }

    /// All `N²` grid momenta, ordered by `(n₁, n₂)`.
    pub fn grid(&self) -> Vec<GridMomentum> {
        let r = self.index_range();
        r.clone().flat_map(|n1| r.clone().map(move |n2| GridMomentum { n1, n2 })).collect()
    }

    pub fn contains(&self, k: GridMomentum) -> bool {
        let r = self.index_range();
        r.contains(&k.n1) && r.contains(&k.n2)
    }

    pub fn momentum(&self, k: GridMomentum) -> Momentum {
        let s = 2.0 * PI / self.n as f64;
        Momentum::new(s * k.n1 as f64, s * k.n2 as f64)
    }

    fn phase(&self, k: GridMomentum, x: Site) -> f64 {
        2.0 * PI * ((k.n1 * x.x1 + k.n2 * x.x2).rem_euclid(self.side())) as f64 / self.n as f64
    }

    fn standing_wave(&self, x: Site) -> f64 {
        let d = (self.n + 1) as f64;
        (PI * x.x1 as f64 / d).sin() * (PI * x.x2 as f64 / d).sin()
    }
}

/// Plane wave `e^{ik·x}` of the first ground state.
pub fn ground_wave(x: Site, k: GridMomentum, spec: &LatticeSpec) -> C64 {
    C64::from_polar(1.0, spec.phase(k, x))
}

/// Lowest standing wave of the bus level; zero on the boundary ring.
pub fn bus_wave(x: Site, spec: &LatticeSpec) -> f64 {
    if spec.is_active(x) { spec.standing_wave(x) } else { 0.0 }
}

/// Light field `e^{−iq·x} / (sin(πx₁/(N+1)) sin(πx₂/(N+1)))`.
pub fn light_field(x: Site, q: GridMomentum, spec: &LatticeSpec) -> Result<C64> {
    if !spec.is_active(x) {
        return Err(Error::Domain { x1: x.x1, x2: x.x2, reason: "the bus profile vanishes here".into() });
    }
    Ok(C64::from_polar(1.0 / spec.standing_wave(x), -spec.phase(q, x)))
}

/// `Σ_x ψ_e(x) E_q(x) ψ_{g₁,k}(x)` over the active region.
pub fn coupling_overlap(k: GridMomentum, q: GridMomentum, spec: &LatticeSpec) -> C64 {
    spec.active_sites()
        .map(|x| ground_wave(x, k, spec) * bus_wave(x, spec) * light_field(x, q, spec).expect("active site"))
        .sum()
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Leg {
    /// `g₁ → e`
    GroundToBus,
    /// `e → g₂`
    BusToGround,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub k: GridMomentum,
    pub leg: Leg,
    pub area: f64,
    pub phase: f64,
}

/// Ordered pulse sequence; the pulses come in `(g₁ → e, e → g₂)` pairs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PulsePlan {
    pub pulses: Vec<Pulse>,
    /// Global phase left on each addressed point (`target = e^{iγ} · prepared`).
    pub global_phases: Vec<(GridMomentum, f64)>,
}

impl PulsePlan {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self, spec: &LatticeSpec) -> Result<()> {
        if !self.pulses.len().is_multiple_of(2) {
            return Err(Error::invalid("pulses", "pulses must come in pairs"));
        }
        for (i, pair) in self.pulses.chunks(2).enumerate() {
            let ok = pair[0].leg == Leg::GroundToBus && pair[1].leg == Leg::BusToGround && pair[0].k == pair[1].k;
            if !ok {
                return Err(Error::invalid("pulses", format!("pair {i} is not a (g1->e, e->g2) pair at one momentum")));
            }
            if !spec.contains(pair[0].k) {
                return Err(Error::invalid("pulses", format!("pair {i} addresses a momentum off the grid")));
            }
        }
        Ok(())
    }
}

/// Plans one pulse pair per target. The target spinor carries the `g₁`
/// amplitude in `p` and the `g₂` amplitude in `q`.
///
/// The first leg leaves `|p|` on `g₁`; the second, a full swap, moves the rest
/// to `g₂` with its phase set so that the prepared state equals the target up
/// to the global phase `arg p`.
pub fn pulse_plan(targets: &[(GridMomentum, Spinor)]) -> Result<PulsePlan> {
    let mut plan = PulsePlan::default();
    for &(k, t) in targets {
        let norm = t.norm_sqr();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::UnreachableTarget { norm });
        }
        let a1 = 2.0 * t.p.norm().min(1.0).acos();
        let gamma = if t.p.norm() > 0.0 { t.p.arg() } else { 0.0 };
        let (a2, phi2) = if t.q.norm() > 0.0 { (PI, t.q.arg() - gamma + PI) } else { (0.0, 0.0) };
        plan.pulses.push(Pulse { k, leg: Leg::GroundToBus, area: a1, phase: 0.0 });
        plan.pulses.push(Pulse { k, leg: Leg::BusToGround, area: a2, phase: phi2 });
        plan.global_phases.push((k, gamma));
    }
    Ok(plan)
}

/// Resonant rotation on a `(from, to)` pair: `[[c, −ie^{−iϕ}s], [−ie^{iϕ}s, c]]` with half the area.
fn rotate(from: C64, to: C64, area: f64, phase: f64) -> (C64, C64) {
    let (s, c) = (0.5 * area).sin_cos();
    let m = C64::new(0.0, -s);
    (from * c + m * C64::from_polar(1.0, -phase) * to, m * C64::from_polar(1.0, phase) * from + to * c)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PreparedGrid {
    /// Spinor per grid momentum (`p` on `g₁`, `q` on `g₂`) in grid order.
    pub points: Vec<(GridMomentum, Spinor)>,
    pub max_bus_population: f64,
}

impl PreparedGrid {
    pub fn get(&self, k: GridMomentum) -> Option<Spinor> {
        self.points.iter().find(|(q, _)| *q == k).map(|(_, s)| *s)
    }
}

/// Applies the plan to the lattice, starting with every momentum in `g₁`.
pub fn simulate_pulses(plan: &PulsePlan, spec: &LatticeSpec) -> Result<PreparedGrid> {
    plan.validate(spec)?;
    let grid = spec.grid();
    let mut amps: Vec<[C64; 3]> = vec![[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]; grid.len()];
    let index = |k: GridMomentum| grid.binary_search(&k).expect("validated grid momentum");
    let mut worst: f64 = 0.0;
    for pair in plan.pulses.chunks(2) {
        let i = index(pair[0].k);
        let a = &mut amps[i];
        (a[0], a[1]) = rotate(a[0], a[1], pair[0].area, pair[0].phase);
        (a[1], a[2]) = rotate(a[1], a[2], pair[1].area, pair[1].phase);
        let pop = a[1].norm_sqr();
        worst = worst.max(pop);
        if pop > BUS_TOLERANCE {
            return Err(Error::BusPopulation { population: pop, index: i });
        }
        a[1] = C64::new(0.0, 0.0);
    }
    let points = grid.into_iter().zip(amps).map(|(k, a)| (k, Spinor::new(a[0], a[2]))).collect();
    Ok(PreparedGrid { points, max_bus_population: worst })
}

/// Pulse-basis target of a flow spinor: `g₁` carries the lower band component `−Q`, `g₂` carries `P`.
pub fn pulse_target(s: &Spinor) -> Spinor {
    Spinor::new(-s.q, s.p)
}

pub fn from_pulse_basis(s: &Spinor) -> Spinor {
    Spinor::new(s.q, -s.p)
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct PreparationPoint {
    pub k: GridMomentum,
    pub addressed: bool,
    /// Fidelity of the prepared state with the analytic state at `u₀`.
    pub prepared_fidelity: f64,
    /// Fidelity of the flowed state at `u = 0` with the ground state.
    pub final_fidelity: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PreparationReport {
    pub n: usize,
    pub u0: f64,
    pub threshold: f64,
    pub addressed: usize,
    pub points: Vec<PreparationPoint>,
    /// Worst final fidelity over addressed points.
    pub worst_addressed_fidelity: f64,
    pub plan: PulsePlan,
    pub prepared: FlowStateGrid,
    pub evolved: FlowStateGrid,
}

/// Prepares `analytic_state(u₀, ·)` on the grid points whose transferred
/// amplitude exceeds `threshold`, flows the prepared grid to `u = 0` and
/// compares it with the ground state.
pub fn preparation_round_trip(spec: &LatticeSpec, u0: f64, p: ModelParams, threshold: f64, cfg: &FlowConfig)
    -> Result<PreparationReport>
{
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::invalid("threshold", "must lie in (0, 1)"));
    }
    let s0 = FlowScale::new(u0, cfg.u_min)?;
    let grid = spec.grid();
    let targets: Vec<(GridMomentum, Spinor)> = grid
        .iter()
        .map(|&k| (k, pulse_target(&analytic_state(s0, spec.momentum(k), p))))
        .filter(|(_, t)| t.q.norm() > threshold)
        .collect();
    let plan = pulse_plan(&targets)?;
    let prepared = simulate_pulses(&plan, spec)?;
    let flow_grid = FlowStateGrid {
        scale: s0,
        points: prepared.points.iter().map(|(k, s)| GridPoint { k: spec.momentum(*k), state: from_pulse_basis(s) }).collect(),
    };
    let evolved = integrate_flow(&flow_grid, FlowScale::at(0.0), p, cfg)?.grid;
    let points: Vec<PreparationPoint> = grid
        .par_iter()
        .zip(flow_grid.points.par_iter().zip(evolved.points.par_iter()))
        .map(|(&k, (start, end))| {
            let kk = spec.momentum(k);
            PreparationPoint {
                k,
                addressed: targets.iter().any(|(q, _)| *q == k),
                prepared_fidelity: fidelity(&analytic_state(s0, kk, p), &start.state),
                final_fidelity: fidelity(&ground_spinor(kk, p), &end.state),
            }
        })
        .collect();
    let worst = points.iter().filter(|pt| pt.addressed).map(|pt| pt.final_fidelity).fold(1.0, f64::min);
    Ok(PreparationReport {
        n: spec.n,
        u0,
        threshold,
        addressed: targets.len(),
        points,
        worst_addressed_fidelity: worst,
        plan,
        prepared: flow_grid,
        evolved,
    })
}

/// Largest `|overlap − N²δ_{kq}| / N²` over all grid pairs.
pub fn selection_rule_defect(spec: &LatticeSpec) -> f64 {
    let grid = spec.grid();
    let n2 = (spec.n * spec.n) as f64;
    grid.par_iter()
        .map(|&k| {
            grid.iter()
                .map(|&q| {
                    let expected = if k == q { n2 } else { 0.0 };
                    (coupling_overlap(k, q, spec) - expected).norm() / n2
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{ Rng, SeedableRng };
    use rand_chacha::ChaCha8Rng;

    fn gm(n1: i64, n2: i64) -> GridMomentum {
        GridMomentum { n1, n2 }
    }

    fn site(x1: i64, x2: i64) -> Site {
        Site { x1, x2 }
    }

    #[test]
    fn grid_indices() {
        assert_eq!(LatticeSpec::new(4).unwrap().index_range(), -1..=2);
        assert_eq!(LatticeSpec::new(5).unwrap().index_range(), -2..=2);
        assert_eq!(LatticeSpec::new(4).unwrap().grid().len(), 16);
        assert!(LatticeSpec::new(1).is_err());
    }

    #[test]
    fn wave_examples() {
        let spec = LatticeSpec::new(4).unwrap();
        assert!((ground_wave(site(2, 3), gm(1, 0), &spec) - C64::new(-1.0, 0.0)).norm() < 1e-15);
        assert_eq!(ground_wave(site(3, 1), gm(0, 0), &spec), C64::new(1.0, 0.0));
        let expected = (PI / 5.0).sin() * (2.0 * PI / 5.0).sin();
        assert!((bus_wave(site(1, 2), &spec) - expected).abs() < 1e-15);
        assert_eq!(bus_wave(site(0, 2), &spec), 0.0);
        assert_eq!(bus_wave(site(5, 5), &spec), 0.0);
        let odd = LatticeSpec::new(5).unwrap();
        assert!((bus_wave(site(3, 3), &odd) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn light_field_examples() {
        let spec = LatticeSpec::new(4).unwrap();
        let e = light_field(site(1, 1), gm(1, 1), &spec).unwrap();
        let expected = C64::from_polar(1.0 / (PI / 5.0).sin().powi(2), -PI);
        assert!((e - expected).norm() < 1e-14);
        assert!(matches!(light_field(site(0, 1), gm(0, 0), &spec), Err(Error::Domain { .. })));
        let odd = LatticeSpec::new(5).unwrap();
        assert!((light_field(site(3, 3), gm(0, 0), &odd).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-15);
        for q in spec.grid() {
            let v = light_field(site(2, 3), q, &spec).unwrap();
            assert!((v.norm() - 1.0 / bus_wave(site(2, 3), &spec)).abs() < 1e-13);
        }
    }

    #[test]
    fn explicit_sixteen_term_sum() {
        let spec = LatticeSpec::new(4).unwrap();
        assert!(coupling_overlap(gm(1, 0), gm(0, 0), &spec).norm() < 1e-13);
        assert!((coupling_overlap(gm(2, -1), gm(2, -1), &spec) - C64::new(16.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn kronecker_selection_rule() {
        for n in 2..=8 {
            assert!(selection_rule_defect(&LatticeSpec::new(n).unwrap()) < 1e-10, "N = {n}");
        }
    }

    #[test]
    fn trivial_plans() {
        let spec = LatticeSpec::new(4).unwrap();
        let empty = simulate_pulses(&PulsePlan::default(), &spec).unwrap();
        assert!(empty.points.iter().all(|(_, s)| *s == Spinor::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0))));

        let plan = pulse_plan(&[(gm(1, 0), Spinor::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0)))]).unwrap();
        assert_eq!(plan.pulses.len(), 2);
        assert_eq!((plan.pulses[0].area, plan.pulses[1].area), (0.0, 0.0));

        let theta = 0.7;
        let target = Spinor::new(C64::new(0.0, 0.0), C64::from_polar(1.0, -theta));
        let plan = pulse_plan(&[(gm(1, 1), target)]).unwrap();
        assert!((plan.pulses[0].area - PI).abs() < 1e-15 && (plan.pulses[1].area - PI).abs() < 1e-15);
        let out = simulate_pulses(&plan, &spec).unwrap().get(gm(1, 1)).unwrap();
        assert!(out.p.norm() < 1e-15 && (fidelity(&out, &target) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unreachable_target() {
        let bad = Spinor::new(C64::new(1.0, 0.0), C64::new(0.5, 0.0));
        assert!(matches!(pulse_plan(&[(gm(0, 0), bad)]), Err(Error::UnreachableTarget { .. })));
    }

    #[test]
    fn random_round_trip_and_isolation() {
        let spec = LatticeSpec::new(6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let grid = spec.grid();
        let mut targets = Vec::new();
        for &k in grid.iter().step_by(3) {
            let a = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let b = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            targets.push((k, Spinor::new(a, b).normalized()));
        }
        let out = simulate_pulses(&pulse_plan(&targets).unwrap(), &spec).unwrap();
        for (k, t) in &targets {
            assert!(fidelity(&out.get(*k).unwrap(), t) >= 1.0 - 1e-12);
        }
        let one = pulse_plan(&targets[..1]).unwrap();
        let single = simulate_pulses(&one, &spec).unwrap();
        for (k, s) in &single.points {
            if *k != targets[0].0 {
                assert_eq!(*s, Spinor::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0)));
            }
        }
    }

    #[test]
    fn near_ir_targets_on_inner_points() {
        let spec = LatticeSpec::new(32).unwrap();
        let p = ModelParams::quasi_local(3.0 / 16.0).unwrap();
        let s = FlowScale::at(-4.0);
        let inner = [gm(0, 0), gm(1, 0), gm(0, 1), gm(1, 1)];
        let targets: Vec<_> =
            inner.iter().map(|&k| (k, pulse_target(&analytic_state(s, spec.momentum(k), p)))).collect();
        let out = simulate_pulses(&pulse_plan(&targets).unwrap(), &spec).unwrap();
        for (k, t) in &targets {
            let back = from_pulse_basis(&out.get(*k).unwrap());
            assert!(fidelity(&back, &analytic_state(s, spec.momentum(*k), p)) >= 1.0 - 1e-10);
            assert!(fidelity(&out.get(*k).unwrap(), t) >= 1.0 - 1e-10);
        }
    }

    #[test]
    fn preparation_survives_the_flow() {
        let spec = LatticeSpec::new(16).unwrap();
        let p = ModelParams::quasi_local(3.0 / 16.0).unwrap();
        let r = preparation_round_trip(&spec, -4.0, p, DEFAULT_THRESHOLD, &FlowConfig::default()).unwrap();
        assert!(r.addressed > 0);
        assert!(r.worst_addressed_fidelity >= 1.0 - 1e-4, "{}", r.worst_addressed_fidelity);
    }
}
