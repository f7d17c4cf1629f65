//! The seven validity conditions of the effective two-level description,
//! each expressed as a margin `(large side)/(small side)`.

use std::io::Write;

use serde::{ Deserialize, Serialize };

use crate::error::Result;
use crate::scheme::lasers::LaserSet;
use crate::scheme::reduction::{ dropped_terms, effective_coupling };
use crate::model::Momentum;

/// External bounds and the momentum window over which margins are evaluated.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssumptionBounds {
    /// Smallest hyperfine splitting among the states used.
    pub hyperfine_splitting: f64,
    pub lattice_constant: f64,
    pub threshold: f64,
    pub k_window: (f64, f64),
    pub k_samples: usize,
}

impl Default for AssumptionBounds {
    fn default() -> Self {
        Self { hyperfine_splitting: 1e5, lattice_constant: 0.01, threshold: 10.0, k_window: (0.05, 1.0), k_samples: 48 }
    }
}

impl AssumptionBounds {
    pub fn momenta(&self) -> Vec<f64> {
        let (a, b) = self.k_window;
        let n = self.k_samples.max(2);
        if a == b {
            return vec![a];
        }
        (0..n).map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssumptionMargin {
    pub index: u8,
    pub name: &'static str,
    /// `None` when the condition does not apply (e.g. crosstalk with one set).
    pub margin: Option<f64>,
    pub pass: bool,
    /// Which comparison sets the margin.
    pub binding: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub threshold: f64,
    pub entries: Vec<AssumptionMargin>,
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    /// Smallest applicable margin and its entry.
    pub fn worst(&self) -> Option<&AssumptionMargin> {
        self.entries
            .iter()
            .filter(|e| e.margin.is_some())
            .min_by(|a, b| a.margin.unwrap().total_cmp(&b.margin.unwrap()))
    }

    pub fn margin(&self, index: u8) -> Option<f64> {
        self.entries.iter().find(|e| e.index == index).and_then(|e| e.margin)
    }

    /// Largest perturbation ratio among the conditions internal to the model (3–7).
    pub fn epsilon(&self) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.index >= 3)
            .filter_map(|e| e.margin)
            .map(|m| 1.0 / m)
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "name", "margin", "pass", "binding"])?;
        for e in &self.entries {
            let margin = e.margin.map_or_else(|| "n/a".to_string(), |m| format!("{m:.6e}"));
            w.write_record([e.index.to_string(), e.name.to_string(), margin, e.pass.to_string(), e.binding.clone()])?;
        }
        w.flush()?;
        Ok(())
    }
}

struct Tracker {
    value: f64,
    binding: String,
}

impl Tracker {
    fn new() -> Self {
        Self { value: f64::INFINITY, binding: String::new() }
    }

    fn offer(&mut self, value: f64, binding: impl FnOnce() -> String) {
        if value < self.value {
            self.value = value;
            self.binding = binding();
        }
    }
}

fn label(i: usize) -> &'static str {
    if i == 0 { "" } else { "'" }
}

/// Evaluates all seven conditions for the given sets over the window.
pub fn assumption_report(sets: &[LaserSet], bounds: &AssumptionBounds) -> AssumptionReport {
    let ks = bounds.momenta();
    let k_max = ks.iter().cloned().fold(0.0, f64::max);
    let mut t = vec![];
    for _ in 0..7 {
        t.push(Tracker::new());
    }

    for (i, s) in sets.iter().enumerate() {
        let p = label(i);
        // 1. dressed-state splitting against hyperfine structure
        let e = crate::scheme::five_level::dressed_energies(0.0, s.omega, s.phi, s.k_soc, s.mass);
        let spread = e.iter().cloned().fold(f64::MIN, f64::max) - e.iter().cloned().fold(f64::MAX, f64::min);
        t[0].offer(bounds.hyperfine_splitting / spread, || format!("hyperfine / dressed spread{p}"));
        // 2. recoil within one Brillouin zone
        t[1].offer(1.0 / (s.k_soc * bounds.lattice_constant), || "1 / (k_SOC a)".into());
        // 3. perturbation ratios of the spin-orbit rotation
        let gap = s.delta1 - s.delta2;
        t[2].offer(gap / (s.alpha() * k_max), || format!("(D1{p}-D2{p}) / (alpha k)"));
        t[2].offer(s.mass * gap / (s.k_soc * s.k_soc), || format!("M (D1{p}-D2{p}) / k_SOC^2"));
        // 4. detuning hierarchy
        t[3].offer(s.delta1 / s.delta2, || format!("D1{p} / D2{p}"));
        t[3].offer(s.delta1 / s.kinetic(k_max), || format!("D1{p} / (k^2/2M)"));
        // 5. detunings against Rabi frequencies
        let rabi = s.omega1.norm().max(s.omega2.norm());
        t[4].offer(s.delta1.min(s.delta2) / rabi, || format!("min(D1{p},D2{p}) / max|Omega{p}|"));
        // 6. kept coupling against dropped second-order terms
        for &k in &ks {
            let keep = effective_coupling(Momentum::new(k, 0.0), s).value.norm();
            let d = dropped_terms(k, s);
            let worst = d.largest();
            t[5].offer(keep / worst, || {
                let which = if worst == d.g1_direct {
                    "|Omega1|^2/D1"
                } else if worst == d.g1_recoil {
                    "|Omega1|^2 eps^2/D2"
                } else if worst == d.g2_recoil {
                    "|Omega2|^2 eps^2/D1"
                } else {
                    "coupling shift"
                };
                format!("|J{p}| / {which}{p} at k = {k:.4}")
            });
        }
    }
    // 7. beat note between sets against both couplings
    for i in 0..sets.len() {
        for j in (i + 1)..sets.len() {
            let beat = (sets[i].delta2 - sets[j].delta2).abs();
            for &k in &ks {
                for (n, s) in [(i, &sets[i]), (j, &sets[j])] {
                    let c = effective_coupling(Momentum::new(k, 0.0), s).value.norm();
                    t[6].offer(beat / c, || format!("|D2-D2'| / |J{}| at k = {k:.4}", label(n)));
                }
            }
        }
    }

    const NAMES: [&str; 7] = [
        "hyperfine splitting dominates dressed splitting",
        "recoil stays within one Brillouin zone",
        "spin-orbit rotation is perturbative",
        "detuning hierarchy",
        "detunings dominate Rabi frequencies",
        "kept coupling dominates dropped terms",
        "beat note dominates couplings",
    ];
    let entries = t
        .into_iter()
        .enumerate()
        .map(|(i, tr)| {
            let margin = tr.value.is_finite().then_some(tr.value);
            AssumptionMargin {
                index: i as u8 + 1,
                name: NAMES[i],
                pass: margin.is_none_or(|m| m >= bounds.threshold),
                margin,
                binding: if margin.is_some() { tr.binding } else { "not applicable".into() },
            }
        })
        .collect();
    AssumptionReport { threshold: bounds.threshold, entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linalg::c;

    fn set() -> LaserSet {
        LaserSet::new(c(1e-5, 0.0), c(0.0, 2e-3), 30.0, 0.05, 20.0, 0.3, 1.0).unwrap()
    }

    #[test]
    fn equal_detunings_fail_hierarchy() {
        let mut s = set();
        s.delta2 = s.delta1;
        s.phi = 0.0;
        let r = assumption_report(&[s], &AssumptionBounds::default());
        assert_eq!(r.margin(4), Some(1.0));
        assert!(!r.entries[3].pass);
        assert!(!r.all_pass());
    }

    #[test]
    fn crosstalk_not_applicable_for_one_set() {
        let r = assumption_report(&[set()], &AssumptionBounds::default());
        assert_eq!(r.entries.len(), 7);
        assert!(r.margin(7).is_none());
        assert!(r.entries[6].pass);
    }

    #[test]
    fn detuning_margin_scales_linearly() {
        let s = set();
        let mut big = s;
        big.delta1 *= 10.0;
        big.delta2 *= 10.0;
        big.omega *= 10.0;
        let b = AssumptionBounds::default();
        let r0 = assumption_report(&[s], &b).margin(5).unwrap();
        let r1 = assumption_report(&[big], &b).margin(5).unwrap();
        assert!((r1 / r0 - 10.0).abs() < 1e-12);
    }

    #[test]
    fn csv_has_seven_rows() {
        let r = assumption_report(&[set()], &AssumptionBounds::default());
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 8);
    }
}
