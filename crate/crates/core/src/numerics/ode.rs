//! Runge-Kutta integrators for complex first-order systems `dy/dt = f(t, y)`.
//!
//! The right-hand side writes its result into the provided buffer, so the
//! integrators allocate only a handful of work vectors per call.

use num_complex::Complex64 as C64;
use serde::{ Deserialize, Serialize };

use crate::error::{ Error, Result };

/// Step-size control.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Stepper {
    /// Classic fourth-order Runge-Kutta with (at most) the given step.
    Rk4 { step: f64 },
    /// Dormand-Prince 5(4) embedded pair with per-step error control.
    DormandPrince { rtol: f64, atol: f64, initial_step: f64, min_step: f64 },
}

impl Default for Stepper {
    fn default() -> Self {
        Self::Rk4 { step: 1e-3 }
    }
}

/// Counts reported by an integration run.
#[derive(Copy, Clone, Debug, Default, PartialEq)]
pub struct OdeStats {
    pub steps: usize,
    pub rejected: usize,
}

fn axpy(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &[C64])]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = C64::new(0.0, 0.0);
        for (c, k) in terms {
            acc += k[i] * *c;
        }
        *o = y[i] + acc * h;
    }
}

/// Single classic RK4 step of size `h` from `t`, in place.
pub fn rk4_step<F>(f: &mut F, t: f64, y: &mut [C64], h: f64, work: &mut [Vec<C64>; 5])
where F: FnMut(f64, &[C64], &mut [C64])
{
    let [k1, k2, k3, k4, tmp] = work;
    f(t, y, k1);
    axpy(tmp, y, h, &[(0.5, k1)]);
    f(t + 0.5 * h, tmp, k2);
    axpy(tmp, y, h, &[(0.5, k2)]);
    f(t + 0.5 * h, tmp, k3);
    axpy(tmp, y, h, &[(1.0, k3)]);
    f(t + h, tmp, k4);
    for i in 0..y.len() {
        y[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
    }
}

/// Integrate from `t0` to `t1` (either direction) in place.
pub fn integrate<F>(mut f: F, t0: f64, t1: f64, y: &mut [C64], stepper: Stepper)
    -> Result<OdeStats>
where F: FnMut(f64, &[C64], &mut [C64])
{
    if t1 == t0 {
        return Ok(OdeStats::default());
    }
    match stepper {
        Stepper::Rk4 { step } => {
            let span = t1 - t0;
            let n = (span.abs() / step).ceil().max(1.0) as usize;
            let h = span / n as f64;
            let mut work: [Vec<C64>; 5] = std::array::from_fn(|_| vec![C64::new(0.0, 0.0); y.len()]);
            for j in 0..n {
                rk4_step(&mut f, t0 + j as f64 * h, y, h, &mut work);
            }
            Ok(OdeStats { steps: n, rejected: 0 })
        },
        Stepper::DormandPrince { rtol, atol, initial_step, min_step } =>
            dopri5(f, t0, t1, y, rtol, atol, initial_step, min_step),
    }
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0,
];

#[allow(clippy::too_many_arguments)]
fn dopri5<F>(
    mut f: F,
    t0: f64,
    t1: f64,
    y: &mut [C64],
    rtol: f64,
    atol: f64,
    initial_step: f64,
    min_step: f64,
) -> Result<OdeStats>
where F: FnMut(f64, &[C64], &mut [C64])
{
    let n = y.len();
    let dir = (t1 - t0).signum();
    let mut t = t0;
    let mut h = initial_step.abs().min((t1 - t0).abs()) * dir;
    let mut k: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); n]; 7];
    let mut tmp = vec![C64::new(0.0, 0.0); n];
    let mut y5 = vec![C64::new(0.0, 0.0); n];
    let mut stats = OdeStats::default();
    while (t1 - t) * dir > 0.0 {
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        if h.abs() < min_step && (t1 - t).abs() > min_step {
            return Err(Error::StepUnderflow { t, step: h.abs() });
        }
        f(t, y, &mut k[0]);
        for s in 1..7 {
            for i in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += kj[i] * A[s][j];
                }
                tmp[i] = y[i] + acc * h;
            }
            f(t + C[s] * h, &tmp, &mut k[s]);
        }
        let mut err_norm = 0.0f64;
        for i in 0..n {
            let mut hi = C64::new(0.0, 0.0);
            let mut lo = C64::new(0.0, 0.0);
            for s in 0..7 {
                hi += k[s][i] * B5[s];
                lo += k[s][i] * B4[s];
            }
            y5[i] = y[i] + hi * h;
            let scale = atol + rtol * y[i].norm().max(y5[i].norm());
            err_norm = err_norm.max(((hi - lo) * h).norm() / scale);
        }
        if err_norm <= 1.0 {
            t += h;
            y.copy_from_slice(&y5);
            stats.steps += 1;
        } else {
            stats.rejected += 1;
        }
        let factor = if err_norm == 0.0 { 5.0 } else { (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    // y' = i w y, y(0) = 1
    fn rotation(w: f64) -> impl FnMut(f64, &[C64], &mut [C64]) {
        move |_t, y, dy| dy[0] = C64::new(0.0, w) * y[0]
    }

    #[test]
    fn rk4_matches_exponential() {
        let mut y = [C64::new(1.0, 0.0)];
        integrate(rotation(2.0), 0.0, 3.0, &mut y, Stepper::Rk4 { step: 1e-3 }).unwrap();
        let exact = C64::from_polar(1.0, 6.0);
        assert!((y[0] - exact).norm() < 1e-11);
    }

    #[test]
    fn rk4_global_error_is_fourth_order() {
        let err = |h: f64| {
            let mut y = [C64::new(1.0, 0.0)];
            integrate(rotation(1.0), 0.0, 2.0, &mut y, Stepper::Rk4 { step: h }).unwrap();
            (y[0] - C64::from_polar(1.0, 2.0)).norm()
        };
        let order = (err(0.1) / err(0.05)).log2();
        assert!((order - 4.0).abs() < 0.1, "order {order}");
    }

    #[test]
    fn dopri_matches_exponential_backwards() {
        let mut y = [C64::new(1.0, 0.0)];
        let stepper = Stepper::DormandPrince { rtol: 1e-11, atol: 1e-13, initial_step: 0.1, min_step: 1e-12 };
        integrate(rotation(1.5), 0.0, -4.0, &mut y, stepper).unwrap();
        assert!((y[0] - C64::from_polar(1.0, -6.0)).norm() < 1e-9);
    }

    #[test]
    fn dopri_reports_step_underflow() {
        let stepper = Stepper::DormandPrince { rtol: 1e-14, atol: 1e-300, initial_step: 1.0, min_step: 0.5 };
        let mut y = [C64::new(1.0, 0.0)];
        let r = integrate(rotation(50.0), 0.0, 10.0, &mut y, stepper);
        assert!(matches!(r, Err(Error::StepUnderflow { .. })));
    }

    #[test]
    fn zero_span_is_identity() {
        let mut y = [C64::new(0.3, 0.4)];
        let stats = integrate(rotation(1.0), 1.0, 1.0, &mut y, Stepper::default()).unwrap();
        assert_eq!(stats.steps, 0);
        assert_eq!(y[0], C64::new(0.3, 0.4));
    }
}
