//! Bessel functions needed by the order-1 Hankel transform.
//!
//! `J0`/`J1` come from `libm` (ports of the FreeBSD/musl implementations,
//! accurate to a few ulp). `K1` is evaluated from its integral representation
//! `K1(z) = ∫_0^∞ exp(-z cosh t) cosh t dt` with the trapezoidal rule, which
//! converges geometrically for this analytic, doubly-decaying integrand.

use std::f64::consts::PI;

pub fn j0(x: f64) -> f64 {
    libm::j0(x)
}

pub fn j1(x: f64) -> f64 {
    libm::j1(x)
}

/// Exponentially scaled modified Bessel function `e^z K1(z)` for `z > 0`.
pub fn k1_scaled(z: f64) -> f64 {
    assert!(z > 0.0, "K1 requires a positive argument");
    // Integrand e^{-z (cosh t - 1)} cosh t; truncate once it drops below
    // 1e-18 of the t = 0 value.
    let h: f64 = 0.05;
    let mut sum = 0.5;
    let mut t = h;
    loop {
        let c = t.cosh();
        let term = (-z * (c - 1.0)).exp() * c;
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
        t += h;
    }
    h * sum
}

/// Modified Bessel function of the second kind, order one.
pub fn k1(z: f64) -> f64 {
    k1_scaled(z) * (-z).exp()
}

/// The `s`-th positive zero of `J1` (`s >= 1`), from McMahon's expansion
/// refined by Newton iteration.
pub fn j1_zero(s: usize) -> f64 {
    assert!(s >= 1);
    let beta = (s as f64 + 0.25) * PI;
    let b8 = 8.0 * beta;
    // mu = 4 nu^2 = 4
    let mut x = beta - 3.0 / b8 - 4.0 * 3.0 * (28.0 - 31.0) / (3.0 * b8.powi(3));
    for _ in 0..8 {
        let f = j1(x);
        let df = j0(x) - f / x;
        let dx = f / df;
        x -= dx;
        if dx.abs() < 1e-15 * x {
            break;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values from mpmath at 30 digits.
    #[test]
    fn k1_reference_values() {
        let cases = [
            (0.01, 99.973894118296246),
            (0.5, 1.656441120003301),
            (2.0, 0.13986588181652243),
            (10.0, 1.8648773453825585e-5),
            (40.0, 8.4971319548610387e-19),
        ];
        for (z, expected) in cases {
            let got = k1(z);
            assert!(((got - expected) / expected).abs() < 1e-13, "K1({z}) = {got}, expected {expected}");
        }
    }

    #[test]
    fn j1_zeros_match_tabulated() {
        let tab = [3.831705970207512, 7.015586669815619, 10.17346813506272, 13.32369193631422];
        for (s, z) in tab.iter().enumerate() {
            assert!((j1_zero(s + 1) - z).abs() < 1e-13);
        }
        assert!(j1(j1_zero(200)).abs() < 1e-15);
    }
}
