//! Three-level toy model: a ground state `g` driven into two bare states
//! `s₁, s₂` that are themselves resonantly dressed by a Rabi field.

use num_complex::Complex64 as C64;
use serde::{ Deserialize, Serialize };

use crate::numerics::linalg::{ cis, hermitian_eigen, CMat, I };

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyParams {
    pub omega1: f64,
    pub omega2: f64,
    /// Dressing Rabi frequency between `s₁` and `s₂`.
    pub rabi: f64,
    pub chi1: C64,
    pub chi2: C64,
    /// Residual detuning of the ground drives.
    pub delta: f64,
    /// Required ratio `|ω₁ − ω₂| / Ω` for the far-off-resonant transitions to be negligible.
    #[serde(default = "default_separation")]
    pub min_separation_ratio: f64,
}

fn default_separation() -> f64 {
    20.0
}

impl ToyParams {
    /// Whether `|ω₁ − ω₂| ≥ ratio · Ω` holds.
    pub fn separation_ok(&self) -> bool {
        (self.omega1 - self.omega2).abs() >= self.min_separation_ratio * self.rabi.abs()
    }
}

/// The rotating-wave Hamiltonian in the `(g, s₁, s₂)` basis.
pub fn toy_hamiltonian(p: &ToyParams, t: f64) -> CMat {
    let f1 = cis((p.omega1 - p.rabi + p.delta) * t);
    let f2 = cis((p.omega2 - p.rabi + p.delta) * t);
    let beat = cis(-(p.omega1 - p.omega2) * t);
    let mut h = CMat::zeros(3, 3);
    h[(0, 1)] = p.chi1.conj() * f1;
    h[(0, 2)] = p.chi2.conj() * f2;
    h[(1, 0)] = h[(0, 1)].conj();
    h[(2, 0)] = h[(0, 2)].conj();
    h[(1, 1)] = C64::new(p.omega1, 0.0);
    h[(2, 2)] = C64::new(p.omega2, 0.0);
    h[(1, 2)] = p.rabi * beat;
    h[(2, 1)] = h[(1, 2)].conj();
    h
}

/// A time-dependent unitary with its analytic time derivative.
pub trait Frame {
    fn unitary(&self, t: f64) -> CMat;
    fn derivative(&self, t: f64) -> CMat;
}

/// `U(t) = diag(e^{−i r_j t})`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseFrame {
    pub rates: Vec<f64>,
}

impl PhaseFrame {
    pub fn new(rates: Vec<f64>) -> Self {
        Self { rates }
    }

    /// The frame that removes the `e^{±i(ω₁−ω₂)t}` beat from the dressing block.
    pub fn toy(p: &ToyParams) -> Self {
        Self::new(vec![0.0, p.omega1 - p.omega2, 0.0])
    }
}

impl Frame for PhaseFrame {
    fn unitary(&self, t: f64) -> CMat {
        let n = self.rates.len();
        CMat::from_fn(n, n, |i, j| if i == j { cis(-self.rates[i] * t) } else { C64::new(0.0, 0.0) })
    }

    fn derivative(&self, t: f64) -> CMat {
        let n = self.rates.len();
        CMat::from_fn(n, n, |i, j| {
            if i == j { -I * self.rates[i] * cis(-self.rates[i] * t) } else { C64::new(0.0, 0.0) }
        })
    }
}

/// Product of two frames, `U = U₁ U₂`.
pub struct Composed<A, B>(pub A, pub B);

impl<A: Frame, B: Frame> Frame for Composed<A, B> {
    fn unitary(&self, t: f64) -> CMat {
        self.0.unitary(t) * self.1.unitary(t)
    }

    fn derivative(&self, t: f64) -> CMat {
        self.0.derivative(t) * self.1.unitary(t) + self.0.unitary(t) * self.1.derivative(t)
    }
}

/// `U† h U − i U† ∂ₜU` evaluated at one instant.
pub fn frame_transform(h: &CMat, u: &CMat, du_dt: &CMat) -> CMat {
    let ud = u.adjoint();
    &ud * h * u - (&ud * du_dt) * I
}

/// Lifts a Hamiltonian function into the frame `frame`.
pub fn toy_frame_transform<'a, H, F>(h_fn: H, frame: &'a F) -> impl Fn(f64) -> CMat + 'a
where
    H: Fn(f64) -> CMat + 'a,
    F: Frame,
{
    move |t| frame_transform(&h_fn(t), &frame.unitary(t), &frame.derivative(t))
}

/// Couplings from `g` to the dressed states of the `(s₁, s₂)` block.
#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct SelectionRule {
    /// Coupling to `d₁`, the dressed state at `ω₂ + Ω`.
    pub coupling_to_d1: C64,
    /// Coupling to `d₂`, the dressed state at `ω₂ − Ω`.
    pub coupling_to_d2: C64,
    pub energies: [f64; 2],
    pub separation_ok: bool,
}

/// Diagonalizes the dressed block of the rotating-frame Hamiltonian at
/// `t = 0` and returns the `d ← g` couplings (the lower-left column).
///
/// Eigenvector phases are fixed so that the `s₁` component is real and
/// non-negative, which reproduces `(χ₁ ± χ₂)/√2` for real positive `Ω`.
pub fn synthetic_rule_check(p: &ToyParams) -> SelectionRule {
    let frame = PhaseFrame::toy(p);
    let h = toy_frame_transform(|t| toy_hamiltonian(p, t), &frame)(0.0);
    let block = h.view((1, 1), (2, 2)).into_owned();
    let (vals, vecs) = hermitian_eigen(&block);
    let mut couplings = [C64::new(0.0, 0.0); 2];
    // Ascending order: index 1 is d₁ (upper), index 0 is d₂ (lower).
    for (slot, col) in [(0usize, 1usize), (1, 0)] {
        let a = vecs[(0, col)];
        let b = vecs[(1, col)];
        let gauge = if a.norm() > 1e-14 { a.conj() / a.norm() } else { b.conj() / b.norm() };
        let (a, b) = (a * gauge, b * gauge);
        couplings[slot] = a.conj() * h[(1, 0)] + b.conj() * h[(2, 0)];
    }
    SelectionRule {
        coupling_to_d1: couplings[0],
        coupling_to_d2: couplings[1],
        energies: [vals[1], vals[0]],
        separation_ok: p.separation_ok(),
    }
}
