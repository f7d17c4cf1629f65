//! Numerical building blocks: quadrature, ODE stepping, special functions,
//! extrapolation, line fits and small dense linear algebra.

pub mod bessel;
pub mod extrap;
pub mod fit;
pub mod linalg;
pub mod ode;
pub mod optimize;
pub mod quad;
