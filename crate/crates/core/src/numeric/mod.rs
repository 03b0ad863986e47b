//! Numerical building blocks: quadrature, dense linear algebra, bracketed
//! root finding and an adaptive Runge-Kutta integrator.

pub mod linalg;
pub mod ode;
pub mod quad;
pub mod roots;
