//! Finite differences, quadrature and scalar/2-D root finding.

pub mod fd;
pub mod quad;
pub mod roots;
