//! Numerical foundations shared by every other module.

pub mod bessel;
pub mod expm;
pub mod mat2;
pub mod ode;
pub mod quadrature;

pub use bessel::{bessel_j, bessel_j0_zero, bessel_j0_zeros, MAX_J0_ZERO};
pub use expm::expm_su2;
pub use mat2::{Mat2, PauliBasis, SIGMA_X, SIGMA_Y, SIGMA_Z};
pub use ode::{integrate_adaptive, integrate_with_observer, IntegrationStats, OdeTolerance};
