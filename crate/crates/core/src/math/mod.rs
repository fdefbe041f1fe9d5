//! Numerical building blocks shared by every other module.

pub mod diff;
pub mod field;
pub mod quadrature;
pub mod roots;
pub mod special;

pub use diff::{fd_derivative, wronskian_num};
pub use field::{linspace, Interval, ScalarField};
pub use quadrature::{quad_adaptive, Quadrature, QuadratureResult};
pub use special::{hermite_poly, normal_cdf};
