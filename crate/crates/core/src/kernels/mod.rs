//! Special functions, the Helmholtz fundamental solution and quadrature rules.

mod dd;
mod helmholtz;
mod quadrature;
mod special;

pub(crate) use helmholtz::{hankel01_unchecked, PhiPair};
pub use helmholtz::{fundamental, fundamental_grad, hankel01};
pub use quadrature::{gauss_legendre, kress_log_weights};
pub use special::{bessel01, bessel_j0, bessel_j01, bessel_j1, bessel_y0, bessel_y1, Bessel01, EULER_GAMMA};
