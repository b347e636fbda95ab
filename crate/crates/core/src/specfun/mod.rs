//! Special functions and numerical integration.
//!
//! Everything here is a pure function of its arguments.

mod gamma;
mod lambert;
mod normal;
mod quadrature;
mod student;
mod zeta;

pub use gamma::{beta_reg, log_beta, log_gamma};
pub use lambert::{wbar, Branch};
pub use normal::{erf, erfc, gauss_cdf, gauss_pdf, gauss_quantile};
pub use quadrature::{integrate, QuadratureSettings};
pub use student::{t_cdf, t_pdf, t_quantile, t_sf, t_upper_quantile};
pub use zeta::riemann_zeta;

pub(crate) use normal::gauss_quantile_unchecked;
