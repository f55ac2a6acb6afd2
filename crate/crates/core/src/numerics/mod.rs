//! Special functions and numerical integration.
//!
//! Everything here is a pure function of its arguments, generic over the
//! floating-point scalar, and safe to call concurrently.

mod noncentral;
mod quadrature;
mod special;

pub use noncentral::{
    noncentral_chi2_cdf, noncentral_chi2_log_pdf, noncentral_chi2_mean, noncentral_chi2_pdf,
};
pub use quadrature::{integrate_halfline, integrate_interval, QuadratureConfig};
pub use special::{erfc, gamma_p, gamma_q, ln_gamma, std_normal_cdf};
