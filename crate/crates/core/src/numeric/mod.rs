//! Small numerical kernels shared by the probability modules.

mod fit;
mod quad;
mod sum;

pub use fit::{log_log_slope, ols_slope};
pub use quad::{integrate, integrate_to_infinity, Integral};
pub(crate) use quad::integrate_panels;
pub use sum::NeumaierSum;

pub use statrs::function::gamma::{gamma, ln_gamma};

/// `ln(k!)` for nonnegative integers.
pub fn ln_factorial(k: u64) -> f64 {
    ln_gamma(k as f64 + 1.0)
}
