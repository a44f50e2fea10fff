//! Checks of the intermediate machinery: local limit errors, window and
//! renewal sums, and the decomposition and large-deviation bounds.

mod bounds;
mod llt;
mod renewal;

pub use bounds::{
    decomposition_bound, l_delta, large_dev_bound, tail_constant, two_term_approx,
    two_term_exact, v_w, BoundReport, LargeDevOptions, LargeDevVariant, Method,
};
pub use llt::{alpha3_bound_shape, alpha3_h, llt_error, LimitDensity, LltReport};
pub use renewal::{renewal_sum, window_sum, RenewalReport};
