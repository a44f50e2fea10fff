//! Integer lattice laws on truncated supports.

mod conv;
mod io;
mod norming;
mod pmf;
mod powerlaw;

pub use io::{read_pmf_csv, write_pmf_csv, PmfHeader};
pub use norming::{norming_b, Law};
pub use pmf::{LatticePmf, MomentEstimate, MAX_SUPPORT};
pub use powerlaw::{
    build_power_law, Normalization, PowerLawSpec, Side, SlowlyVarying, TruncationMode,
    TruncationPolicy,
};

pub(crate) use conv::convolve_slices;
