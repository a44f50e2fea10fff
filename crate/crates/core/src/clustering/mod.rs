//! Limit clustering function of power-law random intersection graphs,
//! built from mixed Poisson laws and randomly stopped degree sums.

mod mixed;
mod pipeline;

pub use mixed::{
    lambda_tail_check, mixed_poisson_from_spec, mixed_poisson_pmf, MixedPoisson, MixedPoissonSpec,
};
pub use pipeline::{
    c_star, c_star_from, d_star_pmf, delta_exponent, dyadic, kappa_exponent, lambda0, lambda1,
    p1_p2, stopped_degree, ClusterParams, ClusterPipeline, ClusterPoint, ComponentLaw,
    DeltaExponent, WeightMoments,
};
