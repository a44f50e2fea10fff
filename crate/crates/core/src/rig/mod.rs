//! Random intersection graphs with power-law actor and attribute weights.

mod estimate;
mod sample;

pub use estimate::{
    clustering_table, degree_histogram, empirical_ck, truncated_power_fit, ClusteringEstimate,
};
pub use sample::{
    project, projection_estimate, sample_graph, sample_graph_with_budget, sample_with_weights,
    GraphSample, RigConfig, WeightSampler, DEFAULT_PAIR_BUDGET,
};
