//! Distances, soft nearest-neighbour weights and predictions, and candidate
//! sampling.

pub mod distance;
pub mod sampling;
pub mod weights;

pub use distance::{pairwise_distance, pairwise_distance_backward, DistanceKind, DIST_EPS};
pub use sampling::{
    sample_classwise, sample_distance_weighted, sample_random, subset_size, SamplingStrategy,
};
pub use weights::{
    build_exclusion_mask, one_hot, softnn_predict, softnn_predict_backward, softnn_weights,
    ExclusionMask, Kernel, NeighborhoodWeights,
};
