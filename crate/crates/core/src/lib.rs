//! Sparse K-means clustering.
//!
//! Weighted BCSS clustering with feature weights restricted to
//! `{w ≥ 0, ‖w‖₂² ≤ 1, ‖w‖₁ ≤ s}`, in two forms:
//!
//! * [`euclid`]: squared Euclidean dissimilarity, alternating exact weight
//!   steps with weighted Lloyd iterations, plus the centroid-form objective
//!   and empirical risks.
//! * [`general`]: arbitrary per-feature dissimilarity tensors, alternating
//!   weight steps with single-point relocation search.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below fix `f64`.

pub mod error;
pub mod euclid;
pub mod general;
pub mod metric;
pub mod models;
mod pairwise;
pub mod partitions;
pub mod rng;
pub mod scalar;
pub mod types;
pub mod weights;

pub use error::{Result, SkmError};
pub use euclid::{
    assign, bcss_centroid_form, bcss_per_feature, check_equivalence, dispersion_gap, empirical_risk,
    empirical_risk_prime, fit, objective_centroid, objective_pairwise, update_centroids, weighted_lloyd,
    EquivalenceReport, ExhaustiveAgreement, FitOptions, FitResult, LloydResult,
};
pub use general::{
    empirical_risk_general, exhaustive_joint_oracle, exhaustive_partition_oracle, fit_general, general_gains,
    objective_general, relocation_search, voronoi_partition_family, GeneralFit, GeneralFitOptions,
};
pub use metric::{directed_hausdorff, hausdorff, theta_distance, weighted_sqdist};
pub use models::{
    population_mean, reference_theta, sample_gauss_mix, sample_two_ball, AtomModel, GaussMixModel, PointModel,
    TwoBallModel,
};
pub use scalar::Scalar;
pub use types::{CentroidSet, Dataset, DissimilarityTensor, Partition, Structure, Theta, WeightVector, TOL_FEAS};
pub use weights::{bisection_trace, solve_weights, BisectionTrace, GainVector};

pub type Dataset64 = Dataset<f64>;
pub type Dataset32 = Dataset<f32>;
pub type WeightVector64 = WeightVector<f64>;
pub type WeightVector32 = WeightVector<f32>;
pub type CentroidSet64 = CentroidSet<f64>;
pub type CentroidSet32 = CentroidSet<f32>;
pub type Tensor64 = DissimilarityTensor<f64>;
pub type Tensor32 = DissimilarityTensor<f32>;
pub type Theta64 = Theta<f64>;
pub type Theta32 = Theta<f32>;
pub type GainVector64 = GainVector<f64>;
