//! Sample-based robust collision avoidance by distribution matching.
//!
//! A robot with a double-integrator model picks one acceleration per step
//! from a grid. Robot and obstacle uncertainty are represented only by
//! samples, and each candidate control induces a distribution of
//! velocity-obstacle constraint values. The planner pulls that distribution
//! towards a desired one whose samples are all collision-free, measured by
//! the maximum mean discrepancy under a polynomial kernel (or, for
//! comparison, a KL divergence between fitted Gaussian mixtures). Gaussian
//! surrogate baselines are included.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix `f64`.

pub mod desired;
pub mod embedding;
pub mod error;
pub mod gmm;
pub mod linalg;
pub mod planner;
pub mod scalar;
pub mod sim;
pub mod uncertainty;
pub mod vo;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type RobotState = uncertainty::RobotState<f64>;
pub type ControlInput = uncertainty::ControlInput<f64>;
pub type SampleSet = uncertainty::SampleSet<f64>;
pub type ConstraintSampleSet = vo::ConstraintSampleSet<f64>;
pub type ObstacleGeometry = vo::ObstacleGeometry<f64>;
pub type EmbeddingWeights = embedding::EmbeddingWeights<f64>;
pub type GmmModel = gmm::GmmModel<f64>;
pub type DesiredDistribution = desired::DesiredDistribution<f64>;
pub type ControlDecision = planner::ControlDecision<f64>;
