//! Competitive-refractory dynamics: an event-driven simulator for geometric
//! networks, plus the gradient-free MNIST classification pipelines built on
//! top of it (temporal-path embeddings, STDP-modulated embeddings, and
//! edge-weight state-space trajectories) and a one-shot MLP baseline.
//!
//! All continuous math is generic over the scalar type via [`scalar::Real`]
//! (`f32` or `f64`); simulated time is integer ticks of [`time::TICK_MS`]
//! milliseconds everywhere, which keeps runs bit-reproducible for a fixed
//! seed and scalar type.

pub mod ann;
pub mod embed;
pub mod engine;
pub mod error;
pub mod exp;
pub mod knn;
pub mod matio;
pub mod mnist;
pub mod netgen;
pub mod pca;
pub mod plasticity;
pub mod rng;
pub mod scalar;
pub mod tgraph;
pub mod time;
pub mod trace;

pub use error::{Error, Result};
pub use scalar::Real;

/// Default scalar for the CLI and full-precision runs.
pub type Scalar = f64;

pub type Network = netgen::GeometricNetwork<Scalar>;
pub type PhysiologyConfig = netgen::PhysiologyConfig<Scalar>;
pub type StdpParams = plasticity::StdpParams<Scalar>;
pub type WeightTrajectory = plasticity::WeightTrajectory<Scalar>;
pub type EmbeddingSpace = embed::EmbeddingSpace<Scalar>;
pub type KnnConfig = knn::KnnConfig<Scalar>;
pub type MlpModel = ann::MlpModel<Scalar>;
