//! Geodesic retrieval over joint image/text embedding graphs.
//!
//! Image and text features live on the unit sphere. Text points are rigidly
//! aligned onto the image cloud, both are joined in an ε-neighbourhood graph
//! with great-circle edge weights, and retrieval uses shortest-path
//! (geodesic) distance instead of straight-line distance. A symbolic
//! CLEVR-style world provides ground truth for which transitions between
//! scenes are "smooth".
//!
//! All numeric code is generic over [`Real`] (`f32` or `f64`); the `*64` and
//! `*32` aliases below name the common instantiations.

pub mod alignment;
pub mod cci;
pub mod embedding;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod loss;
pub mod retrieval;
pub mod scalar;
pub mod smoothness;
pub mod synthetic;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use scalar::Real;

pub type EmbeddingSet64 = embedding::EmbeddingSet<f64>;
pub type EmbeddingSet32 = embedding::EmbeddingSet<f32>;
pub type RigidTransform64 = alignment::RigidTransform<f64>;
pub type RigidTransform32 = alignment::RigidTransform<f32>;
pub type ManifoldGraph64 = graph::ManifoldGraph<f64>;
pub type ManifoldGraph32 = graph::ManifoldGraph<f32>;
pub type Batch64 = loss::Batch<f64>;
pub type Batch32 = loss::Batch<f32>;
