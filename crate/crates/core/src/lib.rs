//! User-level hate-monger classification over directed follower graphs.
//!
//! Per-post hate scores are aggregated into user features (fixed-threshold
//! counts, neighbor hate fractions, softmaxed score histograms) and fed to a
//! logistic-regression classifier evaluated with stratified k-fold
//! cross-validation. DeGroot diffusion and node2vec embeddings serve as graph
//! baselines, and a seeded synthetic generator provides planted-community
//! benchmarks.
//!
//! Numeric code is generic over [`Scalar`] (`f32` / `f64`); the aliases below
//! fix the precision used by the file formats and the CLI.

pub mod config;
pub mod dataset;
pub mod diffusion;
pub mod embed;
mod error;
pub mod features;
pub mod graph;
mod scalar;
pub mod scoring;
pub mod seed;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
pub use scalar::{logistic, softplus, Scalar};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type FeatureVector = features::UserFeatureVector<f64>;
pub type Model = train::TrainedModel<f64>;
pub type Embeddings = embed::EmbeddingTable<f32>;
pub type Diffusion = diffusion::DiffusionState<f64>;
pub type PowerLaw = graph::PowerLawFit<f64>;
pub type Lexicon = scoring::LexiconScorer<f64>;
