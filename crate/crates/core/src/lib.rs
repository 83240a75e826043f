//! Model-based clustering of large and growing networks.
//!
//! Nodes carry one latent class each and edge values follow an
//! exponential-family law (Bernoulli or Poisson) whose mean depends only on
//! the class pair. The crate provides:
//!
//! * [`graph`]: sparse graphs, edge-list ingestion and planted-partition
//!   generators;
//! * [`family`]: edge distributions and complete-data log-likelihoods;
//! * [`stats`]: sufficient statistics with the one-node increment used by
//!   every streaming fitter;
//! * [`fit`]: online SAEM, online variational EM, online classification EM
//!   and the batch variational EM baseline;
//! * [`metrics`]: adjusted Rand index, ICL, modularity, bias/RMSE;
//! * [`bench`]: the simulation grid and growing-network harness;
//! * [`cli`]: the `mixnet` command line front end.

pub mod bench;
pub mod cli;
pub mod error;
pub mod family;
pub mod fit;
pub mod graph;
pub mod metrics;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use family::{EdgeFamily, ModelParams};
pub use fit::{Algorithm, FitConfig, FitResult};
pub use graph::{EdgeKind, Graph, PlantedPartition};
pub use stats::{Labels, PairConvention, SuffStats, Tau};
