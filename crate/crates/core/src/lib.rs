//! Web proxy cache simulation and Zipf traffic analytics.
//!
//! - [`popularity`]: Zipf catalog, rank sampling, harmonic and zeta numerics.
//! - [`workload`]: seeded request streams, object attributes, trace files.
//! - [`cache`]: session-buffered least-hit-count replacement and an LRU baseline.
//! - [`analytics`]: closed-form miss probability, top-C mass and bandwidth demand.
//! - [`simulator`]: runs, sweeps, model comparison and power-law fitting.
//! - [`cli`]: the `proxycache` command-line front end.

pub mod analytics;
pub mod cache;
pub mod cli;
pub mod error;
pub mod output;
pub mod popularity;
pub mod simulator;
pub mod workload;

pub use analytics::{BandwidthParams, MassMode, ModelReport};
pub use cache::{AccessOutcome, CacheState, Policy, SessionBuffer};
pub use error::{Error, Result};
pub use popularity::{ComplexExponent, ZipfCatalog};
pub use simulator::{SimConfig, SimReport, SweepConfig};
pub use workload::{ObjectAttributes, RankHistogram, RateConvention, ValueRange, Workload};
