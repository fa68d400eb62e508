//! Detection and analysis of time-varying coordinated behavior in retweet logs.
//!
//! The pipeline runs in stages, each a module:
//!
//! * [`ingest`]: parse event logs, pick superspreaders, cut overlapping windows.
//! * [`simnet`]: per-window TF-IDF co-retweet similarity layers and their
//!   disparity-filter backbone.
//! * [`multiplex`]: stack the layers into a temporal multiplex with identity
//!   couplings between adjacent windows.
//! * [`dyncomm`]: multislice modularity and a Leiden-style optimizer over
//!   node-slices.
//! * [`analytics`]: stability, shifts, polarity, archetypes and the statistics
//!   built on them.
//! * [`synth`]: planted-truth event generator and recovery scoring.
//! * [`pipeline`] and [`report`]: end-to-end orchestration and on-disk formats.

pub mod analytics;
pub mod dyncomm;
mod error;
pub mod ingest;
pub mod multiplex;
pub mod pipeline;
pub mod report;
pub mod simnet;
pub mod synth;

pub use error::{Error, Result};
pub use ingest::{RetweetEvent, UserId, UserTable, WindowSpec, WindowedCorpus};
pub use multiplex::MultiplexNetwork;
pub use simnet::{Edge, LayerGraph};
pub use dyncomm::{DynamicPartition, ResolutionConfig, Timelines};

pub use pipeline::PipelineConfig;
