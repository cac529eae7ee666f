//! News foragers: a seed-reproducible artificial-life simulation.
//!
//! A population of crawling agents forages on a growing scale-free document
//! network. Each agent estimates long-term profit with a linear value
//! function over a text-classifier representation, learns it by TD(0), keeps
//! a short list of promising starting points, and multiplies or dies
//! according to the rewards a central unit pays for first discoveries of
//! fresh documents.
//!
//! Module map:
//!
//! - [`environment`]: the synthetic scale-free document network and its growth.
//! - [`textmodel`]: PDDP clustering, the PrTFIDF classifier and state vectors.
//! - [`forager`]: one agent's policy, TD learning and weblog maintenance.
//! - [`reward`]: the central reward unit.
//! - [`population`]: scheduling, life-value accounting, bipartition, extinction.
//! - [`runlog`]: the append-only event stream of a run.
//! - [`metrics`]: efficiency and compartmentalization analyses over a run log.
//! - [`config`]: the run configuration file.

pub mod config;
pub mod environment;
mod error;
pub mod forager;
pub mod metrics;
pub mod population;
pub mod reward;
pub mod rng;
pub mod runlog;
pub mod textmodel;

pub use config::RunConfig;
pub use error::{Error, Result};

/// Ticks per virtual day. One tick is one virtual minute.
pub const TICKS_PER_DAY: u64 = 1440;
