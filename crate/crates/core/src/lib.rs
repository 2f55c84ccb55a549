//! A queueing laboratory for packet traces and heavy-tailed on/off traffic.
//!
//! The crate answers two questions about traffic models built on long-range
//! dependence:
//!
//! * What happens when a single on/off source with heavy-tailed on periods
//!   feeds an infinite buffer? (Its mean queue grows without bound as the run
//!   gets longer.)
//! * How much of a trace's queueing depends on its long-range ordering?
//!   (Measured by block-shuffling the trace and re-queueing it.)
//!
//! Modules, bottom-up:
//!
//! * [`trace`]: packet traces and their CSV format;
//! * [`synth`]: Pareto sampling, on/off fluid constructions, packetization;
//! * [`queue`]: exact FIFO packet and fluid queue simulators;
//! * [`reorder`]: block-shuffle surrogates;
//! * [`experiments`]: replicated sweeps and a variance-time Hurst estimator.
//!
//! ```
//! use lrdq::queue::simulate_packet_queue;
//! use lrdq::trace::Trace;
//!
//! let trace = Trace::from_pairs([(0.0, 1000), (0.5, 1000)], "hand").unwrap();
//! let (stats, _) = simulate_packet_queue(&trace, 1000.0, false).unwrap();
//! assert_eq!(stats.mean_q, 1.25);
//! ```

// `!(x > 0.0)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod queue;
pub mod reorder;
pub mod stats;
pub mod synth;
pub mod trace;

pub use error::{Error, Result};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator behind every seeded operation in the crate.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Version string recorded in provenance sidecars.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

// Every snippet in the guide runs as a doctest.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/traces.md")]
    mod traces {}
    #[doc = include_str!("../../../book/src/onoff.md")]
    mod onoff {}
    #[doc = include_str!("../../../book/src/queues.md")]
    mod queues {}
    #[doc = include_str!("../../../book/src/divergence.md")]
    mod divergence {}
    #[doc = include_str!("../../../book/src/shuffle.md")]
    mod shuffle {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
