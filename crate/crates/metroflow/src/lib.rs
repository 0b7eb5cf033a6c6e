//! Metro transfer passenger-flow toolkit.
//!
//! The crate covers the whole chain from raw automatic fare collection (AFC)
//! swipe records to a four-model forecast comparison:
//!
//! * [`afc`] — delimiter-separated AFC parsing, rule-based cleaning, and the
//!   single-line / cross-line split.
//! * [`network`] — metro network model, simple-path route search, and
//!   hop-proportional transfer timestamp estimation.
//! * [`flow`] — binned transfer flow series, scenario splits, and
//!   same-period historical averages.
//! * [`stl`] — seasonal-trend decomposition by LOESS with a robustness
//!   outer loop, plus 3-sigma residual repair.
//! * [`neural`] — from-scratch GRU/LSTM stacks trained with Adam on MAE.
//! * [`pipeline`] — train/test splitting, error metrics, the decompose-then-
//!   forecast pipelines, and the model comparison report.
//! * [`synth`] — seeded synthetic AFC and series generators with ground truth.
//! * [`cli`] — the `metroflow` command line on top of all of the above.
//!
//! Every example under `examples/` is runnable, one per major capability:
//!
//! ```text
//! cargo run -p metroflow --example route_search
//! cargo run -p metroflow --example stl_decompose
//! ```
//!
//! All randomness flows from explicit `u64` seeds; two runs with the same
//! seed and configuration produce identical outputs.

pub mod afc;
pub mod calendar;
pub mod cli;
pub mod config;
pub mod error;
pub mod flow;
pub mod manifest;
pub mod network;
pub mod neural;
pub mod pipeline;
pub mod stl;
pub mod synth;

pub use error::{Error, Result};
