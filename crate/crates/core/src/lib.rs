//! AS-level topology discovery from BGP update streams.
//!
//! The pipeline decodes updates ([`ingest`]), turns AS paths into links
//! ([`path`]), replays per-peer routing state to obtain link visibility over
//! time ([`rib`]), and derives temporal ([`temporal`]) and topological
//! ([`graph`]) metrics. [`reset`] suppresses artifacts of collector session
//! resets; [`synth`] builds scenarios with known ground truth.

pub mod graph;
pub mod ingest;
pub mod path;
pub mod reset;
pub mod rib;
pub mod temporal;
pub mod synth;
pub mod cli;
