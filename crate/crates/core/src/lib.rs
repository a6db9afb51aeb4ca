//! Maximal matching in bounded-deletion graph streams.
//!
//! A bounded-deletion stream inserts edges freely but deletes at most `K`
//! of them. This crate provides three single-pass algorithms over such
//! streams:
//!
//! * [`drivers::run_randomized`]: hierarchical greedy matchings on
//!   `⌈√K⌉` levels plus a bank of ℓ0-samplers per vertex level, used after
//!   the stream to repair the least damaged level back to maximality.
//! * [`drivers::run_deterministic`]: `K + 1` hierarchical levels, one of
//!   which is guaranteed to survive the deletions untouched.
//! * [`drivers::run_budgeted`]: a hierarchy capped at `n + K/ε` stored
//!   edges, giving a `(2 + ε)`-approximate maximum matching.
//!
//! Exact offline references live in [`oracle`], stream generators and the
//! text fixture format in [`stream`], and the sweep harness used by the CLI
//! in [`harness`].

pub mod drivers;
pub mod error;
pub mod exec;
pub mod harness;
pub mod hierarchy;
pub mod matching;
pub mod oracle;
pub mod repair;
pub mod rng;
pub mod sketch;
pub mod stream;

pub use drivers::{AlgorithmKind, RunMetrics, RunResult};
pub use error::{Error, Result};
pub use exec::Exec;
pub use hierarchy::{HierarchicalMatching, HierarchyMode};
pub use matching::Matching;
pub use repair::AlgorithmConfig;
pub use stream::{Edge, EdgeEvent, EventKind, Graph, StreamSpec, VertexId};
