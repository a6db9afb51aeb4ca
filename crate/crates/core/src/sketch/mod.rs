//! Linear sketches for ℓ0-sampling over edge-indicator vectors.
//!
//! An [`L0Sampler`] summarizes a turnstile vector over `[0, n²)` and returns
//! a uniformly random coordinate of its support. A [`SamplerBank`] groups
//! the samplers that watch one vertex's incident edges, partitioned into
//! equally sized slots so that independent repair chains never share
//! randomness.

pub(crate) mod bank;
pub(crate) mod field;
mod hash;
pub(crate) mod sampler;

pub use bank::{NeighborhoodSample, SamplerBank};
pub use field::Fp127;
pub use hash::LevelHash;
pub use sampler::{rows_for_delta, Cell, L0Sampler, ROW_FAILURE_BOUND};
