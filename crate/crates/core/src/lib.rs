//! Simulation and verification of two-robot gathering when each robot's
//! compass may deviate from true north by a bounded angle.
//!
//! - [`geometry`]: points, normalized angles, circular arcs.
//! - [`frames`]: robot-local coordinate systems and compass models.
//! - [`algorithms`]: the three gathering algorithms as region tables.
//! - [`engine`]: look-compute-move execution under semi-synchronous and
//!   asynchronous schedulers.
//! - [`adversary`]: random, scripted, mirrored, replayed and searched
//!   choice sources.
//! - [`analysis`]: state pairs, segment angle, axis classes and per-trace
//!   invariant checks.
//! - [`trace`]: line-delimited JSON export and import.

// Robots are indexed 0 and 1 throughout; index loops read better than zips.
#![allow(clippy::needless_range_loop)]

pub mod adversary;
pub mod algorithms;
pub mod analysis;
pub mod engine;
pub mod frames;
pub mod geometry;
pub mod trace;
