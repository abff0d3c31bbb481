//! Batch front end for the gathering simulator: single runs, scripted
//! scenarios, parameter sweeps, trace verification and plotting.

// Robots are indexed 0 and 1 throughout; index loops read better than zips.
#![allow(clippy::needless_range_loop)]

pub mod app;
pub mod plot;
pub mod runspec;
pub mod sweep;
