//! Two-neighbour bootstrap percolation on finite square grids: a bit-parallel
//! simulation engine, the droplet/rectangles-process machinery built on top
//! of it, flood and wave analysis of slow regions, and reproducible Monte
//! Carlo experiments over all of them.
//!
//! The `examples/` directory of this crate has one runnable program per major
//! capability; `src/bin/bootperc.rs` is a thin config-driven runner around
//! [`io::run`].

pub mod cells;
pub mod droplet;
pub mod error;
pub mod experiments;
pub mod flood;
pub mod graphs;
pub mod grid;
pub mod gridfmt;
pub mod io;
pub mod rng;
pub mod scales;
pub mod stats;
pub mod verify;
pub mod waves;

pub use error::{Error, Result};
pub use grid::{EvolveOutcome, GridConfig, InfectionField, SimParams, SiteSet, StepLimit};
