//! Deep (filtered-end) homology of subcomplexes of cubical lattice windows,
//! with coarse Alexander duality experiments on books of half-planes.

pub mod chain;
pub mod cli;
pub mod coarse;
pub mod duality;
pub mod error;
pub mod filtered;
pub mod grid;
pub mod homology;
pub mod linalg;
pub mod progroup;
pub mod report;
pub mod scenes;

pub use cli::cli_main;
