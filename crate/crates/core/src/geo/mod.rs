//! Gridded evaluation: synthetic climate, latitude anchors, loaders, per-cell
//! evaluation and writers.

pub mod anchors;
pub mod eval;
pub mod io;
pub mod synthetic;
