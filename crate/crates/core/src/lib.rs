//! Triple patterning aware routing built on a token graph.

pub mod coloring;
pub mod conflict_graph;
pub mod error;
pub mod format;
pub mod gen;
pub mod geometry;
pub mod router;
pub mod spatial;
pub mod stitcher;
pub mod tecg;
pub mod token_graph;
