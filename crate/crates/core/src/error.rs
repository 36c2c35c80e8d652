use thiserror::Error;

use crate::conflict_graph::VertexId;
use crate::geometry::{Coord, NetId, Point, SegmentId};
use crate::token_graph::TokenId;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GeometryError {
    #[error("rectangle bounds are inverted: ({x_lo}, {y_lo}) .. ({x_hi}, {y_hi})")]
    InvertedRect { x_lo: Coord, y_lo: Coord, x_hi: Coord, y_hi: Coord },
    #[error("wire half width must be at least 1, got {0}")]
    HalfWidth(Coord),
    #[error("wire endpoints {a} and {b} are not axis aligned")]
    Diagonal { a: Point, b: Point },
    #[error("spacing between layers {0} and {1} is undefined")]
    LayerMismatch(u8, u8),
    #[error("invalid spacing rules: sp_w = {sp_w}, sp_tp = {sp_tp}")]
    Rules { sp_w: Coord, sp_tp: Coord },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),
    #[error("unknown token {0}")]
    UnknownToken(TokenId),
    #[error("segment {0} is already in the conflict graph")]
    DuplicateSegment(SegmentId),
    #[error("self loop on vertex {0}")]
    SelfLoop(VertexId),
    #[error("no edge between {0} and {1}")]
    UnknownEdge(VertexId, VertexId),
    #[error("tokens {0} and {1} are not adjacent")]
    NotAdjacent(TokenId, TokenId),
    #[error("vertex {0} has no wire geometry")]
    NoGeometry(VertexId),
    #[error("cut positions {cuts:?} are not strictly inside ({lo}, {hi}) in increasing order")]
    BadCuts { cuts: Vec<Coord>, lo: Coord, hi: Coord },
    #[error("unknown net {0}")]
    UnknownNet(NetId),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StitchError {
    #[error("vertex {0} is not involved in any conflict")]
    NoConflict(VertexId),
    #[error("stitch plan for {0} is not solvable")]
    Unsolvable(VertexId),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("graph has {size} vertices, above the oracle bound of {bound}")]
    TooLarge { size: usize, bound: usize },
}

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: invalid JSON")]
    Json { line: usize, source: serde_json::Error },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
