use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported model conversion from {from} to {to}")]
    UnsupportedConversion { from: &'static str, to: &'static str },
    #[error("point lies on the sphere at infinity and cannot be lifted")]
    PointAtInfinity,
    #[error("invalid point: {0}")]
    InvalidPoint(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("edge {edge:?} lies in {count} faces, expected 2")]
    NonManifoldEdge { edge: [usize; 2], count: usize },
    #[error("inconsistent face orientation at edge {edge:?}")]
    Orientation { edge: [usize; 2] },
    #[error("face {face}: {reason}")]
    BadFace { face: usize, reason: String },
    #[error("invalid coloring: {0}")]
    Coloring(String),
    #[error("ambient {ambient} does not match polyhedron model {model}")]
    AmbientMismatch { ambient: &'static str, model: &'static str },
    #[error("velocity field is not an infinitesimal isometric deformation (residual {0:.3e})")]
    NotAFlex(f64),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("gluing error: {0}")]
    Gluing(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("search failed: {0}")]
    SearchFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
