use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("face {face} references vertex {index}, but the mesh has {count} vertices")]
    IndexOutOfRange { face: usize, index: usize, count: usize },

    #[error("a closed mesh needs at least 4 vertices, got {0}")]
    TooFewVertices(usize),

    #[error("edge ({a}, {b}) is shared by {count} faces, expected 2")]
    NonManifoldEdge { a: usize, b: usize, count: usize },

    #[error("faces around vertex {0} do not form a single fan")]
    NonManifoldVertex(usize),

    #[error("edge ({a}, {b}) is traversed in the same direction by both incident faces")]
    InconsistentOrientation { a: usize, b: usize },

    #[error("face {0} is degenerate")]
    DegenerateFace(usize),

    #[error("vertex {0} is not referenced by any face")]
    UnreferencedVertex(usize),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("barycentric point ({u}, {v}) lies outside the reference triangle")]
    Domain { u: f64, v: f64 },

    #[error("surface frame is singular on face {face} (area element {jacobian:e})")]
    SingularFrame { face: usize, jacobian: f64 },

    #[error("no triangle quadrature rule of degree {0}")]
    UnsupportedDegree(usize),

    #[error("eigensolver failed: {0}")]
    EigensolverFailure(String),

    #[error("mass matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("basis was built for {expected} vertices, mesh has {found}")]
    BasisMeshMismatch { expected: usize, found: usize },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("quadrature breakdown on face {face}: {msg}")]
    QuadratureBreakdown { face: usize, msg: String },

    #[error("system matrix is singular (condition estimate {condition:e})")]
    SingularMatrix { condition: f64 },

    #[error("direction sets differ: {0}")]
    DirectionMismatch(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("no voxel passes threshold {0}")]
    EmptySelection(f64),

    #[error("isosurface touches the grid boundary and is not closed")]
    IsosurfaceOpen,

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    /// Short machine-readable kind name used by the command line front end.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::TooFewVertices(_) => "TooFewVertices",
            Error::NonManifoldEdge { .. } => "NonManifoldEdge",
            Error::NonManifoldVertex(_) => "NonManifoldVertex",
            Error::InconsistentOrientation { .. } => "InconsistentOrientation",
            Error::DegenerateFace(_) => "DegenerateFace",
            Error::UnreferencedVertex(_) => "UnreferencedVertex",
            Error::Parse { .. } => "ParseError",
            Error::Io(_) => "IoError",
            Error::Domain { .. } => "DomainError",
            Error::SingularFrame { .. } => "SingularFrame",
            Error::UnsupportedDegree(_) => "UnsupportedDegree",
            Error::EigensolverFailure(_) => "EigensolverFailure",
            Error::NotPositiveDefinite => "NotPositiveDefinite",
            Error::BasisMeshMismatch { .. } => "BasisMeshMismatch",
            Error::DegenerateGeometry(_) => "DegenerateGeometry",
            Error::QuadratureBreakdown { .. } => "QuadratureBreakdown",
            Error::SingularMatrix { .. } => "SingularMatrix",
            Error::DirectionMismatch(_) => "DirectionMismatch",
            Error::InsufficientData(_) => "InsufficientData",
            Error::EmptySelection(_) => "EmptySelection",
            Error::IsosurfaceOpen => "IsosurfaceOpen",
            Error::Validation(_) => "ValidationError",
            Error::Config(_) => "ConfigError",
        }
    }

    /// True for errors caused by malformed or invalid input (as opposed to
    /// numerical failures during a computation).
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::IndexOutOfRange { .. }
                | Error::TooFewVertices(_)
                | Error::NonManifoldEdge { .. }
                | Error::NonManifoldVertex(_)
                | Error::InconsistentOrientation { .. }
                | Error::DegenerateFace(_)
                | Error::UnreferencedVertex(_)
                | Error::Parse { .. }
                | Error::Io(_)
                | Error::Domain { .. }
                | Error::BasisMeshMismatch { .. }
                | Error::DirectionMismatch(_)
                | Error::Validation(_)
                | Error::Config(_)
                | Error::UnsupportedDegree(_)
        )
    }
}
