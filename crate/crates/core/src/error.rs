//! Crate-wide error type.
//!
//! Every fallible operation returns [`Result`]. Variants are grouped by
//! the stage that raises them; payloads carry enough context to report
//! the failure without re-running the computation.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Numerator and denominator both vanish at the evaluation point.
    #[error("indeterminate form at evaluation point: {0}")]
    IndeterminateForm(String),

    /// Polynomial root finding failed to converge.
    #[error("root finding failed: {0}")]
    RootFindingFailure(String),

    /// Input data fails a structural precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A graph violates an embedding invariant (Euler count, crossing
    /// edges, disconnectedness, malformed rotation system, ...).
    #[error("embedding inconsistent: {0}")]
    EmbeddingInconsistent(String),

    /// A lifted edge passes within the clearance radius of a critical
    /// value, so branches of the inverse cannot be separated.
    #[error("edge {edge} passes within {clearance:e} of critical value {value}")]
    CriticalValueOnEdge {
        edge: usize,
        value: String,
        clearance: f64,
    },

    /// A face of the pulled-back graph near the target graph is too
    /// large for isotopic extraction; increase the pullback depth.
    #[error("neighbourhood too coarse: {0}")]
    NeighbourhoodTooCoarse(String),

    /// No admissible routing of the target graph inside the pulled-back
    /// graph was found.
    #[error("routing failure: {0}")]
    RoutingFailure(String),

    /// An iteration exceeded its budget or its residuals stopped
    /// contracting.
    #[error("no convergence after {iterations} iterations: {message}")]
    NonConvergence { iterations: usize, message: String },

    /// A size cap (edge count, subdivision depth, ...) was hit.
    #[error("resource limit: {0}")]
    ResourceLimit(String),

    /// Two pulled-back arcs overlap along a sub-arc instead of crossing
    /// transversally, so their union is not a finite graph.
    #[error("infinite intersection: {0}")]
    InfiniteIntersection(String),

    /// The graph is not invariant within tolerance.
    #[error("graph not invariant: residual {residual:e} exceeds {tolerance:e}")]
    NotInvariant { residual: f64, tolerance: f64 },

    /// A component of a pulled-back piece straddles partition pieces.
    #[error("Markov property violated for piece {piece}: {message}")]
    MarkovViolation { piece: usize, message: String },

    /// Forward tracing of an edge could not be classified against the
    /// graph.
    #[error("trace ambiguous: {0}")]
    TraceAmbiguous(String),

    /// The transition matrix is reducible; payload lists the strongly
    /// connected components of its digraph.
    #[error("matrix reducible; strongly connected components: {components:?}")]
    Reducible { components: Vec<Vec<usize>> },

    /// A symbol sequence violates the transition matrix.
    #[error("inadmissible address at position {position}: no transition {from} -> {to}")]
    Inadmissible {
        position: usize,
        from: usize,
        to: usize,
    },

    /// Two interval systems have different incidence structure, so no
    /// branchwise conjugacy exists.
    #[error("incidence mismatch: {0}")]
    IncidenceMismatch(String),

    /// The projection pole lies on the graph being rendered.
    #[error("projection pole lies on the graph")]
    ProjectionPoleOnGraph,

    /// Parameter continuation left the region where the invariant graph
    /// persists in its isotopy class.
    #[error("left existence set at parameter {parameter} (step floor {floor:e})")]
    LeftExistenceSet { parameter: String, floor: f64 },

    /// A refinement level of a cell address could not be computed.
    #[error("cell depth {level} unreachable: {message}")]
    DepthUnreachable { level: usize, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}
