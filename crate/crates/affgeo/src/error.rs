use thiserror::Error;

/// Errors shared by all layers of the library.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Evaluation left the analytic domain of a program (log of a
    /// non-positive number, division by zero, fractional power of a
    /// negative base, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature exhausted its budget before certifying the
    /// requested tolerance.
    #[error("quadrature error: {0}")]
    Quadrature(String),

    /// A metric that must be positive definite failed the Cholesky test.
    #[error("singular metric: {0}")]
    SingularMetric(String),

    /// Hessian of a graph function is not positive definite at the point.
    #[error("non-convex: {0}")]
    NonConvex(String),

    /// The moving frame of an immersion is (numerically) degenerate.
    #[error("degenerate frame: {0}")]
    DegenerateFrame(String),

    /// Neither sign of the position coefficient is definite, so the
    /// centroaffine type cannot be resolved.
    #[error("indefinite centroaffine type: {0}")]
    IndefiniteType(String),

    /// The support quantity f - sum x_i f_i vanishes; the centroaffine
    /// normalization of the graph breaks down.
    #[error("zero support: {0}")]
    ZeroSupport(String),

    /// The cubic form vanishes, so the extremal frame is undefined.
    #[error("zero cubic form: {0}")]
    ZeroCubicForm(String),

    /// A variational operation was asked for on a graph that does not
    /// satisfy the maximality equation on the requested domain.
    #[error("not maximal: {0}")]
    NotMaximal(String),

    /// Variation/comparison data violates the boundary conditions.
    #[error("boundary violation: {0}")]
    BoundaryViolation(String),

    /// Step-size underflow in the geodesic integrator.
    #[error("step failure: {0}")]
    StepFailure(String),

    /// Catalog lookup for an id that does not exist.
    #[error("unknown surface: {0}")]
    UnknownSurface(String),

    /// Expression or catalog file could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
