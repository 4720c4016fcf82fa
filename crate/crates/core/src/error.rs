use thiserror::Error;

/// Errors raised by the solver and its helpers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("singular point: {0}")]
    SingularPoint(String),

    #[error("unsupported dimension {0}; only n = 2 and n = 3 are implemented")]
    UnsupportedDimension(usize),

    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("Ewald sums did not reach tolerance {target:e} (achieved {achieved:e})")]
    KernelAccuracy { target: f64, achieved: f64 },

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("invalid source: {0}")]
    InvalidSource(String),

    #[error("hole leaves the periodicity cell at node {node} (margin {margin:e})")]
    Containment { node: usize, margin: f64 },

    #[error("target point lies {distance:e} from the boundary, too close for quadrature")]
    NearBoundary { distance: f64 },

    #[error("point lies inside the hole: {0}")]
    InsideHole(String),

    #[error("linear system is singular at pivot {0}")]
    SingularMatrix(usize),

    #[error("ill-conditioned system (condition estimate {0:e})")]
    IllConditioned(f64),

    #[error("boundary residual {residual:e} exceeds {tolerance:e} with N = {nodes}")]
    Accuracy {
        residual: f64,
        tolerance: f64,
        nodes: usize,
    },

    #[error("degenerate integral equation: {0}")]
    Degenerate(String),

    #[error("inconsistent limiting data: {0}")]
    Inconsistent(String),

    #[error("normal derivative extrapolation failed: {0}")]
    DerivativeAccuracy(String),

    #[error("degenerate sweep: {0}")]
    DegenerateSweep(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("solve failed at eps = {eps}: {source}")]
    SweepPoint {
        eps: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
