use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate normal: |grad phi| = {0:e}")]
    DegenerateNormal(f64),
    #[error("point at distance {distance:e} from the surface is outside the extension band {band:e}")]
    OutsideBand { distance: f64, band: f64 },
    #[error("closest point is not unique at {0:?}")]
    AmbiguousProjection([f64; 3]),
    #[error("surface has no parametric chart")]
    UnsupportedSurface,
    #[error("surface is not homeomorphic to the sphere")]
    NotSphereHomeomorphic,
    #[error("count must be at least {min}, got {got}")]
    InvalidCount { got: usize, min: usize },
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("invalid network shape: {0}")]
    InvalidShape(String),
    #[error("loss is not finite ({0})")]
    NonFiniteLoss(f64),
    #[error("optimizer produced a non-finite parameter")]
    NonFiniteUpdate,
    #[error("training diverged: windowed median loss rose from {previous:e} to {current:e}")]
    Diverged { previous: f64, current: f64 },
    #[error("network has {heads} output heads but the tableau needs {expected}")]
    TableauMismatch { heads: usize, expected: usize },
    #[error("reference horizon must lie in (0, 1), got {0}")]
    InvalidReference(f64),
    #[error("stage count {0} unsupported: Gauss-Legendre tableaus are limited to 1 <= q <= 32 in f64")]
    StageCountUnsupported(usize),
    #[error("stage system is singular")]
    SingularStageSystem,
    #[error("problem has no exact solution")]
    NoExactSolution,
    #[error("reference norm vanishes (sum of squares {0:e})")]
    ZeroDenominator(f64),
    #[error("unknown problem `{0}`")]
    UnknownProblem(String),
    #[error("quadrature too coarse: halving the resolution moved a norm from {fine:e} to {coarse:e}")]
    QuadratureTooCoarse { fine: f64, coarse: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
