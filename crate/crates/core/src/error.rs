use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormError {
    #[error("matrix forms have ranks {left} and {right}")]
    RankMismatch { left: usize, right: usize },
    #[error("matrix form entries have degree {found}, expected {expected}")]
    MixedDegree { expected: usize, found: usize },
    #[error("rank {rank} matrix form needs {} entries, got {found}", rank * rank)]
    EntryCount { rank: usize, found: usize },
    #[error("matrix form rank must be at least 1")]
    ZeroRank,
    #[error("basis tuple ({0}) is not strictly increasing")]
    NotIncreasing(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{message} at column {column}")]
pub struct ParseError {
    pub message: String,
    /// 1-based column in the expression text.
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("log of nonpositive real {0}")]
    LogDomain(f64),
    #[error("non-finite value")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("entry h{}{} failed to evaluate at {point:?}: {source}", .entry.0 + 1, .entry.1 + 1)]
    Evaluation {
        entry: (usize, usize),
        point: [f64; 4],
        source: EvalError,
    },
    #[error("stencil at {point:?} leaves the patch along axis {axis}")]
    Stencil { point: [f64; 4], axis: usize },
    #[error("rank {rank} metric needs {} entries, got {found}", rank * rank)]
    Shape { rank: usize, found: usize },
    #[error("metric rank must be at least 1")]
    ZeroRank,
    #[error("component ({0}, {1}) is outside a rank {2} metric")]
    Component(usize, usize, usize),
    #[error("diagonal entry h{0}{0} is missing")]
    MissingDiagonal(usize),
    #[error("metric is not Hermitian at {point:?} (deviation {deviation:e})")]
    NotHermitian { point: [f64; 4], deviation: f64 },
    #[error("metric is not positive definite at {point:?} (leading minor {minor} = {value:e})")]
    NotPositiveDefinite {
        point: [f64; 4],
        minor: usize,
        value: f64,
    },
    #[error("invalid patch: {0}")]
    Patch(String),
    #[error("grid has no points")]
    EmptyGrid,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurvatureError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("metric matrix is ill-conditioned at {point:?} (condition number {condition:e})")]
    IllConditioned { point: [f64; 4], condition: f64 },
    #[error("{failed} of {total} sample points failed (first: {first})")]
    TooManyFailures {
        failed: usize,
        total: usize,
        first: String,
    },
    #[error("grid resolution {0} is below 2")]
    Resolution(usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LatticeError {
    #[error("intersection matrix is not square ({rows} rows, row of length {cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("intersection matrix is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),
    #[error("intersection form has {0} positive eigenvalues, expected exactly one")]
    Signature(usize),
    #[error("class has length {found}, form has dimension {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("class is not in the positive cone: {0}")]
    NotInPositiveCone(String),
    #[error("sheaf rank must be nonzero")]
    ZeroRank,
    #[error("ample sample list is empty")]
    NoAmpleSamples,
    #[error("ample sample {0} does not have positive square")]
    NonAmpleSample(usize),
    #[error("invalid bound query: {0}")]
    BoundQuery(String),
    #[error("class-valued discriminant pairing needs a surface (n = 2), got n = {0}")]
    UnsupportedDimension(u32),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FamilyError {
    #[error("family has no fibers")]
    Empty,
    #[error("duplicate fiber parameter {0}")]
    DuplicateFiber(String),
    #[error("constant-curve family has differing fibers: {0}")]
    NotConstant(String),
    #[error("fibers without an assigned point: {0:?}")]
    Incomplete(Vec<String>),
    #[error("fibers assigned to unstable points: {0:?}")]
    Unstable(Vec<String>),
    #[error("assignment names unknown fibers: {0:?}")]
    UnknownFiber(Vec<String>),
    #[error("operation needs a constant-curve family, got {0}")]
    WrongMode(String),
    #[error("fibers exceed the singularity threshold {threshold}: {fibers:?}")]
    TooSingular { threshold: u32, fibers: Vec<String> },
}
