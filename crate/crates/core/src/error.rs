use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid point ({x}, {y}, {z}): height must be positive and all coordinates finite")]
    InvalidPoint { x: f64, y: f64, z: f64 },

    #[error("dilation factor must be positive and finite, got {0}")]
    InvalidDilation(f64),

    #[error("determinant {det} differs from 1 by more than {tolerance}")]
    Determinant { det: String, tolerance: f64 },

    #[error("degenerate Möbius evaluation: {0}")]
    DegenerateTransform(String),

    #[error("lattice level {level} outside the representable bound {bound}")]
    LevelOverflow { level: i64, bound: i64 },

    #[error("integer overflow while acting on lattice indices")]
    IndexOverflow,

    #[error("window of {requested} points exceeds the budget of {budget}")]
    BudgetExceeded { requested: u64, budget: u64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point cloud needs at least {needed} points, has {actual}")]
    TooFewPoints { needed: usize, actual: usize },

    #[error("duplicate point at indices {first} and {second}")]
    DuplicatePoint { first: usize, second: usize },

    #[error("cardinality mismatch: {left} vs {right}")]
    CardinalityMismatch { left: usize, right: usize },

    #[error("zero distance between distinct points {0} and {1}")]
    ZeroDistance(usize, usize),

    #[error("no perfect matching at the largest threshold")]
    NoPerfectMatching,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid action: {0}")]
    InvalidAction(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("generator {index} (line {line}) has determinant {det}, outside tolerance {tolerance}")]
    GeneratorDeterminant {
        index: usize,
        line: usize,
        det: String,
        tolerance: f64,
    },

    #[error("disconnected graph metric: {0}")]
    Disconnected(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
