use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dilation factor must be positive, got {0}")]
    NonPositiveDilation(f64),

    #[error("ball radius must be positive and finite, got {0}")]
    InvalidRadius(f64),

    #[error("non-finite coordinate in group point: {0:?}")]
    NonFinitePoint(Vec<f64>),

    #[error("unit-ball volume c1 has not been calibrated for {0}")]
    Uncalibrated(String),

    #[error("calibration resolution {0} is below the minimum of 32 per axis")]
    ResolutionTooSmall(usize),

    #[error("calibration by quadrature supports at most 4 coordinates, got {0}")]
    CalibrationDimension(usize),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("non-finite sample {value} at node {index} {coords:?}")]
    NonFiniteSample {
        index: usize,
        coords: Vec<f64>,
        value: f64,
    },

    #[error("region has zero measure")]
    ZeroMeasure,

    #[error("Young function argument must be nonnegative, got {0}")]
    NegativeArgument(f64),

    #[error("invalid Young function: {0}")]
    InvalidYoung(String),

    #[error("growth check range must span at least 6 decades with at least {min_samples} samples: {detail}")]
    GrowthRange { min_samples: usize, detail: String },

    #[error("prescribed inverse is not strictly increasing on [{lo:e}, {hi:e}]")]
    NonMonotonePrescription { lo: f64, hi: f64 },

    #[error("norm bisection did not converge within {iterations} steps, bracket [{lo:e}, {hi:e}]")]
    NoConvergence { iterations: usize, lo: f64, hi: f64 },

    #[error("invalid operator parameter: {0}")]
    InvalidParameter(String),

    #[error("node {index} {coords:?} is covered by no ball of the family")]
    NodeUncovered { index: usize, coords: Vec<f64> },

    #[error("ball family is empty")]
    EmptyFamily,

    #[error("ball {0} is not part of the family")]
    BallNotInFamily(String),

    #[error("{path}: row {row}: {message}")]
    FieldFormat {
        path: String,
        row: usize,
        message: String,
    },

    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
