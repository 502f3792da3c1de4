use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("series is empty")]
    EmptySeries,

    #[error("invalid sampling interval: {0} s")]
    InvalidInterval(i64),

    #[error("sampling interval mismatch: {left} s vs {right} s")]
    IntervalMismatch { left: u32, right: u32 },

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("negative occupancy {value} at index {index}")]
    NegativeOccupancy { index: usize, value: f64 },

    #[error("gap of {len} samples at index {start} exceeds max gap {max}")]
    GapTooLong {
        start: usize,
        len: usize,
        max: usize,
    },

    #[error("missing value at series {0} cannot be interpolated")]
    UnboundedGap(&'static str),

    #[error("lag {lag} leaves no aligned samples for series of length {len}")]
    LagTooLarge { lag: usize, len: usize },

    #[error("invalid room geometry: {0}")]
    InvalidGeometry(String),

    #[error("co2 values have no variance; the regression line is undefined")]
    NoVariance,

    #[error("occupancy is constant; range normalisation is undefined")]
    ConstantOccupancy,

    #[error("line fit failed at lag {lag}: {source}")]
    LagFit {
        lag: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("series too short: need {needed} samples, got {got}")]
    SeriesTooShort { needed: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("loess neighbourhood around x = {0} is degenerate")]
    DegenerateNeighborhood(f64),

    #[error("input has zero variance")]
    ZeroVariance,

    #[error("design matrix is singular (collinear terms)")]
    Collinear,

    #[error("no repeating pattern found in seasonal component")]
    Aperiodic,

    #[error("no vacant interval common to every observed day")]
    NoVacantWindow,

    #[error("insufficient history: {0}")]
    InsufficientHistory(String),

    #[error("unknown preset '{0}'")]
    UnknownPreset(String),

    #[error("integration step {step} s too coarse for flow/volume ratio {rate} 1/s")]
    UnstableStep { step: f64, rate: f64 },

    #[error("line {line}: {msg}")]
    Schema { line: usize, msg: String },

    #[error("line {line}: timestamp is not strictly increasing")]
    NonMonotone { line: usize },

    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("model file line {line}: {msg}")]
    ModelFormat { line: usize, msg: String },

    #[error("training failed at stage '{stage}': {source}")]
    Training {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn at_stage(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |e| Error::Training {
            stage,
            source: Box::new(e),
        }
    }

    /// True for errors caused by malformed input rather than by a failed fit.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::EmptySeries
                | Error::InvalidInterval(_)
                | Error::IntervalMismatch { .. }
                | Error::NonFinite(_)
                | Error::NegativeOccupancy { .. }
                | Error::GapTooLong { .. }
                | Error::UnboundedGap(_)
                | Error::InvalidGeometry(_)
                | Error::InvalidParameter(_)
                | Error::UnknownPreset(_)
                | Error::Schema { .. }
                | Error::NonMonotone { .. }
                | Error::ModelFormat { .. }
                | Error::Config { .. }
                | Error::Io(_)
                | Error::Csv(_)
        )
    }
}
