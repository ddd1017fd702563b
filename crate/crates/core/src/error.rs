use thiserror::Error;

use crate::chart::ChartKind;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("coordinate index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("total degree {degree} exceeds the configured limit {limit}")]
    DegreeLimit { degree: u32, limit: u32 },

    #[error("non-finite input coordinate at position {0}")]
    NonFinite(usize),

    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown variable `{name}` on a {kind} chart with n = {n}")]
    UnknownVariable {
        name: String,
        kind: ChartKind,
        n: usize,
    },

    #[error("{operation} is not defined on a {kind} chart")]
    WrongChartKind {
        operation: &'static str,
        kind: ChartKind,
    },

    #[error("chart mismatch: {left} vs {right}")]
    ChartMismatch { left: String, right: String },

    #[error("invalid chart: {0}")]
    InvalidChart(String),

    #[error("invalid field spec: {0}")]
    InvalidFieldSpec(String),

    #[error("strict family requires a Hamiltonian without z-dependence")]
    NotStrict,

    #[error("integration failed at s = {last_time}: {reason}")]
    Integration { last_time: f64, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("linear system has no unique solution: {0}")]
    Singular(String),

    #[error("stability violation: {0}")]
    Stability(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, GeoError>;

impl From<std::io::Error> for GeoError {
    fn from(e: std::io::Error) -> Self {
        GeoError::Io(e.to_string())
    }
}
