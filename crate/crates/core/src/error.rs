use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("trace is {trace}, expected 1")]
    TraceNotUnit { trace: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("factor {factor} of local rotation is not unitary (residual {residual:.3e})")]
    NotUnitary { factor: char, residual: f64 },

    #[error("trace moment order {order} outside 1..={max}")]
    MomentOrder { order: usize, max: usize },

    #[error("Pauli index pair ({0}, {1}) outside the allowed range")]
    IndexOutOfRange(usize, usize),

    #[error("invalid measurement setting ({0}, {1}); both indices must be in 1..=3")]
    InvalidSetting(usize, usize),

    #[error("count record for setting ({0}, {1}) has zero total counts")]
    EmptyRecord(usize, usize),

    #[error("missing count records for settings {0:?}")]
    MissingSettings(Vec<(usize, usize)>),

    #[error("duplicate count record for setting ({0}, {1})")]
    DuplicateSetting(usize, usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("trace moments are inconsistent with a Hermitian spectrum (imaginary part {0:.3e})")]
    InconsistentMoments(f64),

    #[error("non-finite value while {0}")]
    NonFinite(&'static str),

    #[error("measurement oracle failed: {0}")]
    Oracle(String),

    #[error("{} invalid record(s): {}", .0.len(), format_record_errors(.0))]
    InvalidRecords(Vec<RecordError>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// A validation failure attached to the index of the offending record in a count file.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordError {
    pub index: usize,
    pub message: String,
}

fn format_record_errors(errors: &[RecordError]) -> String {
    errors
        .iter()
        .map(|e| format!("record {}: {}", e.index, e.message))
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
