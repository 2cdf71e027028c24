//! Error type shared by every module in the crate.

/// Crate-wide error type.
///
/// Variants are grouped the way callers need to react to them: configuration
/// and parameter problems, data/ingestion problems, and model-state problems
/// (contract violations, SoC bounds, infeasible EV sessions).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A CSV cell is missing or cannot be parsed, or a parsed value violates
    /// a series invariant. `row` is the zero-based data-row index.
    #[error("{path}: row {row}, column `{column}`: {reason}")]
    Ingestion {
        path: String,
        row: usize,
        column: String,
        reason: String,
    },

    /// Timestamps in an input file are not uniformly spaced.
    #[error("{path}: non-uniform timestamps at row {row}: expected minute {expected}, found {found}")]
    TimestampGap {
        path: String,
        row: usize,
        expected: i64,
        found: i64,
    },

    /// A function argument is outside its documented domain.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// A caller broke an API precondition (e.g. charging and discharging the
    /// battery in the same step).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A battery step would push the state of charge past a configured bound.
    #[error("battery SoC would cross the {bound} bound: {soc_pct:.6}% vs limit {limit_pct:.6}%")]
    SocBounds {
        bound: &'static str,
        soc_pct: f64,
        limit_pct: f64,
    },

    /// Not enough samples for the requested operation.
    #[error("insufficient data for {what}: need at least {required} samples, got {actual}")]
    Data {
        what: &'static str,
        required: usize,
        actual: usize,
    },

    /// An EV session cannot reach its target SoC by departure.
    #[error("ev session (arrival {arrival_min} min, departure {departure_min} min) infeasible: {reason}")]
    EvInfeasible {
        arrival_min: u32,
        departure_min: u32,
        reason: String,
    },

    /// Filesystem error, tagged with the offending path.
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// A configuration file or field is invalid.
    #[error("config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    /// An error raised while stepping a scenario, tagged with the step index.
    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Walks through [`Error::AtStep`] wrappers to the underlying error.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtStep { source, .. } => source.root(),
            other => other,
        }
    }

    pub(crate) fn at_step(step: usize) -> impl FnOnce(Error) -> Error {
        move |source| Error::AtStep {
            step,
            source: Box::new(source),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
