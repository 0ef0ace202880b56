use thiserror::Error;

/// Errors raised by the model, data loaders and calculators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    /// A scalar argument is outside the domain of the operation.
    #[error("{param} = {value} is out of domain: {reason}")]
    Domain {
        param: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// East-West pricing needs inputs at or above the diurnal minimum.
    #[error("east-west floor violated: {what} = {value} is below the diurnal minimum {floor}")]
    DiurnalFloor {
        what: &'static str,
        value: f64,
        floor: f64,
    },

    /// The site cannot be evaluated by the model (e.g. polar night, |lat| > 55).
    #[error("outside model domain: {0}")]
    OutsideDomain(String),

    /// Invalid technology table or scenario column.
    #[error("technology table: {0}")]
    Table(String),

    /// Invalid transmission specification.
    #[error("transmission spec: {0}")]
    Transmission(String),

    /// No feasible generation/storage pair found.
    #[error("no feasible generation/storage pair: {0}")]
    Infeasible(String),

    /// Malformed input data.
    #[error("data: {0}")]
    Data(String),

    #[error("io error at {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, ModelError>;

pub(crate) fn require(
    ok: bool,
    param: &'static str,
    value: f64,
    reason: &'static str,
) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(ModelError::Domain {
            param,
            value,
            reason,
        })
    }
}

pub(crate) fn io_err(path: &std::path::Path, err: impl std::fmt::Display) -> ModelError {
    ModelError::Io {
        path: path.display().to_string(),
        message: err.to_string(),
    }
}
