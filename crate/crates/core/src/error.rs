use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CrbError {
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("singular geometry: {0}")]
    SingularGeometry(String),

    #[error("numeric domain error: {0}")]
    NumericDomain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("finite-difference step too large: {0}")]
    StepTooLarge(String),

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CrbError {
    /// True for errors caused by user input (bad layout, bad config file).
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            CrbError::InvalidConfiguration(_) | CrbError::ConfigParse(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, CrbError>;
