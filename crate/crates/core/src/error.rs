use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A configuration value is out of range. `key` names the offending field.
    #[error("invalid value for `{key}`: {reason}")]
    InvalidConfig { key: String, reason: String },

    #[error("class fractions yield {assigned} special nodes but the network only has {n_nodes}")]
    ClassCountOverflow { assigned: usize, n_nodes: usize },

    #[error("average energy estimate is {0} J while nodes are still alive")]
    NonPositiveAverageEnergy(f64),

    #[error("failed to parse config file {path}: {message}")]
    ConfigFile { path: PathBuf, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            key: key.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by user-supplied configuration.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig { .. }
                | Error::ClassCountOverflow { .. }
                | Error::ConfigFile { .. }
        )
    }
}
