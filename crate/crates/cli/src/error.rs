use thiserror::Error;

/// Failures surfaced by the command line, split by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments, configuration or input files: exit code 2.
    #[error("configuration error: {0}")]
    Config(String),

    /// A numerical stage failed: exit code 1.
    #[error("{stage} failed: {source}")]
    Numeric {
        stage: String,
        #[source]
        source: hermanlab::Error,
    },

    /// Stages that ran but did not pass their checks: exit code 1.
    #[error("checks failed: {0}")]
    Checks(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn numeric(stage: impl Into<String>, source: hermanlab::Error) -> Self {
        CliError::Numeric { stage: stage.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric { .. } | CliError::Checks(_) | CliError::Io(_) => 1,
        }
    }
}

/// Tags numeric errors with the stage they came from.
pub trait Stage<T> {
    fn stage(self, name: &str) -> Result<T, CliError>;
}

impl<T> Stage<T> for hermanlab::Result<T> {
    fn stage(self, name: &str) -> Result<T, CliError> {
        self.map_err(|e| CliError::numeric(name, e))
    }
}
