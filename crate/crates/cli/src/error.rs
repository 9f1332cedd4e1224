use thiserror::Error;

/// Pipeline failure, mapped one-to-one onto the process exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numeric invariant violated: {invariant}: {detail}")]
    Numeric {
        invariant: &'static str,
        detail: String,
    },
    #[error("cannot write {path}: {source}")]
    Output {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) | CliError::Output { .. } => 2,
            CliError::Numeric { .. } => 3,
        }
    }

    pub(crate) fn numeric(invariant: &'static str, detail: impl Into<String>) -> Self {
        CliError::Numeric {
            invariant,
            detail: detail.into(),
        }
    }
}
