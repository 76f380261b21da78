use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at {line}:{column}: {message}")]
    Config { line: usize, column: usize, message: String },

    #[error(transparent)]
    Core(#[from] tfio::Error),

    #[error("{0}")]
    Usage(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}
