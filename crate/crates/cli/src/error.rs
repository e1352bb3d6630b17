use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Core(#[from] naeq_core::Error),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    /// 2 for configuration problems, 3 for solver failures, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        use naeq_core::Error as E;
        match self {
            CliError::Parse { .. } | CliError::Config { .. } => 2,
            CliError::Core(E::InvalidParameter(_) | E::OutOfDomain { .. } | E::AuditFailed(_)) => 2,
            CliError::Core(_) => 3,
            CliError::Io { .. } => 1,
        }
    }
}
