use thiserror::Error;

/// Process exit statuses, one per error class.
pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const CALIBRATION: i32 = 3;
    pub const VERIFICATION: i32 = 4;
    pub const INFEASIBLE: i32 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Clap(#[from] clap::Error),

    #[error("usage: {0}")]
    Usage(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: ontolab::Error,
    },

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn core(context: impl Into<String>) -> impl FnOnce(ontolab::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Core { context, source }
    }

    pub fn exit_code(&self) -> i32 {
        use ontolab::Error as E;
        match self {
            CliError::Clap(e) => match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => exit::OK,
                _ => exit::USAGE,
            },
            CliError::Usage(_) => exit::USAGE,
            CliError::Io { .. } | CliError::Csv(_) => exit::IO,
            CliError::Verification(_) => exit::VERIFICATION,
            CliError::Core { source, .. } => match source {
                E::InvalidInput(_) => exit::USAGE,
                E::UnreachableCorrelation { .. } | E::Consistency { .. } => exit::CALIBRATION,
                E::UndefinedConditional { .. } => exit::CALIBRATION,
                E::InfeasibleVariance { .. } | E::Infeasible(_) => exit::INFEASIBLE,
                E::Decode(_) => exit::IO,
            },
        }
    }
}
