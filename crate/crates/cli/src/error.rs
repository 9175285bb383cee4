use std::process::ExitCode;

/// Process exit status classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitKind {
    /// Bad arguments, unreadable or invalid configuration.
    Usage = 1,
    /// A run produced non-finite values.
    Diverged = 2,
    /// A verifier found a counterexample.
    Verification = 3,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    pub source: anyhow::Error,
}

impl CliError {
    pub fn usage(e: impl Into<anyhow::Error>) -> Self {
        Self { kind: ExitKind::Usage, source: e.into() }
    }

    pub fn diverged(e: impl Into<anyhow::Error>) -> Self {
        Self { kind: ExitKind::Diverged, source: e.into() }
    }

    pub fn verification(e: impl Into<anyhow::Error>) -> Self {
        Self { kind: ExitKind::Verification, source: e.into() }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.kind as u8)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.source)
    }
}

/// I/O and other unexpected failures count as usage errors.
impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        Self::usage(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::usage(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;
