use std::fmt;

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Other = 1,
    Usage = 2,
    Io = 3,
    Format = 4,
    Config = 5,
    Schema = 6,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    pub message: String,
}

impl CliError {
    pub fn new(kind: ExitKind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

fn kind_of_core(e: &hybrid_mips::Error) -> ExitKind {
    use hybrid_mips::Error as E;
    match e {
        E::Io(_) => ExitKind::Io,
        E::BadMagic { .. } | E::VersionMismatch { .. } | E::Truncated(_) | E::Corrupt { .. } => ExitKind::Format,
        E::InvalidConfig(_) => ExitKind::Config,
        E::DimensionMismatch { .. } | E::DimensionOutOfRange { .. } => ExitKind::Schema,
        _ => ExitKind::Other,
    }
}

/// Picks the exit code for the innermost recognized error in the chain.
pub fn classify(e: &anyhow::Error) -> ExitKind {
    for cause in e.chain() {
        if let Some(c) = cause.downcast_ref::<CliError>() {
            return c.kind;
        }
        if let Some(c) = cause.downcast_ref::<hybrid_mips::Error>() {
            return kind_of_core(c);
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return ExitKind::Io;
        }
    }
    ExitKind::Other
}
