use std::fmt;

/// Failure classes, each with its own process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Io,
    Config,
    Numeric,
    Data,
}

impl Kind {
    pub fn exit_code(self) -> i32 {
        match self {
            Kind::Io => 1,
            Kind::Config => 2,
            Kind::Numeric => 3,
            Kind::Data => 4,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub msg: String,
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError { kind: Kind::Config, msg: msg.into() }
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError { kind: Kind::Data, msg: msg.into() }
    }

    pub fn io(msg: impl Into<String>) -> Self {
        CliError { kind: Kind::Io, msg: msg.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = match self.kind {
            Kind::Io => "i/o error",
            Kind::Config => "config error",
            Kind::Numeric => "numeric failure",
            Kind::Data => "data error",
        };
        write!(f, "{label}: {}", self.msg)
    }
}

impl From<mtd_core::Error> for CliError {
    fn from(e: mtd_core::Error) -> Self {
        use mtd_core::Error as E;
        let kind = match &e {
            E::InvalidParameter(_) | E::Contract(_) | E::Unsupported(_) => Kind::Config,
            E::OutOfSupport(_) | E::Data(_) => Kind::Data,
            E::Numeric(_) => Kind::Numeric,
        };
        CliError { kind, msg: e.to_string() }
    }
}

pub type CliResult<T> = Result<T, CliError>;
