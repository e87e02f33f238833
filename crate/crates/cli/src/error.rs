use nilwalk::Error;

/// An error with its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DOMAIN: u8 = 2;
pub const EXIT_RESOURCE: u8 = 3;
pub const EXIT_NO_STRUCTURE: u8 = 4;

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError { code: EXIT_DOMAIN, message: msg.into() }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError { code: EXIT_USAGE, message: msg.into() }
    }

    pub fn prefix(self, p: impl std::fmt::Display) -> Self {
        CliError { code: self.code, message: format!("{p}: {}", self.message) }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Resource { .. } => EXIT_RESOURCE,
            Error::NoFlatSegment { .. } | Error::NoStabilization { .. } | Error::NoStructure(_) => EXIT_NO_STRUCTURE,
            Error::Domain(_) | Error::Unsupported(_) | Error::ExceedsLambdaMax(_) => EXIT_DOMAIN,
        };
        CliError { code, message: e.to_string() }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}
