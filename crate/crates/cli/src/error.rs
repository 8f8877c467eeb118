use std::fmt;

/// Error carrying the process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

pub const EXIT_PARSE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_NO_IMPROVEMENT: i32 = 4;
pub const EXIT_IO: i32 = 1;

impl CliError {
    pub fn parse(message: impl Into<String>) -> Self {
        Self { code: EXIT_PARSE, message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self { code: EXIT_IO, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<walsh_filter::Error> for CliError {
    fn from(e: walsh_filter::Error) -> Self {
        use walsh_filter::Error::*;
        let code = match e {
            InvalidArgument(_) | TooLarge { .. } | ZeroDuration { .. } | EmptyParameterSet => EXIT_PARSE,
            NonFinite(_) | NoSignChange { .. } | StepTooCoarse { .. } => EXIT_NUMERIC,
            NoImprovement => EXIT_NO_IMPROVEMENT,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::io(e.to_string())
    }
}
