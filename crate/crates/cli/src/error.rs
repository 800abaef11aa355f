use std::path::Path;

use ecomplexity_core::Error as CoreError;

use crate::io::ParseError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad input data; exit code 1.
    #[error("{}", located(path, *line, message))]
    Input {
        path: String,
        line: Option<usize>,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("configuration: {0}")]
    Config(String),
    /// A computation refused its input; exit code 2.
    #[error("{0}")]
    Numerical(CoreError),
}

fn located(path: &str, line: Option<usize>, message: &str) -> String {
    match line {
        Some(l) => format!("{path}:{l}: {message}"),
        None => format!("{path}: {message}"),
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => 2,
            _ => 1,
        }
    }

    pub fn parse(path: &Path, err: ParseError) -> Self {
        CliError::Input {
            path: path.display().to_string(),
            line: err.line(),
            message: err.to_string(),
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn input(path: &Path, message: impl Into<String>) -> Self {
        CliError::Input {
            path: path.display().to_string(),
            line: None,
            message: message.into(),
        }
    }
}

/// Sorts core errors into "your data is wrong" and "the numbers refused".
impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidRecord(_)
            | CoreError::NoDataForYear(_)
            | CoreError::InvalidParameter(_)
            | CoreError::UnknownRegressor(_) => CliError::Config(e.to_string()),
            other => CliError::Numerical(other),
        }
    }
}
