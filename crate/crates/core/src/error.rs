use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised while building configurations, resolving presets or
/// assembling reports.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A field violates its invariant.
    #[error("invalid `{field}`: {message}")]
    Invalid { field: String, message: String },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown key `{key}` in {kind} config{}", hint_suffix(.suggestion))]
    UnknownKey {
        kind: String,
        key: String,
        suggestion: Option<String>,
    },

    #[error("unknown {category} preset `{name}`; available: {}", .available.join(", "))]
    UnknownPreset {
        category: &'static str,
        name: String,
        available: Vec<String>,
    },

    #[error("unknown output format `{0}` (expected json, csv or markdown)")]
    UnknownFormat(String),

    #[error("{0}")]
    Io(String),

    #[error(transparent)]
    Quant(#[from] crate::quant::QuantError),

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

fn hint_suffix(suggestion: &Option<String>) -> String {
    match suggestion {
        Some(s) => format!(" (did you mean `{s}`?)"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Process exit code for the CLI: 2 config/schema, 3 unknown preset,
    /// 4 internal invariant failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::UnknownPreset { .. } => 3,
            Error::Invariant(_) => 4,
            _ => 2,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        // serde_json prefixes position info in Display; keep the bare message.
        let msg = e.to_string();
        let message = match msg.rfind(" at line ") {
            Some(idx) => msg[..idx].to_string(),
            None => msg,
        };
        Error::Parse {
            line: e.line(),
            column: e.column(),
            message,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
