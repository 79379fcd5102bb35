use serde::Serialize;

/// Failure of a CLI invocation, mapped onto the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error in `{field}`: {message}")]
    Config {
        field: String,
        message: String,
        line: Option<usize>,
        column: Option<usize>,
    },

    #[error("run diverged at t = {time} after {steps_completed} steps")]
    Diverged { time: f64, steps_completed: usize },

    #[error("{count} inequality trials exceeded the unit constant")]
    Violation { count: usize },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] nsch_core::Error),
}

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;
pub const EXIT_VIOLATION: i32 = 4;

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    field: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    column: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    steps_completed: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    violations: Option<usize>,
}

impl CliError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Config {
            field: field.into(),
            message: message.into(),
            line: None,
            column: None,
        }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } => EXIT_CONFIG,
            Self::Diverged { .. } => EXIT_DIVERGED,
            Self::Violation { .. } => EXIT_VIOLATION,
            Self::Io { .. } | Self::Core(_) => EXIT_FAILURE,
        }
    }

    /// `{"error": {...}}` with the kind and whatever location data applies.
    pub fn to_json(&self) -> serde_json::Value {
        let mut body = ErrorBody {
            kind: "",
            message: self.to_string(),
            field: None,
            line: None,
            column: None,
            time: None,
            steps_completed: None,
            violations: None,
        };
        match self {
            Self::Config {
                field,
                message,
                line,
                column,
            } => {
                body.kind = "config";
                body.message = message.clone();
                body.field = Some(field);
                body.line = *line;
                body.column = *column;
            }
            Self::Diverged { time, steps_completed } => {
                body.kind = "diverged";
                body.time = Some(*time);
                body.steps_completed = Some(*steps_completed);
            }
            Self::Violation { count } => {
                body.kind = "inequality_violation";
                body.violations = Some(*count);
            }
            Self::Io { .. } => body.kind = "io",
            Self::Core(_) => body.kind = "runtime",
        }
        serde_json::json!({ "error": body })
    }
}

impl From<nsch_core::integrator::IntegrateError> for CliError {
    fn from(e: nsch_core::integrator::IntegrateError) -> Self {
        match e.source {
            nsch_core::Error::StepDiverged { time } => Self::Diverged {
                time,
                steps_completed: e.steps_completed,
            },
            other => Self::Core(other),
        }
    }
}
