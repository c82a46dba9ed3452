use thiserror::Error;

/// Crate-wide error type. Variants map onto the failure classes the CLI
/// turns into exit codes: `Numeric` means training/gradient divergence,
/// everything else is an input, format or configuration problem.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{context}: dimension mismatch: {lhs_rows}x{lhs_cols} vs {rhs_rows}x{rhs_cols}")]
    Shape {
        context: String,
        lhs_rows: usize,
        lhs_cols: usize,
        rhs_rows: usize,
        rhs_cols: usize,
    },

    #[error("numeric error in {context}: {detail}")]
    Numeric { context: String, detail: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("label error: {0}")]
    Label(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("input too short: {0}")]
    InputTooShort(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn shape(context: &str, lhs: (usize, usize), rhs: (usize, usize)) -> Self {
        Error::Shape {
            context: context.to_string(),
            lhs_rows: lhs.0,
            lhs_cols: lhs.1,
            rhs_rows: rhs.0,
            rhs_cols: rhs.1,
        }
    }

    pub fn numeric(context: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Numeric {
            context: context.into(),
            detail: detail.into(),
        }
    }

    /// True for failures of the numeric kind (non-finite loss or gradient),
    /// which the CLI reports with a dedicated exit code.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Numeric { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
