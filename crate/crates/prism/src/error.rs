use std::fmt;

use thiserror::Error;

use crate::ast::{ConstKind, Span};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("{line}:{col}: syntax error: {message}")]
    Syntax { line: u32, col: u32, message: String },
    #[error("{line}:{col}: unsupported construct `{name}`")]
    UnsupportedConstruct { name: String, line: u32, col: u32 },
}

impl ParseError {
    pub(crate) fn syntax(span: Span, message: impl Into<String>) -> Self {
        ParseError::Syntax {
            line: span.line,
            col: span.col,
            message: message.into(),
        }
    }

    pub(crate) fn unsupported(span: Span, name: impl Into<String>) -> Self {
        ParseError::UnsupportedConstruct {
            name: name.into(),
            line: span.line,
            col: span.col,
        }
    }

    pub fn span(&self) -> Span {
        match self {
            ParseError::Syntax { line, col, .. } | ParseError::UnsupportedConstruct { line, col, .. } => {
                Span::new(*line, *col)
            }
        }
    }

    /// `file:line:col: error: message`
    pub fn render(&self, file: &str) -> String {
        let span = self.span();
        let message = match self {
            ParseError::Syntax { message, .. } => message.clone(),
            ParseError::UnsupportedConstruct { name, .. } => format!("unsupported construct `{name}`"),
        };
        format!("{file}:{}:{}: error: {message}", span.line, span.col)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BindError {
    #[error("unknown constant `{0}`")]
    UnknownConstant(String),
    #[error("constant `{name}` is {expected} but was bound to {found}")]
    KindMismatch {
        name: String,
        expected: ConstKind,
        found: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Severity::Warning => f.write_str("warning"),
            Severity::Error => f.write_str("error"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosticKind {
    NameClash,
    UnresolvedName,
    TypeMismatch,
    RangeViolation,
    InvalidRange,
    ForeignAssignment,
    UnboundDouble,
    NoModules,
    ProbabilitySum,
    NegativeReward,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub span: Span,
    pub severity: Severity,
    pub kind: DiagnosticKind,
    pub message: String,
}

impl Diagnostic {
    /// `file:line:col: severity: message`
    pub fn render(&self, file: &str) -> String {
        format!(
            "{file}:{}:{}: {}: {}",
            self.span.line, self.span.col, self.severity, self.message
        )
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.span, self.severity, self.message)
    }
}
