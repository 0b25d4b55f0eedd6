//! Diagnostics produced by the parser and the static validator.

use serde::Serialize;

use crate::ast::Program;

/// Diagnostic severity. Errors prevent a program from being used;
/// warnings flag suspicious but well-defined designs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

impl std::fmt::Display for Severity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Severity::Warning => write!(f, "warning"),
            Severity::Error => write!(f, "error"),
        }
    }
}

/// Stable diagnostic codes, one per distinct rule.
pub mod codes {
    /// Malformed token (bad character, oversized number).
    pub const LEX: &str = "lex";
    /// Token stream does not match the grammar.
    pub const SYNTAX: &str = "syntax";
    /// A name is declared more than once in its scope.
    pub const DUP_NAME: &str = "dup-name";
    /// A name does not resolve to a declaration.
    pub const UNRESOLVED: &str = "unresolved";
    /// More than one read or write on a memory bank in one state.
    pub const MEM_ACCESS: &str = "mem-access";
    /// A stream endpoint is not connected exactly once.
    pub const STREAM_CONN: &str = "stream-conn";
    /// A channel operation targets a stream of the wrong direction.
    pub const STREAM_DIR: &str = "stream-dir";
    /// Communication statement without a matching ready()/valid() guard.
    pub const COMM_GUARD: &str = "comm-guard";
    /// Two statements in one state assign the same target.
    pub const DUP_WRITE: &str = "dup-write";
    /// A goto names a state that is not declared.
    pub const GOTO_TARGET: &str = "goto-target";
}

/// A single parser or validator finding, anchored to a source location.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: &'static str,
    pub message: String,
    pub line: u32,
    pub col: u32,
}

impl Diagnostic {
    pub fn error(code: &'static str, message: impl Into<String>, line: u32, col: u32) -> Self {
        Diagnostic {
            severity: Severity::Error,
            code,
            message: message.into(),
            line,
            col,
        }
    }

    pub fn warning(code: &'static str, message: impl Into<String>, line: u32, col: u32) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            code,
            message: message.into(),
            line,
            col,
        }
    }

    /// Renders as `file:line:col: severity[code]: message`.
    pub fn render(&self, file: &str) -> String {
        format!(
            "{}:{}:{}: {}[{}]: {}",
            file, self.line, self.col, self.severity, self.code, self.message
        )
    }
}

/// Outcome of parsing: a program is present exactly when no error was produced.
#[derive(Debug, Clone)]
pub struct ParseResult {
    pub program: Option<Program>,
    pub diagnostics: Vec<Diagnostic>,
}

impl ParseResult {
    pub fn has_errors(&self) -> bool {
        self.diagnostics
            .iter()
            .any(|d| d.severity == Severity::Error)
    }
}

/// Sorts diagnostics by source position, keeping the emission order for ties.
pub fn sort_diagnostics(diags: &mut [Diagnostic]) {
    diags.sort_by_key(|d| (d.line, d.col));
}
