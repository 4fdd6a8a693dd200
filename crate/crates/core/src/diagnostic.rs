use std::fmt;

use thiserror::Error;

use crate::syntax::Pos;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DiagKind {
    ParseError,
    UnboundVar,
    StageError,
    EscapeAtTopLevel,
    TypeMismatch,
    AmbiguousType,
    RunAtFutureStage,
    ScopeExtrusion,
    InternalInvariant,
}

impl fmt::Display for DiagKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {kind}: {message}")]
pub struct Diagnostic {
    pub kind: DiagKind,
    pub message: String,
    pub line: u32,
    pub column: u32,
}

impl Diagnostic {
    pub fn new(kind: DiagKind, pos: Pos, message: impl Into<String>) -> Diagnostic {
        let message = message.into();
        debug_assert!(!message.is_empty());
        Diagnostic {
            kind,
            message,
            line: pos.line,
            column: pos.column,
        }
    }

    /// A diagnostic with no meaningful source position (runtime checks,
    /// internal invariants). Positioned at 1:1 until relocated.
    pub fn unplaced(kind: DiagKind, message: impl Into<String>) -> Diagnostic {
        Diagnostic::new(kind, Pos::default(), message)
    }

    pub fn internal(message: impl Into<String>) -> Diagnostic {
        Diagnostic::unplaced(DiagKind::InternalInvariant, message)
    }

    pub fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            column: self.column,
        }
    }

    pub fn at(mut self, pos: Pos) -> Diagnostic {
        self.line = pos.line;
        self.column = pos.column;
        self
    }
}

pub type Result<T, E = Diagnostic> = std::result::Result<T, E>;
