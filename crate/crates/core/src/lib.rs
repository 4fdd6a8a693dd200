//! A two-level (multi-stage) simply typed calculus with brackets, escapes
//! and `run`, compiled to code-generating combinators.

pub mod combinators;
pub mod diagnostic;
pub mod diff;
pub mod eval;
pub mod gen;
pub mod parser;
pub mod session;
pub mod syntax;
pub mod translate;
pub mod typecheck;

pub use diagnostic::{DiagKind, Diagnostic};
