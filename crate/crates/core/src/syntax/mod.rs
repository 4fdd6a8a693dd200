//! Abstract syntax of the staged calculus.
//!
//! [`Expr`] is the untyped surface tree produced by the parser and also the
//! body of runtime code values. [`Ann`] is the type- and stage-annotated tree
//! produced by elaboration; it covers the staged form, the intermediate form
//! with marked escapes, and the plain combinator target.

mod alpha;
mod ann;
mod pretty;

use std::fmt;
use std::rc::Rc;

use crate::eval::Value;

pub use alpha::{alpha_eq, free_vars};
pub use ann::{Ann, CombinatorId, Node};
pub use pretty::{pretty_code, pretty_expr, pretty_type};

/// A variable name.
///
/// Source names have no serial. Names minted by `mkl` carry a serial and
/// print as `base_serial`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Name {
    base: Rc<str>,
    serial: Option<u32>,
}

impl Name {
    pub fn source(base: impl Into<Rc<str>>) -> Name {
        let base = base.into();
        assert!(!base.is_empty(), "names must be non-empty");
        Name { base, serial: None }
    }

    pub fn fresh(base: impl Into<Rc<str>>, serial: u32) -> Name {
        let base = base.into();
        assert!(!base.is_empty(), "names must be non-empty");
        Name {
            base,
            serial: Some(serial),
        }
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    pub fn serial(&self) -> Option<u32> {
        self.serial
    }

    pub fn is_fresh(&self) -> bool {
        self.serial.is_some()
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.serial {
            Some(n) => write!(f, "{}_{}", self.base, n),
            None => f.write_str(&self.base),
        }
    }
}

impl From<&str> for Name {
    fn from(s: &str) -> Name {
        Name::source(s)
    }
}

/// Bracket-nesting level. Stage 0 is the present.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Stage(pub u32);

impl Stage {
    pub const PRESENT: Stage = Stage(0);

    pub fn level(self) -> u32 {
        self.0
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Type {
    Int,
    Str,
    Arrow(Rc<Type>, Rc<Type>),
    Code(Rc<Type>),
    /// Unification variable; bindings live in the checker's substitution.
    Var(u32),
}

impl Type {
    pub fn arrow(dom: Type, cod: Type) -> Type {
        Type::Arrow(Rc::new(dom), Rc::new(cod))
    }

    pub fn code(inner: Type) -> Type {
        Type::Code(Rc::new(inner))
    }

    /// True when no unification variable occurs in the type.
    pub fn is_ground(&self) -> bool {
        match self {
            Type::Int | Type::Str => true,
            Type::Arrow(a, b) => a.is_ground() && b.is_ground(),
            Type::Code(t) => t.is_ground(),
            Type::Var(_) => false,
        }
    }

    /// Number of nested `code` constructors along the deepest path.
    pub fn code_depth(&self) -> u32 {
        match self {
            Type::Int | Type::Str | Type::Var(_) => 0,
            Type::Arrow(a, b) => a.code_depth().max(b.code_depth()),
            Type::Code(t) => 1 + t.code_depth(),
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_type(self))
    }
}

/// 1-based source position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Pos {
    pub line: u32,
    pub column: u32,
}

impl Default for Pos {
    fn default() -> Pos {
        Pos { line: 1, column: 1 }
    }
}

/// A cross-stage persistent constant: a present-stage value embedded in code.
#[derive(Clone, Debug, PartialEq)]
pub struct Csp {
    pub value: Value,
    pub ty: Type,
    pub label: Name,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Int(i64),
    Str(Rc<str>),
    Var(Name),
    App(Rc<Expr>, Rc<Expr>),
    Lam(Name, Option<Type>, Rc<Expr>),
    Bracket(Rc<Expr>),
    Escape(Rc<Expr>),
    Run(Rc<Expr>),
    Csp(Rc<Csp>),
    /// Source position of the wrapped node. Transparent to everything but
    /// diagnostics.
    Loc(Pos, Rc<Expr>),
}

impl Expr {
    pub fn var(name: impl Into<Name>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn app(f: Expr, a: Expr) -> Expr {
        Expr::App(Rc::new(f), Rc::new(a))
    }

    /// `f a b ...`
    pub fn apps(f: Expr, args: impl IntoIterator<Item = Expr>) -> Expr {
        args.into_iter().fold(f, Expr::app)
    }

    pub fn lam(param: impl Into<Name>, annot: Option<Type>, body: Expr) -> Expr {
        Expr::Lam(param.into(), annot, Rc::new(body))
    }

    pub fn bracket(body: Expr) -> Expr {
        Expr::Bracket(Rc::new(body))
    }

    pub fn escape(body: Expr) -> Expr {
        Expr::Escape(Rc::new(body))
    }

    pub fn run(body: Expr) -> Expr {
        Expr::Run(Rc::new(body))
    }

    pub fn str(s: &str) -> Expr {
        Expr::Str(s.into())
    }

    pub fn csp(value: Value, ty: Type, label: Name) -> Expr {
        Expr::Csp(Rc::new(Csp { value, ty, label }))
    }

    /// `a + b`, desugared.
    pub fn plus(a: Expr, b: Expr) -> Expr {
        Expr::apps(Expr::var("+"), [a, b])
    }

    /// `a * b`, desugared.
    pub fn times(a: Expr, b: Expr) -> Expr {
        Expr::apps(Expr::var("*"), [a, b])
    }

    /// Skips any position wrappers.
    pub fn unloc(&self) -> &Expr {
        let mut e = self;
        while let Expr::Loc(_, inner) = e {
            e = inner;
        }
        e
    }

    /// Copy of the tree with every position wrapper removed.
    pub fn strip_locs(&self) -> Expr {
        match self.unloc() {
            Expr::App(f, a) => Expr::app(f.strip_locs(), a.strip_locs()),
            Expr::Lam(x, t, b) => Expr::Lam(x.clone(), t.clone(), Rc::new(b.strip_locs())),
            Expr::Bracket(b) => Expr::bracket(b.strip_locs()),
            Expr::Escape(b) => Expr::escape(b.strip_locs()),
            Expr::Run(b) => Expr::run(b.strip_locs()),
            e => e.clone(),
        }
    }

    /// Node count, ignoring position wrappers.
    pub fn size(&self) -> usize {
        match self.unloc() {
            Expr::App(f, a) => 1 + f.size() + a.size(),
            Expr::Lam(_, _, b) | Expr::Bracket(b) | Expr::Escape(b) | Expr::Run(b) => 1 + b.size(),
            _ => 1,
        }
    }

    pub fn contains_bracket(&self) -> bool {
        match self.unloc() {
            Expr::Bracket(_) => true,
            Expr::App(f, a) => f.contains_bracket() || a.contains_bracket(),
            Expr::Lam(_, _, b) | Expr::Escape(b) | Expr::Run(b) => b.contains_bracket(),
            _ => false,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_expr(self))
    }
}
