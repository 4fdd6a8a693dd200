//! Runtime code-generating combinators.
//!
//! Code values are plain [`Expr`] trees. `mkl` builds binders by
//! higher-order abstract syntax: it mints a fresh name, hands the code of
//! that name to a present-stage function, and wraps the result in a lambda.

use std::cell::Cell;
use std::collections::BTreeSet;
use std::rc::Rc;

use crate::diagnostic::{Diagnostic, Result};
use crate::eval::Value;
use crate::syntax::{Expr, Name, Type};
use crate::typecheck::initial_env;

/// Session-wide fresh-name supply. Serials start at 1 and are never reused.
#[derive(Debug)]
pub struct GenState {
    counter: Cell<u32>,
}

impl Default for GenState {
    fn default() -> GenState {
        GenState::new()
    }
}

impl GenState {
    pub fn new() -> GenState {
        GenState {
            counter: Cell::new(1),
        }
    }

    /// The serial the next fresh name will get.
    pub fn counter(&self) -> u32 {
        self.counter.get()
    }

    /// Rolls the counter back, e.g. after a failed toplevel phrase.
    pub fn reset_to(&self, counter: u32) {
        self.counter.set(counter);
    }
}

pub fn fresh_name(gen: &GenState, hint: &str) -> Name {
    let n = gen.counter.get();
    gen.counter.set(n + 1);
    Name::fresh(hint, n)
}

/// A piece of generated code.
///
/// `pending` holds names minted by `mkl` whose binder has not yet been
/// wrapped around this body. Closed, finished code has none.
#[derive(Clone, Debug, PartialEq)]
pub struct CodeValue {
    pub body: Rc<Expr>,
    pub pending: Rc<BTreeSet<Name>>,
}

impl CodeValue {
    pub fn closed(body: Expr) -> CodeValue {
        CodeValue {
            body: Rc::new(body),
            pending: Rc::default(),
        }
    }

    fn with(body: Expr, pending: Rc<BTreeSet<Name>>) -> CodeValue {
        CodeValue {
            body: Rc::new(body),
            pending,
        }
    }
}

fn union(a: &Rc<BTreeSet<Name>>, b: &Rc<BTreeSet<Name>>) -> Rc<BTreeSet<Name>> {
    if b.is_empty() {
        Rc::clone(a)
    } else if a.is_empty() {
        Rc::clone(b)
    } else {
        Rc::new(a.union(b).cloned().collect())
    }
}

/// `lift_t v`: integers become literals, code becomes a bracket that
/// rebuilds it, anything else is embedded as a CSP constant.
pub fn lift_value(v: &Value, t: &Type, label: &Name) -> CodeValue {
    match v {
        Value::Int(i) => CodeValue::closed(Expr::Int(*i)),
        Value::Code(c) => CodeValue::with(Expr::Bracket(Rc::clone(&c.body)), Rc::clone(&c.pending)),
        other => CodeValue::closed(Expr::csp(other.clone(), t.clone(), label.clone())),
    }
}

/// Code of an initial-environment identifier.
pub fn mkid(name: &str, t: &Type) -> Result<CodeValue> {
    let name = Name::source(name);
    match initial_env().lookup(&name) {
        Some(b) if !t.is_ground() || &b.ty == t => Ok(CodeValue::closed(Expr::Var(name))),
        Some(b) => Err(Diagnostic::internal(format!(
            "mkid: `{name}` has type {}, not {t}",
            b.ty
        ))),
        None => Err(Diagnostic::internal(format!(
            "mkid: `{name}` is not in the initial environment"
        ))),
    }
}

pub fn mka(f: &CodeValue, a: &CodeValue) -> CodeValue {
    CodeValue::with(
        Expr::App(Rc::clone(&f.body), Rc::clone(&a.body)),
        union(&f.pending, &a.pending),
    )
}

pub fn mkl(
    gen: &GenState,
    hint: &str,
    f: impl FnOnce(CodeValue) -> Result<CodeValue>,
) -> Result<CodeValue> {
    let v = fresh_name(gen, hint);
    let arg = CodeValue::with(Expr::Var(v.clone()), Rc::new(BTreeSet::from([v.clone()])));
    let body = f(arg)?;
    let pending = if body.pending.contains(&v) {
        let mut rest = (*body.pending).clone();
        rest.remove(&v);
        Rc::new(rest)
    } else {
        Rc::clone(&body.pending)
    };
    Ok(CodeValue::with(
        Expr::Lam(v, None, Rc::clone(&body.body)),
        pending,
    ))
}

pub fn mkbr(c: &CodeValue) -> CodeValue {
    CodeValue::with(Expr::Bracket(Rc::clone(&c.body)), Rc::clone(&c.pending))
}

pub fn mkes(c: &CodeValue) -> CodeValue {
    CodeValue::with(Expr::Escape(Rc::clone(&c.body)), Rc::clone(&c.pending))
}
