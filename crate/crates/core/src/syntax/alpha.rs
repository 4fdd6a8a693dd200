use std::collections::BTreeSet;

use super::{Expr, Name};

/// Equality up to consistent renaming of bound variables. CSP constants
/// compare by label and type; the embedded values are opaque.
pub fn alpha_eq(a: &Expr, b: &Expr) -> bool {
    Scopes::default().eq(a, b)
}

#[derive(Default)]
struct Scopes<'a> {
    left: Vec<&'a Name>,
    right: Vec<&'a Name>,
}

impl<'a> Scopes<'a> {
    fn eq(&mut self, a: &'a Expr, b: &'a Expr) -> bool {
        match (a.unloc(), b.unloc()) {
            (Expr::Int(x), Expr::Int(y)) => x == y,
            (Expr::Str(x), Expr::Str(y)) => x == y,
            (Expr::Var(x), Expr::Var(y)) => {
                match (index_of(&self.left, x), index_of(&self.right, y)) {
                    (Some(i), Some(j)) => i == j,
                    (None, None) => x == y,
                    _ => false,
                }
            }
            (Expr::App(f1, a1), Expr::App(f2, a2)) => self.eq(f1, f2) && self.eq(a1, a2),
            (Expr::Lam(x, t1, b1), Expr::Lam(y, t2, b2)) => {
                if t1 != t2 {
                    return false;
                }
                self.left.push(x);
                self.right.push(y);
                let r = self.eq(b1, b2);
                self.left.pop();
                self.right.pop();
                r
            }
            (Expr::Bracket(x), Expr::Bracket(y))
            | (Expr::Escape(x), Expr::Escape(y))
            | (Expr::Run(x), Expr::Run(y)) => self.eq(x, y),
            (Expr::Csp(x), Expr::Csp(y)) => x.label == y.label && x.ty == y.ty,
            _ => false,
        }
    }
}

// Innermost binder wins.
fn index_of(scope: &[&Name], x: &Name) -> Option<usize> {
    scope.iter().rposition(|n| *n == x)
}

/// Variables with no enclosing binder. Brackets and escapes do not affect
/// scoping.
pub fn free_vars(e: &Expr) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    let mut bound = Vec::new();
    collect(e, &mut bound, &mut out);
    out
}

fn collect<'a>(e: &'a Expr, bound: &mut Vec<&'a Name>, out: &mut BTreeSet<Name>) {
    match e.unloc() {
        Expr::Var(x) => {
            if !bound.contains(&x) {
                out.insert(x.clone());
            }
        }
        Expr::App(f, a) => {
            collect(f, bound, out);
            collect(a, bound, out);
        }
        Expr::Lam(x, _, b) => {
            bound.push(x);
            collect(b, bound, out);
            bound.pop();
        }
        Expr::Bracket(b) | Expr::Escape(b) | Expr::Run(b) => collect(b, bound, out),
        Expr::Int(_) | Expr::Str(_) | Expr::Csp(_) | Expr::Loc(..) => {}
    }
}
