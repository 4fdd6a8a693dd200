//! Concrete-syntax printers with minimal parenthesization.

use std::fmt::Write;

use super::{Expr, Type};

// Precedence levels, loosest first.
const EXPR: u8 = 0;
const SUM: u8 = 1;
const PROD: u8 = 2;
const APPL: u8 = 3;
const PREFIX: u8 = 4;
const ATOM: u8 = 5;

pub fn pretty_expr(e: &Expr) -> String {
    let mut out = String::new();
    expr(e, EXPR, &mut out);
    out
}

/// Code-value display: the body between `.<` and `>.`.
pub fn pretty_code(body: &Expr) -> String {
    format!(".<{}>.", pretty_expr(body))
}

fn infix(e: &Expr) -> Option<(&'static str, &Expr, &Expr)> {
    let Expr::App(f, rhs) = e else { return None };
    let Expr::App(op, lhs) = f.unloc() else {
        return None;
    };
    let Expr::Var(op) = op.unloc() else {
        return None;
    };
    if op.is_fresh() {
        return None;
    }
    match op.base() {
        "+" => Some(("+", lhs, rhs)),
        "*" => Some(("*", lhs, rhs)),
        _ => None,
    }
}

fn parens(out: &mut String, wrap: bool, body: impl FnOnce(&mut String)) {
    if wrap {
        out.push('(');
    }
    body(out);
    if wrap {
        out.push(')');
    }
}

fn expr(e: &Expr, level: u8, out: &mut String) {
    let e = e.unloc();
    if let Some((op, lhs, rhs)) = infix(e) {
        let (me, left, right) = if op == "+" {
            (SUM, SUM, PROD)
        } else {
            (PROD, PROD, APPL)
        };
        parens(out, level > me, |out| {
            expr(lhs, left, out);
            write!(out, " {op} ").unwrap();
            expr(rhs, right, out);
        });
        return;
    }
    match e {
        Expr::Int(i) => write!(out, "{i}").unwrap(),
        Expr::Str(s) => write!(out, "{s:?}").unwrap(),
        Expr::Var(x) if !x.is_fresh() && matches!(x.base(), "+" | "*") => {
            write!(out, "({x})").unwrap()
        }
        Expr::Var(x) => write!(out, "{x}").unwrap(),
        Expr::Csp(c) => write!(out, "(* CSP {} *)", c.label).unwrap(),
        Expr::App(f, a) => parens(out, level > APPL, |out| {
            expr(f, APPL, out);
            out.push(' ');
            expr(a, PREFIX, out);
        }),
        Expr::Lam(x, annot, body) => parens(out, level > EXPR, |out| {
            match annot {
                Some(t) => write!(out, "fun ({x} : {}) -> ", pretty_type(t)).unwrap(),
                None => write!(out, "fun {x} -> ").unwrap(),
            }
            expr(body, EXPR, out);
        }),
        Expr::Bracket(body) => {
            out.push_str(".<");
            expr(body, EXPR, out);
            out.push_str(">.");
        }
        Expr::Escape(body) => parens(out, level > PREFIX, |out| {
            out.push_str(".~");
            expr(body, ATOM, out);
        }),
        Expr::Run(body) => parens(out, level > PREFIX, |out| {
            out.push_str("run ");
            expr(body, ATOM, out);
        }),
        Expr::Loc(..) => unreachable!("unloc strips positions"),
    }
}

pub fn pretty_type(t: &Type) -> String {
    let mut out = String::new();
    ty(t, 0, &mut out);
    out
}

fn ty(t: &Type, level: u8, out: &mut String) {
    match t {
        Type::Int => out.push_str("int"),
        Type::Str => out.push_str("string"),
        Type::Var(n) => write!(out, "'_{n}").unwrap(),
        Type::Arrow(a, b) => parens(out, level > 0, |out| {
            ty(a, 1, out);
            out.push_str(" -> ");
            ty(b, 0, out);
        }),
        Type::Code(inner) => {
            ty(inner, 1, out);
            out.push_str(" code");
        }
    }
}
