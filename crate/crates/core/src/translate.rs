//! Translating brackets and escapes into code-combinator applications.
//!
//! Two routes produce the same combinator target:
//!
//! * the baseline route elaborates with brackets and escapes intact and then
//!   rewrites the tree with [`tr_present`] / [`tr_future`];
//! * the integrated route ([`infer_translate`]) rewrites during elaboration:
//!   a bracket at stage 0 becomes `⟪body⟫`, a bracket at a deeper stage
//!   becomes a marked escape around `mkbr ⟪body⟫`, and a deeper escape becomes
//!   a marked escape around `mkes ⟪body⟫`. The selective translation
//!   [`tc_selective`] removes marked escapes, so the final stage-0 result has
//!   no staging nodes left.
//!
//! Every rule maps a node of type `t` to one of type `t` (present) or
//! `t code` (future).

use std::rc::Rc;

use crate::diagnostic::{Diagnostic, Result};
use crate::syntax::{Ann, CombinatorId, Expr, Name, Node, Stage, Type};
use crate::typecheck::{elaborate, CheckerState, Env, Fault, Goal, Mode};

fn internal(msg: impl Into<String>) -> Diagnostic {
    Diagnostic::internal(msg)
}

fn code(t: &Type) -> Type {
    Type::code(t.clone())
}

// Combinator emission at concrete instance types.

fn lift(t: &Type, arg: Ann) -> Ann {
    Ann::prim_app(
        CombinatorId::Lift,
        Type::arrow(t.clone(), code(t)),
        vec![arg],
    )
}

fn mkid(t: &Type, name: &Name) -> Ann {
    Ann::prim_app(
        CombinatorId::MkId,
        Type::arrow(Type::Str, code(t)),
        vec![Ann::str(&name.to_string())],
    )
}

/// `mka f a` where `f : (dom -> cod) code` and `a : dom code`.
fn mka(f: Ann, a: Ann, dom: &Type, cod: &Type) -> Ann {
    let instance = Type::arrow(
        code(&Type::arrow(dom.clone(), cod.clone())),
        Type::arrow(code(dom), code(cod)),
    );
    Ann::prim_app(CombinatorId::MkA, instance, vec![f, a])
}

/// `mkl "hint" (fun x -> body)` for a future binder `x : dom` whose body
/// has type `cod`; the present-stage function has type `dom code -> cod code`.
fn mkl(param: &Name, dom: &Type, cod: &Type, body: Ann) -> Ann {
    let fun_ty = Type::arrow(code(dom), code(cod));
    let lam = Ann::new(
        Node::Lam {
            param: param.clone(),
            stage: Stage::PRESENT,
            param_ty: code(dom),
            body: Rc::new(body),
        },
        fun_ty.clone(),
    );
    let instance = Type::arrow(
        Type::Str,
        Type::arrow(fun_ty, code(&Type::arrow(dom.clone(), cod.clone()))),
    );
    Ann::prim_app(
        CombinatorId::MkL,
        instance,
        vec![Ann::str(param.base()), lam],
    )
}

/// `mkbr c` where `c : t code`.
fn mkbr(c: Ann, t: &Type) -> Ann {
    Ann::prim_app(
        CombinatorId::MkBr,
        Type::arrow(code(t), code(&code(t))),
        vec![c],
    )
}

/// `mkes c` where `c : t code code`.
fn mkes(c: Ann, t: &Type) -> Ann {
    Ann::prim_app(
        CombinatorId::MkEs,
        Type::arrow(code(&code(t)), code(t)),
        vec![c],
    )
}

fn present_var(name: &Name, ty: Type) -> Ann {
    Ann::new(
        Node::Var {
            name: name.clone(),
            stage: Stage::PRESENT,
            initial: false,
        },
        ty,
    )
}

/// Code for a reference to a stage-0 variable from inside a bracket:
/// `mkid "x"` for initial-environment names, `lift x` for everything else.
fn persist(a: &Ann, name: &Name, initial: bool) -> Ann {
    if initial {
        mkid(&a.ty, name)
    } else {
        lift(&a.ty, a.clone())
    }
}

/// Polymorphic type scheme of each combinator, instantiated with fresh
/// variables. Used when re-checking erased terms.
pub(crate) fn combinator_scheme(op: CombinatorId, st: &mut CheckerState) -> Type {
    let a = st.fresh();
    match op {
        CombinatorId::Lift => Type::arrow(a.clone(), code(&a)),
        CombinatorId::MkId => Type::arrow(Type::Str, code(&a)),
        CombinatorId::MkA => {
            let b = st.fresh();
            Type::arrow(
                code(&Type::arrow(a.clone(), b.clone())),
                Type::arrow(code(&a), code(&b)),
            )
        }
        CombinatorId::MkL => {
            let b = st.fresh();
            Type::arrow(
                Type::Str,
                Type::arrow(Type::arrow(code(&a), code(&b)), code(&Type::arrow(a, b))),
            )
        }
        CombinatorId::MkBr => Type::arrow(code(&a), code(&code(&a))),
        CombinatorId::MkEs => Type::arrow(code(&code(&a)), code(&a)),
    }
}

/// Present-stage translation: the identity until it reaches a bracket.
pub fn tr_present(a: &Ann) -> Result<Ann> {
    let node = match &a.node {
        Node::Int(_) | Node::Str(_) | Node::Csp { .. } | Node::Prim(_) => return Ok(a.clone()),
        Node::Var { name, stage, .. } => {
            if stage.0 != 0 {
                return Err(internal(format!(
                    "future-stage variable `{name}` outside a bracket"
                )));
            }
            return Ok(a.clone());
        }
        Node::App(f, x) => Node::App(Rc::new(tr_present(f)?), Rc::new(tr_present(x)?)),
        Node::Lam {
            param,
            stage,
            param_ty,
            body,
        } => {
            if stage.0 != 0 {
                return Err(internal(format!(
                    "future-stage binder `{param}` outside a bracket"
                )));
            }
            Node::Lam {
                param: param.clone(),
                stage: *stage,
                param_ty: param_ty.clone(),
                body: Rc::new(tr_present(body)?),
            }
        }
        Node::Run(b) => Node::Run(Rc::new(tr_present(b)?)),
        Node::Bracket(b) => return tr_future(b, Stage(0)),
        Node::Escape { .. } => return Err(internal("escape at stage 0")),
    };
    Ok(Ann::new(node, a.ty.clone()))
}

/// Future-stage translation of a stage-`n+1` subtree into present-stage
/// code that builds it.
pub fn tr_future(a: &Ann, n: Stage) -> Result<Ann> {
    let n = n.0;
    match &a.node {
        Node::Int(_) | Node::Csp { .. } => Ok(lift(&a.ty, a.clone())),
        Node::Var {
            name,
            stage,
            initial,
        } => {
            if stage.0 == 0 {
                Ok(persist(a, name, *initial))
            } else if stage.0 <= n + 1 {
                Ok(present_var(name, code(&a.ty)))
            } else {
                Err(internal(format!(
                    "variable `{name}` bound at stage {stage} referenced at stage {}",
                    n + 1
                )))
            }
        }
        Node::App(f, x) => Ok(mka(
            tr_future(f, Stage(n))?,
            tr_future(x, Stage(n))?,
            &x.ty,
            &a.ty,
        )),
        Node::Lam {
            param,
            stage,
            param_ty,
            body,
        } => {
            if stage.0 != n + 1 {
                return Err(internal(format!(
                    "binder `{param}` has stage {stage} inside a stage-{} subtree",
                    n + 1
                )));
            }
            Ok(mkl(param, param_ty, &body.ty, tr_future(body, Stage(n))?))
        }
        Node::Bracket(b) => Ok(mkbr(tr_future(b, Stage(n + 1))?, &b.ty)),
        Node::Escape { body, .. } => {
            if n == 0 {
                tr_present(body)
            } else {
                Ok(mkes(tr_future(body, Stage(n - 1))?, &a.ty))
            }
        }
        Node::Run(_) => Err(internal("`run` above stage 0")),
        Node::Str(_) | Node::Prim(_) => Err(internal("combinator-level node inside a bracket")),
    }
}

/// Selective translation of a future-stage subtree produced by the
/// integrated pass. Marked escapes are dropped, leaving their already
/// translated bodies in place.
pub fn tc_selective(a: &Ann) -> Result<Ann> {
    match &a.node {
        Node::Int(_) | Node::Csp { .. } => Ok(lift(&a.ty, a.clone())),
        Node::Var {
            name,
            stage,
            initial,
        } => {
            if stage.0 == 0 {
                Ok(persist(a, name, *initial))
            } else {
                Ok(present_var(name, code(&a.ty)))
            }
        }
        Node::App(f, x) => Ok(mka(tc_selective(f)?, tc_selective(x)?, &x.ty, &a.ty)),
        Node::Lam {
            param,
            stage,
            param_ty,
            body,
        } => {
            if stage.0 == 0 {
                return Err(internal(format!(
                    "present-stage binder `{param}` inside a bracket"
                )));
            }
            Ok(mkl(param, param_ty, &body.ty, tc_selective(body)?))
        }
        Node::Escape { body, marked: true } => Ok((**body).clone()),
        Node::Escape { marked: false, .. } => Err(internal(
            "unmarked escape reached the selective translation",
        )),
        Node::Bracket(_) => Err(internal("bracket reached the selective translation")),
        Node::Run(_) => Err(internal("`run` above stage 0")),
        Node::Str(_) | Node::Prim(_) => Err(internal("combinator-level node inside a bracket")),
    }
}

/// Bracket rule of the integrated pass, for a bracket at stage `n` whose
/// body has already been elaborated at stage `n + 1`.
pub(crate) fn integrated_bracket(n: u32, body: Ann) -> Result<Ann> {
    let t = body.ty.clone();
    let translated = tc_selective(&body)?;
    if n == 0 {
        return Ok(translated);
    }
    marked_escape(mkbr(translated, &t), code(&t))
}

/// Escape rule of the integrated pass, for an escape at stage `n >= 1`
/// whose body (of type `ty code`) was elaborated at stage `n - 1`.
pub(crate) fn integrated_escape(n: u32, body: Ann, ty: Type, fault: Option<Fault>) -> Result<Ann> {
    if n == 1 {
        return marked_escape(body, ty);
    }
    let translated = tc_selective(&body)?;
    let spliced = match fault {
        Some(Fault::DropMkes) => translated,
        None => mkes(translated, &ty),
    };
    marked_escape(spliced, ty)
}

fn marked_escape(body: Ann, ty: Type) -> Result<Ann> {
    let node = Ann::new(
        Node::Escape {
            body: Rc::new(body),
            marked: true,
        },
        ty,
    );
    if !check_no_nested_escapes(&node) {
        return Err(internal(
            "nested escape produced by the integrated translation",
        ));
    }
    Ok(node)
}

/// Type checking integrated with translation. The stage-0 result is a plain
/// combinator term.
pub fn infer_translate(env: &Env, st: &mut CheckerState, e: &Expr) -> Result<Ann> {
    infer_translate_with(env, st, e, &Goal::default())
}

pub fn infer_translate_with(
    env: &Env,
    st: &mut CheckerState,
    e: &Expr,
    goal: &Goal,
) -> Result<Ann> {
    let out = elaborate(env, st, e, Mode::Integrated, goal)?;
    if !is_base1(&out) {
        return Err(internal(
            "integrated translation left staging nodes in stage-0 output",
        ));
    }
    Ok(out)
}

/// True iff no escape occurs inside another escape.
pub fn check_no_nested_escapes(a: &Ann) -> bool {
    fn go(a: &Ann, inside: bool) -> bool {
        match &a.node {
            Node::Escape { body, .. } => !inside && go(body, true),
            Node::App(f, x) => go(f, inside) && go(x, inside),
            Node::Lam { body, .. } | Node::Bracket(body) | Node::Run(body) => go(body, inside),
            _ => true,
        }
    }
    go(a, false)
}

/// True iff the tree is free of brackets, escapes, and stage-annotated
/// variables or binders.
pub fn is_base1(a: &Ann) -> bool {
    a.count(|n| match &n.node {
        Node::Bracket(_) | Node::Escape { .. } => true,
        Node::Var { stage, .. } | Node::Lam { stage, .. } => stage.0 != 0,
        _ => false,
    }) == 0
}

/// Drops all annotations from a combinator term. Combinators become their
/// reserved `%`-names.
pub fn erase(a: &Ann) -> Result<Expr> {
    Ok(match &a.node {
        Node::Int(i) => Expr::Int(*i),
        Node::Str(s) => Expr::Str(s.clone()),
        Node::Var { name, .. } => Expr::Var(name.clone()),
        Node::App(f, x) => Expr::app(erase(f)?, erase(x)?),
        Node::Lam { param, body, .. } => Expr::lam(param.clone(), None, erase(body)?),
        Node::Run(b) => Expr::run(erase(b)?),
        Node::Csp { value, label } => Expr::csp(value.clone(), a.ty.clone(), label.clone()),
        Node::Prim(op) => Expr::var(op.reserved_name()),
        Node::Bracket(_) | Node::Escape { .. } => {
            return Err(internal(
                "cannot erase a term that still contains staging nodes",
            ))
        }
    })
}

/// Plain type reconstruction for erased combinator terms. The result type is
/// principal: parameters that nothing constrains stay as type variables.
pub fn typecheck_base1(env: &Env, e: &Expr) -> Result<Ann> {
    elaborate(
        env,
        &mut CheckerState::new(),
        e,
        Mode::Base1,
        &Goal::default(),
    )
}

/// True iff `target` is an instance of the (possibly non-ground) `principal`.
pub fn admits(principal: &Type, target: &Type) -> bool {
    let mut st = CheckerState::new();
    // Keep the fresh counter clear of the principal's own variables.
    fn max_var(t: &Type) -> u32 {
        match t {
            Type::Var(v) => *v,
            Type::Arrow(a, b) => max_var(a).max(max_var(b)),
            Type::Code(t) => max_var(t),
            _ => 0,
        }
    }
    for _ in 0..max_var(principal) {
        st.fresh();
    }
    st.unify(principal, target).is_ok() && target.is_ground()
}

/// Which translation route a session uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Pipeline {
    /// Elaborate with staging nodes, then translate.
    Baseline,
    /// Translate while elaborating.
    #[default]
    Optimized,
}

impl Pipeline {
    /// Elaborates `e` at stage 0 and translates it to a combinator term.
    pub fn compile(self, env: &Env, st: &mut CheckerState, e: &Expr, goal: &Goal) -> Result<Ann> {
        match self {
            Pipeline::Baseline => {
                let staged = elaborate(env, st, e, Mode::Staged, goal)?;
                tr_present(&staged)
            }
            Pipeline::Optimized => infer_translate_with(env, st, e, goal),
        }
    }
}

impl std::str::FromStr for Pipeline {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Pipeline, String> {
        match s {
            "baseline" => Ok(Pipeline::Baseline),
            "optimized" => Ok(Pipeline::Optimized),
            other => Err(format!(
                "unknown pipeline `{other}` (expected baseline or optimized)"
            )),
        }
    }
}
