//! Staged type reconstruction.
//!
//! One elaborator serves three judgments. In [`Mode::Staged`] brackets and
//! escapes are kept as nodes. In [`Mode::Integrated`] the bracket and escape
//! rules translate on the fly (see [`crate::translate`]) while every other
//! rule is shared unchanged. [`Mode::Base1`] checks erased, unstaged
//! combinator terms.

use std::collections::HashMap;
use std::rc::Rc;

use crate::diagnostic::{DiagKind, Diagnostic, Result};
use crate::syntax::{Ann, CombinatorId, Expr, Name, Node, Pos, Stage, Type};
use crate::translate;

/// Names bound in the initial environment, all at stage 0.
pub const INITIAL_NAMES: [&str; 3] = ["succ", "+", "*"];

#[derive(Clone, Debug, PartialEq)]
pub struct Binding {
    pub stage: Stage,
    pub ty: Type,
    /// The binding comes from the initial environment.
    pub initial: bool,
}

#[derive(Debug)]
struct Frame {
    name: Name,
    stage: Stage,
    ty: Type,
    next: Option<Rc<Frame>>,
}

/// Typing environment: a persistent stack of local bindings over the
/// initial environment.
#[derive(Clone, Debug)]
pub struct Env {
    initial: Rc<HashMap<Name, Type>>,
    locals: Option<Rc<Frame>>,
}

pub fn initial_env() -> Env {
    let binop = Type::arrow(Type::Int, Type::arrow(Type::Int, Type::Int));
    let initial = HashMap::from([
        (Name::from("succ"), Type::arrow(Type::Int, Type::Int)),
        (Name::from("+"), binop.clone()),
        (Name::from("*"), binop),
    ]);
    Env {
        initial: Rc::new(initial),
        locals: None,
    }
}

impl Default for Env {
    fn default() -> Env {
        initial_env()
    }
}

impl Env {
    pub fn lookup(&self, x: &Name) -> Option<Binding> {
        let mut frame = self.locals.as_deref();
        while let Some(f) = frame {
            if &f.name == x {
                return Some(Binding {
                    stage: f.stage,
                    ty: f.ty.clone(),
                    initial: false,
                });
            }
            frame = f.next.as_deref();
        }
        self.initial.get(x).map(|ty| Binding {
            stage: Stage::PRESENT,
            ty: ty.clone(),
            initial: true,
        })
    }

    pub fn extend(&self, name: Name, stage: Stage, ty: Type) -> Env {
        Env {
            initial: Rc::clone(&self.initial),
            locals: Some(Rc::new(Frame {
                name,
                stage,
                ty,
                next: self.locals.clone(),
            })),
        }
    }

    pub fn is_initial_name(&self, x: &Name) -> bool {
        self.initial.contains_key(x)
    }

    /// A fresh environment holding only the initial bindings.
    pub fn initial_only(&self) -> Env {
        Env {
            initial: Rc::clone(&self.initial),
            locals: None,
        }
    }
}

/// Deliberate translation bugs, for checking that the differential harness
/// notices them.
#[doc(hidden)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// Splice deeper-stage escapes without wrapping them in `mkes`.
    DropMkes,
}

/// Per-session checker state: unification variables and their bindings.
#[derive(Clone, Debug, Default)]
pub struct CheckerState {
    next_uvar: u32,
    subst: HashMap<u32, Type>,
    #[doc(hidden)]
    pub fault: Option<Fault>,
}

impl CheckerState {
    pub fn new() -> CheckerState {
        CheckerState::default()
    }

    pub fn fresh(&mut self) -> Type {
        self.next_uvar += 1;
        Type::Var(self.next_uvar)
    }

    pub fn uvar_counter(&self) -> u32 {
        self.next_uvar
    }

    /// Applies the substitution throughout `t`, compressing chains of
    /// variable bindings as it goes.
    pub fn resolve(&mut self, t: &Type) -> Type {
        match t {
            Type::Int | Type::Str => t.clone(),
            Type::Arrow(a, b) => Type::arrow(self.resolve(a), self.resolve(b)),
            Type::Code(inner) => Type::code(self.resolve(inner)),
            Type::Var(v) => match self.subst.get(v).cloned() {
                None => t.clone(),
                Some(bound) => {
                    let r = self.resolve(&bound);
                    self.subst.insert(*v, r.clone());
                    r
                }
            },
        }
    }

    // Resolves only the head constructor.
    fn shallow(&self, t: &Type) -> Type {
        let mut t = t.clone();
        while let Type::Var(v) = t {
            match self.subst.get(&v) {
                Some(bound) => t = bound.clone(),
                None => break,
            }
        }
        t
    }

    fn occurs(&self, v: u32, t: &Type) -> bool {
        match self.shallow(t) {
            Type::Var(w) => v == w,
            Type::Arrow(a, b) => self.occurs(v, &a) || self.occurs(v, &b),
            Type::Code(inner) => self.occurs(v, &inner),
            Type::Int | Type::Str => false,
        }
    }

    /// Makes `a` and `b` equal under the substitution, or reports a
    /// constructor clash / occurs-check failure as `TypeMismatch`.
    pub fn unify(&mut self, a: &Type, b: &Type) -> Result<()> {
        let (a, b) = (self.shallow(a), self.shallow(b));
        match (&a, &b) {
            (Type::Var(x), Type::Var(y)) if x == y => Ok(()),
            (Type::Var(v), t) | (t, Type::Var(v)) => {
                if self.occurs(*v, t) {
                    let shown = self.resolve(t);
                    return Err(Diagnostic::unplaced(
                        DiagKind::TypeMismatch,
                        format!("cyclic type: '_{v} occurs in {shown}"),
                    ));
                }
                self.subst.insert(*v, t.clone());
                Ok(())
            }
            (Type::Int, Type::Int) | (Type::Str, Type::Str) => Ok(()),
            (Type::Arrow(a1, b1), Type::Arrow(a2, b2)) => {
                self.unify(a1, a2)?;
                self.unify(b1, b2)
            }
            (Type::Code(x), Type::Code(y)) => self.unify(x, y),
            _ => {
                let (a, b) = (self.resolve(&a), self.resolve(&b));
                Err(Diagnostic::unplaced(
                    DiagKind::TypeMismatch,
                    format!("type {a} is not compatible with type {b}"),
                ))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Mode {
    Staged,
    Integrated,
    Base1,
}

/// Extra constraints on an elaboration run.
#[derive(Clone, Debug, Default)]
pub struct Goal {
    /// Type the whole term must have.
    pub expected: Option<Type>,
    /// Replace unconstrained type variables with `int` instead of
    /// rejecting. Used when re-elaborating generated code, whose binders
    /// carry no annotations.
    pub default_ambiguous: bool,
}

pub(crate) fn elaborate(
    env: &Env,
    st: &mut CheckerState,
    e: &Expr,
    mode: Mode,
    goal: &Goal,
) -> Result<Ann> {
    let mut el = Elab {
        st,
        mode,
        stage: 0,
        pos: Pos::default(),
        origins: HashMap::new(),
    };
    let ann = el.go(env, e)?;
    if let Some(expected) = &goal.expected {
        let pos = el.pos;
        el.st.unify(&ann.ty, expected).map_err(|d| d.at(pos))?;
    }
    let origins = std::mem::take(&mut el.origins);
    let st = el.st;
    let ann = ann.map_types(&mut |t| st.resolve(t));
    if mode == Mode::Base1 {
        return Ok(ann);
    }
    let mut leftover = None;
    ann.walk(&mut |a| {
        if leftover.is_none() {
            leftover = first_uvar(&a.ty);
        }
    });
    match leftover {
        None => Ok(ann),
        Some(_) if goal.default_ambiguous => Ok(ann.map_types(&mut default_to_int)),
        Some(v) => {
            let pos = origins.get(&v).copied().unwrap_or_default();
            Err(Diagnostic::new(
                DiagKind::AmbiguousType,
                pos,
                "cannot determine the type of this parameter; add an annotation `(x : t)`",
            ))
        }
    }
}

fn first_uvar(t: &Type) -> Option<u32> {
    match t {
        Type::Var(v) => Some(*v),
        Type::Arrow(a, b) => first_uvar(a).or_else(|| first_uvar(b)),
        Type::Code(inner) => first_uvar(inner),
        Type::Int | Type::Str => None,
    }
}

fn default_to_int(t: &Type) -> Type {
    match t {
        Type::Var(_) => Type::Int,
        Type::Arrow(a, b) => Type::arrow(default_to_int(a), default_to_int(b)),
        Type::Code(inner) => Type::code(default_to_int(inner)),
        _ => t.clone(),
    }
}

/// Staged type reconstruction at stage 0.
pub fn infer_staged(env: &Env, st: &mut CheckerState, e: &Expr) -> Result<Ann> {
    elaborate(env, st, e, Mode::Staged, &Goal::default())
}

pub(crate) struct Elab<'s> {
    pub(crate) st: &'s mut CheckerState,
    mode: Mode,
    stage: u32,
    pos: Pos,
    // Source position of each lambda whose domain got a fresh variable.
    origins: HashMap<u32, Pos>,
}

impl Elab<'_> {
    fn err(&self, kind: DiagKind, msg: impl Into<String>) -> Diagnostic {
        Diagnostic::new(kind, self.pos, msg)
    }

    fn unify(&mut self, a: &Type, b: &Type) -> Result<()> {
        let pos = self.pos;
        self.st.unify(a, b).map_err(|d| d.at(pos))
    }

    fn at_stage<T>(&mut self, stage: u32, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let saved = self.stage;
        self.stage = stage;
        let r = f(self);
        self.stage = saved;
        r
    }

    fn go(&mut self, env: &Env, e: &Expr) -> Result<Ann> {
        match e {
            Expr::Loc(pos, inner) => {
                let saved = self.pos;
                self.pos = *pos;
                let r = self.go(env, inner);
                self.pos = saved;
                r
            }
            Expr::Int(i) => Ok(Ann::int(*i)),
            Expr::Str(s) => Ok(Ann::new(Node::Str(s.clone()), Type::Str)),
            Expr::Var(x) => self.var(env, x),
            Expr::App(f, a) => {
                let f = self.go(env, f)?;
                let a = self.go(env, a)?;
                let result = self.st.fresh();
                let want = Type::arrow(a.ty.clone(), result.clone());
                if let Err(d) = self.unify(&f.ty, &want) {
                    let ft = self.st.resolve(&f.ty);
                    let at = self.st.resolve(&a.ty);
                    let msg = match ft {
                        Type::Arrow(..) | Type::Var(_) => {
                            format!("function of type {ft} cannot be applied to an argument of type {at} ({})", d.message)
                        }
                        _ => format!("expression of type {ft} is not a function"),
                    };
                    return Err(self.err(DiagKind::TypeMismatch, msg));
                }
                Ok(Ann::app(f, a, result))
            }
            Expr::Lam(x, annot, body) => {
                let dom = match annot {
                    Some(t) => t.clone(),
                    None => {
                        let t = self.st.fresh();
                        if let Type::Var(v) = t {
                            self.origins.insert(v, self.pos);
                        }
                        t
                    }
                };
                let stage = Stage(self.stage);
                let inner = env.extend(x.clone(), stage, dom.clone());
                let body = self.go(&inner, body)?;
                let ty = Type::arrow(dom.clone(), body.ty.clone());
                Ok(Ann::new(
                    Node::Lam {
                        param: x.clone(),
                        stage,
                        param_ty: dom,
                        body: Rc::new(body),
                    },
                    ty,
                ))
            }
            Expr::Bracket(body) => {
                if self.mode == Mode::Base1 {
                    return Err(self.err(
                        DiagKind::ParseError,
                        "brackets cannot occur in an unstaged term",
                    ));
                }
                let n = self.stage;
                let body = self.at_stage(n + 1, |el| el.go(env, body))?;
                match self.mode {
                    Mode::Staged => {
                        let ty = Type::code(body.ty.clone());
                        Ok(Ann::new(Node::Bracket(Rc::new(body)), ty))
                    }
                    _ => translate::integrated_bracket(n, body).map_err(|d| d.at(self.pos)),
                }
            }
            Expr::Escape(body) => {
                if self.mode == Mode::Base1 {
                    return Err(self.err(
                        DiagKind::ParseError,
                        "escapes cannot occur in an unstaged term",
                    ));
                }
                let n = self.stage;
                if n == 0 {
                    return Err(
                        self.err(DiagKind::EscapeAtTopLevel, "escape outside of any bracket")
                    );
                }
                let body = self.at_stage(n - 1, |el| el.go(env, body))?;
                let ty = self.st.fresh();
                if self.unify(&body.ty, &Type::code(ty.clone())).is_err() {
                    let bt = self.st.resolve(&body.ty);
                    return Err(self.err(
                        DiagKind::TypeMismatch,
                        format!("escaped expression has type {bt}, which is not a code type"),
                    ));
                }
                match self.mode {
                    Mode::Staged => Ok(Ann::new(
                        Node::Escape {
                            body: Rc::new(body),
                            marked: false,
                        },
                        ty,
                    )),
                    _ => translate::integrated_escape(n, body, ty, self.st.fault)
                        .map_err(|d| d.at(self.pos)),
                }
            }
            Expr::Run(body) => {
                if self.stage > 0 {
                    return Err(self.err(
                        DiagKind::RunAtFutureStage,
                        format!(
                            "`run` used at stage {}; it is only available at stage 0",
                            self.stage
                        ),
                    ));
                }
                let body = self.go(env, body)?;
                let ty = self.st.fresh();
                if self.unify(&body.ty, &Type::code(ty.clone())).is_err() {
                    let bt = self.st.resolve(&body.ty);
                    return Err(self.err(
                        DiagKind::TypeMismatch,
                        format!("`run` expects a code value, found type {bt}"),
                    ));
                }
                Ok(Ann::new(Node::Run(Rc::new(body)), ty))
            }
            Expr::Csp(c) => Ok(Ann::new(
                Node::Csp {
                    value: c.value.clone(),
                    label: c.label.clone(),
                },
                c.ty.clone(),
            )),
        }
    }

    fn var(&mut self, env: &Env, x: &Name) -> Result<Ann> {
        if self.mode == Mode::Base1 && !x.is_fresh() {
            if let Some(op) = CombinatorId::from_reserved(x.base()) {
                let instance = translate::combinator_scheme(op, self.st);
                return Ok(Ann::prim(op, instance));
            }
        }
        let Some(b) = env.lookup(x) else {
            return Err(self.err(DiagKind::UnboundVar, format!("unbound variable `{x}`")));
        };
        if b.stage.0 > self.stage {
            return Err(self.err(
                DiagKind::StageError,
                format!(
                    "variable `{x}` is bound at stage {} but used at stage {}",
                    b.stage, self.stage
                ),
            ));
        }
        Ok(Ann::new(
            Node::Var {
                name: x.clone(),
                stage: b.stage,
                initial: b.initial,
            },
            b.ty,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_expr;

    fn check(src: &str) -> Result<Ann> {
        infer_staged(
            &initial_env(),
            &mut CheckerState::new(),
            &parse_expr(src).unwrap(),
        )
    }

    fn ty(src: &str) -> Type {
        check(src).unwrap().ty
    }

    fn with_f() -> Env {
        let t = Type::arrow(Type::code(Type::Int), Type::code(Type::Int));
        initial_env().extend(Name::from("f"), Stage(0), t)
    }

    #[test]
    fn initial_environment() {
        let env = initial_env();
        let succ = env.lookup(&Name::from("succ")).unwrap();
        assert_eq!(
            (succ.stage, succ.ty),
            (Stage(0), Type::arrow(Type::Int, Type::Int))
        );
        let plus = env.lookup(&Name::from("+")).unwrap();
        assert_eq!(
            plus.ty,
            Type::arrow(Type::Int, Type::arrow(Type::Int, Type::Int))
        );
        assert!(plus.initial);
        assert!(env.lookup(&Name::from("nosuch")).is_none());
    }

    #[test]
    fn shadowing_hides_initial_binding() {
        let env = initial_env().extend(Name::from("succ"), Stage(0), Type::Int);
        let b = env.lookup(&Name::from("succ")).unwrap();
        assert_eq!(b.ty, Type::Int);
        assert!(!b.initial);
    }

    #[test]
    fn unify_and_resolve() {
        let mut st = CheckerState::new();
        let v = st.fresh();
        st.unify(&v, &Type::Int).unwrap();
        assert_eq!(st.resolve(&v), Type::Int);

        let mut st = CheckerState::new();
        let v = st.fresh();
        st.unify(&Type::code(v.clone()), &Type::code(Type::Int))
            .unwrap();
        assert_eq!(st.resolve(&v), Type::Int);

        let mut st = CheckerState::new();
        let err = st
            .unify(&Type::Int, &Type::arrow(Type::Int, Type::Int))
            .unwrap_err();
        assert_eq!(err.kind, DiagKind::TypeMismatch);

        let mut st = CheckerState::new();
        assert_eq!(st.resolve(&Type::Int), Type::Int);
        let _ = st.fresh();
        let v2 = st.fresh();
        st.unify(&v2, &Type::code(Type::Int)).unwrap();
        assert_eq!(
            st.resolve(&Type::arrow(v2, Type::Int)),
            Type::arrow(Type::code(Type::Int), Type::Int)
        );
        assert_eq!(CheckerState::new().resolve(&Type::Var(9)), Type::Var(9));
    }

    #[test]
    fn occurs_check() {
        let mut st = CheckerState::new();
        let v = st.fresh();
        let err = st
            .unify(&v, &Type::arrow(v.clone(), Type::Int))
            .unwrap_err();
        assert_eq!(err.kind, DiagKind::TypeMismatch);
        assert_eq!(
            check("fun x -> x x").unwrap_err().kind,
            DiagKind::TypeMismatch
        );
    }

    #[test]
    fn nested_bracket_fixtures() {
        assert_eq!(ty(".<.<.~(.<1>.)>.>."), Type::code(Type::code(Type::Int)));

        let bad = parse_expr(".<.<fun x -> .~(f x)>.>.").unwrap();
        let err = infer_staged(&with_f(), &mut CheckerState::new(), &bad).unwrap_err();
        assert!(matches!(
            err.kind,
            DiagKind::StageError | DiagKind::TypeMismatch
        ));

        let good = parse_expr(".<.<fun x -> .~(f .<x>.)>.>.").unwrap();
        let a = infer_staged(&with_f(), &mut CheckerState::new(), &good).unwrap();
        assert_eq!(
            a.ty,
            Type::code(Type::code(Type::arrow(Type::Int, Type::Int)))
        );
    }

    #[test]
    fn stage_discipline() {
        let e = check("fun (c : int code) -> .~c").unwrap_err();
        assert_eq!(e.kind, DiagKind::EscapeAtTopLevel);
        assert_eq!((e.line, e.column), (1, 23));

        let e = check(".<fun x -> .~x>.").unwrap_err();
        assert_eq!(e.kind, DiagKind::StageError);

        let e = check(".<run .<1>.>.").unwrap_err();
        assert_eq!(e.kind, DiagKind::RunAtFutureStage);

        assert_eq!(check("nosuch").unwrap_err().kind, DiagKind::UnboundVar);
        assert_eq!(check("1 2").unwrap_err().kind, DiagKind::TypeMismatch);
        assert_eq!(check("run 1").unwrap_err().kind, DiagKind::TypeMismatch);
        assert_eq!(check(".<.~1>.").unwrap_err().kind, DiagKind::TypeMismatch);
    }

    #[test]
    fn cross_stage_persistence_is_allowed() {
        assert_eq!(
            ty("fun (x : int) -> .<x>."),
            Type::arrow(Type::Int, Type::code(Type::Int))
        );
        assert_eq!(
            ty(".<succ>."),
            Type::code(Type::arrow(Type::Int, Type::Int))
        );
    }

    #[test]
    fn annotations_record_stages() {
        let a = check(".<fun x -> .<fun y -> x + y>.>.").unwrap();
        let mut stages = Vec::new();
        a.walk(&mut |n| {
            if let Node::Var { name, stage, .. } = &n.node {
                stages.push((name.to_string(), stage.0));
            }
        });
        assert_eq!(
            stages,
            vec![("+".into(), 0), ("x".into(), 1), ("y".into(), 2)]
        );
    }

    #[test]
    fn ambiguity_is_reported_at_the_binder() {
        let e = check("1 + (fun x -> 2) (fun y -> y) ").unwrap_err();
        assert_eq!(e.kind, DiagKind::AmbiguousType);
        assert_eq!(e.column, 19);
    }

    #[test]
    fn inference_through_application() {
        let t = ty("(fun (e : int code -> int code) -> e) (fun z -> .<4 * 5 * .~z>.)");
        assert_eq!(t, Type::arrow(Type::code(Type::Int), Type::code(Type::Int)));
    }
}
