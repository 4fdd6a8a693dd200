//! Call-by-value evaluation of translated (combinator-level) terms.
//!
//! Evaluation only ever happens at the present stage: the translator has
//! already turned every bracket into combinator calls. `run` closes the
//! loop by elaborating a code value's body again, translating the brackets
//! it contains, and evaluating the result.

use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use crate::combinators::{self, CodeValue, GenState};
use crate::diagnostic::{DiagKind, Diagnostic, Result};
use crate::syntax::{free_vars, pretty_code, Ann, CombinatorId, Name, Node, Type};
use crate::translate::Pipeline;
use crate::typecheck::{initial_env, CheckerState, Goal, INITIAL_NAMES};

#[derive(Clone, Debug, PartialEq)]
pub enum PrimOp {
    Succ,
    Add,
    Mul,
    /// A combinator at its instance type.
    Comb(CombinatorId, Type),
}

impl PrimOp {
    fn arity(&self) -> usize {
        match self {
            PrimOp::Succ => 1,
            PrimOp::Add | PrimOp::Mul => 2,
            PrimOp::Comb(op, _) => op.arity(),
        }
    }
}

pub struct Closure {
    pub param: Name,
    pub body: Rc<Ann>,
    pub env: REnv,
}

/// A primitive together with the arguments collected so far.
#[derive(Clone, Debug, PartialEq)]
pub struct PrimApp {
    pub op: PrimOp,
    pub args: Vec<Value>,
}

#[derive(Clone)]
pub enum Value {
    Int(i64),
    Str(Rc<str>),
    Closure(Rc<Closure>),
    Prim(Rc<PrimApp>),
    Code(CodeValue),
}

impl Value {
    pub fn prim(op: PrimOp) -> Value {
        Value::Prim(Rc::new(PrimApp {
            op,
            args: Vec::new(),
        }))
    }

    pub fn prim_succ() -> Value {
        Value::prim(PrimOp::Succ)
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_code(&self) -> Option<&CodeValue> {
        match self {
            Value::Code(c) => Some(c),
            _ => None,
        }
    }

    /// Toplevel rendering. Code that still has unsealed fresh names is a
    /// scope extrusion.
    pub fn display(&self) -> Result<String> {
        Ok(match self {
            Value::Int(i) => i.to_string(),
            Value::Str(s) => format!("{s:?}"),
            Value::Closure(_) | Value::Prim(_) => "<fun>".to_string(),
            Value::Code(c) => {
                check_sealed(c)?;
                pretty_code(&c.body)
            }
        })
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "Int({i})"),
            Value::Str(s) => write!(f, "Str({s:?})"),
            Value::Closure(c) => write!(f, "Closure({})", c.param),
            Value::Prim(p) => write!(f, "Prim({:?}, {} args)", p.op, p.args.len()),
            Value::Code(c) => write!(f, "Code({})", pretty_code(&c.body)),
        }
    }
}

/// Functions compare by identity; everything else structurally.
impl PartialEq for Value {
    fn eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Str(a), Value::Str(b)) => a == b,
            (Value::Closure(a), Value::Closure(b)) => Rc::ptr_eq(a, b),
            (Value::Prim(a), Value::Prim(b)) => Rc::ptr_eq(a, b) || a == b,
            (Value::Code(a), Value::Code(b)) => a == b,
            _ => false,
        }
    }
}

struct Frame {
    name: Name,
    value: Value,
    next: Option<Rc<Frame>>,
}

/// Runtime environment: local frames over a table of globals.
#[derive(Clone)]
pub struct REnv {
    globals: Rc<HashMap<Name, Value>>,
    locals: Option<Rc<Frame>>,
}

pub fn initial_renv() -> REnv {
    let globals = HashMap::from([
        (Name::from("succ"), Value::prim(PrimOp::Succ)),
        (Name::from("+"), Value::prim(PrimOp::Add)),
        (Name::from("*"), Value::prim(PrimOp::Mul)),
    ]);
    REnv {
        globals: Rc::new(globals),
        locals: None,
    }
}

impl Default for REnv {
    fn default() -> REnv {
        initial_renv()
    }
}

impl REnv {
    pub fn lookup(&self, x: &Name) -> Option<&Value> {
        let mut frame = self.locals.as_deref();
        while let Some(f) = frame {
            if &f.name == x {
                return Some(&f.value);
            }
            frame = f.next.as_deref();
        }
        self.globals.get(x)
    }

    pub fn extend(&self, name: Name, value: Value) -> REnv {
        REnv {
            globals: Rc::clone(&self.globals),
            locals: Some(Rc::new(Frame {
                name,
                value,
                next: self.locals.clone(),
            })),
        }
    }
}

/// What evaluation needs besides the environment: the fresh-name supply
/// shared by every nested `run`, and the translation route `run` uses.
#[derive(Clone, Copy)]
pub struct Runtime<'g> {
    pub gen: &'g GenState,
    pub pipeline: Pipeline,
}

impl<'g> Runtime<'g> {
    pub fn new(gen: &'g GenState, pipeline: Pipeline) -> Runtime<'g> {
        Runtime { gen, pipeline }
    }
}

fn internal(msg: impl Into<String>) -> Diagnostic {
    Diagnostic::internal(msg)
}

pub fn eval(rt: Runtime<'_>, env: &REnv, e: &Ann) -> Result<Value> {
    match &e.node {
        Node::Int(i) => Ok(Value::Int(*i)),
        Node::Str(s) => Ok(Value::Str(s.clone())),
        Node::Var { name, .. } => env
            .lookup(name)
            .cloned()
            .ok_or_else(|| internal(format!("no runtime value for `{name}`"))),
        Node::App(f, a) => {
            if let (Node::Prim(CombinatorId::Lift), Type::Arrow(t, _)) = (&f.node, &f.ty) {
                // Lift directly so a CSP constant is labelled by its source name.
                let label = match &a.node {
                    Node::Var { name, .. } => name.clone(),
                    Node::Csp { label, .. } => label.clone(),
                    _ => Name::from("v"),
                };
                let v = eval(rt, env, a)?;
                return Ok(Value::Code(combinators::lift_value(&v, t, &label)));
            }
            let fv = eval(rt, env, f)?;
            let av = eval(rt, env, a)?;
            apply(rt, &fv, av)
        }
        Node::Lam { param, body, .. } => Ok(Value::Closure(Rc::new(Closure {
            param: param.clone(),
            body: Rc::clone(body),
            env: env.clone(),
        }))),
        Node::Run(body) => match eval(rt, env, body)? {
            Value::Code(c) => run_code(rt, &c, &e.ty),
            other => Err(internal(format!(
                "`run` applied to non-code value {other:?}"
            ))),
        },
        Node::Csp { value, .. } => Ok(value.clone()),
        Node::Prim(op) => Ok(Value::prim(PrimOp::Comb(*op, e.ty.clone()))),
        Node::Bracket(_) | Node::Escape { .. } => {
            Err(internal("staging construct reached the evaluator"))
        }
    }
}

pub fn apply(rt: Runtime<'_>, f: &Value, arg: Value) -> Result<Value> {
    match f {
        Value::Closure(c) => eval(rt, &c.env.extend(c.param.clone(), arg), &c.body),
        Value::Prim(p) => {
            let mut args = p.args.clone();
            args.push(arg);
            if args.len() < p.op.arity() {
                Ok(Value::Prim(Rc::new(PrimApp {
                    op: p.op.clone(),
                    args,
                })))
            } else {
                exec(rt, &p.op, args)
            }
        }
        other => Err(internal(format!("cannot apply non-function {other:?}"))),
    }
}

fn code_arg(v: &Value) -> Result<&CodeValue> {
    v.as_code()
        .ok_or_else(|| internal(format!("combinator expected code, got {v:?}")))
}

fn str_arg(v: &Value) -> Result<&str> {
    match v {
        Value::Str(s) => Ok(s),
        other => Err(internal(format!(
            "combinator expected a string, got {other:?}"
        ))),
    }
}

fn int_arg(v: &Value) -> Result<i64> {
    v.as_int()
        .ok_or_else(|| internal(format!("arithmetic on non-integer {v:?}")))
}

// Integer arithmetic wraps on overflow.
fn exec(rt: Runtime<'_>, op: &PrimOp, args: Vec<Value>) -> Result<Value> {
    let code = |c: CodeValue| Ok(Value::Code(c));
    match op {
        PrimOp::Succ => Ok(Value::Int(int_arg(&args[0])?.wrapping_add(1))),
        PrimOp::Add => Ok(Value::Int(
            int_arg(&args[0])?.wrapping_add(int_arg(&args[1])?),
        )),
        PrimOp::Mul => Ok(Value::Int(
            int_arg(&args[0])?.wrapping_mul(int_arg(&args[1])?),
        )),
        PrimOp::Comb(comb, instance) => match comb {
            CombinatorId::Lift => {
                let Type::Arrow(t, _) = instance else {
                    return Err(internal("lift instance is not a function type"));
                };
                code(combinators::lift_value(&args[0], t, &Name::from("v")))
            }
            CombinatorId::MkId => {
                let t = match instance {
                    Type::Arrow(_, cod) => match &**cod {
                        Type::Code(t) => (**t).clone(),
                        _ => return Err(internal("mkid instance is not string -> t code")),
                    },
                    _ => return Err(internal("mkid instance is not a function type")),
                };
                code(combinators::mkid(str_arg(&args[0])?, &t)?)
            }
            CombinatorId::MkA => code(combinators::mka(code_arg(&args[0])?, code_arg(&args[1])?)),
            CombinatorId::MkL => {
                let hint = str_arg(&args[0])?;
                let body_fn = &args[1];
                code(combinators::mkl(rt.gen, hint, |var| {
                    match apply(rt, body_fn, Value::Code(var))? {
                        Value::Code(c) => Ok(c),
                        other => Err(internal(format!("mkl body returned non-code {other:?}"))),
                    }
                })?)
            }
            CombinatorId::MkBr => code(combinators::mkbr(code_arg(&args[0])?)),
            CombinatorId::MkEs => code(combinators::mkes(code_arg(&args[0])?)),
        },
    }
}

fn check_sealed(c: &CodeValue) -> Result<()> {
    if c.pending.is_empty() {
        return Ok(());
    }
    let names: Vec<String> = c.pending.iter().map(|n| n.to_string()).collect();
    Err(Diagnostic::unplaced(
        DiagKind::ScopeExtrusion,
        format!(
            "code mentions {} outside the scope of its binder: {}",
            names.join(", "),
            pretty_code(&c.body)
        ),
    ))
}

/// Turns closed code into a value: re-elaborate the body (translating any
/// brackets it contains), then evaluate it in a fresh initial environment.
/// `expected` is the static type of the result.
pub fn run_code(rt: Runtime<'_>, c: &CodeValue, expected: &Type) -> Result<Value> {
    check_sealed(c)?;
    let open: Vec<String> = free_vars(&c.body)
        .into_iter()
        .filter(|x| x.is_fresh() || !INITIAL_NAMES.contains(&x.base()))
        .map(|x| x.to_string())
        .collect();
    if !open.is_empty() {
        return Err(Diagnostic::unplaced(
            DiagKind::ScopeExtrusion,
            format!(
                "cannot run open code (free: {}): {}",
                open.join(", "),
                pretty_code(&c.body)
            ),
        ));
    }
    let goal = Goal {
        expected: Some(expected.clone()),
        default_ambiguous: true,
    };
    let translated = rt
        .pipeline
        .compile(&initial_env(), &mut CheckerState::new(), &c.body, &goal)
        .map_err(|d| {
            internal(format!(
                "generated code failed to re-elaborate ({}: {}): {}",
                d.kind,
                d.message,
                pretty_code(&c.body)
            ))
        })?;
    eval(rt, &initial_renv(), &translated)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_expr;
    use crate::syntax::Expr;
    use crate::translate::infer_translate;

    fn run_src(src: &str) -> Value {
        let gen = GenState::new();
        let rt = Runtime::new(&gen, Pipeline::Optimized);
        let ann = infer_translate(
            &initial_env(),
            &mut CheckerState::new(),
            &parse_expr(src).unwrap(),
        )
        .unwrap();
        eval(rt, &initial_renv(), &ann).unwrap()
    }

    fn shown(src: &str) -> String {
        run_src(src).display().unwrap()
    }

    #[test]
    fn arithmetic() {
        let gen = GenState::new();
        let rt = Runtime::new(&gen, Pipeline::Optimized);
        let env = initial_renv();
        let plus = env.lookup(&Name::from("+")).unwrap().clone();
        let partial = apply(rt, &plus, Value::Int(4)).unwrap();
        assert_eq!(apply(rt, &partial, Value::Int(5)).unwrap(), Value::Int(9));
        let times = env.lookup(&Name::from("*")).unwrap().clone();
        let partial = apply(rt, &times, Value::Int(4)).unwrap();
        assert_eq!(apply(rt, &partial, Value::Int(5)).unwrap(), Value::Int(20));
        assert_eq!(shown("1"), "1");
        assert_eq!(shown("succ 41"), "42");
    }

    #[test]
    fn eta_application_generates_code() {
        let src = "(fun (f : int code -> int code) -> .<fun x -> .~(f .<x>.)>.) (fun z -> .<4 * 5 * .~z>.)";
        assert_eq!(shown(src), ".<fun x_1 -> 4 * 5 * x_1>.");
    }

    #[test]
    fn quoted_products_are_not_reduced() {
        assert_eq!(shown(".<4 * 5>."), ".<4 * 5>.");
        assert_eq!(shown("run .<4 * 5>."), "20");
    }

    #[test]
    fn nested_code_keeps_brackets() {
        let v = run_src(".<fun x -> .<fun y -> x + y>.>.");
        let c = v.as_code().unwrap();
        assert!(matches!(&*c.body, Expr::Lam(_, _, b) if matches!(**b, Expr::Bracket(_))));
        assert_eq!(
            v.display().unwrap(),
            ".<fun x_1 -> .<fun y_2 -> x_1 + y_2>.>."
        );
    }

    #[test]
    fn run_re_enters_translation() {
        assert_eq!(shown("run .<1>."), "1");
        assert_eq!(shown("run .<.<1>.>."), ".<1>.");
        assert_eq!(shown("run (run .<.<1>.>.)"), "1");
        assert_eq!(shown("run (run .<.<.~(.<1>.)>.>.)"), "1");
        assert_eq!(shown("run (run (run .<.<.<1>.>.>.))"), "1");
        assert_eq!(shown("run .<fun x -> 4 * 5 * x>. 3"), "60");
    }

    #[test]
    fn csp_values() {
        assert_eq!(
            shown("(fun (h : int -> int) -> .<h 1>.) succ"),
            ".<(* CSP h *) 1>."
        );
        assert_eq!(shown("run ((fun (h : int -> int) -> .<h 1>.) succ)"), "2");
        assert_eq!(shown("(fun (n : int) -> .<n + 1>.) 41"), ".<41 + 1>.");
        // A code value persisted into deeper code is quoted.
        assert_eq!(shown("(fun (c : int code) -> .<c>.) .<7>."), ".<.<7>.>.");
        // Persisted closures survive re-elaboration under another bracket.
        assert_eq!(
            shown("run (run ((fun (h : int -> int) -> .<.<h 2>.>.) succ))"),
            "3"
        );
    }

    #[test]
    fn cross_stage_variable_is_lifted_when_run() {
        assert_eq!(
            shown("run .<fun x -> .<fun y -> x + y>.>. 3"),
            ".<fun y_3 -> 3 + y_3>."
        );
    }

    #[test]
    fn running_open_code_is_scope_extrusion() {
        let gen = GenState::new();
        let rt = Runtime::new(&gen, Pipeline::Optimized);
        let src = ".<fun (x : int) -> .~(run .<.<x>.>.)>.";
        let ann = infer_translate(
            &initial_env(),
            &mut CheckerState::new(),
            &parse_expr(src).unwrap(),
        )
        .unwrap();
        let err = eval(rt, &initial_renv(), &ann).unwrap_err();
        assert_eq!(err.kind, DiagKind::ScopeExtrusion);

        let open = CodeValue::closed(Expr::var("y"));
        let err = run_code(rt, &open, &Type::Int).unwrap_err();
        assert_eq!(err.kind, DiagKind::ScopeExtrusion);
    }

    #[test]
    fn unsealed_code_cannot_be_displayed() {
        let x = Name::fresh("x", 1);
        let c = CodeValue {
            body: Rc::new(Expr::Var(x.clone())),
            pending: Rc::new([x].into()),
        };
        assert_eq!(
            Value::Code(c).display().unwrap_err().kind,
            DiagKind::ScopeExtrusion
        );
    }

    #[test]
    fn unconstrained_generated_binders_still_run() {
        assert_eq!(shown("run .<fun (k : int -> int) -> 1>. succ"), "1");
    }
}
