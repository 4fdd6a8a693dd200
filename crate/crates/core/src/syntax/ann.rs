use std::fmt;
use std::rc::Rc;

use super::{Name, Stage, Type};
use crate::eval::Value;

/// The code-generating combinators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CombinatorId {
    Lift,
    MkId,
    MkA,
    MkL,
    MkBr,
    MkEs,
}

impl CombinatorId {
    pub const ALL: [CombinatorId; 6] = [
        CombinatorId::Lift,
        CombinatorId::MkId,
        CombinatorId::MkA,
        CombinatorId::MkL,
        CombinatorId::MkBr,
        CombinatorId::MkEs,
    ];

    /// Reserved variable name used for the combinator in erased terms.
    pub fn reserved_name(self) -> &'static str {
        match self {
            CombinatorId::Lift => "%lift",
            CombinatorId::MkId => "%mkid",
            CombinatorId::MkA => "%mka",
            CombinatorId::MkL => "%mkl",
            CombinatorId::MkBr => "%mkbr",
            CombinatorId::MkEs => "%mkes",
        }
    }

    pub fn from_reserved(name: &str) -> Option<CombinatorId> {
        CombinatorId::ALL
            .into_iter()
            .find(|c| c.reserved_name() == name)
    }

    /// Number of arguments the runtime combinator consumes. `mkl` takes a
    /// name hint before the function.
    pub fn arity(self) -> usize {
        match self {
            CombinatorId::MkA | CombinatorId::MkL => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for CombinatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.reserved_name()[1..])
    }
}

/// A type-annotated node.
#[derive(Clone, Debug, PartialEq)]
pub struct Ann {
    pub node: Node,
    pub ty: Type,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Int(i64),
    Str(Rc<str>),
    /// `stage` is the binding stage. `initial` is set when the reference
    /// resolves to the initial environment rather than a local binder.
    Var {
        name: Name,
        stage: Stage,
        initial: bool,
    },
    App(Rc<Ann>, Rc<Ann>),
    Lam {
        param: Name,
        stage: Stage,
        param_ty: Type,
        body: Rc<Ann>,
    },
    Bracket(Rc<Ann>),
    /// `marked` escapes are the ones left behind by the integrated
    /// translation, to be removed by the selective translation.
    Escape {
        body: Rc<Ann>,
        marked: bool,
    },
    Run(Rc<Ann>),
    Csp {
        value: Value,
        label: Name,
    },
    /// A combinator occurrence at its concrete instance type (`ty`).
    Prim(CombinatorId),
}

impl Ann {
    pub fn new(node: Node, ty: Type) -> Ann {
        Ann { node, ty }
    }

    pub fn int(i: i64) -> Ann {
        Ann::new(Node::Int(i), Type::Int)
    }

    pub fn str(s: &str) -> Ann {
        Ann::new(Node::Str(s.into()), Type::Str)
    }

    pub fn app(f: Ann, a: Ann, ty: Type) -> Ann {
        Ann::new(Node::App(Rc::new(f), Rc::new(a)), ty)
    }

    pub fn prim(op: CombinatorId, instance: Type) -> Ann {
        Ann::new(Node::Prim(op), instance)
    }

    /// Applies `prim op @ instance` to `args`; the result type is read off
    /// the instance.
    pub fn prim_app(op: CombinatorId, instance: Type, args: Vec<Ann>) -> Ann {
        let mut acc = Ann::prim(op, instance);
        for arg in args {
            let ty = match &acc.ty {
                Type::Arrow(_, cod) => (**cod).clone(),
                other => panic!("combinator instance {other} is not a function type"),
            };
            acc = Ann::app(acc, arg, ty);
        }
        acc
    }

    /// Visits every node in pre-order.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Ann)) {
        f(self);
        match &self.node {
            Node::App(a, b) => {
                a.walk(f);
                b.walk(f);
            }
            Node::Lam { body, .. }
            | Node::Bracket(body)
            | Node::Escape { body, .. }
            | Node::Run(body) => body.walk(f),
            _ => {}
        }
    }

    pub fn count(&self, mut pred: impl FnMut(&Ann) -> bool) -> usize {
        let mut n = 0;
        self.walk(&mut |a| {
            if pred(a) {
                n += 1
            }
        });
        n
    }

    /// Rebuilds the tree with every type passed through `f`.
    pub fn map_types(&self, f: &mut impl FnMut(&Type) -> Type) -> Ann {
        let node = match &self.node {
            Node::App(a, b) => Node::App(Rc::new(a.map_types(f)), Rc::new(b.map_types(f))),
            Node::Lam {
                param,
                stage,
                param_ty,
                body,
            } => Node::Lam {
                param: param.clone(),
                stage: *stage,
                param_ty: f(param_ty),
                body: Rc::new(body.map_types(f)),
            },
            Node::Bracket(b) => Node::Bracket(Rc::new(b.map_types(f))),
            Node::Escape { body, marked } => Node::Escape {
                body: Rc::new(body.map_types(f)),
                marked: *marked,
            },
            Node::Run(b) => Node::Run(Rc::new(b.map_types(f))),
            other => other.clone(),
        };
        Ann::new(node, f(&self.ty))
    }
}

/// S-expression rendering with types, for `--dump-typed`.
impl fmt::Display for Ann {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        match &self.node {
            Node::Int(i) => write!(f, "{i}")?,
            Node::Str(s) => write!(f, "{s:?}")?,
            Node::Var { name, stage, .. } => write!(f, "{name}^{stage}")?,
            Node::App(a, b) => write!(f, "(app {a} {b})")?,
            Node::Lam {
                param,
                stage,
                param_ty,
                body,
            } => write!(f, "(fun {param}^{stage} : {param_ty} -> {body})")?,
            Node::Bracket(b) => write!(f, ".<{b}>.")?,
            Node::Escape { body, marked } => {
                write!(f, ".~{}({body})", if *marked { "!" } else { "" })?
            }
            Node::Run(b) => write!(f, "(run {b})")?,
            Node::Csp { label, .. } => write!(f, "(csp {label})")?,
            Node::Prim(op) => write!(f, "{op}")?,
        }
        write!(f, " : {}]", self.ty)
    }
}
