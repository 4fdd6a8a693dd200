//! Random well-typed staged programs for differential testing.
//!
//! Generation is type directed: every choice is made against a target type
//! and stage, so the output is well typed by construction. Candidates are
//! still re-checked, and the generator retries until one passes.

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use crate::syntax::{Expr, Name, Type};
use crate::typecheck::{infer_staged, CheckerState, Env};

/// Bound on stage plus code depth anywhere in a generated term.
pub const MAX_LEVEL: u32 = 3;

const ATTEMPTS: usize = 64;

/// Generator knobs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenConfig {
    pub size: usize,
    /// Allow brackets, escapes, `run` and code types.
    pub staging: bool,
}

impl GenConfig {
    pub fn new(size: usize) -> GenConfig {
        GenConfig {
            size,
            staging: true,
        }
    }

    pub fn bracket_free(size: usize) -> GenConfig {
        GenConfig {
            size,
            staging: false,
        }
    }
}

/// A closed staged term of type `int` or of some code type, with at most
/// `size` nodes, deterministic in `seed`.
pub fn gen_well_typed(seed: u64, size: usize, env: &Env) -> Expr {
    gen_with(seed, GenConfig::new(size), env)
}

pub fn gen_with(seed: u64, config: GenConfig, env: &Env) -> Expr {
    let mut rng = StdRng::seed_from_u64(seed);
    let size = config.size.max(1);
    // Bias a share of the corpus toward the interesting paths.
    let want_nested = config.staging && rng.gen_bool(0.3);
    let want_csp = config.staging && !want_nested && rng.gen_bool(0.3 / 0.7);
    let mut fallback = None;
    for _ in 0..ATTEMPTS {
        let mut g = Gen {
            rng: &mut rng,
            staging: config.staging,
            scope: Vec::new(),
            next_name: 0,
        };
        let ty = g.top_type(size);
        let e = g.expr(&ty, 0, size);
        if e.size() > size || infer_staged(env, &mut CheckerState::new(), &e).is_err() {
            continue;
        }
        if (want_nested && !has_nested_bracket(&e)) || (want_csp && !has_cross_stage_use(&e)) {
            fallback.get_or_insert(e);
            continue;
        }
        return e;
    }
    fallback.unwrap_or(Expr::Int(0))
}

/// A bracket inside another bracket.
pub fn has_nested_bracket(e: &Expr) -> bool {
    fn go(e: &Expr, depth: u32) -> bool {
        match e.unloc() {
            Expr::Bracket(b) => depth >= 1 || go(b, depth + 1),
            Expr::Escape(b) => go(b, depth.saturating_sub(1)),
            Expr::App(f, a) => go(f, depth) || go(a, depth),
            Expr::Lam(_, _, b) | Expr::Run(b) => go(b, depth),
            _ => false,
        }
    }
    go(e, 0)
}

/// A variable (local or initial) used at a later stage than its binder.
pub fn has_cross_stage_use(e: &Expr) -> bool {
    fn go(e: &Expr, stage: u32, scope: &mut Vec<(Name, u32)>) -> bool {
        match e.unloc() {
            Expr::Var(x) => {
                let bound = scope
                    .iter()
                    .rev()
                    .find(|(y, _)| y == x)
                    .map_or(0, |(_, m)| *m);
                bound < stage
            }
            Expr::Lam(x, _, b) => {
                scope.push((x.clone(), stage));
                let found = go(b, stage, scope);
                scope.pop();
                found
            }
            Expr::App(f, a) => go(f, stage, scope) || go(a, stage, scope),
            Expr::Bracket(b) => go(b, stage + 1, scope),
            Expr::Escape(b) => go(b, stage.saturating_sub(1), scope),
            Expr::Run(b) => go(b, stage, scope),
            _ => false,
        }
    }
    go(e, 0, &mut Vec::new())
}

fn int_fn() -> Type {
    Type::arrow(Type::Int, Type::Int)
}

fn level(ty: &Type, stage: u32) -> u32 {
    stage + ty.code_depth()
}

/// Size of the smallest term this generator can always build at `ty`.
fn min_size(ty: &Type) -> usize {
    match ty {
        Type::Arrow(_, r) => 1 + min_size(r),
        Type::Code(t) => 1 + min_size(t),
        _ => 1,
    }
}

#[derive(Clone, Copy)]
enum Choice {
    Lit,
    Var,
    Succ,
    Arith,
    Lam,
    Redex,
    CallVar,
    Bracket,
    Escape,
    Run,
}

struct Gen<'r> {
    rng: &'r mut StdRng,
    staging: bool,
    // Bound variables with their binding stage, innermost last.
    scope: Vec<(Name, u32, Type)>,
    next_name: usize,
}

impl Gen<'_> {
    fn top_type(&mut self, size: usize) -> Type {
        if !self.staging || size < 2 {
            return Type::Int;
        }
        let pool = [
            Type::Int,
            Type::Int,
            Type::code(Type::Int),
            Type::code(Type::Int),
            Type::code(int_fn()),
            Type::code(Type::code(Type::Int)),
            Type::code(Type::arrow(Type::Int, Type::code(Type::Int))),
            Type::code(Type::code(Type::code(Type::Int))),
        ];
        let fitting: Vec<&Type> = pool.iter().filter(|t| min_size(t) <= size).collect();
        (*fitting.choose(self.rng).unwrap()).clone()
    }

    /// A type for a binder or argument at `stage`, cheap enough for `budget`.
    fn small_type(&mut self, stage: u32, budget: usize) -> Type {
        let mut pool = vec![Type::Int, Type::Int, int_fn()];
        if self.staging && stage < MAX_LEVEL {
            pool.push(Type::code(Type::Int));
            pool.push(Type::code(Type::Int));
            pool.push(Type::arrow(Type::code(Type::Int), Type::code(Type::Int)));
        }
        if self.staging && stage + 2 <= MAX_LEVEL {
            pool.push(Type::code(Type::code(Type::Int)));
        }
        pool.retain(|t| min_size(t) <= budget);
        pool.choose(self.rng).cloned().unwrap_or(Type::Int)
    }

    fn fresh(&mut self) -> Name {
        let n = self.next_name;
        self.next_name += 1;
        let letters = ["a", "b", "c", "d", "f", "g", "h", "k", "m", "n", "p", "q"];
        Name::source(format!("{}{}", letters[n % letters.len()], n / letters.len()).as_str())
    }

    fn vars_of(&self, ty: &Type, stage: u32) -> Vec<Name> {
        let mut out = Vec::new();
        for (i, (x, m, t)) in self.scope.iter().enumerate() {
            let shadowed = self.scope[i + 1..].iter().any(|(y, _, _)| y == x);
            if !shadowed && *m <= stage && t == ty {
                out.push(x.clone());
            }
        }
        out
    }

    /// Locally bound functions returning `ty`, with their argument types.
    fn callers_of(&self, ty: &Type, stage: u32) -> Vec<(Name, Type)> {
        let mut out = Vec::new();
        for (i, (x, m, t)) in self.scope.iter().enumerate() {
            let shadowed = self.scope[i + 1..].iter().any(|(y, _, _)| y == x);
            if let Type::Arrow(a, r) = t {
                if !shadowed && *m <= stage && **r == *ty {
                    out.push((x.clone(), (**a).clone()));
                }
            }
        }
        out
    }

    fn expr(&mut self, ty: &Type, stage: u32, budget: usize) -> Expr {
        let mut choices: Vec<(Choice, u32)> = Vec::new();
        let roomy = budget > min_size(ty) + 1;
        let leaf_weight = if roomy { 1 } else { 6 };
        if *ty == Type::Int {
            choices.push((Choice::Lit, leaf_weight));
        }
        if !self.vars_of(ty, stage).is_empty() {
            choices.push((Choice::Var, leaf_weight * 2));
        }
        if *ty == Type::Int && budget >= 3 {
            choices.push((Choice::Succ, 2));
        }
        if *ty == Type::Int && budget >= 5 {
            choices.push((Choice::Arith, 3));
        }
        match ty {
            Type::Arrow(_, r) if budget > min_size(r) => choices.push((Choice::Lam, 4)),
            Type::Code(t) if budget > min_size(t) => choices.push((Choice::Bracket, 6)),
            _ => {}
        }
        if budget >= min_size(ty) + 3 {
            choices.push((Choice::Redex, 3));
        }
        if budget >= 3 && !self.callers_of(ty, stage).is_empty() {
            choices.push((Choice::CallVar, 3));
        }
        let boxed = Type::code(ty.clone());
        if self.staging && stage >= 1 && budget > min_size(&boxed) {
            choices.push((Choice::Escape, 4));
        }
        if self.staging
            && stage == 0
            && level(&boxed, 0) <= MAX_LEVEL
            && budget > min_size(&boxed) + 1
        {
            choices.push((Choice::Run, 1));
        }

        let choice = match choices.choose_weighted(self.rng, |c| c.1) {
            Ok(c) => c.0,
            Err(_) => return self.minimal(ty, stage),
        };
        match choice {
            Choice::Lit => Expr::Int(self.rng.gen_range(-3..=12)),
            Choice::Var => {
                let vars = self.vars_of(ty, stage);
                Expr::Var(vars.choose(self.rng).unwrap().clone())
            }
            Choice::Succ => Expr::app(Expr::var("succ"), self.expr(&Type::Int, stage, budget - 2)),
            Choice::Arith => {
                let rest = budget - 3;
                let left = self.rng.gen_range(1..rest);
                let a = self.expr(&Type::Int, stage, left);
                let b = self.expr(&Type::Int, stage, rest - a.size());
                if self.rng.gen_bool(0.5) {
                    Expr::plus(a, b)
                } else {
                    Expr::times(a, b)
                }
            }
            Choice::Lam => {
                let Type::Arrow(d, r) = ty else {
                    unreachable!()
                };
                let x = self.fresh();
                self.scope.push((x.clone(), stage, (**d).clone()));
                let body = self.expr(r, stage, budget - 1);
                self.scope.pop();
                Expr::lam(x, Some((**d).clone()), body)
            }
            Choice::Bracket => {
                let Type::Code(t) = ty else { unreachable!() };
                Expr::bracket(self.expr(t, stage + 1, budget - 1))
            }
            Choice::Escape => Expr::escape(self.expr(&boxed, stage - 1, budget - 1)),
            Choice::Run => Expr::run(self.expr(&boxed, 0, budget - 1)),
            Choice::Redex => {
                // (fun (x : a) -> body) arg
                let spare = budget - 2 - min_size(ty);
                let a = self.small_type(stage, spare.max(1));
                let arg_budget = self.rng.gen_range(min_size(&a)..=spare.max(min_size(&a)));
                let arg = self.expr(&a, stage, arg_budget);
                let x = self.fresh();
                self.scope.push((x.clone(), stage, a.clone()));
                let body = self.expr(ty, stage, budget - 2 - arg.size());
                self.scope.pop();
                Expr::app(Expr::lam(x, Some(a), body), arg)
            }
            Choice::CallVar => {
                let callers = self.callers_of(ty, stage);
                let (f, a) = callers.choose(self.rng).unwrap().clone();
                if budget < 2 + min_size(&a) {
                    return self.minimal(ty, stage);
                }
                Expr::app(Expr::Var(f), self.expr(&a, stage, budget - 2))
            }
        }
    }

    /// The cheapest inhabitant: a literal under the required wrappers.
    fn minimal(&mut self, ty: &Type, stage: u32) -> Expr {
        match ty {
            Type::Arrow(d, r) => {
                let x = self.fresh();
                self.scope.push((x.clone(), stage, (**d).clone()));
                let body = self.minimal(r, stage);
                self.scope.pop();
                Expr::lam(x, Some((**d).clone()), body)
            }
            Type::Code(t) => Expr::bracket(self.minimal(t, stage + 1)),
            _ => Expr::Int(self.rng.gen_range(0..=9)),
        }
    }
}
