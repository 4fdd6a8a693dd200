//! Differential testing of the two translation pipelines.
//!
//! Every generated program goes through both pipelines. The static
//! properties are checked on the translated terms, then both results are
//! evaluated and compared.

use std::fmt;

use crate::combinators::GenState;
use crate::diagnostic::{DiagKind, Result};
use crate::eval::{eval, initial_renv, Runtime, Value};
use crate::gen::{gen_with, GenConfig};
use crate::syntax::{alpha_eq, Ann, Expr};
use crate::translate::{
    admits, check_no_nested_escapes, erase, is_base1, typecheck_base1, Pipeline,
};
use crate::typecheck::{infer_staged, initial_env, CheckerState, Env, Fault, Goal};

/// A property the harness checks on each program.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Prop {
    /// Both pipelines accept the program.
    Compile,
    /// Erased outputs are alpha-equivalent and have equal types.
    Agreement,
    /// Translated types equal the staged type.
    TypePreservation,
    /// No escape inside an escape in the optimized output.
    NoNestedEscapes,
    /// Stage-0 outputs are free of staging constructs.
    EscapeFree,
    /// Erased output re-checks as a plain term at the same type.
    Retypecheck,
    /// Evaluation results agree.
    Dynamic,
    /// Evaluation never trips an internal invariant.
    Soundness,
}

impl Prop {
    pub const ALL: [Prop; 8] = [
        Prop::Compile,
        Prop::Agreement,
        Prop::TypePreservation,
        Prop::NoNestedEscapes,
        Prop::EscapeFree,
        Prop::Retypecheck,
        Prop::Dynamic,
        Prop::Soundness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Prop::Compile => "compile",
            Prop::Agreement => "agreement",
            Prop::TypePreservation => "type-preservation",
            Prop::NoNestedEscapes => "no-nested-escapes",
            Prop::EscapeFree => "escape-free",
            Prop::Retypecheck => "retypecheck",
            Prop::Dynamic => "dynamic",
            Prop::Soundness => "soundness",
        }
    }
}

impl fmt::Display for Prop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Failure {
    pub seed: u64,
    pub program: String,
    pub baseline: String,
    pub optimized: String,
    pub prop: Prop,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DiffReport {
    pub total: usize,
    pub mismatches: usize,
    pub failures: Vec<Failure>,
    /// Programs whose result type is `int`.
    pub int_typed: usize,
    /// Programs whose result type is a code type.
    pub code_typed: usize,
}

impl DiffReport {
    pub fn count(&self, prop: Prop) -> usize {
        self.failures.iter().filter(|f| f.prop == prop).count()
    }

    fn push(&mut self, failure: Failure) {
        self.failures.push(failure);
        self.mismatches = self.failures.len();
    }
}

impl fmt::Display for DiffReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for failure in &self.failures {
            writeln!(f, "seed={} prop={}", failure.seed, failure.prop)?;
        }
        write!(f, "total={} mismatches={}", self.total, self.mismatches)
    }
}

/// Options beyond the corpus parameters.
#[derive(Clone, Copy, Debug, Default)]
pub struct DiffOptions {
    /// Inject a known bug into the optimized pipeline.
    pub fault: Option<Fault>,
}

/// Seed of the `i`-th program of a campaign.
pub fn program_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_add(i as u64)
}

pub fn diff_campaign(count: usize, size: usize, seed: u64) -> DiffReport {
    diff_campaign_with(count, size, seed, DiffOptions::default())
}

pub fn diff_campaign_with(
    count: usize,
    size: usize,
    seed: u64,
    options: DiffOptions,
) -> DiffReport {
    let env = initial_env();
    let mut report = DiffReport::default();
    for i in 0..count {
        let s = program_seed(seed, i);
        let program = gen_with(s, GenConfig::new(size), &env);
        check_program(&env, s, &program, options, &mut report);
        report.total += 1;
    }
    report
}

fn compile(env: &Env, e: &Expr, pipeline: Pipeline, fault: Option<Fault>) -> Result<Ann> {
    let mut st = CheckerState::new();
    if pipeline == Pipeline::Optimized {
        st.fault = fault;
    }
    pipeline.compile(env, &mut st, e, &Goal::default())
}

/// Outcome of evaluating a translated program, in comparable form.
#[derive(Clone, Debug, PartialEq)]
enum Outcome {
    Int(i64),
    Code(Expr),
    Other(String),
    Error(DiagKind),
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Int(i) => write!(f, "{i}"),
            Outcome::Code(e) => write!(f, "{}", crate::syntax::pretty_code(e)),
            Outcome::Other(s) => f.write_str(s),
            Outcome::Error(k) => write!(f, "error {k}"),
        }
    }
}

fn outcome(a: &Ann, pipeline: Pipeline) -> Outcome {
    let gen = GenState::new();
    let result = eval(Runtime::new(&gen, pipeline), &initial_renv(), a).and_then(|v| {
        v.display()?;
        Ok(v)
    });
    match result {
        Ok(Value::Int(i)) => Outcome::Int(i),
        Ok(Value::Code(c)) => Outcome::Code((*c.body).clone()),
        Ok(v) => Outcome::Other(v.display().unwrap_or_default()),
        Err(d) => Outcome::Error(d.kind),
    }
}

fn same_outcome(a: &Outcome, b: &Outcome) -> bool {
    match (a, b) {
        (Outcome::Code(x), Outcome::Code(y)) => alpha_eq(x, y),
        _ => a == b,
    }
}

fn retypechecks(env: &Env, out: &Ann) -> bool {
    match erase(out).and_then(|e| typecheck_base1(env, &e)) {
        Ok(t) => admits(&t.ty, &out.ty),
        Err(_) => false,
    }
}

fn check_program(
    env: &Env,
    seed: u64,
    program: &Expr,
    options: DiffOptions,
    report: &mut DiffReport,
) {
    let mut fail = |prop: Prop, baseline: String, optimized: String| {
        report.push(Failure {
            seed,
            program: program.to_string(),
            baseline,
            optimized,
            prop,
        })
    };
    let staged = match infer_staged(env, &mut CheckerState::new(), program) {
        Ok(s) => s,
        Err(d) => {
            // The generator promises well-typed programs.
            fail(Prop::Compile, d.to_string(), d.to_string());
            return;
        }
    };
    let base = compile(env, program, Pipeline::Baseline, None);
    let opt = compile(env, program, Pipeline::Optimized, options.fault);
    let (base, opt) = match (base, opt) {
        (Ok(b), Ok(o)) => (b, o),
        (b, o) => {
            let show = |r: &Result<Ann>| match r {
                Ok(a) => format!("ok : {}", a.ty),
                Err(d) => d.to_string(),
            };
            let nested = matches!(&o, Err(d) if d.message.contains("nested escape"));
            let prop = if nested {
                Prop::NoNestedEscapes
            } else {
                Prop::Compile
            };
            fail(prop, show(&b), show(&o));
            return;
        }
    };
    let base_text = || erase(&base).map(|e| e.to_string()).unwrap_or_default();
    let opt_text = || erase(&opt).map(|e| e.to_string()).unwrap_or_default();

    if base.ty != staged.ty || opt.ty != staged.ty {
        fail(
            Prop::TypePreservation,
            base.ty.to_string(),
            opt.ty.to_string(),
        );
    }
    let agree = match (erase(&base), erase(&opt)) {
        (Ok(b), Ok(o)) => alpha_eq(&b, &o) && base.ty == opt.ty,
        _ => false,
    };
    if !agree {
        fail(Prop::Agreement, base_text(), opt_text());
    }
    if !check_no_nested_escapes(&opt) {
        fail(Prop::NoNestedEscapes, base_text(), opt_text());
    }
    if !is_base1(&base) || !is_base1(&opt) {
        fail(Prop::EscapeFree, base_text(), opt_text());
    }
    if !retypechecks(env, &base) || !retypechecks(env, &opt) {
        fail(Prop::Retypecheck, base_text(), opt_text());
    }

    let b = outcome(&base, Pipeline::Baseline);
    let o = outcome(&opt, Pipeline::Optimized);
    if !same_outcome(&b, &o) {
        fail(Prop::Dynamic, b.to_string(), o.to_string());
    }
    if b == Outcome::Error(DiagKind::InternalInvariant)
        || o == Outcome::Error(DiagKind::InternalInvariant)
    {
        fail(Prop::Soundness, b.to_string(), o.to_string());
    }
    match staged.ty {
        crate::syntax::Type::Int => report.int_typed += 1,
        crate::syntax::Type::Code(_) => report.code_typed += 1,
        _ => {}
    }
}

/// Seeds of bracket-free programs whose optimized translation differs
/// structurally from plain staged elaboration.
pub fn zero_overhead_violations(count: usize, size: usize, seed: u64) -> Vec<u64> {
    let env = initial_env();
    (0..count)
        .map(|i| program_seed(seed, i))
        .filter(|&s| {
            let program = gen_with(s, GenConfig::bracket_free(size), &env);
            let staged = infer_staged(&env, &mut CheckerState::new(), &program);
            let translated = compile(&env, &program, Pipeline::Optimized, None);
            !matches!((staged, translated), (Ok(a), Ok(b)) if a == b)
        })
        .collect()
}
