//! One pass/fail line per acceptance criterion. Runs without the libtest
//! harness so the lines always reach the console.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use stagecalc::diff::{diff_campaign, zero_overhead_violations, Prop};
use stagecalc::parser::parse_expr;
use stagecalc::session::Session;
use stagecalc::syntax::{alpha_eq, Expr, Stage, Type};
use stagecalc::translate::{erase, Pipeline};
use stagecalc::typecheck::{infer_staged, initial_env, CheckerState, Goal};
use stagecalc::DiagKind;

const SEED: u64 = 20240601;
const CORPUS: usize = 10_000;
const SIZE: usize = 12;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: impl Into<String>) -> Outcome {
    if ok {
        Ok(detail.into())
    } else {
        Err(detail.into())
    }
}

fn golden_transcript() -> Outcome {
    let src = "let eta = fun (f : int code -> int code) -> .<fun x -> .~(f .<x>.)>.;;\n\
               eta (fun z -> .<4 * 5 * .~z>.);;\n\
               let g = run .<fun x_1 -> 4 * 5 * x_1>.;;\n\
               g 3;;\n";
    let start = Instant::now();
    let mut transcripts = Vec::new();
    for pipeline in [Pipeline::Optimized, Pipeline::Baseline] {
        let out = Session::new(pipeline)
            .transcript(src)
            .map_err(|d| d.to_string())?;
        transcripts.push(out);
    }
    let elapsed = start.elapsed();
    let lines: Vec<&str> = transcripts[0].lines().collect();
    let ok = lines.get(1) == Some(&"- : (int -> int) code = .<fun x_1 -> 4 * 5 * x_1>.")
        && lines.get(3) == Some(&"- : int = 60")
        && transcripts[0] == transcripts[1]
        && elapsed < Duration::from_secs(1);
    check(
        ok,
        format!(
            "{} lines, identical across pipelines, {elapsed:.2?}",
            lines.len()
        ),
    )
}

fn optimized(src: &str) -> Result<(Expr, Type), String> {
    let e = parse_expr(src).map_err(|d| d.to_string())?;
    let a = Pipeline::Optimized
        .compile(
            &initial_env(),
            &mut CheckerState::new(),
            &e,
            &Goal::default(),
        )
        .map_err(|d| d.to_string())?;
    Ok((erase(&a).map_err(|d| d.to_string())?, a.ty))
}

fn translation_fixtures() -> Outcome {
    let v = Expr::var;
    let prim = |name: &str, args: Vec<Expr>| Expr::apps(Expr::var(name), args);

    let eta_expected = Expr::lam(
        "f",
        None,
        prim(
            "%mkl",
            vec![
                Expr::str("x"),
                Expr::lam("x", None, Expr::app(v("f"), v("x"))),
            ],
        ),
    );
    let (eta, eta_ty) = optimized("fun (f : int code -> int code) -> .<fun x -> .~(f .<x>.)>.")?;

    let sum = prim(
        "%mka",
        vec![
            prim("%mka", vec![prim("%mkid", vec![Expr::str("+")]), v("x")]),
            v("y"),
        ],
    );
    let inner = prim("%mkl", vec![Expr::str("y"), Expr::lam("y", None, sum)]);
    let two_expected = prim(
        "%mkl",
        vec![
            Expr::str("x"),
            Expr::lam("x", None, prim("%mkbr", vec![inner])),
        ],
    );
    let (two, two_ty) = optimized(".<fun x -> .<fun y -> x + y>.>.")?;

    let ok = alpha_eq(&eta, &eta_expected)
        && eta_ty.to_string() == "(int code -> int code) -> (int -> int) code"
        && alpha_eq(&two, &two_expected)
        && two_ty.to_string() == "(int -> (int -> int) code) code";
    check(
        ok,
        format!("eta: {eta} : {eta_ty}; two-binder: {two} : {two_ty}"),
    )
}

fn typing_fixtures() -> Outcome {
    let env = initial_env();
    let with_f = env.extend(
        "f".into(),
        Stage::PRESENT,
        Type::arrow(Type::code(Type::Int), Type::code(Type::Int)),
    );
    let infer = |env: &stagecalc::typecheck::Env, src: &str| {
        infer_staged(env, &mut CheckerState::new(), &parse_expr(src).unwrap())
    };
    let cases: Vec<(&str, bool, Result<String, DiagKind>)> = vec![
        (".<.<.~(.<1>.)>.>.", false, Ok("int code code".into())),
        (".<.<fun x -> .~(f x)>.>.", true, Err(DiagKind::StageError)),
        (
            ".<.<fun x -> .~(f .<x>.)>.>.",
            true,
            Ok("(int -> int) code code".into()),
        ),
        (".~(.<1>.)", false, Err(DiagKind::EscapeAtTopLevel)),
        (".<fun x -> .~x>.", false, Err(DiagKind::StageError)),
    ];
    let mut deviations = Vec::new();
    for (src, needs_f, expected) in &cases {
        let got = infer(if *needs_f { &with_f } else { &env }, src)
            .map(|a| a.ty.to_string())
            .map_err(|d| d.kind);
        if &got != expected {
            deviations.push(format!("{src}: {got:?}"));
        }
    }
    check(
        deviations.is_empty(),
        format!(
            "{} fixtures, {} deviations {deviations:?}",
            cases.len(),
            deviations.len()
        ),
    )
}

fn metatheory() -> Outcome {
    let start = Instant::now();
    let report = diff_campaign(CORPUS, SIZE, SEED);
    let elapsed = start.elapsed();
    let props = [
        Prop::Compile,
        Prop::Agreement,
        Prop::TypePreservation,
        Prop::NoNestedEscapes,
        Prop::EscapeFree,
        Prop::Retypecheck,
    ];
    let counts: Vec<String> = props
        .iter()
        .map(|p| format!("{p}={}", report.count(*p)))
        .collect();
    let ok = report.total == CORPUS
        && props.iter().all(|p| report.count(*p) == 0)
        && elapsed < Duration::from_secs(60);
    check(
        ok,
        format!(
            "{} programs, {}, {elapsed:.2?}",
            report.total,
            counts.join(" ")
        ),
    )
}

fn dynamic_equivalence() -> Outcome {
    let report = diff_campaign(CORPUS, SIZE, SEED);
    let out = Command::new(env!("CARGO_BIN_EXE_stagecalc"))
        .args([
            "diff",
            "--count",
            &CORPUS.to_string(),
            "--size",
            &SIZE.to_string(),
        ])
        .args(["--seed", &SEED.to_string()])
        .output()
        .map_err(|e| e.to_string())?;
    let summary = String::from_utf8_lossy(&out.stdout).trim().to_string();
    let ok = report.count(Prop::Dynamic) == 0
        && report.count(Prop::Soundness) == 0
        && report.int_typed > 0
        && report.code_typed > 0
        && out.status.code() == Some(0)
        && summary == format!("total={CORPUS} mismatches=0");
    check(
        ok,
        format!(
            "{} int-typed, {} code-typed, `stagecalc diff` exit {:?}: {summary}",
            report.int_typed,
            report.code_typed,
            out.status.code()
        ),
    )
}

fn multi_stage_reentry() -> Outcome {
    let src =
        "let c2 = .<.<1>.>.;;\nrun (run c2);;\nlet c3 = .<.<.<1>.>.>.;;\nrun (run (run c3));;\n";
    let out = Session::default()
        .transcript(src)
        .map_err(|d| d.to_string())?;
    let lines: Vec<&str> = out.lines().collect();
    let ok = lines.get(1) == Some(&"- : int = 1") && lines.get(3) == Some(&"- : int = 1");
    check(ok, lines.join(" | "))
}

fn zero_overhead() -> Outcome {
    let violations = zero_overhead_violations(1000, SIZE, SEED);
    check(
        violations.is_empty(),
        format!(
            "1000 bracket-free programs, {} deviations",
            violations.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("golden transcript", golden_transcript),
        ("translation fixtures", translation_fixtures),
        ("typing fixtures", typing_fixtures),
        ("metatheory suite", metatheory),
        ("dynamic equivalence", dynamic_equivalence),
        ("multi-stage re-entry", multi_stage_reentry),
        ("zero overhead", zero_overhead),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {} ({name}): PASS: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL: {detail}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
