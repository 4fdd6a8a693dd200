use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stagecalc"))
}

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("stagecalc-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn run_prints_the_transcript() {
    let expected = std::fs::read_to_string(golden("eta_session.out")).unwrap();
    for pipeline in ["optimized", "baseline"] {
        let o = bin()
            .args(["--pipeline", pipeline, "run"])
            .arg(golden("eta_session.stc"))
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        assert_eq!(stdout(&o), expected);
    }
}

#[test]
fn empty_file() {
    let o = bin()
        .arg("run")
        .arg(scratch("empty.stc", ""))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
}

#[test]
fn diagnostics_exit_with_one() {
    let o = bin()
        .arg("run")
        .arg(scratch("esc.stc", ".~1;;"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("EscapeAtTopLevel"), "{}", stderr(&o));

    // Output before the failing phrase is still printed.
    let o = bin()
        .arg("run")
        .arg(scratch(
            "late.stc",
            "1;;\n.<fun (x : int) -> .<y>.>.;;\n2;;",
        ))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o), "- : int = 1\n");
    assert!(
        stderr(&o).contains("line 2, column 22: UnboundVar"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn io_and_usage_errors_exit_with_two() {
    let o = bin()
        .args(["run", "/nonexistent/file.stc"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin()
        .args(["--pipeline", "fast", "run", "x"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin().arg("frobnicate").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn check_prints_types_only() {
    let o = bin()
        .arg("check")
        .arg(golden("eta_session.stc"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        stdout(&o),
        "val eta : (int code -> int code) -> (int -> int) code\n\
         - : (int -> int) code\n\
         val g : int -> int\n\
         - : int\n"
    );
}

#[test]
fn dump_flags() {
    let file = scratch("dump.stc", ".<fun (x : int) -> x>.;;");
    let o = bin()
        .args(["--dump-ast", "--dump-typed", "--dump-translated", "run"])
        .arg(&file)
        .output()
        .unwrap();
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "ast: .<fun (x : int) -> x>.");
    assert!(lines[1].starts_with("typed: "));
    assert_eq!(lines[2], "translated: %mkl \"x\" (fun x -> x)");
    assert_eq!(lines[3], "- : (int -> int) code = .<fun x_1 -> x_1>.");
}

#[test]
fn repl_session() {
    let mut child = bin()
        .arg("repl")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(
            b"let eta = fun (f : int code -> int code) ->\n  .<fun x -> .~(f .<x>.)>.;;\n\
              .~1;;\neta (fun z -> .<4 * 5 * .~z>.);;\n",
        )
        .unwrap();
    let o = child.wait_with_output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("# "));
    assert!(out.contains("val eta : (int code -> int code) -> (int -> int) code = <fun>\n"));
    assert!(out.contains("Error: line 1, column 1: EscapeAtTopLevel"));
    // The failed phrase consumed no fresh names.
    assert!(
        out.contains("- : (int -> int) code = .<fun x_1 -> 4 * 5 * x_1>.\n"),
        "{out}"
    );
}

#[test]
fn diff_subcommand() {
    let o = bin()
        .args(["diff", "--count", "300", "--size", "10", "--seed", "5"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "total=300 mismatches=0\n");
}

#[test]
fn diff_reports_injected_bugs() {
    let o = bin()
        .args([
            "diff",
            "--count",
            "300",
            "--size",
            "12",
            "--seed",
            "7",
            "--inject-drop-mkes",
        ])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines.len() > 1);
    assert!(lines[..lines.len() - 1]
        .iter()
        .all(|l| l.starts_with("seed=") && l.contains(" prop=")));
    assert!(lines.last().unwrap().starts_with("total=300 mismatches="));
}
