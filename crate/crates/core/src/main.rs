use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use stagecalc::diff::{diff_campaign_with, DiffOptions};
use stagecalc::parser::parse_program;
use stagecalc::session::{Dumps, Session};
use stagecalc::translate::Pipeline;
use stagecalc::typecheck::Fault;

const EXIT_DIAGNOSTIC: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_MISMATCH: u8 = 3;

#[derive(Parser)]
#[command(
    name = "stagecalc",
    version,
    about = "A multi-stage calculus with brackets, escapes and run"
)]
struct Cli {
    /// Translation route: baseline or optimized.
    #[arg(long, global = true, default_value = "optimized")]
    pipeline: Pipeline,
    /// Print each phrase as parsed.
    #[arg(long, global = true)]
    dump_ast: bool,
    /// Print each phrase after staged type reconstruction.
    #[arg(long, global = true)]
    dump_typed: bool,
    /// Print each phrase after translation to combinators.
    #[arg(long, global = true)]
    dump_translated: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Interactive toplevel; phrases end with `;;`.
    Repl,
    /// Evaluate a file of phrases.
    Run { file: PathBuf },
    /// Type check a file of phrases without evaluating.
    Check { file: PathBuf },
    /// Compare both pipelines on generated programs.
    Diff {
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 8)]
        size: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Break the optimized pipeline on purpose, to check the harness.
        #[arg(long, hide = true)]
        inject_drop_mkes: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_IO)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let dumps = Dumps {
        ast: cli.dump_ast,
        typed: cli.dump_typed,
        translated: cli.dump_translated,
    };
    let session = Session::new(cli.pipeline).with_dumps(dumps);
    match cli.command {
        Command::Repl => repl(session),
        Command::Run { file } => run_file(session, &file, false),
        Command::Check { file } => run_file(session, &file, true),
        Command::Diff {
            count,
            size,
            seed,
            inject_drop_mkes,
        } => {
            let options = DiffOptions {
                fault: inject_drop_mkes.then_some(Fault::DropMkes),
            };
            let report = diff_campaign_with(count, size, seed, options);
            println!("{report}");
            if report.mismatches == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_MISMATCH)
            }
        }
    }
}

fn run_file(mut session: Session, path: &Path, check_only: bool) -> ExitCode {
    let src = match std::fs::read_to_string(path) {
        Ok(src) => src,
        Err(e) => {
            eprintln!("stagecalc: cannot read {}: {e}", path.display());
            return ExitCode::from(EXIT_IO);
        }
    };
    let stdout = io::stdout();
    let result = session.run_source(&src, check_only, |text| {
        let _ = writeln!(stdout.lock(), "{text}");
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(d) => {
            eprintln!("{}: {d}", path.display());
            ExitCode::from(EXIT_DIAGNOSTIC)
        }
    }
}

fn repl(mut session: Session) -> ExitCode {
    let stdin = io::stdin();
    let mut stdout = io::stdout();
    let mut buffer = String::new();
    loop {
        if buffer.trim().is_empty() {
            buffer.clear();
            print!("# ");
        } else {
            print!("  ");
        }
        let _ = stdout.flush();
        let mut line = String::new();
        match stdin.lock().read_line(&mut line) {
            Ok(0) => {
                println!();
                return ExitCode::SUCCESS;
            }
            Ok(_) => {}
            Err(e) => {
                eprintln!("stagecalc: {e}");
                return ExitCode::from(EXIT_IO);
            }
        }
        buffer.push_str(&line);
        if !line.contains(";;") {
            continue;
        }
        let chunk = std::mem::take(&mut buffer);
        match parse_program(&chunk) {
            Ok(phrases) => {
                for phrase in &phrases {
                    match session.step(phrase) {
                        Ok(text) => println!("{text}"),
                        Err(d) => {
                            println!("Error: {d}");
                            break;
                        }
                    }
                }
            }
            Err(d) => println!("Error: {d}"),
        }
    }
}
