//! Toplevel sessions: the state a REPL or a script run threads from one
//! `;;`-terminated phrase to the next.

use crate::combinators::GenState;
use crate::diagnostic::Result;
use crate::eval::{eval, initial_renv, REnv, Runtime};
use crate::parser::{parse_program, Phrase};
use crate::syntax::{pretty_expr, Expr, Pos, Stage, Type};
use crate::translate::{erase, Pipeline};
use crate::typecheck::{infer_staged, initial_env, CheckerState, Env, Goal};

/// Which intermediate forms to print before each result.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Dumps {
    pub ast: bool,
    pub typed: bool,
    pub translated: bool,
}

pub struct Session {
    env: Env,
    renv: REnv,
    gen: GenState,
    pipeline: Pipeline,
    dumps: Dumps,
}

impl Default for Session {
    fn default() -> Session {
        Session::new(Pipeline::default())
    }
}

impl Session {
    pub fn new(pipeline: Pipeline) -> Session {
        Session {
            env: initial_env(),
            renv: initial_renv(),
            gen: GenState::new(),
            pipeline,
            dumps: Dumps::default(),
        }
    }

    pub fn with_dumps(mut self, dumps: Dumps) -> Session {
        self.dumps = dumps;
        self
    }

    pub fn pipeline(&self) -> Pipeline {
        self.pipeline
    }

    pub fn gen(&self) -> &GenState {
        &self.gen
    }

    /// Elaborates, evaluates and prints one phrase. On error the session is
    /// left exactly as it was, fresh-name counter included.
    pub fn step(&mut self, phrase: &Phrase) -> Result<String> {
        let mark = self.gen.counter();
        let out = self.step_inner(phrase, true);
        if out.is_err() {
            self.gen.reset_to(mark);
        }
        out
    }

    /// Like [`Session::step`] but stops after type checking and prints only
    /// the type.
    pub fn check(&mut self, phrase: &Phrase) -> Result<String> {
        self.step_inner(phrase, false)
    }

    fn step_inner(&mut self, phrase: &Phrase, evaluate: bool) -> Result<String> {
        let (name, expr) = match phrase {
            Phrase::Let { name, expr, .. } => (Some(name), expr),
            Phrase::Expr { expr, .. } => (None, expr),
        };
        let mut lines = self.dump(expr)?;
        let translated =
            self.pipeline
                .compile(&self.env, &mut CheckerState::new(), expr, &Goal::default())?;
        let ty = translated.ty.clone();
        if self.dumps.translated {
            lines.push(format!("translated: {}", pretty_expr(&erase(&translated)?)));
        }
        let shown = if evaluate {
            let rt = Runtime::new(&self.gen, self.pipeline);
            let place = |d: crate::Diagnostic| relocate(d, phrase.pos());
            let value = eval(rt, &self.renv, &translated).map_err(place)?;
            let text = value.display().map_err(place)?;
            if let Some(name) = name {
                self.renv = self.renv.extend(name.clone(), value);
            }
            Some(text)
        } else {
            None
        };
        lines.push(result_line(name.map(|n| n.to_string()), &ty, shown));
        if let Some(name) = name {
            self.env = self.env.extend(name.clone(), Stage::PRESENT, ty);
        }
        Ok(lines.join("\n"))
    }

    fn dump(&self, expr: &Expr) -> Result<Vec<String>> {
        let mut lines = Vec::new();
        if self.dumps.ast {
            lines.push(format!("ast: {}", pretty_expr(expr)));
        }
        if self.dumps.typed {
            let staged = infer_staged(&self.env, &mut CheckerState::new(), expr)?;
            lines.push(format!("typed: {staged}"));
        }
        Ok(lines)
    }

    /// Runs every phrase of `src` in order, handing each printed result to
    /// `emit`. Stops at the first diagnostic.
    pub fn run_source(
        &mut self,
        src: &str,
        check_only: bool,
        mut emit: impl FnMut(&str),
    ) -> Result<()> {
        for phrase in parse_program(src)? {
            let text = if check_only {
                self.check(&phrase)?
            } else {
                self.step(&phrase)?
            };
            emit(&text);
        }
        Ok(())
    }

    /// Convenience for tests and embedding: the whole transcript as a string.
    pub fn transcript(&mut self, src: &str) -> Result<String> {
        let mut out = String::new();
        self.run_source(src, false, |line| {
            out.push_str(line);
            out.push('\n');
        })?;
        Ok(out)
    }
}

/// Runtime checks have no source position of their own; report them at the
/// phrase that triggered them.
fn relocate(d: crate::Diagnostic, pos: Pos) -> crate::Diagnostic {
    if d.pos() == Pos::default() {
        d.at(pos)
    } else {
        d
    }
}

fn result_line(name: Option<String>, ty: &Type, value: Option<String>) -> String {
    let head = match name {
        Some(n) => format!("val {n} : {ty}"),
        None => format!("- : {ty}"),
    };
    match value {
        Some(v) => format!("{head} = {v}"),
        None => head,
    }
}

pub fn repl_step(s: &mut Session, phrase: &Phrase) -> Result<String> {
    s.step(phrase)
}
