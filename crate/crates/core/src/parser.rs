//! Lexer and recursive-descent parser for the surface language.
//!
//! ```text
//! phrase  ::= "let" ident "=" expr | expr
//! program ::= (phrase ";;")*
//! expr    ::= "fun" param "->" expr | "let" ident "=" expr "in" expr | sum
//! param   ::= ident | "(" ident ":" type ")"
//! sum     ::= prod ("+" prod)*
//! prod    ::= appl ("*" appl)*
//! appl    ::= prefix+
//! prefix  ::= ".~" atom | "run" atom | atom
//! atom    ::= integer | ident | "(" expr ")" | ".<" expr ">."
//! type    ::= ctype ("->" type)?
//! ctype   ::= btype ("code")*
//! btype   ::= "int" | "string" | "(" type ")"
//! ```

use std::fmt;
use std::rc::Rc;

use crate::diagnostic::{DiagKind, Diagnostic, Result};
use crate::syntax::{Expr, Name, Pos, Type};

#[derive(Clone, Debug, PartialEq)]
pub enum Phrase {
    /// Toplevel `let x = e`.
    Let {
        name: Name,
        expr: Expr,
        pos: Pos,
    },
    Expr {
        expr: Expr,
        pos: Pos,
    },
}

impl Phrase {
    pub fn pos(&self) -> Pos {
        match self {
            Phrase::Let { pos, .. } | Phrase::Expr { pos, .. } => *pos,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(i64),
    Ident(String),
    Fun,
    Let,
    In,
    Run,
    Arrow,
    Eq,
    LParen,
    RParen,
    Colon,
    Plus,
    Star,
    Quote,
    Unquote,
    Escape,
    SemiSemi,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Int(i) => write!(f, "integer {i}"),
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Fun => f.write_str("`fun`"),
            Tok::Let => f.write_str("`let`"),
            Tok::In => f.write_str("`in`"),
            Tok::Run => f.write_str("`run`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Plus => f.write_str("`+`"),
            Tok::Star => f.write_str("`*`"),
            Tok::Quote => f.write_str("`.<`"),
            Tok::Unquote => f.write_str("`>.`"),
            Tok::Escape => f.write_str("`.~`"),
            Tok::SemiSemi => f.write_str("`;;`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

fn parse_error(pos: Pos, msg: impl Into<String>) -> Diagnostic {
    Diagnostic::new(DiagKind::ParseError, pos, msg)
}

fn lex(src: &str) -> Result<Vec<(Tok, Pos)>> {
    let chars: Vec<char> = src.chars().collect();
    let mut toks = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, column: col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let next = chars.get(i + 1).copied();
        let two = |a: char, b: char| c == a && next == Some(b);
        let (tok, len) = if two('-', '>') {
            (Tok::Arrow, 2)
        } else if two('.', '<') {
            (Tok::Quote, 2)
        } else if two('>', '.') {
            (Tok::Unquote, 2)
        } else if two('.', '~') {
            (Tok::Escape, 2)
        } else if two(';', ';') {
            (Tok::SemiSemi, 2)
        } else if c.is_ascii_digit() || (c == '-' && next.is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            let mut j = i + 1;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            let text: String = chars[start..j].iter().collect();
            let value = text
                .parse::<i64>()
                .map_err(|_| parse_error(pos, format!("integer literal {text} is out of range")))?;
            (Tok::Int(value), j - start)
        } else if c.is_ascii_alphabetic() {
            let start = i;
            let mut j = i + 1;
            while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            let word: String = chars[start..j].iter().collect();
            let tok = match word.as_str() {
                "fun" => Tok::Fun,
                "let" => Tok::Let,
                "in" => Tok::In,
                "run" => Tok::Run,
                _ => Tok::Ident(word),
            };
            (tok, j - start)
        } else {
            let tok = match c {
                '=' => Tok::Eq,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ':' => Tok::Colon,
                '+' => Tok::Plus,
                '*' => Tok::Star,
                _ => return Err(parse_error(pos, format!("unexpected character {c:?}"))),
            };
            (tok, 1)
        };
        toks.push((tok, pos));
        i += len;
        col += len as u32;
    }
    toks.push((Tok::Eof, Pos { line, column: col }));
    Ok(toks)
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn new(src: &str) -> Result<Parser> {
        Ok(Parser {
            toks: lex(src)?,
            at: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok, context: &str) -> Result<Pos> {
        if self.peek() == &tok {
            Ok(self.bump().1)
        } else {
            Err(self.unexpected(&format!("{tok} {context}")))
        }
    }

    fn unexpected(&self, wanted: &str) -> Diagnostic {
        parse_error(
            self.pos(),
            format!("expected {wanted}, found {}", self.peek()),
        )
    }

    fn ident(&mut self, context: &str) -> Result<(String, Pos)> {
        match self.peek().clone() {
            Tok::Ident(s) => Ok((s, self.bump().1)),
            _ => Err(self.unexpected(&format!("an identifier {context}"))),
        }
    }

    fn program(&mut self) -> Result<Vec<Phrase>> {
        let mut phrases = Vec::new();
        while self.peek() != &Tok::Eof {
            phrases.push(self.phrase()?);
            self.expect(Tok::SemiSemi, "to end the phrase")?;
        }
        Ok(phrases)
    }

    fn phrase(&mut self) -> Result<Phrase> {
        let pos = self.pos();
        if self.peek() == &Tok::Let {
            let (name, bound) = self.let_head()?;
            if self.eat(&Tok::In) {
                let body = self.expr()?;
                let expr = Expr::Loc(
                    pos,
                    Rc::new(Expr::app(Expr::lam(name.as_str(), None, body), bound)),
                );
                return Ok(Phrase::Expr { expr, pos });
            }
            return Ok(Phrase::Let {
                name: Name::source(name),
                expr: bound,
                pos,
            });
        }
        Ok(Phrase::Expr {
            expr: self.expr()?,
            pos,
        })
    }

    /// `let x = e`, leaving the cursor on whatever follows `e`.
    fn let_head(&mut self) -> Result<(String, Expr)> {
        self.expect(Tok::Let, "")?;
        let (name, _) = self.ident("after `let`")?;
        self.expect(Tok::Eq, "after the bound name")?;
        let bound = self.expr()?;
        Ok((name, bound))
    }

    fn expr(&mut self) -> Result<Expr> {
        let pos = self.pos();
        match self.peek() {
            Tok::Fun => {
                self.bump();
                let (param, annot) = self.param()?;
                self.expect(Tok::Arrow, "after the parameter")?;
                let body = self.expr()?;
                Ok(located(pos, Expr::lam(Name::source(param), annot, body)))
            }
            Tok::Let => {
                let (name, bound) = self.let_head()?;
                self.expect(Tok::In, "after the bound expression")?;
                let body = self.expr()?;
                Ok(located(
                    pos,
                    Expr::app(Expr::lam(name.as_str(), None, body), bound),
                ))
            }
            _ => self.sum(),
        }
    }

    fn param(&mut self) -> Result<(String, Option<Type>)> {
        if self.eat(&Tok::LParen) {
            let (name, _) = self.ident("as the parameter")?;
            self.expect(Tok::Colon, "in the parameter annotation")?;
            let t = self.ty()?;
            self.expect(Tok::RParen, "to close the parameter")?;
            Ok((name, Some(t)))
        } else {
            Ok((self.ident("as the parameter")?.0, None))
        }
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.prod()?;
        while self.peek() == &Tok::Plus {
            let pos = self.bump().1;
            let rhs = self.prod()?;
            lhs = located(pos, Expr::plus(lhs, rhs));
        }
        Ok(lhs)
    }

    fn prod(&mut self) -> Result<Expr> {
        let mut lhs = self.appl()?;
        while self.peek() == &Tok::Star {
            let pos = self.bump().1;
            let rhs = self.appl()?;
            lhs = located(pos, Expr::times(lhs, rhs));
        }
        Ok(lhs)
    }

    fn starts_prefix(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Int(_) | Tok::Ident(_) | Tok::LParen | Tok::Quote | Tok::Escape | Tok::Run
        )
    }

    fn appl(&mut self) -> Result<Expr> {
        let pos = self.pos();
        let mut head = self.prefix()?;
        while self.starts_prefix() {
            let arg = self.prefix()?;
            head = located(pos, Expr::app(head, arg));
        }
        Ok(head)
    }

    fn prefix(&mut self) -> Result<Expr> {
        let pos = self.pos();
        match self.peek() {
            Tok::Escape => {
                self.bump();
                Ok(located(pos, Expr::escape(self.atom()?)))
            }
            Tok::Run => {
                self.bump();
                Ok(located(pos, Expr::run(self.atom()?)))
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                Ok(Expr::Int(i))
            }
            Tok::Ident(s) => {
                self.bump();
                Ok(located(pos, Expr::var(s.as_str())))
            }
            Tok::LParen => {
                self.bump();
                // Operator sections: `(+)` and `(*)`.
                let op = match self.peek() {
                    Tok::Plus => Some("+"),
                    Tok::Star => Some("*"),
                    _ => None,
                };
                if let Some(op) = op {
                    if self.toks.get(self.at + 1).map(|t| &t.0) == Some(&Tok::RParen) {
                        self.bump();
                        self.bump();
                        return Ok(located(pos, Expr::var(op)));
                    }
                }
                let e = self.expr()?;
                self.expect(Tok::RParen, "to close the parenthesis")?;
                Ok(e)
            }
            Tok::Quote => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::Unquote, "to close the bracket")?;
                Ok(located(pos, Expr::bracket(e)))
            }
            _ => Err(self.unexpected("an expression")),
        }
    }

    fn ty(&mut self) -> Result<Type> {
        let dom = self.ctype()?;
        if self.eat(&Tok::Arrow) {
            Ok(Type::arrow(dom, self.ty()?))
        } else {
            Ok(dom)
        }
    }

    fn ctype(&mut self) -> Result<Type> {
        let mut t = self.btype()?;
        while matches!(self.peek(), Tok::Ident(s) if s == "code") {
            self.bump();
            t = Type::code(t);
        }
        Ok(t)
    }

    fn btype(&mut self) -> Result<Type> {
        match self.peek().clone() {
            Tok::Ident(s) if s == "int" => {
                self.bump();
                Ok(Type::Int)
            }
            Tok::Ident(s) if s == "string" => {
                self.bump();
                Ok(Type::Str)
            }
            Tok::LParen => {
                self.bump();
                let t = self.ty()?;
                self.expect(Tok::RParen, "to close the type")?;
                Ok(t)
            }
            _ => Err(self.unexpected("a type")),
        }
    }

    fn finish(&mut self) -> Result<()> {
        if self.peek() == &Tok::Eof {
            Ok(())
        } else {
            Err(self.unexpected("end of input"))
        }
    }
}

fn located(pos: Pos, e: Expr) -> Expr {
    Expr::Loc(pos, Rc::new(e))
}

/// Parses a single expression. The result carries position wrappers; use
/// [`Expr::strip_locs`] for structural comparison.
pub fn parse_expr(src: &str) -> Result<Expr> {
    let mut p = Parser::new(src)?;
    let e = p.expr()?;
    p.finish()?;
    Ok(e)
}

/// Parses a sequence of `;;`-terminated phrases.
pub fn parse_program(src: &str) -> Result<Vec<Phrase>> {
    Parser::new(src)?.program()
}

pub fn parse_type(src: &str) -> Result<Type> {
    let mut p = Parser::new(src)?;
    let t = p.ty()?;
    p.finish()?;
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(src: &str) -> Expr {
        parse_expr(src).unwrap().strip_locs()
    }

    fn v(s: &str) -> Expr {
        Expr::var(s)
    }

    #[test]
    fn eta() {
        let expected = Expr::lam(
            "f",
            None,
            Expr::bracket(Expr::lam(
                "x",
                None,
                Expr::escape(Expr::app(v("f"), Expr::bracket(v("x")))),
            )),
        );
        assert_eq!(parse("fun f -> .<fun x -> .~(f .<x>.)>."), expected);
    }

    #[test]
    fn literal() {
        assert_eq!(parse("0"), Expr::Int(0));
    }

    #[test]
    fn operator_sections() {
        assert_eq!(parse("(+)"), v("+"));
        assert_eq!(parse("(*) 2"), Expr::app(v("*"), Expr::Int(2)));
        assert_eq!(parse("(+) * 0"), Expr::times(v("+"), Expr::Int(0)));
        assert!(parse_expr("(+ 1)").is_err());
    }

    #[test]
    fn product_groups_left_over_escape() {
        let expected = Expr::times(
            Expr::times(Expr::Int(4), Expr::Int(5)),
            Expr::escape(v("z")),
        );
        assert_eq!(parse("4 * 5 * .~z"), expected);
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(parse("a b c"), Expr::apps(v("a"), [v("b"), v("c")]));
        assert_eq!(
            parse("a + b * c"),
            Expr::plus(v("a"), Expr::times(v("b"), v("c")))
        );
        assert_eq!(
            parse("f x + 1"),
            Expr::plus(Expr::app(v("f"), v("x")), Expr::Int(1))
        );
        assert_eq!(parse(".~f x"), Expr::app(Expr::escape(v("f")), v("x")));
        assert_eq!(parse("run g 3"), Expr::app(Expr::run(v("g")), Expr::Int(3)));
        assert_eq!(
            parse("let x = 1 in x + x"),
            Expr::app(
                Expr::lam("x", None, Expr::plus(v("x"), v("x"))),
                Expr::Int(1)
            )
        );
    }

    #[test]
    fn annotated_parameter() {
        let t = Type::arrow(Type::code(Type::Int), Type::code(Type::Int));
        assert_eq!(
            parse("fun (f : int code -> int code) -> f"),
            Expr::lam("f", Some(t), v("f"))
        );
    }

    #[test]
    fn programs() {
        let ps = parse_program("let g = run .<fun x -> x>.;; g 3;;").unwrap();
        assert_eq!(ps.len(), 2);
        match &ps[0] {
            Phrase::Let { name, expr, .. } => {
                assert_eq!(name, &Name::from("g"));
                assert_eq!(
                    expr.strip_locs(),
                    Expr::run(Expr::bracket(Expr::lam("x", None, v("x"))))
                );
            }
            other => panic!("expected a let phrase, got {other:?}"),
        }
        match &ps[1] {
            Phrase::Expr { expr, .. } => {
                assert_eq!(expr.strip_locs(), Expr::app(v("g"), Expr::Int(3)))
            }
            other => panic!("expected an expression phrase, got {other:?}"),
        }
        assert!(parse_program("").unwrap().is_empty());
        let two = parse_program("1;; 2;;").unwrap();
        assert!(two.iter().all(|p| matches!(p, Phrase::Expr { .. })));
        assert_eq!(two.len(), 2);
    }

    #[test]
    fn let_in_phrase_is_an_expression() {
        let ps = parse_program("let x = 2 in x;;").unwrap();
        assert!(matches!(ps[0], Phrase::Expr { .. }));
    }

    #[test]
    fn types() {
        assert_eq!(parse_type("int").unwrap(), Type::Int);
        assert_eq!(
            parse_type("int code -> int code").unwrap(),
            Type::arrow(Type::code(Type::Int), Type::code(Type::Int))
        );
        assert_eq!(
            parse_type("(int -> int) code").unwrap(),
            Type::code(Type::arrow(Type::Int, Type::Int))
        );
        assert_eq!(
            parse_type("int -> int -> int").unwrap(),
            Type::arrow(Type::Int, Type::arrow(Type::Int, Type::Int))
        );
        assert_eq!(
            parse_type("int code code").unwrap(),
            Type::code(Type::code(Type::Int))
        );
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_expr("fun -> x").unwrap_err();
        assert_eq!(e.kind, DiagKind::ParseError);
        assert_eq!((e.line, e.column), (1, 5));

        let e = parse_expr("1 +\n  )").unwrap_err();
        assert_eq!((e.line, e.column), (2, 3));

        let e = parse_expr(".<1").unwrap_err();
        assert_eq!((e.line, e.column), (1, 4));

        let e = parse_expr("x $").unwrap_err();
        assert_eq!((e.line, e.column), (1, 3));

        let e = parse_program("1").unwrap_err();
        assert_eq!(e.kind, DiagKind::ParseError);

        let e = parse_expr("99999999999999999999").unwrap_err();
        assert_eq!(e.kind, DiagKind::ParseError);

        let e = parse_type("int ->").unwrap_err();
        assert_eq!(e.kind, DiagKind::ParseError);
    }

    #[test]
    fn escape_requires_atom() {
        // `.~f x` escapes only `f`.
        assert!(parse_expr(".~fun x -> x").is_err());
    }
}
