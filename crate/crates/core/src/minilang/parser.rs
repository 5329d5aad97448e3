//! Hand-written lexer and recursive-descent parser for `.gm` source.

use super::ast::*;
use super::check::check_program;
use super::LangError;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(u64),
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const KEYWORDS: &[&str] = &[
    "fn", "if", "else", "while", "return", "print", "node", "null", "and", "or", "is_null",
];

const PUNCTS: &[&str] = &[
    "==", "!=", "<=", ">=", "(", ")", "{", "}", ",", ";", "=", ".", "+", "-", "*", "/", "%", "<",
    ">",
];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word)
}

fn lex(src: &str) -> Result<Vec<Token>, LangError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, msg: String| LangError::Syntax { line, col, msg };

    while i < bytes.len() {
        let c = bytes[i];
        if c == b'\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == b'#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start_col = col;
        if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let text = &src[start..i];
            let value = text
                .parse::<u64>()
                .map_err(|_| err(line, start_col, format!("integer literal {text} out of range")))?;
            col += i - start;
            out.push(Token {
                tok: Tok::Int(value),
                line,
                col: start_col,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' || c == b'@' {
            let start = i;
            i += 1;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let text = &src[start..i];
            if text == "@" {
                return Err(err(line, start_col, "empty global name".into()));
            }
            col += i - start;
            out.push(Token {
                tok: Tok::Ident(text.to_string()),
                line,
                col: start_col,
            });
            continue;
        }
        match PUNCTS.iter().find(|p| src[i..].starts_with(**p)) {
            Some(p) => {
                i += p.len();
                col += p.len();
                out.push(Token {
                    tok: Tok::Punct(p),
                    line,
                    col: start_col,
                });
            }
            None => {
                let ch = src[i..].chars().next().unwrap();
                return Err(err(line, start_col, format!("unexpected character {ch:?}")));
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, msg: impl Into<String>) -> LangError {
        let t = &self.toks[self.pos];
        LangError::Syntax {
            line: t.line,
            col: t.col,
            msg: msg.into(),
        }
    }

    fn describe(tok: &Tok) -> String {
        match tok {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(n) => format!("`{n}`"),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn expect(&mut self, p: &'static str) -> Result<(), LangError> {
        if *self.peek() == Tok::Punct(p) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected `{p}`, found {}", Self::describe(self.peek()))))
        }
    }

    fn eat_punct(&mut self, p: &'static str) -> bool {
        if *self.peek() == Tok::Punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), LangError> {
        if self.at_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected `{kw}`, found {}", Self::describe(self.peek()))))
        }
    }

    /// A non-keyword identifier (globals allowed).
    fn name(&mut self) -> Result<String, LangError> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                self.bump();
                Ok(s)
            }
            other => Err(self.error(format!("expected a name, found {}", Self::describe(&other)))),
        }
    }

    fn local_name(&mut self) -> Result<String, LangError> {
        let save = self.pos;
        let n = self.name()?;
        if is_global(&n) {
            self.pos = save;
            return Err(self.error(format!("global `{n}` is not allowed here")));
        }
        Ok(n)
    }

    fn field(&mut self) -> Result<Field, LangError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let f = match s.as_str() {
                    "left" => Field::Left,
                    "right" => Field::Right,
                    "data" => Field::Data,
                    _ => return Err(self.error(format!("unknown field `{s}`"))),
                };
                self.bump();
                Ok(f)
            }
            other => Err(self.error(format!("expected a field, found {}", Self::describe(&other)))),
        }
    }

    fn program(&mut self) -> Result<Program, LangError> {
        let mut functions = Vec::new();
        while *self.peek() != Tok::Eof {
            functions.push(self.function()?);
        }
        Ok(Program { functions })
    }

    fn function(&mut self) -> Result<Function, LangError> {
        self.expect_keyword("fn")?;
        let name = self.local_name()?;
        self.expect("(")?;
        let mut params = Vec::new();
        if !self.eat_punct(")") {
            loop {
                params.push(self.local_name()?);
                if self.eat_punct(")") {
                    break;
                }
                self.expect(",")?;
            }
        }
        let body = self.block()?;
        Ok(Function { name, params, body })
    }

    fn block(&mut self) -> Result<Vec<Stmt>, LangError> {
        self.expect("{")?;
        let mut body = Vec::new();
        while !self.eat_punct("}") {
            if *self.peek() == Tok::Eof {
                return Err(self.error("unterminated block"));
            }
            body.push(self.stmt()?);
        }
        Ok(body)
    }

    fn stmt(&mut self) -> Result<Stmt, LangError> {
        if self.at_keyword("if") {
            self.bump();
            self.expect("(")?;
            let cond = self.expr()?;
            self.expect(")")?;
            let then_body = self.block()?;
            let else_body = if self.at_keyword("else") {
                self.bump();
                self.block()?
            } else {
                Vec::new()
            };
            return Ok(Stmt::If {
                cond,
                then_body,
                else_body,
            });
        }
        if self.at_keyword("while") {
            self.bump();
            self.expect("(")?;
            let cond = self.expr()?;
            self.expect(")")?;
            let body = self.block()?;
            return Ok(Stmt::While { cond, body });
        }
        if self.at_keyword("return") {
            self.bump();
            let e = self.expr()?;
            self.expect(";")?;
            return Ok(Stmt::Return(e));
        }
        if self.at_keyword("print") {
            self.bump();
            self.expect("(")?;
            let e = self.expr()?;
            self.expect(")")?;
            self.expect(";")?;
            return Ok(Stmt::Print(e));
        }

        let name = self.name()?;
        let stmt = match self.peek() {
            Tok::Punct("=") => {
                self.bump();
                if self.at_keyword("node") && *self.peek_at(1) == Tok::Punct("(") {
                    self.bump();
                    self.expect("(")?;
                    self.expect(")")?;
                    Stmt::Alloc { var: name }
                } else {
                    let value = self.expr()?;
                    Stmt::Assign { var: name, value }
                }
            }
            Tok::Punct(".") => {
                self.bump();
                let field = self.field()?;
                self.expect("=")?;
                let value = self.expr()?;
                Stmt::FieldStore { var: name, field, value }
            }
            Tok::Punct("(") => {
                let args = self.args()?;
                Stmt::Call { name, args }
            }
            other => {
                return Err(self.error(format!(
                    "expected `=`, `.` or `(` after name, found {}",
                    Self::describe(other)
                )))
            }
        };
        self.expect(";")?;
        Ok(stmt)
    }

    fn args(&mut self) -> Result<Vec<Expr>, LangError> {
        self.expect("(")?;
        let mut args = Vec::new();
        if !self.eat_punct(")") {
            loop {
                args.push(self.expr()?);
                if self.eat_punct(")") {
                    break;
                }
                self.expect(",")?;
            }
        }
        Ok(args)
    }

    fn binop(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::Punct("+") => BinOp::Add,
            Tok::Punct("-") => BinOp::Sub,
            Tok::Punct("*") => BinOp::Mul,
            Tok::Punct("/") => BinOp::Div,
            Tok::Punct("%") => BinOp::Rem,
            Tok::Punct("==") => BinOp::Eq,
            Tok::Punct("!=") => BinOp::Ne,
            Tok::Punct("<") => BinOp::Lt,
            Tok::Punct("<=") => BinOp::Le,
            Tok::Punct(">") => BinOp::Gt,
            Tok::Punct(">=") => BinOp::Ge,
            Tok::Ident(s) if s == "and" => BinOp::And,
            Tok::Ident(s) if s == "or" => BinOp::Or,
            _ => return None,
        })
    }

    fn expr(&mut self) -> Result<Expr, LangError> {
        self.expr_prec(1)
    }

    /// Precedence climbing; every level is left-associative.
    fn expr_prec(&mut self, min: u8) -> Result<Expr, LangError> {
        let mut lhs = self.primary()?;
        while let Some(op) = self.binop() {
            if op.precedence() < min {
                break;
            }
            self.bump();
            let rhs = self.expr_prec(op.precedence() + 1)?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn primary(&mut self) -> Result<Expr, LangError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                i64::try_from(n)
                    .map(Expr::Int)
                    .map_err(|_| self.error(format!("integer literal {n} out of range")))
            }
            Tok::Punct("-") => {
                self.bump();
                match self.bump() {
                    Tok::Int(n) if n <= i64::MAX as u64 + 1 => Ok(Expr::Int((n as i128).wrapping_neg() as i64)),
                    Tok::Int(n) => Err(self.error(format!("integer literal -{n} out of range"))),
                    _ => Err(self.error("expected integer after `-`")),
                }
            }
            Tok::Punct("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            Tok::Ident(s) if s == "null" => {
                self.bump();
                Ok(Expr::Null)
            }
            Tok::Ident(s) if s == "is_null" => {
                self.bump();
                self.expect("(")?;
                let v = self.name()?;
                self.expect(")")?;
                Ok(Expr::IsNull(v))
            }
            Tok::Ident(_) => {
                let name = self.name()?;
                match self.peek() {
                    Tok::Punct(".") => {
                        self.bump();
                        let f = self.field()?;
                        Ok(Expr::Field(name, f))
                    }
                    Tok::Punct("(") => {
                        let args = self.args()?;
                        Ok(Expr::Call(name, args))
                    }
                    _ => Ok(Expr::Var(name)),
                }
            }
            other => Err(self.error(format!("expected an expression, found {}", Self::describe(&other)))),
        }
    }
}

/// Parses source text without running the static checks.
pub fn parse_unchecked(src: &str) -> Result<Program, LangError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0 };
    p.program()
}

/// Parses source text and runs the static checks.
pub fn parse(src: &str) -> Result<Program, LangError> {
    let prog = parse_unchecked(src)?;
    check_program(&prog)?;
    Ok(prog)
}
