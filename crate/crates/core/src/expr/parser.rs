//! Recursive-descent parser for the field expression grammar.
//!
//! Precedence, tightest first: `^`, unary `-`, `* /`, `+ -`. Binary `-` and
//! `/` associate to the left, `^` to the right. Offsets in errors are byte
//! positions into the original source string.

use super::{add, cos, div, exp, ln, mul, neg, pow, sin, sqrt, sub, Axis, Expr};
use crate::error::Error;
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(n) => format!("number `{n}`"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
        }
    }
}

struct Lexer<'a> {
    src: &'a str,
    base: usize,
    tokens: Vec<(Tok, usize)>,
}

fn lex(src: &str, base: usize) -> Result<Vec<(Tok, usize)>> {
    let mut lx = Lexer {
        src,
        base,
        tokens: Vec::new(),
    };
    lx.run()?;
    Ok(lx.tokens)
}

impl<'a> Lexer<'a> {
    fn run(&mut self) -> Result<()> {
        let bytes = self.src.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i] as char;
            let at = self.base + i;
            match c {
                ' ' | '\t' | '\r' | '\n' => i += 1,
                '+' => {
                    self.tokens.push((Tok::Plus, at));
                    i += 1;
                }
                '-' => {
                    self.tokens.push((Tok::Minus, at));
                    i += 1;
                }
                '*' => {
                    self.tokens.push((Tok::Star, at));
                    i += 1;
                }
                '/' => {
                    self.tokens.push((Tok::Slash, at));
                    i += 1;
                }
                '^' => {
                    self.tokens.push((Tok::Caret, at));
                    i += 1;
                }
                '(' => {
                    self.tokens.push((Tok::LParen, at));
                    i += 1;
                }
                ')' => {
                    self.tokens.push((Tok::RParen, at));
                    i += 1;
                }
                '0'..='9' | '.' => {
                    let start = i;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    if i < bytes.len() && bytes[i] == b'.' {
                        i += 1;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                        let mut j = i + 1;
                        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                            j += 1;
                        }
                        if j < bytes.len() && bytes[j].is_ascii_digit() {
                            i = j;
                            while i < bytes.len() && bytes[i].is_ascii_digit() {
                                i += 1;
                            }
                        }
                    }
                    let text = &self.src[start..i];
                    let value: f64 = text.parse().map_err(|_| Error::Parse {
                        offset: self.base + start,
                        msg: format!("malformed number literal `{text}`"),
                    })?;
                    self.tokens.push((Tok::Num(value), self.base + start));
                }
                'a'..='z' | 'A'..='Z' | '_' => {
                    let start = i;
                    while i < bytes.len()
                        && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                    {
                        i += 1;
                    }
                    self.tokens
                        .push((Tok::Ident(self.src[start..i].to_string()), self.base + start));
                }
                other => {
                    return Err(Error::Parse {
                        offset: at,
                        msg: format!("unexpected character `{other}`"),
                    });
                }
            }
        }
        Ok(())
    }
}

struct Parser {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
    end_offset: usize,
}

impl Parser {
    fn peek(&self) -> Option<&(Tok, usize)> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<(Tok, usize)> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, expected: &str) -> Error {
        match self.peek() {
            Some((tok, off)) => Error::Parse {
                offset: *off,
                msg: format!("expected {expected}, found {}", tok.describe()),
            },
            None => Error::Parse {
                offset: self.end_offset,
                msg: format!("expected {expected}, found end of input"),
            },
        }
    }

    // expr := term (("+" | "-") term)*
    fn expr(&mut self) -> Result<Expr> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some((Tok::Plus, _)) => {
                    self.bump();
                    acc = add(acc, self.term()?);
                }
                Some((Tok::Minus, _)) => {
                    self.bump();
                    acc = sub(acc, self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    // term := unary (("*" | "/") unary)*
    fn term(&mut self) -> Result<Expr> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some((Tok::Star, _)) => {
                    self.bump();
                    acc = mul(acc, self.unary()?);
                }
                Some((Tok::Slash, _)) => {
                    self.bump();
                    acc = div(acc, self.unary()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    // unary := "-" unary | power
    fn unary(&mut self) -> Result<Expr> {
        if let Some((Tok::Minus, _)) = self.peek() {
            self.bump();
            return Ok(neg(self.unary()?));
        }
        self.power()
    }

    // power := atom ("^" unary)?   (right associative through `unary`)
    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if let Some((Tok::Caret, _)) = self.peek() {
            self.bump();
            let exponent = self.unary()?;
            return Ok(pow(base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek().cloned() {
            Some((Tok::Num(v), _)) => {
                self.bump();
                Ok(Expr::Const(v))
            }
            Some((Tok::LParen, _)) => {
                self.bump();
                let inner = self.expr()?;
                match self.peek() {
                    Some((Tok::RParen, _)) => {
                        self.bump();
                        Ok(inner)
                    }
                    _ => Err(self.error_here("`)`")),
                }
            }
            Some((Tok::Ident(name), off)) => {
                self.bump();
                match name.as_str() {
                    "x" => Ok(Expr::Var(Axis::X)),
                    "y" => Ok(Expr::Var(Axis::Y)),
                    "z" => Ok(Expr::Var(Axis::Z)),
                    "sin" | "cos" | "exp" | "sqrt" | "ln" => {
                        match self.peek() {
                            Some((Tok::LParen, _)) => {
                                self.bump();
                            }
                            _ => return Err(self.error_here("`(` after function name")),
                        }
                        let arg = self.expr()?;
                        match self.peek() {
                            Some((Tok::RParen, _)) => {
                                self.bump();
                            }
                            _ => return Err(self.error_here("`)`")),
                        }
                        Ok(match name.as_str() {
                            "sin" => sin(arg),
                            "cos" => cos(arg),
                            "exp" => exp(arg),
                            "sqrt" => sqrt(arg),
                            _ => ln(arg),
                        })
                    }
                    _ => Err(Error::UnknownIdentifier { name, offset: off }),
                }
            }
            _ => Err(self.error_here("a number, variable, function or `(`")),
        }
    }
}

/// Parse a single expression; offsets are relative to `source`.
pub fn parse_expr(source: &str) -> Result<Expr> {
    parse_expr_at(source, 0)
}

/// Parse with a base offset added to all reported positions (used when the
/// expression is one component of a larger field source).
pub fn parse_expr_at(source: &str, base: usize) -> Result<Expr> {
    let tokens = lex(source, base)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        end_offset: base + source.len(),
    };
    let e = parser.expr()?;
    if parser.pos != parser.tokens.len() {
        return Err(parser.error_here("end of expression or an operator"));
    }
    Ok(e)
}
