//! Recursive-descent parser for the expression grammar
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := base ('^' nat)?
//! base   := ident | number | '(' expr ')' | '-' base
//! ```
//!
//! Numbers are integers or `integer/integer`; identifiers must be declared
//! in the context. Syntax errors carry line and column.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;

use super::context::Context;
use super::ratexpr::RationalExpr;
use super::SymError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

struct Lexer<'a> {
    src: &'a str,
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src, chars: src.char_indices().peekable(), line: 1, col: 1 }
    }

    fn bump(&mut self) -> Option<(usize, char)> {
        let item = self.chars.next();
        if let Some((_, c)) = item {
            if c == '\n' {
                self.line += 1;
                self.col = 1;
            } else {
                self.col += 1;
            }
        }
        item
    }

    fn tokens(mut self) -> Result<Vec<(Tok, u32, u32)>, SymError> {
        let mut out = Vec::new();
        while let Some(&(start, c)) = self.chars.peek() {
            let (line, col) = (self.line, self.col);
            match c {
                ' ' | '\t' | '\r' | '\n' => {
                    self.bump();
                }
                '+' => {
                    self.bump();
                    out.push((Tok::Plus, line, col));
                }
                '-' => {
                    self.bump();
                    out.push((Tok::Minus, line, col));
                }
                '*' => {
                    self.bump();
                    out.push((Tok::Star, line, col));
                }
                '/' => {
                    self.bump();
                    out.push((Tok::Slash, line, col));
                }
                '^' => {
                    self.bump();
                    out.push((Tok::Caret, line, col));
                }
                '(' => {
                    self.bump();
                    out.push((Tok::LParen, line, col));
                }
                ')' => {
                    self.bump();
                    out.push((Tok::RParen, line, col));
                }
                c if c.is_ascii_digit() => {
                    let mut end = start;
                    while let Some(&(i, d)) = self.chars.peek() {
                        if d.is_ascii_digit() {
                            end = i;
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    let text = &self.src[start..=end];
                    let n = text.parse::<BigInt>().expect("digits");
                    out.push((Tok::Int(n), line, col));
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let mut end = start;
                    while let Some(&(i, d)) = self.chars.peek() {
                        if d.is_ascii_alphanumeric() || d == '_' {
                            end = i;
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    out.push((Tok::Ident(self.src[start..=end].to_string()), line, col));
                }
                other => {
                    return Err(SymError::Syntax {
                        line,
                        col,
                        message: format!("unexpected character '{}'", other),
                    });
                }
            }
        }
        Ok(out)
    }
}

struct Parser<'c> {
    toks: Vec<(Tok, u32, u32)>,
    pos: usize,
    ctx: &'c Arc<Context>,
}

impl<'c> Parser<'c> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _, _)| t)
    }

    fn here(&self) -> (u32, u32) {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|(_, l, c)| (*l, *c))
            .unwrap_or((1, 1))
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _, _)| t.clone());
        self.pos += 1;
        t
    }

    fn err(&self, message: impl Into<String>) -> SymError {
        let (line, col) = self.here();
        SymError::Syntax { line, col, message: message.into() }
    }

    fn expr(&mut self) -> Result<RationalExpr, SymError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    acc = acc.add(&self.term()?)?;
                }
                Some(Tok::Minus) => {
                    self.bump();
                    acc = acc.sub(&self.term()?)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<RationalExpr, SymError> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    acc = acc.mul(&self.factor()?)?;
                }
                Some(Tok::Slash) => {
                    self.bump();
                    let rhs = self.factor()?;
                    acc = acc.div(&rhs)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<RationalExpr, SymError> {
        let base = self.base()?;
        if let Some(Tok::Caret) = self.peek() {
            self.bump();
            match self.bump() {
                Some(Tok::Int(n)) => {
                    let exp = u32::try_from(&n)
                        .map_err(|_| self.err("exponent out of range"))?;
                    return base.pow(exp);
                }
                _ => return Err(self.err("expected a nonnegative integer exponent")),
            }
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<RationalExpr, SymError> {
        let (line, col) = self.here();
        let err_here = |message: String| SymError::Syntax { line, col, message };
        match self.bump() {
            Some(Tok::Ident(name)) => {
                let idx = self.ctx.index_of(&name).ok_or(SymError::UnknownIndeterminate(name))?;
                Ok(RationalExpr::from_poly(super::poly::Polynomial::var(self.ctx, idx)))
            }
            Some(Tok::Int(n)) => Ok(RationalExpr::constant(
                self.ctx,
                BigRational::from_integer(n),
            )),
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                match self.bump() {
                    Some(Tok::RParen) => Ok(inner),
                    _ => Err(self.err("expected ')'")),
                }
            }
            Some(Tok::Minus) => Ok(self.base()?.neg()),
            other => Err(err_here(format!(
                "expected identifier, number or '(', got {:?}",
                other
            ))),
        }
    }
}

/// Parse `text` over the declared context into a canonical expression.
pub fn parse_expression(text: &str, ctx: &Arc<Context>) -> Result<RationalExpr, SymError> {
    let toks = Lexer::new(text).tokens()?;
    let mut p = Parser { toks, pos: 0, ctx };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(p.err("trailing input"));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::poly::Polynomial;
    use num_bigint::BigInt;
    use num_rational::BigRational;

    fn ctx() -> Arc<Context> {
        Context::for_chart(&["x", "y", "z"], &["a1", "a2", "a3"]).unwrap()
    }

    #[test]
    fn parses_base_equation_row() {
        let c = ctx();
        let e = parse_expression("x*(t - x - 2*z) + a1", &c).unwrap();
        // t*x - x^2 - 2*x*z + a1, term by term
        let x = RationalExpr::var(&c, "x").unwrap();
        let z = RationalExpr::var(&c, "z").unwrap();
        let t = RationalExpr::var(&c, "t").unwrap();
        let a1 = RationalExpr::var(&c, "a1").unwrap();
        let two = RationalExpr::from_int(&c, 2);
        let expect = t
            .mul(&x)
            .unwrap()
            .sub(&x.mul(&x).unwrap())
            .unwrap()
            .sub(&two.mul(&x).unwrap().mul(&z).unwrap())
            .unwrap()
            .add(&a1)
            .unwrap();
        assert_eq!(e, expect);
    }

    #[test]
    fn zero_literal() {
        let c = ctx();
        let e = parse_expression("0", &c).unwrap();
        assert!(e.is_zero());
    }

    #[test]
    fn chart_map_component() {
        // (y*z + a2)*z = y z^2 + a2 z
        let c = ctx();
        let e = parse_expression("(y*z + a2)*z", &c).unwrap();
        let alt = parse_expression("y*z^2 + a2*z", &c).unwrap();
        assert_eq!(e, alt);
    }

    #[test]
    fn rational_literal_and_unary_minus() {
        let c = ctx();
        let e = parse_expression("-3/4", &c).unwrap();
        assert_eq!(
            e.as_constant().unwrap(),
            BigRational::new(BigInt::from(-3), BigInt::from(4))
        );
    }

    #[test]
    fn undeclared_identifier() {
        let c = ctx();
        let err = parse_expression("x + q", &c);
        assert!(matches!(err, Err(SymError::UnknownIndeterminate(ref n)) if n == "q"));
    }

    #[test]
    fn syntax_error_has_position() {
        let c = ctx();
        match parse_expression("x +\n* y", &c) {
            Err(SymError::Syntax { line, col, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(col, 1);
            }
            other => panic!("expected syntax error, got {:?}", other),
        }
    }

    #[test]
    fn division_by_zero_polynomial() {
        let c = ctx();
        let err = parse_expression("1/(x - x)", &c);
        assert!(matches!(err, Err(SymError::DivisionByZero)));
    }

    #[test]
    fn print_parse_roundtrip() {
        let c = ctx();
        let e = parse_expression("(x^2 - a1*y + 3/7)/(z^2 - t)", &c).unwrap();
        let printed = e.to_string();
        let back = parse_expression(&printed, &c).unwrap();
        assert_eq!(e, back);
    }

    #[test]
    fn zero_poly_constant() {
        let c = ctx();
        assert_eq!(
            parse_expression("0", &c).unwrap(),
            RationalExpr::from_poly(Polynomial::zero(&c))
        );
    }
}
