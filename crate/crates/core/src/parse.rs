//! Recursive-descent parser for polynomial expressions.
//!
//! Grammar (standard precedence `^` > unary `-` > `*` > binary `+`/`-`,
//! left-associative):
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := factor ('*' factor)*
//! factor   := '-' factor | atom ('^' exponent)?
//! atom     := NUMBER ('/' NUMBER)? | IDENT | '(' expr ')'
//! exponent := NUMBER
//! ```
//!
//! `/` is only part of rational literals like `3/4`; it is not an operator.
//! Implicit multiplication is rejected, exponents must be non-negative
//! integers, identifiers must be declared variables.

use num_bigint::BigInt;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::poly::{Rational, SparsePoly};

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(BigInt),
    Ident(String),
    Plus,
    Minus,
    Star,
    Caret,
    Slash,
    LParen,
    RParen,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn tokens(mut self) -> Result<Vec<(usize, Token)>> {
        let mut out = Vec::new();
        loop {
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos >= self.src.len() {
                return Ok(out);
            }
            let start = self.pos;
            let c = self.src[self.pos];
            let token = match c {
                b'+' => {
                    self.pos += 1;
                    Token::Plus
                }
                b'-' => {
                    self.pos += 1;
                    Token::Minus
                }
                b'*' => {
                    self.pos += 1;
                    Token::Star
                }
                b'^' => {
                    self.pos += 1;
                    Token::Caret
                }
                b'/' => {
                    self.pos += 1;
                    Token::Slash
                }
                b'(' => {
                    self.pos += 1;
                    Token::LParen
                }
                b')' => {
                    self.pos += 1;
                    Token::RParen
                }
                b'0'..=b'9' => {
                    while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                        self.pos += 1;
                    }
                    let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                    Token::Number(text.parse::<BigInt>().unwrap())
                }
                c if c.is_ascii_alphabetic() || c == b'_' => {
                    while self.pos < self.src.len()
                        && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                    {
                        self.pos += 1;
                    }
                    let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                    Token::Ident(text.to_string())
                }
                other => {
                    return Err(Error::parse(
                        start,
                        format!("unexpected character {:?}", other as char),
                    ))
                }
            };
            out.push((start, token));
        }
    }
}

struct Parser<'a> {
    tokens: Vec<(usize, Token)>,
    cursor: usize,
    vars: &'a [&'a str],
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.cursor).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.tokens
            .get(self.cursor)
            .map(|(p, _)| *p)
            .unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.cursor).map(|(_, t)| t.clone());
        if t.is_some() {
            self.cursor += 1;
        }
        t
    }

    fn expect(&mut self, token: Token, what: &str) -> Result<()> {
        let pos = self.pos();
        match self.bump() {
            Some(t) if t == token => Ok(()),
            _ => Err(Error::parse(pos, format!("expected {what}"))),
        }
    }

    fn expr(&mut self) -> Result<SparsePoly> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.bump();
                    let rhs = self.term()?;
                    acc = &acc + &rhs;
                }
                Some(Token::Minus) => {
                    self.bump();
                    let rhs = self.term()?;
                    acc = &acc - &rhs;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<SparsePoly> {
        let mut acc = self.factor()?;
        while matches!(self.peek(), Some(Token::Star)) {
            self.bump();
            let rhs = self.factor()?;
            acc = &acc * &rhs;
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<SparsePoly> {
        if matches!(self.peek(), Some(Token::Minus)) {
            self.bump();
            let inner = self.factor()?;
            return Ok(-&inner);
        }
        let base = self.atom()?;
        if matches!(self.peek(), Some(Token::Caret)) {
            self.bump();
            let exp = self.exponent()?;
            return Ok(base.pow(exp));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<u32> {
        let pos = self.pos();
        match self.bump() {
            Some(Token::Number(n)) => u32::try_from(&n)
                .map_err(|_| Error::parse(pos, "exponent too large".to_string())),
            Some(Token::Minus) => Err(Error::parse(pos, "negative exponent")),
            _ => Err(Error::parse(pos, "expected a non-negative integer exponent")),
        }
    }

    fn atom(&mut self) -> Result<SparsePoly> {
        let pos = self.pos();
        match self.bump() {
            Some(Token::Number(num)) => {
                // optional '/ NUMBER' forms a rational literal
                if matches!(self.peek(), Some(Token::Slash)) {
                    self.bump();
                    let dpos = self.pos();
                    match self.bump() {
                        Some(Token::Number(den)) => {
                            if den.is_zero() {
                                return Err(Error::parse(dpos, "zero denominator in rational literal"));
                            }
                            Ok(SparsePoly::constant(
                                self.vars.len(),
                                Rational::new(num, den),
                            ))
                        }
                        _ => Err(Error::parse(
                            dpos,
                            "expected an integer denominator after '/'",
                        )),
                    }
                } else {
                    Ok(SparsePoly::constant(
                        self.vars.len(),
                        Rational::from_integer(num),
                    ))
                }
            }
            Some(Token::Ident(name)) => match self.vars.iter().position(|v| *v == name) {
                Some(idx) => Ok(SparsePoly::var(self.vars.len(), idx)),
                None => Err(Error::parse(pos, format!("unknown identifier '{name}'"))),
            },
            Some(Token::LParen) => {
                let inner = self.expr()?;
                self.expect(Token::RParen, "')'")?;
                Ok(inner)
            }
            _ => Err(Error::parse(pos, "expected a number, variable or '('")),
        }
    }
}

/// Parse an expression over the declared variables into canonical sparse form.
pub fn parse_poly(text: &str, vars: &[&str]) -> Result<SparsePoly> {
    let tokens = Lexer::new(text).tokens()?;
    let mut parser = Parser {
        tokens,
        cursor: 0,
        vars,
        end: text.len(),
    };
    let poly = parser.expr()?;
    if parser.cursor != parser.tokens.len() {
        return Err(Error::parse(
            parser.pos(),
            "unexpected trailing input (implicit multiplication is not supported)",
        ));
    }
    Ok(poly)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::rat;

    #[test]
    fn parses_tz_example_terms() {
        let p = parse_poly("y*(2*x^2*y^2-9*x*y+12)", &["x", "y"]).unwrap();
        assert_eq!(p.num_terms(), 3);
        assert_eq!(p.coefficient(&[2, 3]), rat(2));
        assert_eq!(p.coefficient(&[1, 2]), rat(-9));
        assert_eq!(p.coefficient(&[0, 1]), rat(12));
    }

    #[test]
    fn parses_zero() {
        let p = parse_poly("0", &["x", "y"]).unwrap();
        assert!(p.is_zero());
    }

    #[test]
    fn parse_then_eval_round_trip() {
        let p = parse_poly("x^2+y", &["x", "y"]).unwrap();
        assert_eq!(p.eval(&[rat(1), rat(1)]).unwrap(), rat(2));
    }

    #[test]
    fn print_then_parse_is_identity() {
        let p = parse_poly("y*(2*x^2*y^2-9*x*y+12) - 1/2", &["x", "y"]).unwrap();
        let text = p.to_text(&["x", "y"]);
        let q = parse_poly(&text, &["x", "y"]).unwrap();
        assert_eq!(p, q);
        // and printing is idempotent on canonical forms
        assert_eq!(text, q.to_text(&["x", "y"]));
    }

    #[test]
    fn rational_literals() {
        let p = parse_poly("3/4*x + 1/2", &["x"]).unwrap();
        assert_eq!(p.coefficient(&[1]), crate::poly::ratio(3, 4));
        assert_eq!(p.coefficient(&[0]), crate::poly::ratio(1, 2));
    }

    #[test]
    fn negative_exponent_rejected() {
        let err = parse_poly("x^-1", &["x"]).unwrap_err();
        match err {
            Error::Parse { message, .. } => assert!(message.contains("negative exponent")),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn unknown_identifier_rejected() {
        let err = parse_poly("x + z", &["x", "y"]).unwrap_err();
        match err {
            Error::Parse { message, .. } => assert!(message.contains("unknown identifier 'z'")),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_poly("x + ", &["x"]).unwrap_err();
        match err {
            Error::Parse { pos, .. } => assert_eq!(pos, 4),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn implicit_multiplication_rejected() {
        assert!(parse_poly("2 x", &["x"]).is_err());
        assert!(parse_poly("x y", &["x", "y"]).is_err());
    }

    #[test]
    fn division_by_variable_rejected() {
        assert!(parse_poly("x/2", &["x"]).is_err());
        assert!(parse_poly("1/x", &["x"]).is_err());
    }

    #[test]
    fn unary_minus_binds_looser_than_caret() {
        let p = parse_poly("-x^2", &["x"]).unwrap();
        assert_eq!(p.coefficient(&[2]), rat(-1));
    }
}
