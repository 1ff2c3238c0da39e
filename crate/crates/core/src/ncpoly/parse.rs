//! Recursive-descent parser for noncommutative polynomials.
//!
//! ```text
//! expr   := ['-'] term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := base ('^' posint)?
//! base   := 'x' posint | int ('/' int)? | '(' expr ')' | '[' expr ',' expr ']'
//! ```
//!
//! Multiplication is always explicit (`x1*x2`, never `x1x2`), brackets are
//! commutators, and expansion happens during parsing.  Constants are legal
//! inside subexpressions but the fully expanded polynomial must have zero
//! constant term.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use thiserror::Error;

use super::{NcPolynomial, Word};
use crate::arith::{FieldElement, FieldSpec};
use crate::ring::Ring;

/// Exponents above this are almost certainly a typo and would explode the
/// expansion; the same cap bounds variable indices.
const MAX_EXPONENT: u32 = 64;
const MAX_VAR_INDEX: u64 = 255;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("polynomial has a nonzero constant term, so it cannot vanish at zero")]
    NonzeroConstantTerm,
    #[error("variable index {0} out of range (expected 1..={MAX_VAR_INDEX})")]
    VariableIndexOutOfRange(u64),
    #[error("exponent {0} out of range (expected 1..={MAX_EXPONENT})")]
    ExponentOutOfRange(u64),
    #[error("bad coefficient: {0}")]
    BadCoefficient(String),
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Plus,
    Minus,
    Star,
    Caret,
    Slash,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Var(u64),
    Int(BigInt),
    End,
}

struct Lexer {
    tokens: Vec<(usize, Token)>,
    cursor: usize,
}

impl Lexer {
    fn new(text: &str) -> Result<Self, ParseError> {
        let bytes = text.as_bytes();
        let mut tokens = Vec::new();
        let mut i = 0;
        while i < bytes.len() {
            let b = bytes[i];
            let simple = match b {
                b' ' | b'\t' | b'\n' | b'\r' => {
                    i += 1;
                    continue;
                }
                b'+' => Some(Token::Plus),
                b'-' => Some(Token::Minus),
                b'*' => Some(Token::Star),
                b'^' => Some(Token::Caret),
                b'/' => Some(Token::Slash),
                b'(' => Some(Token::LParen),
                b')' => Some(Token::RParen),
                b'[' => Some(Token::LBracket),
                b']' => Some(Token::RBracket),
                b',' => Some(Token::Comma),
                _ => None,
            };
            if let Some(tok) = simple {
                tokens.push((i, tok));
                i += 1;
                continue;
            }
            if b == b'x' {
                let start = i;
                i += 1;
                let digits_start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i == digits_start {
                    return Err(ParseError::Syntax {
                        pos: start,
                        message: "expected digits after 'x'".to_string(),
                    });
                }
                let index: u64 =
                    text[digits_start..i].parse().map_err(|_| ParseError::Syntax {
                        pos: digits_start,
                        message: "variable index too large".to_string(),
                    })?;
                tokens.push((start, Token::Var(index)));
                continue;
            }
            if b.is_ascii_digit() {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let value: BigInt = text[start..i]
                    .parse()
                    .expect("digit runs always parse as BigInt");
                tokens.push((start, Token::Int(value)));
                continue;
            }
            return Err(ParseError::Syntax {
                pos: i,
                message: format!("unexpected character {:?}", b as char),
            });
        }
        tokens.push((bytes.len(), Token::End));
        Ok(Lexer { tokens, cursor: 0 })
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.cursor].1
    }

    fn pos(&self) -> usize {
        self.tokens[self.cursor].0
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.cursor].1.clone();
        if self.cursor + 1 < self.tokens.len() {
            self.cursor += 1;
        }
        t
    }
}

/// Expansion state: like `NcPolynomial` but the empty word (a constant) is
/// admitted while subexpressions are being combined.
#[derive(Clone)]
struct RawPoly {
    terms: BTreeMap<Word, FieldElement>,
}

struct Parser {
    lexer: Lexer,
    field: FieldSpec,
    max_var: u64,
}

impl Parser {
    fn raw_constant(&self, c: FieldElement) -> RawPoly {
        let mut terms = BTreeMap::new();
        if !self.field.is_zero(&c) {
            terms.insert(Word(Vec::new()), c);
        }
        RawPoly { terms }
    }

    fn raw_add(&self, a: &RawPoly, b: &RawPoly) -> RawPoly {
        let mut terms = a.terms.clone();
        for (w, c) in &b.terms {
            match terms.entry(w.clone()) {
                std::collections::btree_map::Entry::Vacant(e) => {
                    e.insert(c.clone());
                }
                std::collections::btree_map::Entry::Occupied(mut e) => {
                    let s = self.field.add(e.get(), c);
                    if self.field.is_zero(&s) {
                        e.remove();
                    } else {
                        e.insert(s);
                    }
                }
            }
        }
        RawPoly { terms }
    }

    fn raw_neg(&self, a: &RawPoly) -> RawPoly {
        RawPoly {
            terms: a
                .terms
                .iter()
                .map(|(w, c)| (w.clone(), self.field.neg(c)))
                .collect(),
        }
    }

    fn raw_mul(&self, a: &RawPoly, b: &RawPoly) -> RawPoly {
        let mut terms: BTreeMap<Word, FieldElement> = BTreeMap::new();
        for (wa, ca) in &a.terms {
            for (wb, cb) in &b.terms {
                let mut w = wa.0.clone();
                w.extend_from_slice(&wb.0);
                let c = self.field.mul(ca, cb);
                match terms.entry(Word(w)) {
                    std::collections::btree_map::Entry::Vacant(e) => {
                        e.insert(c);
                    }
                    std::collections::btree_map::Entry::Occupied(mut e) => {
                        let s = self.field.add(e.get(), &c);
                        if self.field.is_zero(&s) {
                            e.remove();
                        } else {
                            e.insert(s);
                        }
                    }
                }
            }
        }
        RawPoly { terms }
    }

    fn syntax(&self, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            pos: self.lexer.pos(),
            message: message.into(),
        }
    }

    fn expr(&mut self) -> Result<RawPoly, ParseError> {
        let mut acc = if *self.lexer.peek() == Token::Minus {
            self.lexer.bump();
            let t = self.term()?;
            self.raw_neg(&t)
        } else {
            self.term()?
        };
        loop {
            match self.lexer.peek() {
                Token::Plus => {
                    self.lexer.bump();
                    let t = self.term()?;
                    acc = self.raw_add(&acc, &t);
                }
                Token::Minus => {
                    self.lexer.bump();
                    let t = self.term()?;
                    acc = self.raw_add(&acc, &self.raw_neg(&t));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<RawPoly, ParseError> {
        let mut acc = self.factor()?;
        while *self.lexer.peek() == Token::Star {
            self.lexer.bump();
            let f = self.factor()?;
            acc = self.raw_mul(&acc, &f);
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<RawPoly, ParseError> {
        let base = self.base()?;
        if *self.lexer.peek() == Token::Caret {
            self.lexer.bump();
            let e = match self.lexer.bump() {
                Token::Int(n) => n,
                _ => return Err(self.syntax("expected a positive integer exponent")),
            };
            let e: u64 = e
                .try_into()
                .map_err(|_| ParseError::ExponentOutOfRange(u64::MAX))?;
            if e == 0 || e > MAX_EXPONENT as u64 {
                return Err(ParseError::ExponentOutOfRange(e));
            }
            let mut acc = base.clone();
            for _ in 1..e {
                acc = self.raw_mul(&acc, &base);
            }
            return Ok(acc);
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<RawPoly, ParseError> {
        match self.lexer.bump() {
            Token::Var(index) => {
                if index == 0 || index > MAX_VAR_INDEX {
                    return Err(ParseError::VariableIndexOutOfRange(index));
                }
                self.max_var = self.max_var.max(index);
                let mut terms = BTreeMap::new();
                terms.insert(Word(vec![index as u8]), self.field.one());
                Ok(RawPoly { terms })
            }
            Token::Int(num) => {
                // Optional '/ int' makes a rational literal.
                if *self.lexer.peek() == Token::Slash {
                    self.lexer.bump();
                    let den = match self.lexer.bump() {
                        Token::Int(d) => d,
                        _ => return Err(self.syntax("expected an integer denominator")),
                    };
                    let c = self
                        .field
                        .from_ratio(&num, &den)
                        .map_err(|e| ParseError::BadCoefficient(e.to_string()))?;
                    Ok(self.raw_constant(c))
                } else {
                    let c = self
                        .field
                        .from_ratio(&num, &BigInt::from(1))
                        .map_err(|e| ParseError::BadCoefficient(e.to_string()))?;
                    Ok(self.raw_constant(c))
                }
            }
            Token::LParen => {
                let inner = self.expr()?;
                if self.lexer.bump() != Token::RParen {
                    return Err(self.syntax("expected ')'"));
                }
                Ok(inner)
            }
            Token::LBracket => {
                let left = self.expr()?;
                if self.lexer.bump() != Token::Comma {
                    return Err(self.syntax("expected ',' in commutator"));
                }
                let right = self.expr()?;
                if self.lexer.bump() != Token::RBracket {
                    return Err(self.syntax("expected ']'"));
                }
                let lr = self.raw_mul(&left, &right);
                let rl = self.raw_mul(&right, &left);
                Ok(self.raw_add(&lr, &self.raw_neg(&rl)))
            }
            other => Err(self.syntax(format!(
                "expected a variable, number, '(' or '[', found {:?}",
                other
            ))),
        }
    }
}

pub(super) fn parse(text: &str, field: FieldSpec) -> Result<NcPolynomial, ParseError> {
    let lexer = Lexer::new(text)?;
    let mut parser = Parser {
        lexer,
        field,
        max_var: 0,
    };
    let raw = parser.expr()?;
    if *parser.lexer.peek() != Token::End {
        return Err(parser.syntax("trailing input after polynomial"));
    }
    if raw.terms.contains_key(&Word(Vec::new())) {
        return Err(ParseError::NonzeroConstantTerm);
    }
    Ok(NcPolynomial::from_terms(
        field,
        parser.max_var as usize,
        raw.terms,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> FieldSpec {
        FieldSpec::Rational
    }

    #[test]
    fn commutator_squared_expands_to_four_words() {
        let p = NcPolynomial::parse("(x1*x2 - x2*x1)^2", q()).unwrap();
        let words: Vec<String> = p.terms().map(|(w, c)| format!("{}:{}", w, c)).collect();
        assert_eq!(
            words,
            vec![
                "x1*x2*x1*x2:1",
                "x1*x2^2*x1:-1",
                "x2*x1^2*x2:-1",
                "x2*x1*x2*x1:1",
            ]
        );
        assert_eq!(p, NcPolynomial::parse("[x1,x2]^2", q()).unwrap());
    }

    #[test]
    fn arity_is_the_largest_index_seen() {
        let p = NcPolynomial::parse("x3", q()).unwrap();
        assert_eq!(p.nvars(), 3);
        assert_eq!(p.degree(), 1);
    }

    #[test]
    fn rational_coefficients() {
        let p = NcPolynomial::parse("1/2*x1 + 3*x2 - x1", q()).unwrap();
        // Terms print in descending word order.
        let printed = p.to_string();
        assert_eq!(printed, "3*x2 - 1/2*x1");
    }

    #[test]
    fn rejects_constant_terms_and_syntax_errors() {
        assert_eq!(
            NcPolynomial::parse("x1 + 1", q()).unwrap_err(),
            ParseError::NonzeroConstantTerm
        );
        // Cancelled constants are fine.
        assert!(NcPolynomial::parse("(x1 + 1)*x2 - x2", q()).is_ok());
        assert!(matches!(
            NcPolynomial::parse("x1 x2", q()).unwrap_err(),
            ParseError::Syntax { .. }
        ));
        assert!(matches!(
            NcPolynomial::parse("x0", q()).unwrap_err(),
            ParseError::VariableIndexOutOfRange(0)
        ));
        assert!(matches!(
            NcPolynomial::parse("x1^0", q()).unwrap_err(),
            ParseError::ExponentOutOfRange(0)
        ));
        assert!(matches!(
            NcPolynomial::parse("x1 +", q()).unwrap_err(),
            ParseError::Syntax { .. }
        ));
    }

    #[test]
    fn parse_over_prime_field_reduces_coefficients() {
        let f = FieldSpec::Prime(7);
        let p = NcPolynomial::parse("8*x1", f).unwrap();
        assert_eq!(p, NcPolynomial::parse("x1", f).unwrap());
        // 1/2 = 4 mod 7
        let half = NcPolynomial::parse("1/2*x1", f).unwrap();
        assert_eq!(half, NcPolynomial::parse("4*x1", f).unwrap());
    }

    #[test]
    fn print_parse_round_trip() {
        for text in [
            "x1",
            "[x1,x2]",
            "(x1*x2 - x2*x1)^2",
            "x1^2 + x2 + x3",
            "x1*x2 + x2*x1",
            "2/3*x1*x1 - x2^3 + 5*x1*x2*x1",
        ] {
            let p = NcPolynomial::parse(text, q()).unwrap();
            let reparsed = NcPolynomial::parse(&p.to_string(), q()).unwrap();
            assert_eq!(p, reparsed, "round trip failed for {}", text);
        }
    }
}
