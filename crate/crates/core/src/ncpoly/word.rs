//! Words in a free group, for word maps on the group of invertible upper
//! triangular matrices.
//!
//! A group word is a product of integer powers of variables, e.g.
//! `x1*x2^-1*x1^3`.  Unlike `NcPolynomial` there is no addition, but
//! exponents may be negative, so evaluation requires invertible arguments.

use std::fmt;

use thiserror::Error;

use super::{NcPolynomial, Word};
use crate::arith::{FieldElement, FieldSpec};
use crate::ring::Ring;
use crate::utm::{invert, MatrixRing, UTMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WordError {
    #[error("syntax error at byte {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("word in {expected} variables applied to {given} arguments")]
    ArityMismatch { expected: usize, given: usize },
    #[error("argument {0} is not invertible")]
    NonInvertibleArgument(usize),
    #[error("cannot invert scalar argument {0}: it is zero")]
    ZeroScalarArgument(usize),
}

/// A reduced word in the free group on `x1..x<nvars>`: a sequence of
/// (variable, exponent) letters with nonzero exponents and no two adjacent
/// letters sharing a variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupWord {
    nvars: usize,
    letters: Vec<(usize, i64)>,
}

impl GroupWord {
    /// Parses a `*`-separated product of `x<k>` or `x<k>^<int>` factors,
    /// where the exponent may be negative (`x2^-1`).  `1` denotes the empty
    /// word.
    pub fn parse(text: &str) -> Result<Self, WordError> {
        let bytes = text.as_bytes();
        let mut letters: Vec<(usize, i64)> = Vec::new();
        let mut nvars = 0usize;
        let mut i = 0usize;
        let skip_ws = |i: &mut usize| {
            while *i < bytes.len() && bytes[*i].is_ascii_whitespace() {
                *i += 1;
            }
        };
        let syntax = |pos: usize, message: &str| WordError::Syntax {
            pos,
            message: message.to_string(),
        };
        skip_ws(&mut i);
        if i == bytes.len() {
            return Err(syntax(i, "empty input"));
        }
        let mut expect_factor = true;
        while i < bytes.len() {
            if !expect_factor {
                if bytes[i] != b'*' {
                    return Err(syntax(i, "expected '*' between factors"));
                }
                i += 1;
                skip_ws(&mut i);
                expect_factor = true;
                continue;
            }
            if bytes[i] == b'1' {
                // The identity element; contributes nothing.
                i += 1;
            } else if bytes[i] == b'x' {
                i += 1;
                let ds = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i == ds {
                    return Err(syntax(ds, "expected digits after 'x'"));
                }
                let index: usize = text[ds..i]
                    .parse()
                    .map_err(|_| syntax(ds, "variable index too large"))?;
                if index == 0 || index > 255 {
                    return Err(syntax(ds, "variable index out of range 1..=255"));
                }
                let mut exp: i64 = 1;
                if i < bytes.len() && bytes[i] == b'^' {
                    i += 1;
                    let neg = i < bytes.len() && bytes[i] == b'-';
                    if neg {
                        i += 1;
                    }
                    let es = i;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    if i == es {
                        return Err(syntax(es, "expected an integer exponent"));
                    }
                    exp = text[es..i]
                        .parse()
                        .map_err(|_| syntax(es, "exponent too large"))?;
                    if neg {
                        exp = -exp;
                    }
                }
                nvars = nvars.max(index);
                if exp != 0 {
                    // Reduce against the previous letter.
                    match letters.last_mut() {
                        Some((v, e)) if *v == index => {
                            *e += exp;
                            if *e == 0 {
                                letters.pop();
                            }
                        }
                        _ => letters.push((index, exp)),
                    }
                }
            } else {
                return Err(syntax(i, "expected a factor 'x<k>' or '1'"));
            }
            skip_ws(&mut i);
            expect_factor = false;
        }
        if expect_factor {
            return Err(syntax(bytes.len(), "trailing '*'"));
        }
        Ok(GroupWord { nvars, letters })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn letters(&self) -> &[(usize, i64)] {
        &self.letters
    }

    pub fn is_trivial(&self) -> bool {
        self.letters.is_empty()
    }

    /// Signed total exponent of each variable; this is the image of the word
    /// under abelianization.
    pub fn exponent_sums(&self) -> Vec<i64> {
        let mut sums = vec![0i64; self.nvars];
        for &(v, e) in &self.letters {
            sums[v - 1] += e;
        }
        sums
    }

    /// The word as a polynomial, available exactly when every exponent is
    /// positive.
    pub fn to_ncpoly(&self, field: FieldSpec) -> Option<NcPolynomial> {
        if self.letters.iter().any(|&(_, e)| e < 0) {
            return None;
        }
        let mut w: Vec<u8> = Vec::new();
        for &(v, e) in &self.letters {
            for _ in 0..e {
                w.push(v as u8);
            }
        }
        if w.is_empty() {
            return None; // the identity is the constant 1, not a polynomial without constant term
        }
        let mut terms = std::collections::BTreeMap::new();
        terms.insert(Word(w), field.one());
        Some(NcPolynomial::from_terms(field, self.nvars, terms))
    }

    /// Evaluates the word at a tuple of invertible upper triangular matrices.
    pub fn evaluate_matrices(
        &self,
        field: &FieldSpec,
        args: &[UTMatrix<FieldElement>],
    ) -> Result<UTMatrix<FieldElement>, WordError> {
        if args.len() != self.nvars {
            return Err(WordError::ArityMismatch {
                expected: self.nvars,
                given: args.len(),
            });
        }
        let m = args.first().map(|a| a.dim()).unwrap_or(1);
        let ring = MatrixRing::new(m, field);
        // Invert lazily: only arguments used with negative exponent.
        let mut inverses: Vec<Option<UTMatrix<FieldElement>>> = vec![None; args.len()];
        let mut acc = ring.one();
        for &(v, e) in &self.letters {
            let factor = if e > 0 {
                args[v - 1].clone()
            } else {
                if inverses[v - 1].is_none() {
                    let inv = invert(field, &args[v - 1])
                        .map_err(|_| WordError::NonInvertibleArgument(v))?;
                    inverses[v - 1] = Some(inv);
                }
                inverses[v - 1].clone().unwrap()
            };
            for _ in 0..e.unsigned_abs() {
                acc = ring.mul(&acc, &factor);
            }
        }
        Ok(acc)
    }

    /// Evaluates the word at a tuple of nonzero scalars.
    pub fn evaluate_scalars(
        &self,
        field: &FieldSpec,
        args: &[FieldElement],
    ) -> Result<FieldElement, WordError> {
        if args.len() != self.nvars {
            return Err(WordError::ArityMismatch {
                expected: self.nvars,
                given: args.len(),
            });
        }
        let mut acc = field.one();
        for &(v, e) in &self.letters {
            let base = if e > 0 {
                args[v - 1].clone()
            } else {
                field
                    .inv(&args[v - 1])
                    .map_err(|_| WordError::ZeroScalarArgument(v))?
            };
            for _ in 0..e.unsigned_abs() {
                acc = field.mul(&acc, &base);
            }
        }
        Ok(acc)
    }
}

impl fmt::Display for GroupWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "1");
        }
        for (k, &(v, e)) in self.letters.iter().enumerate() {
            if k > 0 {
                write!(f, "*")?;
            }
            if e == 1 {
                write!(f, "x{}", v)?;
            } else {
                write!(f, "x{}^{}", v, e)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_reduces_adjacent_letters() {
        let w = GroupWord::parse("x1*x1^2*x2^-1*x2*x3^0").unwrap();
        assert_eq!(w.letters(), &[(1, 3)]);
        assert_eq!(w.nvars(), 3);
        assert_eq!(w.to_string(), "x1^3");
        let trivial = GroupWord::parse("x1*x1^-1").unwrap();
        assert!(trivial.is_trivial());
        assert_eq!(trivial.to_string(), "1");
    }

    #[test]
    fn exponent_sums_are_the_abelianization() {
        let w = GroupWord::parse("x1*x2^-1*x1^2*x2").unwrap();
        assert_eq!(w.exponent_sums(), vec![3, 0]);
        let c = GroupWord::parse("x1*x2*x1^-1*x2^-1").unwrap();
        assert_eq!(c.exponent_sums(), vec![0, 0]);
        assert!(!c.is_trivial());
    }

    #[test]
    fn matrix_evaluation_matches_hand_product() {
        let field = FieldSpec::Rational;
        let ring = MatrixRing::new(2, &field);
        let mut a = UTMatrix::zero(2);
        a.set(&field, 1, 1, field.from_i64(2)).unwrap();
        a.set(&field, 1, 2, field.from_i64(1)).unwrap();
        a.set(&field, 2, 2, field.from_i64(3)).unwrap();
        let mut b = UTMatrix::zero(2);
        b.set(&field, 1, 1, field.from_i64(1)).unwrap();
        b.set(&field, 2, 2, field.from_i64(5)).unwrap();

        let w = GroupWord::parse("x1*x2^-1*x1^-1*x2").unwrap();
        let got = w.evaluate_matrices(&field, &[a.clone(), b.clone()]).unwrap();
        let ainv = invert(&field, &a).unwrap();
        let binv = invert(&field, &b).unwrap();
        let byhand = ring.mul(&ring.mul(&ring.mul(&a, &binv), &ainv), &b);
        assert_eq!(got, byhand);

        // Diagonal of a commutator word is the identity's diagonal.
        for i in 1..=2 {
            assert_eq!(got.get_or_zero(&field, i, i), field.one());
        }
    }

    #[test]
    fn evaluation_rejects_singular_arguments() {
        let field = FieldSpec::Rational;
        let w = GroupWord::parse("x1^-1").unwrap();
        let singular = UTMatrix::zero(1);
        assert_eq!(
            w.evaluate_matrices(&field, &[singular]).unwrap_err(),
            WordError::NonInvertibleArgument(1)
        );
    }

    #[test]
    fn scalar_evaluation() {
        let field = FieldSpec::Prime(7);
        let w = GroupWord::parse("x1^2*x2^-1").unwrap();
        let got = w
            .evaluate_scalars(&field, &[field.from_i64(3), field.from_i64(2)])
            .unwrap();
        // 9/2 = 2*4 = 8 = 1 mod 7
        assert_eq!(got, field.from_i64(1));
    }

    #[test]
    fn positive_words_convert_to_polynomials() {
        let field = FieldSpec::Rational;
        let w = GroupWord::parse("x1^2*x2").unwrap();
        let p = w.to_ncpoly(field).unwrap();
        assert_eq!(p, NcPolynomial::parse("x1^2*x2", field).unwrap());
        assert!(GroupWord::parse("x1^-1").unwrap().to_ncpoly(field).is_none());
    }
}
