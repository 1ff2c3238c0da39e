//! Noncommutative polynomials in `x1, x2, ...` with coefficients in a field.
//!
//! A polynomial is a finite sum of words (sequences of variable indices)
//! with nonzero coefficients and no constant term, so every polynomial
//! vanishes at the zero tuple.  Evaluation is generic over any ring with the
//! matching coefficient field, which covers scalars, generic-entry
//! polynomial matrices, and concrete matrices in one code path.

mod parse;
mod word;

pub use parse::ParseError;
pub use word::{GroupWord, WordError};

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::arith::{FieldElement, FieldSpec};
use crate::ring::Ring;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("polynomial in {expected} variables applied to {given} arguments")]
    ArityMismatch { expected: usize, given: usize },
    #[error("polynomial over {expected} evaluated in a ring over {found}")]
    FieldMismatch { expected: String, found: String },
}

/// A word in the free monoid: variable indices, 1-based, in order.
///
/// Ordered by length first and lexicographically within a length, which
/// makes map iteration (and printing) canonical and degree-graded.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word(pub Vec<u8>);

impl Word {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        let mut i = 0;
        while i < self.0.len() {
            let v = self.0[i];
            let mut run = 1;
            while i + run < self.0.len() && self.0[i + run] == v {
                run += 1;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if run == 1 {
                write!(f, "x{}", v)?;
            } else {
                write!(f, "x{}^{}", v, run)?;
            }
            i += run;
        }
        Ok(())
    }
}

/// Noncommutative polynomial without constant term.
#[derive(Debug, Clone, PartialEq)]
pub struct NcPolynomial {
    field: FieldSpec,
    nvars: usize,
    terms: BTreeMap<Word, FieldElement>,
}

impl NcPolynomial {
    /// Parses the textual form over the given coefficient field.
    ///
    /// Grammar: sums of `*`-separated products of variables `x<k>`, integer
    /// or rational literals, parenthesized subexpressions, commutator
    /// brackets `[f,g] = f*g - g*f`, and positive integer powers `^n`.
    /// Multiplication is always explicit.  The expanded polynomial must have
    /// zero constant term.
    pub fn parse(text: &str, field: FieldSpec) -> Result<Self, ParseError> {
        parse::parse(text, field)
    }

    pub fn zero(field: FieldSpec, nvars: usize) -> Self {
        NcPolynomial {
            field,
            nvars,
            terms: BTreeMap::new(),
        }
    }

    /// The single variable `x<index>` (1-based, `index <= nvars`).
    pub fn var(field: FieldSpec, nvars: usize, index: usize) -> Self {
        assert!(index >= 1 && index <= nvars);
        let mut terms = BTreeMap::new();
        terms.insert(Word(vec![index as u8]), field.one());
        NcPolynomial {
            field,
            nvars,
            terms,
        }
    }

    pub(crate) fn from_terms(
        field: FieldSpec,
        nvars: usize,
        terms: BTreeMap<Word, FieldElement>,
    ) -> Self {
        debug_assert!(terms.keys().all(|w| !w.is_empty()));
        debug_assert!(terms.values().all(|c| !field.is_zero(c)));
        NcPolynomial {
            field,
            nvars,
            terms,
        }
    }

    pub fn field_spec(&self) -> FieldSpec {
        self.field
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Total degree: the length of the longest word.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(Word::len).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &FieldElement)> {
        self.terms.iter()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Widens the declared arity; existing words are unchanged.
    pub fn with_nvars(mut self, nvars: usize) -> Self {
        assert!(nvars >= self.nvars);
        self.nvars = nvars;
        self
    }

    fn check_compatible(&self, other: &Self) {
        assert_eq!(self.field, other.field, "coefficient fields differ");
        assert_eq!(self.nvars, other.nvars, "arities differ");
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_compatible(other);
        let mut terms = self.terms.clone();
        for (w, c) in &other.terms {
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
        NcPolynomial {
            field: self.field,
            nvars: self.nvars,
            terms,
        }
    }

    pub fn neg(&self) -> Self {
        NcPolynomial {
            field: self.field,
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(w, c)| (w.clone(), self.field.neg(c)))
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.check_compatible(other);
        let mut terms: BTreeMap<Word, FieldElement> = BTreeMap::new();
        for (wa, ca) in &self.terms {
            for (wb, cb) in &other.terms {
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
        NcPolynomial {
            field: self.field,
            nvars: self.nvars,
            terms,
        }
    }

    pub fn scalar_mul(&self, c: &FieldElement) -> Self {
        if self.field.is_zero(c) {
            return Self::zero(self.field, self.nvars);
        }
        NcPolynomial {
            field: self.field,
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(w, x)| (w.clone(), self.field.mul(c, x)))
                .collect(),
        }
    }

    pub fn pow(&self, e: usize) -> Self {
        assert!(e >= 1, "only positive powers of a constant-free polynomial");
        let mut acc = self.clone();
        for _ in 1..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// `[a, b] = a*b - b*a`.
    pub fn commutator(a: &Self, b: &Self) -> Self {
        a.mul(b).sub(&b.mul(a))
    }

    /// Evaluates at a tuple of ring elements, one per variable.
    pub fn evaluate_in_ring<R: Ring>(
        &self,
        ring: &R,
        args: &[R::Elem],
    ) -> Result<R::Elem, EvalError> {
        if args.len() != self.nvars {
            return Err(EvalError::ArityMismatch {
                expected: self.nvars,
                given: args.len(),
            });
        }
        if *ring.field() != self.field {
            return Err(EvalError::FieldMismatch {
                expected: self.field.name(),
                found: ring.field().name(),
            });
        }
        let mut acc = ring.zero();
        for (word, coeff) in &self.terms {
            let mut prod = ring.one();
            for &v in &word.0 {
                prod = ring.mul(&prod, &args[v as usize - 1]);
            }
            acc = ring.add(&acc, &ring.scalar_mul(coeff, &prod));
        }
        Ok(acc)
    }

    /// Renames variables through `perm` (1-based image per variable).
    pub fn relabel(&self, perm: &[usize], nvars: usize) -> Self {
        assert_eq!(perm.len(), self.nvars);
        let mut terms: BTreeMap<Word, FieldElement> = BTreeMap::new();
        for (w, c) in &self.terms {
            let img: Vec<u8> = w.0.iter().map(|&v| perm[v as usize - 1] as u8).collect();
            let key = Word(img);
            match terms.entry(key) {
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
        NcPolynomial {
            field: self.field,
            nvars,
            terms,
        }
    }
}

impl fmt::Display for NcPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (word, coeff)) in self.terms.iter().rev().enumerate() {
            let text = self.field.format_element(coeff);
            let (sign, body) = match text.strip_prefix('-') {
                Some(rest) => ("-", rest.to_string()),
                None => ("+", text),
            };
            if k == 0 {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", sign)?;
            }
            if body == "1" {
                write!(f, "{}", word)?;
            } else {
                write!(f, "{}*{}", body, word)?;
            }
        }
        Ok(())
    }
}
