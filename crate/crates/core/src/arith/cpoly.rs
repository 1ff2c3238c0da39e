//! Sparse multivariate polynomials over a fixed variable set.
//!
//! Variables are generic matrix entries `a[r,c](i)`: the `(r, c)` entry of
//! the `i`-th matrix argument.  A `PolyRing` fixes the coefficient field and
//! the admissible variable set once; polynomials store a dense exponent
//! vector per term, keyed in graded lexicographic order so that printing and
//! iteration are canonical.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use super::field::{FieldElement, FieldSpec};
use super::ArithError;
use crate::ring::Ring;

/// The generic entry `a[row,col](index)`, all components 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var {
    pub row: u8,
    pub col: u8,
    pub index: u8,
}

impl Var {
    pub fn new(row: usize, col: usize, index: usize) -> Self {
        debug_assert!(row >= 1 && col >= row && index >= 1);
        Var {
            row: row as u8,
            col: col as u8,
            index: index as u8,
        }
    }

    pub fn is_diagonal(&self) -> bool {
        self.row == self.col
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a[{},{}]({})", self.row, self.col, self.index)
    }
}

/// An ordered, immutable set of variables shared by all polynomials of a ring.
#[derive(Debug, PartialEq, Eq)]
pub struct VarSet {
    vars: Vec<Var>,
    position: HashMap<Var, usize>,
}

impl VarSet {
    fn new(mut vars: Vec<Var>) -> Self {
        vars.sort();
        vars.dedup();
        let position = vars.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        VarSet { vars, position }
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn position(&self, v: Var) -> Option<usize> {
        self.position.get(&v).copied()
    }
}

/// Exponent vector of one term, aligned with the ring's variable list.
///
/// Ordered by total degree first, then lexicographically, so a `BTreeMap`
/// keyed on monomials iterates in a canonical graded order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial(pub Vec<u16>);

impl Monomial {
    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&e| e as u32).sum()
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Ring descriptor: coefficient field plus fixed variable set.
#[derive(Debug, Clone)]
pub struct PolyRing {
    field: FieldSpec,
    vars: Arc<VarSet>,
}

impl PolyRing {
    /// Ring of generic `m x m` upper triangular entries for `nvars` matrix
    /// arguments: variables `a[r,c](i)` for `1 <= r <= c <= m`, `1 <= i <= nvars`.
    pub fn generic(field: FieldSpec, m: usize, nvars: usize) -> Self {
        let mut vars = Vec::new();
        for row in 1..=m {
            for col in row..=m {
                for index in 1..=nvars {
                    vars.push(Var::new(row, col, index));
                }
            }
        }
        PolyRing {
            field,
            vars: Arc::new(VarSet::new(vars)),
        }
    }

    pub fn field_spec(&self) -> FieldSpec {
        self.field
    }

    pub fn var_set(&self) -> &VarSet {
        &self.vars
    }

    pub fn same_ring(&self, other: &PolyRing) -> bool {
        self.field == other.field
            && (Arc::ptr_eq(&self.vars, &other.vars) || self.vars == other.vars)
    }

    /// The polynomial consisting of the single variable `v`.
    pub fn var(&self, v: Var) -> CPolynomial {
        let pos = self
            .vars
            .position(v)
            .unwrap_or_else(|| panic!("variable {} not in ring", v));
        let mut exps = vec![0u16; self.vars.len()];
        exps[pos] = 1;
        let mut terms = BTreeMap::new();
        terms.insert(Monomial(exps), self.field.one());
        CPolynomial {
            ring: self.clone(),
            terms,
        }
    }

    pub fn constant(&self, c: FieldElement) -> CPolynomial {
        let mut terms = BTreeMap::new();
        if !self.field.is_zero(&c) {
            terms.insert(Monomial(vec![0u16; self.vars.len()]), c);
        }
        CPolynomial {
            ring: self.clone(),
            terms,
        }
    }

    /// Assembles a polynomial from pre-validated terms (full-width exponent
    /// vectors, no zero coefficients).
    pub(crate) fn poly_from_terms(
        &self,
        terms: BTreeMap<Monomial, FieldElement>,
    ) -> CPolynomial {
        debug_assert!(terms.keys().all(|m| m.0.len() == self.vars.len()));
        debug_assert!(terms.values().all(|c| !self.field.is_zero(c)));
        CPolynomial {
            ring: self.clone(),
            terms,
        }
    }
}

impl Ring for PolyRing {
    type Elem = CPolynomial;

    fn field(&self) -> &FieldSpec {
        &self.field
    }

    fn zero(&self) -> CPolynomial {
        CPolynomial {
            ring: self.clone(),
            terms: BTreeMap::new(),
        }
    }

    fn one(&self) -> CPolynomial {
        self.constant(self.field.one())
    }

    fn is_zero(&self, a: &CPolynomial) -> bool {
        a.terms.is_empty()
    }

    fn add(&self, a: &CPolynomial, b: &CPolynomial) -> CPolynomial {
        debug_assert!(a.ring.same_ring(&b.ring), "ring mismatch in add");
        let mut terms = a.terms.clone();
        for (mono, coeff) in &b.terms {
            match terms.entry(mono.clone()) {
                std::collections::btree_map::Entry::Vacant(e) => {
                    e.insert(coeff.clone());
                }
                std::collections::btree_map::Entry::Occupied(mut e) => {
                    let sum = self.field.add(e.get(), coeff);
                    if self.field.is_zero(&sum) {
                        e.remove();
                    } else {
                        e.insert(sum);
                    }
                }
            }
        }
        CPolynomial {
            ring: a.ring.clone(),
            terms,
        }
    }

    fn neg(&self, a: &CPolynomial) -> CPolynomial {
        CPolynomial {
            ring: a.ring.clone(),
            terms: a
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), self.field.neg(c)))
                .collect(),
        }
    }

    fn mul(&self, a: &CPolynomial, b: &CPolynomial) -> CPolynomial {
        debug_assert!(a.ring.same_ring(&b.ring), "ring mismatch in mul");
        let mut terms: BTreeMap<Monomial, FieldElement> = BTreeMap::new();
        for (ma, ca) in &a.terms {
            for (mb, cb) in &b.terms {
                let exps: Vec<u16> = ma
                    .0
                    .iter()
                    .zip(mb.0.iter())
                    .map(|(x, y)| x + y)
                    .collect();
                let c = self.field.mul(ca, cb);
                let key = Monomial(exps);
                match terms.entry(key) {
                    std::collections::btree_map::Entry::Vacant(e) => {
                        e.insert(c);
                    }
                    std::collections::btree_map::Entry::Occupied(mut e) => {
                        let sum = self.field.add(e.get(), &c);
                        if self.field.is_zero(&sum) {
                            e.remove();
                        } else {
                            e.insert(sum);
                        }
                    }
                }
            }
        }
        CPolynomial {
            ring: a.ring.clone(),
            terms,
        }
    }

    fn scalar_mul(&self, c: &FieldElement, a: &CPolynomial) -> CPolynomial {
        if self.field.is_zero(c) {
            return self.zero();
        }
        CPolynomial {
            ring: a.ring.clone(),
            terms: a
                .terms
                .iter()
                .map(|(m, x)| (m.clone(), self.field.mul(c, x)))
                .collect(),
        }
    }
}

/// A commutative polynomial in the generic entry variables of its ring.
///
/// Zero coefficients are never stored, so `terms.is_empty()` iff the
/// polynomial is zero, and structural equality is mathematical equality.
#[derive(Debug, Clone)]
pub struct CPolynomial {
    ring: PolyRing,
    terms: BTreeMap<Monomial, FieldElement>,
}

impl PartialEq for CPolynomial {
    fn eq(&self, other: &Self) -> bool {
        self.ring.same_ring(&other.ring) && self.terms == other.terms
    }
}

impl CPolynomial {
    pub fn ring(&self) -> &PolyRing {
        &self.ring
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &FieldElement)> {
        self.terms.iter()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    /// Constant polynomials report their constant; everything else `None`.
    pub fn as_constant(&self) -> Option<FieldElement> {
        if self.terms.is_empty() {
            return Some(self.ring.field.zero());
        }
        if self.terms.len() == 1 {
            let (m, c) = self.terms.iter().next().unwrap();
            if m.degree() == 0 {
                return Some(c.clone());
            }
        }
        None
    }

    /// The set of variables with nonzero exponent in some term.
    pub fn vars_used(&self) -> BTreeSet<Var> {
        let vars = self.ring.vars.vars();
        let mut used = BTreeSet::new();
        for mono in self.terms.keys() {
            for (pos, &e) in mono.0.iter().enumerate() {
                if e > 0 {
                    used.insert(vars[pos]);
                }
            }
        }
        used
    }

    pub fn uses_only_diagonal_vars(&self) -> bool {
        self.vars_used().iter().all(|v| v.is_diagonal())
    }

    /// Rebuilds the polynomial in `target` after renaming every variable
    /// through `rename`.  The renamed variables must exist in `target`.
    pub fn map_vars(
        &self,
        target: &PolyRing,
        mut rename: impl FnMut(Var) -> Var,
    ) -> Result<CPolynomial, ArithError> {
        let src_vars = self.ring.vars.vars();
        let mut out = target.zero();
        for (mono, coeff) in &self.terms {
            let mut exps = vec![0u16; target.vars.len()];
            for (pos, &e) in mono.0.iter().enumerate() {
                if e > 0 {
                    let w = rename(src_vars[pos]);
                    let tpos = target
                        .vars
                        .position(w)
                        .ok_or(ArithError::MissingVariable(w))?;
                    exps[tpos] += e;
                }
            }
            let single = CPolynomial {
                ring: target.clone(),
                terms: std::iter::once((Monomial(exps), coeff.clone())).collect(),
            };
            out = target.add(&out, &single);
        }
        Ok(out)
    }

    /// Exact evaluation at a point; every variable appearing in the
    /// polynomial must be assigned.
    pub fn eval(
        &self,
        assignment: &BTreeMap<Var, FieldElement>,
    ) -> Result<FieldElement, ArithError> {
        cpoly_eval(self, assignment)
    }
}

/// Evaluates `q` at `assignment`, exactly in the ring's field.
pub fn cpoly_eval(
    q: &CPolynomial,
    assignment: &BTreeMap<Var, FieldElement>,
) -> Result<FieldElement, ArithError> {
    let field = q.ring.field;
    let vars = q.ring.vars.vars();
    // Cache per-variable power ladders across terms.
    let mut powers: HashMap<usize, Vec<FieldElement>> = HashMap::new();
    let mut acc = field.zero();
    for (mono, coeff) in &q.terms {
        let mut term = coeff.clone();
        for (pos, &e) in mono.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            let ladder = match powers.entry(pos) {
                std::collections::hash_map::Entry::Occupied(o) => o.into_mut(),
                std::collections::hash_map::Entry::Vacant(v) => {
                    let value = assignment
                        .get(&vars[pos])
                        .ok_or(ArithError::MissingVariable(vars[pos]))?;
                    v.insert(vec![field.one(), value.clone()])
                }
            };
            while ladder.len() <= e as usize {
                let next = field.mul(&ladder[ladder.len() - 1], &ladder[1]);
                ladder.push(next);
            }
            term = field.mul(&term, &ladder[e as usize]);
        }
        acc = field.add(&acc, &term);
    }
    Ok(acc)
}

impl fmt::Display for CPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let field = self.ring.field;
        let vars = self.ring.vars.vars();
        // Highest-degree terms first.
        for (k, (mono, coeff)) in self.terms.iter().rev().enumerate() {
            let text = field.format_element(coeff);
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
            let mut factors = Vec::new();
            if body != "1" || mono.degree() == 0 {
                factors.push(body);
            }
            for (pos, &e) in mono.0.iter().enumerate() {
                if e == 1 {
                    factors.push(vars[pos].to_string());
                } else if e > 1 {
                    factors.push(format!("{}^{}", vars[pos], e));
                }
            }
            write!(f, "{}", factors.join("*"))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring() -> PolyRing {
        PolyRing::generic(FieldSpec::Rational, 2, 2)
    }

    #[test]
    fn arithmetic_and_normalization() {
        let r = ring();
        let x = r.var(Var::new(1, 1, 1));
        let y = r.var(Var::new(2, 2, 1));
        let sum = r.add(&x, &y);
        let diff = r.sub(&sum, &x);
        assert_eq!(diff, y);
        let cancel = r.sub(&x, &x);
        assert!(cancel.is_zero());
        // (x + y)(x - y) = x^2 - y^2
        let prod = r.mul(&sum, &r.sub(&x, &y));
        let expected = r.sub(&r.mul(&x, &x), &r.mul(&y, &y));
        assert_eq!(prod, expected);
    }

    #[test]
    fn evaluation_matches_hand_computation() {
        let r = ring();
        let x = r.var(Var::new(1, 1, 1));
        let y = r.var(Var::new(1, 2, 2));
        // q = 3*x^2*y - y + 2
        let three = r.constant(r.field_spec().from_i64(3));
        let two = r.constant(r.field_spec().from_i64(2));
        let q = r.add(
            &r.sub(&r.mul(&three, &r.mul(&r.mul(&x, &x), &y)), &y),
            &two,
        );
        let mut point = BTreeMap::new();
        point.insert(Var::new(1, 1, 1), r.field_spec().from_i64(2));
        point.insert(Var::new(1, 2, 2), r.field_spec().from_i64(-1));
        // 3*4*(-1) - (-1) + 2 = -9
        assert_eq!(q.eval(&point).unwrap(), r.field_spec().from_i64(-9));
    }

    #[test]
    fn eval_requires_every_used_variable() {
        let r = ring();
        let q = r.var(Var::new(1, 2, 1));
        let empty = BTreeMap::new();
        assert!(matches!(
            q.eval(&empty),
            Err(ArithError::MissingVariable(_))
        ));
    }

    #[test]
    fn display_is_canonical() {
        let r = ring();
        let x = r.var(Var::new(1, 1, 1));
        let y = r.var(Var::new(2, 2, 2));
        let q = r.sub(&r.mul(&x, &x), &y);
        assert_eq!(q.to_string(), "a[1,1](1)^2 - a[2,2](2)");
    }

    #[test]
    fn map_vars_renames_rows() {
        let src = PolyRing::generic(FieldSpec::Rational, 2, 1);
        let dst = PolyRing::generic(FieldSpec::Rational, 4, 1);
        let q = src.add(&src.var(Var::new(1, 1, 1)), &src.var(Var::new(2, 2, 1)));
        let mapped = q
            .map_vars(&dst, |v| Var::new(v.row as usize + 2, v.col as usize + 2, 1))
            .unwrap();
        let expected = dst.add(&dst.var(Var::new(3, 3, 1)), &dst.var(Var::new(4, 4, 1)));
        assert_eq!(mapped, expected);
    }
}
