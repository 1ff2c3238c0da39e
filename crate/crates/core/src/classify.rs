//! Polynomial-identity testing on upper triangular algebras and the order of
//! a polynomial.
//!
//! Over an infinite field, `p` is an identity of `T_m(K)` exactly when its
//! evaluation at *generic* matrices — matrices whose entries are independent
//! commuting indeterminates — is the zero matrix of polynomials.  The order
//! of `p` is the largest `t` such that `p` is an identity of `T_t(K)`; order
//! 0 means `p` is already nonzero on scalars.  Since the product of `m`
//! commutators is an identity of `T_m` but not of `T_{m+1}`, the order of a
//! nonzero polynomial never exceeds its degree, which bounds the scan.

use thiserror::Error;

use crate::arith::{CPolynomial, PolyRing};
use crate::ncpoly::NcPolynomial;
use crate::utm::{generic_matrix, MatrixRing, UTMatrix};
use crate::FieldSpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error(
        "identity testing by generic evaluation is only sound over an infinite \
         field; refusing coefficient field {0}"
    )]
    FieldNotCharZero(String),
    #[error("identity testing needs exact coefficient arithmetic; got {0}")]
    InexactField(String),
    #[error("polynomial is an identity of every algebra up to the cap: order >= {0}")]
    OrderExceedsCap(usize),
    #[error("the zero polynomial is an identity of everything; order undefined")]
    ZeroPolynomial,
}

/// Outcome of the order computation.
///
/// The witness is the lexicographically smallest position `(row, col)` of
/// `T_{order+1}` at which the generic evaluation of `p` is a nonzero
/// polynomial, together with that polynomial; any point avoiding its zero
/// set (guaranteed to exist over an infinite field) exhibits `p` as a
/// non-identity.  For order 0 the witness is the abelianization of `p`,
/// sitting at position `(1, 1)` of `T_1`.
#[derive(Debug, Clone)]
pub struct OrderReport {
    pub order: usize,
    pub witness_position: (usize, usize),
    pub witness_entry: CPolynomial,
}

fn require_exact_infinite(field: FieldSpec) -> Result<(), ClassifyError> {
    match field {
        FieldSpec::Rational => Ok(()),
        FieldSpec::Prime(_) => Err(ClassifyError::FieldNotCharZero(field.name())),
        FieldSpec::Complex => Err(ClassifyError::InexactField(field.name())),
    }
}

/// Evaluates `p` at the tuple of generic `m x m` matrices, returning the
/// polynomial ring of the generic entries alongside the matrix of entries.
pub fn generic_evaluation(p: &NcPolynomial, m: usize) -> (PolyRing, UTMatrix<CPolynomial>) {
    let ring = PolyRing::generic(p.field_spec(), m, p.nvars());
    let mats: Vec<UTMatrix<CPolynomial>> = (1..=p.nvars())
        .map(|i| generic_matrix(&ring, m, i))
        .collect();
    let matrix_ring = MatrixRing::new(m, &ring);
    let value = p
        .evaluate_in_ring(&matrix_ring, &mats)
        .expect("generic tuple matches arity and field by construction");
    (ring, value)
}

/// Whether `p` is a polynomial identity of `T_m(K)`, decided symbolically.
pub fn is_identity_generic(p: &NcPolynomial, m: usize) -> Result<bool, ClassifyError> {
    assert!(m >= 1);
    require_exact_infinite(p.field_spec())?;
    let (_, value) = generic_evaluation(p, m);
    Ok(value.is_zero_matrix())
}

/// Computes the order of `p`: the largest `t` with `p` an identity of
/// `T_t(K)`.  Scans `m = 1, 2, ...` for the first non-identity; `m_cap`
/// defaults to `degree(p) + 1`, which is always enough.
pub fn order(p: &NcPolynomial, m_cap: Option<usize>) -> Result<OrderReport, ClassifyError> {
    require_exact_infinite(p.field_spec())?;
    if p.is_zero() {
        return Err(ClassifyError::ZeroPolynomial);
    }
    let cap = m_cap.unwrap_or(p.degree() + 1).max(1);
    for m in 1..=cap {
        let (_, value) = generic_evaluation(p, m);
        let first = value
            .iter()
            .next()
            .map(|(&(row, col), entry)| ((row, col), entry.clone()));
        if let Some((witness_position, witness_entry)) = first {
            return Ok(OrderReport {
                order: m - 1,
                witness_position,
                witness_entry,
            });
        }
    }
    Err(ClassifyError::OrderExceedsCap(cap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn parse(text: &str) -> NcPolynomial {
        NcPolynomial::parse(text, FieldSpec::Rational).unwrap()
    }

    #[test]
    fn scalars_commute_but_t2_does_not() {
        let p = parse("[x1,x2]");
        assert!(is_identity_generic(&p, 1).unwrap());
        assert!(!is_identity_generic(&p, 2).unwrap());
    }

    #[test]
    fn commutator_squared_is_an_identity_of_t2_only() {
        let p = parse("(x1*x2 - x2*x1)^2");
        assert!(is_identity_generic(&p, 1).unwrap());
        assert!(is_identity_generic(&p, 2).unwrap());
        assert!(!is_identity_generic(&p, 3).unwrap());
        let report = order(&p, None).unwrap();
        assert_eq!(report.order, 2);
        assert_eq!(report.witness_position, (1, 3));
    }

    #[test]
    fn order_zero_witness_is_the_abelianization() {
        let p = parse("x1^2 + x2 + x3");
        let report = order(&p, None).unwrap();
        assert_eq!(report.order, 0);
        assert_eq!(report.witness_position, (1, 1));
        // The witness polynomial is the commutative x^2 + y + z; check at a point.
        let field = FieldSpec::Rational;
        let ring = report.witness_entry.ring().clone();
        let mut at = BTreeMap::new();
        for (k, v) in ring.var_set().vars().iter().enumerate() {
            at.insert(*v, field.from_i64(k as i64 + 2));
        }
        let got = report.witness_entry.eval(&at).unwrap();
        // Variables are a[1,1](1), a[1,1](2), a[1,1](3) = 2, 3, 4.
        assert_eq!(got, field.from_i64(2 * 2 + 3 + 4));
    }

    #[test]
    fn single_commutator_has_order_one() {
        let report = order(&parse("[x1,x2]"), None).unwrap();
        assert_eq!(report.order, 1);
        assert_eq!(report.witness_position, (1, 2));
    }

    #[test]
    fn errors_are_reported_not_guessed() {
        assert_eq!(
            order(&parse("[x1,x2]"), Some(1)).unwrap_err(),
            ClassifyError::OrderExceedsCap(1)
        );
        let zero = NcPolynomial::zero(FieldSpec::Rational, 2);
        assert_eq!(order(&zero, None).unwrap_err(), ClassifyError::ZeroPolynomial);
        let over_f7 = NcPolynomial::parse("[x1,x2]", FieldSpec::Prime(7)).unwrap();
        assert!(matches!(
            order(&over_f7, None).unwrap_err(),
            ClassifyError::FieldNotCharZero(_)
        ));
        let over_c = NcPolynomial::parse("[x1,x2]", FieldSpec::Complex).unwrap();
        assert!(matches!(
            is_identity_generic(&over_c, 2).unwrap_err(),
            ClassifyError::InexactField(_)
        ));
    }
}
