//! Scalar fields and commutative polynomials.
//!
//! Three coefficient fields are supported: exact rationals of arbitrary
//! precision, prime fields `F_q` with the modulus checked for primality, and
//! complex numbers in double precision.  On top of the scalars sits a sparse
//! multivariate polynomial type whose variables are the generic matrix
//! entries `a[r,c](i)` used throughout the rest of the crate.

mod cpoly;
mod field;
mod roots;

pub use cpoly::{cpoly_eval, CPolynomial, Monomial, PolyRing, Var, VarSet};
pub use field::{FieldElement, FieldSpec};
pub use roots::{kth_roots_complex, rational_kth_root, univariate_roots, RootSet};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArithError {
    #[error("inverse of zero")]
    ZeroInverse,
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("unknown field spec {0:?} (expected Q, Fq:<prime>, or C)")]
    UnknownField(String),
    #[error("cannot parse {text:?} as an element of {field}")]
    BadElement { field: String, text: String },
    #[error("element of {found} used where {expected} was required")]
    FieldMismatch { expected: String, found: String },
    #[error("no value assigned to variable {0}")]
    MissingVariable(Var),
    #[error("operands belong to different polynomial rings")]
    RingMismatch,
    #[error("root finding failed to converge for degree {0}")]
    RootsDiverged(usize),
}
