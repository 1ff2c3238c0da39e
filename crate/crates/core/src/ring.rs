//! Ring abstraction shared by scalars, commutative polynomials and matrices.
//!
//! Rings are represented by lightweight descriptor objects whose methods act
//! on elements, rather than by traits on the element types themselves.  This
//! keeps contextual data (modulus, variable set, matrix size) in one place
//! and lets the same evaluation code run over scalars, generic-entry
//! polynomial matrices and concrete matrices.

use crate::arith::{FieldElement, FieldSpec};

/// An associative unital ring with a scalar action by a coefficient field.
///
/// Implementations must make `add`/`mul` total on elements produced by the
/// same descriptor; mixing elements from different descriptors is a caller
/// bug and may panic.
pub trait Ring {
    type Elem: Clone + PartialEq + std::fmt::Debug;

    /// The coefficient field acting on this ring.
    fn field(&self) -> &FieldSpec;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn is_zero(&self, a: &Self::Elem) -> bool;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;

    /// Action of a coefficient on a ring element.
    fn scalar_mul(&self, c: &FieldElement, a: &Self::Elem) -> Self::Elem;

    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        self.add(a, &self.neg(b))
    }
}
