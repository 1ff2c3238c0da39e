//! Exact computation with polynomial maps on upper triangular matrix algebras.
//!
//! The crate revolves around a noncommutative polynomial `p` in variables
//! `x1..xn` and the map it induces on the algebra `T_m(K)` of `m x m` upper
//! triangular matrices over a field `K`:
//!
//! - [`classify`] determines the *order* of `p`: the largest `t` such that
//!   `p` vanishes identically on `T_t(K)`.
//! - [`inductive`] extracts the coefficient polynomials that control which
//!   product entries of `p(u1, .., un)` can be nonzero, and the index
//!   structure of those that survive.
//! - [`witness`] constructs explicit preimages `p(u) = X` for targets `X` in
//!   the stratum predicted by the order, and short sums of image values
//!   where a single preimage is not available.
//! - [`oracle`] brute-forces images over small finite fields as an
//!   independent check on all of the above.
//!
//! Everything is exact: coefficients live in `Q`, a prime field `F_q`, or
//! (for root extraction only) hardware complex numbers with explicit
//! residual reporting.

pub mod arith;
pub mod classify;
pub mod inductive;
pub mod ncpoly;
pub mod oracle;
pub mod ring;
pub mod utm;
pub mod witness;

pub use arith::{CPolynomial, FieldElement, FieldSpec, PolyRing, Var};
pub use classify::{is_identity_generic, order, OrderReport};
pub use inductive::{
    coefficient_table, extract_family, find_nonzero_assignment, support_index, FamilyKey,
    InductiveFamily, SupportIndex,
};
pub use ncpoly::{GroupWord, NcPolynomial};
pub use oracle::{enumerate_image, sample_image, waring_number, ImageSet, OracleError, SampleStats};
pub use ring::Ring;
pub use utm::{MatrixRing, Stratum, UTMatrix};
pub use witness::{
    conjugate_to_diagonal, waring_decompose, witness, witness_order0, word_witness, Branch,
    WaringDecomposition, WitnessError, WitnessResult,
};
