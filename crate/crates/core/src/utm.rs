//! Sparse upper triangular matrices over an arbitrary ring.
//!
//! Matrices are `m x m`, 1-based, with only the entries on or above the
//! diagonal admissible and only nonzero entries stored, so structural
//! equality is mathematical equality.  `MatrixRing` wraps a base ring and a
//! size into a ring descriptor, which is how noncommutative polynomial
//! evaluation runs over matrices of scalars and matrices of generic-entry
//! polynomials alike.
//!
//! `product_entry` computes a single entry of a product `u_1 ... u_k`
//! directly, as a sum over strictly increasing index chains from the row to
//! the column with one off-diagonal factor per chain link and diagonal
//! factors in between.  The schoolbook fold is kept as the independent
//! reference; the two are checked against each other in the tests and in the
//! acceptance suite.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::arith::{CPolynomial, FieldElement, FieldSpec, PolyRing, Var};
use crate::ring::Ring;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatrixError {
    #[error("matrix sizes differ: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("entry ({0},{1}) is outside the upper triangle of an {2} x {2} matrix")]
    IndexOutOfRange(usize, usize, usize),
    #[error("matrix is not invertible: zero entry on the diagonal at ({0},{0})")]
    NonInvertible(usize),
    #[error("stratum parameter {t} out of range for size {m} (expected -1 <= t <= m)")]
    BadStratum { m: usize, t: i64 },
    #[error("malformed matrix JSON: {0}")]
    BadJson(String),
    #[error(transparent)]
    Arith(#[from] crate::arith::ArithError),
}

/// Upper triangular matrix with entries in some ring.
///
/// The invariant that zero entries are never stored is maintained by every
/// constructor and operation that takes the ring descriptor.
#[derive(Debug, Clone, PartialEq)]
pub struct UTMatrix<T> {
    m: usize,
    entries: BTreeMap<(usize, usize), T>,
}

impl<T: Clone + PartialEq + fmt::Debug> UTMatrix<T> {
    pub fn zero(m: usize) -> Self {
        UTMatrix {
            m,
            entries: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn entry(&self, row: usize, col: usize) -> Option<&T> {
        self.entries.get(&(row, col))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(usize, usize), &T)> {
        self.entries.iter()
    }

    pub fn is_zero_matrix(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sets one entry, dropping it when the value is zero in `ring`.
    pub fn set<R: Ring<Elem = T>>(
        &mut self,
        ring: &R,
        row: usize,
        col: usize,
        value: T,
    ) -> Result<(), MatrixError> {
        if row < 1 || col < row || col > self.m {
            return Err(MatrixError::IndexOutOfRange(row, col, self.m));
        }
        if ring.is_zero(&value) {
            self.entries.remove(&(row, col));
        } else {
            self.entries.insert((row, col), value);
        }
        Ok(())
    }

    pub fn get_or_zero<R: Ring<Elem = T>>(&self, ring: &R, row: usize, col: usize) -> T {
        self.entries
            .get(&(row, col))
            .cloned()
            .unwrap_or_else(|| ring.zero())
    }

    pub fn transform_entries<U: Clone + PartialEq + fmt::Debug>(
        &self,
        mut f: impl FnMut(&T) -> U,
    ) -> UTMatrix<U> {
        UTMatrix {
            m: self.m,
            entries: self.entries.iter().map(|(k, v)| (*k, f(v))).collect(),
        }
    }
}

/// `m x m` upper triangular matrices over a base ring.
#[derive(Debug, Clone, Copy)]
pub struct MatrixRing<'a, R: Ring> {
    pub m: usize,
    pub base: &'a R,
}

impl<'a, R: Ring> MatrixRing<'a, R> {
    pub fn new(m: usize, base: &'a R) -> Self {
        MatrixRing { m, base }
    }
}

impl<R: Ring> Ring for MatrixRing<'_, R> {
    type Elem = UTMatrix<R::Elem>;

    fn field(&self) -> &FieldSpec {
        self.base.field()
    }

    fn zero(&self) -> UTMatrix<R::Elem> {
        UTMatrix::zero(self.m)
    }

    fn one(&self) -> UTMatrix<R::Elem> {
        let mut id = UTMatrix::zero(self.m);
        for i in 1..=self.m {
            id.entries.insert((i, i), self.base.one());
        }
        id
    }

    fn is_zero(&self, a: &UTMatrix<R::Elem>) -> bool {
        a.entries.is_empty()
    }

    fn add(&self, a: &UTMatrix<R::Elem>, b: &UTMatrix<R::Elem>) -> UTMatrix<R::Elem> {
        assert_eq!(a.m, b.m, "matrix sizes differ in add");
        let mut out = a.clone();
        for (&pos, v) in &b.entries {
            match out.entries.entry(pos) {
                std::collections::btree_map::Entry::Vacant(e) => {
                    e.insert(v.clone());
                }
                std::collections::btree_map::Entry::Occupied(mut e) => {
                    let sum = self.base.add(e.get(), v);
                    if self.base.is_zero(&sum) {
                        e.remove();
                    } else {
                        e.insert(sum);
                    }
                }
            }
        }
        out
    }

    fn neg(&self, a: &UTMatrix<R::Elem>) -> UTMatrix<R::Elem> {
        UTMatrix {
            m: a.m,
            entries: a
                .entries
                .iter()
                .map(|(k, v)| (*k, self.base.neg(v)))
                .collect(),
        }
    }

    fn mul(&self, a: &UTMatrix<R::Elem>, b: &UTMatrix<R::Elem>) -> UTMatrix<R::Elem> {
        assert_eq!(a.m, b.m, "matrix sizes differ in mul");
        let mut out = UTMatrix::zero(a.m);
        for (&(i, k), av) in &a.entries {
            for (&(_, j), bv) in b.entries.range((k, k)..=(k, a.m)) {
                let prod = self.base.mul(av, bv);
                match out.entries.entry((i, j)) {
                    std::collections::btree_map::Entry::Vacant(e) => {
                        if !self.base.is_zero(&prod) {
                            e.insert(prod);
                        }
                    }
                    std::collections::btree_map::Entry::Occupied(mut e) => {
                        let sum = self.base.add(e.get(), &prod);
                        if self.base.is_zero(&sum) {
                            e.remove();
                        } else {
                            e.insert(sum);
                        }
                    }
                }
            }
        }
        out
    }

    fn scalar_mul(&self, c: &FieldElement, a: &UTMatrix<R::Elem>) -> UTMatrix<R::Elem> {
        let mut out = UTMatrix::zero(a.m);
        for (&pos, v) in &a.entries {
            let scaled = self.base.scalar_mul(c, v);
            if !self.base.is_zero(&scaled) {
                out.entries.insert(pos, scaled);
            }
        }
        out
    }
}

/// One entry of the product `mats[0] * ... * mats[k-1]`, computed by the
/// chain-sum formula rather than by folding whole products.
///
/// For `row == col` this is the product of the diagonal entries.  For
/// `row < col` it sums, over every strictly increasing chain
/// `row = e_0 < e_1 < ... < e_r = col` and every choice of positions
/// `s_1 < ... < s_r` among the `k` factors, the word that takes its
/// off-diagonal factor `(e_{l-1}, e_l)` from factor `s_l` and diagonal
/// factors from everything in between.  The recursion is memoized on
/// (current chain node, next factor position).
pub fn product_entry<R: Ring>(
    ring: &MatrixRing<'_, R>,
    mats: &[UTMatrix<R::Elem>],
    row: usize,
    col: usize,
) -> Result<R::Elem, MatrixError> {
    let m = ring.m;
    if row < 1 || col < row || col > m {
        return Err(MatrixError::IndexOutOfRange(row, col, m));
    }
    for mat in mats {
        if mat.m != m {
            return Err(MatrixError::SizeMismatch(mat.m, m));
        }
    }
    let k = mats.len();
    let base = ring.base;
    if row == col {
        let mut acc = base.one();
        for mat in mats {
            acc = base.mul(&acc, &mat.get_or_zero(base, row, row));
        }
        return Ok(acc);
    }
    // memo[(node, next_pos)] = sum over completions that start at `node`
    // with factor `next_pos` and finish at `col` after factor `k`.
    fn go<R: Ring>(
        base: &R,
        mats: &[UTMatrix<R::Elem>],
        col: usize,
        node: usize,
        pos: usize,
        memo: &mut HashMap<(usize, usize), R::Elem>,
    ) -> R::Elem {
        if let Some(hit) = memo.get(&(node, pos)) {
            return hit.clone();
        }
        let k = mats.len();
        let value = if node == col {
            let mut acc = base.one();
            for mat in &mats[pos - 1..] {
                acc = base.mul(&acc, &mat.get_or_zero(base, node, node));
            }
            acc
        } else {
            let mut acc = base.zero();
            let mut diag_prefix = base.one();
            for s in pos..=k {
                for next in node + 1..=col {
                    if let Some(link) = mats[s - 1].entry(node, next) {
                        let tail = go(base, mats, col, next, s + 1, memo);
                        let word = base.mul(&base.mul(&diag_prefix, link), &tail);
                        acc = base.add(&acc, &word);
                    }
                }
                diag_prefix =
                    base.mul(&diag_prefix, &mats[s - 1].get_or_zero(base, node, node));
            }
            acc
        };
        memo.insert((node, pos), value.clone());
        value
    }
    if k == 0 {
        // Empty product is the identity; off-diagonal entries vanish.
        return Ok(base.zero());
    }
    let mut memo = HashMap::new();
    Ok(go(base, mats, col, row, 1, &mut memo))
}

/// Reference product by folding `multiply` left to right.
pub fn multiply_fold<R: Ring>(
    ring: &MatrixRing<'_, R>,
    mats: &[UTMatrix<R::Elem>],
) -> UTMatrix<R::Elem> {
    let mut acc = ring.one();
    for mat in mats {
        acc = ring.mul(&acc, mat);
    }
    acc
}

/// The stratum of `m x m` upper triangular matrices whose entries vanish
/// whenever `col - row <= t`.  `t = -1` is the whole algebra, `t = 0` the
/// strictly upper triangular matrices, `t >= m` only the zero matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stratum {
    pub m: usize,
    pub t: i64,
}

impl Stratum {
    pub fn new(m: usize, t: i64) -> Result<Self, MatrixError> {
        if t < -1 || t > m as i64 {
            return Err(MatrixError::BadStratum { m, t });
        }
        Ok(Stratum { m, t })
    }

    /// Membership test; relies on the no-stored-zeros invariant.
    pub fn contains<T: Clone + PartialEq + fmt::Debug>(&self, x: &UTMatrix<T>) -> bool {
        x.m == self.m
            && x.entries
                .keys()
                .all(|&(r, c)| (c as i64 - r as i64) > self.t)
    }

    /// Number of entry slots a member may use.
    pub fn free_positions(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for r in 1..=self.m {
            for c in r..=self.m {
                if (c as i64 - r as i64) > self.t {
                    out.push((r, c));
                }
            }
        }
        out
    }
}

/// Inverse of an upper triangular matrix over a field, by back substitution.
pub fn invert(
    field: &FieldSpec,
    a: &UTMatrix<FieldElement>,
) -> Result<UTMatrix<FieldElement>, MatrixError> {
    let m = a.m;
    let mut diag_inv = Vec::with_capacity(m + 1);
    diag_inv.push(field.zero()); // 1-based padding
    for i in 1..=m {
        let d = a.get_or_zero(field, i, i);
        if field.is_zero(&d) {
            return Err(MatrixError::NonInvertible(i));
        }
        diag_inv.push(field.inv(&d)?);
    }
    let mut b = UTMatrix::zero(m);
    for i in 1..=m {
        b.entries.insert((i, i), diag_inv[i].clone());
    }
    // Solve A B = I column by column, increasing col - row.
    for span in 1..=m - 1 {
        for i in 1..=m - span {
            let j = i + span;
            // sum_{i < k <= j} A[i][k] B[k][j]
            let mut s = field.zero();
            for k in i + 1..=j {
                if let (Some(aik), Some(bkj)) = (a.entry(i, k), b.entries.get(&(k, j))) {
                    s = field.add(&s, &field.mul(aik, bkj));
                }
            }
            let val = field.neg(&field.mul(&diag_inv[i], &s));
            if !field.is_zero(&val) {
                b.entries.insert((i, j), val);
            }
        }
    }
    Ok(b)
}

/// Conjugation `v a v^{-1}`; `v` must be invertible.
pub fn conjugate(
    field: &FieldSpec,
    v: &UTMatrix<FieldElement>,
    a: &UTMatrix<FieldElement>,
) -> Result<UTMatrix<FieldElement>, MatrixError> {
    if v.m != a.m {
        return Err(MatrixError::SizeMismatch(v.m, a.m));
    }
    let ring = MatrixRing::new(a.m, field);
    let vinv = invert(field, v)?;
    Ok(ring.mul(&ring.mul(v, a), &vinv))
}

/// The generic matrix whose `(r, c)` entry is the variable `a[r,c](index)`.
pub fn generic_matrix(ring: &PolyRing, m: usize, index: usize) -> UTMatrix<CPolynomial> {
    let mut out = UTMatrix::zero(m);
    for r in 1..=m {
        for c in r..=m {
            out.entries.insert((r, c), ring.var(Var::new(r, c, index)));
        }
    }
    out
}

impl UTMatrix<FieldElement> {
    /// Serializes as `{"m": .., "field": .., "entries": {"r,c": "value"}}`,
    /// omitting zero entries.
    pub fn to_json(&self, field: &FieldSpec) -> Value {
        let mut entries = Map::new();
        for (&(r, c), v) in &self.entries {
            entries.insert(format!("{},{}", r, c), json!(field.format_element(v)));
        }
        json!({
            "m": self.m,
            "field": field.name(),
            "entries": entries,
        })
    }

    /// Parses the JSON form produced by `to_json`.  Keys below the diagonal
    /// or outside the matrix are rejected; explicit zeros are dropped.
    pub fn from_json(value: &Value) -> Result<(Self, FieldSpec), MatrixError> {
        let obj = value
            .as_object()
            .ok_or_else(|| MatrixError::BadJson("expected an object".into()))?;
        let m = obj
            .get("m")
            .and_then(Value::as_u64)
            .ok_or_else(|| MatrixError::BadJson("missing integer field \"m\"".into()))?
            as usize;
        if m == 0 || m > 64 {
            return Err(MatrixError::BadJson(format!("unreasonable size m={}", m)));
        }
        let field = FieldSpec::parse(
            obj.get("field")
                .and_then(Value::as_str)
                .ok_or_else(|| MatrixError::BadJson("missing string field \"field\"".into()))?,
        )?;
        let mut out = UTMatrix::zero(m);
        if let Some(entries) = obj.get("entries") {
            let entries = entries
                .as_object()
                .ok_or_else(|| MatrixError::BadJson("\"entries\" must be an object".into()))?;
            for (key, val) in entries {
                let (r, c) = key
                    .split_once(',')
                    .and_then(|(a, b)| {
                        Some((a.trim().parse::<usize>().ok()?, b.trim().parse::<usize>().ok()?))
                    })
                    .ok_or_else(|| {
                        MatrixError::BadJson(format!("bad entry key {:?} (expected \"r,c\")", key))
                    })?;
                if r < 1 || c < r || c > m {
                    return Err(MatrixError::IndexOutOfRange(r, c, m));
                }
                let text = val.as_str().ok_or_else(|| {
                    MatrixError::BadJson(format!("entry {:?} must be a string", key))
                })?;
                let elem = field.parse_element(text)?;
                out.set(&field, r, c, elem)?;
            }
        }
        Ok((out, field))
    }
}

impl<T: Clone + PartialEq + fmt::Debug + fmt::Display> fmt::Display for UTMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 1..=self.m {
            write!(f, "[")?;
            for c in 1..=self.m {
                if c > 1 {
                    write!(f, ", ")?;
                }
                match self.entries.get(&(r, c)) {
                    Some(v) => write!(f, "{}", v)?,
                    None => write!(f, "0")?,
                }
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fq(q: u64) -> FieldSpec {
        FieldSpec::Prime(q)
    }

    fn random_matrix(field: &FieldSpec, m: usize, state: &mut u64) -> UTMatrix<FieldElement> {
        let mut next = || {
            *state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (*state >> 33) as i64
        };
        let mut out = UTMatrix::zero(m);
        for r in 1..=m {
            for c in r..=m {
                out.set(field, r, c, field.from_i64(next() % 97)).unwrap();
            }
        }
        out
    }

    /// Dense triple-loop product, written independently of `MatrixRing::mul`.
    fn naive_product(
        field: &FieldSpec,
        a: &UTMatrix<FieldElement>,
        b: &UTMatrix<FieldElement>,
    ) -> UTMatrix<FieldElement> {
        let m = a.dim();
        let mut out = UTMatrix::zero(m);
        for i in 1..=m {
            for j in i..=m {
                let mut s = field.zero();
                for k in i..=j {
                    s = field.add(
                        &s,
                        &field.mul(
                            &a.get_or_zero(field, i, k),
                            &b.get_or_zero(field, k, j),
                        ),
                    );
                }
                out.set(field, i, j, s).unwrap();
            }
        }
        out
    }

    #[test]
    fn multiply_matches_naive_triple_loop() {
        let field = fq(5);
        let ring = MatrixRing::new(3, &field);
        let mut state = 12345u64;
        for _ in 0..50 {
            let a = random_matrix(&field, 3, &mut state);
            let b = random_matrix(&field, 3, &mut state);
            assert_eq!(ring.mul(&a, &b), naive_product(&field, &a, &b));
        }
    }

    #[test]
    fn product_entry_matches_fold_on_random_inputs() {
        let field = fq(7);
        let mut state = 999u64;
        for m in 2..=5 {
            let ring = MatrixRing::new(m, &field);
            for k in 0..=4 {
                let mats: Vec<_> =
                    (0..k).map(|_| random_matrix(&field, m, &mut state)).collect();
                let folded = multiply_fold(&ring, &mats);
                for r in 1..=m {
                    for c in r..=m {
                        assert_eq!(
                            product_entry(&ring, &mats, r, c).unwrap(),
                            folded.get_or_zero(&field, r, c),
                            "m={} k={} entry ({},{})",
                            m,
                            k,
                            r,
                            c
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn product_entry_two_factor_generic_formula() {
        // Entry (1,3) of u1*u2 on 4x4 generic matrices:
        // a[1,1](1)a[1,3](2) + a[1,2](1)a[2,3](2) + a[1,3](1)a[3,3](2).
        let poly_ring = PolyRing::generic(FieldSpec::Rational, 4, 2);
        let ring = MatrixRing::new(4, &poly_ring);
        let u1 = generic_matrix(&poly_ring, 4, 1);
        let u2 = generic_matrix(&poly_ring, 4, 2);
        let got = product_entry(&ring, &[u1, u2], 1, 3).unwrap();
        let v = |r, c, i| poly_ring.var(Var::new(r, c, i));
        let expected = poly_ring.add(
            &poly_ring.add(
                &poly_ring.mul(&v(1, 1, 1), &v(1, 3, 2)),
                &poly_ring.mul(&v(1, 2, 1), &v(2, 3, 2)),
            ),
            &poly_ring.mul(&v(1, 3, 1), &v(3, 3, 2)),
        );
        assert_eq!(got, expected);
    }

    #[test]
    fn strata_are_graded() {
        let field = fq(3);
        let mut x = UTMatrix::zero(4);
        x.set(&field, 1, 3, field.from_i64(1)).unwrap();
        x.set(&field, 2, 4, field.from_i64(2)).unwrap();
        assert!(Stratum::new(4, -1).unwrap().contains(&x));
        assert!(Stratum::new(4, 0).unwrap().contains(&x));
        assert!(Stratum::new(4, 1).unwrap().contains(&x));
        assert!(!Stratum::new(4, 2).unwrap().contains(&x));
        assert!(Stratum::new(4, 4)
            .unwrap()
            .contains(&UTMatrix::<FieldElement>::zero(4)));
        assert!(Stratum::new(4, 5).is_err());
    }

    #[test]
    fn inverse_round_trips() {
        let field = FieldSpec::Rational;
        let ring = MatrixRing::new(4, &field);
        let mut state = 4242u64;
        for _ in 0..20 {
            let mut a = random_matrix(&field, 4, &mut state);
            for i in 1..=4 {
                // Force a nonzero diagonal.
                a.set(&field, i, i, field.from_i64(i as i64 + 1)).unwrap();
            }
            let ainv = invert(&field, &a).unwrap();
            assert_eq!(ring.mul(&a, &ainv), ring.one());
            assert_eq!(ring.mul(&ainv, &a), ring.one());
        }
        let singular = UTMatrix::<FieldElement>::zero(2);
        assert!(matches!(
            invert(&field, &singular),
            Err(MatrixError::NonInvertible(1))
        ));
    }

    #[test]
    fn conjugation_clears_an_entry() {
        // v = I + t E12 with t = -x12/(x22 - x11) sends [[1,5],[0,2]] to diag(1,2).
        let field = FieldSpec::Rational;
        let mut x = UTMatrix::zero(2);
        x.set(&field, 1, 1, field.from_i64(1)).unwrap();
        x.set(&field, 1, 2, field.from_i64(5)).unwrap();
        x.set(&field, 2, 2, field.from_i64(2)).unwrap();
        let mut v = UTMatrix::zero(2);
        v.set(&field, 1, 1, field.from_i64(1)).unwrap();
        v.set(&field, 2, 2, field.from_i64(1)).unwrap();
        v.set(&field, 1, 2, field.from_i64(-5)).unwrap();
        let d = conjugate(&field, &v, &x).unwrap();
        let mut expected = UTMatrix::zero(2);
        expected.set(&field, 1, 1, field.from_i64(1)).unwrap();
        expected.set(&field, 2, 2, field.from_i64(2)).unwrap();
        assert_eq!(d, expected);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let field = FieldSpec::Rational;
        let mut x = UTMatrix::zero(4);
        x.set(&field, 1, 2, field.parse_element("5/3").unwrap()).unwrap();
        x.set(&field, 1, 4, field.from_i64(1)).unwrap();
        let v = x.to_json(&field);
        let (back, f) = UTMatrix::from_json(&v).unwrap();
        assert_eq!(f, field);
        assert_eq!(back, x);

        let bad = json!({"m": 3, "field": "Q", "entries": {"2,1": "1"}});
        assert!(matches!(
            UTMatrix::from_json(&bad),
            Err(MatrixError::IndexOutOfRange(2, 1, 3))
        ));
    }
}
