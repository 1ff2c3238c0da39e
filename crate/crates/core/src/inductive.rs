//! Coefficient structure of `p(u1,..,un)` on generic upper triangular
//! matrices.
//!
//! Every monomial of an entry `(α,β)` of the generic evaluation contains,
//! among its off-diagonal variables, exactly one `a[η,η'](j)` per link of a
//! strictly increasing chain `α = η_0 < η_1 < ... < η_L = β`, each to the
//! first power; the rest of the monomial involves diagonal variables only.
//! Grouping by (chain, slot multi-index `J = (j_1..j_L)`) turns the entry
//! into
//!
//! ```text
//! [p(u)]_{αβ} = Σ_{chain, J}  coeff_{chain,J}(diagonals) · a[η_0,η_1](j_1) ··· a[η_{L-1},η_L](j_L)
//! ```
//!
//! and the `coeff_{chain,J}` — polynomials in the diagonal generic entries —
//! are what drives everything else: which strata the image can reach, which
//! slot patterns admit witnesses, and how Waring summands are assembled.
//! The coefficient for any chain is the canonical one (on `T_{L+1}`, full
//! chain `1 < 2 < ... < L+1`) with its diagonal rows renamed, so the family
//! is really indexed by `J` alone; both forms are exposed here.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::arith::{CPolynomial, FieldElement, Monomial, PolyRing, Var};
use crate::classify::generic_evaluation;
use crate::ncpoly::NcPolynomial;
use crate::ring::Ring;
use crate::FieldSpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InductiveError {
    #[error("support index is undefined for a polynomial of order 0")]
    OrderZero,
    #[error("polynomial #{0} in the list is identically zero; no nonzero point exists")]
    ZeroPolynomialInList(usize),
    #[error("search budget exhausted without a simultaneous nonzero point; last failing polynomial: {failing}")]
    BudgetExhausted { failing: String },
}

/// Address of one coefficient polynomial: the chain of matrix positions the
/// off-diagonal variables traverse, and which matrix argument owns each link.
///
/// `chain` is strictly increasing with `slots.len() == chain.len() - 1`; a
/// single-node chain with no slots addresses a diagonal entry.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct FamilyKey {
    pub chain: Vec<usize>,
    pub slots: Vec<usize>,
}

impl FamilyKey {
    pub fn row(&self) -> usize {
        self.chain[0]
    }

    pub fn col(&self) -> usize {
        *self.chain.last().unwrap()
    }

    pub fn links(&self) -> usize {
        self.slots.len()
    }
}

/// All coefficient polynomials of `p` on `T_m`, keyed by (chain, slots).
///
/// Only keys with nonzero coefficient are stored, so key presence is
/// mathematically meaningful.
#[derive(Debug, Clone)]
pub struct InductiveFamily {
    m: usize,
    nvars: usize,
    ring: PolyRing,
    coefficients: BTreeMap<FamilyKey, CPolynomial>,
}

impl InductiveFamily {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// The generic-entry ring the coefficients live in.
    pub fn ring(&self) -> &PolyRing {
        &self.ring
    }

    pub fn coefficient(&self, key: &FamilyKey) -> Option<&CPolynomial> {
        self.coefficients.get(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FamilyKey, &CPolynomial)> {
        self.coefficients.iter()
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Rebuilds entry `(row, col)` of the generic evaluation from the family:
    /// `Σ coeff · (product of link variables)`.  Inverts the extraction; the
    /// round trip is asserted in tests.
    pub fn reconstruct_entry(&self, row: usize, col: usize) -> CPolynomial {
        let mut acc = self.ring.zero();
        for (key, coeff) in &self.coefficients {
            if key.row() != row || key.col() != col {
                continue;
            }
            let mut term = coeff.clone();
            for (l, &slot) in key.slots.iter().enumerate() {
                let link = self.ring.var(Var::new(key.chain[l], key.chain[l + 1], slot));
                term = self.ring.mul(&term, &link);
            }
            acc = self.ring.add(&acc, &term);
        }
        acc
    }
}

/// Extracts the full coefficient family of `p` on `T_m` by partitioning the
/// monomials of the generic evaluation by their off-diagonal content.
pub fn extract_family(p: &NcPolynomial, m: usize) -> InductiveFamily {
    assert!(m >= 1);
    let (ring, value) = generic_evaluation(p, m);
    let vars = ring.var_set().vars().to_vec();
    let width = vars.len();
    let mut grouped: BTreeMap<FamilyKey, BTreeMap<Monomial, FieldElement>> = BTreeMap::new();
    for (&(row, col), entry) in value.iter() {
        for (mono, coeff) in entry.terms() {
            let mut residual = mono.0.clone();
            debug_assert_eq!(residual.len(), width);
            let mut links: Vec<Var> = Vec::new();
            for (pos, &e) in mono.0.iter().enumerate() {
                if e > 0 && !vars[pos].is_diagonal() {
                    assert_eq!(
                        e, 1,
                        "off-diagonal variable {} appears with exponent {} — \
                         impossible for upper triangular products",
                        vars[pos], e,
                    );
                    links.push(vars[pos]);
                    residual[pos] = 0;
                }
            }
            // Variable order is (row, col, index)-sorted, so the links come
            // out in chain order; verify they form one chain row -> col.
            let mut chain = Vec::with_capacity(links.len() + 1);
            chain.push(row);
            for link in &links {
                assert_eq!(
                    link.row as usize,
                    *chain.last().unwrap(),
                    "off-diagonal variables of a monomial do not chain up"
                );
                chain.push(link.col as usize);
            }
            assert_eq!(*chain.last().unwrap(), col);
            let key = FamilyKey {
                chain,
                slots: links.iter().map(|v| v.index as usize).collect(),
            };
            let previous = grouped
                .entry(key)
                .or_default()
                .insert(Monomial(residual), coeff.clone());
            assert!(
                previous.is_none(),
                "two monomials share off-diagonal content and residual"
            );
        }
    }
    let coefficients: BTreeMap<FamilyKey, CPolynomial> = grouped
        .into_iter()
        .map(|(key, terms)| (key, ring.poly_from_terms(terms)))
        .collect();
    for poly in coefficients.values() {
        assert!(poly.uses_only_diagonal_vars());
    }
    InductiveFamily {
        m,
        nvars: p.nvars(),
        ring,
        coefficients,
    }
}

/// The canonical coefficient polynomials with `links` links: extracted on
/// `T_{links+1}` along its unique full chain, keyed by the slot multi-index.
/// Coefficients for any other chain (on any `T_m`) are these with the
/// diagonal rows renamed to the chain nodes.
pub fn coefficient_table(
    p: &NcPolynomial,
    links: usize,
) -> (PolyRing, BTreeMap<Vec<usize>, CPolynomial>) {
    assert!(links >= 1);
    let family = extract_family(p, links + 1);
    let full_chain: Vec<usize> = (1..=links + 1).collect();
    let table = family
        .coefficients
        .iter()
        .filter(|(key, _)| key.chain == full_chain)
        .map(|(key, poly)| (key.slots.clone(), poly.clone()))
        .collect();
    (family.ring, table)
}

/// The slot-pattern support of a polynomial of order `t >= 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportIndex {
    /// The order of `p`.
    pub t: usize,
    /// Minimal number of distinct variable indices over the witnesses.
    pub i_p: usize,
    /// All length-`t` slot multi-indices with nonzero coefficient, in
    /// lexicographic order.
    pub witnesses: Vec<Vec<usize>>,
}

fn distinct_count(ix: &[usize]) -> usize {
    ix.iter().collect::<BTreeSet<_>>().len()
}

/// Scans the length-`order` coefficient table of `p` and summarizes which
/// slot patterns are usable; `order` must be the order of `p`.
pub fn support_index(
    p: &NcPolynomial,
    order: usize,
) -> Result<SupportIndex, InductiveError> {
    if order == 0 {
        return Err(InductiveError::OrderZero);
    }
    let (_, table) = coefficient_table(p, order);
    let witnesses: Vec<Vec<usize>> = table.into_keys().collect();
    let i_p = witnesses
        .iter()
        .map(|w| distinct_count(w))
        .min()
        .expect("a polynomial of order t has a nonzero length-t coefficient");
    Ok(SupportIndex {
        t: order,
        i_p,
        witnesses,
    })
}

/// Visits every way to fill `digits[pos..]` with values `0..=max` summing to
/// `remaining`, in lexicographic order; `visit` returns true to stop early.
fn each_bounded_composition(
    digits: &mut Vec<usize>,
    pos: usize,
    remaining: usize,
    max: usize,
    visit: &mut impl FnMut(&[usize]) -> bool,
) -> bool {
    if pos == digits.len() - 1 {
        if remaining <= max {
            digits[pos] = remaining;
            return visit(digits);
        }
        return false;
    }
    for d in 0..=remaining.min(max) {
        if remaining - d <= (digits.len() - pos - 1) * max {
            digits[pos] = d;
            if each_bounded_composition(digits, pos + 1, remaining - d, max, visit) {
                return true;
            }
        }
    }
    false
}

/// Collects the variable union for a simultaneous-nonzero search, rejecting
/// zero polynomials and non-rational rings up front.
fn nonzero_search_vars(qs: &[CPolynomial]) -> Result<Vec<Var>, InductiveError> {
    assert!(!qs.is_empty());
    let ring = qs[0].ring().clone();
    assert_eq!(
        ring.field_spec(),
        FieldSpec::Rational,
        "simultaneous nonzero points are searched over the rationals only"
    );
    for q in qs {
        assert!(ring.same_ring(q.ring()), "polynomials from different rings");
    }
    let mut union: BTreeSet<Var> = BTreeSet::new();
    for (i, q) in qs.iter().enumerate() {
        if q.is_zero() {
            return Err(InductiveError::ZeroPolynomialInList(i));
        }
        union.extend(q.vars_used());
    }
    Ok(union.into_iter().collect())
}

/// Finds one assignment of the union variable set making every polynomial in
/// `qs` evaluate to something nonzero.
///
/// The search walks the grid {0, 1, -1, 2, -2} per variable in order of
/// increasing total "spread" (points with mostly zeros first), then falls
/// back to seeded random large integers.  Over the rationals a simultaneous
/// nonzero point always exists, so exhaustion indicates a bug or an
/// adversarial input; it is reported rather than hidden.
pub fn find_nonzero_assignment(
    qs: &[CPolynomial],
    seed: u64,
) -> Result<BTreeMap<Var, FieldElement>, InductiveError> {
    const GRID: [i64; 5] = [0, 1, -1, 2, -2];
    const GRID_CAP: u64 = 1_000_000;
    const RANDOM_TRIES: u64 = 1000;

    let field = qs[0].ring().field_spec();
    let vars = nonzero_search_vars(qs)?;
    let evaluate = |point: &BTreeMap<Var, FieldElement>| -> Result<(), usize> {
        for (i, q) in qs.iter().enumerate() {
            let value = q.eval(point).expect("all used variables are assigned");
            if field.is_zero(&value) {
                return Err(i);
            }
        }
        Ok(())
    };
    if vars.is_empty() {
        // All polynomials are nonzero constants.
        return Ok(BTreeMap::new());
    }

    let budget = 5u64
        .checked_pow(vars.len() as u32)
        .unwrap_or(u64::MAX)
        .min(GRID_CAP);
    let mut spent = 0u64;
    let mut last_failing = 0usize;
    let mut found: Option<BTreeMap<Var, FieldElement>> = None;
    let max = GRID.len() - 1;
    // Digit vectors by ascending digit-sum: low-spread points come first and
    // almost always suffice for the low-degree coefficient polynomials.
    'outer: for total in 0..=max * vars.len() {
        let mut digits = vec![0usize; vars.len()];
        let stop = each_bounded_composition(&mut digits, 0, total, max, &mut |digits| {
            if spent >= budget {
                return true;
            }
            spent += 1;
            let point: BTreeMap<Var, FieldElement> = vars
                .iter()
                .zip(digits)
                .map(|(v, &d)| (*v, field.from_i64(GRID[d])))
                .collect();
            match evaluate(&point) {
                Ok(()) => {
                    found = Some(point);
                    true
                }
                Err(i) => {
                    last_failing = i;
                    false
                }
            }
        });
        if let Some(point) = found {
            return Ok(point);
        }
        if stop {
            break 'outer; // budget exhausted
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..RANDOM_TRIES {
        let point: BTreeMap<Var, FieldElement> = vars
            .iter()
            .map(|v| (*v, field.from_i64(rng.gen_range(-1_000_000..=1_000_000))))
            .collect();
        match evaluate(&point) {
            Ok(()) => return Ok(point),
            Err(i) => last_failing = i,
        }
    }
    Err(InductiveError::BudgetExhausted {
        failing: qs[last_failing].to_string(),
    })
}

/// Seeded-random variant of [`find_nonzero_assignment`] that skips the grid
/// phase entirely, for callers retrying after a grid point satisfied the
/// nonzero constraints but still led to a degenerate value downstream.
pub(crate) fn random_nonzero_assignment(
    qs: &[CPolynomial],
    seed: u64,
) -> Result<BTreeMap<Var, FieldElement>, InductiveError> {
    const RANDOM_TRIES: u64 = 1000;

    let field = qs[0].ring().field_spec();
    let vars = nonzero_search_vars(qs)?;
    if vars.is_empty() {
        return Ok(BTreeMap::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last_failing = 0usize;
    'tries: for _ in 0..RANDOM_TRIES {
        let point: BTreeMap<Var, FieldElement> = vars
            .iter()
            .map(|v| (*v, field.from_i64(rng.gen_range(-1_000_000..=1_000_000))))
            .collect();
        for (i, q) in qs.iter().enumerate() {
            let value = q.eval(&point).expect("all used variables are assigned");
            if field.is_zero(&value) {
                last_failing = i;
                continue 'tries;
            }
        }
        return Ok(point);
    }
    Err(InductiveError::BudgetExhausted {
        failing: qs[last_failing].to_string(),
    })
}
