//! Explicit preimages for targets in the image strata.
//!
//! Given a polynomial of order `t` on `T_m` and a target matrix `x` whose
//! support lies in the stratum that the order predicts, this module builds an
//! actual tuple `u` of upper triangular matrices with `p(u) = x`, or — when a
//! single tuple cannot be constructed — a short list of image values that sum
//! to `x`.
//!
//! All constructions follow the same scheme.  A *plan* fixes, for one slot
//! pattern `I` from the coefficient table, which entries of which matrices are
//! set to one (*units*) and which entries are solved for, one target entry
//! each (*solves*).  The diagonals are chosen so that every solve coefficient
//! polynomial is nonzero, and the solves are then processed in an order in
//! which each target entry is an affine function of the one entry being
//! solved.  The slope of that affine function is measured exactly by probing
//! the entry at two values, so the engine never needs a symbolic expansion of
//! `p` on `T_m`.  A final re-evaluation checks `p(u) = x` entry for entry.
//!
//! Diagonal targets (order zero) and invertible targets of group words are
//! handled separately: both reduce, after conjugating the target into
//! diagonal form, to scalar equations solved slot by slot.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::arith::{
    kth_roots_complex, rational_kth_root, univariate_roots, ArithError, CPolynomial,
    FieldElement, FieldSpec, PolyRing, Var,
};
use crate::classify::OrderReport;
use crate::inductive::{
    coefficient_table, find_nonzero_assignment, random_nonzero_assignment, SupportIndex,
};
use crate::ncpoly::{EvalError, GroupWord, NcPolynomial, WordError};
use crate::ring::Ring;
use crate::utm::{conjugate, invert, MatrixError, MatrixRing, Stratum, UTMatrix};

use num_traits::Signed;

/// Residual bound below which a floating-point witness counts as verified.
pub const RESIDUAL_TOL: f64 = 1e-9;

/// How many diagonal assignments the solve engine tries before giving up.
const ASSIGNMENT_ATTEMPTS: u64 = 3;

/// How many variable/value combinations the scalar solvers try per slot.
const SCALAR_ATTEMPTS: usize = 24;

/// Nonzero values used when fixing all but one variable of a scalar equation.
const POOL: [i64; 12] = [1, 2, 3, 5, 7, -1, 4, -2, 11, 13, 6, -3];

/// Ways a witness construction can fail.
#[derive(Debug, Error)]
pub enum WitnessError {
    #[error("target entry ({row}, {col}) lies outside the stratum predicted by the order")]
    NotInStratum { row: usize, col: usize },
    #[error("no single witness tuple: {0}")]
    NotConstructible(String),
    #[error("order {order} admits no witness construction of this kind on dimension {dim}")]
    OrderOutOfRange { order: usize, dim: usize },
    #[error("summand for row residue {residue} could not be built: {detail}")]
    SummandConstructionFailed { residue: usize, detail: String },
    #[error("diagonal entries {0} and {1} coincide; pairwise distinct eigenvalues are required")]
    RepeatedDiagonal(usize, usize),
    #[error("no scalar solution at diagonal slot {slot} for value {value}")]
    ScalarEquationUnsolvable { slot: usize, value: String },
    #[error("target has a zero diagonal entry at slot {0}, so it is not invertible")]
    NonInvertibleTarget(usize),
    #[error("witness construction over {0} is not supported; use the rationals")]
    UnsupportedField(String),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Word(#[from] WordError),
}

/// Which construction produced a witness tuple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Diagonal target of an order-zero polynomial, solved slot by slot.
    Order0Diag,
    /// Order one: every strictly upper triangular target.
    Order1,
    /// Intermediate order with a single slot pattern carrying all targets.
    OrderTPattern,
    /// Top order `m - 1`: a single entry is matched by one solve.
    Top,
    /// One part of a decomposition of the target into several image values.
    WaringSummand,
}

impl Branch {
    pub fn name(&self) -> &'static str {
        match self {
            Branch::Order0Diag => "order0-diag",
            Branch::Order1 => "order1",
            Branch::OrderTPattern => "order-t-pattern",
            Branch::Top => "top",
            Branch::WaringSummand => "waring-summand",
        }
    }
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A verified preimage: matrices `u` with `p(u)` equal to the target.
///
/// Over exact fields `verified` is always true (the equality is asserted
/// during construction); over the complex numbers the maximal entry residual
/// is reported and compared against [`RESIDUAL_TOL`].
#[derive(Debug, Clone)]
pub struct WitnessResult {
    pub u: Vec<UTMatrix<FieldElement>>,
    pub branch: Branch,
    pub verified: bool,
    pub residual: Option<f64>,
}

/// A target written as a sum of image values, each with its own witness.
#[derive(Debug, Clone)]
pub struct WaringDecomposition {
    pub summands: Vec<(UTMatrix<FieldElement>, WitnessResult)>,
}

impl WaringDecomposition {
    /// Number of image values used.
    pub fn d(&self) -> usize {
        self.summands.len()
    }
}

// ---------------------------------------------------------------------------
// Plans: which entries are units, which entries solve which targets.
// ---------------------------------------------------------------------------

/// One solve: entry `pos` of matrix `owner` is adjusted until the evaluation
/// matches the target entry.  `window` lists the rows of the chain the solve
/// coefficient lives on, and `slots` the matrix indices of its links.
#[derive(Debug, Clone)]
struct SolveStep {
    owner: usize,
    pos: (usize, usize),
    target: (usize, usize),
    window: Vec<usize>,
    slots: Vec<usize>,
}

#[derive(Debug, Clone)]
struct Plan {
    units: Vec<(usize, (usize, usize))>,
    solves: Vec<SolveStep>,
}

/// Position `c` on the superdiagonal is fed by the pattern slot `sigma(c)`,
/// cycling through the pattern with period `t`.
fn sigma(c: usize, t: usize) -> usize {
    (c - 1) % t + 1
}

/// The cyclic plan for a single slot pattern `i` of length `t` on `T_m`.
///
/// Units occupy the first `t - 1` superdiagonal positions; the solve at
/// `(c, c + shift)` matches the target entry `(c - t + 1, c + shift)`, so the
/// targets sweep exactly the offsets `>= t`.  Solves are ordered by offset,
/// then by row, which makes each target affine in its own solve entry.
fn sigma_plan(m: usize, t: usize, pattern: &[usize]) -> Plan {
    assert_eq!(pattern.len(), t);
    let mut units = Vec::new();
    for c in 1..t {
        units.push((pattern[sigma(c, t) - 1], (c, c + 1)));
    }
    let mut solves = Vec::new();
    for shift in 1..=(m - t) {
        for c in t..=(m - shift) {
            let alpha = c - t + 1;
            let mut window: Vec<usize> = (alpha..=c).collect();
            window.push(c + shift);
            let slots: Vec<usize> =
                (alpha..=c).map(|r| pattern[sigma(r, t) - 1]).collect();
            solves.push(SolveStep {
                owner: pattern[sigma(c, t) - 1],
                pos: (c, c + shift),
                target: (alpha, c + shift),
                window,
                slots,
            });
        }
    }
    Plan { units, solves }
}

/// The block plan for the rows congruent to `a` modulo `t`.
///
/// Each block `k` places `t - 1` units on consecutive superdiagonal
/// positions starting at row `(k - 1) t + a`; the block's solves all sit in
/// its last row and keep the pattern order, so every solve coefficient rides
/// only on unit entries and is independent of the target values.
fn residue_plan(m: usize, t: usize, pattern: &[usize], a: usize) -> Plan {
    assert_eq!(pattern.len(), t);
    assert!(a >= 1 && a <= t);
    let mut units = Vec::new();
    let mut solves = Vec::new();
    let mut k = 1usize;
    while k * t + a <= m {
        let alpha = (k - 1) * t + a;
        for s in 0..t.saturating_sub(1) {
            units.push((pattern[s], (alpha + s, alpha + s + 1)));
        }
        let c = alpha + t - 1;
        for j in (c + 1)..=m {
            let mut window: Vec<usize> = (alpha..=c).collect();
            window.push(j);
            solves.push(SolveStep {
                owner: pattern[t - 1],
                pos: (c, j),
                target: (alpha, j),
                window,
                slots: pattern.to_vec(),
            });
        }
        k += 1;
    }
    solves.sort_by_key(|s| (s.pos.1 - s.pos.0, s.pos.0));
    Plan { units, solves }
}

/// The one-sided plan for an order-two polynomial supported on the slot
/// pair `(i0, j0)` only (the reversed pair and both repeated pairs carry
/// identically zero coefficients).
///
/// The matrix for `j0` is filled with ones everywhere above the diagonal;
/// every target `(i, k + 1)` is then matched by the entry `(i, k)` of the
/// matrix for `i0`.  The solve coefficient is again independent of the
/// target values, so zero entries inside the stratum are harmless.
fn onesided_plan(m: usize, i0: usize, j0: usize) -> Plan {
    assert_ne!(i0, j0);
    let mut units = Vec::new();
    for r in 1..m {
        for s in (r + 1)..=m {
            units.push((j0, (r, s)));
        }
    }
    let mut solves = Vec::new();
    for i in 1..=m.saturating_sub(2) {
        for k in (i + 1)..=(m - 1) {
            solves.push(SolveStep {
                owner: i0,
                pos: (i, k),
                target: (i, k + 1),
                window: vec![i, k, k + 1],
                slots: vec![i0, j0],
            });
        }
    }
    Plan { units, solves }
}

// ---------------------------------------------------------------------------
// The solve engine.
// ---------------------------------------------------------------------------

/// Value used for diagonal entries that no coefficient constrains.
fn diagonal_fill(field: &FieldSpec, attempt: u64, row: usize, index: usize) -> FieldElement {
    if attempt == 0 {
        field.zero()
    } else {
        field.from_i64(1 + ((row + index + attempt as usize) % 3) as i64)
    }
}

/// Run a plan against a target.  Returns the finished tuple; the caller wraps
/// it in a [`WitnessResult`] with the appropriate branch tag.
fn run_plan(
    p: &NcPolynomial,
    x: &UTMatrix<FieldElement>,
    plan: &Plan,
    table: &BTreeMap<Vec<usize>, CPolynomial>,
    seed: u64,
) -> Result<Vec<UTMatrix<FieldElement>>, WitnessError> {
    let field = FieldSpec::Rational;
    let m = x.dim();
    let n = p.nvars();

    for step in &plan.solves {
        if !table.contains_key(&step.slots) {
            return Err(WitnessError::NotConstructible(format!(
                "the coefficient for slot pattern {:?} vanishes identically",
                step.slots
            )));
        }
    }

    // Collect the solve coefficients, renamed from canonical chain rows onto
    // the actual window rows, and pick diagonals making all of them nonzero.
    let gen_ring = PolyRing::generic(field, m, n);
    let mut lambda_polys: BTreeMap<(Vec<usize>, Vec<usize>), CPolynomial> = BTreeMap::new();
    for step in &plan.solves {
        let key = (step.slots.clone(), step.window.clone());
        if lambda_polys.contains_key(&key) {
            continue;
        }
        let renamed = table[&step.slots].map_vars(&gen_ring, |v| {
            Var::new(
                step.window[v.row as usize - 1],
                step.window[v.col as usize - 1],
                v.index as usize,
            )
        })?;
        lambda_polys.insert(key, renamed);
    }
    let qs: Vec<CPolynomial> = lambda_polys.into_values().collect();

    let mut last = WitnessError::NotConstructible("no diagonal assignment found".into());
    for attempt in 0..ASSIGNMENT_ATTEMPTS {
        let assignment = if qs.is_empty() {
            Ok(BTreeMap::new())
        } else if attempt == 0 {
            find_nonzero_assignment(&qs, seed)
        } else {
            random_nonzero_assignment(&qs, seed ^ attempt.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        };
        let assignment = match assignment {
            Ok(a) => a,
            Err(e) => {
                last = WitnessError::NotConstructible(format!(
                    "no simultaneous nonzero point for the solve coefficients: {e}"
                ));
                continue;
            }
        };
        match solve_with_assignment(p, x, plan, &assignment, attempt) {
            Ok(mats) => return Ok(mats),
            Err(e) => last = e,
        }
    }
    Err(last)
}

fn solve_with_assignment(
    p: &NcPolynomial,
    x: &UTMatrix<FieldElement>,
    plan: &Plan,
    assignment: &BTreeMap<Var, FieldElement>,
    attempt: u64,
) -> Result<Vec<UTMatrix<FieldElement>>, WitnessError> {
    let field = FieldSpec::Rational;
    let m = x.dim();
    let n = p.nvars();
    let mring = MatrixRing::new(m, &field);

    let mut mats: Vec<UTMatrix<FieldElement>> = Vec::with_capacity(n);
    for index in 1..=n {
        let mut u = UTMatrix::zero(m);
        for row in 1..=m {
            let value = assignment
                .get(&Var::new(row, row, index))
                .cloned()
                .unwrap_or_else(|| diagonal_fill(&field, attempt, row, index));
            u.set(&field, row, row, value)?;
        }
        mats.push(u);
    }
    for &(owner, (r, s)) in &plan.units {
        mats[owner - 1].set(&field, r, s, field.one())?;
    }

    let planned: BTreeSet<(usize, (usize, usize))> =
        plan.solves.iter().map(|s| (s.owner, s.pos)).collect();
    let entry_at = |mats: &[UTMatrix<FieldElement>],
                    pos: (usize, usize)|
     -> Result<FieldElement, WitnessError> {
        let y = p.evaluate_in_ring(&mring, mats)?;
        Ok(y.get_or_zero(&field, pos.0, pos.1))
    };

    let mut matched: Vec<((usize, usize), FieldElement)> = Vec::new();
    let mut rerouted = false;
    for step in &plan.solves {
        let want = x.get_or_zero(&field, step.target.0, step.target.1);
        let f0 = entry_at(&mats, step.target)?;
        mats[step.owner - 1].set(&field, step.pos.0, step.pos.1, field.one())?;
        let f1 = entry_at(&mats, step.target)?;
        let lambda = field.sub(&f1, &f0);
        if !field.is_zero(&lambda) {
            let entry = field.mul(&field.inv(&lambda)?, &field.sub(&want, &f0));
            mats[step.owner - 1].set(&field, step.pos.0, step.pos.1, entry)?;
            matched.push((step.target, want));
            continue;
        }
        mats[step.owner - 1].set(&field, step.pos.0, step.pos.1, field.zero())?;

        // The planned carrier is dead, typically because an entry solved
        // earlier on its chain came out zero.  Try every free position in
        // the target span as a replacement carrier.
        let mut routed = false;
        'candidates: for g in 1..=n {
            for r in step.target.0..step.target.1 {
                for s in (r + 1)..=step.target.1 {
                    if planned.contains(&(g, (r, s))) || mats[g - 1].entry(r, s).is_some() {
                        continue;
                    }
                    mats[g - 1].set(&field, r, s, field.one())?;
                    let probe = entry_at(&mats, step.target)?;
                    let slope = field.sub(&probe, &f0);
                    if field.is_zero(&slope) {
                        mats[g - 1].set(&field, r, s, field.zero())?;
                        continue;
                    }
                    let entry = field.mul(&field.inv(&slope)?, &field.sub(&want, &f0));
                    mats[g - 1].set(&field, r, s, entry)?;
                    // A detour entry can feed chains of targets that were
                    // already matched; keep it only if they all still hold.
                    let y = p.evaluate_in_ring(&mring, &mats)?;
                    let intact = matched
                        .iter()
                        .all(|(tgt, val)| y.get_or_zero(&field, tgt.0, tgt.1) == *val);
                    if intact {
                        routed = true;
                        rerouted = true;
                        matched.push((step.target, want));
                        break 'candidates;
                    }
                    mats[g - 1].set(&field, r, s, field.zero())?;
                }
            }
        }
        if !routed {
            return Err(WitnessError::NotConstructible(format!(
                "entry ({}, {}): every candidate carrier has a vanishing coefficient",
                step.target.0, step.target.1
            )));
        }
    }

    let y = p.evaluate_in_ring(&mring, &mats)?;
    if y != *x {
        // The solve order makes this impossible without detours.
        assert!(
            rerouted,
            "triangular witness construction must reproduce its target"
        );
        return Err(WitnessError::NotConstructible(
            "detour carriers destabilized previously matched entries".into(),
        ));
    }
    Ok(mats)
}

// ---------------------------------------------------------------------------
// Public constructions for positive order.
// ---------------------------------------------------------------------------

fn stratum_violation(x: &UTMatrix<FieldElement>, t: usize) -> WitnessError {
    let (row, col) = x
        .iter()
        .map(|(&pos, _)| pos)
        .find(|&(r, c)| c - r < t)
        .unwrap_or((0, 0));
    WitnessError::NotInStratum { row, col }
}

fn zero_tuple_result(
    p: &NcPolynomial,
    m: usize,
    branch: Branch,
) -> Result<WitnessResult, WitnessError> {
    let field = FieldSpec::Rational;
    let mring = MatrixRing::new(m, &field);
    let u = vec![UTMatrix::zero(m); p.nvars()];
    let y = p.evaluate_in_ring(&mring, &u)?;
    assert!(
        y.is_zero_matrix(),
        "a polynomial without constant term vanishes on the zero tuple"
    );
    Ok(WitnessResult {
        u,
        branch,
        verified: true,
        residual: None,
    })
}

/// Construct matrices `u` over the rationals with `p(u) = x`.
///
/// `report` must be the classification of `p` (so `report.order >= 1`), and
/// `x` must be supported on the stratum that the order predicts.  The slot
/// patterns of the coefficient table are tried in lexicographic order and the
/// first one that carries all targets wins; for order two with one-sided
/// support the dedicated construction is tried as a fallback.  `seed` only
/// influences the diagonal values picked for the matrices, never whether a
/// target is constructible.
pub fn witness(
    p: &NcPolynomial,
    x: &UTMatrix<FieldElement>,
    report: &OrderReport,
    seed: u64,
) -> Result<WitnessResult, WitnessError> {
    if p.field_spec() != FieldSpec::Rational {
        return Err(WitnessError::UnsupportedField(p.field_spec().name()));
    }
    let t = report.order;
    let m = x.dim();
    if t == 0 {
        return Err(WitnessError::OrderOutOfRange { order: t, dim: m });
    }
    let branch = if t == 1 {
        Branch::Order1
    } else if t + 1 == m {
        Branch::Top
    } else {
        Branch::OrderTPattern
    };
    if t >= m {
        // p vanishes identically on T_m, so only the zero target has
        // preimages.
        return if x.is_zero_matrix() {
            zero_tuple_result(p, m, branch)
        } else {
            Err(stratum_violation(x, t))
        };
    }
    let stratum = Stratum::new(m, t as i64 - 1)?;
    if !stratum.contains(x) {
        return Err(stratum_violation(x, t));
    }
    if x.is_zero_matrix() {
        return zero_tuple_result(p, m, branch);
    }

    let (_ring, table) = coefficient_table(p, t);
    let mut last = WitnessError::NotConstructible("no usable slot pattern".into());
    for pattern in table.keys() {
        let plan = sigma_plan(m, t, pattern);
        match run_plan(p, x, &plan, &table, seed) {
            Ok(u) => {
                return Ok(WitnessResult {
                    u,
                    branch,
                    verified: true,
                    residual: None,
                })
            }
            Err(e) => last = e,
        }
    }
    if t == 2 && !table.keys().any(|k| k[0] == k[1]) {
        // One-sided support: all coefficients of the pair plan below are
        // independent of the target entries, so it absorbs zeros inside the
        // stratum that defeat the cyclic plans above.
        for pattern in table.keys() {
            let plan = onesided_plan(m, pattern[0], pattern[1]);
            match run_plan(p, x, &plan, &table, seed) {
                Ok(u) => {
                    return Ok(WitnessResult {
                        u,
                        branch,
                        verified: true,
                        residual: None,
                    })
                }
                Err(e) => last = e,
            }
        }
    }
    Err(last)
}

/// Does `pattern` admit the cyclic plan on `T_m`, i.e. are all required
/// rotations of it present in the coefficient table?
fn sigma_viable(
    m: usize,
    t: usize,
    pattern: &[usize],
    table: &BTreeMap<Vec<usize>, CPolynomial>,
) -> bool {
    sigma_plan(m, t, pattern)
        .solves
        .iter()
        .all(|s| table.contains_key(&s.slots))
}

/// Split `x` into two stratum matrices whose free entries are all nonzero.
fn split_all_nonzero(
    stratum: &Stratum,
    x: &UTMatrix<FieldElement>,
    field: &FieldSpec,
) -> Result<(UTMatrix<FieldElement>, UTMatrix<FieldElement>), WitnessError> {
    let m = x.dim();
    let mut x1 = UTMatrix::zero(m);
    let mut x2 = UTMatrix::zero(m);
    for (r, c) in stratum.free_positions() {
        let value = x.get_or_zero(field, r, c);
        let first = if value == field.one() {
            field.from_i64(2)
        } else {
            field.one()
        };
        x2.set(field, r, c, field.sub(&value, &first))?;
        x1.set(field, r, c, first)?;
    }
    Ok((x1, x2))
}

/// The rows of `x` congruent to `a` modulo `t`, as a matrix of its own.
fn residue_rows(
    x: &UTMatrix<FieldElement>,
    t: usize,
    a: usize,
) -> Result<UTMatrix<FieldElement>, WitnessError> {
    let field = FieldSpec::Rational;
    let mut out = UTMatrix::zero(x.dim());
    for (&(r, c), value) in x.iter() {
        if r % t == a % t {
            out.set(&field, r, c, value.clone())?;
        }
    }
    Ok(out)
}

/// Write `x` as a sum of as few image values of `p` as the constructions
/// allow, each summand with its own verified witness tuple.
///
/// Only the intermediate orders `1 < t < m - 1` are accepted; for the other
/// orders [`witness`] already covers the whole stratum.  The decomposition
/// tries, in this order: a single witness for `x` itself; a two-summand
/// split with both halves free of zero entries (which is what defeats the
/// single-witness plans); and finally one summand per row residue class
/// modulo `t`, which needs no nonzero assumptions at all.
pub fn waring_decompose(
    p: &NcPolynomial,
    x: &UTMatrix<FieldElement>,
    report: &OrderReport,
    support: &SupportIndex,
    seed: u64,
) -> Result<WaringDecomposition, WitnessError> {
    if p.field_spec() != FieldSpec::Rational {
        return Err(WitnessError::UnsupportedField(p.field_spec().name()));
    }
    let t = report.order;
    let m = x.dim();
    if !(t > 1 && t + 1 < m) {
        return Err(WitnessError::OrderOutOfRange { order: t, dim: m });
    }
    assert_eq!(support.t, t, "support index computed for a different order");
    let stratum = Stratum::new(m, t as i64 - 1)?;
    if !stratum.contains(x) {
        return Err(stratum_violation(x, t));
    }
    if x.is_zero_matrix() {
        return Ok(WaringDecomposition {
            summands: Vec::new(),
        });
    }
    if let Ok(w) = witness(p, x, report, seed) {
        return Ok(WaringDecomposition {
            summands: vec![(x.clone(), w)],
        });
    }

    let field = FieldSpec::Rational;
    let mring = MatrixRing::new(m, &field);
    let (_ring, table) = coefficient_table(p, t);

    // Two summands whenever some pattern supports the cyclic plan: zeros in
    // x are the only obstruction, and the split removes them from both
    // halves.
    if let Some(pattern) = table.keys().find(|i| sigma_viable(m, t, i, &table)) {
        let (x1, x2) = split_all_nonzero(&stratum, x, &field)?;
        let build = |half: &UTMatrix<FieldElement>| -> Result<WitnessResult, WitnessError> {
            let plan = sigma_plan(m, t, pattern);
            let u = run_plan(p, half, &plan, &table, seed)?;
            Ok(WitnessResult {
                u,
                branch: Branch::WaringSummand,
                verified: true,
                residual: None,
            })
        };
        if let (Ok(w1), Ok(w2)) = (build(&x1), build(&x2)) {
            let sum = mring.add(&x1, &x2);
            assert_eq!(sum, *x, "split halves must add back to the target");
            return Ok(WaringDecomposition {
                summands: vec![(x1, w1), (x2, w2)],
            });
        }
    }

    // Row-residue decomposition: summand `a` carries the rows congruent to
    // `a` modulo `t`.  All solve coefficients ride on unit entries only, so
    // zero target entries are harmless.
    let pattern = support
        .witnesses
        .first()
        .expect("a polynomial of positive order has witness patterns")
        .clone();
    let mut summands = Vec::new();
    for a in 1..=t.min(m - t) {
        let xa = residue_rows(x, t, a)?;
        if xa.is_zero_matrix() {
            continue;
        }
        let plan = residue_plan(m, t, &pattern, a);
        let u = run_plan(p, &xa, &plan, &table, seed).map_err(|e| {
            WitnessError::SummandConstructionFailed {
                residue: a,
                detail: e.to_string(),
            }
        })?;
        summands.push((
            xa,
            WitnessResult {
                u,
                branch: Branch::WaringSummand,
                verified: true,
                residual: None,
            },
        ));
    }
    let mut sum = UTMatrix::zero(m);
    for (xa, _) in &summands {
        sum = mring.add(&sum, xa);
    }
    assert_eq!(sum, *x, "row-residue slices must add back to the target");
    Ok(WaringDecomposition { summands })
}

// ---------------------------------------------------------------------------
// Order zero: diagonal targets, solved after conjugating to diagonal form.
// ---------------------------------------------------------------------------

fn identity_matrix(field: &FieldSpec, m: usize) -> UTMatrix<FieldElement> {
    MatrixRing::new(m, field).one()
}

fn matrix_residual(
    field: &FieldSpec,
    y: &UTMatrix<FieldElement>,
    x: &UTMatrix<FieldElement>,
) -> f64 {
    let m = x.dim();
    let mut worst = 0.0f64;
    for r in 1..=m {
        for c in r..=m {
            let diff = field.sub(&y.get_or_zero(field, r, c), &x.get_or_zero(field, r, c));
            worst = worst.max(field.abs_f64(&diff));
        }
    }
    worst
}

fn finish_result(
    field: &FieldSpec,
    x: &UTMatrix<FieldElement>,
    y: UTMatrix<FieldElement>,
    u: Vec<UTMatrix<FieldElement>>,
    branch: Branch,
) -> WitnessResult {
    match field {
        FieldSpec::Complex => {
            let residual = matrix_residual(field, &y, x);
            WitnessResult {
                u,
                branch,
                verified: residual < RESIDUAL_TOL,
                residual: Some(residual),
            }
        }
        _ => {
            assert_eq!(y, *x, "exact-field witness must re-evaluate to the target");
            WitnessResult {
                u,
                branch,
                verified: true,
                residual: None,
            }
        }
    }
}

/// Conjugate an upper triangular matrix with pairwise distinct diagonal into
/// diagonal form: returns `(v, d)` with `v x v^{-1} = d`.
///
/// Entries are cleared superdiagonal by superdiagonal with elementary
/// transvections; clearing a position never disturbs the positions already
/// cleared.
pub fn conjugate_to_diagonal(
    field: &FieldSpec,
    x: &UTMatrix<FieldElement>,
) -> Result<(UTMatrix<FieldElement>, UTMatrix<FieldElement>), WitnessError> {
    let m = x.dim();
    for i in 1..=m {
        for j in (i + 1)..=m {
            if x.get_or_zero(field, i, i) == x.get_or_zero(field, j, j) {
                return Err(WitnessError::RepeatedDiagonal(i, j));
            }
        }
    }
    let mring = MatrixRing::new(m, field);
    let mut v = identity_matrix(field, m);
    let mut cur = x.clone();
    for span in 1..m {
        for r in 1..=(m - span) {
            let c = r + span;
            let value = cur.get_or_zero(field, r, c);
            if field.is_zero(&value) {
                continue;
            }
            let denom = field.sub(
                &cur.get_or_zero(field, c, c),
                &cur.get_or_zero(field, r, r),
            );
            let tau = field.neg(&field.mul(&field.inv(&denom)?, &value));
            let mut e = identity_matrix(field, m);
            e.set(field, r, c, tau)?;
            cur = conjugate(field, &e, &cur)?;
            // Exact arithmetic clears the entry identically; floating point
            // leaves roundoff that would otherwise survive as junk.
            cur.set(field, r, c, field.zero())?;
            v = mring.mul(&e, &v);
        }
    }
    debug_assert!(cur.iter().all(|(&(r, c), _)| r == c));
    Ok((v, cur))
}

fn pool_value(field: &FieldSpec, k: usize) -> FieldElement {
    let value = field.from_i64(POOL[k % POOL.len()]);
    if field.is_zero(&value) {
        field.one()
    } else {
        value
    }
}

/// Deterministic choice among the roots of a scalar equation: smallest
/// magnitude first and positive before negative over the rationals, the
/// canonical field order elsewhere.
fn pick_root(field: &FieldSpec, roots: &[FieldElement]) -> Option<FieldElement> {
    match field {
        FieldSpec::Rational => roots
            .iter()
            .min_by(|a, b| {
                let (Some(x), Some(y)) = (a.as_rational(), b.as_rational()) else {
                    unreachable!("rational root set holds rational elements");
                };
                x.abs().cmp(&y.abs()).then_with(|| x.cmp(y).reverse())
            })
            .cloned(),
        _ => roots
            .iter()
            .min_by(|a, b| field.canonical_cmp(a, b))
            .cloned(),
    }
}

/// Coefficients of `p` as a univariate polynomial in variable `free`, with
/// every other variable replaced by its value from `fixed`.
fn scalar_univariate(
    p: &NcPolynomial,
    field: &FieldSpec,
    free: usize,
    fixed: &BTreeMap<usize, FieldElement>,
) -> Vec<FieldElement> {
    let mut coeffs = vec![field.zero(); p.degree() + 1];
    for (word, c) in p.terms() {
        let mut degree = 0usize;
        let mut acc = c.clone();
        for &letter in &word.0 {
            if letter as usize == free {
                degree += 1;
            } else {
                acc = field.mul(&acc, &fixed[&(letter as usize)]);
            }
        }
        coeffs[degree] = field.add(&coeffs[degree], &acc);
    }
    coeffs
}

/// Preimage of a diagonalizable target under an order-zero polynomial.
///
/// The target is conjugated to diagonal form (its diagonal must be pairwise
/// distinct), the scalar equation `p(a_1, ..., a_n) = d_r` is solved for each
/// slot by fixing all but one variable at small nonzero values, and the
/// diagonal tuple is conjugated back.
pub fn witness_order0(
    p: &NcPolynomial,
    x: &UTMatrix<FieldElement>,
    field: &FieldSpec,
) -> Result<WitnessResult, WitnessError> {
    let m = x.dim();
    let n = p.nvars();
    assert!(n >= 1, "an order-zero polynomial uses at least one variable");
    let (v, d) = conjugate_to_diagonal(field, x)?;

    let mut slot_values: Vec<Vec<FieldElement>> = Vec::with_capacity(m);
    for r in 1..=m {
        let target = d.get_or_zero(field, r, r);
        let mut solved: Option<Vec<FieldElement>> = None;
        for attempt in 0..SCALAR_ATTEMPTS {
            let free = attempt % n + 1;
            let shift = attempt / n;
            let mut fixed: BTreeMap<usize, FieldElement> = BTreeMap::new();
            for var in 1..=n {
                if var != free {
                    fixed.insert(var, pool_value(field, shift + var));
                }
            }
            let mut coeffs = scalar_univariate(p, field, free, &fixed);
            coeffs[0] = field.sub(&coeffs[0], &target);
            if coeffs.iter().all(|c| field.is_zero(c)) {
                // The equation degenerated to 0 = 0; any value works.
                let mut values = vec![field.zero(); n];
                for (var, value) in &fixed {
                    values[var - 1] = value.clone();
                }
                solved = Some(values);
                break;
            }
            if let Ok(set) = univariate_roots(field, &coeffs) {
                if let Some(root) = pick_root(field, &set.roots) {
                    let mut values = vec![field.zero(); n];
                    for var in 1..=n {
                        values[var - 1] = if var == free {
                            root.clone()
                        } else {
                            fixed[&var].clone()
                        };
                    }
                    solved = Some(values);
                    break;
                }
            }
        }
        match solved {
            Some(values) => slot_values.push(values),
            None => {
                return Err(WitnessError::ScalarEquationUnsolvable {
                    slot: r,
                    value: field.format_element(&target),
                })
            }
        }
    }

    let vinv = invert(field, &v)?;
    let mut u = Vec::with_capacity(n);
    for index in 1..=n {
        let mut g = UTMatrix::zero(m);
        for r in 1..=m {
            g.set(field, r, r, slot_values[r - 1][index - 1].clone())?;
        }
        u.push(conjugate(field, &vinv, &g)?);
    }
    let mring = MatrixRing::new(m, field);
    let y = p.evaluate_in_ring(&mring, &u)?;
    Ok(finish_result(field, x, y, u, Branch::Order0Diag))
}

// ---------------------------------------------------------------------------
// Group words on the invertible part.
// ---------------------------------------------------------------------------

fn modpow(base: u64, mut exp: u32, modulus: u64) -> u64 {
    let mut acc = 1u128;
    let mut b = base as u128 % modulus as u128;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % modulus as u128;
        }
        b = b * b % modulus as u128;
        exp >>= 1;
    }
    acc as u64
}

fn scalar_pow(
    field: &FieldSpec,
    a: &FieldElement,
    e: i64,
) -> Result<FieldElement, WitnessError> {
    let base = if e < 0 { field.inv(a)? } else { a.clone() };
    let mut acc = field.one();
    for _ in 0..e.unsigned_abs() {
        acc = field.mul(&acc, &base);
    }
    Ok(acc)
}

fn scalar_kth_root(field: &FieldSpec, c: &FieldElement, k: u32) -> Option<FieldElement> {
    match (field, c) {
        (FieldSpec::Rational, FieldElement::Rational(r)) => {
            rational_kth_root(r, k).map(FieldElement::Rational)
        }
        (FieldSpec::Complex, FieldElement::Complex(z)) => kth_roots_complex(*z, k)
            .first()
            .map(|w| FieldElement::Complex(*w)),
        (FieldSpec::Prime(q), FieldElement::Prime { value, .. }) => {
            (1..*q).find(|&a| modpow(a, k, *q) == *value).map(|a| {
                FieldElement::Prime {
                    value: a,
                    modulus: *q,
                }
            })
        }
        _ => unreachable!("element does not belong to the field"),
    }
}

/// Preimage of an invertible target under a group word.
///
/// Invertible diagonal matrices see only the exponent sums of the word, so
/// after conjugating the target to diagonal form each slot reduces to one
/// power equation `a^e = c` in the variable with the smallest nonzero
/// exponent sum.  Words with all exponent sums zero only reach targets with
/// all-ones diagonal.
pub fn word_witness(
    w: &GroupWord,
    x: &UTMatrix<FieldElement>,
    field: &FieldSpec,
) -> Result<WitnessResult, WitnessError> {
    let m = x.dim();
    let n = w.nvars();
    for r in 1..=m {
        if field.is_zero(&x.get_or_zero(field, r, r)) {
            return Err(WitnessError::NonInvertibleTarget(r));
        }
    }
    let (v, d) = conjugate_to_diagonal(field, x)?;
    let esums = w.exponent_sums();
    let free = (1..=n)
        .filter(|&j| esums[j - 1] != 0)
        .min_by_key(|&j| (esums[j - 1].unsigned_abs(), j));

    let mut slot_values: Vec<Vec<FieldElement>> = Vec::with_capacity(m);
    for r in 1..=m {
        let target = d.get_or_zero(field, r, r);
        let Some(j) = free else {
            // Abelianized-trivial word: its value on any invertible
            // diagonal tuple has an all-ones diagonal.
            if target != field.one() {
                return Err(WitnessError::ScalarEquationUnsolvable {
                    slot: r,
                    value: field.format_element(&target),
                });
            }
            slot_values.push(vec![field.one(); n]);
            continue;
        };
        let e_free = esums[j - 1];
        let mut solved = None;
        for attempt in 0..SCALAR_ATTEMPTS {
            let mut fixed: BTreeMap<usize, FieldElement> = BTreeMap::new();
            let mut denom = field.one();
            for var in 1..=n {
                if var != j && esums[var - 1] != 0 {
                    let value = pool_value(field, attempt + var);
                    denom = field.mul(&denom, &scalar_pow(field, &value, esums[var - 1])?);
                    fixed.insert(var, value);
                }
            }
            let c = field.mul(&target, &field.inv(&denom)?);
            let (base, k) = if e_free > 0 {
                (c, e_free as u32)
            } else {
                (field.inv(&c)?, (-e_free) as u32)
            };
            if let Some(root) = scalar_kth_root(field, &base, k) {
                let mut values = vec![field.one(); n];
                for (var, value) in &fixed {
                    values[var - 1] = value.clone();
                }
                values[j - 1] = root;
                solved = Some(values);
                break;
            }
        }
        match solved {
            Some(values) => slot_values.push(values),
            None => {
                return Err(WitnessError::ScalarEquationUnsolvable {
                    slot: r,
                    value: field.format_element(&target),
                })
            }
        }
    }

    let vinv = invert(field, &v)?;
    let mut u = Vec::with_capacity(n);
    for index in 1..=n {
        let mut g = UTMatrix::zero(m);
        for r in 1..=m {
            g.set(field, r, r, slot_values[r - 1][index - 1].clone())?;
        }
        u.push(conjugate(field, &vinv, &g)?);
    }
    let y = w.evaluate_matrices(field, &u)?;
    Ok(finish_result(field, x, y, u, Branch::Order0Diag))
}
