//! Brute-force ground truth over small finite fields.
//!
//! The rest of the crate argues with symbols; this module argues by
//! exhaustion.  Over `F_q` the whole space of input tuples is finite, so the
//! image of a polynomial map on `T_m(F_q)` can be computed exactly by
//! enumerating every tuple, and questions like "is every stratum matrix a
//! sum of `d` image values" reduce to iterated sumsets of a finite set.
//!
//! Matrices over `F_q` are packed into integers — the upper-triangle entries
//! read row by row are the base-`q` digits — and sets of matrices become
//! bitsets over the packed codes.  Enumeration splits the tuple space into
//! contiguous code ranges processed in parallel; the per-range bitsets are
//! merged by union, so the result does not depend on the number of workers.
//!
//! A finite-field scan is evidence, not proof, for statements about infinite
//! fields; callers are expected to label it as such.  The one direction that
//! is characteristic-free — the image being contained in the stratum that
//! the order predicts — can be asserted against these sets.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::arith::{FieldElement, FieldSpec};
use crate::classify::generic_evaluation;
use crate::ncpoly::NcPolynomial;
use crate::ring::Ring;
use crate::utm::{MatrixRing, Stratum, UTMatrix};
use crate::witness::witness_order0;

/// Default evaluation budget for exhaustive enumeration.
pub const DEFAULT_BUDGET: u64 = 100_000_000;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error(
        "exhaustive enumeration needs {needed} evaluations, over the budget of {budget}; \
         raise the budget or use sampling"
    )]
    BudgetExceeded { needed: u128, budget: u64 },
    #[error("the {d_max}-fold sumset of the image still misses part of the stratum")]
    NotCovered { d_max: usize },
    #[error("polynomial is over {found}, but enumeration was requested over F_{q}")]
    WrongField { found: String, q: u64 },
}

/// Upper-triangle positions of `T_m` in row-major order; their entries are
/// the base-`q` digits of the packed code, least significant first.
fn positions(m: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(m * (m + 1) / 2);
    for r in 1..=m {
        for c in r..=m {
            out.push((r, c));
        }
    }
    out
}

/// Pack a matrix over `F_q` into its code.
pub fn encode_matrix(q: u64, x: &UTMatrix<FieldElement>) -> u64 {
    let field = FieldSpec::Prime(q);
    let mut code = 0u64;
    let mut weight = 1u64;
    for (r, c) in positions(x.dim()) {
        let digit = match x.get_or_zero(&field, r, c) {
            FieldElement::Prime { value, .. } => value,
            _ => unreachable!("finite-field matrix holds prime-field entries"),
        };
        code += digit * weight;
        weight *= q;
    }
    code
}

/// Unpack a code into the matrix over `F_q` it denotes.
pub fn decode_matrix(q: u64, m: usize, mut code: u64) -> UTMatrix<FieldElement> {
    let field = FieldSpec::Prime(q);
    let mut x = UTMatrix::zero(m);
    for (r, c) in positions(m) {
        let digit = code % q;
        code /= q;
        if digit != 0 {
            x.set(
                &field,
                r,
                c,
                FieldElement::Prime {
                    value: digit,
                    modulus: q,
                },
            )
            .expect("positions enumerate valid indices");
        }
    }
    debug_assert_eq!(code, 0, "code must fit the matrix state space");
    x
}

/// The exact image of a polynomial map on `T_m(F_q)`, as a bitset over
/// packed matrix codes.
#[derive(Debug, Clone)]
pub struct ImageSet {
    m: usize,
    q: u64,
    n: usize,
    states: u64,
    bits: Vec<u64>,
    evaluation_count: u64,
}

impl ImageSet {
    fn empty(m: usize, q: u64, n: usize) -> Self {
        let states = (q as u128).pow((m * (m + 1) / 2) as u32);
        assert!(states <= 1 << 32, "matrix state space exceeds the bitset cap");
        let states = states as u64;
        ImageSet {
            m,
            q,
            n,
            states,
            bits: vec![0u64; states.div_ceil(64) as usize],
            evaluation_count: 0,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    /// How many evaluations produced this set.
    pub fn evaluation_count(&self) -> u64 {
        self.evaluation_count
    }

    fn insert(&mut self, code: u64) {
        self.bits[(code / 64) as usize] |= 1 << (code % 64);
    }

    pub fn contains_code(&self, code: u64) -> bool {
        code < self.states && self.bits[(code / 64) as usize] >> (code % 64) & 1 == 1
    }

    pub fn contains(&self, x: &UTMatrix<FieldElement>) -> bool {
        x.dim() == self.m && self.contains_code(encode_matrix(self.q, x))
    }

    pub fn cardinality(&self) -> u64 {
        self.bits.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Codes of the members, ascending.
    pub fn codes(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.states).filter(|&c| self.contains_code(c))
    }

    /// The member matrices, in code order.
    pub fn members(&self) -> impl Iterator<Item = UTMatrix<FieldElement>> + '_ {
        self.codes().map(|c| decode_matrix(self.q, self.m, c))
    }

    fn union_in_place(&mut self, other: &ImageSet) {
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= *b;
        }
    }
}

/// Compute the exact image of `p` on `T_m(F_q)` by enumerating every input
/// tuple.  Refuses to start when the tuple count exceeds `budget`.
pub fn enumerate_image(
    p: &NcPolynomial,
    m: usize,
    q: u64,
    budget: u64,
) -> Result<ImageSet, OracleError> {
    if p.field_spec() != FieldSpec::Prime(q) {
        return Err(OracleError::WrongField {
            found: p.field_spec().name(),
            q,
        });
    }
    let n = p.nvars();
    let entries = m * (m + 1) / 2;
    let states = (q as u128).pow(entries as u32);
    let needed = states.pow(n as u32);
    if needed > budget as u128 {
        return Err(OracleError::BudgetExceeded { needed, budget });
    }
    let total = needed as u64;
    let states64 = states as u64;

    // Contiguous ranges, one local bitset each, merged by union: the result
    // is independent of how the ranges are scheduled.
    let chunks = (rayon::current_num_threads() * 8).max(1) as u64;
    let chunk_len = total.div_ceil(chunks).max(1);
    let mut image = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let field = FieldSpec::Prime(q);
            let mring = MatrixRing::new(m, &field);
            let mut local = ImageSet::empty(m, q, n);
            let start = chunk * chunk_len;
            let end = total.min(start + chunk_len);
            let mut args: Vec<UTMatrix<FieldElement>> = vec![UTMatrix::zero(m); n];
            for tuple_code in start..end {
                let mut rest = tuple_code;
                for slot in args.iter_mut() {
                    *slot = decode_matrix(q, m, rest % states64);
                    rest /= states64;
                }
                let y = p
                    .evaluate_in_ring(&mring, &args)
                    .expect("arity and field are checked before enumeration");
                local.insert(encode_matrix(q, &y));
            }
            local
        })
        .reduce(
            || ImageSet::empty(m, q, n),
            |mut a, b| {
                a.union_in_place(&b);
                a
            },
        );
    image.evaluation_count = total;
    Ok(image)
}

/// Smallest `d <= d_max` such that every matrix of the stratum is a sum of
/// `d` members of `s`.  Since `0` is a member, the `d`-fold sumsets are
/// nested and the first covering `d` is the answer.
pub fn waring_number(
    s: &ImageSet,
    target_stratum: &Stratum,
    d_max: usize,
) -> Result<usize, OracleError> {
    assert!(
        s.contains_code(encode_matrix(s.q, &UTMatrix::zero(s.m))),
        "the image of a polynomial without constant term contains zero"
    );
    let field = FieldSpec::Prime(s.q);
    let mring = MatrixRing::new(s.m, &field);

    let free = target_stratum.free_positions();
    let stratum_size = (s.q as u128).pow(free.len() as u32);
    assert!(
        stratum_size <= 1 << 24,
        "stratum too large for the sumset oracle"
    );
    let mut stratum_codes = Vec::with_capacity(stratum_size as usize);
    for assignment in 0..stratum_size as u64 {
        let mut x = UTMatrix::zero(s.m);
        let mut rest = assignment;
        for &(r, c) in &free {
            let digit = rest % s.q;
            rest /= s.q;
            if digit != 0 {
                x.set(
                    &field,
                    r,
                    c,
                    FieldElement::Prime {
                        value: digit,
                        modulus: s.q,
                    },
                )
                .expect("free positions are valid");
            }
        }
        stratum_codes.push(encode_matrix(s.q, &x));
    }

    let base_members: Vec<UTMatrix<FieldElement>> = s.members().collect();
    let mut current = s.clone();
    for d in 1..=d_max {
        if stratum_codes.iter().all(|&c| current.contains_code(c)) {
            return Ok(d);
        }
        if d == d_max {
            break;
        }
        let mut next = current.clone();
        for a in current.members() {
            for b in &base_members {
                next.insert(encode_matrix(s.q, &mring.add(&a, b)));
            }
        }
        current = next;
    }
    Err(OracleError::NotCovered { d_max })
}

/// What randomized sampling of the polynomial map produced.
#[derive(Debug, Clone)]
pub enum SampleStats {
    /// Order zero: random distinct-diagonal targets, solved by
    /// [`witness_order0`]; `max_residual` is 0 over exact fields.
    Order0 {
        trials: usize,
        successes: usize,
        max_residual: f64,
    },
    /// Positive order: random input tuples, histogram of the tightest
    /// stratum level containing each image (the zero image counts as level
    /// `m - 1`).
    PositiveOrder {
        trials: usize,
        level_histogram: BTreeMap<i64, usize>,
    },
}

impl SampleStats {
    /// Success fraction for order-zero sampling, 0 when inapplicable.
    pub fn success_rate(&self) -> f64 {
        match self {
            SampleStats::Order0 {
                trials, successes, ..
            } => *successes as f64 / (*trials).max(1) as f64,
            SampleStats::PositiveOrder { .. } => 0.0,
        }
    }
}

fn random_element(field: &FieldSpec, rng: &mut ChaCha8Rng) -> FieldElement {
    match field {
        FieldSpec::Complex => FieldElement::Complex(num_complex::Complex64::new(
            rng.gen_range(-5.0..5.0),
            rng.gen_range(-5.0..5.0),
        )),
        FieldSpec::Prime(q) => field.from_i64(rng.gen_range(0..*q) as i64),
        FieldSpec::Rational => field.from_i64(rng.gen_range(-50..=50)),
    }
}

/// The tightest stratum level containing `y`: one less than the smallest
/// offset of a nonzero entry, and `m - 1` for the zero matrix.
fn stratum_level(y: &UTMatrix<FieldElement>) -> i64 {
    y.iter()
        .map(|(&(r, c), _)| (c - r) as i64 - 1)
        .min()
        .unwrap_or(y.dim() as i64 - 1)
}

/// Randomized evidence for the shape of the image of `p` on `T_m`.
///
/// For an order-zero polynomial this samples distinct-diagonal targets and
/// reports how often [`witness_order0`] solves them (with the worst residual
/// over the complex numbers); for positive order it samples input tuples and
/// reports the stratum levels of the images.
pub fn sample_image(
    p: &NcPolynomial,
    m: usize,
    field: &FieldSpec,
    trials: usize,
    seed: u64,
) -> SampleStats {
    assert!(trials >= 1);
    assert_eq!(
        p.field_spec(),
        *field,
        "polynomial and sampling field must agree"
    );
    let n = p.nvars();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order_zero = !generic_evaluation(p, 1).1.is_zero_matrix();

    if order_zero {
        let mut successes = 0usize;
        let mut max_residual = 0.0f64;
        for _ in 0..trials {
            // A target with pairwise distinct diagonal and random upper part.
            let mut x = UTMatrix::zero(m);
            let mut diag: Vec<FieldElement> = Vec::with_capacity(m);
            while diag.len() < m {
                let candidate = random_element(field, &mut rng);
                if field.is_zero(&candidate) || diag.contains(&candidate) {
                    continue;
                }
                diag.push(candidate);
            }
            for r in 1..=m {
                x.set(field, r, r, diag[r - 1].clone()).unwrap();
                for c in (r + 1)..=m {
                    x.set(field, r, c, random_element(field, &mut rng)).unwrap();
                }
            }
            if let Ok(w) = witness_order0(p, &x, field) {
                if w.verified {
                    successes += 1;
                }
                max_residual = max_residual.max(w.residual.unwrap_or(0.0));
            }
        }
        SampleStats::Order0 {
            trials,
            successes,
            max_residual,
        }
    } else {
        let mring = MatrixRing::new(m, field);
        let mut level_histogram: BTreeMap<i64, usize> = BTreeMap::new();
        for _ in 0..trials {
            let mut args: Vec<UTMatrix<FieldElement>> = Vec::with_capacity(n);
            for _ in 0..n {
                let mut u = UTMatrix::zero(m);
                for r in 1..=m {
                    for c in r..=m {
                        u.set(field, r, c, random_element(field, &mut rng)).unwrap();
                    }
                }
                args.push(u);
            }
            let y = p
                .evaluate_in_ring(&mring, &args)
                .expect("sampled tuples match the polynomial's arity");
            *level_histogram.entry(stratum_level(&y)).or_insert(0) += 1;
        }
        SampleStats::PositiveOrder {
            trials,
            level_histogram,
        }
    }
}
