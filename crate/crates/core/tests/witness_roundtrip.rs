//! Randomized round trips through every preimage-construction branch.
//!
//! The pattern is always the same: draw a target in the stratum a
//! polynomial (or word) maps onto, ask for a preimage, then re-evaluate the
//! returned tuple through the plain matrix-evaluation path and compare with
//! the target.  The re-evaluation deliberately avoids the verification the
//! constructors already performed, so a lying `verified` flag would be
//! caught here.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use trimat_core::arith::{FieldElement, FieldSpec};
use trimat_core::classify::order;
use trimat_core::inductive::support_index;
use trimat_core::ncpoly::{GroupWord, NcPolynomial};
use trimat_core::ring::Ring;
use trimat_core::utm::{conjugate, invert, MatrixRing, Stratum, UTMatrix};
use trimat_core::witness::{
    waring_decompose, witness, witness_order0, word_witness, Branch, RESIDUAL_TOL,
};

const POOL: [i64; 9] = [0, 1, -1, 2, 3, -2, 5, 7, -3];

/// Draws a target supported on the free positions of `T_m^(level)`; when
/// `band` is set, the entries at offset exactly `band` are forced nonzero.
fn random_target(
    rng: &mut StdRng,
    m: usize,
    level: i64,
    band: Option<usize>,
) -> UTMatrix<FieldElement> {
    let field = FieldSpec::Rational;
    let mut x = UTMatrix::zero(m);
    for (r, c) in Stratum::new(m, level).unwrap().free_positions() {
        let mut v = POOL[rng.gen_range(0..POOL.len())];
        if band == Some(c - r) && v == 0 {
            v = 1 + rng.gen_range(0..6);
        }
        x.set(&field, r, c, field.from_i64(v)).unwrap();
    }
    x
}

fn reevaluate(p: &NcPolynomial, u: &[UTMatrix<FieldElement>]) -> UTMatrix<FieldElement> {
    let field = FieldSpec::Rational;
    let ring = MatrixRing::new(u[0].dim(), &field);
    p.evaluate_in_ring(&ring, u).unwrap()
}

#[test]
fn commutator_witnesses_arbitrary_strictly_upper_targets() {
    let field = FieldSpec::Rational;
    let p = NcPolynomial::parse("x1*x2-x2*x1", field).unwrap();
    let report = order(&p, None).unwrap();
    assert_eq!(report.order, 1);
    let mut rng = StdRng::seed_from_u64(11);
    for m in 3..=5 {
        for _ in 0..10 {
            let x = random_target(&mut rng, m, 0, None);
            let res = witness(&p, &x, &report, rng.gen()).unwrap();
            assert!(res.verified);
            assert_eq!(res.branch, Branch::Order1);
            assert_eq!(res.u.len(), 2);
            assert_eq!(reevaluate(&p, &res.u), x);
        }
    }
}

#[test]
fn corner_targets_for_a_product_of_two_commutators() {
    let field = FieldSpec::Rational;
    let p = NcPolynomial::parse("(x1*x2-x2*x1)*(x3*x4-x4*x3)", field).unwrap();
    let report = order(&p, None).unwrap();
    assert_eq!(report.order, 2);
    let mut rng = StdRng::seed_from_u64(23);
    for _ in 0..10 {
        let x = random_target(&mut rng, 3, 1, None);
        let res = witness(&p, &x, &report, rng.gen()).unwrap();
        assert!(res.verified);
        assert_eq!(res.branch, Branch::Top);
        assert_eq!(reevaluate(&p, &res.u), x);
    }
}

#[test]
fn commutator_square_witnesses_targets_with_nonzero_band() {
    let field = FieldSpec::Rational;
    let p = NcPolynomial::parse("(x1*x2-x2*x1)^2", field).unwrap();
    let report = order(&p, None).unwrap();
    assert_eq!(report.order, 2);
    let mut rng = StdRng::seed_from_u64(37);
    for m in 4..=5 {
        for _ in 0..8 {
            let x = random_target(&mut rng, m, 1, Some(2));
            let res = witness(&p, &x, &report, rng.gen()).unwrap();
            assert!(res.verified, "m = {m}, target {x:?}");
            assert_eq!(res.branch, Branch::OrderTPattern);
            assert_eq!(reevaluate(&p, &res.u), x);
        }
    }
}

#[test]
fn waring_decomposition_absorbs_zeroed_band_entries() {
    let field = FieldSpec::Rational;
    let p = NcPolynomial::parse("(x1*x2-x2*x1)^2", field).unwrap();
    let report = order(&p, None).unwrap();
    let support = support_index(&p, report.order).unwrap();
    let ring = MatrixRing::new(5, &field);
    let mut rng = StdRng::seed_from_u64(41);
    for round in 0..10 {
        // Blank out one band entry so the single-preimage plan can fail and
        // the decomposition machinery has to do real work.
        let mut x = random_target(&mut rng, 5, 1, Some(2));
        let blank = 1 + rng.gen_range(0..3);
        x.set(&field, blank, blank + 2, field.zero()).unwrap();
        let dec = waring_decompose(&p, &x, &report, &support, rng.gen()).unwrap();
        assert!(dec.d() <= 2, "round {round}: d = {}", dec.d());
        let mut total = UTMatrix::zero(5);
        for (value, res) in &dec.summands {
            assert!(res.verified);
            assert_eq!(&reevaluate(&p, &res.u), value);
            total = ring.add(&total, value);
        }
        assert_eq!(total, x, "round {round}");
    }
}

#[test]
fn witness_tuples_transport_along_conjugation() {
    // If p(u) = x then p(v u v^{-1}) = v x v^{-1}: constructed witnesses
    // stay witnesses for the conjugated target.
    let field = FieldSpec::Rational;
    let p = NcPolynomial::parse("x1*x2-x2*x1", field).unwrap();
    let report = order(&p, None).unwrap();
    let mut rng = StdRng::seed_from_u64(53);
    let m = 4;
    let ring = MatrixRing::new(m, &field);
    for _ in 0..10 {
        let x = random_target(&mut rng, m, 0, None);
        let res = witness(&p, &x, &report, rng.gen()).unwrap();

        let mut v = UTMatrix::zero(m);
        for r in 1..=m {
            v.set(&field, r, r, field.from_i64(1 + rng.gen_range(0..5))).unwrap();
            for c in r + 1..=m {
                v.set(&field, r, c, field.from_i64(rng.gen_range(-3..=3))).unwrap();
            }
        }
        let vinv = invert(&field, &v).unwrap();
        let moved: Vec<_> = res
            .u
            .iter()
            .map(|ui| ring.mul(&ring.mul(&v, ui), &vinv))
            .collect();
        let expected = conjugate(&field, &v, &x).unwrap();
        assert_eq!(reevaluate(&p, &moved), expected);
    }
}

#[test]
fn scalar_surjective_polynomials_witness_distinct_diagonal_targets() {
    let field = FieldSpec::Rational;
    let p = NcPolynomial::parse("x1^2+x2", field).unwrap();
    let mut rng = StdRng::seed_from_u64(67);
    for m in 2..=4 {
        for _ in 0..8 {
            let mut x = UTMatrix::zero(m);
            // Distinct diagonal by construction, arbitrary upper part.
            let mut diag: Vec<i64> = (1..=m as i64).collect();
            for i in (1..diag.len()).rev() {
                diag.swap(i, rng.gen_range(0..=i));
            }
            for r in 1..=m {
                x.set(&field, r, r, field.from_i64(diag[r - 1] * 3 + rng.gen_range(0..3)))
                    .unwrap();
            }
            for r in 1..=m {
                for c in r + 1..=m {
                    x.set(&field, r, c, field.from_i64(rng.gen_range(-4..=4))).unwrap();
                }
            }
            if !distinct_diag(&x, &field) {
                continue;
            }
            let res = witness_order0(&p, &x, &field).unwrap();
            assert!(res.verified);
            assert_eq!(res.branch, Branch::Order0Diag);
            assert_eq!(reevaluate(&p, &res.u), x);
        }
    }
}

fn distinct_diag(x: &UTMatrix<FieldElement>, field: &FieldSpec) -> bool {
    let m = x.dim();
    for i in 1..=m {
        for j in i + 1..=m {
            if x.get_or_zero(field, i, i) == x.get_or_zero(field, j, j) {
                return false;
            }
        }
    }
    true
}

#[test]
fn squaring_witnesses_complex_targets_within_tolerance() {
    let field = FieldSpec::Complex;
    let p = NcPolynomial::parse("x1^2", field).unwrap();
    let mut rng = StdRng::seed_from_u64(71);
    for _ in 0..20 {
        let mut x = UTMatrix::zero(3);
        for r in 1..=3 {
            x.set(&field, r, r, field.from_i64(rng.gen_range(1..40) * (r as i64 + 1)))
                .unwrap();
            for c in r + 1..=3 {
                x.set(&field, r, c, field.from_i64(rng.gen_range(-9..=9))).unwrap();
            }
        }
        if !distinct_diag(&x, &field) {
            continue;
        }
        let res = witness_order0(&p, &x, &field).unwrap();
        assert!(res.verified);
        let residual = res.residual.expect("complex verification reports a residual");
        assert!(residual < RESIDUAL_TOL, "residual {residual}");
    }
}

#[test]
fn word_witnesses_recover_squares_and_mixed_words() {
    // Over the rationals the target diagonal must consist of actual squares;
    // over the complex numbers any invertible distinct diagonal works.
    let q = FieldSpec::Rational;
    let w = GroupWord::parse("x1^2").unwrap();
    let mut rng = StdRng::seed_from_u64(83);
    for _ in 0..10 {
        let mut x = UTMatrix::zero(3);
        let mut roots: Vec<i64> = vec![
            rng.gen_range(1..6),
            rng.gen_range(6..12),
            rng.gen_range(12..20),
        ];
        roots.dedup();
        if roots.len() < 3 {
            continue;
        }
        for r in 1..=3 {
            x.set(&q, r, r, q.from_i64(roots[r - 1] * roots[r - 1])).unwrap();
            for c in r + 1..=3 {
                x.set(&q, r, c, q.from_i64(rng.gen_range(-5..=5))).unwrap();
            }
        }
        let res = word_witness(&w, &x, &q).unwrap();
        assert!(res.verified);
        assert_eq!(res.u.len(), 1);
        assert_eq!(w.evaluate_matrices(&q, &res.u).unwrap(), x);
    }

    let c = FieldSpec::Complex;
    let mixed = GroupWord::parse("x1*x2*x1^-1").unwrap();
    for round in 0..10 {
        let mut x = UTMatrix::zero(3);
        for r in 1..=3 {
            x.set(&c, r, r, c.from_i64((round + 2) as i64 + 7 * r as i64)).unwrap();
            for col in r + 1..=3 {
                x.set(&c, r, col, c.from_i64(rng.gen_range(-5..=5))).unwrap();
            }
        }
        let res = word_witness(&mixed, &x, &c).unwrap();
        assert!(res.verified);
        assert!(res.residual.expect("complex runs report residuals") < RESIDUAL_TOL);
    }
}
