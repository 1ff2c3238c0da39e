//! Univariate root finding over the three supported fields.
//!
//! Prime fields are scanned exhaustively, rationals go through the rational
//! root theorem with exact deflation, and complex roots come from an
//! Aberth-style simultaneous iteration with a shifted-QR companion-matrix
//! fallback.  Tolerances are fixed here: iteration stops when updates drop
//! below `1e-12`, and a computed root is accepted when its relative residual
//! is below `1e-10`.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::field::{FieldElement, FieldSpec};
use super::ArithError;
use crate::ring::Ring;

const UPDATE_TOL: f64 = 1e-12;
const RESIDUAL_TOL: f64 = 1e-10;

/// Roots found in the coefficient field.
///
/// Over `Q` and `F_q` the list holds each distinct root once and
/// `residual_degree` is the degree still unfactored after dividing all of
/// them out (a positive value over `Q` marks "no further rational root").
/// Over `C` the list holds all `deg` roots, repeats included, and
/// `residual_degree` is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct RootSet {
    pub roots: Vec<FieldElement>,
    pub residual_degree: usize,
}

/// Finds the roots of `sum coeffs[k] x^k` in `field`.
///
/// The polynomial must not be identically zero.  Constant polynomials have
/// no roots and an empty result.
pub fn univariate_roots(
    field: &FieldSpec,
    coeffs: &[FieldElement],
) -> Result<RootSet, ArithError> {
    let mut c: Vec<FieldElement> = coeffs.to_vec();
    while c.last().map(|x| field.is_zero(x)).unwrap_or(false) {
        c.pop();
    }
    debug_assert!(!c.is_empty(), "zero polynomial has no defined root set");
    if c.len() <= 1 {
        return Ok(RootSet {
            roots: Vec::new(),
            residual_degree: 0,
        });
    }
    match field {
        FieldSpec::Prime(q) => Ok(prime_roots(*q, &c)),
        FieldSpec::Rational => Ok(rational_roots(&c)),
        FieldSpec::Complex => complex_roots(&c),
    }
}

fn prime_roots(q: u64, coeffs: &[FieldElement]) -> RootSet {
    let field = FieldSpec::Prime(q);
    let horner = |c: &[FieldElement], x: &FieldElement| {
        let mut acc = field.zero();
        for k in (0..c.len()).rev() {
            acc = field.add(&field.mul(&acc, x), &c[k]);
        }
        acc
    };
    let mut roots = Vec::new();
    for v in 0..q {
        let x = field.from_i64(v as i64);
        if field.is_zero(&horner(coeffs, &x)) {
            roots.push(x);
        }
    }
    // Deflate every root with multiplicity to measure what remains.
    let mut work = coeffs.to_vec();
    for r in &roots {
        loop {
            let (quot, rem) = synthetic_division(&field, &work, r);
            if field.is_zero(&rem) && quot.len() < work.len() {
                work = quot;
                if work.len() <= 1 {
                    break;
                }
            } else {
                break;
            }
        }
    }
    RootSet {
        roots,
        residual_degree: work.len().saturating_sub(1),
    }
}

/// Divides by `(x - r)`, returning quotient coefficients and remainder.
fn synthetic_division(
    field: &FieldSpec,
    coeffs: &[FieldElement],
    r: &FieldElement,
) -> (Vec<FieldElement>, FieldElement) {
    let n = coeffs.len();
    let mut quot = vec![field.zero(); n - 1];
    let mut carry = field.zero();
    for k in (0..n).rev() {
        let value = field.add(&coeffs[k], &field.mul(&carry, r));
        if k == 0 {
            return (quot, value);
        }
        quot[k - 1] = value.clone();
        carry = value;
    }
    unreachable!()
}

/// Divisors of `|n|`, by trial division.  Intended for the desk-scale
/// coefficients this crate produces; factors above `10^6` are taken whole.
fn divisors(n: &BigInt) -> Vec<BigInt> {
    let mut n = n.abs();
    if n.is_zero() {
        return vec![];
    }
    let mut factors: Vec<(BigInt, u32)> = Vec::new();
    let mut d = BigInt::from(2u32);
    let cap = BigInt::from(1_000_000u64);
    while &d * &d <= n && d <= cap {
        let mut e = 0;
        while (&n % &d).is_zero() {
            n /= &d;
            e += 1;
        }
        if e > 0 {
            factors.push((d.clone(), e));
        }
        d += 1u32;
    }
    if n > BigInt::one() {
        factors.push((n, 1));
    }
    let mut divs = vec![BigInt::one()];
    for (p, e) in factors {
        let mut next = Vec::new();
        for d in &divs {
            let mut pk = BigInt::one();
            for _ in 0..=e {
                next.push(d * &pk);
                pk *= &p;
            }
        }
        divs = next;
    }
    divs.sort();
    divs.dedup();
    divs
}

fn rational_roots(coeffs: &[FieldElement]) -> RootSet {
    let field = FieldSpec::Rational;
    let mut work: Vec<BigRational> = coeffs
        .iter()
        .map(|c| c.as_rational().expect("rational coefficients").clone())
        .collect();
    let mut roots: Vec<BigRational> = Vec::new();

    // Factor out powers of x.
    let mut low = 0;
    while low < work.len() && work[low].is_zero() {
        low += 1;
    }
    if low > 0 {
        roots.push(BigRational::zero());
        work.drain(..low);
    }

    while work.len() > 1 {
        // Clear denominators and content.
        let mut den_lcm = BigInt::one();
        for c in &work {
            den_lcm = num_integer::lcm(den_lcm, c.denom().clone());
        }
        let ints: Vec<BigInt> = work
            .iter()
            .map(|c| (c * BigRational::from(den_lcm.clone())).to_integer())
            .collect();
        let a0 = &ints[0];
        let lead = ints.last().unwrap();
        let mut found = None;
        'search: for p in divisors(a0) {
            for q in divisors(lead) {
                if num_integer::gcd(p.clone(), q.clone()) != BigInt::one() {
                    continue;
                }
                for sign in [1i32, -1] {
                    let cand = BigRational::new(&p * BigInt::from(sign), q.clone());
                    let mut acc = BigRational::zero();
                    for k in (0..work.len()).rev() {
                        acc = acc * &cand + &work[k];
                    }
                    if acc.is_zero() {
                        found = Some(cand);
                        break 'search;
                    }
                }
            }
        }
        match found {
            Some(r) => {
                // Deflate with full multiplicity.
                loop {
                    let felts: Vec<FieldElement> = work
                        .iter()
                        .map(|c| FieldElement::Rational(c.clone()))
                        .collect();
                    let (quot, rem) =
                        synthetic_division(&field, &felts, &FieldElement::Rational(r.clone()));
                    if !field.is_zero(&rem) {
                        break;
                    }
                    work = quot
                        .into_iter()
                        .map(|c| c.as_rational().unwrap().clone())
                        .collect();
                    if work.len() <= 1 {
                        break;
                    }
                }
                roots.push(r);
            }
            None => break,
        }
    }

    roots.sort();
    roots.dedup();
    RootSet {
        roots: roots.into_iter().map(FieldElement::Rational).collect(),
        residual_degree: work.len().saturating_sub(1),
    }
}

fn complex_horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for k in (0..coeffs.len()).rev() {
        acc = acc * z + coeffs[k];
    }
    acc
}

fn relative_residual(coeffs: &[Complex64], z: Complex64) -> f64 {
    let mut scale = 0.0f64;
    let mut pw = 1.0f64;
    for c in coeffs {
        scale += c.norm() * pw;
        pw *= z.norm().max(1e-300);
    }
    complex_horner(coeffs, z).norm() / scale.max(f64::MIN_POSITIVE)
}

/// Aberth-Ehrlich simultaneous iteration.  Returns `None` when it fails to
/// converge to acceptable residuals.
fn aberth(coeffs: &[Complex64]) -> Option<Vec<Complex64>> {
    let n = coeffs.len() - 1;
    let lead = coeffs[n];
    let monic: Vec<Complex64> = coeffs.iter().map(|c| c / lead).collect();
    let deriv: Vec<Complex64> = (1..=n)
        .map(|k| monic[k] * Complex64::new(k as f64, 0.0))
        .collect();
    let radius = 1.0
        + monic[..n]
            .iter()
            .map(|c| c.norm())
            .fold(0.0f64, f64::max);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let angle = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4;
            Complex64::from_polar(radius, angle)
        })
        .collect();
    for _ in 0..200 {
        let mut max_step = 0.0f64;
        for i in 0..n {
            let p = complex_horner(&monic, z[i]);
            let dp = complex_horner(&deriv, z[i]);
            let w = if dp.norm() > 0.0 { p / dp } else { p };
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..n {
                if j != i {
                    let d = z[i] - z[j];
                    if d.norm() > 1e-300 {
                        s += d.inv();
                    }
                }
            }
            let denom = Complex64::new(1.0, 0.0) - w * s;
            let step = if denom.norm() > 1e-300 { w / denom } else { w };
            z[i] -= step;
            max_step = max_step.max(step.norm() / (1.0 + z[i].norm()));
        }
        if max_step < UPDATE_TOL {
            break;
        }
    }
    if z.iter().all(|&r| relative_residual(coeffs, r) < RESIDUAL_TOL) {
        Some(z)
    } else {
        None
    }
}

/// Eigenvalues of the companion matrix via complex shifted QR on the
/// Hessenberg form, followed by Newton polish on the polynomial.
fn companion_eigenvalues(coeffs: &[Complex64]) -> Result<Vec<Complex64>, ArithError> {
    let n = coeffs.len() - 1;
    let lead = coeffs[n];
    let mut h = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for i in 1..n {
        h[i][i - 1] = Complex64::new(1.0, 0.0);
    }
    for i in 0..n {
        h[i][n - 1] = -coeffs[i] / lead;
    }
    let mut eigs = Vec::with_capacity(n);
    let mut hi = n; // active block is rows/cols 0..hi
    let mut iters = 0usize;
    while hi > 0 {
        if hi == 1 {
            eigs.push(h[0][0]);
            hi = 0;
            continue;
        }
        // Deflation test on the last subdiagonal of the active block.
        let k = hi - 1;
        let small = 1e-14 * (h[k - 1][k - 1].norm() + h[k][k].norm() + 1e-300);
        if h[k][k - 1].norm() <= small {
            eigs.push(h[k][k]);
            hi -= 1;
            continue;
        }
        iters += 1;
        if iters > 200 * n {
            return Err(ArithError::RootsDiverged(n));
        }
        // Wilkinson shift from the trailing 2x2 of the active block.
        let a = h[k - 1][k - 1];
        let b = h[k - 1][k];
        let c = h[k][k - 1];
        let d = h[k][k];
        let tr = a + d;
        let det = a * d - b * c;
        let disc = (tr * tr - det * 4.0).sqrt();
        let l1 = (tr + disc) / 2.0;
        let l2 = (tr - disc) / 2.0;
        let shift = if (l1 - d).norm() < (l2 - d).norm() { l1 } else { l2 };
        for i in 0..hi {
            h[i][i] -= shift;
        }
        // QR by Givens rotations on the Hessenberg band, then RQ.
        let mut rot = Vec::with_capacity(hi - 1);
        for i in 0..hi - 1 {
            let x = h[i][i];
            let y = h[i + 1][i];
            let norm = (x.norm_sqr() + y.norm_sqr()).sqrt();
            let (cs, sn) = if norm == 0.0 {
                (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
            } else {
                (x.conj() / norm, y.conj() / norm)
            };
            for j in i..hi {
                let u = h[i][j];
                let v = h[i + 1][j];
                h[i][j] = cs * u + sn * v;
                h[i + 1][j] = -sn.conj() * u + cs.conj() * v;
            }
            rot.push((cs, sn));
        }
        for (i, (cs, sn)) in rot.iter().enumerate() {
            for r in 0..(i + 2).min(hi) {
                let u = h[r][i];
                let v = h[r][i + 1];
                h[r][i] = u * cs.conj() + v * sn.conj();
                h[r][i + 1] = -u * *sn + v * *cs;
            }
        }
        for i in 0..hi {
            h[i][i] += shift;
        }
    }
    // Newton polish against the actual polynomial.
    let deriv: Vec<Complex64> = (1..=n)
        .map(|k| coeffs[k] * Complex64::new(k as f64, 0.0))
        .collect();
    for e in eigs.iter_mut() {
        for _ in 0..8 {
            let p = complex_horner(coeffs, *e);
            let dp = complex_horner(&deriv, *e);
            if dp.norm() < 1e-300 {
                break;
            }
            let step = p / dp;
            *e -= step;
            if step.norm() < UPDATE_TOL * (1.0 + e.norm()) {
                break;
            }
        }
    }
    Ok(eigs)
}

fn complex_roots(coeffs: &[FieldElement]) -> Result<RootSet, ArithError> {
    let c: Vec<Complex64> = coeffs
        .iter()
        .map(|x| x.as_complex().expect("complex coefficients"))
        .collect();
    let n = c.len() - 1;
    let mut roots = match aberth(&c) {
        Some(r) => r,
        None => companion_eigenvalues(&c)?,
    };
    if roots
        .iter()
        .any(|&r| relative_residual(&c, r) > RESIDUAL_TOL)
    {
        return Err(ArithError::RootsDiverged(n));
    }
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then_with(|| a.im.total_cmp(&b.im)));
    Ok(RootSet {
        roots: roots.into_iter().map(FieldElement::Complex).collect(),
        residual_degree: 0,
    })
}

/// All complex `k`-th roots of `c`, sorted lexicographically by `(re, im)`.
pub fn kth_roots_complex(c: Complex64, k: u32) -> Vec<Complex64> {
    assert!(k >= 1);
    if c.norm() == 0.0 {
        return vec![Complex64::new(0.0, 0.0)];
    }
    let r = c.norm().powf(1.0 / k as f64);
    let theta = c.arg();
    let mut roots: Vec<Complex64> = (0..k)
        .map(|j| {
            Complex64::from_polar(
                r,
                (theta + 2.0 * std::f64::consts::PI * j as f64) / k as f64,
            )
        })
        .collect();
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then_with(|| a.im.total_cmp(&b.im)));
    roots
}

/// The rational `k`-th root of `r`, when one exists.
pub fn rational_kth_root(r: &BigRational, k: u32) -> Option<BigRational> {
    assert!(k >= 1);
    if r.is_zero() {
        return Some(BigRational::zero());
    }
    if r.is_negative() && k % 2 == 0 {
        return None;
    }
    let num = r.numer().abs();
    let den = r.denom().clone();
    let rn = num.nth_root(k);
    let rd = den.nth_root(k);
    if num_traits::pow(rn.clone(), k as usize) != num
        || num_traits::pow(rd.clone(), k as usize) != den
    {
        return None;
    }
    let sign = if r.is_negative() { -1 } else { 1 };
    Some(BigRational::new(rn * BigInt::from(sign), rd))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> FieldElement {
        FieldSpec::Rational
            .from_ratio(&BigInt::from(n), &BigInt::from(d))
            .unwrap()
    }

    #[test]
    fn prime_field_roots_by_scan() {
        // x^2 + 1 over F_5 has roots 2 and 3; over F_7 none.
        let f5 = FieldSpec::Prime(5);
        let coeffs = [f5.from_i64(1), f5.from_i64(0), f5.from_i64(1)];
        let rs = univariate_roots(&FieldSpec::Prime(5), &coeffs).unwrap();
        assert_eq!(rs.roots, vec![f5.from_i64(2), f5.from_i64(3)]);
        assert_eq!(rs.residual_degree, 0);

        let f7 = FieldSpec::Prime(7);
        let coeffs = [f7.from_i64(1), f7.from_i64(0), f7.from_i64(1)];
        let rs = univariate_roots(&FieldSpec::Prime(7), &coeffs).unwrap();
        assert!(rs.roots.is_empty());
        assert_eq!(rs.residual_degree, 2);
    }

    #[test]
    fn rational_roots_with_marker() {
        // 6x^2 - x - 2 = (3x - 2)(2x + 1): roots 2/3 and -1/2.
        let coeffs = [q(-2, 1), q(-1, 1), q(6, 1)];
        let rs = univariate_roots(&FieldSpec::Rational, &coeffs).unwrap();
        assert_eq!(rs.roots, vec![q(-1, 2), q(2, 3)]);
        assert_eq!(rs.residual_degree, 0);

        // x^3 - 2 has no rational root.
        let coeffs = [q(-2, 1), q(0, 1), q(0, 1), q(1, 1)];
        let rs = univariate_roots(&FieldSpec::Rational, &coeffs).unwrap();
        assert!(rs.roots.is_empty());
        assert_eq!(rs.residual_degree, 3);

        // x^2(x - 3): root 0 (double) and 3, nothing left over.
        let coeffs = [q(0, 1), q(0, 1), q(-3, 1), q(1, 1)];
        let rs = univariate_roots(&FieldSpec::Rational, &coeffs).unwrap();
        assert_eq!(rs.roots, vec![q(0, 1), q(3, 1)]);
        assert_eq!(rs.residual_degree, 0);
    }

    #[test]
    fn complex_roots_of_unity() {
        let f = FieldSpec::Complex;
        // x^4 - 1
        let coeffs = [
            f.from_i64(-1),
            f.from_i64(0),
            f.from_i64(0),
            f.from_i64(0),
            f.from_i64(1),
        ];
        let rs = univariate_roots(&f, &coeffs).unwrap();
        assert_eq!(rs.roots.len(), 4);
        let expected = [(-1.0, 0.0), (0.0, -1.0), (0.0, 1.0), (1.0, 0.0)];
        for (root, (re, im)) in rs.roots.iter().zip(expected) {
            let z = root.as_complex().unwrap();
            assert!((z.re - re).abs() < 1e-9 && (z.im - im).abs() < 1e-9);
        }
    }

    #[test]
    fn complex_high_degree_and_repeated() {
        let f = FieldSpec::Complex;
        // (x - 1)^3 (x + 2) = x^4 - x^3 - 5x^2 + 7x... expand honestly:
        // (x-1)^3 = x^3 - 3x^2 + 3x - 1; times (x+2):
        // x^4 - x^3 - 3x^2 + 5x - 2... recompute: x^4 +2x^3 -3x^3 -6x^2 +3x^2+6x -x -2
        // = x^4 - x^3 - 3x^2 + 5x - 2.
        let coeffs = [
            f.from_i64(-2),
            f.from_i64(5),
            f.from_i64(-3),
            f.from_i64(-1),
            f.from_i64(1),
        ];
        let rs = univariate_roots(&f, &coeffs).unwrap();
        assert_eq!(rs.roots.len(), 4);
        let z0 = rs.roots[0].as_complex().unwrap();
        assert!((z0.re + 2.0).abs() < 1e-7);
        for root in &rs.roots[1..] {
            let z = root.as_complex().unwrap();
            assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-4);
        }
    }

    #[test]
    fn companion_fallback_agrees_with_aberth() {
        let f = FieldSpec::Complex;
        let coeffs: Vec<FieldElement> = [3, -7, 2, 0, 5, 1]
            .iter()
            .map(|&n| f.from_i64(n))
            .collect();
        let c: Vec<Complex64> = coeffs.iter().map(|x| x.as_complex().unwrap()).collect();
        let mut a = aberth(&c).expect("aberth converges");
        let mut b = companion_eigenvalues(&c).unwrap();
        let key = |z: &Complex64| (z.re, z.im);
        a.sort_by(|x, y| key(x).0.total_cmp(&key(y).0).then(key(x).1.total_cmp(&key(y).1)));
        b.sort_by(|x, y| key(x).0.total_cmp(&key(y).0).then(key(x).1.total_cmp(&key(y).1)));
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).norm() < 1e-7, "aberth {:?} vs companion {:?}", x, y);
        }
    }

    #[test]
    fn integer_kth_roots() {
        let r = BigRational::new(BigInt::from(27), BigInt::from(8));
        assert_eq!(
            rational_kth_root(&r, 3).unwrap(),
            BigRational::new(BigInt::from(3), BigInt::from(2))
        );
        assert_eq!(rational_kth_root(&r, 2), None);
        let neg = BigRational::from(BigInt::from(-8));
        assert_eq!(
            rational_kth_root(&neg, 3).unwrap(),
            BigRational::from(BigInt::from(-2))
        );
        assert_eq!(rational_kth_root(&neg, 2), None);
    }

    #[test]
    fn complex_kth_roots_sorted() {
        let roots = kth_roots_complex(Complex64::new(16.0, 0.0), 4);
        assert_eq!(roots.len(), 4);
        for z in &roots {
            assert!((z.powu(4) - Complex64::new(16.0, 0.0)).norm() < 1e-9);
        }
        // Lexicographically smallest first.
        assert!(roots[0].re <= roots[1].re);
    }
}
