//! Field descriptors and scalar elements.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use super::ArithError;
use crate::ring::Ring;

/// Which coefficient field a computation runs over.
///
/// Parsed from `"Q"`, `"Fq:<prime>"` or `"C"`.  The descriptor doubles as the
/// ring object for its elements: all scalar arithmetic goes through methods
/// on `FieldSpec`, which check that operands actually belong to the field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldSpec {
    Rational,
    Prime(u64),
    Complex,
}

/// A scalar in one of the supported fields.
///
/// Rationals are kept in lowest terms with a positive denominator; prime
/// field values are residues in `[0, q)`; complex values are a pair of
/// doubles.  Equality is exact representation equality, which is what the
/// exact backends need; complex comparisons in verification code go through
/// residual norms instead.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldElement {
    Rational(BigRational),
    Prime { value: u64, modulus: u64 },
    Complex(Complex64),
}

/// Deterministic Miller-Rabin, valid for all `u64` inputs.
fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    let mul = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let powmod = |mut base: u64, mut exp: u64| {
        let mut acc = 1u64;
        base %= n;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = mul(acc, base);
            }
            base = mul(base, base);
            exp >>= 1;
        }
        acc
    };
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..s - 1 {
            x = mul(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Formats a double with 17 significant digits, enough to round-trip.
fn fmt_f64(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{:.16e}", x)
}

impl FieldSpec {
    /// Parses `"Q"`, `"Fq:<prime>"` or `"C"`.
    pub fn parse(text: &str) -> Result<Self, ArithError> {
        let t = text.trim();
        match t {
            "Q" => Ok(FieldSpec::Rational),
            "C" => Ok(FieldSpec::Complex),
            _ => {
                if let Some(rest) = t.strip_prefix("Fq:") {
                    let q: u64 = rest
                        .parse()
                        .map_err(|_| ArithError::UnknownField(text.to_string()))?;
                    if !is_prime_u64(q) {
                        return Err(ArithError::NotPrime(q));
                    }
                    Ok(FieldSpec::Prime(q))
                } else {
                    Err(ArithError::UnknownField(text.to_string()))
                }
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            FieldSpec::Rational => "Q".to_string(),
            FieldSpec::Prime(q) => format!("Fq:{}", q),
            FieldSpec::Complex => "C".to_string(),
        }
    }

    pub fn has_char_zero(&self) -> bool {
        !matches!(self, FieldSpec::Prime(_))
    }

    fn check<'a>(&self, a: &'a FieldElement) -> &'a FieldElement {
        debug_assert_eq!(
            &a.spec(),
            self,
            "element of {} used in {}",
            a.spec().name(),
            self.name()
        );
        a
    }

    pub fn from_i64(&self, x: i64) -> FieldElement {
        match self {
            FieldSpec::Rational => FieldElement::Rational(BigRational::from(BigInt::from(x))),
            FieldSpec::Prime(q) => {
                let q = *q;
                let r = ((x as i128 % q as i128) + q as i128) % q as i128;
                FieldElement::Prime {
                    value: r as u64,
                    modulus: q,
                }
            }
            FieldSpec::Complex => FieldElement::Complex(Complex64::new(x as f64, 0.0)),
        }
    }

    /// Builds `num/den` in this field; `den` must be nonzero in the field.
    pub fn from_ratio(&self, num: &BigInt, den: &BigInt) -> Result<FieldElement, ArithError> {
        match self {
            FieldSpec::Rational => {
                if den.is_zero() {
                    return Err(ArithError::ZeroInverse);
                }
                Ok(FieldElement::Rational(BigRational::new(
                    num.clone(),
                    den.clone(),
                )))
            }
            FieldSpec::Prime(q) => {
                let q_big = BigInt::from(*q);
                let red = |v: &BigInt| -> u64 {
                    let r = ((v % &q_big) + &q_big) % &q_big;
                    r.to_u64().expect("residue fits in u64")
                };
                let n = self.from_u64(red(num));
                let d = self.from_u64(red(den));
                self.mul_checked_inv(&n, &d)
            }
            FieldSpec::Complex => {
                let n = num.to_f64().unwrap_or(f64::NAN);
                let d = den.to_f64().unwrap_or(f64::NAN);
                if d == 0.0 {
                    return Err(ArithError::ZeroInverse);
                }
                Ok(FieldElement::Complex(Complex64::new(n / d, 0.0)))
            }
        }
    }

    fn from_u64(&self, x: u64) -> FieldElement {
        match self {
            FieldSpec::Prime(q) => FieldElement::Prime {
                value: x % q,
                modulus: *q,
            },
            _ => self.from_i64(x as i64),
        }
    }

    fn mul_checked_inv(
        &self,
        a: &FieldElement,
        b: &FieldElement,
    ) -> Result<FieldElement, ArithError> {
        Ok(self.mul(a, &self.inv(b)?))
    }

    /// Multiplicative inverse; errors with `ZeroInverse` on zero.
    pub fn inv(&self, a: &FieldElement) -> Result<FieldElement, ArithError> {
        if self.is_zero(self.check(a)) {
            return Err(ArithError::ZeroInverse);
        }
        Ok(match (self, a) {
            (FieldSpec::Rational, FieldElement::Rational(r)) => {
                FieldElement::Rational(r.recip())
            }
            (FieldSpec::Prime(q), FieldElement::Prime { value, .. }) => {
                let q = *q;
                let mul = |a: u64, b: u64| ((a as u128 * b as u128) % q as u128) as u64;
                let mut acc = 1u64;
                let mut base = *value;
                let mut exp = q - 2;
                while exp > 0 {
                    if exp & 1 == 1 {
                        acc = mul(acc, base);
                    }
                    base = mul(base, base);
                    exp >>= 1;
                }
                FieldElement::Prime {
                    value: acc,
                    modulus: q,
                }
            }
            (FieldSpec::Complex, FieldElement::Complex(z)) => FieldElement::Complex(z.inv()),
            _ => unreachable!("checked above"),
        })
    }

    /// Parses an element in this field's text format.
    ///
    /// Rationals read `"n"` or `"n/d"`; prime fields read an integer (any
    /// sign, reduced mod q); complex reads `"re+im i"` or a bare real part.
    pub fn parse_element(&self, text: &str) -> Result<FieldElement, ArithError> {
        let bad = || ArithError::BadElement {
            field: self.name(),
            text: text.to_string(),
        };
        let t = text.trim();
        match self {
            FieldSpec::Rational | FieldSpec::Prime(_) => {
                let (n, d) = match t.split_once('/') {
                    Some((n, d)) => (n.trim(), d.trim()),
                    None => (t, "1"),
                };
                let num: BigInt = n.parse().map_err(|_| bad())?;
                let den: BigInt = d.parse().map_err(|_| bad())?;
                self.from_ratio(&num, &den).map_err(|_| bad())
            }
            FieldSpec::Complex => {
                let body = t.strip_suffix('i').map(|s| s.trim_end()).unwrap_or(t);
                if body == t {
                    // No trailing i: a bare real part.
                    let re: f64 = t.parse().map_err(|_| bad())?;
                    return Ok(FieldElement::Complex(Complex64::new(re, 0.0)));
                }
                // Split at the sign that separates re from im, skipping a
                // leading sign and signs that belong to an exponent.
                let chars: Vec<char> = body.chars().collect();
                let mut split = None;
                for k in (1..chars.len()).rev() {
                    if (chars[k] == '+' || chars[k] == '-')
                        && chars[k - 1] != 'e'
                        && chars[k - 1] != 'E'
                    {
                        split = Some(k);
                        break;
                    }
                }
                let k = split.ok_or_else(bad)?;
                let re: f64 = body[..k].trim().parse().map_err(|_| bad())?;
                let im_text = body[k..].trim();
                let im: f64 = im_text.parse().map_err(|_| bad())?;
                Ok(FieldElement::Complex(Complex64::new(re, im)))
            }
        }
    }

    /// Canonical text form; inverse of `parse_element` on its image.
    pub fn format_element(&self, a: &FieldElement) -> String {
        match self.check(a) {
            FieldElement::Rational(r) => {
                if r.denom().is_one() {
                    r.numer().to_string()
                } else {
                    format!("{}/{}", r.numer(), r.denom())
                }
            }
            FieldElement::Prime { value, .. } => value.to_string(),
            FieldElement::Complex(z) => {
                let im = fmt_f64(z.im);
                let sign = if im.starts_with('-') { "" } else { "+" };
                format!("{}{}{} i", fmt_f64(z.re), sign, im)
            }
        }
    }

    /// Total order used wherever a deterministic "smallest" pick is needed:
    /// numeric for rationals, the representative in `[0, q)` for prime
    /// fields, lexicographic on `(re, im)` for complex values.
    pub fn canonical_cmp(&self, a: &FieldElement, b: &FieldElement) -> Ordering {
        match (self.check(a), self.check(b)) {
            (FieldElement::Rational(x), FieldElement::Rational(y)) => x.cmp(y),
            (FieldElement::Prime { value: x, .. }, FieldElement::Prime { value: y, .. }) => {
                x.cmp(y)
            }
            (FieldElement::Complex(x), FieldElement::Complex(y)) => x
                .re
                .total_cmp(&y.re)
                .then_with(|| x.im.total_cmp(&y.im)),
            _ => unreachable!("checked above"),
        }
    }

    /// Magnitude used for residual reporting; exact fields map to 0/1.
    pub fn abs_f64(&self, a: &FieldElement) -> f64 {
        match self.check(a) {
            FieldElement::Rational(r) => {
                if r.is_zero() {
                    0.0
                } else {
                    1.0
                }
            }
            FieldElement::Prime { value, .. } => {
                if *value == 0 {
                    0.0
                } else {
                    1.0
                }
            }
            FieldElement::Complex(z) => z.norm(),
        }
    }
}

impl Ring for FieldSpec {
    type Elem = FieldElement;

    fn field(&self) -> &FieldSpec {
        self
    }

    fn zero(&self) -> FieldElement {
        self.from_i64(0)
    }

    fn one(&self) -> FieldElement {
        self.from_i64(1)
    }

    fn is_zero(&self, a: &FieldElement) -> bool {
        match self.check(a) {
            FieldElement::Rational(r) => r.is_zero(),
            FieldElement::Prime { value, .. } => *value == 0,
            FieldElement::Complex(z) => z.re == 0.0 && z.im == 0.0,
        }
    }

    fn add(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        match (self.check(a), self.check(b)) {
            (FieldElement::Rational(x), FieldElement::Rational(y)) => {
                FieldElement::Rational(x + y)
            }
            (FieldElement::Prime { value: x, .. }, FieldElement::Prime { value: y, .. }) => {
                let q = match self {
                    FieldSpec::Prime(q) => *q,
                    _ => unreachable!(),
                };
                FieldElement::Prime {
                    value: ((*x as u128 + *y as u128) % q as u128) as u64,
                    modulus: q,
                }
            }
            (FieldElement::Complex(x), FieldElement::Complex(y)) => FieldElement::Complex(x + y),
            _ => unreachable!("checked above"),
        }
    }

    fn neg(&self, a: &FieldElement) -> FieldElement {
        match self.check(a) {
            FieldElement::Rational(r) => FieldElement::Rational(-r),
            FieldElement::Prime { value, modulus } => FieldElement::Prime {
                value: if *value == 0 { 0 } else { modulus - value },
                modulus: *modulus,
            },
            FieldElement::Complex(z) => FieldElement::Complex(-z),
        }
    }

    fn mul(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        match (self.check(a), self.check(b)) {
            (FieldElement::Rational(x), FieldElement::Rational(y)) => {
                FieldElement::Rational(x * y)
            }
            (FieldElement::Prime { value: x, .. }, FieldElement::Prime { value: y, .. }) => {
                let q = match self {
                    FieldSpec::Prime(q) => *q,
                    _ => unreachable!(),
                };
                FieldElement::Prime {
                    value: ((*x as u128 * *y as u128) % q as u128) as u64,
                    modulus: q,
                }
            }
            (FieldElement::Complex(x), FieldElement::Complex(y)) => FieldElement::Complex(x * y),
            _ => unreachable!("checked above"),
        }
    }

    fn scalar_mul(&self, c: &FieldElement, a: &FieldElement) -> FieldElement {
        self.mul(c, a)
    }
}

impl FieldElement {
    /// The field this element belongs to.
    pub fn spec(&self) -> FieldSpec {
        match self {
            FieldElement::Rational(_) => FieldSpec::Rational,
            FieldElement::Prime { modulus, .. } => FieldSpec::Prime(*modulus),
            FieldElement::Complex(_) => FieldSpec::Complex,
        }
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            FieldElement::Rational(r) => Some(r),
            _ => None,
        }
    }

    pub fn as_complex(&self) -> Option<Complex64> {
        match self {
            FieldElement::Complex(z) => Some(*z),
            _ => None,
        }
    }

    /// Signed magnitude hint used when picking "generic" fixing values.
    pub fn is_one(&self) -> bool {
        match self {
            FieldElement::Rational(r) => r.is_one(),
            FieldElement::Prime { value, .. } => *value == 1,
            FieldElement::Complex(z) => z.re == 1.0 && z.im == 0.0,
        }
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.spec().format_element(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_field_specs() {
        assert_eq!(FieldSpec::parse("Q").unwrap(), FieldSpec::Rational);
        assert_eq!(FieldSpec::parse("Fq:7").unwrap(), FieldSpec::Prime(7));
        assert_eq!(FieldSpec::parse("C").unwrap(), FieldSpec::Complex);
        assert!(matches!(
            FieldSpec::parse("Fq:6"),
            Err(ArithError::NotPrime(6))
        ));
        assert!(FieldSpec::parse("R").is_err());
    }

    #[test]
    fn primality_check_agrees_with_trial_division() {
        let trial = |n: u64| {
            if n < 2 {
                return false;
            }
            let mut d = 2;
            while d * d <= n {
                if n % d == 0 {
                    return false;
                }
                d += 1;
            }
            true
        };
        for n in 0..2000u64 {
            assert_eq!(is_prime_u64(n), trial(n), "disagree at {}", n);
        }
    }

    #[test]
    fn rational_round_trip_and_normalization() {
        let f = FieldSpec::Rational;
        let x = f.parse_element("10/-4").unwrap();
        assert_eq!(f.format_element(&x), "-5/2");
        let y = f.parse_element("-5/2").unwrap();
        assert_eq!(x, y);
        assert_eq!(f.format_element(&f.parse_element("7/1").unwrap()), "7");
    }

    #[test]
    fn prime_field_inverse() {
        let f = FieldSpec::Prime(101);
        for v in 1..101i64 {
            let a = f.from_i64(v);
            let inv = f.inv(&a).unwrap();
            assert!(f.mul(&a, &inv).is_one());
        }
        assert_eq!(f.inv(&f.zero()), Err(ArithError::ZeroInverse));
    }

    #[test]
    fn complex_round_trip() {
        let f = FieldSpec::Complex;
        let z = FieldElement::Complex(Complex64::new(-1.5, 2.25e-3));
        let s = f.format_element(&z);
        assert_eq!(f.parse_element(&s).unwrap(), z);
        let bare = f.parse_element("2.5").unwrap();
        assert_eq!(bare, FieldElement::Complex(Complex64::new(2.5, 0.0)));
    }

    #[test]
    fn field_axioms_on_sampled_rationals() {
        let f = FieldSpec::Rational;
        let vals: Vec<FieldElement> = (-4..=4)
            .flat_map(|n| (1..=3).map(move |d| (n, d)))
            .map(|(n, d)| {
                f.from_ratio(&BigInt::from(n), &BigInt::from(d)).unwrap()
            })
            .collect();
        for a in &vals {
            for b in &vals {
                assert_eq!(f.add(a, b), f.add(b, a));
                assert_eq!(f.mul(a, b), f.mul(b, a));
                for c in &vals {
                    assert_eq!(f.mul(a, &f.add(b, c)), f.add(&f.mul(a, b), &f.mul(a, c)));
                }
                if !f.is_zero(b) {
                    let q = f.mul(a, &f.inv(b).unwrap());
                    assert_eq!(f.mul(&q, b), *a);
                }
            }
        }
    }
}
