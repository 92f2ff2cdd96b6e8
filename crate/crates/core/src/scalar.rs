//! Exact scalars for tower geometry.
//!
//! Heights, widths, spacers and times live in ℚ(√2) by default. A value is
//! stored as `a + b√2` with `a, b` rational; plain rationals are the `b = 0`
//! case. Rationals stay in machine `i128` form while they fit and silently
//! move to big integers when they do not, so the fast path covers the common
//! desk-scale schedules without giving up exactness on deep ones.
//!
//! A float fallback exists for explicit opt-in. Float comparisons use a
//! relative tolerance of `1e-12`.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// Relative tolerance used by float-mode comparisons.
pub const FLOAT_REL_TOL: f64 = 1e-12;

// ---------------------------------------------------------------------------
// Rational
// ---------------------------------------------------------------------------

/// Canonical rational number: reduced, positive denominator, and stored in
/// `Small` form whenever numerator and denominator both fit in `i128`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Rational {
    Small(i128, i128),
    Big(BigRational),
}

fn gcd_i128(a: i128, b: i128) -> i128 {
    a.gcd(&b)
}

impl Rational {
    pub fn zero() -> Self {
        Rational::Small(0, 1)
    }

    pub fn one() -> Self {
        Rational::Small(1, 1)
    }

    pub fn from_integer(n: i128) -> Self {
        Rational::Small(n, 1)
    }

    /// Builds `num/den`. Panics if `den == 0`.
    pub fn new(num: i128, den: i128) -> Self {
        assert!(den != 0, "rational with zero denominator");
        Self::small_canonical(num, den).unwrap_or_else(|| Self::from_big(BigRational::new(num.into(), den.into())))
    }

    fn small_canonical(num: i128, den: i128) -> Option<Self> {
        if num == i128::MIN || den == i128::MIN {
            return None;
        }
        let (mut n, mut d) = if den < 0 { (-num, -den) } else { (num, den) };
        if n == 0 {
            return Some(Rational::Small(0, 1));
        }
        if d == 1 {
            return Some(Rational::Small(n, 1));
        }
        // Dyadic denominators dominate tower arithmetic; reduce them by shifts.
        if d & (d - 1) == 0 {
            let k = n.trailing_zeros().min(d.trailing_zeros());
            return Some(Rational::Small(n >> k, d >> k));
        }
        let g = gcd_i128(n, d);
        if g != 1 {
            n /= g;
            d /= g;
        }
        Some(Rational::Small(n, d))
    }

    fn from_big(r: BigRational) -> Self {
        // `BigRational` keeps itself reduced with a positive denominator.
        match (r.numer().to_i128(), r.denom().to_i128()) {
            (Some(n), Some(d)) if n != i128::MIN && d != i128::MIN => Rational::Small(n, d),
            _ => Rational::Big(r),
        }
    }

    fn to_big(&self) -> BigRational {
        match self {
            Rational::Small(n, d) => BigRational::new_raw(BigInt::from(*n), BigInt::from(*d)),
            Rational::Big(r) => r.clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Rational::Small(0, _))
    }

    pub fn is_integer(&self) -> bool {
        match self {
            Rational::Small(_, d) => *d == 1,
            Rational::Big(r) => r.is_integer(),
        }
    }

    pub fn signum(&self) -> i32 {
        match self {
            Rational::Small(n, _) => n.signum() as i32,
            Rational::Big(r) => {
                if r.is_positive() {
                    1
                } else if r.is_negative() {
                    -1
                } else {
                    0
                }
            }
        }
    }

    pub fn abs(&self) -> Self {
        if self.signum() < 0 {
            -self
        } else {
            self.clone()
        }
    }

    /// Larger of the numerator and denominator bit lengths.
    pub fn bits(&self) -> u64 {
        match self {
            Rational::Small(n, d) => {
                let bn = 128 - n.unsigned_abs().leading_zeros() as u64;
                let bd = 128 - d.unsigned_abs().leading_zeros() as u64;
                bn.max(bd)
            }
            Rational::Big(r) => r.numer().bits().max(r.denom().bits()),
        }
    }

    pub fn numer_denom(&self) -> (BigInt, BigInt) {
        match self {
            Rational::Small(n, d) => (BigInt::from(*n), BigInt::from(*d)),
            Rational::Big(r) => (r.numer().clone(), r.denom().clone()),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Rational::Small(n, d) => {
                if *d == 1 {
                    *n as f64
                } else if n.unsigned_abs() < (1u128 << 53) && *d < (1i128 << 53) {
                    *n as f64 / *d as f64
                } else {
                    self.to_big().to_f64().unwrap_or(f64::NAN)
                }
            }
            Rational::Big(r) => r.to_f64().unwrap_or(f64::NAN),
        }
    }

    /// Nearest rational with a power-of-two denominator of at most 2^1074;
    /// exact for every finite double.
    pub fn from_f64(x: f64) -> Option<Self> {
        BigRational::from_float(x).map(Self::from_big)
    }

    /// Largest integer not exceeding `self`.
    pub fn floor(&self) -> BigInt {
        match self {
            Rational::Small(n, d) => BigInt::from(n.div_floor(d)),
            Rational::Big(r) => r.floor().to_integer(),
        }
    }

    pub fn recip(&self) -> Self {
        match self {
            Rational::Small(n, d) => {
                assert!(*n != 0, "reciprocal of zero");
                Self::new(*d, *n)
            }
            Rational::Big(r) => Self::from_big(r.recip()),
        }
    }

    fn add_ref(&self, o: &Self) -> Self {
        if let (Rational::Small(a, b), Rational::Small(c, d)) = (self, o) {
            if let Some(r) = small_add(*a, *b, *c, *d) {
                return r;
            }
        }
        Self::from_big(self.to_big() + o.to_big())
    }

    fn mul_ref(&self, o: &Self) -> Self {
        if let (Rational::Small(a, b), Rational::Small(c, d)) = (self, o) {
            if let Some(r) = small_mul(*a, *b, *c, *d) {
                return r;
            }
        }
        Self::from_big(self.to_big() * o.to_big())
    }
}

fn small_add(a: i128, b: i128, c: i128, d: i128) -> Option<Rational> {
    if b == 1 && d == 1 {
        return a.checked_add(c).filter(|s| *s != i128::MIN).map(|s| Rational::Small(s, 1));
    }
    // Both dyadic: the larger denominator is the common one.
    if b & (b - 1) == 0 && d & (d - 1) == 0 {
        let (num, den) = if b >= d {
            (a.checked_add(c.checked_mul(b / d)?)?, b)
        } else {
            (a.checked_mul(d / b)?.checked_add(c)?, d)
        };
        return Rational::small_canonical(num, den);
    }
    if b == d {
        let s = a.checked_add(c)?;
        return Rational::small_canonical(s, b);
    }
    let g = gcd_i128(b, d);
    let bg = b / g;
    let dg = d / g;
    let num = a.checked_mul(dg)?.checked_add(c.checked_mul(bg)?)?;
    let den = bg.checked_mul(d)?;
    Rational::small_canonical(num, den)
}

fn small_mul(a: i128, b: i128, c: i128, d: i128) -> Option<Rational> {
    if a == 0 || c == 0 {
        return Some(Rational::zero());
    }
    let g1 = gcd_i128(a, d);
    let g2 = gcd_i128(c, b);
    let num = (a / g1).checked_mul(c / g2)?;
    let den = (b / g2).checked_mul(d / g1)?;
    Rational::small_canonical(num, den)
}

impl Ord for Rational {
    fn cmp(&self, o: &Self) -> Ordering {
        if let (Rational::Small(a, b), Rational::Small(c, d)) = (self, o) {
            if b == d {
                return a.cmp(c);
            }
            if let (Ok(a), Ok(b), Ok(c), Ok(d)) =
                (i64::try_from(*a), i64::try_from(*b), i64::try_from(*c), i64::try_from(*d))
            {
                return (a as i128 * d as i128).cmp(&(c as i128 * b as i128));
            }
            if let (Some(l), Some(r)) = (a.checked_mul(*d), c.checked_mul(*b)) {
                return l.cmp(&r);
            }
        }
        self.to_big().cmp(&o.to_big())
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        match self {
            Rational::Small(n, d) if *n != i128::MIN => Rational::Small(-n, *d),
            other => Rational::from_big(-other.to_big()),
        }
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        -&self
    }
}

macro_rules! rational_binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl $trait<&Rational> for &Rational {
            type Output = Rational;
            fn $method(self, o: &Rational) -> Rational {
                let f: fn(&Rational, &Rational) -> Rational = $body;
                f(self, o)
            }
        }
        impl $trait<Rational> for Rational {
            type Output = Rational;
            fn $method(self, o: Rational) -> Rational {
                (&self).$method(&o)
            }
        }
    };
}

rational_binop!(Add, add, |a, b| a.add_ref(b));
rational_binop!(Sub, sub, |a, b| a.add_ref(&-b));
rational_binop!(Mul, mul, |a, b| a.mul_ref(b));
rational_binop!(Div, div, |a, b| a.mul_ref(&b.recip()));

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rational::Small(n, d) => write!(f, "{n}/{d}"),
            Rational::Big(r) => write!(f, "{}/{}", r.numer(), r.denom()),
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_integer(n as i128)
    }
}

impl FromStr for Rational {
    type Err = Error;

    /// Accepts `p`, `p/q` and plain decimals such as `-0.125`.
    fn from_str(s: &str) -> Result<Self, Error> {
        let err = |reason: &str| Error::Parse { input: s.to_string(), reason: reason.to_string() };
        let t = s.trim();
        if t.is_empty() {
            return Err(err("empty"));
        }
        if let Some((p, q)) = t.split_once('/') {
            let p: BigInt = p.trim().parse().map_err(|_| err("bad numerator"))?;
            let q: BigInt = q.trim().parse().map_err(|_| err("bad denominator"))?;
            if q.is_zero() {
                return Err(err("zero denominator"));
            }
            return Ok(Rational::from_big(BigRational::new(p, q)));
        }
        if let Some((int, frac)) = t.split_once('.') {
            let neg = int.trim_start().starts_with('-');
            let int_digits = int.trim_start_matches(['-', '+']);
            if !frac.chars().all(|c| c.is_ascii_digit()) || !int_digits.chars().all(|c| c.is_ascii_digit()) {
                return Err(err("bad decimal"));
            }
            let digits = format!("{int_digits}{frac}");
            let mut num: BigInt =
                if digits.is_empty() { BigInt::zero() } else { digits.parse().map_err(|_| err("bad decimal"))? };
            if neg {
                num = -num;
            }
            let den = num_traits::pow(BigInt::from(10), frac.len());
            return Ok(Rational::from_big(BigRational::new(num, den)));
        }
        let n: BigInt = t.parse().map_err(|_| err("bad integer"))?;
        Ok(Rational::from_big(BigRational::from_integer(n)))
    }
}

// ---------------------------------------------------------------------------
// ℚ(√2)
// ---------------------------------------------------------------------------

/// `a + b√2` with rational coefficients. Equality is coefficient-wise, which
/// coincides with real equality because √2 is irrational.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QuadSqrt2 {
    pub a: Rational,
    pub b: Rational,
}

impl QuadSqrt2 {
    pub fn rational(a: Rational) -> Self {
        QuadSqrt2 { a, b: Rational::zero() }
    }

    pub fn new(a: Rational, b: Rational) -> Self {
        QuadSqrt2 { a, b }
    }

    pub fn zero() -> Self {
        Self::rational(Rational::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    /// Sign of the real number `a + b√2`, decided exactly.
    pub fn signum(&self) -> i32 {
        let sa = self.a.signum();
        let sb = self.b.signum();
        if sb == 0 {
            return sa;
        }
        if sa == 0 || sa == sb {
            return sb;
        }
        // Opposite signs: compare a² with 2b².
        let a2 = &self.a * &self.a;
        let b2 = &(&self.b * &self.b) * &Rational::from_integer(2);
        match a2.cmp(&b2) {
            Ordering::Greater => sa,
            Ordering::Less => sb,
            Ordering::Equal => unreachable!("a^2 = 2b^2 has no nonzero rational solution"),
        }
    }

    /// Conjugate `a - b√2`.
    pub fn conjugate(&self) -> Self {
        QuadSqrt2 { a: self.a.clone(), b: -&self.b }
    }

    /// Field norm `a² - 2b²`.
    pub fn norm(&self) -> Rational {
        &(&self.a * &self.a) - &(&(&self.b * &self.b) * &Rational::from_integer(2))
    }

    pub fn bits(&self) -> u64 {
        self.a.bits().max(self.b.bits())
    }

    /// Real value as a double. Opposite-sign coefficients go through the
    /// norm so the result keeps full relative precision.
    pub fn to_f64(&self) -> f64 {
        if self.b.is_zero() {
            return self.a.to_f64();
        }
        let sa = self.a.signum();
        let sb = self.b.signum();
        if sa == 0 || sa == sb {
            return self.a.to_f64() + self.b.to_f64() * std::f64::consts::SQRT_2;
        }
        let conj = self.a.to_f64() - self.b.to_f64() * std::f64::consts::SQRT_2;
        self.norm().to_f64() / conj
    }

    pub fn recip(&self) -> Self {
        let n = self.norm();
        assert!(!n.is_zero(), "reciprocal of zero");
        let c = self.conjugate();
        QuadSqrt2 { a: &c.a / &n, b: &c.b / &n }
    }

    pub fn floor(&self) -> BigInt {
        if self.b.is_zero() {
            return self.a.floor();
        }
        // Start from the float estimate and correct exactly.
        let approx = self.to_f64().floor();
        let mut k = BigInt::from(approx as i64);
        loop {
            let kq = QuadSqrt2::rational(Rational::from_big(BigRational::from_integer(k.clone())));
            if (self - &kq).signum() < 0 {
                k -= 1;
                continue;
            }
            let k1 = QuadSqrt2::rational(Rational::from_big(BigRational::from_integer(&k + 1)));
            if (self - &k1).signum() >= 0 {
                k += 1;
                continue;
            }
            return k;
        }
    }
}

impl Ord for QuadSqrt2 {
    fn cmp(&self, o: &Self) -> Ordering {
        if self.b.is_zero() && o.b.is_zero() {
            return self.a.cmp(&o.a);
        }
        match (self - o).signum() {
            1 => Ordering::Greater,
            -1 => Ordering::Less,
            _ => Ordering::Equal,
        }
    }
}

impl PartialOrd for QuadSqrt2 {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Add<&QuadSqrt2> for &QuadSqrt2 {
    type Output = QuadSqrt2;
    fn add(self, o: &QuadSqrt2) -> QuadSqrt2 {
        if self.b.is_zero() && o.b.is_zero() {
            return QuadSqrt2::rational(&self.a + &o.a);
        }
        QuadSqrt2 { a: &self.a + &o.a, b: &self.b + &o.b }
    }
}

impl Sub<&QuadSqrt2> for &QuadSqrt2 {
    type Output = QuadSqrt2;
    fn sub(self, o: &QuadSqrt2) -> QuadSqrt2 {
        if self.b.is_zero() && o.b.is_zero() {
            return QuadSqrt2::rational(&self.a - &o.a);
        }
        QuadSqrt2 { a: &self.a - &o.a, b: &self.b - &o.b }
    }
}

impl Mul<&QuadSqrt2> for &QuadSqrt2 {
    type Output = QuadSqrt2;
    fn mul(self, o: &QuadSqrt2) -> QuadSqrt2 {
        if self.b.is_zero() && o.b.is_zero() {
            return QuadSqrt2::rational(&self.a * &o.a);
        }
        let two = Rational::from_integer(2);
        let a = &(&self.a * &o.a) + &(&two * &(&self.b * &o.b));
        let b = &(&self.a * &o.b) + &(&self.b * &o.a);
        QuadSqrt2 { a, b }
    }
}

impl Div<&QuadSqrt2> for &QuadSqrt2 {
    type Output = QuadSqrt2;
    fn div(self, o: &QuadSqrt2) -> QuadSqrt2 {
        if o.b.is_zero() {
            return QuadSqrt2 { a: &self.a / &o.a, b: &self.b / &o.a };
        }
        self * &o.recip()
    }
}

impl Neg for &QuadSqrt2 {
    type Output = QuadSqrt2;
    fn neg(self) -> QuadSqrt2 {
        QuadSqrt2 { a: -&self.a, b: -&self.b }
    }
}

impl fmt::Display for QuadSqrt2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            return write!(f, "{}", self.a);
        }
        if self.b.signum() < 0 {
            write!(f, "{}-{}*sqrt2", self.a, -&self.b)
        } else {
            write!(f, "{}+{}*sqrt2", self.a, self.b)
        }
    }
}

impl fmt::Debug for QuadSqrt2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for QuadSqrt2 {
    type Err = Error;

    /// Accepts `p/q`, `p/q*sqrt2`, `sqrt2`, and `p/q+p'/q'*sqrt2` (also with
    /// `-` or `+-` joining the two parts).
    fn from_str(s: &str) -> Result<Self, Error> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let err = |reason: &str| Error::Parse { input: s.to_string(), reason: reason.to_string() };
        let Some(stripped) = t.strip_suffix("sqrt2") else {
            return Ok(QuadSqrt2::rational(t.parse()?));
        };
        let coeff_part = stripped.strip_suffix('*').unwrap_or(stripped);
        // Split off the rational part at the last sign that is not leading.
        let split = coeff_part.char_indices().rev().find(|&(i, c)| (c == '+' || c == '-') && i > 0).map(|(i, _)| i);
        let (a_str, b_str) = match split {
            Some(i) => {
                let (a, b) = coeff_part.split_at(i);
                // "+-3/2" → a = "1/1+", handled by trimming the trailing '+'.
                let a = a.strip_suffix('+').unwrap_or(a);
                (a.to_string(), b.to_string())
            }
            None => (String::from("0"), coeff_part.to_string()),
        };
        let b_str = b_str.strip_prefix('+').unwrap_or(&b_str).to_string();
        let b: Rational = match b_str.as_str() {
            "" => Rational::one(),
            "-" => -Rational::one(),
            other => other.parse().map_err(|_| err("bad sqrt2 coefficient"))?,
        };
        let a: Rational =
            if a_str.is_empty() { Rational::zero() } else { a_str.parse().map_err(|_| err("bad rational part"))? };
        Ok(QuadSqrt2 { a, b })
    }
}

// ---------------------------------------------------------------------------
// Scalar
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ScalarMode {
    #[default]
    ExactRational,
    QuadraticSqrt2,
    Float,
}

/// Number used for every height, width, offset, spacer and time.
#[derive(Clone)]
pub enum Scalar {
    Exact(QuadSqrt2),
    Float(f64),
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar::Exact(QuadSqrt2::zero())
    }

    pub fn one() -> Self {
        Self::int(1)
    }

    pub fn int(n: i64) -> Self {
        Scalar::Exact(QuadSqrt2::rational(Rational::from(n)))
    }

    pub fn ratio(p: i64, q: i64) -> Self {
        Scalar::Exact(QuadSqrt2::rational(Rational::new(p as i128, q as i128)))
    }

    /// `a + b√2` from two rationals given as `(num, den)` pairs.
    pub fn quad(a: (i64, i64), b: (i64, i64)) -> Self {
        Scalar::Exact(QuadSqrt2::new(Rational::new(a.0 as i128, a.1 as i128), Rational::new(b.0 as i128, b.1 as i128)))
    }

    pub fn sqrt2() -> Self {
        Self::quad((0, 1), (1, 1))
    }

    pub fn float(x: f64) -> Self {
        Scalar::Float(x)
    }

    pub fn from_rational(r: Rational) -> Self {
        Scalar::Exact(QuadSqrt2::rational(r))
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Exact(_))
    }

    pub fn as_exact(&self) -> Option<&QuadSqrt2> {
        match self {
            Scalar::Exact(q) => Some(q),
            Scalar::Float(_) => None,
        }
    }

    /// True when the value needs √2 (nonzero irrational part).
    pub fn involves_sqrt2(&self) -> bool {
        matches!(self, Scalar::Exact(q) if !q.is_rational())
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(q) => q.to_f64(),
            Scalar::Float(x) => *x,
        }
    }

    /// Same value converted to float mode.
    pub fn to_float(&self) -> Scalar {
        Scalar::Float(self.to_f64())
    }

    pub fn signum(&self) -> i32 {
        match self {
            Scalar::Exact(q) => q.signum(),
            Scalar::Float(x) => {
                if *x > 0.0 {
                    1
                } else if *x < 0.0 {
                    -1
                } else {
                    0
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Exact(q) => q.is_zero(),
            Scalar::Float(x) => *x == 0.0,
        }
    }

    pub fn abs(&self) -> Scalar {
        if self.signum() < 0 {
            -self
        } else {
            self.clone()
        }
    }

    pub fn bits(&self) -> u64 {
        match self {
            Scalar::Exact(q) => q.bits(),
            Scalar::Float(_) => 64,
        }
    }

    pub fn max(&self, o: &Scalar) -> Scalar {
        if self.total_cmp(o) == Ordering::Less {
            o.clone()
        } else {
            self.clone()
        }
    }

    pub fn min(&self, o: &Scalar) -> Scalar {
        if self.total_cmp(o) == Ordering::Greater {
            o.clone()
        } else {
            self.clone()
        }
    }

    /// Ordering used for sorting and two-pointer sweeps. Exact values compare
    /// exactly; any comparison involving a float compares with tolerance.
    pub fn total_cmp(&self, o: &Scalar) -> Ordering {
        match (self, o) {
            (Scalar::Exact(a), Scalar::Exact(b)) => a.cmp(b),
            _ => {
                let (x, y) = (self.to_f64(), o.to_f64());
                let scale = x.abs().max(y.abs());
                if (x - y).abs() <= FLOAT_REL_TOL * scale {
                    Ordering::Equal
                } else {
                    x.partial_cmp(&y).unwrap_or(Ordering::Equal)
                }
            }
        }
    }

    pub fn lt(&self, o: &Scalar) -> bool {
        self.total_cmp(o) == Ordering::Less
    }

    /// Largest integer `k` with `k <= self`.
    pub fn floor(&self) -> BigInt {
        match self {
            Scalar::Exact(q) => q.floor(),
            Scalar::Float(x) => BigInt::from(x.floor() as i64),
        }
    }

    /// Nearest integer, ties rounded up; `None` when it does not fit an `i64`.
    pub fn round_i64(&self) -> Option<i64> {
        (self + &Scalar::ratio(1, 2)).floor().to_i64()
    }

    /// `self` converted to the given mode; fails when √2 is needed in exact
    /// rational mode.
    pub fn in_mode(&self, mode: ScalarMode) -> Result<Scalar, String> {
        match (mode, self) {
            (ScalarMode::Float, s) => Ok(s.to_float()),
            (ScalarMode::ExactRational, Scalar::Exact(q)) if !q.is_rational() => {
                Err(format!("value {q} needs sqrt2 but the schedule is exact-rational"))
            }
            (_, Scalar::Float(x)) => {
                Rational::from_f64(*x).map(Scalar::from_rational).ok_or_else(|| format!("non-finite value {x}"))
            }
            (_, s) => Ok(s.clone()),
        }
    }
}

impl PartialEq for Scalar {
    fn eq(&self, o: &Scalar) -> bool {
        self.total_cmp(o) == Ordering::Equal
    }
}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, o: &Scalar) -> Option<Ordering> {
        Some(self.total_cmp(o))
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(q) => write!(f, "{q}"),
            Scalar::Float(x) => write!(f, "{x}"),
        }
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Hash for Scalar {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            Scalar::Exact(q) => q.hash(state),
            Scalar::Float(x) => x.to_bits().hash(state),
        }
    }
}

macro_rules! scalar_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&Scalar> for &Scalar {
            type Output = Scalar;
            fn $method(self, o: &Scalar) -> Scalar {
                match (self, o) {
                    (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a $op b),
                    _ => Scalar::Float(self.to_f64() $op o.to_f64()),
                }
            }
        }
        impl $trait<Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, o: Scalar) -> Scalar {
                (&self) $op (&o)
            }
        }
        impl $trait<&Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, o: &Scalar) -> Scalar {
                (&self) $op o
            }
        }
        impl $trait<Scalar> for &Scalar {
            type Output = Scalar;
            fn $method(self, o: Scalar) -> Scalar {
                self $op (&o)
            }
        }
    };
}

scalar_binop!(Add, add, +);
scalar_binop!(Sub, sub, -);
scalar_binop!(Mul, mul, *);
scalar_binop!(Div, div, /);

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Exact(q) => Scalar::Exact(-q),
            Scalar::Float(x) => Scalar::Float(-x),
        }
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

impl From<i64> for Scalar {
    fn from(n: i64) -> Self {
        Scalar::int(n)
    }
}

impl FromStr for Scalar {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        Ok(Scalar::Exact(s.parse()?))
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        match self {
            Scalar::Exact(q) => ser.serialize_str(&q.to_string()),
            Scalar::Float(x) => ser.serialize_f64(*x),
        }
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Scalar;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an exact scalar string like \"3/4+1/2*sqrt2\" or a number")
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<Scalar, E> {
                v.parse().map_err(E::custom)
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<Scalar, E> {
                Ok(Scalar::int(v))
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<Scalar, E> {
                i64::try_from(v).map(Scalar::int).map_err(|_| E::custom("integer out of range"))
            }
            fn visit_f64<E: serde::de::Error>(self, v: f64) -> Result<Scalar, E> {
                Ok(Scalar::Float(v))
            }
        }
        de.deserialize_any(V)
    }
}

/// Exact square root of a non-negative integer when it is a perfect square.
pub fn exact_isqrt(n: u64) -> Option<u64> {
    let r = (n as f64).sqrt().round() as u64;
    (r.saturating_sub(1)..=r + 1).find(|&c| c.checked_mul(c) == Some(n))
}

impl Zero for Rational {
    fn zero() -> Self {
        Rational::zero()
    }
    fn is_zero(&self) -> bool {
        Rational::is_zero(self)
    }
}

impl One for Rational {
    fn one() -> Self {
        Rational::one()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(s: &str) -> QuadSqrt2 {
        s.parse().unwrap()
    }

    #[test]
    fn small_rationals_reduce() {
        assert_eq!(Rational::new(6, -4), Rational::new(-3, 2));
        assert_eq!(Rational::new(0, 7), Rational::zero());
        assert_eq!(format!("{}", Rational::new(10, 4)), "5/2");
    }

    #[test]
    fn overflow_promotes_and_demotes() {
        let big = Rational::from_integer(i128::MAX / 2);
        let prod = &big * &Rational::from_integer(8);
        assert!(matches!(prod, Rational::Big(_)));
        let back = &prod / &Rational::from_integer(8);
        assert_eq!(back, big);
        assert!(matches!(back, Rational::Small(..)));
    }

    #[test]
    fn parse_forms() {
        assert_eq!(q("3/4"), QuadSqrt2::rational(Rational::new(3, 4)));
        assert_eq!(q("sqrt2"), QuadSqrt2::new(Rational::zero(), Rational::one()));
        assert_eq!(q("2*sqrt2"), QuadSqrt2::new(Rational::zero(), Rational::from_integer(2)));
        assert_eq!(q("1/2+3/4*sqrt2"), QuadSqrt2::new(Rational::new(1, 2), Rational::new(3, 4)));
        assert_eq!(q("1/2-3/4*sqrt2"), QuadSqrt2::new(Rational::new(1, 2), Rational::new(-3, 4)));
        assert_eq!(q("1/2+-3/4*sqrt2"), q("1/2-3/4*sqrt2"));
        assert_eq!(q("-1/2-sqrt2"), QuadSqrt2::new(Rational::new(-1, 2), -Rational::one()));
        assert_eq!(q("0.125"), QuadSqrt2::rational(Rational::new(1, 8)));
        assert_eq!(q("-2.5"), QuadSqrt2::rational(Rational::new(-5, 2)));
        assert!("1/0".parse::<QuadSqrt2>().is_err());
        assert!("abc".parse::<QuadSqrt2>().is_err());
    }

    #[test]
    fn sign_of_near_cancellation() {
        // 41/29 is a convergent of √2 from below, 99/70 and 577/408 from above.
        assert_eq!(q("-41/29+sqrt2").signum(), 1);
        assert_eq!(q("-99/70+sqrt2").signum(), -1);
        assert_eq!(q("577/408-sqrt2").signum(), 1);
    }

    #[test]
    fn to_f64_keeps_precision_under_cancellation() {
        // 665857 - 470832√2 ≈ 7.5e-7, with coefficients of size ~1e6.
        let x = q("665857-470832*sqrt2");
        let expect = 1.0 / (665857.0 + 470832.0 * std::f64::consts::SQRT_2);
        assert!((x.to_f64() - expect).abs() < 1e-18);
    }

    #[test]
    fn float_comparisons_use_relative_tolerance() {
        let a = Scalar::float(1.0);
        let b = Scalar::float(1.0 + 1e-14);
        assert_eq!(a, b);
        assert!(Scalar::float(1.0).lt(&Scalar::float(1.0 + 1e-9)));
    }

    #[test]
    fn mode_conversion() {
        assert!(Scalar::sqrt2().in_mode(ScalarMode::ExactRational).is_err());
        assert!(Scalar::sqrt2().in_mode(ScalarMode::QuadraticSqrt2).is_ok());
        let f = Scalar::ratio(1, 4).in_mode(ScalarMode::Float).unwrap();
        assert!(matches!(f, Scalar::Float(x) if x == 0.25));
    }

    #[test]
    fn floor_of_quadratic() {
        assert_eq!(q("sqrt2").floor(), BigInt::from(1));
        assert_eq!(q("-sqrt2").floor(), BigInt::from(-2));
        assert_eq!(q("7/2").floor(), BigInt::from(3));
        assert_eq!(q("3-2*sqrt2").floor(), BigInt::from(0));
    }

    #[test]
    fn serde_round_trip() {
        let s = Scalar::quad((1, 3), (-2, 5));
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(j, "\"1/3-2/5*sqrt2\"");
        let back: Scalar = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s);
        let f: Scalar = serde_json::from_str("0.5").unwrap();
        assert!(matches!(f, Scalar::Float(_)));
        let i: Scalar = serde_json::from_str("3").unwrap();
        assert!(i.is_exact());
    }

    #[test]
    fn isqrt() {
        assert_eq!(exact_isqrt(4096), Some(64));
        assert_eq!(exact_isqrt(17), None);
        assert_eq!(exact_isqrt(0), Some(0));
    }

    fn arb_quad() -> impl Strategy<Value = QuadSqrt2> {
        (-1000i64..1000, 1i64..50, -1000i64..1000, 1i64..50).prop_map(|(a, b, c, d)| {
            QuadSqrt2::new(Rational::new(a as i128, b as i128), Rational::new(c as i128, d as i128))
        })
    }

    proptest! {
        #[test]
        fn field_identities(x in arb_quad(), y in arb_quad()) {
            let s = &(&x + &y) - &y;
            prop_assert_eq!(&s, &x);
            if !y.is_zero() {
                let back = &(&x * &y) / &y;
                prop_assert_eq!(&back, &x);
            }
        }

        #[test]
        fn ordering_matches_embedding(x in arb_quad(), y in arb_quad()) {
            let (fx, fy) = (x.to_f64(), y.to_f64());
            if (fx - fy).abs() > 1e-9 {
                prop_assert_eq!(x.cmp(&y), fx.partial_cmp(&fy).unwrap());
            }
        }

        #[test]
        fn display_parse_round_trip(x in arb_quad()) {
            let back: QuadSqrt2 = x.to_string().parse().unwrap();
            prop_assert_eq!(back, x);
        }
    }
}
