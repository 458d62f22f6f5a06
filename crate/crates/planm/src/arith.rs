//! Exact arithmetic in ℚ[φ] and the tie-broken weight order.
//!
//! Every comparison made by the schedulers and the verifier goes through
//! [`golden_sign`], so no decision ever depends on floating point.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseNumberError {
    #[error("malformed number {0:?}")]
    Malformed(String),
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
}

pub fn rational(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn integer(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `"num/den"` or a bare integer.
pub fn parse_rational(text: &str) -> Result<Rational, ParseNumberError> {
    let text = text.trim();
    let malformed = || ParseNumberError::Malformed(text.to_string());
    let (numer, denom) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text, "1"),
    };
    let numer: BigInt = numer.parse().map_err(|_| malformed())?;
    let denom: BigInt = denom.parse().map_err(|_| malformed())?;
    if denom.is_zero() {
        return Err(ParseNumberError::ZeroDenominator(text.to_string()));
    }
    Ok(Rational::new(numer, denom))
}

/// Always `"num/den"`, even for integers, so files stay uniform.
pub fn format_rational(x: &Rational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

pub(crate) fn cmp_rational(x: &Rational, y: &Rational) -> Ordering {
    if x.denom() == y.denom() {
        x.numer().cmp(y.numer())
    } else {
        x.cmp(y)
    }
}

/// An element `a + b·φ` of ℚ[φ], with φ = (1+√5)/2.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GoldenNumber {
    pub a: Rational,
    pub b: Rational,
}

impl GoldenNumber {
    pub fn new(a: Rational, b: Rational) -> Self {
        GoldenNumber { a, b }
    }

    pub fn zero() -> Self {
        GoldenNumber::new(Rational::zero(), Rational::zero())
    }

    pub fn one() -> Self {
        GoldenNumber::from(Rational::one())
    }

    pub fn phi() -> Self {
        GoldenNumber::new(Rational::zero(), Rational::one())
    }

    /// φ⁻¹ = φ − 1.
    pub fn inv_phi() -> Self {
        GoldenNumber::new(-Rational::one(), Rational::one())
    }

    pub fn from_int(n: i64) -> Self {
        GoldenNumber::from(integer(n))
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    pub fn sign(&self) -> i32 {
        golden_sign(self)
    }

    /// The Galois conjugate `a + b·(1−φ)`.
    pub fn conjugate(&self) -> Self {
        GoldenNumber::new(&self.a + &self.b, -self.b.clone())
    }

    /// `(a + bφ)(a + b(1−φ)) = a² + ab − b²`, always rational.
    pub fn norm(&self) -> Rational {
        &self.a * &self.a + &self.a * &self.b - &self.b * &self.b
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn recip(&self) -> Option<Self> {
        let n = self.norm();
        if n.is_zero() {
            return None;
        }
        let c = self.conjugate();
        Some(GoldenNumber::new(c.a / &n, c.b / &n))
    }

    pub fn pow(&self, exp: u32) -> Self {
        let mut acc = GoldenNumber::one();
        for _ in 0..exp {
            acc = golden_mul(&acc, self);
        }
        acc
    }

    /// `(a + bφ)φ = b + (a + b)φ`.
    pub fn mul_phi(&self) -> Self {
        GoldenNumber::new(self.b.clone(), &self.a + &self.b)
    }

    pub fn scale(&self, k: &Rational) -> Self {
        GoldenNumber::new(&self.a * k, &self.b * k)
    }

    /// Display-only approximation.
    pub fn to_f64(&self) -> f64 {
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        self.a.to_f64().unwrap_or(f64::NAN) + self.b.to_f64().unwrap_or(f64::NAN) * phi
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

/// Sign of `a + b·φ`, decided exactly.
///
/// With `s = 2a + b` the number equals `(s + b√5) / 2`. When `s` and `b`
/// agree in sign the answer is immediate; otherwise the larger of `s²` and
/// `5b²` decides.
pub fn golden_sign(x: &GoldenNumber) -> i32 {
    // scale by the positive product of denominators and work in ℤ[φ]
    let a = x.a.numer() * x.b.denom();
    let b = x.b.numer() * x.a.denom();
    integer_golden_sign(&a, &b)
}

/// Sign of `a + bφ` for integers `a`, `b`.
fn integer_golden_sign(a: &BigInt, b: &BigInt) -> i32 {
    let sb = bigint_sign(b);
    if sb == 0 {
        return bigint_sign(a);
    }
    let s: BigInt = a * 2 + b;
    let ss = bigint_sign(&s);
    if ss == 0 || ss == sb {
        return sb;
    }
    // φ = (1+√5)/2, so 2(a+bφ) = s + b√5 with opposite signs on the two terms
    match (&s * &s).cmp(&(b * b * 5)) {
        Ordering::Greater => ss,
        Ordering::Less => sb,
        // s² = 5b² has no nonzero integer solution
        Ordering::Equal => 0,
    }
}

fn bigint_sign(x: &BigInt) -> i32 {
    match x.sign() {
        Sign::Minus => -1,
        Sign::NoSign => 0,
        Sign::Plus => 1,
    }
}

/// Sign of `x − y` without building the reduced difference.
fn golden_cmp(x: &GoldenNumber, y: &GoldenNumber) -> Ordering {
    let cross = |p: &Rational, q: &Rational| p.numer() * q.denom() - q.numer() * p.denom();
    let da = x.a.denom() * y.a.denom();
    let db = x.b.denom() * y.b.denom();
    let a = cross(&x.a, &y.a) * &db;
    let b = cross(&x.b, &y.b) * &da;
    integer_golden_sign(&a, &b).cmp(&0)
}

// Integer fast paths: `Ratio` reduces by a gcd after every operation,
// which dominates when almost every value is an integer.

fn radd(x: &Rational, y: &Rational) -> Rational {
    if x.is_integer() && y.is_integer() {
        Rational::from_integer(x.numer() + y.numer())
    } else {
        x + y
    }
}

fn rsub(x: &Rational, y: &Rational) -> Rational {
    if x.is_integer() && y.is_integer() {
        Rational::from_integer(x.numer() - y.numer())
    } else {
        x - y
    }
}

fn rmul(x: &Rational, y: &Rational) -> Rational {
    if x.is_integer() && y.is_integer() {
        Rational::from_integer(x.numer() * y.numer())
    } else {
        x * y
    }
}

/// `(a₁+b₁φ)(a₂+b₂φ) = (a₁a₂ + b₁b₂) + (a₁b₂ + a₂b₁ + b₁b₂)φ`.
pub fn golden_mul(x: &GoldenNumber, y: &GoldenNumber) -> GoldenNumber {
    if x.b.is_zero() {
        return GoldenNumber::new(rmul(&x.a, &y.a), rmul(&x.a, &y.b));
    }
    if y.b.is_zero() {
        return GoldenNumber::new(rmul(&x.a, &y.a), rmul(&y.a, &x.b));
    }
    let bb = rmul(&x.b, &y.b);
    GoldenNumber::new(
        radd(&rmul(&x.a, &y.a), &bb),
        radd(&radd(&rmul(&x.a, &y.b), &rmul(&y.a, &x.b)), &bb),
    )
}

impl From<Rational> for GoldenNumber {
    fn from(a: Rational) -> Self {
        GoldenNumber::new(a, Rational::zero())
    }
}

impl From<i64> for GoldenNumber {
    fn from(n: i64) -> Self {
        GoldenNumber::from_int(n)
    }
}

impl Ord for GoldenNumber {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.b == other.b {
            return cmp_rational(&self.a, &other.a);
        }
        golden_cmp(self, other)
    }
}

impl PartialOrd for GoldenNumber {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for &GoldenNumber {
    type Output = GoldenNumber;
    fn add(self, rhs: &GoldenNumber) -> GoldenNumber {
        GoldenNumber::new(radd(&self.a, &rhs.a), radd(&self.b, &rhs.b))
    }
}

impl Add for GoldenNumber {
    type Output = GoldenNumber;
    fn add(self, rhs: GoldenNumber) -> GoldenNumber {
        &self + &rhs
    }
}

impl AddAssign<&GoldenNumber> for GoldenNumber {
    fn add_assign(&mut self, rhs: &GoldenNumber) {
        self.a = radd(&self.a, &rhs.a);
        self.b = radd(&self.b, &rhs.b);
    }
}

impl Sub for &GoldenNumber {
    type Output = GoldenNumber;
    fn sub(self, rhs: &GoldenNumber) -> GoldenNumber {
        GoldenNumber::new(rsub(&self.a, &rhs.a), rsub(&self.b, &rhs.b))
    }
}

impl Sub for GoldenNumber {
    type Output = GoldenNumber;
    fn sub(self, rhs: GoldenNumber) -> GoldenNumber {
        &self - &rhs
    }
}

impl SubAssign<&GoldenNumber> for GoldenNumber {
    fn sub_assign(&mut self, rhs: &GoldenNumber) {
        self.a = rsub(&self.a, &rhs.a);
        self.b = rsub(&self.b, &rhs.b);
    }
}

impl Neg for GoldenNumber {
    type Output = GoldenNumber;
    fn neg(self) -> GoldenNumber {
        GoldenNumber::new(-self.a, -self.b)
    }
}

impl Mul for &GoldenNumber {
    type Output = GoldenNumber;
    fn mul(self, rhs: &GoldenNumber) -> GoldenNumber {
        golden_mul(self, rhs)
    }
}

impl Mul for GoldenNumber {
    type Output = GoldenNumber;
    fn mul(self, rhs: GoldenNumber) -> GoldenNumber {
        golden_mul(&self, &rhs)
    }
}

impl Div<&Rational> for &GoldenNumber {
    type Output = GoldenNumber;
    fn div(self, rhs: &Rational) -> GoldenNumber {
        GoldenNumber::new(&self.a / rhs, &self.b / rhs)
    }
}

impl fmt::Display for GoldenNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}*phi", format_rational(&self.a), format_rational(&self.b))
    }
}

impl FromStr for GoldenNumber {
    type Err = ParseNumberError;

    /// Accepts `"a+b*phi"` as produced by `Display`, or a plain rational.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let text = text.trim();
        let Some(body) = text.strip_suffix("*phi") else {
            return parse_rational(text).map(GoldenNumber::from);
        };
        // the separator is the first '+' that is not a leading sign of b
        let split = body
            .char_indices()
            .skip(1)
            .find(|&(_, c)| c == '+')
            .map(|(i, _)| i)
            .ok_or_else(|| ParseNumberError::Malformed(text.to_string()))?;
        let a = parse_rational(&body[..split])?;
        let b = parse_rational(&body[split + 1..])?;
        Ok(GoldenNumber::new(a, b))
    }
}

/// A weight with a total order: base value first, then an arrival tiebreak,
/// then the sequence of infinitesimal bumps it received.
///
/// A bumped weight copies the weight it was raised to and appends a fresh
/// counter value, so it sits strictly above that weight and strictly below
/// everything that was above it.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TaggedWeight {
    pub value: GoldenNumber,
    pub tiebreak: i64,
    pub bumps: Vec<u64>,
}

/// Tiebreak of the implicit zero-weight filler packets at the horizon.
pub const FILL_TIEBREAK: i64 = i64::MIN / 2;
/// Materialized virtual packets that are not in the plan rank below the filler.
pub const SPARE_VIRTUAL_TIEBREAK: i64 = i64::MIN + 1;

impl TaggedWeight {
    pub fn new(value: GoldenNumber, tiebreak: i64) -> Self {
        TaggedWeight { value, tiebreak, bumps: Vec::new() }
    }

    pub fn original(value: Rational, tiebreak: i64) -> Self {
        TaggedWeight::new(GoldenNumber::from(value), tiebreak)
    }

    /// The weight of the filler packets that keep the horizon slot tight.
    pub fn fill() -> Self {
        TaggedWeight::new(GoldenNumber::zero(), FILL_TIEBREAK)
    }

    pub fn is_fill(&self) -> bool {
        self.tiebreak == FILL_TIEBREAK && self.bumps.is_empty() && self.value.is_zero()
    }

    /// `self` plus an infinitesimal, ordered by `fresh`.
    pub fn bumped(&self, fresh: u64) -> Self {
        let mut w = self.clone();
        w.bumps.push(fresh);
        w
    }
}

impl Ord for TaggedWeight {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value
            .cmp(&other.value)
            .then(self.tiebreak.cmp(&other.tiebreak))
            .then_with(|| self.bumps.cmp(&other.bumps))
    }
}

impl PartialOrd for TaggedWeight {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for TaggedWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.value.is_rational() {
            write!(f, "{}", format_rational(&self.value.a))?;
        } else {
            write!(f, "{}", self.value)?;
        }
        write!(f, "@{}", self.tiebreak)?;
        for b in &self.bumps {
            write!(f, ".{b}")?;
        }
        Ok(())
    }
}

impl FromStr for TaggedWeight {
    type Err = ParseNumberError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let malformed = || ParseNumberError::Malformed(text.to_string());
        let (value, tag) = text.rsplit_once('@').ok_or_else(malformed)?;
        let mut parts = tag.split('.');
        let tiebreak = parts
            .next()
            .and_then(|s| s.parse::<i64>().ok())
            .ok_or_else(malformed)?;
        let bumps = parts
            .map(|s| s.parse::<u64>().map_err(|_| malformed()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(TaggedWeight { value: value.parse()?, tiebreak, bumps })
    }
}

/// Per-run source of fresh tiebreaks for bumped weights.
#[derive(Clone, Debug, Default)]
pub struct TiebreakCounter {
    last: u64,
}

impl TiebreakCounter {
    pub fn new() -> Self {
        TiebreakCounter::default()
    }

    pub fn fresh_tiebreak(&mut self) -> u64 {
        self.last += 1;
        self.last
    }
}
