//! Exact scalars: Gaussian rationals and Laurent polynomials in a free symbol `pi`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{CheckedAdd, CheckedMul, CheckedSub, One, Signed, ToPrimitive, Zero};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Rational number with an `i64` fast path and a big-integer fallback.
#[derive(Clone, Debug)]
pub enum Q {
    Small(Ratio<i64>),
    Big(BigRational),
}

fn to_big(r: &Ratio<i64>) -> BigRational {
    BigRational::new_raw(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

impl Q {
    pub fn zero() -> Q {
        Q::Small(Ratio::zero())
    }

    pub fn one() -> Q {
        Q::Small(Ratio::one())
    }

    pub fn int(n: i64) -> Q {
        Q::Small(Ratio::from_integer(n))
    }

    /// `p/q`; panics on `q == 0`.
    pub fn new(p: i64, q: i64) -> Q {
        Q::Small(Ratio::new(p, q))
    }

    fn demote(b: BigRational) -> Q {
        match (b.numer().to_i64(), b.denom().to_i64()) {
            (Some(n), Some(d)) => Q::Small(Ratio::new_raw(n, d)),
            _ => Q::Big(b),
        }
    }

    fn big(&self) -> BigRational {
        match self {
            Q::Small(r) => to_big(r),
            Q::Big(b) => b.clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Q::Small(r) => r.is_zero(),
            Q::Big(b) => b.is_zero(),
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Q::Small(r) => r.is_one(),
            Q::Big(_) => false,
        }
    }

    pub fn is_integer(&self) -> bool {
        match self {
            Q::Small(r) => r.is_integer(),
            Q::Big(b) => b.is_integer(),
        }
    }

    pub fn signum(&self) -> i32 {
        match self {
            Q::Small(r) => r.numer().signum() as i32,
            Q::Big(b) => {
                if b.is_positive() {
                    1
                } else if b.is_negative() {
                    -1
                } else {
                    0
                }
            }
        }
    }

    pub fn recip(&self) -> Q {
        assert!(!self.is_zero(), "reciprocal of zero");
        match self {
            Q::Small(r) => {
                if *r.numer() == i64::MIN {
                    Q::demote(to_big(r).recip())
                } else {
                    Q::Small(r.recip())
                }
            }
            Q::Big(b) => Q::demote(b.recip()),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Q::Small(r) => *r.numer() as f64 / *r.denom() as f64,
            Q::Big(b) => {
                let n = b.numer().to_f64().unwrap_or(f64::NAN);
                let d = b.denom().to_f64().unwrap_or(f64::NAN);
                n / d
            }
        }
    }

    pub fn pow(&self, e: u32) -> Q {
        let mut out = Q::one();
        for _ in 0..e {
            out = &out * self;
        }
        out
    }

    /// Parses `p`, `-p` or `p/q`.
    pub fn parse(s: &str) -> Result<Q> {
        let t = s.trim();
        let bad = || Error::Parse(format!("bad rational '{s}'"));
        let (n, d) = match t.split_once('/') {
            Some((a, b)) => (a.trim(), b.trim()),
            None => (t, "1"),
        };
        let n: BigInt = n.parse().map_err(|_| bad())?;
        let d: BigInt = d.parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        Ok(Q::demote(BigRational::new(n, d)))
    }
}

impl PartialEq for Q {
    fn eq(&self, other: &Q) -> bool {
        match (self, other) {
            (Q::Small(a), Q::Small(b)) => a == b,
            _ => self.big() == other.big(),
        }
    }
}

impl Eq for Q {}

impl PartialOrd for Q {
    fn partial_cmp(&self, other: &Q) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Q {
    fn cmp(&self, other: &Q) -> Ordering {
        match (self, other) {
            (Q::Small(a), Q::Small(b)) => a.cmp(b),
            _ => self.big().cmp(&other.big()),
        }
    }
}

impl fmt::Display for Q {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Q::Small(r) => write!(f, "{r}"),
            Q::Big(b) => write!(f, "{b}"),
        }
    }
}

macro_rules! q_binop {
    ($tr:ident, $m:ident, $chk:ident) => {
        impl<'a> $tr<&'a Q> for &'a Q {
            type Output = Q;
            fn $m(self, rhs: &Q) -> Q {
                if let (Q::Small(a), Q::Small(b)) = (self, rhs) {
                    if let Some(r) = a.$chk(b) {
                        return Q::Small(r);
                    }
                }
                Q::demote(self.big().$m(rhs.big()))
            }
        }
        impl $tr for Q {
            type Output = Q;
            fn $m(self, rhs: Q) -> Q {
                (&self).$m(&rhs)
            }
        }
    };
}

q_binop!(Add, add, checked_add);
q_binop!(Sub, sub, checked_sub);
q_binop!(Mul, mul, checked_mul);

impl<'a> Div<&'a Q> for &'a Q {
    type Output = Q;
    fn div(self, rhs: &Q) -> Q {
        self * &rhs.recip()
    }
}

impl Div for Q {
    type Output = Q;
    fn div(self, rhs: Q) -> Q {
        &self / &rhs
    }
}

impl Neg for &Q {
    type Output = Q;
    fn neg(self) -> Q {
        match self {
            Q::Small(r) if *r.numer() != i64::MIN => Q::Small(-*r),
            _ => Q::demote(-self.big()),
        }
    }
}

impl Neg for Q {
    type Output = Q;
    fn neg(self) -> Q {
        -&self
    }
}

impl From<i64> for Q {
    fn from(n: i64) -> Q {
        Q::int(n)
    }
}

/// Gaussian rational `re + im i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct C {
    pub re: Q,
    pub im: Q,
}

impl C {
    pub fn zero() -> C {
        C { re: Q::zero(), im: Q::zero() }
    }

    pub fn one() -> C {
        C { re: Q::one(), im: Q::zero() }
    }

    pub fn i() -> C {
        C { re: Q::zero(), im: Q::one() }
    }

    pub fn real(q: Q) -> C {
        C { re: q, im: Q::zero() }
    }

    pub fn new(re: Q, im: Q) -> C {
        C { re, im }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> C {
        C { re: self.re.clone(), im: -&self.im }
    }

    /// `i^k` for any integer `k`.
    pub fn i_pow(k: i64) -> C {
        match k.rem_euclid(4) {
            0 => C::one(),
            1 => C::i(),
            2 => C::real(Q::int(-1)),
            _ => C { re: Q::zero(), im: Q::int(-1) },
        }
    }

    pub fn recip(&self) -> C {
        let n = &(&self.re * &self.re) + &(&self.im * &self.im);
        C { re: &self.re / &n, im: -(&self.im / &n) }
    }

    pub fn scale(&self, q: &Q) -> C {
        C { re: &self.re * q, im: &self.im * q }
    }
}

impl<'a> Add<&'a C> for &'a C {
    type Output = C;
    fn add(self, o: &C) -> C {
        C { re: &self.re + &o.re, im: &self.im + &o.im }
    }
}

impl<'a> Sub<&'a C> for &'a C {
    type Output = C;
    fn sub(self, o: &C) -> C {
        C { re: &self.re - &o.re, im: &self.im - &o.im }
    }
}

impl<'a> Mul<&'a C> for &'a C {
    type Output = C;
    fn mul(self, o: &C) -> C {
        if self.im.is_zero() && o.im.is_zero() {
            return C::real(&self.re * &o.re);
        }
        C {
            re: &(&self.re * &o.re) - &(&self.im * &o.im),
            im: &(&self.re * &o.im) + &(&self.im * &o.re),
        }
    }
}

impl Neg for &C {
    type Output = C;
    fn neg(self) -> C {
        C { re: -&self.re, im: -&self.im }
    }
}

impl fmt::Display for C {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} + {} i)", self.re, self.im)
    }
}

/// Element of `Q(i)[pi, pi^-1]`, stored as sorted `(exponent, coefficient)` pairs.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Scalar(SmallVec<[(i32, C); 1]>);

impl Scalar {
    pub fn zero() -> Scalar {
        Scalar(SmallVec::new())
    }

    pub fn one() -> Scalar {
        Scalar::from_c(C::one())
    }

    pub fn i() -> Scalar {
        Scalar::from_c(C::i())
    }

    pub fn int(n: i64) -> Scalar {
        Scalar::from_q(Q::int(n))
    }

    pub fn rat(p: i64, q: i64) -> Scalar {
        Scalar::from_q(Q::new(p, q))
    }

    pub fn from_q(q: Q) -> Scalar {
        Scalar::from_c(C::real(q))
    }

    pub fn from_c(c: C) -> Scalar {
        Scalar::monomial(0, c)
    }

    /// `c * pi^k`.
    pub fn monomial(k: i32, c: C) -> Scalar {
        let mut v = SmallVec::new();
        if !c.is_zero() {
            v.push((k, c));
        }
        Scalar(v)
    }

    /// `pi^k`.
    pub fn pi_pow(k: i32) -> Scalar {
        Scalar::monomial(k, C::one())
    }

    pub fn sign(s: i32) -> Scalar {
        if s >= 0 {
            Scalar::one()
        } else {
            Scalar::int(-1)
        }
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.0.len() == 1 && self.0[0].0 == 0 && self.0[0].1 == C::one()
    }

    pub fn terms(&self) -> &[(i32, C)] {
        &self.0
    }

    /// Returns the value if it is a rational constant (no `pi`, no `i`).
    pub fn as_rational(&self) -> Option<Q> {
        match self.0.as_slice() {
            [] => Some(Q::zero()),
            [(0, c)] if c.im.is_zero() => Some(c.re.clone()),
            _ => None,
        }
    }

    pub fn as_c(&self) -> Option<C> {
        match self.0.as_slice() {
            [] => Some(C::zero()),
            [(0, c)] => Some(c.clone()),
            _ => None,
        }
    }

    pub fn scale_q(&self, q: &Q) -> Scalar {
        if q.is_zero() {
            return Scalar::zero();
        }
        Scalar(self.0.iter().map(|(k, c)| (*k, c.scale(q))).collect())
    }

    pub fn scale_c(&self, z: &C) -> Scalar {
        if z.is_zero() {
            return Scalar::zero();
        }
        Scalar(self.0.iter().map(|(k, c)| (*k, c * z)).collect())
    }

    /// Multiplies by `pi^k`.
    pub fn shift_pi(&self, k: i32) -> Scalar {
        Scalar(self.0.iter().map(|(e, c)| (e + k, c.clone())).collect())
    }

    pub fn conj(&self) -> Scalar {
        Scalar(self.0.iter().map(|(k, c)| (*k, c.conj())).collect())
    }

    /// Inverse of a single-term scalar.
    pub fn recip_monomial(&self) -> Option<Scalar> {
        match self.0.as_slice() {
            [(k, c)] => Some(Scalar::monomial(-k, c.recip())),
            _ => None,
        }
    }

    pub fn pow(&self, e: u32) -> Scalar {
        let mut out = Scalar::one();
        for _ in 0..e {
            out = &out * self;
        }
        out
    }

    /// Numerical value with `pi` substituted.
    pub fn to_complex(&self) -> (f64, f64) {
        let mut re = 0.0;
        let mut im = 0.0;
        for (k, c) in &self.0 {
            let p = std::f64::consts::PI.powi(*k);
            re += c.re.to_f64() * p;
            im += c.im.to_f64() * p;
        }
        (re, im)
    }

    fn add_term(&mut self, k: i32, c: &C, negate: bool) {
        match self.0.binary_search_by(|(e, _)| e.cmp(&k)) {
            Ok(pos) => {
                let nc = if negate { &self.0[pos].1 - c } else { &self.0[pos].1 + c };
                if nc.is_zero() {
                    self.0.remove(pos);
                } else {
                    self.0[pos].1 = nc;
                }
            }
            Err(pos) => {
                if !c.is_zero() {
                    self.0.insert(pos, (k, if negate { -c } else { c.clone() }));
                }
            }
        }
    }

    /// Parses the canonical rendering, e.g. `(1/2 + 0 i) pi^-1 + (3 + 0 i)`, or a plain rational.
    pub fn parse(s: &str) -> Result<Scalar> {
        let t = s.trim();
        if t.is_empty() {
            return Err(Error::Parse("empty scalar".into()));
        }
        if !t.contains('(') {
            return Ok(Scalar::from_q(Q::parse(t)?));
        }
        let mut out = Scalar::zero();
        let mut rest = t;
        loop {
            rest = rest.trim_start();
            let open = rest
                .strip_prefix('(')
                .ok_or_else(|| Error::Parse(format!("bad scalar '{s}'")))?;
            let close = open
                .find(')')
                .ok_or_else(|| Error::Parse(format!("bad scalar '{s}'")))?;
            let inner = &open[..close];
            let (re, im) = inner
                .split_once(" + ")
                .ok_or_else(|| Error::Parse(format!("bad scalar '{s}'")))?;
            let im = im
                .trim()
                .strip_suffix('i')
                .ok_or_else(|| Error::Parse(format!("bad scalar '{s}'")))?;
            let c = C::new(Q::parse(re)?, Q::parse(im)?);
            rest = open[close + 1..].trim_start();
            let mut k = 0;
            if let Some(r) = rest.strip_prefix("pi^") {
                let end = r.find(|ch: char| ch.is_whitespace()).unwrap_or(r.len());
                k = r[..end]
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad exponent in '{s}'")))?;
                rest = &r[end..];
            }
            out.add_term(k, &c, false);
            rest = rest.trim_start();
            if rest.is_empty() {
                break;
            }
            rest = rest
                .strip_prefix('+')
                .ok_or_else(|| Error::Parse(format!("bad scalar '{s}'")))?;
        }
        Ok(out)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "0");
        }
        for (n, (k, c)) in self.0.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}")?;
            if *k != 0 {
                write!(f, " pi^{k}")?;
            }
        }
        Ok(())
    }
}

impl<'a> Add<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn add(self, o: &Scalar) -> Scalar {
        let mut out = self.clone();
        out += o;
        out
    }
}

impl<'a> Sub<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn sub(self, o: &Scalar) -> Scalar {
        let mut out = self.clone();
        out -= o;
        out
    }
}

impl<'a> Mul<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn mul(self, o: &Scalar) -> Scalar {
        let mut out = Scalar::zero();
        for (k1, c1) in &self.0 {
            for (k2, c2) in &o.0 {
                out.add_term(k1 + k2, &(c1 * c2), false);
            }
        }
        out
    }
}

impl Add for Scalar {
    type Output = Scalar;
    fn add(mut self, o: Scalar) -> Scalar {
        self += &o;
        self
    }
}

impl Sub for Scalar {
    type Output = Scalar;
    fn sub(mut self, o: Scalar) -> Scalar {
        self -= &o;
        self
    }
}

impl Mul for Scalar {
    type Output = Scalar;
    fn mul(self, o: Scalar) -> Scalar {
        &self * &o
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar(self.0.iter().map(|(k, c)| (*k, -c)).collect())
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

impl AddAssign<&Scalar> for Scalar {
    fn add_assign(&mut self, o: &Scalar) {
        if self.0.is_empty() {
            *self = o.clone();
            return;
        }
        for (k, c) in &o.0 {
            self.add_term(*k, c, false);
        }
    }
}

impl SubAssign<&Scalar> for Scalar {
    fn sub_assign(&mut self, o: &Scalar) {
        for (k, c) in &o.0 {
            self.add_term(*k, c, true);
        }
    }
}

impl MulAssign<&Scalar> for Scalar {
    fn mul_assign(&mut self, o: &Scalar) {
        *self = &*self * o;
    }
}

impl From<Q> for Scalar {
    fn from(q: Q) -> Scalar {
        Scalar::from_q(q)
    }
}

impl From<i64> for Scalar {
    fn from(n: i64) -> Scalar {
        Scalar::int(n)
    }
}

/// `n!` as a rational.
pub fn factorial(n: u32) -> Q {
    (1..=n as i64).fold(Q::one(), |acc, k| &acc * &Q::int(k))
}

/// Binomial coefficient `C(n, k)` (zero outside range).
pub fn binomial(n: i64, k: i64) -> Q {
    if k < 0 || k > n {
        return Q::zero();
    }
    let mut out = Q::one();
    for j in 0..k {
        out = &(&out * &Q::int(n - j)) / &Q::int(j + 1);
    }
    out
}

/// `(-1)^k` as an `i32`.
pub fn parity_sign(k: i64) -> i32 {
    if k.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overflow_promotes() {
        let a = Q::int(i64::MAX);
        let b = &a + &Q::one();
        assert!(matches!(b, Q::Big(_)));
        let c = &b - &Q::one();
        assert!(matches!(c, Q::Small(_)));
        assert_eq!(c, a);
    }

    #[test]
    fn gaussian_mul() {
        let z = &C::i() * &C::i();
        assert_eq!(z, C::real(Q::int(-1)));
        assert_eq!(C::i_pow(-1), C::new(Q::zero(), Q::int(-1)));
    }

    #[test]
    fn laurent_ring() {
        let a = &Scalar::pi_pow(2) + &Scalar::rat(1, 2);
        let b = &Scalar::pi_pow(-2) - &Scalar::one();
        let p = &a * &b;
        let expect = &(&Scalar::rat(1, 2).shift_pi(-2) - &Scalar::pi_pow(2)) + &Scalar::rat(1, 2);
        assert_eq!(p, expect);
        assert!((&a - &a).is_zero());
    }

    #[test]
    fn render_and_parse() {
        let s = &Scalar::from_c(C::new(Q::new(-1, 2), Q::new(3, 4))).shift_pi(-2) + &Scalar::int(5);
        let text = s.to_string();
        assert_eq!(text, "(-1/2 + 3/4 i) pi^-2 + (5 + 0 i)");
        assert_eq!(Scalar::parse(&text).unwrap(), s);
        assert_eq!(Scalar::parse("7/3").unwrap(), Scalar::rat(7, 3));
        assert_eq!(Scalar::zero().to_string(), "0");
        assert!(Scalar::parse("(1 + 2)").is_err());
    }

    #[test]
    fn binomials() {
        let row: Vec<Q> = (0..=4).map(|k| binomial(4, k)).collect();
        assert_eq!(row, vec![Q::int(1), Q::int(4), Q::int(6), Q::int(4), Q::int(1)]);
        assert_eq!(factorial(5), Q::int(120));
    }
}
