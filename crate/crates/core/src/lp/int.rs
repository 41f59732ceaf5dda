//! Tableau integers: inline while they fit in 63 bits, `BigInt` otherwise.

use std::borrow::Cow;
use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Int {
    /// Never `i64::MIN`, so negation and `abs` stay inline.
    Small(i64),
    Big(Box<BigInt>),
}

fn from_i128(v: i128) -> Int {
    if v.unsigned_abs() <= i64::MAX as u128 {
        Int::Small(v as i64)
    } else {
        Int::Big(Box::new(BigInt::from(v)))
    }
}

fn from_big(v: BigInt) -> Int {
    match v.to_i64() {
        Some(s) if s != i64::MIN => Int::Small(s),
        _ => Int::Big(Box::new(v)),
    }
}

impl Int {
    pub const ZERO: Int = Int::Small(0);
    pub const ONE: Int = Int::Small(1);

    pub fn from_bigint(v: &BigInt) -> Int {
        from_big(v.clone())
    }

    pub fn to_bigint(&self) -> BigInt {
        match self {
            Int::Small(v) => BigInt::from(*v),
            Int::Big(v) => (**v).clone(),
        }
    }

    fn big(&self) -> Cow<'_, BigInt> {
        match self {
            Int::Small(v) => Cow::Owned(BigInt::from(*v)),
            Int::Big(v) => Cow::Borrowed(&**v),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Int::Small(0))
    }

    pub fn signum(&self) -> i32 {
        match self {
            Int::Small(v) => v.signum() as i32,
            Int::Big(v) => {
                if v.is_positive() {
                    1
                } else {
                    -1
                }
            }
        }
    }

    pub fn is_positive(&self) -> bool {
        self.signum() > 0
    }

    pub fn is_negative(&self) -> bool {
        self.signum() < 0
    }

    pub fn neg(&self) -> Int {
        match self {
            Int::Small(v) => Int::Small(-v),
            Int::Big(v) => Int::Big(Box::new(-&**v)),
        }
    }

    pub fn mul(&self, o: &Int) -> Int {
        match (self, o) {
            (Int::Small(a), Int::Small(b)) => from_i128(*a as i128 * *b as i128),
            _ => from_big(&*self.big() * &*o.big()),
        }
    }

    /// `a·x − b·y`
    pub fn mul_sub(a: &Int, x: &Int, b: &Int, y: &Int) -> Int {
        match (a, x, b, y) {
            (Int::Small(a), Int::Small(x), Int::Small(b), Int::Small(y)) => {
                from_i128(*a as i128 * *x as i128 - *b as i128 * *y as i128)
            }
            _ => from_big(&*a.big() * &*x.big() - &*b.big() * &*y.big()),
        }
    }

    /// `self / d` for a divisor `d` known to divide exactly.
    pub fn div_exact(&self, d: &Int) -> Int {
        match (self, d) {
            (Int::Small(a), Int::Small(b)) => Int::Small(a / b),
            (Int::Big(a), Int::Small(b)) => from_big(&**a / *b),
            _ => from_big(&*self.big() / &*d.big()),
        }
    }

    pub fn cmp_to(&self, o: &Int) -> Ordering {
        match (self, o) {
            (Int::Small(a), Int::Small(b)) => a.cmp(b),
            _ => self.big().cmp(&o.big()),
        }
    }
}

impl PartialOrd for Int {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Int {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_to(other)
    }
}

/// Writes a rational row as an integer row over a positive integer scale,
/// `row[j] = out[j] / scale`, with no common factor left between the entries
/// and the scale.
pub(crate) fn integer_row(row: &[crate::rational::Rational]) -> (Vec<Int>, BigInt) {
    let mut scale = BigInt::one();
    for q in row.iter().filter(|q| !q.is_zero()) {
        scale = scale.lcm(q.denom());
    }
    let mut content = scale.clone();
    for q in row.iter().filter(|q| !q.is_zero()) {
        content = content.gcd(q.numer());
    }
    let out = row
        .iter()
        .map(|q| {
            if q.is_zero() {
                Int::ZERO
            } else {
                from_big(q.numer() * (&scale / q.denom()) / &content)
            }
        })
        .collect();
    (out, scale / content)
}
