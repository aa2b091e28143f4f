//! Exact comparison of utility totals.
//!
//! Every empirical utility the learners compare is an integer combination
//! `n11·u(1,1) + n10·u(1,0) + n00·u(0,0) + n01·u(0,1)` of the four payoffs.
//! Comparing such totals in floating point can break exact ties (or invent
//! them), which would let two algebraically identical routes disagree. Here
//! each payoff is decomposed into `mantissa · 2^exp`, rescaled onto a common
//! exponent, and totals are compared with integer arithmetic.

use std::cmp::Ordering;

use num_bigint::BigInt;

use crate::model::UtilityTable;

/// Largest count magnitude accepted by the fast path.
const MAX_COUNT: i64 = 1 << 40;
/// Bit budget of a rescaled payoff for the `i128` fast path.
const SMALL_BITS: i32 = 70;

/// Counts of `(decision, label)` outcomes. Coefficients may be negative when
/// the value is a difference of two histories.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct OutcomeCounts {
    pub n11: i64,
    pub n10: i64,
    pub n00: i64,
    pub n01: i64,
}

impl OutcomeCounts {
    pub fn new(n11: i64, n10: i64, n00: i64, n01: i64) -> Self {
        Self { n11, n10, n00, n01 }
    }

    pub fn total(&self) -> i64 {
        self.n11 + self.n10 + self.n00 + self.n01
    }

    /// Floating-point value under `utility`.
    pub fn value(&self, utility: &UtilityTable) -> f64 {
        self.n11 as f64 * utility.u11
            + self.n10 as f64 * utility.u10
            + self.n00 as f64 * utility.u00
            + self.n01 as f64 * utility.u01
    }

    fn minus(&self, other: &Self) -> [i64; 4] {
        [
            self.n11 - other.n11,
            self.n10 - other.n10,
            self.n00 - other.n00,
            self.n01 - other.n01,
        ]
    }
}

impl std::ops::Add for OutcomeCounts {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self {
            n11: self.n11 + rhs.n11,
            n10: self.n10 + rhs.n10,
            n00: self.n00 + rhs.n00,
            n01: self.n01 + rhs.n01,
        }
    }
}

impl std::ops::AddAssign for OutcomeCounts {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

#[derive(Debug, Clone)]
enum Scaled {
    Small([i128; 4]),
    Big([BigInt; 4]),
}

/// A utility table rescaled to integers, for exact comparisons.
#[derive(Debug, Clone)]
pub struct ExactUtility {
    scaled: Scaled,
}

/// Splits a finite float into `(signed mantissa, exponent)` with
/// `x == mantissa · 2^exponent`.
fn decompose(x: f64) -> (i64, i32) {
    let bits = x.to_bits();
    let negative = bits >> 63 == 1;
    let exp_field = ((bits >> 52) & 0x7ff) as i32;
    let fraction = bits & ((1u64 << 52) - 1);
    let (mantissa, exp) = if exp_field == 0 {
        (fraction, -1074)
    } else {
        (fraction | (1u64 << 52), exp_field - 1075)
    };
    let m = mantissa as i64;
    (if negative { -m } else { m }, exp)
}

impl ExactUtility {
    pub fn new(utility: &UtilityTable) -> Self {
        let parts = utility.as_array().map(decompose);
        let base = parts
            .iter()
            .filter(|(m, _)| *m != 0)
            .map(|(_, e)| *e)
            .min()
            .unwrap_or(0);
        let widest = parts
            .iter()
            .filter(|(m, _)| *m != 0)
            .map(|(_, e)| 53 + e - base)
            .max()
            .unwrap_or(0);
        let scaled = if widest <= SMALL_BITS {
            Scaled::Small(parts.map(|(m, e)| if m == 0 { 0 } else { (m as i128) << (e - base) }))
        } else {
            Scaled::Big(parts.map(|(m, e)| {
                if m == 0 {
                    BigInt::from(0)
                } else {
                    BigInt::from(m) << ((e - base) as usize)
                }
            }))
        };
        Self { scaled }
    }

    /// Exact ordering of the utility totals of `a` and `b`.
    pub fn cmp(&self, a: &OutcomeCounts, b: &OutcomeCounts) -> Ordering {
        let diff = a.minus(b);
        match &self.scaled {
            Scaled::Small(s) if diff.iter().all(|d| d.abs() < MAX_COUNT) => {
                let total: i128 = diff.iter().zip(s).map(|(d, u)| *d as i128 * u).sum();
                total.cmp(&0)
            }
            Scaled::Small(s) => {
                let total: BigInt = diff
                    .iter()
                    .zip(s)
                    .map(|(d, u)| BigInt::from(*d) * BigInt::from(*u))
                    .sum();
                total.sign_cmp()
            }
            Scaled::Big(s) => {
                let total: BigInt = diff.iter().zip(s).map(|(d, u)| BigInt::from(*d) * u).sum();
                total.sign_cmp()
            }
        }
    }
}

trait SignCmp {
    fn sign_cmp(&self) -> Ordering;
}

impl SignCmp for BigInt {
    fn sign_cmp(&self) -> Ordering {
        self.cmp(&BigInt::from(0))
    }
}
