use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Exact non-negative rational, always stored in lowest terms with `den > 0`.
///
/// Similarity scores and access frequencies are compared as ratios so that
/// ties are detected exactly; `to_f64` is for reporting only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ratio {
    num: u64,
    den: u64,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Ratio {
    pub const ZERO: Ratio = Ratio { num: 0, den: 1 };
    pub const ONE: Ratio = Ratio { num: 1, den: 1 };

    /// Panics if `den == 0`.
    pub fn new(num: u64, den: u64) -> Self {
        assert!(den != 0, "ratio with zero denominator");
        if num == 0 {
            return Self::ZERO;
        }
        let g = gcd(num, den);
        Self { num: num / g, den: den / g }
    }

    /// `num / den` with the `0/0 = 0` convention.
    pub fn or_zero(num: u64, den: u64) -> Self {
        if den == 0 {
            Self::ZERO
        } else {
            Self::new(num, den)
        }
    }

    pub fn numer(&self) -> u64 {
        self.num
    }

    pub fn denom(&self) -> u64 {
        self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl Default for Ratio {
    fn default() -> Self {
        Self::ZERO
    }
}

impl Ord for Ratio {
    fn cmp(&self, other: &Self) -> Ordering {
        let lhs = self.num as u128 * other.den as u128;
        let rhs = other.num as u128 * self.den as u128;
        lhs.cmp(&rhs)
    }
}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduces_to_lowest_terms() {
        assert_eq!(Ratio::new(2, 4), Ratio::new(1, 2));
        assert_eq!(Ratio::new(4, 4), Ratio::ONE);
        assert_eq!(Ratio::new(0, 7), Ratio::ZERO);
        assert_eq!(Ratio::new(6, 8).to_string(), "3/4");
    }

    #[test]
    fn zero_over_zero_is_zero() {
        assert_eq!(Ratio::or_zero(0, 0), Ratio::ZERO);
    }

    #[test]
    fn ordering_is_exact() {
        assert!(Ratio::new(1, 3) > Ratio::new(1, 4));
        assert!(Ratio::new(1, 3) < Ratio::new(1, 2));
        assert_eq!(Ratio::new(2, 6).cmp(&Ratio::new(1, 3)), Ordering::Equal);
        let big = Ratio::new(u64::MAX - 1, u64::MAX);
        assert!(big < Ratio::ONE);
    }
}
