//! Exact non-negative fractions and threshold comparison against decimal
//! thresholds such as `0.9`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Serialize, Serializer};

#[derive(Debug, Clone, Copy)]
pub struct Ratio {
    num: u64,
    den: u64,
}

impl Ratio {
    pub const ZERO: Ratio = Ratio { num: 0, den: 1 };

    /// `den == 0` yields zero.
    pub fn new(num: u64, den: u64) -> Self {
        if den == 0 {
            return Self::ZERO;
        }
        let g = gcd(num, den);
        Self {
            num: num / g,
            den: den / g,
        }
    }

    pub fn numer(&self) -> u64 {
        self.num
    }

    pub fn denom(&self) -> u64 {
        self.den
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `self >= threshold`, reading `threshold` as the decimal it prints as,
    /// so a similarity of exactly 9/10 meets a threshold of `0.9`.
    pub fn at_least(&self, threshold: f64) -> bool {
        match decimal(threshold) {
            Some((p, q)) => u128::from(self.num) * q >= p * u128::from(self.den),
            None => self.to_f64() >= threshold,
        }
    }
}

impl PartialEq for Ratio {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Ratio {}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ratio {
    fn cmp(&self, other: &Self) -> Ordering {
        (u128::from(self.num) * u128::from(other.den))
            .cmp(&(u128::from(other.num) * u128::from(self.den)))
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.to_f64())
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

/// Shortest round-trip decimal of a finite non-negative `x` as `p / q`.
fn decimal(x: f64) -> Option<(u128, u128)> {
    if !x.is_finite() || x < 0.0 {
        return None;
    }
    let text = format!("{x}");
    let (int, frac) = text.split_once('.').unwrap_or((&text, ""));
    if frac.len() > 18 || int.len() > 18 {
        return None;
    }
    let q = 10u128.pow(frac.len() as u32);
    let p = int.parse::<u128>().ok()? * q
        + if frac.is_empty() {
            0
        } else {
            frac.parse::<u128>().ok()?
        };
    Some((p, q))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduces_and_compares() {
        assert_eq!(Ratio::new(2, 4), Ratio::new(1, 2));
        assert!(Ratio::new(2, 3) > Ratio::new(3, 5));
        assert_eq!(Ratio::new(5, 0), Ratio::ZERO);
    }

    #[test]
    fn decimal_boundaries_are_inclusive() {
        assert!(Ratio::new(9, 10).at_least(0.9));
        assert!(Ratio::new(27, 30).at_least(0.9));
        assert!(!Ratio::new(8, 9).at_least(0.9));
        assert!(Ratio::new(7, 10).at_least(0.7));
        assert!(!Ratio::new(69, 100).at_least(0.7));
        assert!(Ratio::new(1, 2).at_least(0.5));
        assert!(Ratio::ZERO.at_least(0.0));
        assert!(!Ratio::ZERO.at_least(0.1));
        assert!(Ratio::new(1, 1).at_least(1.0));
        // 0.3 * 3 in floating point is below 0.9; the exact test is not fooled.
        assert!(Ratio::new(9, 10).at_least(0.3 * 3.0));
    }
}
