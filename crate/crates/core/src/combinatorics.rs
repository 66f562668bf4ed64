//! Binomial coefficients and capped subset enumeration.

use num_bigint::BigUint;
use num_traits::One;

use crate::error::{Error, Result};

/// Default cap on the number of items any single enumeration may visit.
pub const DEFAULT_ENUMERATION_CAP: usize = 1_000_000;

/// Exact binomial coefficient `C(n, k)`.
pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::ZERO;
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        // acc * (n - i) is always divisible by (i + 1) at this point.
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// `C(n, k)` if it fits in a `usize`.
pub fn binomial_usize(n: usize, k: usize) -> Option<usize> {
    usize::try_from(binomial(n, k)).ok()
}

/// Fails with [`Error::CapExceeded`] unless `C(n, k) <= cap`.
pub fn ensure_binomial_within(what: &'static str, n: usize, k: usize, cap: usize) -> Result<usize> {
    match binomial_usize(n, k) {
        Some(c) if c <= cap => Ok(c),
        _ => Err(Error::CapExceeded {
            what,
            count: binomial(n, k).to_string(),
            cap,
        }),
    }
}

/// `n!` for small `n`, saturating.
pub fn factorial(n: usize) -> u128 {
    (1..=n as u128).fold(1u128, |acc, x| acc.saturating_mul(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_binomials() {
        assert_eq!(binomial(4, 2), BigUint::from(6u32));
        assert_eq!(binomial(5, 0), BigUint::one());
        assert_eq!(binomial(3, 5), BigUint::ZERO);
        assert_eq!(binomial_usize(10, 3), Some(120));
    }

    #[test]
    fn large_binomial_is_exact() {
        // C(100, 50) = 100891344545564193334812497256
        assert_eq!(
            binomial(100, 50).to_string(),
            "100891344545564193334812497256"
        );
        assert!(binomial_usize(200, 100).is_none());
    }

    #[test]
    fn cap_is_enforced() {
        assert!(ensure_binomial_within("t", 10, 5, 252).is_ok());
        assert!(matches!(
            ensure_binomial_within("t", 10, 5, 251),
            Err(Error::CapExceeded { .. })
        ));
    }
}
