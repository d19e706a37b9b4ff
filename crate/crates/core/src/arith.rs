//! Small number-theoretic helpers shared across modules.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// `ord_p(n)` for nonzero `n`.
pub fn valuation(n: &BigInt, p: u64) -> u64 {
    assert!(!n.is_zero(), "valuation of zero");
    let p = BigInt::from(p);
    let mut n = n.abs();
    let mut v = 0;
    loop {
        let (q, r) = n.div_rem(&p);
        if !r.is_zero() {
            return v;
        }
        n = q;
        v += 1;
    }
}

/// `ord_p(x)` for a nonzero rational.
pub fn valuation_rational(x: &BigRational, p: u64) -> i64 {
    valuation(x.numer(), p) as i64 - valuation(x.denom(), p) as i64
}

pub fn mod_pow(base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let m128 = m as u128;
    let mut b = base as u128 % m128;
    let mut acc = 1u128;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m128;
        }
        b = b * b % m128;
        exp >>= 1;
    }
    acc as u64
}

/// Inverse of `a` modulo prime `p`.
pub fn mod_inv_prime(a: u64, p: u64) -> u64 {
    mod_pow(a, p - 2, p)
}

pub fn is_odd_prime(p: u64) -> bool {
    p > 2 && num_prime::nt_funcs::is_prime64(p)
}

/// Determinant over 𝔽_p of a square matrix given by rows of residues.
pub fn det_mod_p(mut a: Vec<Vec<u64>>, p: u64) -> u64 {
    let n = a.len();
    let p128 = p as u128;
    let mut det = 1u64;
    for c in 0..n {
        let Some(piv) = (c..n).find(|&i| !a[i][c].is_multiple_of(p)) else { return 0 };
        if piv != c {
            a.swap(piv, c);
            det = (p - det) % p;
        }
        let pv = a[c][c] % p;
        det = ((det as u128 * pv as u128) % p128) as u64;
        let inv = mod_inv_prime(pv, p);
        for i in c + 1..n {
            let f = ((a[i][c] % p) as u128 * inv as u128 % p128) as u64;
            if f == 0 {
                continue;
            }
            for j in c..n {
                let sub = (f as u128 * (a[c][j] % p) as u128 % p128) as u64;
                a[i][j] = (a[i][j] % p + p - sub) % p;
            }
        }
    }
    det
}

/// Squarefree integer representing the class of `x` in ℚ^×/(ℚ^×)².
pub fn squarefree_part(x: &BigRational) -> BigInt {
    assert!(!x.is_zero(), "square class of zero");
    let n = x.numer() * x.denom();
    let sign = if n.is_negative() { -BigInt::one() } else { BigInt::one() };
    let mag: BigUint = n.abs().to_biguint().expect("nonnegative");
    if mag.is_one() {
        return sign;
    }
    let factors = num_prime::nt_funcs::factorize(mag);
    let mut out = BigUint::one();
    for (q, e) in factors {
        if e % 2 == 1 {
            out *= q;
        }
    }
    sign * BigInt::from_biguint(Sign::Plus, out)
}

/// Whether a rational number is the square of a rational.
pub fn is_rational_square(x: &BigRational) -> bool {
    if x.is_negative() {
        return false;
    }
    let is_sq = |n: &BigInt| {
        let r = n.sqrt();
        &r * &r == *n
    };
    is_sq(x.numer()) && is_sq(x.denom())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valuations() {
        assert_eq!(valuation(&BigInt::from(54), 3), 3);
        assert_eq!(valuation(&BigInt::from(-7), 3), 0);
        let x = BigRational::new(BigInt::from(9), BigInt::from(15));
        assert_eq!(valuation_rational(&x, 3), 1);
        assert_eq!(valuation_rational(&x, 5), -1);
    }

    #[test]
    fn square_classes() {
        let r = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
        assert_eq!(squarefree_part(&r(36, 12)), BigInt::from(3));
        assert_eq!(squarefree_part(&r(-8, 3)), BigInt::from(-6));
        assert_eq!(squarefree_part(&r(4, 9)), BigInt::from(1));
        assert!(is_rational_square(&r(4, 9)));
        assert!(!is_rational_square(&r(3, 1)));
        assert!(!is_rational_square(&r(-4, 1)));
    }

    #[test]
    fn determinant_over_fp() {
        assert_eq!(det_mod_p(vec![vec![0, 1], vec![1, 0]], 5), 4);
        assert_eq!(det_mod_p(vec![vec![2, 1], vec![4, 2]], 7), 0);
        assert_eq!(det_mod_p(vec![], 3), 1);
        assert_eq!(mod_pow(2, 10, 1000), 24);
        assert_eq!(mod_inv_prime(3, 7), 5);
    }
}
