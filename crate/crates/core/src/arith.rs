//! Elementary number theory on machine integers and exact rationals.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub fn is_prime(n: u64) -> bool {
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
}

/// Primes `<= n` in ascending order.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut sieve = vec![true; n + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut i = 2;
    while i * i <= n {
        if sieve[i] {
            let mut j = i * i;
            while j <= n {
                sieve[j] = false;
                j += i;
            }
        }
        i += 1;
    }
    (0..=n).filter(|&k| sieve[k]).map(|k| k as u64).collect()
}

/// Prime factorisation of |n| by trial division; empty for |n| <= 1.
pub fn factor(n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut n = n;
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            let mut e = 0;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn prime_divisors(n: u64) -> Vec<u64> {
    factor(n).into_iter().map(|(p, _)| p).collect()
}

/// p-adic valuation of a nonzero integer; `u32::MAX` for zero.
pub fn val_i128(n: i128, p: u64) -> u32 {
    if n == 0 {
        return u32::MAX;
    }
    let p = p as i128;
    let mut n = n;
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

pub fn val_big(n: &BigInt, p: u64) -> u32 {
    if n.is_zero() {
        return u32::MAX;
    }
    let pb = BigInt::from(p);
    let mut n = n.clone();
    let mut v = 0;
    loop {
        let (q, r) = n.div_rem(&pb);
        if !r.is_zero() {
            return v;
        }
        n = q;
        v += 1;
    }
}

/// p-adic valuation of a rational; `i64::MAX` for zero.
pub fn val_rat(x: &BigRational, p: u64) -> i64 {
    if x.is_zero() {
        return i64::MAX;
    }
    val_big(x.numer(), p) as i64 - val_big(x.denom(), p) as i64
}

pub fn big_pow(p: u64, e: u32) -> BigInt {
    num_traits::pow(BigInt::from(p), e as usize)
}

/// p^e as an exact rational, e of either sign.
pub fn rat_pow(p: u64, e: i64) -> BigRational {
    let b = big_pow(p, e.unsigned_abs() as u32);
    if e >= 0 {
        BigRational::from_integer(b)
    } else {
        BigRational::new(BigInt::one(), b)
    }
}

pub fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn rat_to_f64(x: &BigRational) -> f64 {
    // Scale to keep both parts in range before dividing.
    if let (Some(n), Some(d)) = (x.numer().to_f64(), x.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    let nb = x.numer().bits() as i64;
    let db = x.denom().bits() as i64;
    let shift = nb - db;
    let scaled = if shift > 0 {
        BigRational::new(x.numer().clone(), x.denom() << (shift as usize))
    } else {
        BigRational::new(x.numer() << ((-shift) as usize), x.denom().clone())
    };
    let n = scaled.numer().to_f64().unwrap_or(f64::NAN);
    let d = scaled.denom().to_f64().unwrap_or(f64::NAN);
    if n.is_finite() && d.is_finite() {
        n / d * 2f64.powi(shift as i32)
    } else {
        // Both still huge: shorten by integer division.
        let q = (x.numer() << 64usize) / x.denom();
        q.to_f64().unwrap_or(f64::NAN) * 2f64.powi(-64)
    }
}

/// Modular inverse of `a` modulo `m` (m > 1), if it exists.
pub fn mod_inv(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let g = a.extended_gcd(m);
    if !g.gcd.is_one() && !(-&g.gcd).is_one() {
        return None;
    }
    let x = if g.gcd.is_negative() { -g.x } else { g.x };
    Some(x.mod_floor(m))
}

/// Residue in [0, m) of a p-integral rational.
pub fn rat_mod(x: &BigRational, m: &BigInt) -> Option<BigInt> {
    let inv = mod_inv(&x.denom().mod_floor(m), m)?;
    Some((x.numer() * inv).mod_floor(m))
}

/// Jacobi symbol (a|n) for odd positive n.
fn jacobi(a: i64, n: i64) -> i32 {
    debug_assert!(n > 0 && n % 2 == 1);
    let mut a = a.rem_euclid(n);
    let mut n = n;
    let mut t = 1;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            let r = n % 8;
            if r == 3 || r == 5 {
                t = -t;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            t = -t;
        }
        a %= n;
    }
    if n == 1 {
        t
    } else {
        0
    }
}

/// Kronecker symbol (a|n) for arbitrary integers.
pub fn kronecker(a: i64, n: i64) -> i32 {
    if n == 0 {
        return if a == 1 || a == -1 { 1 } else { 0 };
    }
    let mut n = n;
    let mut t = 1;
    if n < 0 {
        n = -n;
        if a < 0 {
            t = -t;
        }
    }
    let v = n.trailing_zeros();
    n >>= v;
    if v > 0 {
        if a % 2 == 0 {
            return 0;
        }
        if v % 2 == 1 {
            let r = a.rem_euclid(8);
            if r == 3 || r == 5 {
                t = -t;
            }
        }
    }
    t * jacobi(a, n)
}

/// Squarefree part of a nonzero integer, keeping its sign.
pub fn squarefree_part(d: i64) -> i64 {
    assert!(d != 0, "squarefree part of zero");
    let sign = d.signum();
    let mut out = 1i64;
    for (p, e) in factor(d.unsigned_abs()) {
        if e % 2 == 1 {
            out *= p as i64;
        }
    }
    sign * out
}

/// Fundamental discriminant of Q(sqrt d); 1 when d is a square.
pub fn fundamental_discriminant(d: i64) -> i64 {
    let s = squarefree_part(d);
    if s == 1 {
        1
    } else if s.rem_euclid(4) == 1 {
        s
    } else {
        4 * s
    }
}

pub fn is_fundamental_discriminant(d: i64) -> bool {
    if d == 1 {
        return true;
    }
    if d.rem_euclid(4) == 1 {
        return squarefree_part(d) == d;
    }
    if d.rem_euclid(4) == 0 {
        let q = d / 4;
        return (q.rem_euclid(4) == 2 || q.rem_euclid(4) == 3) && squarefree_part(q) == q;
    }
    false
}

pub fn isqrt(n: u64) -> u64 {
    if n < 2 {
        return n;
    }
    let mut x = (n as f64).sqrt() as u64;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

pub fn is_square(n: u64) -> bool {
    let s = isqrt(n);
    s * s == n
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronecker_matches_euler_criterion() {
        for p in primes_up_to(60).into_iter().filter(|&p| p > 2) {
            for a in -40i64..40 {
                let e = {
                    let mut r = 1i64;
                    let base = a.rem_euclid(p as i64);
                    for _ in 0..(p - 1) / 2 {
                        r = r * base % p as i64;
                    }
                    if r == p as i64 - 1 {
                        -1
                    } else {
                        r as i32
                    }
                };
                assert_eq!(kronecker(a, p as i64), e, "a={a} p={p}");
            }
        }
    }

    #[test]
    fn kronecker_at_two() {
        assert_eq!(kronecker(-4, 2), 0);
        assert_eq!(kronecker(5, 2), -1);
        assert_eq!(kronecker(-7, 2), 1);
        assert_eq!(kronecker(-4, 3), -1);
        assert_eq!(kronecker(-4, 5), 1);
    }

    #[test]
    fn fundamental_discriminants() {
        assert_eq!(fundamental_discriminant(-4), -4);
        assert_eq!(fundamental_discriminant(-16), -4);
        assert_eq!(fundamental_discriminant(12), 12);
        assert_eq!(fundamental_discriminant(9), 1);
        assert_eq!(fundamental_discriminant(-3), -3);
        assert_eq!(fundamental_discriminant(8), 8);
        for d in [-4, -3, 5, 8, 12, -8, 1, -7, 13] {
            assert!(is_fundamental_discriminant(d), "{d}");
        }
        for d in [-16, 4, 9, 2, 3] {
            assert!(!is_fundamental_discriminant(d), "{d}");
        }
    }

    #[test]
    fn valuations_and_residues() {
        assert_eq!(val_i128(72, 2), 3);
        assert_eq!(val_rat(&BigRational::new(9.into(), 8.into()), 2), -3);
        let m = BigInt::from(27);
        let x = BigRational::new(1.into(), 2.into());
        assert_eq!(rat_mod(&x, &m), Some(BigInt::from(14)));
        assert_eq!(factor(360), vec![(2, 3), (3, 2), (5, 1)]);
    }

    #[test]
    fn huge_rational_to_float() {
        let x = BigRational::new(big_pow(7, 400), big_pow(7, 399) * 2);
        assert!((rat_to_f64(&x) - 3.5).abs() < 1e-12);
    }
}
