//! Coefficients of the weight `k = 1 + b/2` Eisenstein series at the trivial
//! component: local L-polynomials, the finite Euler product `sigma_m(k)`
//! and its logarithmic derivative, and the normalised coefficient `a(m)`.

use crate::arith;
use crate::density::{self, DensityCache, LocalDensity};
use crate::error::{Error, Result};
use crate::lattice::IntegralLattice;
use crate::special;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// `L_m^{(p)}(t) = N_m(p^w) t^w + (1 - p^{r-1} t) sum_{n<w} N_m(p^n) t^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct LpPolynomial {
    pub p: u64,
    pub m: i64,
    /// Coefficients in ascending degree.
    pub coeffs: Vec<BigInt>,
    /// `N_m(p^n)` for `n <= w`.
    pub counts: Vec<BigInt>,
}

impl LpPolynomial {
    pub fn w(&self) -> u32 {
        self.counts.len() as u32 - 1
    }

    pub fn eval(&self, t: &BigRational) -> BigRational {
        self.coeffs
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, c| acc * t + BigRational::from_integer(c.clone()))
    }

    pub fn derivative_at(&self, t: &BigRational) -> BigRational {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(BigRational::zero(), |acc, (i, c)| {
                acc * t + BigRational::from_integer(c * BigInt::from(i))
            })
    }
}

pub fn lp_polynomial(lat: &IntegralLattice, p: u64, m: i64) -> Result<LpPolynomial> {
    lp_polynomial_with(&LocalDensity::new(lat, p)?, m)
}

pub fn lp_polynomial_with(engine: &LocalDensity, m: i64) -> Result<LpPolynomial> {
    if m <= 0 {
        return Err(Error::Domain("L-polynomial needs m > 0".into()));
    }
    let p = engine.p;
    let r = engine.r as u32;
    let w = density::w_p(p, m);
    let counts = (0..=w)
        .map(|n| engine.count_general(m, n))
        .collect::<Result<Vec<_>>>()?;
    let pr = arith::big_pow(p, r - 1);
    let mut coeffs = vec![BigInt::zero(); w as usize + 1];
    for n in 0..w as usize {
        coeffs[n] += &counts[n];
        coeffs[n + 1] -= &pr * &counts[n];
    }
    coeffs[w as usize] += &counts[w as usize];
    Ok(LpPolynomial { p, m, coeffs, counts })
}

/// `d` and its fundamental discriminant for the lattice and square class `D`.
pub fn discriminants(lat: &IntegralLattice, d_class: i64) -> Result<(i64, i64)> {
    let r = lat.rank();
    let det = lat
        .det()
        .to_i64()
        .ok_or_else(|| Error::UnsupportedSize("determinant exceeds i64".into()))?;
    let d = if r % 2 == 0 {
        if (r / 2) % 2 == 0 {
            det
        } else {
            -det
        }
    } else {
        let s = if ((r + 1) / 2) % 2 == 0 { 1 } else { -1 };
        2 * s * d_class * det
    };
    Ok((d, arith::fundamental_discriminant(d)))
}

/// Kronecker symbol `(d0 | p)`.
pub fn chi_d0(lat: &IntegralLattice, d_class: i64, p: u64) -> Result<i32> {
    let (_, d0) = discriminants(lat, d_class)?;
    Ok(arith::kronecker(d0, p as i64))
}

/// One prime's contribution to `sigma_m(k)` and to its log-derivative.
#[derive(Clone, Debug, PartialEq)]
pub struct SigmaFactor {
    pub p: u64,
    pub chi: i32,
    pub lp: LpPolynomial,
    /// Exact factor at `s = k`.
    pub value: BigRational,
    /// Coefficient of `log p` in the log-derivative at `s = k`.
    pub logderiv_coeff: BigRational,
}

#[derive(Clone, Debug)]
pub struct SigmaData {
    pub m: i64,
    pub d: i64,
    pub d0: i64,
    pub factors: Vec<SigmaFactor>,
    pub value_at_k: f64,
    pub logderiv_at_k: f64,
}

fn check_square_class(r: usize, d_class: i64, m: i64) -> Result<()> {
    if m <= 0 {
        return Err(Error::Domain("sigma_m needs m > 0".into()));
    }
    if r % 2 == 1 {
        if d_class <= 0 || m % d_class != 0 || !arith::is_square((m / d_class) as u64) {
            return Err(Error::Domain(format!("sqrt(m/D) is not an integer for m={m}, D={d_class}")));
        }
    }
    Ok(())
}

fn sigma_factor(engine: &LocalDensity, chi: i32, m: i64) -> Result<SigmaFactor> {
    let p = engine.p;
    let r = engine.r;
    let lp = lp_polynomial_with(engine, m)?;
    let t = arith::rat_pow(p, 1 - r as i64);
    let l = lp.eval(&t);
    let dl = lp.derivative_at(&t);
    if l.is_zero() {
        return Err(Error::Domain(format!("L-polynomial vanishes at p={p}, m={m}")));
    }
    let one = BigRational::one();
    let chi_r = BigRational::from_integer(chi.into());
    let mut logd = -(&t * &dl / &l);
    let value = if r % 2 == 0 {
        // L / (1 - chi p^{-k})
        let pk = arith::rat_pow(p, r as i64 / 2);
        logd -= &chi_r / (&pk - &chi_r);
        &l / (&one - &chi_r / &pk)
    } else {
        // (1 - chi p^{1/2-k}) / (1 - p^{1-2k}) L, with k - 1/2 = (r-1)/2
        let ph = arith::rat_pow(p, (r as i64 - 1) / 2);
        let p2 = arith::rat_pow(p, r as i64 - 1);
        logd += &chi_r / (&ph - &chi_r);
        logd -= BigRational::from_integer(2.into()) / (&p2 - &one);
        (&one - &chi_r / &ph) / (&one - &one / &p2) * &l
    };
    Ok(SigmaFactor {
        p,
        chi,
        lp,
        value,
        logderiv_coeff: logd,
    })
}

pub fn sigma_m(lat: &IntegralLattice, d_class: i64, m: i64) -> Result<SigmaData> {
    sigma_m_cached(&DensityCache::new(lat), d_class, m)
}

/// `sigma_m(k)` over `p | 2 m det(L)`, ascending primes.
pub fn sigma_m_cached(cache: &DensityCache, d_class: i64, m: i64) -> Result<SigmaData> {
    let lat = cache.lattice();
    check_square_class(lat.rank(), d_class, m)?;
    let (d, d0) = discriminants(lat, d_class)?;
    let support = arith::prime_divisors(2 * lat.disc_abs() * m as u64);
    let mut factors = Vec::with_capacity(support.len());
    let mut value = 1.0;
    let mut logd = 0.0;
    for p in support {
        let chi = arith::kronecker(d0, p as i64);
        let f = sigma_factor(&*cache.engine(p)?, chi, m)?;
        value *= arith::rat_to_f64(&f.value);
        logd += arith::rat_to_f64(&f.logderiv_coeff) * (p as f64).ln();
        factors.push(f);
    }
    Ok(SigmaData {
        m,
        d,
        d0,
        factors,
        value_at_k: value,
        logderiv_at_k: logd,
    })
}

#[derive(Clone, Debug)]
pub struct CoefficientEstimate {
    pub m: i64,
    pub a_value: f64,
    pub c_value: f64,
    pub trunc_error: f64,
    pub p_trunc: u64,
}

/// `c(m) = -2 (2 pi)^k a(m) / (Gamma(k) sqrt|L^v/L|)`.
pub fn c_from_a(lat: &IntegralLattice, a: f64) -> Result<f64> {
    let k = weight(lat)?;
    let disc = lat.disc_abs() as f64;
    Ok(-2.0 * (2.0 * std::f64::consts::PI).powf(k) * a / (special::gamma(k) * disc.sqrt()))
}

/// `k = 1 + b/2` for signature `(b, 2)`.
pub fn weight(lat: &IntegralLattice) -> Result<f64> {
    Ok(1.0 + lat.b()? as f64 / 2.0)
}

pub fn a_of_m(lat: &IntegralLattice, m: i64, p_trunc: u64) -> Result<CoefficientEstimate> {
    a_of_m_cached(&DensityCache::new(lat), m, p_trunc)
}

pub fn a_of_m_cached(cache: &DensityCache, m: i64, p_trunc: u64) -> Result<CoefficientEstimate> {
    let lat = cache.lattice();
    let b = lat.b()?;
    let ss = cache.singular_series(m, p_trunc)?;
    let a = (m as f64).powf(b as f64 / 2.0) * ss.value;
    Ok(CoefficientEstimate {
        m,
        a_value: a,
        c_value: c_from_a(lat, a)?,
        trunc_error: ss.error_bound,
        p_trunc,
    })
}

/// `b'_m(k/2) / b_m(k/2) = log m + 2 sigma'/sigma + kappa`.
pub fn bprime_ratio(lat: &IntegralLattice, d_class: i64, m: i64, kappa: f64) -> Result<f64> {
    bprime_ratio_cached(&DensityCache::new(lat), d_class, m, kappa)
}

pub fn bprime_ratio_cached(cache: &DensityCache, d_class: i64, m: i64, kappa: f64) -> Result<f64> {
    let s = sigma_m_cached(cache, d_class, m)?;
    Ok((m as f64).ln() + 2.0 * s.logderiv_at_k + kappa)
}

/// `sum_{p | n} log p / p`, the scale bounding the log-derivative.
pub fn log_prime_scale(n: u64) -> f64 {
    arith::prime_divisors(n)
        .into_iter()
        .map(|p| (p as f64).ln() / p as f64)
        .sum()
}

impl SigmaData {
    /// Sanity check shared by callers: every exact factor is positive.
    pub fn all_factors_positive(&self) -> bool {
        self.factors.iter().all(|f| f.value.is_positive())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l5_character() {
        let l5 = IntegralLattice::l5();
        assert_eq!(discriminants(&l5, 1).unwrap(), (-4, -4));
        assert_eq!(chi_d0(&l5, 1, 3).unwrap(), -1);
        assert_eq!(chi_d0(&l5, 1, 5).unwrap(), 1);
        assert_eq!(chi_d0(&l5, 1, 2).unwrap(), 0);
    }

    #[test]
    fn polynomial_evaluates_to_local_limit() {
        let l5 = IntegralLattice::l5();
        for p in [2u64, 3, 5] {
            let ld = LocalDensity::new(&l5, p).unwrap();
            for m in 1..30 {
                let lp = lp_polynomial_with(&ld, m).unwrap();
                let t = arith::rat_pow(p, -4);
                assert_eq!(lp.eval(&t), ld.mu_p_limit(m).unwrap().value, "p={p} m={m}");
            }
        }
    }

    #[test]
    fn unramified_polynomial_is_linear() {
        let l5 = IntegralLattice::l5();
        let lp = lp_polynomial(&l5, 7, 3).unwrap();
        assert_eq!(lp.w(), 1);
        assert_eq!(lp.coeffs[0], BigInt::one());
        assert_eq!(lp.coeffs[1], &lp.counts[1] - BigInt::from(7u64.pow(4)));
    }

    #[test]
    fn square_class_enforced() {
        let l5 = IntegralLattice::l5();
        assert!(sigma_m(&l5, 1, 2).is_err());
        assert!(sigma_m(&l5, 1, 9).is_ok());
        let u3 = IntegralLattice::u3();
        assert!(sigma_m(&u3, 1, 2).is_ok());
    }

    #[test]
    fn a_and_c_identity() {
        let l5 = IntegralLattice::l5();
        let est = a_of_m(&l5, 1, 100).unwrap();
        assert!(est.a_value > 0.0 && est.c_value < 0.0);
        let k = 2.5f64;
        let back = -est.c_value * special::gamma(k) * 2f64.sqrt() / (2.0 * (2.0 * std::f64::consts::PI).powf(k));
        assert!((back - est.a_value).abs() <= 1e-12 * est.a_value);
    }
}
