//! Local representation densities `mu_p(m, n) = p^{-n(r-1)} N_m(p^n)`.
//!
//! Three independent routes are provided:
//! * [`count_brute`] enumerates residues (split along integral orthogonal
//!   summands of the Gram matrix) and is the oracle for everything else;
//! * [`LocalDensity::mu_p`] follows the good / bad / zero recursion for
//!   lattices maximal at p, with odd-p good counts from character sums;
//! * [`LocalDensity::count_general`] reduces an arbitrary Jordan form one
//!   p-power at a time and serves non-maximal lattices.

use crate::arith::{self, big_pow, rat_mod};
use crate::error::{Error, Result};
use crate::jordan::JordanSplitting;
use crate::lattice::IntegralLattice;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::HashMap;
use std::sync::Mutex;

pub const DEFAULT_BRUTE_BUDGET: f64 = 1e9;

/// Exact density value with optional good / bad / zero decomposition.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityValue {
    pub p: u64,
    pub m: i64,
    pub n: u32,
    pub value: BigRational,
    pub parts: Option<(BigRational, BigRational, BigRational)>,
}

/// Stabilised local density `mu_p(Q, m)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalLimit {
    pub p: u64,
    pub m: i64,
    pub w: u32,
    pub value: BigRational,
}

/// Stabilisation level: `1 + v_p(m)` for odd p, `1 + 2 v_2(2m)` at 2.
pub fn w_p(p: u64, m: i64) -> u32 {
    assert!(m != 0, "w_p undefined for m = 0");
    let v = arith::val_i128(m as i128, p);
    if p == 2 {
        1 + 2 * (v + 1)
    } else {
        1 + v
    }
}

fn pow_u128(p: u64, n: u32) -> Option<u128> {
    (p as u128).checked_pow(n)
}

fn modulus(p: u64, n: u32) -> Result<u128> {
    pow_u128(p, n)
        .filter(|&q| q < (1u128 << 62))
        .ok_or_else(|| Error::UnsupportedSize(format!("modulus {p}^{n} too large")))
}

fn residue(m: i64, q: u128) -> u128 {
    (m as i128).rem_euclid(q as i128) as u128
}

/// Splits the index set into connected components of the off-diagonal support.
pub fn orthogonal_components(gram: &[Vec<i128>]) -> Vec<Vec<usize>> {
    let r = gram.len();
    let mut seen = vec![false; r];
    let mut out = Vec::new();
    for s in 0..r {
        if seen[s] {
            continue;
        }
        let mut comp = vec![s];
        seen[s] = true;
        let mut k = 0;
        while k < comp.len() {
            let i = comp[k];
            for j in 0..r {
                if !seen[j] && gram[i][j] != 0 {
                    seen[j] = true;
                    comp.push(j);
                }
            }
            k += 1;
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Histogram of `Q(x) mod q` over `x in (Z/q)^d` for the sub-Gram `g`.
fn component_histogram(g: &[Vec<i128>], q: u128) -> Vec<u128> {
    let d = g.len();
    let qi = q as i128;
    let mut hist = vec![0u128; q as usize];
    let mut x = vec![0i128; d];
    loop {
        let mut s = 0i128;
        for i in 0..d {
            if x[i] == 0 {
                continue;
            }
            s += g[i][i] / 2 * (x[i] * x[i] % qi);
            for j in i + 1..d {
                s += g[i][j] * (x[i] * x[j] % qi);
            }
            s %= qi;
        }
        hist[s.rem_euclid(qi) as usize] += 1;
        let mut k = 0;
        loop {
            if k == d {
                return hist;
            }
            x[k] += 1;
            if x[k] < qi {
                break;
            }
            x[k] = 0;
            k += 1;
        }
    }
}

fn convolve(a: &[u128], b: &[u128]) -> Vec<u128> {
    let q = a.len();
    let mut out = vec![0u128; q];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            if y != 0 {
                out[(i + j) % q] += x * y;
            }
        }
    }
    out
}

/// `#{v in (Z/p^n)^r : Q(v) = m mod p^n}` by exhaustive enumeration of each
/// integral orthogonal summand of the Gram matrix followed by convolution.
/// The budget bounds the total number of residues visited plus convolution work.
pub fn count_brute(lat: &IntegralLattice, p: u64, n: u32, m: i64, budget: f64) -> Result<BigInt> {
    if n == 0 {
        return Ok(BigInt::one());
    }
    let q = modulus(p, n)?;
    let comps = orthogonal_components(lat.gram());
    let work: f64 = comps
        .iter()
        .map(|c| (q as f64).powi(c.len() as i32) + (q as f64).powi(2))
        .sum();
    if work > budget {
        return Err(Error::Budget { estimate: work, budget });
    }
    let mut total: Option<Vec<u128>> = None;
    for c in &comps {
        let g: Vec<Vec<i128>> = c
            .iter()
            .map(|&i| c.iter().map(|&j| lat.gram()[i][j]).collect())
            .collect();
        let h = component_histogram(&g, q);
        total = Some(match total {
            None => h,
            Some(t) => convolve(&t, &h),
        });
    }
    Ok(BigInt::from(total.unwrap()[residue(m, q) as usize]))
}

/// Plain odometer over all of `(Z/p^n)^r`; only for tiny cases and tests.
pub fn count_naive(lat: &IntegralLattice, p: u64, n: u32, m: i64) -> Result<BigInt> {
    let q = modulus(p, n)?;
    let r = lat.rank();
    if (q as f64).powi(r as i32) > 1e8 {
        return Err(Error::Budget {
            estimate: (q as f64).powi(r as i32),
            budget: 1e8,
        });
    }
    let target = residue(m, q) as i128;
    let mut x = vec![0i128; r];
    let mut count = 0u64;
    loop {
        if lat.q(&x).rem_euclid(q as i128) == target {
            count += 1;
        }
        let mut k = 0;
        loop {
            if k == r {
                return Ok(BigInt::from(count));
            }
            x[k] += 1;
            if x[k] < q as i128 {
                break;
            }
            x[k] = 0;
            k += 1;
        }
    }
}

/// Partition of the solutions mod p^n into (good, bad, zero) types, by enumeration.
pub fn classify_solutions(
    lat: &IntegralLattice,
    p: u64,
    n: u32,
    m: i64,
    budget: f64,
) -> Result<(BigInt, BigInt, BigInt)> {
    if n == 0 {
        return Err(Error::Domain("classification needs n >= 1".into()));
    }
    let q = modulus(p, n)?;
    let r = lat.rank();
    let work = (q as f64).powi(r as i32);
    if work > budget {
        return Err(Error::Budget { estimate: work, budget });
    }
    let js = lat.jordan(p, 64)?;
    let tinv = js.inverse_transform_mod_p();
    let units = js.unit_coordinates();
    let target = residue(m, q) as i128;
    let (mut good, mut bad, mut zero) = (0u64, 0u64, 0u64);
    let mut x = vec![0i128; r];
    loop {
        if lat.q(&x).rem_euclid(q as i128) == target {
            if x.iter().all(|&c| c % p as i128 == 0) {
                zero += 1;
            } else {
                let is_good = units.iter().any(|&i| {
                    let y: u128 = (0..r)
                        .map(|j| tinv[i][j] as u128 * (x[j] as u128 % p as u128))
                        .sum::<u128>();
                    y % p as u128 != 0
                });
                if is_good {
                    good += 1;
                } else {
                    bad += 1;
                }
            }
        }
        let mut k = 0;
        loop {
            if k == r {
                return Ok((good.into(), bad.into(), zero.into()));
            }
            x[k] += 1;
            if x[k] < q as i128 {
                break;
            }
            x[k] = 0;
            k += 1;
        }
    }
}

/// Jordan form with adjustable valuations; coefficients are residues of the
/// unit quadratic forms.
#[derive(Clone, Debug)]
struct FormData {
    p: u64,
    dims: Vec<usize>,
    /// Unit-form coefficients mod p^prec: `[a]` or `[a, b, c]`.
    coeffs: Vec<Vec<u128>>,
    prec: u32,
    r: usize,
}

impl FormData {
    fn new(js: &JordanSplitting) -> Self {
        let p = js.prime;
        // Largest precision with p^prec comfortably inside u64.
        let mut prec = 1;
        while pow_u128(p, prec + 1).map_or(false, |q| q < (1u128 << 62)) {
            prec += 1;
        }
        let qb = big_pow(p, prec);
        let coeffs = js
            .blocks
            .iter()
            .map(|b| {
                b.q_coeffs()
                    .iter()
                    .map(|c| rat_mod(c, &qb).expect("p-integral").to_u128().unwrap())
                    .collect()
            })
            .collect();
        Self {
            p,
            dims: js.blocks.iter().map(|b| b.dim).collect(),
            coeffs,
            prec,
            r: js.rank(),
        }
    }

    fn s0(&self, nus: &[u32]) -> usize {
        self.dims
            .iter()
            .zip(nus)
            .filter(|(_, &v)| v == 0)
            .map(|(d, _)| d)
            .sum()
    }

    /// Value histogram of one block mod p^n; `units_zero` restricts to x = 0 mod p.
    fn block_hist(&self, k: usize, nu: u32, n: u32, units_zero: bool) -> Vec<u128> {
        let q = pow_u128(self.p, n).unwrap();
        let d = self.dims[k];
        let mut hist = vec![0u128; q as usize];
        if nu >= n && !units_zero {
            hist[0] = q.pow(d as u32);
            return hist;
        }
        let p = self.p as u128;
        let c: Vec<u128> = self.coeffs[k].iter().map(|&x| x % q).collect();
        let pnu = pow_u128(self.p, nu.min(n)).unwrap() % q;
        let eval = |x: &[u128]| -> u128 {
            let v = if d == 1 {
                c[0] * (x[0] * x[0] % q) % q
            } else {
                (c[0] * (x[0] * x[0] % q) + c[1] * (x[0] * x[1] % q) + c[2] * (x[1] * x[1] % q)) % q
            };
            v * pnu % q
        };
        let mut x = vec![0u128; d];
        loop {
            if !units_zero || x.iter().all(|&t| t % p == 0) {
                hist[eval(&x) as usize] += 1;
            }
            let mut i = 0;
            loop {
                if i == d {
                    return hist;
                }
                x[i] += 1;
                if x[i] < q {
                    break;
                }
                x[i] = 0;
                i += 1;
            }
        }
    }

    /// Good-type count at level n by histograms (any p, small n).
    fn good_by_hist(&self, nus: &[u32], m: u128, n: u32) -> BigInt {
        let mut total: Option<Vec<u128>> = None;
        let mut restricted: Option<Vec<u128>> = None;
        for k in 0..self.dims.len() {
            let h = self.block_hist(k, nus[k], n, false);
            let hr = if nus[k] == 0 {
                self.block_hist(k, nus[k], n, true)
            } else {
                h.clone()
            };
            total = Some(match total {
                None => h,
                Some(t) => convolve(&t, &h),
            });
            restricted = Some(match restricted {
                None => hr,
                Some(t) => convolve(&t, &hr),
            });
        }
        let i = m as usize;
        BigInt::from(total.unwrap()[i]) - BigInt::from(restricted.unwrap()[i])
    }

    /// Good-type count mod p (odd p) from the point count of a diagonal form over F_p.
    fn good_by_gauss(&self, nus: &[u32], m: u128) -> BigInt {
        let p = self.p;
        let c = (m % p as u128) as i64;
        let a: Vec<i64> = self
            .dims
            .iter()
            .zip(nus)
            .enumerate()
            .filter(|(_, (_, &v))| v == 0)
            .map(|(k, _)| (self.coeffs[k][0] % p as u128) as i64)
            .collect();
        let s = a.len() as u32;
        let pi = BigInt::from(p);
        let eta = |x: i64| arith::kronecker(x.rem_euclid(p as i64), p as i64) as i64;
        let prod = a.iter().fold(1i64, |acc, &x| acc * x % p as i64);
        let all = if s == 0 {
            if c == 0 {
                BigInt::one()
            } else {
                BigInt::zero()
            }
        } else if s % 2 == 0 {
            let sign = if (s / 2) % 2 == 0 { 1 } else { -1 };
            let nu = if c == 0 { p as i64 - 1 } else { -1 };
            num_traits::pow(pi.clone(), (s - 1) as usize)
                + BigInt::from(nu * eta(sign * prod)) * num_traits::pow(pi.clone(), ((s - 2) / 2) as usize)
        } else if c == 0 {
            num_traits::pow(pi.clone(), (s - 1) as usize)
        } else {
            let sign = if ((s - 1) / 2) % 2 == 0 { 1 } else { -1 };
            num_traits::pow(pi.clone(), (s - 1) as usize)
                + BigInt::from(eta(sign * c * prod)) * num_traits::pow(pi.clone(), ((s - 1) / 2) as usize)
        };
        let nonunit = (self.r as u32) - s;
        let zero_sol = if c == 0 { BigInt::one() } else { BigInt::zero() };
        (all - zero_sol) * num_traits::pow(pi, nonunit as usize)
    }

    fn delta(&self) -> u32 {
        if self.p == 2 {
            3
        } else {
            1
        }
    }

    /// `N^good(p^n)` for residue m (already reduced mod p^n).
    fn good_count(&self, nus: &[u32], m: u128, n: u32) -> BigInt {
        if n == 0 {
            return BigInt::zero();
        }
        let delta = self.delta();
        if n >= delta {
            let q = pow_u128(self.p, delta).unwrap();
            let base = if self.p == 2 {
                self.good_by_hist(nus, m % q, delta)
            } else {
                self.good_by_gauss(nus, m % q)
            };
            base * num_traits::pow(BigInt::from(self.p), ((n - delta) as usize) * (self.r - 1))
        } else {
            self.good_by_hist(nus, m, n)
        }
    }
}

type MemoKey = (Vec<u32>, u128, u32);

/// Density engine for a fixed lattice and prime.
pub struct LocalDensity {
    pub p: u64,
    pub r: usize,
    pub maximal: bool,
    pub splitting: JordanSplitting,
    form: FormData,
    base: Vec<u32>,
    memo: Mutex<HashMap<MemoKey, BigInt>>,
    lattice: IntegralLattice,
}

impl LocalDensity {
    pub fn new(lat: &IntegralLattice, p: u64) -> Result<Self> {
        let prec = 16 + 2 * arith::val_big(&lat.det(), p).min(1000);
        let splitting = lat.jordan(p, prec)?;
        let form = FormData::new(&splitting);
        let base = splitting.valuations();
        // An oversized discriminant p-part only disables the Hanke shortcut.
        let maximal = match lat.is_maximal_at(p) {
            Ok(b) => b,
            Err(Error::UnsupportedSize(_)) => false,
            Err(e) => return Err(e),
        };
        Ok(Self {
            p,
            r: lat.rank(),
            maximal,
            splitting,
            form,
            base,
            memo: Mutex::new(HashMap::new()),
            lattice: lat.clone(),
        })
    }

    fn pw(&self, e: usize) -> BigInt {
        num_traits::pow(BigInt::from(self.p), e)
    }

    fn check_level(&self, n: u32) -> Result<u128> {
        if n > self.form.prec {
            return Err(Error::Precision {
                precision: self.form.prec,
                detail: format!("level {n} beyond machine residues at p={}", self.p),
            });
        }
        modulus(self.p, n.max(1))
    }

    /// Auxiliary form with valuations 1 - nu (maximal lattices only).
    fn prime_nus(&self) -> Vec<u32> {
        self.base.iter().map(|&v| 1 - v.min(1)).collect()
    }

    /// `N_Q(m, p^n)` for an arbitrary valuation vector by the general reduction.
    fn count_nus(&self, nus: &[u32], m: u128, n: u32) -> BigInt {
        if n == 0 {
            return BigInt::one();
        }
        let q = pow_u128(self.p, n).unwrap();
        let m = m % q;
        let key = (nus.to_vec(), m, n);
        if let Some(v) = self.memo.lock().unwrap().get(&key) {
            return v.clone();
        }
        let good = self.form.good_count(nus, m, n);
        let nongood = if m % self.p as u128 != 0 {
            BigInt::zero()
        } else {
            // v_units = p y: the residual form has valuations shifted down after
            // multiplying the unit blocks by p^2.
            let shifted: Vec<u32> = nus.iter().map(|&v| if v == 0 { 1 } else { v - 1 }).collect();
            let s0 = self.form.s0(nus);
            self.pw(self.r - s0) * self.count_nus(&shifted, m / self.p as u128, n - 1)
        };
        let out = good + nongood;
        self.memo.lock().unwrap().insert(key, out.clone());
        out
    }

    /// `N_m(p^n)` from the general Jordan reduction (valid for any lattice).
    pub fn count_general(&self, m: i64, n: u32) -> Result<BigInt> {
        let q = self.check_level(n)?;
        Ok(self.count_nus(&self.base, residue(m, q), n))
    }

    pub fn mu_general(&self, m: i64, n: u32) -> Result<BigRational> {
        let c = self.count_general(m, n)?;
        Ok(BigRational::new(c, self.pw(n as usize * (self.r - 1))))
    }

    /// Good / bad / zero counts for a maximal lattice.
    fn hanke_counts(&self, m: u128, n: u32) -> (BigInt, BigInt, BigInt) {
        let p = self.p as u128;
        let q = pow_u128(self.p, n).unwrap();
        let m = m % q;
        let good = self.form.good_count(&self.base, m, n);
        let s0 = self.splitting.s0;
        let pm = m % p == 0;
        if n == 1 {
            return if pm {
                (good, self.pw(self.r - s0) - 1, BigInt::one())
            } else {
                (good, BigInt::zero(), BigInt::zero())
            };
        }
        let bad = if pm {
            self.pw(self.r - s0) * self.form.good_count(&self.prime_nus(), (m / p) % (q / p), n - 1)
        } else {
            BigInt::zero()
        };
        let zero = if m % (p * p) == 0 {
            let (g, b, z) = if n >= 3 {
                self.hanke_counts(m / (p * p), n - 2)
            } else {
                (BigInt::one(), BigInt::zero(), BigInt::zero())
            };
            self.pw(self.r) * (g + b + z)
        } else {
            BigInt::zero()
        };
        (good, bad, zero)
    }

    /// `mu_p(m, n)`: the recursion on maximal lattices, brute force otherwise.
    pub fn mu_p(&self, m: i64, n: u32) -> Result<DensityValue> {
        if n == 0 {
            return Ok(DensityValue {
                p: self.p,
                m,
                n,
                value: BigRational::one(),
                parts: None,
            });
        }
        let q = self.check_level(n)?;
        let scale = self.pw(n as usize * (self.r - 1));
        if !self.maximal {
            let c = count_brute(&self.lattice, self.p, n, m, DEFAULT_BRUTE_BUDGET).map_err(|e| match e {
                Error::Budget { .. } => Error::UnsupportedSize(format!(
                    "non-maximal lattice at p={} and brute force over budget: {e}",
                    self.p
                )),
                e => e,
            })?;
            return Ok(DensityValue {
                p: self.p,
                m,
                n,
                value: BigRational::new(c, scale),
                parts: None,
            });
        }
        let (g, b, z) = self.hanke_counts(residue(m, q), n);
        let mk = |x: BigInt| BigRational::new(x, scale.clone());
        let value = mk(&g + &b + &z);
        Ok(DensityValue {
            p: self.p,
            m,
            n,
            value,
            parts: Some((mk(g), mk(b), mk(z))),
        })
    }

    /// `mu^good(m, delta)`.
    pub fn mu_good_base(&self, m: i64) -> Result<BigRational> {
        let delta = self.form.delta();
        let q = self.check_level(delta)?;
        let g = self.form.good_count(&self.base, residue(m, q), delta);
        Ok(BigRational::new(g, self.pw(delta as usize * (self.r - 1))))
    }

    /// Same base count by histograms only (cross-check of the character sums).
    pub fn mu_good_base_hist(&self, m: i64) -> Result<BigRational> {
        let delta = self.form.delta();
        let q = self.check_level(delta)?;
        let g = self.form.good_by_hist(&self.base, residue(m, q), delta);
        Ok(BigRational::new(g, self.pw(delta as usize * (self.r - 1))))
    }

    /// Explicit three-case formula for odd p on maximal lattices.
    pub fn mu_p_closed_form(&self, m: i64, n: u32) -> Result<BigRational> {
        if self.p == 2 || !self.maximal {
            return Err(Error::Domain("closed form needs odd p and a maximal lattice".into()));
        }
        if m == 0 {
            return Err(Error::Domain("closed form needs m != 0".into()));
        }
        if n == 0 {
            return Ok(BigRational::one());
        }
        let p = self.p;
        let r = self.r as i64;
        let v = arith::val_i128(m as i128, p) as i64;
        let s0 = self.splitting.s0 as i64;
        let pr = |e: i64| arith::rat_pow(p, e);
        let scale1 = self.pw(self.r - 1);
        let good1 = |nus: &[u32], x: i64| -> BigRational {
            BigRational::new(self.form.good_count(nus, residue(x, p as u128), 1), scale1.clone())
        };
        let qn = self.base.clone();
        let qp = self.prime_nus();
        let dpd = if arith::val_big(&self.lattice.det(), p) > 0 {
            BigRational::one()
        } else {
            BigRational::zero()
        };
        let pe = |e: i64| -> i64 { (p as i64).pow(e as u32) };
        let sums = |upper_good: i64, upper_bad: i64| -> BigRational {
            let mut s = BigRational::zero();
            for u in 0..=upper_good {
                s += pr((2 - r) * u) * good1(&qn, m / pe(2 * u));
            }
            let mut t = BigRational::zero();
            for u in 0..=upper_bad {
                t += pr((2 - r) * u) * good1(&qp, m / pe(2 * u + 1));
            }
            s + &dpd * pr(1 - s0) * t
        };
        let n = n as i64;
        if n >= v + 1 {
            return Ok(sums(v / 2, (v - 1).div_euclid(2)));
        }
        if n % 2 == 1 {
            let head = {
                let x = m / pe(n - 1);
                let d = self.mu_p(x, 1)?.value;
                pr((2 - r) * (n - 1) / 2) * d
            };
            Ok(head + sums((n - 3) / 2, (n - 3) / 2))
        } else {
            let x = m / pe(n - 2);
            // mu^zero(x, 2) = p^{2-r} since p^2 | x here.
            let zero2 = if x % (p as i64 * p as i64) == 0 { pr(2 - r) } else { BigRational::zero() };
            Ok(pr((2 - r) * (n - 2) / 2) * zero2 + sums((n - 2) / 2, (n - 2) / 2))
        }
    }

    /// `mu_p(Q, m)` at the stabilisation level, checked against level w + 1.
    pub fn mu_p_limit(&self, m: i64) -> Result<LocalLimit> {
        if m == 0 {
            return Err(Error::Domain("local limit needs m != 0".into()));
        }
        let w = w_p(self.p, m);
        let (a, b) = if self.maximal {
            (self.mu_p(m, w)?.value, self.mu_p(m, w + 1)?.value)
        } else {
            (self.mu_general(m, w)?, self.mu_general(m, w + 1)?)
        };
        if a != b {
            return Err(Error::Domain(format!(
                "density at p={} m={m} not stable at w={w}: {a} vs {b}",
                self.p
            )));
        }
        Ok(LocalLimit {
            p: self.p,
            m,
            w,
            value: a,
        })
    }

    /// `mu_p(Q, m)` for any lattice via the general reduction, at a level past which
    /// every valuation shift has been absorbed.
    pub fn mu_limit_general(&self, m: i64) -> Result<BigRational> {
        if m == 0 {
            return Err(Error::Domain("local limit needs m != 0".into()));
        }
        let vmax = self.base.iter().copied().max().unwrap_or(0);
        let n = w_p(self.p, m) + vmax + if self.p == 2 { 2 } else { 1 };
        let a = self.mu_general(m, n)?;
        let b = self.mu_general(m, n + 1)?;
        if a != b {
            return Err(Error::Domain(format!("general density not stable at level {n}")));
        }
        Ok(a)
    }

    /// `mu_p(Q, m)` for any lattice without fixing a level:
    /// `mu = g(m) + [p | m] p^{1 - s0} mu'(m / p)`, where the good density `g` is
    /// already stable at level delta and `'` shifts the valuations.  No modulus
    /// beyond p^delta is ever formed, so deep Jordan forms are fine.
    pub fn mu_limit_recursive(&self, m: i64) -> Result<BigRational> {
        if m == 0 {
            return Err(Error::Domain("local limit needs m != 0".into()));
        }
        Ok(self.limit_nus(&self.base, m as i128))
    }

    fn limit_nus(&self, nus: &[u32], m: i128) -> BigRational {
        let delta = self.form.delta();
        let q = pow_u128(self.p, delta).unwrap();
        let g = self.form.good_count(nus, m.rem_euclid(q as i128) as u128, delta);
        let mut out = BigRational::new(g, self.pw(delta as usize * (self.r - 1)));
        if m % self.p as i128 == 0 {
            let shifted: Vec<u32> = nus.iter().map(|&v| if v == 0 { 1 } else { v - 1 }).collect();
            let s0 = self.form.s0(nus) as i64;
            out += arith::rat_pow(self.p, 1 - s0) * self.limit_nus(&shifted, m / self.p as i128);
        }
        out
    }

    /// `|w - sum_{n<w} mu(m,n) / mu(m,w)|`, exactly.
    pub fn count_identity_deviation(&self, m: i64) -> Result<BigRational> {
        let w = w_p(self.p, m);
        let top = self.mu_p(m, w)?.value;
        if top.is_zero() {
            return Err(Error::Domain(format!("m={m} not represented locally at p={}", self.p)));
        }
        let mut s = BigRational::zero();
        for n in 0..w {
            s += self.mu_p(m, n)?.value / &top;
        }
        Ok((BigRational::from_integer(BigInt::from(w)) - s).abs())
    }

    pub fn lattice(&self) -> &IntegralLattice {
        &self.lattice
    }
}

/// Convenience wrapper around [`LocalDensity::mu_p`].
pub fn mu_p(lat: &IntegralLattice, p: u64, m: i64, n: u32) -> Result<DensityValue> {
    LocalDensity::new(lat, p)?.mu_p(m, n)
}

pub fn mu_p_limit(lat: &IntegralLattice, p: u64, m: i64) -> Result<LocalLimit> {
    LocalDensity::new(lat, p)?.mu_p_limit(m)
}

pub fn mu_good_base(lat: &IntegralLattice, p: u64, m: i64) -> Result<BigRational> {
    LocalDensity::new(lat, p)?.mu_good_base(m)
}

/// Checks representability of m over Z: a hyperbolic pair gives every m,
/// otherwise a box search with coordinates bounded by `bound`.
pub fn represents(lat: &IntegralLattice, m: i64, bound: i128) -> bool {
    if crate::enumerate::find_hyperbolic_pair(lat, 2).is_some() {
        return true;
    }
    let r = lat.rank();
    let mut x = vec![-bound; r];
    loop {
        if lat.q(&x) == m as i128 && x.iter().any(|&c| c != 0) {
            return true;
        }
        let mut k = 0;
        loop {
            if k == r {
                return false;
            }
            x[k] += 1;
            if x[k] <= bound {
                break;
            }
            x[k] = -bound;
            k += 1;
        }
    }
}

/// Count-identity deviation, requiring `m` to be represented by the lattice.
pub fn check_count_identity(lat: &IntegralLattice, p: u64, m: i64) -> Result<BigRational> {
    if !represents(lat, m, 4) {
        return Err(Error::Domain(format!("m={m} not represented within the search bound")));
    }
    LocalDensity::new(lat, p)?.count_identity_deviation(m)
}

/// Truncated singular series with a rigorous tail bound.
#[derive(Clone, Debug)]
pub struct SingularSeries {
    pub m: i64,
    pub p_trunc: u64,
    /// Exact local factors in ascending prime order.
    pub factors: Vec<(u64, BigRational)>,
    pub value: f64,
    /// Relative error bound for the omitted primes.
    pub error_bound: f64,
}

/// Relative tail bound `exp(2 sum_{p > P} p^{-(r-1)/2}) - 1`.
///
/// For p not dividing 2 m det(L) the factor equals `N_m(p) / p^{r-1}`, whose
/// character-sum evaluation gives `|mu_p - 1| <= p^{-(r-1)/2}`, so
/// `|log mu_p| <= 2 p^{-(r-1)/2}`; the prime sum is majorised by the integral
/// `int_P^inf x^{-e} dx = P^{1-e} / (e - 1)` with `e = (r-1)/2 >= 2`.
pub fn singular_series_tail(r: usize, p_trunc: u64) -> f64 {
    let e = (r as f64 - 1.0) / 2.0;
    let tail = (p_trunc as f64).powf(1.0 - e) / (e - 1.0);
    (2.0 * tail).exp_m1()
}

/// Per-lattice cache of density engines.
pub struct DensityCache {
    lattice: IntegralLattice,
    engines: Mutex<HashMap<u64, std::sync::Arc<LocalDensity>>>,
}

impl DensityCache {
    pub fn new(lat: &IntegralLattice) -> Self {
        Self {
            lattice: lat.clone(),
            engines: Mutex::new(HashMap::new()),
        }
    }

    pub fn engine(&self, p: u64) -> Result<std::sync::Arc<LocalDensity>> {
        if let Some(e) = self.engines.lock().unwrap().get(&p) {
            return Ok(e.clone());
        }
        let e = std::sync::Arc::new(LocalDensity::new(&self.lattice, p)?);
        self.engines.lock().unwrap().insert(p, e.clone());
        Ok(e)
    }

    pub fn lattice(&self) -> &IntegralLattice {
        &self.lattice
    }

    /// Local factor; for p not dividing 2 m det(L) the closed count mod p is used.
    pub fn local_factor(&self, p: u64, m: i64) -> Result<BigRational> {
        Ok(self.engine(p)?.mu_p_limit(m)?.value)
    }

    pub fn singular_series(&self, m: i64, p_trunc: u64) -> Result<SingularSeries> {
        let lat = &self.lattice;
        let r = lat.rank();
        if r < 5 {
            return Err(Error::Domain("singular series tail bound needs rank >= 5".into()));
        }
        if m <= 0 {
            return Err(Error::Domain("singular series needs m > 0".into()));
        }
        let det = lat.disc_abs();
        let support = 2 * det * m as u64;
        let needed = arith::prime_divisors(support);
        if let Some(&pmax) = needed.last() {
            if p_trunc < pmax {
                return Err(Error::Domain(format!(
                    "truncation prime {p_trunc} below support prime {pmax} of 2 m det(L)"
                )));
            }
        }
        for &p in arith::prime_divisors(2 * det).iter() {
            if !self.engine(p)?.maximal {
                return Err(Error::Domain(format!("lattice not maximal at {p}")));
            }
        }
        let mut factors = Vec::new();
        let mut value = 1.0;
        for p in arith::primes_up_to(p_trunc) {
            let f = self.local_factor(p, m)?;
            value *= arith::rat_to_f64(&f);
            factors.push((p, f));
        }
        Ok(SingularSeries {
            m,
            p_trunc,
            factors,
            value,
            error_bound: singular_series_tail(r, p_trunc),
        })
    }
}

pub fn singular_series(lat: &IntegralLattice, m: i64, p_trunc: u64) -> Result<SingularSeries> {
    DensityCache::new(lat).singular_series(m, p_trunc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn brute_force_small_cases() {
        let u = IntegralLattice::hyperbolic();
        assert_eq!(count_brute(&u, 3, 1, 1, 1e9).unwrap(), BigInt::from(2));
        assert_eq!(count_brute(&u, 3, 0, 1, 1e9).unwrap(), BigInt::one());
        let l5 = IntegralLattice::l5();
        for p in [2, 3] {
            for n in 1..=2 {
                for m in 0..9 {
                    assert_eq!(
                        count_brute(&l5, p, n, m, 1e9).unwrap(),
                        count_naive(&l5, p, n, m).unwrap()
                    );
                }
            }
        }
        assert!(matches!(count_brute(&l5, 7, 3, 1, 1e4), Err(Error::Budget { .. })));
    }

    #[test]
    fn w_levels() {
        assert_eq!(w_p(3, 9), 3);
        assert_eq!(w_p(2, 6), 5);
        assert_eq!(w_p(5, 7), 1);
        assert_eq!(w_p(2, 2), 5);
    }

    #[test]
    fn good_base_hyperbolic() {
        let u = IntegralLattice::hyperbolic();
        let ld = LocalDensity::new(&u, 5).unwrap();
        assert_eq!(ld.mu_good_base(1).unwrap(), q(4, 5));
    }

    #[test]
    fn gauss_matches_histograms() {
        let lats = [
            IntegralLattice::l5(),
            IntegralLattice::u3(),
            IntegralLattice::diagonal_q(&[1, 1, 1, 1, 1]).unwrap(),
            IntegralLattice::diagonal_q(&[1, 3, 2, 6, 5]).unwrap(),
        ];
        for lat in &lats {
            for p in [3, 5, 7, 11] {
                let ld = LocalDensity::new(lat, p).unwrap();
                for m in 0..2 * p as i64 {
                    assert_eq!(ld.mu_good_base(m).unwrap(), ld.mu_good_base_hist(m).unwrap());
                }
            }
        }
    }
}
