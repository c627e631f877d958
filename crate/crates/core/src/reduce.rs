//! Positive-definite lattices: exact LLL, short-vector enumeration and
//! successive minima.
//!
//! Norms are taken with respect to Q itself: `|v| = sqrt(Q(v))`, so a lattice
//! with Q-diagonal `(1, 4)` has minima `(1, 2)`.

use crate::error::{Error, Result};
use crate::lattice::IntegralLattice;
use crate::matrix::{self, BMat};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// LLL reduction (delta = 3/4) of a positive-definite integral Gram matrix in
/// exact integer arithmetic.  Returns the reduced Gram and the transform whose
/// rows are the new basis vectors in old coordinates.
pub fn lll_gram(gram: &BMat) -> Result<(BMat, BMat)> {
    let n = gram.len();
    let mut g = gram.clone();
    let mut h = matrix::identity_big(n);
    if n <= 1 {
        return Ok((g, h));
    }
    // 1-based bookkeeping as in the integral LLL of Cohen.
    let mut d = vec![BigInt::zero(); n + 1];
    d[0] = BigInt::one();
    let mut lam = vec![vec![BigInt::zero(); n + 1]; n + 1];
    d[1] = g[0][0].clone();
    if !d[1].is_positive() {
        return Err(Error::Domain("Gram matrix is not positive definite".into()));
    }
    let mut k = 2usize;
    let mut kmax = 1usize;

    fn red(
        k: usize,
        l: usize,
        g: &mut BMat,
        h: &mut BMat,
        d: &[BigInt],
        lam: &mut [Vec<BigInt>],
    ) {
        let two = BigInt::from(2);
        if (&lam[k][l] * &two).abs() <= d[l] {
            return;
        }
        // q = round(lam / d)
        let q = (&lam[k][l] * &two + &d[l]).div_floor(&(&d[l] * &two));
        let n = g.len();
        let (kk, ll) = (k - 1, l - 1);
        for t in 0..n {
            let v = &q * &h[ll][t];
            h[kk][t] -= v;
        }
        for t in 0..n {
            let v = &q * &g[ll][t];
            g[kk][t] -= v;
        }
        for t in 0..n {
            let v = &q * &g[t][ll];
            g[t][kk] -= v;
        }
        let v = &q * &d[l];
        lam[k][l] -= v;
        for i in 1..l {
            let v = &q * &lam[l][i];
            lam[k][i] -= v;
        }
    }

    let mut guard = 0u64;
    while k <= n {
        guard += 1;
        if guard > 10_000_000 {
            return Err(Error::Domain("LLL did not terminate".into()));
        }
        if k > kmax {
            kmax = k;
            for j in 1..=k {
                let mut u = g[k - 1][j - 1].clone();
                for i in 1..j {
                    u = (&d[i] * &u - &lam[k][i] * &lam[j][i]) / &d[i - 1];
                }
                if j < k {
                    lam[k][j] = u;
                } else {
                    if !u.is_positive() {
                        return Err(Error::Domain("Gram matrix is not positive definite".into()));
                    }
                    d[k] = u;
                }
            }
        }
        red(k, k - 1, &mut g, &mut h, &d, &mut lam);
        let lhs = BigInt::from(4) * &d[k] * &d[k - 2];
        let rhs = BigInt::from(3) * &d[k - 1] * &d[k - 1] - BigInt::from(4) * &lam[k][k - 1] * &lam[k][k - 1];
        if lhs < rhs {
            // swap b_k and b_{k-1}
            h.swap(k - 1, k - 2);
            g.swap(k - 1, k - 2);
            for row in g.iter_mut() {
                row.swap(k - 1, k - 2);
            }
            for j in 1..k - 1 {
                let t = lam[k][j].clone();
                lam[k][j] = lam[k - 1][j].clone();
                lam[k - 1][j] = t;
            }
            let l = lam[k][k - 1].clone();
            let b = (&d[k - 2] * &d[k] + &l * &l) / &d[k - 1];
            for i in k + 1..=kmax {
                let t = lam[i][k].clone();
                lam[i][k] = (&d[k] * &lam[i][k - 1] - &l * &t) / &d[k - 1];
                lam[i][k - 1] = (&b * &t + &l * &lam[i][k]) / &d[k];
            }
            d[k - 1] = b;
            if k > 2 {
                k -= 1;
            }
        } else {
            for l in (1..k - 1).rev() {
                red(k, l, &mut g, &mut h, &d, &mut lam);
            }
            k += 1;
        }
    }
    Ok((g, h))
}

/// A positive-definite lattice prepared for enumeration.
#[derive(Clone, Debug)]
pub struct ShortVectors {
    /// Reduced Gram (bilinear values).
    pub gram: Vec<Vec<i128>>,
    /// Rows: reduced basis in the original coordinates.
    pub basis: Vec<Vec<BigInt>>,
    pub(crate) chol: Vec<Vec<f64>>,
    pub budget: f64,
}

pub const DEFAULT_SHORT_BUDGET: f64 = 5e8;

fn to_i128_mat(m: &BMat) -> Result<Vec<Vec<i128>>> {
    m.iter()
        .map(|row| {
            row.iter()
                .map(|x| x.to_i128().ok_or_else(|| Error::UnsupportedSize("reduced Gram exceeds i128".into())))
                .collect()
        })
        .collect()
}

impl ShortVectors {
    pub fn new(lat: &IntegralLattice) -> Result<Self> {
        Self::from_gram_big(&matrix::to_big(lat.gram()))
    }

    pub fn from_gram_big(gram: &BMat) -> Result<Self> {
        let (g, h) = lll_gram(gram)?;
        let gi = to_i128_mat(&g)?;
        let r = gi.len();
        // Q = y^T A y with A = G / 2.
        let a: Vec<Vec<f64>> = gi.iter().map(|row| row.iter().map(|&x| x as f64 / 2.0).collect()).collect();
        let mut q = vec![vec![0.0; r]; r];
        for i in 0..r {
            let mut d = a[i][i];
            for k in 0..i {
                d -= q[k][k] * q[k][i] * q[k][i];
            }
            if !(d > 0.0) {
                return Err(Error::Domain("Gram matrix is not positive definite".into()));
            }
            q[i][i] = d;
            for j in i + 1..r {
                let mut s = a[i][j];
                for k in 0..i {
                    s -= q[k][k] * q[k][i] * q[k][j];
                }
                q[i][j] = s / d;
            }
        }
        Ok(Self {
            gram: gi,
            basis: h,
            chol: q,
            budget: DEFAULT_SHORT_BUDGET,
        })
    }

    pub fn rank(&self) -> usize {
        self.gram.len()
    }

    pub fn q(&self, y: &[i128]) -> i128 {
        let r = self.rank();
        let mut s = 0i128;
        for i in 0..r {
            if y[i] == 0 {
                continue;
            }
            s += self.gram[i][i] / 2 * y[i] * y[i];
            for j in i + 1..r {
                s += self.gram[i][j] * y[i] * y[j];
            }
        }
        s
    }

    /// Vector in the original coordinates for reduced coordinates `y`.
    pub fn lift(&self, y: &[i128]) -> Vec<BigInt> {
        let r = self.rank();
        let n = self.basis[0].len();
        (0..n)
            .map(|t| {
                (0..r)
                    .filter(|&i| y[i] != 0)
                    .map(|i| BigInt::from(y[i]) * &self.basis[i][t])
                    .sum()
            })
            .collect()
    }

    /// Rough node count of the enumeration of `Q <= bound`.
    pub fn work_estimate(&self, bound: f64) -> f64 {
        let r = self.rank();
        let det: f64 = (0..r).map(|i| self.chol[i][i]).product();
        crate::enumerate::ball_volume(r) * bound.max(0.0).powf(r as f64 / 2.0) / det.sqrt() + r as f64
    }

    /// Visits all nonzero `y` with `Q(y) <= bound` (both signs), passing `Q(y)`.
    pub fn for_each<F: FnMut(&[i128], i128)>(&self, bound: i128, mut f: F) -> Result<()> {
        if bound <= 0 {
            return Ok(());
        }
        let est = self.work_estimate(bound as f64);
        if est > self.budget {
            return Err(Error::Budget {
                estimate: est,
                budget: self.budget,
            });
        }
        let r = self.rank();
        let mut y = vec![0i128; r];
        let radius = bound as f64 * (1.0 + 1e-9) + 1e-9;
        self.rec(r, 0.0, radius, bound, &mut y, &mut f);
        Ok(())
    }

    fn rec<F: FnMut(&[i128], i128)>(&self, level: usize, used: f64, radius: f64, bound: i128, y: &mut Vec<i128>, f: &mut F) {
        if level == 0 {
            if y.iter().any(|&c| c != 0) {
                let q = self.q(y);
                if q <= bound {
                    f(y, q);
                }
            }
            return;
        }
        let i = level - 1;
        let mut c = 0.0;
        for j in i + 1..self.rank() {
            c -= self.chol[i][j] * y[j] as f64;
        }
        let rem = radius - used;
        if rem < 0.0 {
            return;
        }
        let h = (rem / self.chol[i][i]).sqrt();
        let lo = (c - h).ceil() as i128;
        let hi = (c + h).floor() as i128;
        for v in lo..=hi {
            let d = v as f64 - c;
            let u2 = used + self.chol[i][i] * d * d;
            if u2 <= radius {
                y[i] = v;
                self.rec(i, u2, radius, bound, y, f);
            }
        }
        y[i] = 0;
    }

    /// `#{v != 0 : Q(v) = m}`.
    pub fn count_eq(&self, m: i128) -> Result<u64> {
        let mut c = 0u64;
        self.for_each(m, |_, q| {
            if q == m {
                c += 1;
            }
        })?;
        Ok(c)
    }

    /// `#{v != 0 : Q(v) <= bound}`.
    pub fn count_upto(&self, bound: i128) -> Result<u64> {
        let mut c = 0u64;
        self.for_each(bound, |_, _| c += 1)?;
        Ok(c)
    }

    /// Counts of nonzero vectors by exact value of Q, for values `<= bound`.
    pub fn value_histogram(&self, bound: i128) -> Result<Vec<u64>> {
        let mut h = vec![0u64; bound.max(0) as usize + 1];
        self.for_each(bound, |_, q| h[q as usize] += 1)?;
        Ok(h)
    }

    /// Successive minima as values of Q (not square-rooted), with witnesses in
    /// reduced coordinates.
    pub fn minima_q(&self) -> Result<Vec<(i128, Vec<i128>)>> {
        let r = self.rank();
        // The reduced basis itself certifies r independent vectors below this bound.
        let bound = (0..r).map(|i| self.gram[i][i] / 2).max().unwrap_or(0);
        let mut vecs: Vec<(i128, Vec<i128>)> = Vec::new();
        self.for_each(bound, |y, q| {
            // one of each +-pair
            let first = y.iter().find(|&&c| c != 0).copied().unwrap_or(0);
            if first > 0 {
                vecs.push((q, y.to_vec()));
            }
        })?;
        vecs.sort();
        let mut chosen: Vec<(i128, Vec<i128>)> = Vec::new();
        let mut echelon: Vec<Vec<BigRational>> = Vec::new();
        for (q, y) in vecs {
            if chosen.len() == r {
                break;
            }
            if extend_if_independent(&mut echelon, &y) {
                chosen.push((q, y));
            }
        }
        if chosen.len() != r {
            return Err(Error::Domain("failed to find independent minima".into()));
        }
        Ok(chosen)
    }
}

/// Incremental rank test by Gaussian elimination over Q.
fn extend_if_independent(echelon: &mut Vec<Vec<BigRational>>, y: &[i128]) -> bool {
    let mut v: Vec<BigRational> = y.iter().map(|&c| BigRational::from_integer(c.into())).collect();
    for row in echelon.iter() {
        let piv = row.iter().position(|x| !x.is_zero()).unwrap();
        if !v[piv].is_zero() {
            let f = &v[piv] / &row[piv];
            for (a, b) in v.iter_mut().zip(row) {
                *a -= &f * b;
            }
        }
    }
    if v.iter().all(|x| x.is_zero()) {
        return false;
    }
    echelon.push(v);
    true
}

/// Successive minima `mu_i = sqrt(Q(v_i))` and products `a_0 = 1, a_i = prod_{j<=i} mu_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Minima {
    pub mu: Vec<f64>,
    pub a: Vec<f64>,
    pub mu_sq: Vec<i128>,
}

pub fn successive_minima(lat: &IntegralLattice) -> Result<Minima> {
    if !lat.is_positive_definite() {
        return Err(Error::Domain("successive minima need a positive-definite lattice".into()));
    }
    minima_of(&ShortVectors::new(lat)?)
}

pub fn minima_of(sv: &ShortVectors) -> Result<Minima> {
    let mins = sv.minima_q()?;
    let mu_sq: Vec<i128> = mins.iter().map(|(q, _)| *q).collect();
    let mu: Vec<f64> = mu_sq.iter().map(|&q| (q as f64).sqrt()).collect();
    let mut a = vec![1.0];
    for m in &mu {
        a.push(a.last().unwrap() * m);
    }
    Ok(Minima { mu, a, mu_sq })
}

/// Two-sided Minkowski bounds on `a_r` for a lattice with Q-Gram `A = G / 2`:
/// `2^r / (r! V_r) sqrt(det A) <= a_r <= 2^r / V_r sqrt(det A)`.
pub fn minkowski_bounds(lat: &IntegralLattice) -> (f64, f64) {
    let r = lat.rank();
    let det_a = crate::arith::rat_to_f64(&BigRational::new(lat.det(), num_traits::pow(BigInt::from(2), r)));
    let vol = det_a.sqrt();
    let vr = crate::enumerate::ball_volume(r);
    let two_r = 2f64.powi(r as i32);
    let fact: f64 = (1..=r).map(|i| i as f64).product();
    (two_r / (fact * vr) * vol, two_r / vr * vol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_minima() {
        let lat = IntegralLattice::diagonal_q(&[1, 4]).unwrap();
        let m = successive_minima(&lat).unwrap();
        assert_eq!(m.mu, vec![1.0, 2.0]);
        assert_eq!(m.a, vec![1.0, 1.0, 2.0]);
        let unit = IntegralLattice::diagonal_q(&[1; 5]).unwrap();
        assert!(successive_minima(&unit).unwrap().mu.iter().all(|&x| x == 1.0));
        assert!(successive_minima(&IntegralLattice::l5()).is_err());
    }

    #[test]
    fn lll_keeps_determinant_and_reduces() {
        let g = vec![
            vec![2, 2 * 1000, 0],
            vec![2 * 1000, 2 * 1000 * 1000 + 2, 2],
            vec![0, 2, 4],
        ];
        let lat = IntegralLattice::new(g).unwrap();
        let (red, h) = lll_gram(&matrix::to_big(lat.gram())).unwrap();
        let hi: Vec<Vec<i128>> = h.iter().map(|r| r.iter().map(|x| x.to_i128().unwrap()).collect()).collect();
        let d = matrix::det(&hi);
        assert!(d == BigInt::one() || d == -BigInt::one());
        assert!(red.iter().flatten().all(|x| x.abs() <= BigInt::from(8)));
        let ri: Vec<Vec<i128>> = red.iter().map(|r| r.iter().map(|x| x.to_i128().unwrap()).collect()).collect();
        assert_eq!(matrix::det(&ri), lat.det());
    }

    #[test]
    fn counts_of_unit_form() {
        let unit = IntegralLattice::diagonal_q(&[1; 5]).unwrap();
        let sv = ShortVectors::new(&unit).unwrap();
        assert_eq!(sv.count_eq(1).unwrap(), 10);
        // r_5(2) = 4 * C(5,2) = 40
        assert_eq!(sv.count_eq(2).unwrap(), 40);
        let h = sv.value_histogram(3).unwrap();
        assert_eq!(h[1..].to_vec(), vec![10, 40, 80]);
    }
}
