//! Enumeration of `{lambda in L : Q(lambda) = m, -Q(lambda_x) <= T m}`.
//!
//! Every such vector satisfies `Q_x(lambda) <= m (1 + 2T)` for the majorant, so
//! the search runs over that ellipsoid.  Two exact strategies share one
//! interface:
//!
//! * `Generic`: Fincke-Pohst over an LLL-reduced basis of the majorant;
//! * `Hyperbolic`: when L contains a hyperbolic pair `e, f`, write
//!   `L = Ze + Zf + M` and `lambda = s e + t f + a`.  Then `Q(lambda) = st + Q(a)`,
//!   so for each `a` in the projected ellipsoid the inner pair is read off
//!   from the divisors of `m - Q(a)`.

use crate::error::{Error, Result};
use crate::lattice::IntegralLattice;
use crate::matrix;
use crate::point::PeriodPoint;
use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use std::sync::{Arc, RwLock};

pub const DEFAULT_ENUM_BUDGET: f64 = 2e11;

/// Cholesky data in Fincke-Pohst form:
/// `y^T A y = sum_i q[i][i] (y_i + sum_{j>i} q[i][j] y_j)^2`.
fn fp_cholesky(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let r = a.len();
    let mut q = vec![vec![0.0; r]; r];
    for i in 0..r {
        let mut d = a[i][i];
        for k in 0..i {
            d -= q[k][k] * q[k][i] * q[k][i];
        }
        if !(d > 0.0) {
            return None;
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
    Some(q)
}

/// LLL on a real positive-definite Gram matrix; returns the reduced Gram and the
/// integer transform whose columns are the new basis in old coordinates.
pub fn lll_real(gram: &[Vec<f64>], delta: f64) -> (Vec<Vec<f64>>, Vec<Vec<i128>>) {
    let r = gram.len();
    let mut a: Vec<Vec<f64>> = gram.to_vec();
    let mut u: Vec<Vec<i128>> = (0..r)
        .map(|i| (0..r).map(|j| (i == j) as i128).collect())
        .collect();
    if r <= 1 {
        return (a, u);
    }
    let gso = |a: &[Vec<f64>]| -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut mu = vec![vec![0.0; r]; r];
        let mut bs = vec![0.0; r];
        for i in 0..r {
            for j in 0..i {
                let mut s = a[i][j];
                for k in 0..j {
                    s -= mu[j][k] * mu[i][k] * bs[k];
                }
                mu[i][j] = s / bs[j];
            }
            let mut s = a[i][i];
            for k in 0..i {
                s -= mu[i][k] * mu[i][k] * bs[k];
            }
            bs[i] = s;
        }
        (mu, bs)
    };
    // b_k <- b_k - c b_j
    let reduce = |a: &mut Vec<Vec<f64>>, u: &mut Vec<Vec<i128>>, k: usize, j: usize, c: i128| {
        let cf = c as f64;
        for t in 0..r {
            a[k][t] -= cf * a[j][t];
        }
        for t in 0..r {
            a[t][k] -= cf * a[t][j];
        }
        for row in u.iter_mut() {
            row[k] -= c * row[j];
        }
    };
    let mut k = 1;
    let mut guard = 0usize;
    while k < r && guard < 100_000 {
        guard += 1;
        for j in (0..k).rev() {
            let (mu, _) = gso(&a);
            let c = mu[k][j].round();
            if c != 0.0 {
                reduce(&mut a, &mut u, k, j, c as i128);
            }
        }
        let (mu, bs) = gso(&a);
        if bs[k] < (delta - mu[k][k - 1] * mu[k][k - 1]) * bs[k - 1] {
            a.swap(k, k - 1);
            for row in a.iter_mut() {
                row.swap(k, k - 1);
            }
            for row in u.iter_mut() {
                row.swap(k, k - 1);
            }
            k = (k - 1).max(1);
        } else {
            k += 1;
        }
    }
    (a, u)
}

/// Hyperbolic pair `e, f` with `Q(e) = Q(f) = 0`, `(e.f) = 1`, searched over the box
/// `|coords| <= bound` in lexicographic order.
pub fn find_hyperbolic_pair(lat: &IntegralLattice, bound: i128) -> Option<(Vec<i128>, Vec<i128>)> {
    let r = lat.rank();
    let side = (2 * bound + 1) as usize;
    let total = side.checked_pow(r as u32)?;
    if total > 2_000_000 {
        return None;
    }
    let vec_of = |mut code: usize| -> Vec<i128> {
        (0..r)
            .map(|_| {
                let c = (code % side) as i128 - bound;
                code /= side;
                c
            })
            .collect()
    };
    let isotropic: Vec<Vec<i128>> = (0..total)
        .map(vec_of)
        .filter(|v| v.iter().any(|&c| c != 0) && lat.q(v) == 0)
        .collect();
    for e in &isotropic {
        for f in &isotropic {
            if lat.bilinear(e, f) == 1 {
                return Some((e.clone(), f.clone()));
            }
        }
    }
    None
}

/// Hyperbolic pair minimising the majorant determinant on its span, which is the
/// volume factor of the outer search.  `a` is the majorant as `Q_x = y^T a y`.
fn short_hyperbolic_pair(lat: &IntegralLattice, a: &[Vec<f64>]) -> Option<(Vec<i128>, Vec<i128>)> {
    const BOX: i128 = 2;
    const KEEP: usize = 60;
    let r = lat.rank();
    let (_, u) = lll_real(a, 0.99);
    let qx = |v: &[i128]| -> f64 {
        let mut s = 0.0;
        for i in 0..r {
            for j in 0..r {
                s += a[i][j] * v[i] as f64 * v[j] as f64;
            }
        }
        s
    };
    let bx = |v: &[i128], w: &[i128]| -> f64 {
        let mut s = 0.0;
        for i in 0..r {
            for j in 0..r {
                s += a[i][j] * v[i] as f64 * w[j] as f64;
            }
        }
        s
    };
    let side = (2 * BOX + 1) as usize;
    let total = side.checked_pow(r as u32).filter(|&t| t <= 2_000_000)?;
    let mut vs: Vec<(f64, Vec<i128>)> = (1..total)
        .map(|mut code| {
            let c: Vec<i128> = (0..r)
                .map(|_| {
                    let x = (code % side) as i128 - BOX;
                    code /= side;
                    x
                })
                .collect();
            let v: Vec<i128> = (0..r).map(|i| (0..r).map(|j| u[i][j] * c[j]).sum()).collect();
            (qx(&v), v)
        })
        .filter(|(_, v)| v.iter().any(|&x| x != 0))
        .collect();
    vs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let iso: Vec<&(f64, Vec<i128>)> = vs.iter().filter(|(_, v)| lat.q(v) == 0).take(KEEP).collect();
    let mut best: Option<(f64, Vec<i128>, Vec<i128>)> = None;
    for (qe, e) in iso {
        for (_, v) in &vs {
            let sign = match lat.bilinear(e, v) {
                1 => 1,
                -1 => -1,
                _ => continue,
            };
            let qv = lat.q(v);
            let f: Vec<i128> = (0..r).map(|i| sign * v[i] - qv * e[i]).collect();
            let det = qe * qx(&f) - bx(e, &f).powi(2);
            if best.as_ref().is_none_or(|b| det < b.0) {
                best = Some((det, e.clone(), f));
            }
        }
    }
    best.map(|(_, e, f)| (e, f))
}

/// Sorted divisor lists of `1..=n` in one flat array.
struct DivisorTable {
    n: u64,
    start: Vec<u32>,
    divs: Vec<u32>,
}

/// Largest table kept; bigger arguments fall back to factoring.
const DIVISOR_TABLE_MAX: u64 = 1 << 21;

static DIVISOR_TABLE: RwLock<Option<Arc<DivisorTable>>> = RwLock::new(None);

impl DivisorTable {
    fn new(n: u64) -> Self {
        let len = n as usize;
        let mut count = vec![0u32; len + 2];
        for d in 1..=len {
            for k in (d..=len).step_by(d) {
                count[k + 1] += 1;
            }
        }
        for i in 1..count.len() {
            count[i] += count[i - 1];
        }
        let start = count;
        let mut fill = start.clone();
        let mut divs = vec![0u32; start[len + 1] as usize];
        for d in 1..=len {
            for k in (d..=len).step_by(d) {
                divs[fill[k] as usize] = d as u32;
                fill[k] += 1;
            }
        }
        DivisorTable { n, start, divs }
    }

    /// Shared table covering at least `1..=n` (capped).
    fn covering(n: u64) -> Arc<DivisorTable> {
        let want = n.clamp(1 << 10, DIVISOR_TABLE_MAX).next_power_of_two();
        if let Some(t) = DIVISOR_TABLE.read().unwrap().as_ref() {
            if t.n >= want || t.n == DIVISOR_TABLE_MAX {
                return t.clone();
            }
        }
        let mut guard = DIVISOR_TABLE.write().unwrap();
        match guard.as_ref() {
            Some(t) if t.n >= want => t.clone(),
            _ => {
                let t = Arc::new(DivisorTable::new(want));
                *guard = Some(t.clone());
                t
            }
        }
    }

    fn of(&self, n: u64) -> &[u32] {
        &self.divs[self.start[n as usize] as usize..self.start[n as usize + 1] as usize]
    }
}

struct Scratch {
    table: Arc<DivisorTable>,
    divs: Vec<u64>,
}

/// Interval width below which trial division beats factoring.
const TRIAL_WIDTH: i64 = 16;

struct Spf {
    table: Vec<u32>,
}

impl Spf {
    fn new(n: usize) -> Self {
        let mut table = vec![0u32; n + 1];
        for i in 2..=n {
            if table[i] == 0 {
                let mut j = i;
                while j <= n {
                    if table[j] == 0 {
                        table[j] = i as u32;
                    }
                    j += i;
                }
            }
        }
        Self { table }
    }

    /// Positive divisors of n >= 1.
    fn divisors(&self, n: u64, out: &mut Vec<u64>) {
        out.clear();
        out.push(1);
        let push_prime = |p: u64, e: u32, out: &mut Vec<u64>| {
            let len = out.len();
            let mut pk = 1u64;
            for _ in 0..e {
                pk *= p;
                for i in 0..len {
                    out.push(out[i] * pk);
                }
            }
        };
        let mut n = n;
        if (n as usize) < self.table.len() {
            while n > 1 {
                let p = self.table[n as usize] as u64;
                let mut e = 0;
                while n % p == 0 {
                    n /= p;
                    e += 1;
                }
                push_prime(p, e, out);
            }
        } else {
            for (p, e) in crate::arith::factor(n) {
                push_prime(p, e, out);
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Generic,
    Hyperbolic,
}

/// Precomputed enumeration data for a lattice and period point.
pub struct Enumerator {
    lat: IntegralLattice,
    pt: PeriodPoint,
    strategy: Strategy,
    /// Columns: enumeration basis in lattice coordinates.
    basis: Vec<Vec<i128>>,
    /// Cholesky data of the majorant (as `Q_x = y^T A y`) in the enumeration basis.
    chol: Vec<Vec<f64>>,
    /// Plane pairings of the basis vectors.
    pu: Vec<f64>,
    pw: Vec<f64>,
    /// Gram matrix in the enumeration basis.
    /// `Q` coefficients in the enumeration basis (`G_ii / 2` on the diagonal).
    gram_b: Vec<Vec<i64>>,
    det_a: f64,
    pub budget: f64,
    spf: Spf,
}

impl Enumerator {
    pub fn new(lat: &IntegralLattice, pt: &PeriodPoint) -> Result<Self> {
        let strategy = if find_hyperbolic_pair(lat, 1).is_some() {
            Strategy::Hyperbolic
        } else {
            Strategy::Generic
        };
        Self::with_strategy(lat, pt, strategy)
    }

    pub fn with_strategy(lat: &IntegralLattice, pt: &PeriodPoint, strategy: Strategy) -> Result<Self> {
        lat.b()?;
        let r = lat.rank();
        if pt.rank() != r {
            return Err(Error::InvalidPoint("rank mismatch".into()));
        }
        let maj = pt.majorant();
        let a: Vec<Vec<f64>> = maj
            .gram_real
            .iter()
            .map(|row| row.iter().map(|x| x / 2.0).collect())
            .collect();
        let basis: Vec<Vec<i128>> = match strategy {
            Strategy::Generic => {
                let (_, u) = lll_real(&a, 0.99);
                u
            }
            Strategy::Hyperbolic => {
                let (e, f) = short_hyperbolic_pair(lat, &a)
                    .or_else(|| find_hyperbolic_pair(lat, 1))
                    .or_else(|| find_hyperbolic_pair(lat, 2))
                    .ok_or_else(|| Error::Domain("no hyperbolic pair found".into()))?;
                // M = image of v -> v - (v.f) e - (v.e) f.
                let rows: Vec<Vec<BigInt>> = (0..r)
                    .map(|i| {
                        let mut v = vec![0i128; r];
                        v[i] = 1;
                        let (vf, ve) = (lat.bilinear(&v, &f), lat.bilinear(&v, &e));
                        (0..r).map(|k| BigInt::from(v[k] - vf * e[k] - ve * f[k])).collect()
                    })
                    .collect();
                let h = matrix::hnf_rows(&rows);
                let mvecs: Vec<Vec<i128>> = h
                    .iter()
                    .map(|row| row.iter().map(|x| x.to_i128().unwrap()).collect())
                    .collect();
                if mvecs.len() != r - 2 {
                    return Err(Error::Domain("orthogonal complement of the pair has wrong rank".into()));
                }
                // Reduce M against the Schur complement of the (e, f) block.
                let cols: Vec<Vec<i128>> = [e.clone(), f.clone()].into_iter().chain(mvecs).collect();
                let af = transform_gram_f64(&a, &cols);
                let schur = schur_complement(&af, 2);
                let (_, u) = lll_real(&schur, 0.99);
                let mut reduced = vec![e, f];
                for k in 0..r - 2 {
                    let mut v = vec![0i128; r];
                    for j in 0..r - 2 {
                        if u[j][k] != 0 {
                            for i in 0..r {
                                v[i] += u[j][k] * cols[2 + j][i];
                            }
                        }
                    }
                    reduced.push(v);
                }
                // stored as columns: basis[i][k] = coordinate i of vector k
                let b: Vec<Vec<i128>> = (0..r).map(|i| (0..r).map(|k| reduced[k][i]).collect()).collect();
                b
            }
        };
        let cols: Vec<Vec<i128>> = (0..r).map(|k| (0..r).map(|i| basis[i][k]).collect()).collect();
        let det = matrix::det(&basis);
        if det.clone() * det.clone() != BigInt::from(1) {
            return Err(Error::Domain("enumeration basis is not unimodular".into()));
        }
        let ab = transform_gram_f64(&a, &cols);
        let chol = fp_cholesky(&ab).ok_or_else(|| Error::Domain("majorant not positive definite".into()))?;
        let det_a = (0..r).map(|i| chol[i][i]).product();
        let (pu, pw): (Vec<f64>, Vec<f64>) = cols.iter().map(|c| pt.plane_pairings_int(c)).unzip();
        let gram_b = (0..r)
            .map(|i| {
                (0..r)
                    .map(|j| {
                        let g = lat.bilinear(&cols[i], &cols[j]);
                        let g = if i == j { g / 2 } else { g };
                        i64::try_from(g).map_err(|_| Error::UnsupportedSize("reduced Gram entry".into()))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            lat: lat.clone(),
            pt: pt.clone(),
            strategy,
            basis,
            chol,
            pu,
            pw,
            gram_b,
            det_a,
            budget: DEFAULT_ENUM_BUDGET,
            spf: Spf::new(1 << 20),
        })
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn lattice(&self) -> &IntegralLattice {
        &self.lat
    }

    pub fn point(&self) -> &PeriodPoint {
        &self.pt
    }

    fn rank(&self) -> usize {
        self.chol.len()
    }

    /// Estimated work for an ellipsoid of majorant radius `radius`.
    pub fn work_estimate(&self, radius: f64) -> f64 {
        let r = self.rank();
        match self.strategy {
            Strategy::Generic => ball_volume(r) * radius.powf(r as f64 / 2.0) / self.det_a.sqrt() + 1.0,
            Strategy::Hyperbolic => {
                let k = r - 2;
                let det_s: f64 = (2..r).map(|i| self.chol[i][i]).product();
                let outer = ball_volume(k) * radius.powf(k as f64 / 2.0) / det_s.sqrt() + 1.0;
                outer * (2.0 + radius.max(2.0).log2())
            }
        }
    }

    fn to_lattice(&self, y: &[i64]) -> Vec<i128> {
        let r = self.rank();
        (0..r)
            .map(|i| (0..r).map(|k| self.basis[i][k] * y[k] as i128).sum())
            .collect()
    }

    /// Values of the outermost coordinate, for deterministic parallel splitting.
    fn outer_range(&self, radius: f64) -> (i64, i64) {
        let r = self.rank();
        let h = (radius * (1.0 + 1e-9) / self.chol[r - 1][r - 1]).sqrt();
        ((-h).floor() as i64 - 1, h.ceil() as i64 + 1)
    }

    /// Visits every `(y, lambda_x pairings)` with `Q = m` inside `Q_x <= radius`,
    /// with the outermost coordinate fixed to `top`.  The callback receives the
    /// enumeration coordinates and `-Q(lambda_x)`.
    fn visit_slice<F: FnMut(&[i64], f64)>(&self, m: i64, radius: f64, top: i64, f: &mut F) {
        let r = self.rank();
        let mut y = vec![0i64; r];
        y[r - 1] = top;
        let d = top as f64;
        let used = self.chol[r - 1][r - 1] * d * d;
        let slack = radius * 1e-9 + 1e-9;
        if used > radius + slack {
            return;
        }
        match self.strategy {
            Strategy::Generic => self.fp_generic(m, radius + slack, r - 1, used, &mut y, f),
            Strategy::Hyperbolic => {
                let mut sc = Scratch {
                    table: DivisorTable::covering((32.0 * radius) as u64),
                    divs: Vec::new(),
                };
                self.fp_hyper(m, radius + slack, r - 1, used, &mut y, f, &mut sc)
            }
        }
    }

    fn center(&self, i: usize, y: &[i64]) -> f64 {
        let r = self.rank();
        let mut c = 0.0;
        for j in i + 1..r {
            c -= self.chol[i][j] * y[j] as f64;
        }
        c
    }

    /// `Q` in enumeration coordinates; `gram_b` holds `G_ii / 2` on the diagonal.
    fn q_b(&self, y: &[i64]) -> i64 {
        let r = self.rank();
        let mut s = 0i64;
        for i in 0..r {
            if y[i] == 0 {
                continue;
            }
            let row = &self.gram_b[i];
            let mut t = row[i] * y[i];
            for j in i + 1..r {
                t += row[j] * y[j];
            }
            s += t * y[i];
        }
        s
    }

    fn neg_qx(&self, y: &[i64]) -> f64 {
        let mut a = 0.0;
        let mut b = 0.0;
        for (k, &c) in y.iter().enumerate() {
            if c != 0 {
                a += c as f64 * self.pu[k];
                b += c as f64 * self.pw[k];
            }
        }
        (a * a + b * b) / 4.0
    }

    fn fp_generic<F: FnMut(&[i64], f64)>(
        &self,
        m: i64,
        radius: f64,
        level: usize,
        used: f64,
        y: &mut Vec<i64>,
        f: &mut F,
    ) {
        if level == 0 {
            if self.q_b(y) == m {
                let nq = self.neg_qx(y);
                f(y, nq);
            }
            return;
        }
        let i = level - 1;
        let c = self.center(i, y);
        let rem = radius - used;
        if rem < 0.0 {
            return;
        }
        let h = (rem / self.chol[i][i]).sqrt();
        let lo = ceil_i64(c - h);
        let hi = floor_i64(c + h);
        for v in lo..=hi {
            let d = v as f64 - c;
            let u2 = used + self.chol[i][i] * d * d;
            if u2 <= radius {
                y[i] = v;
                self.fp_generic(m, radius, i, u2, y, f);
            }
        }
        y[i] = 0;
    }

    #[allow(clippy::too_many_arguments)]
    fn fp_hyper<F: FnMut(&[i64], f64)>(
        &self,
        m: i64,
        radius: f64,
        level: usize,
        used: f64,
        y: &mut Vec<i64>,
        f: &mut F,
        sc: &mut Scratch,
    ) {
        if level == 2 {
            y[0] = 0;
            y[1] = 0;
            let n = m - self.q_b(y);
            let (au, aw) = self.partial_pairings(y);
            let (c0, c1) = (-self.center(0, y), -self.center(1, y));
            self.inner_pair(n, radius - used, c0, c1, au, aw, y, f, sc);
            return;
        }
        if level == 3 {
            self.hyper_last(m, radius, used, y, f, sc);
            return;
        }
        let i = level - 1;
        let c = self.center(i, y);
        let rem = radius - used;
        if rem < 0.0 {
            return;
        }
        let h = (rem / self.chol[i][i]).sqrt();
        let lo = ceil_i64(c - h);
        let hi = floor_i64(c + h);
        for v in lo..=hi {
            let d = v as f64 - c;
            let u2 = used + self.chol[i][i] * d * d;
            if u2 <= radius {
                y[i] = v;
                self.fp_hyper(m, radius, i, u2, y, f, sc);
            }
        }
        y[i] = 0;
    }

    fn partial_pairings(&self, y: &[i64]) -> (f64, f64) {
        let mut au = 0.0;
        let mut aw = 0.0;
        for k in 2..y.len() {
            if y[k] != 0 {
                au += y[k] as f64 * self.pu[k];
                aw += y[k] as f64 * self.pw[k];
            }
        }
        (au, aw)
    }

    /// Last outer coordinate `y_2`: everything the pair solver needs is affine or
    /// quadratic in it, so it is updated incrementally.
    fn hyper_last<F: FnMut(&[i64], f64)>(
        &self,
        m: i64,
        radius: f64,
        used: f64,
        y: &mut Vec<i64>,
        f: &mut F,
        sc: &mut Scratch,
    ) {
        let rem = radius - used;
        if rem < 0.0 {
            return;
        }
        y[0] = 0;
        y[1] = 0;
        y[2] = 0;
        let c = self.center(2, y);
        let h = (rem / self.chol[2][2]).sqrt();
        let (lo, hi) = (ceil_i64(c - h), floor_i64(c + h));
        if lo > hi {
            return;
        }
        let q_rest = self.q_b(y);
        let g22 = self.gram_b[2][2];
        let lin: i64 = (3..y.len()).map(|j| self.gram_b[2][j] * y[j]).sum();
        let (au0, aw0) = self.partial_pairings(y);
        let (nc0, nc1) = (-self.center(0, y), -self.center(1, y));
        let (k0, k1) = (self.chol[0][2], self.chol[1][2]);
        let (pu2, pw2) = (self.pu[2], self.pw[2]);
        for v in lo..=hi {
            let d = v as f64 - c;
            let u2 = used + self.chol[2][2] * d * d;
            if u2 > radius {
                continue;
            }
            y[2] = v;
            let vf = v as f64;
            let n = m - q_rest - v * (lin + g22 * v);
            self.inner_pair(n, radius - u2, nc0 + k0 * vf, nc1 + k1 * vf, au0 + vf * pu2, aw0 + vf * pw2, y, f, sc);
        }
        y[2] = 0;
    }

    /// Solves `s t = n` inside the remaining ellipse in `(s, t) = (y_0, y_1)`.
    /// `c0, c1` are the negated centers and `au, aw` the pairings of the outer part.
    #[allow(clippy::too_many_arguments)]
    fn inner_pair<F: FnMut(&[i64], f64)>(
        &self,
        n: i64,
        rem: f64,
        c0: f64,
        c1: f64,
        au: f64,
        aw: f64,
        y: &mut Vec<i64>,
        f: &mut F,
        sc: &mut Scratch,
    ) {
        if rem < 0.0 {
            return;
        }
        let q = &self.chol;
        let (q00, q01, q11) = (q[0][0], q[0][1], q[1][1]);
        // y_0 + q01 y_1 + c0 = u, y_1 + c1 = v  with  q00 u^2 + q11 v^2 <= rem.
        let s_mid = q01 * c1 - c0;
        let hs = (rem / q00 + q01 * q01 * rem / q11).sqrt();
        let (slo, shi) = (ceil_i64(s_mid - hs), floor_i64(s_mid + hs));
        if slo > shi {
            return;
        }
        let ht = (rem / q11).sqrt();
        let (tlo, thi) = (ceil_i64(-c1 - ht), floor_i64(-c1 + ht));
        if tlo > thi {
            return;
        }
        // s t ranges over the products of the two intervals.
        let corners = [slo * tlo, slo * thi, shi * tlo, shi * thi];
        let (pmin, pmax) = (*corners.iter().min().unwrap(), *corners.iter().max().unwrap());
        if n < pmin || n > pmax {
            return;
        }
        let inside = |s: i64, t: i64| -> bool {
            let v = t as f64 + c1;
            let u = s as f64 + q01 * t as f64 + c0;
            q00 * u * u + q11 * v * v <= rem
        };
        let (pu0, pu1, pw0, pw1) = (self.pu[0], self.pu[1], self.pw[0], self.pw[1]);
        let mut emit = |s: i64, t: i64, y: &mut Vec<i64>| {
            let bu = au + s as f64 * pu0 + t as f64 * pu1;
            let bw = aw + s as f64 * pw0 + t as f64 * pw1;
            y[0] = s;
            y[1] = t;
            f(y, (bu * bu + bw * bw) / 4.0);
        };
        if n == 0 {
            // s = 0: t in the chord of the ellipse.
            for t in t_chord(q00, q01, q11, c0, c1, rem, 0) {
                if inside(0, t) {
                    emit(0, t, y);
                }
            }
            // t = 0, s != 0.
            let r0 = rem - q11 * c1 * c1;
            if r0 >= 0.0 {
                let hs0 = (r0 / q00).sqrt();
                let (lo, hi) = ((-c0 - hs0).ceil() as i64, (-c0 + hs0).floor() as i64);
                for s in lo..=hi {
                    if s != 0 && inside(s, 0) {
                        emit(s, 0, y);
                    }
                }
            }
        } else if shi - slo < TRIAL_WIDTH || thi - tlo < TRIAL_WIDTH {
            if shi - slo <= thi - tlo {
                for s in slo..=shi {
                    if s != 0 && n % s == 0 {
                        let t = n / s;
                        if inside(s, t) {
                            emit(s, t, y);
                        }
                    }
                }
            } else {
                for t in tlo..=thi {
                    if t != 0 && n % t == 0 {
                        let s = n / t;
                        if inside(s, t) {
                            emit(s, t, y);
                        }
                    }
                }
            }
        } else {
            let an = n.unsigned_abs();
            let ds: &[u32];
            if an <= sc.table.n {
                // |s| >= |n| / max|t| and |s| <= max|s|.
                let smax = slo.unsigned_abs().max(shi.unsigned_abs());
                let tmax = tlo.unsigned_abs().max(thi.unsigned_abs()).max(1);
                let smin = an.div_ceil(tmax);
                let all = sc.table.of(an);
                let a = all.partition_point(|&d| (d as u64) < smin);
                let b = all.partition_point(|&d| (d as u64) <= smax);
                ds = &all[a..b.max(a)];
            } else {
                self.spf.divisors(an, &mut sc.divs);
                ds = &[];
            }
            let wide = sc.divs.iter().map(|&d| d as i64).filter(|_| an > sc.table.n);
            for d in ds.iter().map(|&d| d as i64).chain(wide) {
                for s in [-d, d] {
                    if s < slo || s > shi {
                        continue;
                    }
                    let t = n / s;
                    if t >= tlo && t <= thi && inside(s, t) {
                        emit(s, t, y);
                    }
                }
            }
        }
        y[0] = 0;
        y[1] = 0;
    }

    fn check_budget(&self, radius: f64) -> Result<()> {
        let est = self.work_estimate(radius);
        if est > self.budget {
            return Err(Error::Budget {
                estimate: est,
                budget: self.budget,
            });
        }
        Ok(())
    }

    /// Parallel fold over slices of the outermost coordinate; the partial results
    /// are combined in ascending slice order, so the result does not depend on
    /// scheduling.
    pub fn fold<S, I, F, C>(&self, m: i128, t_max: f64, init: I, visit: F, combine: C) -> Result<S>
    where
        S: Send,
        I: Fn() -> S + Sync,
        F: Fn(&mut S, &[i64], f64) + Sync,
        C: Fn(S, S) -> S,
    {
        let mut acc = init();
        if m <= 0 || t_max < 0.0 {
            return Ok(acc);
        }
        let radius = m as f64 * (1.0 + 2.0 * t_max);
        self.check_budget(radius)?;
        let bound = t_max * m as f64;
        let m = i64::try_from(m).map_err(|_| Error::UnsupportedSize("norm exceeds 64 bits".into()))?;
        let (lo, hi) = self.outer_range(radius);
        let parts: Vec<S> = (lo..=hi)
            .into_par_iter()
            .map(|top| {
                let mut s = init();
                self.visit_slice(m, radius, top, &mut |y, nq| {
                    if nq <= bound {
                        visit(&mut s, y, nq);
                    }
                });
                s
            })
            .collect();
        for p in parts {
            acc = combine(acc, p);
        }
        Ok(acc)
    }

    /// All representations, sorted lexicographically in lattice coordinates.
    pub fn representations(&self, m: i128, t_max: f64) -> Result<Vec<Vec<i128>>> {
        let mut out: Vec<Vec<i128>> = self.fold(
            m,
            t_max,
            Vec::new,
            |acc: &mut Vec<Vec<i128>>, y, _| acc.push(self.to_lattice(y)),
            |mut a, mut b| {
                a.append(&mut b);
                a
            },
        )?;
        out.sort();
        Ok(out)
    }

    /// Representations with `-Q(lambda_x)`, sorted lexicographically.
    pub fn representations_with_qx(&self, m: i128, t_max: f64) -> Result<Vec<(Vec<i128>, f64)>> {
        let mut out: Vec<(Vec<i128>, f64)> = self.fold(
            m,
            t_max,
            Vec::new,
            |acc: &mut Vec<(Vec<i128>, f64)>, y, nq| acc.push((self.to_lattice(y), -nq)),
            |mut a, mut b| {
                a.append(&mut b);
                a
            },
        )?;
        out.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(out)
    }

    /// Counts for several thresholds `T` in one pass.
    pub fn count_thresholds(&self, m: i128, ts: &[f64]) -> Result<Vec<u64>> {
        let t_max = ts.iter().cloned().fold(0.0, f64::max);
        let mf = m as f64;
        self.fold(
            m,
            t_max,
            || vec![0u64; ts.len()],
            |acc, _, nq| {
                for (k, &t) in ts.iter().enumerate() {
                    if nq <= t * mf {
                        acc[k] += 1;
                    }
                }
            },
            |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect(),
        )
    }
}

fn transform_gram_f64(a: &[Vec<f64>], cols: &[Vec<i128>]) -> Vec<Vec<f64>> {
    let r = cols.len();
    let n = a.len();
    let mut out = vec![vec![0.0; r]; r];
    for i in 0..r {
        for j in 0..r {
            let mut s = 0.0;
            for p in 0..n {
                if cols[i][p] == 0 {
                    continue;
                }
                for q in 0..n {
                    s += cols[i][p] as f64 * a[p][q] * cols[j][q] as f64;
                }
            }
            out[i][j] = s;
        }
    }
    out
}

/// Schur complement of the leading `k x k` block.
fn schur_complement(a: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    let r = a.len();
    let d = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    assert_eq!(k, 2);
    let inv = [[a[1][1] / d, -a[0][1] / d], [-a[1][0] / d, a[0][0] / d]];
    (k..r)
        .map(|i| {
            (k..r)
                .map(|j| {
                    let mut s = a[i][j];
                    for p in 0..2 {
                        for q in 0..2 {
                            s -= a[i][p] * inv[p][q] * a[q][j];
                        }
                    }
                    s
                })
                .collect()
        })
        .collect()
}

/// Integer t with `q00 (s + q01 t + c0)^2 + q11 (t + c1)^2 <= rem` at fixed s.
/// `floor` without a libm call; arguments stay far inside the `i64` range.
#[inline]
fn floor_i64(x: f64) -> i64 {
    let i = x as i64;
    if (i as f64) > x {
        i - 1
    } else {
        i
    }
}

#[inline]
fn ceil_i64(x: f64) -> i64 {
    -floor_i64(-x)
}

fn t_chord(q00: f64, q01: f64, q11: f64, c0: f64, c1: f64, rem: f64, s: i64) -> std::ops::RangeInclusive<i64> {
    // Quadratic in t: A t^2 + B t + C <= 0.
    let g = s as f64 + c0;
    let a = q00 * q01 * q01 + q11;
    let b = 2.0 * (q00 * q01 * g + q11 * c1);
    let c = q00 * g * g + q11 * c1 * c1 - rem;
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return 1..=0;
    }
    let sq = disc.sqrt();
    let lo = ((-b - sq) / (2.0 * a)).ceil() as i64 - 1;
    let hi = ((-b + sq) / (2.0 * a)).floor() as i64 + 1;
    lo..=hi
}

/// Volume of the unit ball in R^k.
pub fn ball_volume(k: usize) -> f64 {
    let k = k as f64;
    std::f64::consts::PI.powf(k / 2.0) / crate::special::gamma(k / 2.0 + 1.0)
}

/// Sorted list of `lambda` with `Q(lambda) = m` and `-Q(lambda_x) <= T m`.
pub fn enumerate_representations(
    lat: &IntegralLattice,
    pt: &PeriodPoint,
    m: i128,
    t: f64,
) -> Result<Vec<Vec<i128>>> {
    Enumerator::new(lat, pt)?.representations(m, t)
}

/// Box search oracle: all `lambda` with `|lambda|_inf <= bound` meeting the same conditions.
pub fn box_representations(
    lat: &IntegralLattice,
    pt: &PeriodPoint,
    m: i128,
    t: f64,
    bound: i128,
) -> Vec<Vec<i128>> {
    let r = lat.rank();
    let mut out = Vec::new();
    let mut x = vec![-bound; r];
    loop {
        if lat.q(&x) == m && -pt.q_x_int(&x) <= t * m as f64 {
            out.push(x.clone());
        }
        let mut k = r;
        loop {
            if k == 0 {
                out.sort();
                return out;
            }
            k -= 1;
            x[k] += 1;
            if x[k] <= bound {
                break;
            }
            x[k] = -bound;
        }
    }
}

/// Largest sup-norm among integer vectors inside `Q_x <= radius` (for sizing box oracles).
pub fn sup_norm_bound(pt: &PeriodPoint, radius: f64) -> i128 {
    let maj = pt.majorant();
    let r = maj.gram_real.len();
    let a = nalgebra::DMatrix::from_fn(r, r, |i, j| maj.gram_real[i][j] / 2.0);
    let inv = a.try_inverse().expect("positive definite");
    let mut best = 0.0f64;
    for i in 0..r {
        best = best.max((radius * inv[(i, i)]).sqrt());
    }
    best.floor() as i128
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hyperbolic_pair_of_l5() {
        let lat = IntegralLattice::l5();
        let (e, f) = find_hyperbolic_pair(&lat, 1).unwrap();
        assert_eq!(lat.q(&e), 0);
        assert_eq!(lat.q(&f), 0);
        assert_eq!(lat.bilinear(&e, &f), 1);
        let anis = IntegralLattice::diagonal_q(&[1, 1, 1]).unwrap();
        assert!(find_hyperbolic_pair(&anis, 2).is_none());
    }

    #[test]
    fn strategies_agree_with_box_search() {
        let lat = IntegralLattice::l5();
        for seed in 0..3 {
            let pt = PeriodPoint::random(&lat, seed).unwrap();
            let g = Enumerator::with_strategy(&lat, &pt, Strategy::Generic).unwrap();
            let h = Enumerator::with_strategy(&lat, &pt, Strategy::Hyperbolic).unwrap();
            for m in [1i128, 2, 3, 6, 12] {
                for t in [0.5, 1.0, 3.0] {
                    let a = g.representations(m, t).unwrap();
                    let b = h.representations(m, t).unwrap();
                    assert_eq!(a, b, "seed {seed} m {m} t {t}");
                    let bound = sup_norm_bound(&pt, m as f64 * (1.0 + 2.0 * t));
                    if bound <= 6 {
                        assert_eq!(a, box_representations(&lat, &pt, m, t, bound));
                    }
                }
            }
        }
    }

    #[test]
    fn zero_and_negative_m() {
        let lat = IntegralLattice::l5();
        let pt = PeriodPoint::random(&lat, 1).unwrap();
        assert!(enumerate_representations(&lat, &pt, -3, 2.0).unwrap().is_empty());
        let e = Enumerator::new(&lat, &pt).unwrap();
        let c = e.count_thresholds(30, &[1.0, 3.0]).unwrap();
        assert!(c[0] <= c[1]);
        assert_eq!(c[1] as usize, e.representations(30, 3.0).unwrap().len());
    }
}
