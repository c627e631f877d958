//! Synthetic chains `L_n = (Lambda + p^k base) ∩ base`, `k = ceil((n - n0) / e)`,
//! modelling lattices that shrink p-adically toward a fixed core `Lambda`.

use crate::arith;
use crate::density::LocalDensity;
use crate::error::{Error, Result};
use crate::lattice::IntegralLattice;
use crate::matrix::{self, BMat};
use crate::reduce::{self, Minima, ShortVectors};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

pub const DEFAULT_PRECISION: u32 = 64;
pub const DEFAULT_HEIGHT: i128 = 1_000_000;

#[derive(Debug)]
pub struct ChainModel {
    pub base: IntegralLattice,
    pub p: u64,
    pub e: u32,
    pub n0: u32,
    /// Generators of Lambda, reduced mod p^precision.
    pub lambda: Vec<Vec<BigInt>>,
    pub precision: u32,
    pub aut: u64,
    levels: Mutex<HashMap<u32, Arc<ChainLevel>>>,
}

impl Clone for ChainModel {
    fn clone(&self) -> Self {
        Self {
            base: self.base.clone(),
            p: self.p,
            e: self.e,
            n0: self.n0,
            lambda: self.lambda.clone(),
            precision: self.precision,
            aut: self.aut,
            levels: Mutex::new(HashMap::new()),
        }
    }
}

/// One level of the chain.
#[derive(Clone, Debug)]
pub struct ChainLevel {
    pub k: u32,
    /// Hermite basis (rows, base coordinates).
    pub hnf: BMat,
    pub index: BigInt,
    /// LLL-reduced form; its Gram is the Gram of `L_n` in a reduced basis.
    pub short: ShortVectors,
    pub lattice: IntegralLattice,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinimaProfile {
    pub n: u32,
    pub mu: Vec<f64>,
    pub a: Vec<f64>,
}

fn rank_mod_p(rows: &[Vec<BigInt>], p: u64) -> usize {
    let pb = BigInt::from(p);
    let mut m: Vec<Vec<i64>> = rows
        .iter()
        .map(|r| r.iter().map(|x| x.mod_floor_big(&pb)).collect())
        .collect();
    let pi = p as i64;
    let cols = m.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..m.len()).find(|&i| m[i][c] != 0) else {
            continue;
        };
        m.swap(rank, piv);
        let inv = arith::mod_inv(&BigInt::from(m[rank][c]), &pb).unwrap().to_i64().unwrap();
        for i in 0..m.len() {
            if i != rank && m[i][c] != 0 {
                let f = m[i][c] * inv % pi;
                for j in 0..cols {
                    m[i][j] = (m[i][j] - f * m[rank][j]).rem_euclid(pi);
                }
            }
        }
        rank += 1;
    }
    rank
}

trait ModFloor {
    fn mod_floor_big(&self, m: &BigInt) -> i64;
}

impl ModFloor for BigInt {
    fn mod_floor_big(&self, m: &BigInt) -> i64 {
        use num_integer::Integer;
        self.mod_floor(m).to_i64().unwrap()
    }
}

impl ChainModel {
    pub fn new(
        base: IntegralLattice,
        p: u64,
        e: u32,
        n0: u32,
        lambda: Vec<Vec<BigInt>>,
        precision: u32,
        aut: u64,
    ) -> Result<Self> {
        if !base.is_positive_definite() {
            return Err(Error::InvalidLattice("chain base must be positive definite".into()));
        }
        if !arith::is_prime(p) {
            return Err(Error::Domain(format!("{p} is not prime")));
        }
        if e == 0 || precision == 0 || aut == 0 {
            return Err(Error::Domain("e, precision and aut must be positive".into()));
        }
        let r = base.rank();
        if lambda.iter().any(|g| g.len() != r) {
            return Err(Error::Domain("generator length differs from the base rank".into()));
        }
        if lambda.len() > r {
            return Err(Error::Domain("more generators than the base rank".into()));
        }
        if rank_mod_p(&lambda, p) != lambda.len() {
            return Err(Error::Domain("Lambda is not saturated (generators dependent mod p)".into()));
        }
        let q = arith::big_pow(p, precision);
        let lambda = lambda
            .into_iter()
            .map(|g| {
                g.into_iter()
                    .map(|x| {
                        use num_integer::Integer;
                        x.mod_floor(&q)
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            base,
            p,
            e,
            n0,
            lambda,
            precision,
            aut,
            levels: Mutex::new(HashMap::new()),
        })
    }

    /// Random saturated `Lambda` of the given rank.
    pub fn random(
        base: IntegralLattice,
        p: u64,
        e: u32,
        n0: u32,
        lambda_rank: usize,
        precision: u32,
        seed: u64,
    ) -> Result<Self> {
        let r = base.rank();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let q = arith::big_pow(p, precision);
        loop {
            let gens: Vec<Vec<BigInt>> = (0..lambda_rank)
                .map(|_| {
                    (0..r)
                        .map(|_| {
                            // uniform residue mod p^precision from 64-bit limbs
                            let mut x = BigInt::zero();
                            let mut top = BigInt::one();
                            while top < q {
                                x = x * BigInt::from(u64::MAX) + BigInt::from(rng.gen::<u64>());
                                top *= BigInt::from(u64::MAX);
                            }
                            use num_integer::Integer;
                            x.mod_floor(&q)
                        })
                        .collect()
                })
                .collect();
            if rank_mod_p(&gens, p) == lambda_rank {
                return Self::new(base, p, e, n0, gens, precision, 1);
            }
        }
    }

    pub fn lambda_rank(&self) -> usize {
        self.lambda.len()
    }

    pub fn rank(&self) -> usize {
        self.base.rank()
    }

    /// `k = ceil((n - n0) / e)`.
    pub fn depth(&self, n: u32) -> Result<u32> {
        if n < self.n0 {
            return Err(Error::Domain(format!("level {n} below n0 = {}", self.n0)));
        }
        let k = (n - self.n0).div_ceil(self.e);
        if k > self.precision {
            return Err(Error::Precision {
                precision: self.precision,
                detail: format!("level {n} needs depth {k}"),
            });
        }
        Ok(k)
    }

    /// Hermite basis of `(Lambda + p^k Z^r) ∩ Z^r` in base coordinates.
    pub fn hnf_at_depth(&self, k: u32) -> BMat {
        let r = self.rank();
        let q = arith::big_pow(self.p, k);
        let mut rows: Vec<Vec<BigInt>> = self
            .lambda
            .iter()
            .map(|g| {
                g.iter()
                    .map(|x| {
                        use num_integer::Integer;
                        x.mod_floor(&q)
                    })
                    .collect()
            })
            .collect();
        for i in 0..r {
            let mut v = vec![BigInt::zero(); r];
            v[i] = q.clone();
            rows.push(v);
        }
        matrix::hnf_rows(&rows)
    }

    pub fn level_at_depth(&self, k: u32) -> Result<Arc<ChainLevel>> {
        if let Some(l) = self.levels.lock().unwrap().get(&k) {
            return Ok(l.clone());
        }
        let hnf = self.hnf_at_depth(k);
        let r = self.rank();
        let index: BigInt = (0..r).map(|i| hnf[i][i].abs()).product();
        let g = matrix::to_big(self.base.gram());
        let gram: BMat = (0..r)
            .map(|i| {
                (0..r)
                    .map(|j| {
                        let mut s = BigInt::zero();
                        for a in 0..r {
                            if hnf[i][a].is_zero() {
                                continue;
                            }
                            for b in 0..r {
                                s += &hnf[i][a] * &g[a][b] * &hnf[j][b];
                            }
                        }
                        s
                    })
                    .collect()
            })
            .collect();
        let short = ShortVectors::from_gram_big(&gram)?;
        let basis: BMat = short
            .basis
            .iter()
            .map(|row| {
                (0..r)
                    .map(|t| (0..r).map(|i| &row[i] * &hnf[i][t]).sum())
                    .collect()
            })
            .collect();
        let short = ShortVectors {
            basis,
            ..short
        };
        let lattice = IntegralLattice::new(short.gram.clone())?;
        let level = Arc::new(ChainLevel {
            k,
            hnf,
            index,
            short,
            lattice,
        });
        self.levels.lock().unwrap().insert(k, level.clone());
        Ok(level)
    }

    pub fn level(&self, n: u32) -> Result<Arc<ChainLevel>> {
        self.level_at_depth(self.depth(n)?)
    }

    /// `L_n` as a lattice (reduced basis).
    pub fn chain_lattice(&self, n: u32) -> Result<IntegralLattice> {
        Ok(self.level(n)?.lattice.clone())
    }

    /// Exact index law `[base : L_n] = p^{k (r - rank Lambda)}`.
    pub fn expected_index(&self, n: u32) -> Result<BigInt> {
        let k = self.depth(n)?;
        Ok(arith::big_pow(self.p, k * (self.rank() - self.lambda_rank()) as u32))
    }

    /// `L_{n+1} ⊆ L_n`, checked on Hermite bases.
    pub fn nested(&self, n: u32) -> Result<bool> {
        let a = self.level(n)?;
        let b = self.level(n + 1)?;
        let mut rows = a.hnf.clone();
        rows.extend(b.hnf.iter().cloned());
        Ok(matrix::hnf_rows(&rows) == a.hnf)
    }

    pub fn minima_profile(&self, n: u32) -> Result<MinimaProfile> {
        let Minima { mu, a, .. } = reduce::minima_of(&self.level(n)?.short)?;
        Ok(MinimaProfile { n, mu, a })
    }

    /// `(1 / aut) sum_{n >= n0} #{v in L_n : Q(v) = m}`, stopping after three
    /// consecutive empty levels whose first minimum exceeds `sqrt(m)`.
    pub fn local_intersection(&self, m: i128) -> Result<BigRational> {
        let mut total = 0u64;
        let mut quiet = 0;
        let mut n = self.n0;
        if m <= 0 {
            return Ok(BigRational::zero());
        }
        loop {
            let level = match self.level(n) {
                Ok(l) => l,
                Err(Error::Precision { .. }) => {
                    return Err(Error::Genericity(format!(
                        "counts for m={m} did not vanish before precision {}",
                        self.precision
                    )))
                }
                Err(e) => return Err(e),
            };
            let c = level.short.count_eq(m)?;
            total += c;
            let min_q = reduce::minima_of(&level.short)?.mu_sq[0];
            if c == 0 && min_q > m {
                quiet += 1;
                if quiet == 3 {
                    break;
                }
            } else {
                quiet = 0;
            }
            n += 1;
        }
        Ok(BigRational::new(BigInt::from(total), BigInt::from(self.aut)))
    }

    /// Counts of nonzero vectors by value of Q (up to `bound`) summed over all
    /// levels `n >= n_from` until the first minimum passes the bound.
    pub fn summed_histogram(&self, n_from: u32, n_to: Option<u32>, bound: i128) -> Result<Vec<u64>> {
        let mut hist = vec![0u64; bound.max(0) as usize + 1];
        let mut n = n_from.max(self.n0);
        loop {
            if n_to.map_or(false, |t| n > t) {
                break;
            }
            let level = match self.level(n) {
                Ok(l) => l,
                Err(Error::Precision { .. }) if n_to.is_none() => {
                    return Err(Error::Genericity("level counts did not vanish within precision".into()))
                }
                Err(e) => return Err(e),
            };
            let h = level.short.value_histogram(bound)?;
            for (a, b) in hist.iter_mut().zip(h) {
                *a += b;
            }
            if n_to.is_none() && reduce::minima_of(&level.short)?.mu_sq[0] > bound {
                break;
            }
            n += 1;
        }
        Ok(hist)
    }

    /// `sum_{n=a}^{b} #{v in L_n : Q(v) in S_{D,X}}`.
    pub fn summed_counts(&self, d: u64, x: u64, a: u32, b: u32) -> Result<u64> {
        if a >= b {
            return Err(Error::Domain("summed counts need a < b".into()));
        }
        let hist = self.summed_histogram(a, Some(b), 2 * x as i128 - 1)?;
        Ok(square_class(d, x).iter().map(|&m| hist[m as usize]).sum())
    }

    /// `sum_{n >= n0} #{v in L_n \ 0 : Q(v) < X}`.
    pub fn total_count_below(&self, x: u64) -> Result<u64> {
        let hist = self.summed_histogram(self.n0, None, x as i128 - 1)?;
        Ok(hist.iter().sum())
    }

    /// No nonzero integer vector with sup-norm `<= height` lies in `Lambda`
    /// modulo `p^precision`.
    pub fn check_genericity(&self, height: i128) -> Result<bool> {
        let level = self.level_at_depth(self.precision)?;
        let r = self.rank();
        let g = self.base.gram();
        let abs_sum: i128 = g.iter().flatten().map(|x| x.abs()).sum();
        let bound = (BigInt::from(height) * BigInt::from(height) * BigInt::from(abs_sum)) / 2;
        let min_q = reduce::minima_of(&level.short)?.mu_sq[0];
        if BigInt::from(min_q) > bound {
            return Ok(true);
        }
        let bound = bound.to_i128().ok_or_else(|| Error::UnsupportedSize("height bound".into()))?;
        let mut bad = false;
        level.short.for_each(bound, |y, _| {
            let v = level.short.lift(y);
            if v.iter().all(|c| c.abs() <= BigInt::from(height)) {
                bad = true;
            }
        })?;
        let _ = r;
        Ok(!bad)
    }

    pub fn to_text(&self) -> String {
        let mut s = self.base.to_text();
        s.push_str(&format!(
            "{}\n{}\n{}\n{}\n{}\n{}\n",
            self.p,
            self.e,
            self.n0,
            self.precision,
            self.aut,
            self.lambda_rank()
        ));
        for g in &self.lambda {
            s.push_str(&g.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "));
            s.push('\n');
        }
        s
    }

    /// Plain-text record: rank, Gram rows, p, e, n0, precision, aut, rank of
    /// Lambda, then its generator rows.  `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .collect();
        let bad = |what: &str| Error::Parse(format!("chain model: {what}"));
        let r: usize = lines
            .first()
            .ok_or_else(|| bad("empty file"))?
            .parse()
            .map_err(|_| bad("rank"))?;
        if lines.len() < 1 + r + 6 {
            return Err(bad("truncated record"));
        }
        let base = IntegralLattice::parse(&lines[..=r].join("\n"))?;
        let num = |i: usize, what: &str| -> Result<u64> { lines[i].parse().map_err(|_| bad(what)) };
        let p = num(r + 1, "p")?;
        let e = num(r + 2, "e")? as u32;
        let n0 = num(r + 3, "n0")? as u32;
        let precision = num(r + 4, "precision")? as u32;
        let aut = num(r + 5, "aut")?;
        let lr = num(r + 6, "lambda_rank")? as usize;
        if lines.len() != r + 7 + lr {
            return Err(bad("generator row count differs from lambda_rank"));
        }
        let lambda = lines[r + 7..]
            .iter()
            .map(|l| {
                l.split_whitespace()
                    .map(|t| t.parse::<BigInt>().map_err(|_| bad("generator entry")))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(base, p, e, n0, lambda, precision, aut)
    }
}

/// `S_{D,X} = {m : X <= m < 2X, m / D a perfect square}`.
pub fn square_class(d: u64, x: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut j = 1u64;
    while d * j * j < 2 * x {
        if d * j * j >= x {
            out.push(d * j * j);
        }
        j += 1;
    }
    out
}

/// `mu_inf(Q, 1) = pi^{r/2} / (Gamma(r/2) sqrt(det A))` with `A = G / 2`.
pub fn singular_integral_one(lat: &IntegralLattice) -> f64 {
    let r = lat.rank();
    let det_a = arith::rat_to_f64(&BigRational::new(lat.det(), num_traits::pow(BigInt::from(2), r)));
    std::f64::consts::PI.powf(r as f64 / 2.0) / (crate::special::gamma(r as f64 / 2.0) * det_a.sqrt())
}

/// `(lhs, rhs) = (mu_inf(Q,1) mu_p(Q,m), p^r / Disc^{3/20})`, `Disc = det G`.
pub fn density_disc_bound(lat: &IntegralLattice, p: u64, m: i64) -> Result<(f64, f64)> {
    if !lat.is_positive_definite() || lat.rank() < 5 {
        return Err(Error::Domain("bound needs a positive-definite lattice of rank >= 5".into()));
    }
    let mu_p = LocalDensity::new(lat, p)?.mu_limit_recursive(m)?;
    let lhs = singular_integral_one(lat) * arith::rat_to_f64(&mu_p);
    let disc = arith::rat_to_f64(&BigRational::from_integer(lat.det().abs()));
    let rhs = (p as f64).powi(lat.rank() as i32) / disc.powf(0.15);
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit5() -> IntegralLattice {
        IntegralLattice::diagonal_q(&[1; 5]).unwrap()
    }

    #[test]
    fn empty_lambda_scales_the_base() {
        let model = ChainModel::new(unit5(), 5, 1, 1, vec![], 64, 1).unwrap();
        let l3 = model.chain_lattice(3).unwrap();
        let g = l3.gram();
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(g[i][j], if i == j { 2 * 625 } else { 0 });
            }
        }
        let prof = model.minima_profile(3).unwrap();
        assert!(prof.mu.iter().all(|&m| m == 25.0));
        assert_eq!(model.level(3).unwrap().index, BigInt::from(5u64.pow(10)));
    }

    #[test]
    fn local_intersection_of_scaled_chain() {
        let model = ChainModel::new(unit5(), 5, 1, 1, vec![], 64, 1).unwrap();
        assert_eq!(model.local_intersection(1).unwrap(), BigRational::from_integer(10.into()));
        let r25 = ShortVectors::new(&unit5()).unwrap().count_eq(25).unwrap();
        assert_eq!(
            model.local_intersection(25).unwrap(),
            BigRational::from_integer(BigInt::from(r25 + 10))
        );
    }

    #[test]
    fn full_lambda_is_constant() {
        let gens: Vec<Vec<BigInt>> = (0..5)
            .map(|i| (0..5).map(|j| BigInt::from((i == j) as i32)).collect())
            .collect();
        let model = ChainModel::new(unit5(), 3, 2, 1, gens, 16, 1).unwrap();
        for n in 1..10 {
            assert_eq!(model.level(n).unwrap().index, BigInt::one());
        }
    }

    #[test]
    fn random_model_laws() {
        let model = ChainModel::random(unit5(), 5, 1, 1, 3, 64, 11).unwrap();
        for n in 1..8 {
            assert_eq!(model.level(n).unwrap().index, model.expected_index(n).unwrap());
            assert!(model.nested(n).unwrap());
        }
        assert!(model.check_genericity(1000).unwrap());
        let again = ChainModel::parse(&model.to_text()).unwrap();
        assert_eq!(again.lambda, model.lambda);
        assert!(ChainModel::parse("2\n2 0\n0 2\n5\n").is_err());
    }

    #[test]
    fn square_classes() {
        assert_eq!(square_class(1, 64), vec![64, 81, 100, 121]);
        assert_eq!(square_class(2, 10), vec![18]);
    }
}
