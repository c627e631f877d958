//! Even integral quadratic lattices given by a Gram matrix of bilinear values.

use crate::arith::{self, rat_to_f64};
use crate::error::{Error, Result};
use crate::jordan::JordanSplitting;
use crate::matrix::{self, IMat};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Even lattice: `gram[i][j] = (e_i . e_j)` and `Q(v) = v^T G v / 2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntegralLattice {
    gram: IMat,
    signature: (usize, usize),
}

impl IntegralLattice {
    pub fn new(gram: IMat) -> Result<Self> {
        let r = gram.len();
        if r == 0 {
            return Err(Error::InvalidLattice("rank zero".into()));
        }
        for (i, row) in gram.iter().enumerate() {
            if row.len() != r {
                return Err(Error::InvalidLattice(format!("row {i} has length {}", row.len())));
            }
            if row[i] % 2 != 0 {
                return Err(Error::InvalidLattice(format!("odd diagonal entry at {i}")));
            }
            for j in 0..r {
                if gram[i][j] != gram[j][i] {
                    return Err(Error::InvalidLattice(format!("asymmetric at ({i},{j})")));
                }
            }
        }
        let signature = matrix::inertia(&gram)
            .ok_or_else(|| Error::InvalidLattice("singular Gram matrix".into()))?;
        Ok(Self { gram, signature })
    }

    /// Builds and checks the stored signature against the recomputed one.
    pub fn with_signature(gram: IMat, signature: (usize, usize)) -> Result<Self> {
        let lat = Self::new(gram)?;
        if lat.signature != signature {
            return Err(Error::InvalidLattice(format!(
                "signature {:?} does not match computed {:?}",
                signature, lat.signature
            )));
        }
        Ok(lat)
    }

    pub fn from_i64(rows: &[Vec<i64>]) -> Result<Self> {
        Self::new(rows.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect())
    }

    /// Hyperbolic plane U.
    pub fn hyperbolic() -> Self {
        Self::new(vec![vec![0, 1], vec![1, 0]]).unwrap()
    }

    /// Rank-one lattice with Gram `[a]`.
    pub fn rank_one(a: i128) -> Result<Self> {
        Self::new(vec![vec![a]])
    }

    /// Diagonal lattice with the given Q-values on the basis: Gram `diag(2 q_i)`.
    pub fn diagonal_q(q: &[i128]) -> Result<Self> {
        let r = q.len();
        let mut g = vec![vec![0; r]; r];
        for i in 0..r {
            g[i][i] = 2 * q[i];
        }
        Self::new(g)
    }

    /// U + U + <2>, signature (3, 2).
    pub fn l5() -> Self {
        Self::hyperbolic()
            .direct_sum(&Self::hyperbolic())
            .direct_sum(&Self::rank_one(2).unwrap())
    }

    /// U + U + U, unimodular of signature (3, 3).
    pub fn u3() -> Self {
        Self::hyperbolic()
            .direct_sum(&Self::hyperbolic())
            .direct_sum(&Self::hyperbolic())
    }

    pub fn direct_sum(&self, other: &Self) -> Self {
        let (a, b) = (self.rank(), other.rank());
        let mut g = vec![vec![0; a + b]; a + b];
        for i in 0..a {
            g[i][..a].copy_from_slice(&self.gram[i]);
        }
        for i in 0..b {
            g[a + i][a..].copy_from_slice(&other.gram[i]);
        }
        Self {
            gram: g,
            signature: (
                self.signature.0 + other.signature.0,
                self.signature.1 + other.signature.1,
            ),
        }
    }

    /// Lattice with Gram `c G`, so Q is scaled by c.
    pub fn scaled(&self, c: i128) -> Result<Self> {
        Self::new(
            self.gram
                .iter()
                .map(|r| r.iter().map(|&x| x * c).collect())
                .collect(),
        )
    }

    pub fn rank(&self) -> usize {
        self.gram.len()
    }

    pub fn gram(&self) -> &IMat {
        &self.gram
    }

    pub fn signature(&self) -> (usize, usize) {
        self.signature
    }

    /// b in signature (b, 2); errors outside GSpin mode.
    pub fn b(&self) -> Result<usize> {
        match self.signature {
            (b, 2) if b >= 3 => Ok(b),
            s => Err(Error::Domain(format!("signature {s:?} is not (b,2) with b >= 3"))),
        }
    }

    pub fn is_positive_definite(&self) -> bool {
        self.signature.1 == 0
    }

    pub fn det(&self) -> BigInt {
        matrix::det(&self.gram)
    }

    /// |det G| = |L^v / L| as a machine integer.
    pub fn disc_abs(&self) -> u64 {
        self.det().abs().to_u64().expect("discriminant exceeds u64")
    }

    pub fn bilinear(&self, v: &[i128], w: &[i128]) -> i128 {
        let r = self.rank();
        let mut s = 0i128;
        for i in 0..r {
            if v[i] == 0 {
                continue;
            }
            let mut t = 0i128;
            for j in 0..r {
                t += self.gram[i][j] * w[j];
            }
            s += v[i] * t;
        }
        s
    }

    pub fn q(&self, v: &[i128]) -> i128 {
        self.bilinear(v, v) / 2
    }

    pub fn q_f64(&self, v: &[f64]) -> f64 {
        let r = self.rank();
        let mut s = 0.0;
        for i in 0..r {
            for j in 0..r {
                s += v[i] * self.gram[i][j] as f64 * v[j];
            }
        }
        s / 2.0
    }

    pub fn bilinear_f64(&self, v: &[f64], w: &[f64]) -> f64 {
        let r = self.rank();
        let mut s = 0.0;
        for i in 0..r {
            for j in 0..r {
                s += v[i] * self.gram[i][j] as f64 * w[j];
            }
        }
        s
    }

    pub fn gram_f64(&self) -> Vec<Vec<f64>> {
        self.gram
            .iter()
            .map(|r| r.iter().map(|&x| x as f64).collect())
            .collect()
    }

    pub fn discriminant_group(&self) -> DiscriminantGroup {
        DiscriminantGroup::of(self)
    }

    pub fn jordan(&self, p: u64, precision: u32) -> Result<JordanSplitting> {
        JordanSplitting::decompose(self, p, precision)
    }

    /// Maximality at p: Jordan valuations <= 1 and anisotropic discriminant p-part.
    pub fn is_maximal_at(&self, p: u64) -> Result<bool> {
        if !arith::is_prime(p) {
            return Err(Error::Domain(format!("{p} is not prime")));
        }
        let jordan = self.jordan(p, 8 + 2 * arith::val_big(&self.det(), p).min(64))?;
        if jordan.blocks.iter().any(|b| b.nu > 1) {
            return Ok(false);
        }
        let dg = self.discriminant_group();
        Ok(dg.p_part_isotropic(p, MAX_P_PART)?.is_none())
    }

    /// Parses the plain-text format: rank, then one Gram row per line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut tokens = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .flat_map(str::split_whitespace);
        let r: usize = tokens
            .next()
            .ok_or_else(|| Error::Parse("empty lattice file".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("rank: {e}")))?;
        if r == 0 || r > 64 {
            return Err(Error::Parse(format!("rank {r} out of range")));
        }
        let mut g = vec![vec![0i128; r]; r];
        for (i, row) in g.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = tokens
                    .next()
                    .ok_or_else(|| Error::Parse(format!("missing Gram entry ({i},{j})")))?
                    .parse()
                    .map_err(|e| Error::Parse(format!("Gram entry ({i},{j}): {e}")))?;
            }
        }
        if tokens.next().is_some() {
            return Err(Error::Parse("trailing tokens after Gram matrix".into()));
        }
        Self::new(g)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{}\n", self.rank());
        for row in &self.gram {
            let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
            s.push_str(&cells.join(" "));
            s.push('\n');
        }
        s
    }
}

/// Largest p-part checked exhaustively for isotropic vectors.
pub const MAX_P_PART: u64 = 1_000_000;

/// The finite quadratic module L^v / L.
#[derive(Clone, Debug)]
pub struct DiscriminantGroup {
    /// Nontrivial elementary divisors d_1 | d_2 | ...
    pub elementary_divisors: Vec<u64>,
    /// Generators in lattice coordinates, one per elementary divisor.
    pub representatives: Vec<Vec<BigRational>>,
    /// Q mod 1 on each generator, in [0, 1).
    pub q_values: Vec<BigRational>,
    gram: IMat,
}

fn frac(x: &BigRational) -> BigRational {
    x - BigRational::from_integer(x.floor().to_integer())
}

impl DiscriminantGroup {
    fn of(lat: &IntegralLattice) -> Self {
        let s = matrix::smith(lat.gram());
        let r = lat.rank();
        let mut divisors = Vec::new();
        let mut reps = Vec::new();
        for i in 0..r {
            let d = s.diag[i].clone();
            if d.is_one() {
                continue;
            }
            // Dual generator: column i of Q scaled by 1/d_i.
            let v: Vec<BigRational> = (0..r)
                .map(|k| BigRational::new(s.q[k][i].clone(), d.clone()))
                .collect();
            divisors.push(d.to_u64().expect("elementary divisor exceeds u64"));
            reps.push(v);
        }
        let mut dg = Self {
            elementary_divisors: divisors,
            representatives: reps,
            q_values: Vec::new(),
            gram: lat.gram().clone(),
        };
        dg.q_values = dg.representatives.iter().map(|v| frac(&dg.q_rat(v))).collect();
        dg
    }

    pub fn order(&self) -> u64 {
        self.elementary_divisors.iter().product()
    }

    pub fn q_rat(&self, v: &[BigRational]) -> BigRational {
        let r = v.len();
        let mut s = BigRational::zero();
        for i in 0..r {
            for j in 0..r {
                s += &v[i] * BigRational::from_integer(BigInt::from(self.gram[i][j])) * &v[j];
            }
        }
        s / BigRational::from_integer(BigInt::from(2))
    }

    /// Pairing (v.w) for rational coordinate vectors.
    pub fn pair_rat(&self, v: &[BigRational], w: &[BigRational]) -> BigRational {
        let r = v.len();
        let mut s = BigRational::zero();
        for i in 0..r {
            for j in 0..r {
                s += &v[i] * BigRational::from_integer(BigInt::from(self.gram[i][j])) * &w[j];
            }
        }
        s
    }

    /// Order of the p-primary part.
    pub fn p_part_order(&self, p: u64) -> u64 {
        self.elementary_divisors
            .iter()
            .map(|&d| p.pow(arith::val_i128(d as i128, p)))
            .product()
    }

    /// A nonzero element of order p with Q = 0 mod 1, if any. Such an element exists
    /// iff the p-part has a nonzero totally isotropic subgroup.
    pub fn p_part_isotropic(&self, p: u64, cap: u64) -> Result<Option<Vec<BigRational>>> {
        let size = self.p_part_order(p);
        if size > cap {
            return Err(Error::UnsupportedSize(format!(
                "p-part of order {size} exceeds exhaustive-search cap {cap}"
            )));
        }
        let gens: Vec<Vec<BigRational>> = self
            .elementary_divisors
            .iter()
            .zip(&self.representatives)
            .filter(|(&d, _)| d % p == 0)
            .map(|(&d, v)| {
                let f = BigRational::from_integer(BigInt::from(d / p));
                v.iter().map(|x| x * &f).collect()
            })
            .collect();
        let t = gens.len() as u32;
        let r = self.gram.len();
        let total = p.pow(t);
        for code in 1..total {
            let mut c = code;
            let mut v = vec![BigRational::zero(); r];
            for g in &gens {
                let k = c % p;
                c /= p;
                if k != 0 {
                    let kk = BigRational::from_integer(BigInt::from(k));
                    for i in 0..r {
                        v[i] += &g[i] * &kk;
                    }
                }
            }
            if frac(&self.q_rat(&v)).is_zero() {
                return Ok(Some(v));
            }
        }
        Ok(None)
    }

    pub fn q_values_f64(&self) -> Vec<f64> {
        self.q_values.iter().map(rat_to_f64).collect()
    }
}

/// Euclidean-style helper: is every entry of `v` integral.
pub fn is_integral(v: &[BigRational]) -> bool {
    v.iter().all(|x| x.is_integer())
}

/// Gcd of all entries of an integer vector.
pub fn content(v: &[i128]) -> i128 {
    v.iter().fold(0i128, |g, &x| g.gcd(&x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_have_expected_invariants() {
        let l5 = IntegralLattice::l5();
        assert_eq!(l5.signature(), (3, 2));
        assert_eq!(l5.det(), BigInt::from(2));
        assert_eq!(l5.b().unwrap(), 3);
        let u3 = IntegralLattice::u3();
        assert_eq!(u3.signature(), (3, 3));
        assert_eq!(u3.det(), BigInt::from(-1));
    }

    #[test]
    fn rejects_odd_or_singular() {
        assert!(IntegralLattice::from_i64(&[vec![1]]).is_err());
        assert!(IntegralLattice::from_i64(&[vec![2, 2], vec![2, 2]]).is_err());
        assert!(IntegralLattice::from_i64(&[vec![2, 1], vec![0, 2]]).is_err());
        assert!(IntegralLattice::with_signature(vec![vec![0, 1], vec![1, 0]], (2, 0)).is_err());
    }

    #[test]
    fn discriminant_groups() {
        let u = IntegralLattice::hyperbolic();
        assert_eq!(u.discriminant_group().order(), 1);
        let two = IntegralLattice::rank_one(2).unwrap();
        let dg = two.discriminant_group();
        assert_eq!(dg.elementary_divisors, vec![2]);
        assert_eq!(dg.q_values[0], BigRational::new(1.into(), 4.into()));
        let l5 = IntegralLattice::l5().discriminant_group();
        assert_eq!(l5.order(), 2);
        // Representatives pair integrally with the lattice.
        let lat = IntegralLattice::l5();
        for v in &l5.representatives {
            for i in 0..5 {
                let mut e = vec![BigRational::zero(); 5];
                e[i] = BigRational::one();
                assert!(l5.pair_rat(v, &e).is_integer());
            }
        }
        assert_eq!(lat.rank(), 5);
    }

    #[test]
    fn maximality() {
        assert!(IntegralLattice::l5().is_maximal_at(2).unwrap());
        assert!(IntegralLattice::l5().is_maximal_at(3).unwrap());
        assert!(IntegralLattice::u3().is_maximal_at(2).unwrap());
        let bad = IntegralLattice::from_i64(&[vec![2, 0], vec![0, -2]])
            .unwrap()
            .direct_sum(&IntegralLattice::hyperbolic())
            .direct_sum(&IntegralLattice::hyperbolic());
        assert!(!bad.is_maximal_at(2).unwrap());
        let four = IntegralLattice::rank_one(8).unwrap();
        assert!(!four.is_maximal_at(2).unwrap());
    }

    #[test]
    fn parse_round_trip() {
        let l5 = IntegralLattice::l5();
        assert_eq!(IntegralLattice::parse(&l5.to_text()).unwrap(), l5);
        assert!(matches!(IntegralLattice::parse("2\n0 1\n1"), Err(Error::Parse(_))));
        assert!(IntegralLattice::parse("x").is_err());
    }
}
