//! p-adic Jordan splittings of even lattices.
//!
//! A block is stored as `(nu, U)` with the lattice Gram block equal to `p^nu U`
//! and its quadratic form `p^nu x^T U x / 2`.  Valuations refer to the quadratic
//! form, so at p = 2 a rank-one Gram block `[2^(k) u]` has `nu = k - 1`.

use crate::arith::{self, rat_mod, val_rat};
use crate::error::{Error, Result};
use crate::lattice::IntegralLattice;
use crate::matrix::{self, QMat};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

#[derive(Clone, Debug, PartialEq)]
pub struct JordanBlock {
    pub nu: u32,
    pub dim: usize,
    /// Unit part U of the Gram block (exact, p-integral).
    pub unit_gram: Vec<Vec<BigRational>>,
}

impl JordanBlock {
    /// Coefficients of the unit quadratic form: `[a]` for `a x^2`,
    /// `[a, b, c]` for `a x^2 + b x y + c y^2`.
    pub fn q_coeffs(&self) -> Vec<BigRational> {
        let two = BigRational::from_integer(BigInt::from(2));
        match self.dim {
            1 => vec![&self.unit_gram[0][0] / &two],
            _ => vec![
                &self.unit_gram[0][0] / &two,
                self.unit_gram[0][1].clone(),
                &self.unit_gram[1][1] / &two,
            ],
        }
    }

    /// Unit Gram entries reduced mod p^e.
    pub fn unit_gram_mod(&self, p: u64, e: u32) -> Vec<Vec<BigInt>> {
        let m = arith::big_pow(p, e);
        self.unit_gram
            .iter()
            .map(|r| r.iter().map(|x| rat_mod(x, &m).expect("p-integral")).collect())
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct JordanSplitting {
    pub prime: u64,
    pub blocks: Vec<JordanBlock>,
    /// Total dimension of the valuation-zero blocks.
    pub s0: usize,
    pub precision: u32,
    /// Columns are the new basis vectors in the original coordinates.
    pub transform: QMat,
}

impl JordanSplitting {
    pub fn decompose(lat: &IntegralLattice, p: u64, precision: u32) -> Result<Self> {
        if !arith::is_prime(p) {
            return Err(Error::Domain(format!("{p} is not prime")));
        }
        if precision == 0 {
            return Err(Error::Domain("precision must be >= 1".into()));
        }
        let r = lat.rank();
        let mut m = matrix::to_rat(lat.gram());
        let mut t: QMat = (0..r)
            .map(|i| {
                (0..r)
                    .map(|j| if i == j { BigRational::one() } else { BigRational::zero() })
                    .collect()
            })
            .collect();
        let mut active: Vec<usize> = (0..r).collect();
        let mut order: Vec<usize> = Vec::with_capacity(r);
        let mut blocks = Vec::new();

        // e_k <- e_k + c e_i as a congruence on m and a column operation on t.
        let add = |m: &mut QMat, t: &mut QMat, k: usize, i: usize, c: &BigRational| {
            for a in 0..r {
                let v = &m[i][a] * c;
                m[k][a] += v;
            }
            for a in 0..r {
                let v = &m[a][i] * c;
                m[a][k] += v;
            }
            for a in 0..r {
                let v = &t[a][i] * c;
                t[a][k] += v;
            }
        };

        while !active.is_empty() {
            let mut vmin = i64::MAX;
            for &i in &active {
                for &j in &active {
                    vmin = vmin.min(val_rat(&m[i][j], p));
                }
            }
            if vmin == i64::MAX {
                return Err(Error::InvalidLattice("singular Gram matrix".into()));
            }
            if vmin >= precision as i64 {
                return Err(Error::Precision {
                    precision,
                    detail: format!("pivot valuation {vmin} at p={p}"),
                });
            }
            let diag = active.iter().copied().find(|&i| val_rat(&m[i][i], p) == vmin);
            let pivot: Vec<usize> = match diag {
                Some(i) => vec![i],
                None => {
                    let (i, j) = active
                        .iter()
                        .flat_map(|&i| active.iter().map(move |&j| (i, j)))
                        .find(|&(i, j)| i < j && val_rat(&m[i][j], p) == vmin)
                        .expect("minimal valuation attained");
                    if p != 2 {
                        add(&mut m, &mut t, i, j, &BigRational::one());
                        vec![i]
                    } else {
                        vec![i, j]
                    }
                }
            };
            let rest: Vec<usize> = active.iter().copied().filter(|k| !pivot.contains(k)).collect();
            if pivot.len() == 1 {
                let i = pivot[0];
                for &k in &rest {
                    if m[k][i].is_zero() {
                        continue;
                    }
                    let c = -(&m[k][i] / &m[i][i]);
                    add(&mut m, &mut t, k, i, &c);
                }
                let g = m[i][i].clone();
                let gv = val_rat(&g, p);
                let nu = if p == 2 { gv - 1 } else { gv };
                let unit = &g / arith::rat_pow(p, nu);
                blocks.push(JordanBlock {
                    nu: nu as u32,
                    dim: 1,
                    unit_gram: vec![vec![unit]],
                });
            } else {
                let (i, j) = (pivot[0], pivot[1]);
                let (a, b, d) = (m[i][i].clone(), m[i][j].clone(), m[j][j].clone());
                let det = &a * &d - &b * &b;
                for &k in &rest {
                    let (x, y) = (m[k][i].clone(), m[k][j].clone());
                    if x.is_zero() && y.is_zero() {
                        continue;
                    }
                    // Solve [a b; b d] (ci, cj) = (x, y).
                    let ci = (&d * &x - &b * &y) / &det;
                    let cj = (&a * &y - &b * &x) / &det;
                    add(&mut m, &mut t, k, i, &-ci);
                    add(&mut m, &mut t, k, j, &-cj);
                }
                let s = arith::rat_pow(p, vmin);
                blocks.push(JordanBlock {
                    nu: vmin as u32,
                    dim: 2,
                    unit_gram: vec![
                        vec![&m[i][i] / &s, &m[i][j] / &s],
                        vec![&m[j][i] / &s, &m[j][j] / &s],
                    ],
                });
            }
            order.extend(&pivot);
            active = rest;
        }
        // Reorder transform columns to block order.
        let transform: QMat = (0..r)
            .map(|a| order.iter().map(|&c| t[a][c].clone()).collect())
            .collect();
        let s0 = blocks.iter().filter(|b| b.nu == 0).map(|b| b.dim).sum();
        Ok(Self {
            prime: p,
            blocks,
            s0,
            precision,
            transform,
        })
    }

    pub fn valuations(&self) -> Vec<u32> {
        self.blocks.iter().map(|b| b.nu).collect()
    }

    pub fn rank(&self) -> usize {
        self.blocks.iter().map(|b| b.dim).sum()
    }

    /// Gram matrix of the split form, `T^t G T`, rebuilt from the blocks.
    pub fn block_gram(&self) -> QMat {
        let r = self.rank();
        let mut g = vec![vec![BigRational::zero(); r]; r];
        let mut off = 0;
        for b in &self.blocks {
            let s = arith::rat_pow(self.prime, b.nu as i64);
            for i in 0..b.dim {
                for j in 0..b.dim {
                    g[off + i][off + j] = &b.unit_gram[i][j] * &s;
                }
            }
            off += b.dim;
        }
        g
    }

    /// Inverse transform reduced mod p: maps original coordinates to block coordinates.
    pub fn inverse_transform_mod_p(&self) -> Vec<Vec<u64>> {
        let inv = matrix::inverse_rat(&self.transform).expect("unimodular transform");
        let pb = BigInt::from(self.prime);
        inv.iter()
            .map(|row| {
                row.iter()
                    .map(|x| {
                        num_traits::ToPrimitive::to_u64(&rat_mod(x, &pb).expect("p-integral")).unwrap()
                    })
                    .collect()
            })
            .collect()
    }

    /// Indices (block coordinates) belonging to valuation-zero blocks.
    pub fn unit_coordinates(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut off = 0;
        for b in &self.blocks {
            if b.nu == 0 {
                out.extend(off..off + b.dim);
            }
            off += b.dim;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::val_rat;

    fn check_reconstructs(lat: &IntegralLattice, p: u64) -> JordanSplitting {
        let js = lat.jordan(p, 32).unwrap();
        let g = matrix::to_rat(lat.gram());
        let t = &js.transform;
        let r = lat.rank();
        let bg = js.block_gram();
        for i in 0..r {
            for j in 0..r {
                let mut s = BigRational::zero();
                for a in 0..r {
                    for b in 0..r {
                        s += &t[a][i] * &g[a][b] * &t[b][j];
                    }
                }
                assert_eq!(s, bg[i][j], "entry ({i},{j}) at p={p}");
            }
        }
        let inv = matrix::inverse_rat(t).unwrap();
        assert!(inv.iter().flatten().all(|x| val_rat(x, p) >= 0 || x.is_zero()));
        for b in &js.blocks {
            if b.dim == 1 {
                let v = val_rat(&b.unit_gram[0][0], p);
                assert_eq!(v, if p == 2 { 1 } else { 0 });
            } else {
                assert_eq!(p, 2);
                assert_eq!(val_rat(&b.unit_gram[0][1], p), 0);
            }
        }
        js
    }

    #[test]
    fn diagonal_at_three() {
        let lat = IntegralLattice::diagonal_q(&[1, 3, 9]).unwrap();
        let js = check_reconstructs(&lat, 3);
        assert_eq!(js.valuations(), vec![0, 1, 2]);
        assert!(js.blocks.iter().all(|b| b.q_coeffs()[0].is_one()));
    }

    #[test]
    fn hyperbolic_at_two() {
        let js = check_reconstructs(&IntegralLattice::hyperbolic(), 2);
        assert_eq!(js.blocks.len(), 1);
        assert_eq!(js.blocks[0].dim, 2);
        assert_eq!(js.blocks[0].nu, 0);
    }

    #[test]
    fn l5_splittings() {
        let l5 = IntegralLattice::l5();
        let js3 = check_reconstructs(&l5, 3);
        assert_eq!(js3.valuations(), vec![0; 5]);
        assert_eq!(js3.s0, 5);
        let js2 = check_reconstructs(&l5, 2);
        assert_eq!(js2.s0, 5);
        let dims: Vec<usize> = js2.blocks.iter().map(|b| b.dim).collect();
        assert_eq!(dims, vec![2, 2, 1]);
    }

    #[test]
    fn non_diagonal_input() {
        let g = vec![
            vec![2, 1, 0, 0],
            vec![1, 4, 3, 0],
            vec![0, 3, 6, 3],
            vec![0, 0, 3, 18],
        ];
        let lat = IntegralLattice::new(g).unwrap();
        for p in [2, 3, 5, 7] {
            check_reconstructs(&lat, p);
        }
    }

    #[test]
    fn precision_error() {
        let lat = IntegralLattice::diagonal_q(&[1, 3 * 3 * 3 * 3]).unwrap();
        assert!(matches!(lat.jordan(3, 3), Err(Error::Precision { .. })));
    }
}
