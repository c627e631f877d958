//! Exact integer and rational matrix routines on small dense matrices.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type IMat = Vec<Vec<i128>>;
pub type BMat = Vec<Vec<BigInt>>;
pub type QMat = Vec<Vec<BigRational>>;

pub fn to_big(a: &IMat) -> BMat {
    a.iter()
        .map(|row| row.iter().map(|&x| BigInt::from(x)).collect())
        .collect()
}

pub fn to_rat(a: &IMat) -> QMat {
    a.iter()
        .map(|row| {
            row.iter()
                .map(|&x| BigRational::from_integer(BigInt::from(x)))
                .collect()
        })
        .collect()
}

pub fn identity_big(n: usize) -> BMat {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { BigInt::one() } else { BigInt::zero() })
                .collect()
        })
        .collect()
}

/// Determinant by fraction-free Bareiss elimination.
pub fn det(a: &IMat) -> BigInt {
    let n = a.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut m = to_big(a);
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&i| !m[i][k].is_zero()) {
                Some(i) => {
                    m.swap(i, k);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                m[i][j] = v / &prev;
            }
        }
        prev = m[k][k].clone();
    }
    sign * m[n - 1][n - 1].clone()
}

/// Smith normal form `P A Q = diag(d)` with unimodular P, Q and d_1 | d_2 | ...
pub struct Smith {
    pub diag: Vec<BigInt>,
    pub p: BMat,
    pub q: BMat,
}

pub fn smith(a: &IMat) -> Smith {
    let n = a.len();
    let mut m = to_big(a);
    let mut p = identity_big(n);
    let mut q = identity_big(n);
    for t in 0..n {
        loop {
            // Move the smallest nonzero entry of the trailing block to (t, t).
            let mut best: Option<(usize, usize)> = None;
            for i in t..n {
                for j in t..n {
                    if !m[i][j].is_zero()
                        && best.map_or(true, |(bi, bj)| m[i][j].abs() < m[bi][bj].abs())
                    {
                        best = Some((i, j));
                    }
                }
            }
            let Some((bi, bj)) = best else {
                break;
            };
            m.swap(t, bi);
            p.swap(t, bi);
            for row in m.iter_mut() {
                row.swap(t, bj);
            }
            for row in q.iter_mut() {
                row.swap(t, bj);
            }
            let mut done = true;
            for i in t + 1..n {
                let f = m[i][t].div_floor(&m[t][t]);
                if !f.is_zero() {
                    for j in 0..n {
                        let v = &f * &m[t][j];
                        m[i][j] -= v;
                        let w = &f * &p[t][j];
                        p[i][j] -= w;
                    }
                }
                if !m[i][t].is_zero() {
                    done = false;
                }
            }
            for j in t + 1..n {
                let f = m[t][j].div_floor(&m[t][t]);
                if !f.is_zero() {
                    for i in 0..n {
                        let v = &f * &m[i][t];
                        m[i][j] -= v;
                        let w = &f * &q[i][t];
                        q[i][j] -= w;
                    }
                }
                if !m[t][j].is_zero() {
                    done = false;
                }
            }
            if !done {
                continue;
            }
            // Enforce divisibility of the remaining block by the pivot.
            let bad = (t + 1..n)
                .flat_map(|i| (t + 1..n).map(move |j| (i, j)))
                .find(|&(i, j)| !(&m[i][j] % &m[t][t]).is_zero());
            match bad {
                Some((i, _)) => {
                    for j in 0..n {
                        let v = m[i][j].clone();
                        m[t][j] += v;
                        let w = p[i][j].clone();
                        p[t][j] += w;
                    }
                }
                None => break,
            }
        }
        if m[t][t].is_negative() {
            for j in 0..n {
                m[t][j] = -m[t][j].clone();
                p[t][j] = -p[t][j].clone();
            }
        }
    }
    Smith {
        diag: (0..n).map(|i| m[i][i].clone()).collect(),
        p,
        q,
    }
}

/// Row Hermite normal form of the module spanned by the rows; zero rows dropped.
pub fn hnf_rows(rows: &[Vec<BigInt>]) -> BMat {
    if rows.is_empty() {
        return Vec::new();
    }
    let ncols = rows[0].len();
    let mut m: BMat = rows.to_vec();
    let mut out_row = 0;
    for c in 0..ncols {
        // Euclid on column c among rows >= out_row.
        loop {
            let piv = (out_row..m.len())
                .filter(|&i| !m[i][c].is_zero())
                .min_by(|&a, &b| m[a][c].abs().cmp(&m[b][c].abs()));
            let Some(pi) = piv else { break };
            m.swap(out_row, pi);
            let mut clean = true;
            for i in out_row + 1..m.len() {
                if m[i][c].is_zero() {
                    continue;
                }
                let f = m[i][c].div_floor(&m[out_row][c]);
                for j in c..ncols {
                    let v = &f * &m[out_row][j];
                    m[i][j] -= v;
                }
                if !m[i][c].is_zero() {
                    clean = false;
                }
            }
            if clean {
                break;
            }
        }
        if out_row < m.len() && !m[out_row][c].is_zero() {
            if m[out_row][c].is_negative() {
                for j in c..ncols {
                    m[out_row][j] = -m[out_row][j].clone();
                }
            }
            for i in 0..out_row {
                let f = m[i][c].div_floor(&m[out_row][c]);
                if !f.is_zero() {
                    for j in c..ncols {
                        let v = &f * &m[out_row][j];
                        m[i][j] -= v;
                    }
                }
            }
            out_row += 1;
        }
    }
    m.truncate(out_row);
    m
}

/// Inverse over Q; `None` if singular.
pub fn inverse_rat(a: &QMat) -> Option<QMat> {
    let n = a.len();
    let mut m: QMat = a.to_vec();
    let mut inv: QMat = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        BigRational::one()
                    } else {
                        BigRational::zero()
                    }
                })
                .collect()
        })
        .collect();
    for c in 0..n {
        let piv = (c..n).find(|&i| !m[i][c].is_zero())?;
        m.swap(c, piv);
        inv.swap(c, piv);
        let d = m[c][c].clone();
        for j in 0..n {
            m[c][j] = &m[c][j] / &d;
            inv[c][j] = &inv[c][j] / &d;
        }
        for i in 0..n {
            if i != c && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..n {
                    let v = &f * &m[c][j];
                    m[i][j] -= v;
                    let w = &f * &inv[c][j];
                    inv[i][j] -= w;
                }
            }
        }
    }
    Some(inv)
}

/// Inertia (positive, negative) of a nonsingular symmetric integer matrix,
/// by exact symmetric elimination over Q.
pub fn inertia(a: &IMat) -> Option<(usize, usize)> {
    let mut m = to_rat(a);
    let mut n = m.len();
    let (mut pos, mut neg) = (0, 0);
    while n > 0 {
        let k = match (0..n).find(|&i| !m[i][i].is_zero()) {
            Some(k) => k,
            None => {
                // All diagonals vanish: e_i <- e_i + e_j yields diagonal 2 G_ij.
                let (i, j) = (0..n)
                    .flat_map(|i| (0..n).map(move |j| (i, j)))
                    .find(|&(i, j)| i != j && !m[i][j].is_zero())?;
                for c in 0..n {
                    let v = m[j][c].clone();
                    m[i][c] += v;
                }
                for r in 0..n {
                    let v = m[r][j].clone();
                    m[r][i] += v;
                }
                i
            }
        };
        let d = m[k][k].clone();
        if d.is_positive() {
            pos += 1;
        } else {
            neg += 1;
        }
        let mut next: QMat = Vec::with_capacity(n - 1);
        for i in (0..n).filter(|&i| i != k) {
            let row = (0..n)
                .filter(|&j| j != k)
                .map(|j| &m[i][j] - &m[i][k] * &m[k][j] / &d)
                .collect();
            next.push(row);
        }
        m = next;
        n -= 1;
    }
    Some((pos, neg))
}

pub fn mat_mul_big(a: &BMat, b: &BMat) -> BMat {
    let n = a.len();
    let k = b.len();
    let m = if k == 0 { 0 } else { b[0].len() };
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| (0..k).map(|t| &a[i][t] * &b[t][j]).sum())
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l5() -> IMat {
        vec![
            vec![0, 1, 0, 0, 0],
            vec![1, 0, 0, 0, 0],
            vec![0, 0, 0, 1, 0],
            vec![0, 0, 1, 0, 0],
            vec![0, 0, 0, 0, 2],
        ]
    }

    #[test]
    fn determinant_and_inertia() {
        assert_eq!(det(&l5()), BigInt::from(2));
        assert_eq!(inertia(&l5()), Some((3, 2)));
        let a = vec![vec![2, 1, 0], vec![1, 2, 1], vec![0, 1, 2]];
        assert_eq!(det(&a), BigInt::from(4));
        assert_eq!(inertia(&a), Some((3, 0)));
    }

    #[test]
    fn smith_reconstructs() {
        let a: IMat = vec![vec![2, 4, 4], vec![-6, 6, 12], vec![10, -4, -16]];
        let s = smith(&a);
        let d: Vec<i64> = s
            .diag
            .iter()
            .map(|x| num_traits::ToPrimitive::to_i64(x).unwrap())
            .collect();
        assert_eq!(d, vec![2, 6, 12]);
        let pa = mat_mul_big(&s.p, &to_big(&a));
        let paq = mat_mul_big(&pa, &s.q);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { s.diag[i].clone() } else { BigInt::zero() };
                assert_eq!(paq[i][j], want);
            }
        }
    }

    #[test]
    fn hnf_of_scaled_lattice() {
        let rows: Vec<Vec<BigInt>> = vec![
            vec![3.into(), 6.into()],
            vec![0.into(), 9.into()],
            vec![9.into(), 0.into()],
        ];
        let h = hnf_rows(&rows);
        assert_eq!(h, vec![vec![3.into(), 6.into()], vec![0.into(), 9.into()]]);
    }
}
