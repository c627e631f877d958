//! Points of the period domain: negative-definite planes in L (x) R.

use crate::error::{Error, Result};
use crate::lattice::IntegralLattice;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

/// Oriented plane spanned by `u, w` with `Q(u) = Q(w) = -1`, `(u.w) = 0`.
#[derive(Clone, Debug)]
pub struct PeriodPoint {
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    pub tolerance: f64,
    gram: Vec<Vec<f64>>,
    /// `G u` and `G w`, so that `(lambda . u) = lambda . gu`.
    gu: Vec<f64>,
    gw: Vec<f64>,
}

fn bil(g: &[Vec<f64>], v: &[f64], w: &[f64]) -> f64 {
    let r = g.len();
    let mut s = 0.0;
    for i in 0..r {
        let mut t = 0.0;
        for j in 0..r {
            t += g[i][j] * w[j];
        }
        s += v[i] * t;
    }
    s
}

fn mat_vec(g: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    g.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

impl PeriodPoint {
    pub const DEFAULT_TOLERANCE: f64 = 1e-10;

    /// Validates an already normalised pair.
    pub fn new(lat: &IntegralLattice, u: Vec<f64>, w: Vec<f64>, tolerance: f64) -> Result<Self> {
        let r = lat.rank();
        if u.len() != r || w.len() != r {
            return Err(Error::InvalidPoint(format!("vectors must have length {r}")));
        }
        let gram = lat.gram_f64();
        let (qu, qw, uw) = (bil(&gram, &u, &u) / 2.0, bil(&gram, &w, &w) / 2.0, bil(&gram, &u, &w));
        if (qu + 1.0).abs() > tolerance || (qw + 1.0).abs() > tolerance || uw.abs() > tolerance {
            return Err(Error::InvalidPoint(format!(
                "Q(u)={qu}, Q(w)={qw}, (u.w)={uw} violate normalisation"
            )));
        }
        let gu = mat_vec(&gram, &u);
        let gw = mat_vec(&gram, &w);
        Ok(Self {
            u,
            w,
            tolerance,
            gram,
            gu,
            gw,
        })
    }

    /// Gram-Schmidt inside span(u, w); rejects spans that are not negative definite.
    pub fn orthonormalized(lat: &IntegralLattice, u: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        let r = lat.rank();
        if u.len() != r || w.len() != r {
            return Err(Error::InvalidPoint(format!("vectors must have length {r}")));
        }
        let g = lat.gram_f64();
        let (a, b, c) = (bil(&g, &u, &u), bil(&g, &u, &w), bil(&g, &w, &w));
        let scale = a.abs().max(c.abs()).max(1e-300);
        if !(a < 0.0 && a * c - b * b > 1e-12 * scale * scale) {
            return Err(Error::InvalidPoint("span(u, w) is not negative definite".into()));
        }
        let nu = (-a / 2.0).sqrt();
        let u1: Vec<f64> = u.iter().map(|x| x / nu).collect();
        let k = bil(&g, &w, &u1) / bil(&g, &u1, &u1);
        let w0: Vec<f64> = w.iter().zip(&u1).map(|(x, y)| x - k * y).collect();
        let nw = (-bil(&g, &w0, &w0) / 2.0).sqrt();
        let w1: Vec<f64> = w0.iter().map(|x| x / nw).collect();
        Self::new(lat, u1, w1, Self::DEFAULT_TOLERANCE)
    }

    /// Pseudo-random generic point: the negative eigenplane of the Gram matrix,
    /// perturbed by seeded Gaussian noise.
    pub fn random(lat: &IntegralLattice, seed: u64) -> Result<Self> {
        lat.b()?;
        let r = lat.rank();
        let g = DMatrix::from_fn(r, r, |i, j| lat.gram()[i][j] as f64);
        let eig = SymmetricEigen::new(g);
        let mut neg: Vec<usize> = (0..r).filter(|&i| eig.eigenvalues[i] < 0.0).collect();
        neg.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        for _ in 0..1000 {
            let mut pick = |k: usize| -> Vec<f64> {
                (0..r)
                    .map(|i| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        eig.eigenvectors[(i, neg[k])] + 0.35 * z
                    })
                    .collect()
            };
            let u = pick(0);
            let w = pick(1);
            if let Ok(pt) = Self::orthonormalized(lat, u, w) {
                return Ok(pt);
            }
        }
        Err(Error::InvalidPoint("failed to sample a negative-definite plane".into()))
    }

    /// Parses two lines of reals (u then w) and re-orthonormalises.
    pub fn parse(lat: &IntegralLattice, text: &str) -> Result<Self> {
        let rows: Vec<Vec<f64>> = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(|l| {
                l.split_whitespace()
                    .map(|t| t.parse::<f64>().map_err(|e| Error::Parse(format!("point entry {t:?}: {e}"))))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?;
        if rows.len() != 2 {
            return Err(Error::Parse(format!("point file needs 2 rows, found {}", rows.len())));
        }
        Self::orthonormalized(lat, rows[0].clone(), rows[1].clone())
    }

    pub fn to_text(&self) -> String {
        let f = |v: &[f64]| v.iter().map(|x| format!("{x:.17e}")).collect::<Vec<_>>().join(" ");
        format!("{}\n{}\n", f(&self.u), f(&self.w))
    }

    pub fn rank(&self) -> usize {
        self.u.len()
    }

    /// `((lambda . u), (lambda . w))`.
    pub fn plane_pairings(&self, lam: &[f64]) -> (f64, f64) {
        let a = lam.iter().zip(&self.gu).map(|(x, y)| x * y).sum();
        let b = lam.iter().zip(&self.gw).map(|(x, y)| x * y).sum();
        (a, b)
    }

    pub fn plane_pairings_int(&self, lam: &[i128]) -> (f64, f64) {
        let mut a = 0.0;
        let mut b = 0.0;
        for (i, &x) in lam.iter().enumerate() {
            if x != 0 {
                a += x as f64 * self.gu[i];
                b += x as f64 * self.gw[i];
            }
        }
        (a, b)
    }

    /// `Q(lambda_x) = -((lambda.u)^2 + (lambda.w)^2) / 4`.
    pub fn q_x(&self, lam: &[f64]) -> f64 {
        let (a, b) = self.plane_pairings(lam);
        -(a * a + b * b) / 4.0
    }

    pub fn q_x_int(&self, lam: &[i128]) -> f64 {
        let (a, b) = self.plane_pairings_int(lam);
        -(a * a + b * b) / 4.0
    }

    /// `(Q(lambda_x), Q(lambda_x_perp))`.
    pub fn project(&self, lam: &[f64]) -> (f64, f64) {
        let qx = self.q_x(lam);
        let q = bil(&self.gram, lam, lam) / 2.0;
        (qx, q - qx)
    }

    /// Component of lambda in the plane, in lattice coordinates.
    pub fn plane_component(&self, lam: &[f64]) -> Vec<f64> {
        let (a, b) = self.plane_pairings(lam);
        // B(u,u) = B(w,w) = -2.
        self.u
            .iter()
            .zip(&self.w)
            .map(|(x, y)| -a / 2.0 * x - b / 2.0 * y)
            .collect()
    }

    pub fn majorant(&self) -> MajorantForm {
        let r = self.rank();
        let g = (0..r)
            .map(|i| {
                (0..r)
                    .map(|j| self.gram[i][j] + self.gu[i] * self.gu[j] + self.gw[i] * self.gw[j])
                    .collect()
            })
            .collect();
        MajorantForm { gram_real: g }
    }

    /// Basis of the orthogonal complement with `Q(f_i) = 1`, `(f_i . f_j) = 0`.
    pub fn perp_basis(&self) -> Vec<Vec<f64>> {
        let r = self.rank();
        let mut out: Vec<Vec<f64>> = Vec::new();
        for i in 0..r {
            let mut v = vec![0.0; r];
            v[i] = 1.0;
            let pc = self.plane_component(&v);
            for k in 0..r {
                v[k] -= pc[k];
            }
            for f in &out {
                let c = bil(&self.gram, &v, f) / 2.0;
                for k in 0..r {
                    v[k] -= c * f[k];
                }
            }
            let n = bil(&self.gram, &v, &v) / 2.0;
            if n > 1e-8 {
                let s = n.sqrt();
                out.push(v.iter().map(|x| x / s).collect());
            }
        }
        out
    }

    pub fn gram(&self) -> &[Vec<f64>] {
        &self.gram
    }
}

/// The positive-definite majorant `Q_x(lambda) = Q(lambda) - 2 Q(lambda_x)`,
/// stored as a real Gram matrix (so `Q_x(v) = v^T G_x v / 2`).
#[derive(Clone, Debug)]
pub struct MajorantForm {
    pub gram_real: Vec<Vec<f64>>,
}

impl MajorantForm {
    pub fn q(&self, v: &[f64]) -> f64 {
        bil(&self.gram_real, v, v) / 2.0
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let r = self.gram_real.len();
        let m = DMatrix::from_fn(r, r, |i, j| self.gram_real[i][j]);
        SymmetricEigen::new(m).eigenvalues.min()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn projection_identity_and_majorant() {
        let lat = IntegralLattice::l5();
        let pt = PeriodPoint::random(&lat, 7).unwrap();
        let maj = pt.majorant();
        assert!(maj.min_eigenvalue() > 0.0);
        let (qx, qp) = pt.project(&pt.u);
        assert!((qx + 1.0).abs() < 1e-9 && qp.abs() < 1e-9);
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let v: Vec<f64> = (0..5).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let (qx, qp) = pt.project(&v);
            let q = lat.q_f64(&v);
            assert!(qx <= 0.0 && qp >= -1e-9);
            assert!((qx + qp - q).abs() < 1e-9 * (1.0 + q.abs()));
            assert!((maj.q(&v) - (qp - qx)).abs() < 1e-8 * (1.0 + q.abs()));
        }
        for f in pt.perp_basis() {
            let (qx, qp) = pt.project(&f);
            assert!(qx.abs() < 1e-9 && (qp - 1.0).abs() < 1e-9);
        }
        assert_eq!(pt.perp_basis().len(), 3);
    }

    #[test]
    fn loader_rejects_positive_planes() {
        let lat = IntegralLattice::l5();
        let text = "1 1 0 0 0\n0 0 1 1 0\n";
        assert!(matches!(PeriodPoint::parse(&lat, text), Err(Error::InvalidPoint(_))));
        let text = "1 -1 0 0 0\n0 0 1 -1.5 0\n";
        let pt = PeriodPoint::parse(&lat, text).unwrap();
        let again = PeriodPoint::parse(&lat, &pt.to_text()).unwrap();
        for i in 0..5 {
            assert!((again.u[i] - pt.u[i]).abs() < 1e-12);
        }
    }
}
