//! Archimedean side: hypergeometric kernels, volumes of `Omega_{<=T}`, the
//! singular sum `A(m, x)`, the regularised pieces of the Green function and
//! the Monte Carlo checks of the volume formulas.

use crate::density::DensityCache;
use crate::eisenstein;
use crate::enumerate::{ball_volume, Enumerator};
use crate::error::{Error, Result};
use crate::lattice::IntegralLattice;
use crate::point::PeriodPoint;
use crate::special;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Relative floor on `|Q(lambda_x)| / m` below which a point is treated as
/// lying on the special divisor.
pub const UNDERFLOW: f64 = 1e-12;
pub const DEFAULT_SHELLMAX: usize = 8;
pub const DEFAULT_P_TRUNC: u64 = 200;

/// `F(s, z) = H(s - 1 + k/2, s + 1 - k/2; 2s; z)` and `G = (F - 1) / z`.
#[derive(Clone, Copy, Debug)]
pub struct HyperKernel {
    pub k: f64,
    pub s: f64,
    pub tol: f64,
    pub max_terms: usize,
}

impl HyperKernel {
    pub fn new(k: f64, s: f64) -> Self {
        Self {
            k,
            s,
            tol: 1e-14,
            max_terms: 100_000,
        }
    }

    fn params(&self) -> (f64, f64, f64) {
        (self.s - 1.0 + self.k / 2.0, self.s + 1.0 - self.k / 2.0, 2.0 * self.s)
    }

    /// `sum_{n>=1} t_n z^{n-1}` with certified tail, `t_n` the Gauss coefficients.
    fn series_g(&self, z: f64) -> Result<f64> {
        if z.abs() >= 1.0 {
            return Err(Error::Domain(format!("hypergeometric series needs |z| < 1, got {z}")));
        }
        let (a, b, c) = self.params();
        // Past n >= ab - c the term ratio is at most |z|.
        let n_mono = (a * b - c).max(0.0).ceil() as usize;
        let mut coeff = a * b / c;
        let mut zp = 1.0;
        let mut sum = 0.0;
        for n in 1..=self.max_terms {
            let term = coeff * zp;
            sum += term;
            let next = coeff * (a + n as f64) * (b + n as f64) / ((c + n as f64) * (n as f64 + 1.0));
            if n >= n_mono && (next * zp * z).abs() / (1.0 - z.abs()) <= self.tol * sum.abs().max(1e-300) {
                return Ok(sum);
            }
            coeff = next;
            zp *= z;
        }
        Err(Error::Domain(format!("hypergeometric series did not converge at z={z}")))
    }

    pub fn f(&self, z: f64) -> Result<f64> {
        if z == 0.0 {
            return Ok(1.0);
        }
        Ok(1.0 + z * self.series_g(z)?)
    }

    /// `F` summed directly from its own coefficients.
    pub fn f_direct(&self, z: f64) -> Result<f64> {
        let (a, b, c) = self.params();
        let mut term = 1.0;
        let mut sum = 1.0;
        for n in 0..self.max_terms {
            let nf = n as f64;
            term *= (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * z;
            sum += term;
            if term.abs() <= self.tol * 1e-2 * sum.abs() && nf >= a * b - c {
                return Ok(sum);
            }
        }
        Err(Error::Domain("hypergeometric series did not converge".into()))
    }

    pub fn g(&self, z: f64) -> Result<f64> {
        self.series_g(z)
    }
}

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature on `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(&f, a, b, fa, fm, fb, whole, tol, 40)
}

/// `int_0^1 v^n / (1 - z v^2) dv` at `z = 1 / (1 + t)`, by
/// `K_n = (K_{n-2} - 1/(n-1)) / z` from `K_0 = atanh(sqrt z)/sqrt z` and
/// `K_1 = -log(1 - z) / 2z`.
fn odd_moment(n: u32, t: f64) -> f64 {
    let z = 1.0 / (1.0 + t);
    let one_minus_z = t / (1.0 + t);
    let (mut kn, mut j) = if n % 2 == 0 {
        let r = z.sqrt();
        // atanh(r) = log((1 + r) / (1 - r)) / 2 with 1 - r = (1 - z) / (1 + r)
        (0.5 * ((1.0 + r) * (1.0 + r) / one_minus_z).ln() / r, 0)
    } else {
        (-one_minus_z.ln() / (2.0 * z), 1)
    };
    while j < n {
        j += 2;
        kn = (kn - 1.0 / (j - 1) as f64) / z;
    }
    kn
}

/// `z^k G(k/2, z)` at `z = 1 / (1 + t)`, accurate as `t -> 0`.
///
/// `G(k/2, z) = (k-1) int_0^1 u^{k-1} / (1 - z u) du`; for `z > 1/2` the
/// integrand is split as `(u^{k-1} - 1) / (1 - zu) + 1 / (1 - zu)`.
pub fn kernel_at_half_weight(k: f64, t: f64) -> f64 {
    let z = 1.0 / (1.0 + t);
    let n = 2.0 * k - 1.0;
    let g = if z > 0.5 && n.fract() == 0.0 && n >= 0.0 {
        (k - 1.0) * 2.0 * odd_moment(n as u32, t)
    } else if z <= 0.5 {
        HyperKernel::new(k, k / 2.0).g(z).expect("series converges for z <= 1/2")
    } else {
        // u = v^2 keeps the integrand smooth at 0.
        let e = 2.0 * k - 2.0;
        let reg = integrate(|v| (v.powf(e) - 1.0) * 2.0 * v / (1.0 - z * v * v), 0.0, 1.0, 1e-13);
        let log1mz = (t / (1.0 + t)).ln();
        (k - 1.0) * (reg - log1mz / z)
    };
    z.powf(k) * g
}

/// `(2 pi)^k / (sqrt|L^v/L| Gamma(k))`.
pub fn volume_constant(lat: &IntegralLattice) -> Result<f64> {
    let k = eisenstein::weight(lat)?;
    Ok((2.0 * PI).powf(k) / ((lat.disc_abs() as f64).sqrt() * special::gamma(k)))
}

/// `mu_inf(Omega_{<=T}) = C ((1+T)^{b/2} - 1)`.
pub fn volume_omega(lat: &IntegralLattice, t: f64) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::Domain("volume needs T >= 0".into()));
    }
    let b = lat.b()? as f64;
    Ok(volume_constant(lat)? * ((1.0 + t).powf(b / 2.0) - 1.0))
}

/// `int h_s dmu_inf = (2 pi)^k / (Gamma(b/2) sqrt|L^v/L| s)`.
pub fn h_integral_closed(lat: &IntegralLattice, s: f64) -> Result<f64> {
    if s <= 0.0 {
        return Err(Error::Domain("h_s is not integrable for s <= 0".into()));
    }
    let b = lat.b()? as f64;
    let k = 1.0 + b / 2.0;
    Ok((2.0 * PI).powf(k) / (special::gamma(b / 2.0) * (lat.disc_abs() as f64).sqrt() * s))
}

#[derive(Clone, Copy, Debug)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: u64,
    /// Samples that failed the re-check in lattice coordinates.
    pub rejected: u64,
}

/// Sampler for the thin shell `|Q - 1| < eps` in coordinates adapted to `P + P^perp`.
struct ShellSampler {
    u: Vec<f64>,
    w: Vec<f64>,
    perp: Vec<Vec<f64>>,
    jac: f64,
    eps: f64,
    b: usize,
}

impl ShellSampler {
    fn new(lat: &IntegralLattice, pt: &PeriodPoint, eps: f64) -> Result<Self> {
        let b = lat.b()?;
        let perp = pt.perp_basis();
        if perp.len() != b {
            return Err(Error::InvalidPoint("orthogonal complement has the wrong rank".into()));
        }
        let r = lat.rank();
        let mut cols = vec![pt.u.clone(), pt.w.clone()];
        cols.extend(perp.iter().cloned());
        let m = DMatrix::from_fn(r, r, |i, j| cols[j][i]);
        Ok(Self {
            u: pt.u.clone(),
            w: pt.w.clone(),
            perp,
            jac: m.determinant().abs(),
            eps,
            b,
        })
    }

    /// Vector with plane coordinates `rho (cos th, sin th)` and perp part uniform in
    /// the annulus `|y|^2 in 1 + rho^2 +- eps`; returns it with the annulus volume.
    fn sample(&self, rng: &mut ChaCha20Rng, rho2: f64) -> (Vec<f64>, f64) {
        let th = rng.gen::<f64>() * 2.0 * PI;
        let rho = rho2.sqrt();
        let (x1, x2) = (rho * th.cos(), rho * th.sin());
        let bf = self.b as f64;
        let lo = (1.0 + rho2 - self.eps).max(0.0).powf(bf / 2.0);
        let hi = (1.0 + rho2 + self.eps).powf(bf / 2.0);
        let rad = (lo + rng.gen::<f64>() * (hi - lo)).powf(1.0 / bf);
        let mut dir: Vec<f64> = (0..self.b).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        dir.iter_mut().for_each(|x| *x *= rad / norm);
        let mut v: Vec<f64> = self.u.iter().zip(&self.w).map(|(a, b)| x1 * a + x2 * b).collect();
        for (f, y) in self.perp.iter().zip(&dir) {
            for (vi, fi) in v.iter_mut().zip(f) {
                *vi += y * fi;
            }
        }
        (v, ball_volume(self.b) * (hi - lo))
    }
}

fn mc_chunks<F>(samples: u64, seed: u64, f: F) -> McEstimate
where
    F: Fn(&mut ChaCha20Rng) -> Option<f64> + Sync,
{
    const CHUNK: u64 = 1 << 16;
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<(f64, f64, u64, u64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let n = CHUNK.min(samples - c * CHUNK);
            let (mut s, mut s2, mut rej) = (0.0, 0.0, 0u64);
            for _ in 0..n {
                match f(&mut rng) {
                    Some(x) => {
                        s += x;
                        s2 += x * x;
                    }
                    None => rej += 1,
                }
            }
            (s, s2, n, rej)
        })
        .collect();
    let (s, s2, n, rej) = parts
        .into_iter()
        .fold((0.0, 0.0, 0, 0), |a, p| (a.0 + p.0, a.1 + p.1, a.2 + p.2, a.3 + p.3));
    let mean = s / n as f64;
    let var = (s2 / n as f64 - mean * mean).max(0.0);
    McEstimate {
        value: mean,
        stderr: (var / n as f64).sqrt(),
        samples: n,
        rejected: rej,
    }
}

/// Monte Carlo value of `lim (1/2eps) mu_L{ |Q - 1| < eps, -Q(v_x) <= T }`,
/// with `mu_L` the Lebesgue measure of lattice coordinates.
pub fn volume_omega_mc(lat: &IntegralLattice, pt: &PeriodPoint, t: f64, samples: u64, seed: u64) -> Result<McEstimate> {
    let eps = 1e-4;
    let sh = ShellSampler::new(lat, pt, eps)?;
    let g = lat.gram_f64();
    Ok(mc_chunks(samples, seed, |rng| {
        let rho2 = t * rng.gen::<f64>();
        let (v, ann) = sh.sample(rng, rho2);
        let q = q_real(&g, &v);
        if (q - 1.0).abs() > eps * (1.0 + 1e-6) || -pt.q_x(&v) > t * (1.0 + 1e-9) {
            return None;
        }
        Some(PI * t * ann * sh.jac / (2.0 * eps))
    }))
}

/// Monte Carlo value of `int h_s dmu_inf` with `-Q(v_x)` drawn from density `(1+t)^{-2}`.
pub fn h_integral_mc(lat: &IntegralLattice, pt: &PeriodPoint, s: f64, samples: u64, seed: u64) -> Result<McEstimate> {
    if s <= 0.0 {
        return Err(Error::Domain("h_s is not integrable for s <= 0".into()));
    }
    let k = eisenstein::weight(lat)?;
    let eps = 1e-4;
    let sh = ShellSampler::new(lat, pt, eps)?;
    let g = lat.gram_f64();
    Ok(mc_chunks(samples, seed, |rng| {
        let u: f64 = 1.0 - rng.gen::<f64>();
        let t = 1.0 / u - 1.0;
        let (v, ann) = sh.sample(rng, t);
        let q = q_real(&g, &v);
        if (q - 1.0).abs() > eps * (1.0 + 1e-6) {
            return None;
        }
        let h = (1.0 - pt.q_x(&v)).powf(-(k - 1.0 + s));
        Some(PI * (1.0 + t).powi(2) * ann * sh.jac / (2.0 * eps) * h)
    }))
}

fn q_real(g: &[Vec<f64>], v: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..v.len() {
        for j in 0..v.len() {
            s += g[i][j] * v[i] * v[j];
        }
    }
    s / 2.0
}

#[derive(Clone, Debug, Default)]
pub struct ArchimedeanReport {
    pub m: i64,
    pub vector_count: u64,
    pub a: f64,
    pub a_mt: f64,
    pub a_er: f64,
    pub phi_tilde: f64,
    pub r_x: f64,
    pub phi: f64,
    pub uncertainty: f64,
    /// `(lambda, Q(lambda_x))` for the vectors entering `A`.
    pub vectors: Vec<(Vec<i128>, f64)>,
}

/// Archimedean computations at one lattice and period point.
pub struct Archimedean {
    pub enumerator: Enumerator,
    pub cache: DensityCache,
    pub p_trunc: u64,
    b: usize,
    k: f64,
    vol_c: f64,
}

#[derive(Default)]
struct Shells {
    count: u64,
    a_mt: f64,
    a_er: f64,
    min_qx: f64,
    tilde: f64,
    shell_h: Vec<f64>,
}

impl Archimedean {
    pub fn new(lat: &IntegralLattice, pt: &PeriodPoint) -> Result<Self> {
        let b = lat.b()?;
        Ok(Self {
            enumerator: Enumerator::new(lat, pt)?,
            cache: DensityCache::new(lat),
            p_trunc: DEFAULT_P_TRUNC,
            b,
            k: 1.0 + b as f64 / 2.0,
            vol_c: volume_constant(lat)?,
        })
    }

    pub fn lattice(&self) -> &IntegralLattice {
        self.enumerator.lattice()
    }

    fn check_generic(&self, m: i64, min_qx: f64) -> Result<()> {
        let threshold = UNDERFLOW * m as f64;
        if min_qx < threshold {
            return Err(Error::NonGeneric {
                value: min_qx,
                threshold,
            });
        }
        Ok(())
    }

    /// `A(m, x) = 2 sum log(m / |Q(lambda_x)|)` over `Q(lambda) = m`, `|Q(lambda_x)| <= m`.
    pub fn a_of_m(&self, m: i64) -> Result<ArchimedeanReport> {
        self.a_sum(m, 1.0, true)
    }

    /// [`a_of_m`](Self::a_of_m) without keeping the vectors.
    pub fn a_totals(&self, m: i64) -> Result<ArchimedeanReport> {
        self.a_sum(m, 1.0, false)
    }

    /// Only the vectors with `|Q(lambda_x)| < 1`, i.e. `A_er`.
    pub fn a_error(&self, m: i64) -> Result<f64> {
        Ok(self.a_sum(m, 1.0 / m as f64, false)?.a_er)
    }

    fn a_sum(&self, m: i64, t_max: f64, keep: bool) -> Result<ArchimedeanReport> {
        let mf = m as f64;
        let mut vectors = if keep {
            self.enumerator.representations_with_qx(m as i128, t_max)?
        } else {
            Vec::new()
        };
        let stats = if keep {
            let mut s = Shells {
                min_qx: f64::INFINITY,
                ..Default::default()
            };
            for (_, qx) in &vectors {
                accumulate_a(&mut s, -qx, mf);
            }
            s
        } else {
            self.enumerator.fold(
                m as i128,
                t_max,
                || Shells {
                    min_qx: f64::INFINITY,
                    ..Default::default()
                },
                |s, _, nq| accumulate_a(s, nq, mf),
                merge,
            )?
        };
        if stats.count > 0 {
            self.check_generic(m, stats.min_qx)?;
        }
        vectors.shrink_to_fit();
        Ok(ArchimedeanReport {
            m,
            vector_count: stats.count,
            a: stats.a_mt + stats.a_er,
            a_mt: stats.a_mt,
            a_er: stats.a_er,
            vectors,
            ..Default::default()
        })
    }

    /// `(phi_tilde(x, 0), R_x(0, m), uncertainty)` from the shells `N < shellmax`.
    pub fn phi_parts(&self, m: i64, shellmax: usize) -> Result<(f64, f64, f64)> {
        let mf = m as f64;
        let k = self.k;
        let bf = self.b as f64;
        let stats = self.enumerator.fold(
            m as i128,
            shellmax as f64,
            || Shells {
                min_qx: f64::INFINITY,
                shell_h: vec![0.0; shellmax],
                ..Default::default()
            },
            |s, _, nq| {
                accumulate_a(s, nq, mf);
                let t = nq / mf;
                s.tilde += kernel_at_half_weight(k, t);
                let n = (t.floor() as usize).min(shellmax - 1);
                s.shell_h[n] += (1.0 + t).powf(-bf / 2.0);
            },
            merge,
        )?;
        if stats.count == 0 {
            return Ok((0.0, 0.0, 0.0));
        }
        self.check_generic(m, stats.min_qx)?;
        let est = eisenstein::a_of_m_cached(&self.cache, m, self.p_trunc)?;
        let a = est.a_value;
        // Tail of phi_tilde past shellmax from the asymptotic density of vectors.
        let zs = 1.0 / (1.0 + shellmax as f64);
        let mut tail_sum = 0.0;
        let mut zp = zs;
        for n in 1..10_000 {
            let term = (k - 1.0) / (n as f64 + k - 1.0) * zp / n as f64;
            tail_sum += term;
            if term < 1e-16 * tail_sum {
                break;
            }
            zp *= zs;
        }
        let density = a * self.vol_c * bf / 2.0;
        let tilde_tail = 4.0 / bf * density * tail_sum;
        let phi_tilde = 4.0 / bf * stats.tilde + tilde_tail;
        let r_x: f64 = 4.0 / bf
            * stats
                .shell_h
                .iter()
                .enumerate()
                .map(|(n, h)| h - density * ((n as f64 + 2.0) / (n as f64 + 1.0)).ln())
                .sum::<f64>();
        // Truncation in a(m) and the un-summed shells (partial summation bound).
        let unc = est.trunc_error * (tilde_tail.abs() + 4.0 / bf * density * (1.0 + shellmax as f64).ln())
            + 4.0 / bf * density * (1.0 + shellmax as f64).powf(-1.0);
        Ok((phi_tilde, r_x, unc))
    }

    /// Full report: `A`, `phi_tilde`, `R_x` and `Phi = phi_tilde + R_x - |c(m)| ratio`.
    pub fn report(&self, d_class: i64, m: i64, kappa: f64, shellmax: usize) -> Result<ArchimedeanReport> {
        let mut rep = self.a_totals(m)?;
        let (pt, rx, unc) = self.phi_parts(m, shellmax)?;
        rep.phi_tilde = pt;
        rep.r_x = rx;
        rep.uncertainty = unc;
        rep.phi = self.phi_m(d_class, m, kappa, pt + rx)?;
        Ok(rep)
    }

    /// `Phi_m = phi_m - |c(m)| (log m + 2 sigma'/sigma + kappa)` given `phi_m`.
    pub fn phi_m(&self, d_class: i64, m: i64, kappa: f64, phi: f64) -> Result<f64> {
        let c = eisenstein::a_of_m_cached(&self.cache, m, self.p_trunc)?.c_value;
        let ratio = eisenstein::bprime_ratio_cached(&self.cache, d_class, m, kappa)?;
        Ok(phi - c.abs() * ratio)
    }

    /// `count(m, T1) / count(m, T2)`.
    pub fn equidist_ratio(&self, m: i64, t1: f64, t2: f64) -> Result<f64> {
        if !(1.0..=t2).contains(&t1) {
            return Err(Error::Domain("equidistribution ratio needs 1 <= T1 <= T2".into()));
        }
        let c = self.enumerator.count_thresholds(m as i128, &[t1, t2])?;
        if c[1] == 0 {
            return Err(Error::UndefinedRatio(format!("no vectors of norm {m} in Omega_<={t2}")));
        }
        Ok(c[0] as f64 / c[1] as f64)
    }

    /// `m in [X, 2X)` with `A_er(m) > m^{b/2}`.
    pub fn classify_bad(&self, x: i64) -> Result<Vec<i64>> {
        let bf = self.b as f64;
        let flags = (x..2 * x)
            .into_par_iter()
            .map(|m| Ok((m, self.a_error(m)? > (m as f64).powf(bf / 2.0))))
            .collect::<Result<Vec<_>>>()?;
        Ok(flags.into_iter().filter(|f| f.1).map(|f| f.0).collect())
    }
}

fn accumulate_a(s: &mut Shells, nq: f64, mf: f64) {
    if nq > mf {
        return;
    }
    s.count += 1;
    s.min_qx = s.min_qx.min(nq);
    if nq <= 0.0 {
        return;
    }
    let term = 2.0 * (mf / nq).ln();
    if nq >= 1.0 {
        s.a_mt += term;
    } else {
        s.a_er += term;
    }
}

fn merge(mut a: Shells, b: Shells) -> Shells {
    a.count += b.count;
    a.a_mt += b.a_mt;
    a.a_er += b.a_er;
    a.min_qx = a.min_qx.min(b.min_qx);
    a.tilde += b.tilde;
    if a.shell_h.len() < b.shell_h.len() {
        a.shell_h.resize(b.shell_h.len(), 0.0);
    }
    for (x, y) in a.shell_h.iter_mut().zip(b.shell_h) {
        *x += y;
    }
    a
}

/// Closest pair of points in Euclidean space: `(i, j, squared distance)`.
///
/// Exhaustive up to 1000 points; beyond that a sweep along the first
/// coordinate, which is still exact.
pub fn closest_pair(points: &[Vec<f64>]) -> Option<(usize, usize, f64)> {
    let n = points.len();
    if n < 2 {
        return None;
    }
    let d2 = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    let mut best = (0, 1, d2(&points[0], &points[1]));
    if n <= 1000 {
        for i in 0..n {
            for j in i + 1..n {
                let d = d2(&points[i], &points[j]);
                if d < best.2 {
                    best = (i, j, d);
                }
            }
        }
        return Some(best);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| points[a][0].total_cmp(&points[b][0]));
    for a in 0..n {
        let i = order[a];
        for &j in &order[a + 1..] {
            let dx = points[j][0] - points[i][0];
            if dx * dx >= best.2 {
                break;
            }
            let d = d2(&points[i], &points[j]);
            if d < best.2 {
                best = (i.min(j), i.max(j), d);
            }
        }
    }
    Some(best)
}

/// Result of pairing vectors with small plane components.
#[derive(Clone, Debug)]
pub struct SpherePair {
    pub v: Vec<i128>,
    pub v2: Vec<i128>,
    pub w: Vec<i128>,
    pub q_w_perp: f64,
    pub q_w_x: f64,
}

/// Pair minimising `Q(w_{x perp})` for `w = v - v'`.
pub fn sphere_pair(lat: &IntegralLattice, pt: &PeriodPoint, vectors: &[Vec<i128>]) -> Result<SpherePair> {
    if vectors.len() < 2 {
        return Err(Error::Domain("sphere pairing needs at least two vectors".into()));
    }
    let perp = pt.perp_basis();
    let g = lat.gram_f64();
    let coords: Vec<Vec<f64>> = vectors
        .iter()
        .map(|v| {
            let vf: Vec<f64> = v.iter().map(|&x| x as f64).collect();
            perp.iter().map(|f| lat.bilinear_f64(&vf, f) / 2.0).collect()
        })
        .collect();
    let (i, j, _) = closest_pair(&coords).expect("two points");
    let w: Vec<i128> = vectors[i].iter().zip(&vectors[j]).map(|(a, b)| a - b).collect();
    let q_w_x = pt.q_x_int(&w);
    let wf: Vec<f64> = w.iter().map(|&x| x as f64).collect();
    Ok(SpherePair {
        v: vectors[i].clone(),
        v2: vectors[j].clone(),
        q_w_perp: q_real(&g, &wf) - q_w_x,
        q_w_x,
        w,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_basics() {
        let h = HyperKernel::new(2.5, 1.25);
        assert_eq!(h.f(0.0).unwrap(), 1.0);
        assert!((h.g(0.0).unwrap() - 0.6).abs() < 1e-15);
        for s in [1.25, 1.3, 1.35] {
            let h = HyperKernel::new(2.5, s);
            for i in 0..=9 {
                let z = i as f64 / 10.0;
                assert!((h.f(z).unwrap() - h.f_direct(z).unwrap()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn split_kernel_matches_series() {
        let k = 2.5;
        let h = HyperKernel::new(k, k / 2.0);
        for t in [0.12, 0.5, 1.0, 3.0] {
            let z: f64 = 1.0 / (1.0 + t);
            let series = z.powf(k) * h.g(z).unwrap();
            assert!((kernel_at_half_weight(k, t) - series).abs() < 1e-10, "t={t}");
        }
        // Logarithmic singularity with bounded remainder.
        for t in [1e-3, 1e-6, 1e-9, 1e-12] {
            let z = 1.0 / (1.0 + t);
            let rem = kernel_at_half_weight(k, t) + 1.5 * (t / (1.0 + t)).ln();
            assert!(rem.abs() < 2.0, "t={t} z={z} rem={rem}");
        }
    }

    #[test]
    fn moment_recursion_matches_quadrature() {
        for k in [2.0, 2.5, 3.0, 3.5, 5.0] {
            for t in [1e-6, 0.01, 0.3, 0.9] {
                let z = 1.0 / (1.0 + t);
                let e = 2.0 * k - 1.0;
                let quad = integrate(|v: f64| v.powf(e) / (1.0 - z * v * v), 0.0, 1.0, 1e-13);
                let rec = odd_moment(e as u32, t);
                assert!((rec - quad).abs() < 1e-8 * quad.abs().max(1.0), "k={k} t={t}: {rec} vs {quad}");
            }
        }
    }

    #[test]
    fn volume_formula() {
        let l5 = IntegralLattice::l5();
        assert_eq!(volume_omega(&l5, 0.0).unwrap(), 0.0);
        let v3 = volume_omega(&l5, 3.0).unwrap();
        assert!((v3 - 368.5).abs() < 0.5, "{v3}");
        let r = volume_omega(&l5, 2e6).unwrap() / volume_omega(&l5, 1e6).unwrap();
        assert!((r - 2f64.powf(1.5)).abs() < 1e-5);
    }

    #[test]
    fn closest_pair_sweep_matches_exhaustive() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let pts: Vec<Vec<f64>> = (0..1500).map(|_| (0..3).map(|_| rng.gen::<f64>()).collect()).collect();
        let (_, _, d) = closest_pair(&pts).unwrap();
        let mut best = f64::INFINITY;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                best = best.min(pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b) * (a - b)).sum());
            }
        }
        assert_eq!(d, best);
    }
}
