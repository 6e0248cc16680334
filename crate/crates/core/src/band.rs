//! Momentum-resolved band machinery shared by the line and the infinite
//! binary tree.
//!
//! For each momentum `k` the position-independent part of the walk reduces
//! to an `(n+1) x (n+1)` coupling matrix whose `k`-dependent eigenvalues are
//! `scale * cos p` with `p` running over the roots of a secular equation in
//! `(0, pi)`. Eigenvectors come in closed form from the secular recurrence,
//! so no dense eigensolver sits in the hot path. Derivatives of a band are
//! obtained by implicit differentiation of the secular equation; central
//! finite differences of the next-lower analytic order serve as a
//! cross-check only.

use crate::error::{Error, Result};
use crate::grid::MomentumGrid;
use crate::linalg::CMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Below this value of `|sin k|` the line secular equation degenerates and
/// the analytic `k = 0 mod pi` spectrum is used instead.
pub const SIN_K_FLOOR: f64 = 1e-9;

/// Which host graph the band lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Host {
    Line,
    Tree,
}

/// All partial derivatives of the secular function needed for third-order
/// implicit differentiation.
#[derive(Clone, Copy, Debug)]
pub(crate) struct SecularPartials {
    pub gp: f64,
    pub gk: f64,
    pub gpp: f64,
    pub gkp: f64,
    pub gkk: f64,
    pub gppp: f64,
    pub gkpp: f64,
    pub gkkp: f64,
    pub gkkk: f64,
}

impl Host {
    /// Eigenvalues are `scale * cos p`.
    pub fn scale(self) -> f64 {
        match self {
            Host::Line => 4.0,
            Host::Tree => 6.0,
        }
    }

    /// The secular function whose roots in `(0, pi)` give the `k`-dependent
    /// eigenvalues. Line: `2(cos p - cos k) sin((n+1)p) - sin^2 k sin(np)`.
    /// Tree: `6(3 cos p - 2 sqrt2 cos k) sin((n+1)p) - (1 + 8 sin^2 k) sin(np)`.
    ///
    /// `cos p - cos k` is evaluated as a product of sines; the plain
    /// difference loses every significant digit when a root and `k` sit
    /// together near a multiple of pi.
    pub fn secular(self, n: usize, p: f64, k: f64) -> f64 {
        let a = (n + 1) as f64;
        let nn = n as f64;
        let sk = k.sin();
        let s1 = (a * p).sin();
        let sn = (nn * p).sin();
        match self {
            Host::Line => 2.0 * cos_diff(p, k) * s1 - sk * sk * sn,
            Host::Tree => {
                let ck = k.cos();
                6.0 * (3.0 * p.cos() - 2.0 * 2f64.sqrt() * ck) * s1 - (1.0 + 8.0 * sk * sk) * sn
            }
        }
    }

    pub(crate) fn secular_partials(self, n: usize, p: f64, k: f64) -> SecularPartials {
        let a = (n + 1) as f64;
        let nn = n as f64;
        let (sp, cp) = p.sin_cos();
        let (sk, ck) = k.sin_cos();
        let (s2k, c2k) = (2.0 * k).sin_cos();
        let s1 = (a * p).sin();
        let c1 = (a * p).cos();
        let sn = (nn * p).sin();
        let cn = (nn * p).cos();
        match self {
            Host::Line => {
                let sk2 = sk * sk;
                let dc = cos_diff(p, k);
                SecularPartials {
                    gp: -2.0 * sp * s1 + 2.0 * a * dc * c1 - nn * sk2 * cn,
                    gk: 2.0 * sk * s1 - s2k * sn,
                    gpp: -2.0 * cp * s1 - 4.0 * a * sp * c1 - 2.0 * a * a * dc * s1
                        + nn * nn * sk2 * sn,
                    gkp: 2.0 * a * sk * c1 - nn * s2k * cn,
                    gkk: 2.0 * ck * s1 - 2.0 * c2k * sn,
                    gppp: 2.0 * sp * s1 - 6.0 * a * cp * c1 + 6.0 * a * a * sp * s1
                        - 2.0 * a * a * a * dc * c1
                        + nn * nn * nn * sk2 * cn,
                    gkpp: -2.0 * a * a * sk * s1 + nn * nn * s2k * sn,
                    gkkp: 2.0 * a * ck * c1 - 2.0 * nn * c2k * cn,
                    gkkk: -2.0 * sk * s1 + 4.0 * s2k * sn,
                }
            }
            Host::Tree => {
                let r = 2f64.sqrt();
                let w = 1.0 + 8.0 * sk * sk;
                let q = 3.0 * cp - 2.0 * r * ck;
                SecularPartials {
                    gp: -18.0 * sp * s1 + 6.0 * a * q * c1 - nn * w * cn,
                    gk: 12.0 * r * sk * s1 - 8.0 * s2k * sn,
                    gpp: -18.0 * cp * s1 - 36.0 * a * sp * c1 - 6.0 * a * a * q * s1
                        + nn * nn * w * sn,
                    gkp: 12.0 * r * a * sk * c1 - 8.0 * nn * s2k * cn,
                    gkk: 12.0 * r * ck * s1 - 16.0 * c2k * sn,
                    gppp: 18.0 * sp * s1 - 54.0 * a * cp * c1 + 54.0 * a * a * sp * s1
                        - 6.0 * a * a * a * q * c1
                        + nn * nn * nn * w * cn,
                    gkpp: -12.0 * r * a * a * sk * s1 + 8.0 * nn * nn * s2k * sn,
                    gkkp: 12.0 * r * a * ck * c1 - 16.0 * nn * c2k * cn,
                    gkkk: -12.0 * r * sk * s1 + 32.0 * s2k * sn,
                }
            }
        }
    }

    /// Last eigenvector component `a_{n+1}` of the secular recurrence,
    /// relative to `a_y = sin(yp)` for `y <= n`.
    pub fn last_component(self, n: usize, p: f64, k: f64) -> Complex64 {
        let s1 = ((n + 1) as f64 * p).sin();
        match self {
            Host::Line => Complex64::new(s1 / k.sin(), 0.0),
            Host::Tree => {
                Complex64::new(3.0 * s1, 0.0) / Complex64::new(3.0 * k.sin(), k.cos())
            }
        }
    }

    /// The two-dimensional vectors from which the hat basis is built.
    pub fn basis_pairs(self, k: f64) -> BasisPairs {
        let e = Complex64::from_polar(1.0, k);
        let em = e.conj();
        match self {
            Host::Line => {
                let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                BasisPairs {
                    u0: [em * s, e * s],
                    u1: [em * s, -e * s],
                    v0: [s, s],
                    v1: [s, -s],
                }
            }
            Host::Tree => {
                let s = Complex64::new(1.0 / 3f64.sqrt(), 0.0);
                let r = 2f64.sqrt();
                BasisPairs {
                    u0: [em * s * r, e * s],
                    u1: [em * s, -e * s * r],
                    v0: [s, s * r],
                    v1: [s * r, -s],
                }
            }
        }
    }

    /// Real magnitude-and-sign factors of the hat-basis components once the
    /// running phase `e^{i k z}` is pulled out: entry `[b]` is the factor
    /// contributed by letter `b` of a `u0` / `u1` / `v0` tensor slot, with
    /// the per-slot `1/sqrt(dim)` normalization removed.
    pub fn synth_weights(self) -> SynthWeights {
        match self {
            Host::Line => SynthWeights { c0: [1.0, 1.0], c1: [1.0, -1.0], cv: [1.0, 1.0], dim: 2.0 },
            Host::Tree => {
                let r = 2f64.sqrt();
                SynthWeights { c0: [r, 1.0], c1: [1.0, -r], cv: [1.0, r], dim: 3.0 }
            }
        }
    }

    /// The limiting scaled band: `Lambda(k) = 4 arctan(2 cos k / sin^2 k)`
    /// on the line, `6 arctan(12 sqrt2 cos k / (1 + 8 sin^2 k))` on the tree,
    /// continued through multiples of pi.
    pub fn lambda_inf(self, k: f64) -> f64 {
        let (sk, ck) = k.sin_cos();
        match self {
            Host::Line => 4.0 * (2.0 * ck).atan2(sk * sk),
            Host::Tree => {
                6.0 * (12.0 * 2f64.sqrt() * ck / (1.0 + 8.0 * sk * sk)).atan()
            }
        }
    }

    pub fn lambda_inf_d1(self, k: f64) -> f64 {
        let (sk, ck) = k.sin_cos();
        match self {
            Host::Line => {
                let den = sk.powi(4) + 4.0 * ck * ck;
                -8.0 * sk * (1.0 + ck * ck) / den
            }
            Host::Tree => {
                let e = (9.0 - 8.0 * ck * ck).powi(2) + 288.0 * ck * ck;
                -72.0 * 2f64.sqrt() * sk * (9.0 + 8.0 * ck * ck) / e
            }
        }
    }

    pub fn lambda_inf_d2(self, k: f64) -> f64 {
        let (sk, ck) = k.sin_cos();
        match self {
            Host::Line => {
                let num = sk * (1.0 + ck * ck);
                let num_d = ck * (3.0 * ck * ck - 1.0);
                let den = sk.powi(4) + 4.0 * ck * ck;
                let den_d = 4.0 * sk * ck * (sk * sk - 2.0);
                -8.0 * (num_d * den - num * den_d) / (den * den)
            }
            Host::Tree => {
                let num = sk * (9.0 + 8.0 * ck * ck);
                let num_d = ck * (24.0 * ck * ck - 7.0);
                let e = (9.0 - 8.0 * ck * ck).powi(2) + 288.0 * ck * ck;
                let e_d = -32.0 * sk * ck * (9.0 + 8.0 * ck * ck);
                -72.0 * 2f64.sqrt() * (num_d * e - num * e_d) / (e * e)
            }
        }
    }
}

/// `cos p - cos k` without cancellation: `-2 sin((p+k)/2) sin((p-k)/2)`.
#[inline]
fn cos_diff(p: f64, k: f64) -> f64 {
    -2.0 * (0.5 * (p + k)).sin() * (0.5 * (p - k)).sin()
}

pub struct BasisPairs {
    pub u0: [Complex64; 2],
    pub u1: [Complex64; 2],
    pub v0: [Complex64; 2],
    pub v1: [Complex64; 2],
}

#[derive(Clone, Copy, Debug)]
pub struct SynthWeights {
    pub c0: [f64; 2],
    pub c1: [f64; 2],
    pub cv: [f64; 2],
    pub dim: f64,
}

/// The reduced `(n+1) x (n+1)` coupling matrix whose spectrum carries the
/// `k`-dependent eigenvalues: tridiagonal couplings of strength
/// `scale / 2`, an end coupling, and one diagonal entry.
pub fn phi_matrix(host: Host, n: usize, k: f64) -> CMatrix {
    let dim = n + 1;
    let mut m = CMatrix::zeros(dim, dim);
    let (sk, ck) = k.sin_cos();
    let hop = Complex64::new(host.scale() / 2.0, 0.0);
    for y in 0..n.saturating_sub(1) {
        m[(y, y + 1)] = hop;
        m[(y + 1, y)] = hop;
    }
    match host {
        Host::Line => {
            let c = Complex64::new(2.0 * sk, 0.0);
            m[(n - 1, n)] = c;
            m[(n, n - 1)] = c;
            m[(n, n)] = Complex64::new(4.0 * ck, 0.0);
        }
        Host::Tree => {
            let c = Complex64::new(3.0 * sk, ck);
            m[(n - 1, n)] = c;
            m[(n, n - 1)] = c.conj();
            m[(n, n)] = Complex64::new(4.0 * 2f64.sqrt() * ck, 0.0);
        }
    }
    m
}

/// Find the `n+1` roots of the secular equation in `(0, pi)`, ascending.
///
/// The function is scanned on `16(n+1)` uniform points for sign changes and
/// each bracket is bisected to width `1e-13`, then polished with two Newton
/// steps. If fewer than `n+1` brackets are found the scan density doubles,
/// up to three times.
pub fn secular_roots(host: Host, n: usize, k: f64) -> Result<Vec<f64>> {
    if host == Host::Line && k.sin().abs() <= SIN_K_FLOOR {
        return Err(Error::InvalidInput(format!(
            "line secular equation degenerates at k = {k} (sin k ~ 0); use the analytic branch"
        )));
    }
    let expected = n + 1;
    let mut scan = 16 * expected;
    for _ in 0..4 {
        let roots = scan_roots(host, n, k, scan);
        if roots.len() == expected {
            return Ok(roots);
        }
        if roots.len() > expected {
            return Err(Error::RootCount { expected, found: roots.len() });
        }
        scan *= 2;
    }
    let found = scan_roots(host, n, k, scan / 2).len();
    Err(Error::RootCount { expected, found })
}

fn scan_roots(host: Host, n: usize, k: f64, scan: usize) -> Vec<f64> {
    let g = |p: f64| host.secular(n, p, k);
    let step = PI / (scan + 1) as f64;
    // The interval ends are included at a hair above 0 and below pi: for k
    // close to a multiple of pi one root sits at p ~ k/sqrt(n+1), far below
    // the first uniform scan point.
    let eps = 1e-11;
    let mut roots = Vec::with_capacity(n + 1);
    let mut prev_p = eps;
    let mut prev_g = g(prev_p);
    if prev_g == 0.0 {
        roots.push(prev_p);
    }
    for i in 1..=scan + 1 {
        let p = if i == scan + 1 { PI - eps } else { i as f64 * step };
        let val = g(p);
        if val == 0.0 {
            roots.push(p);
        } else if prev_g != 0.0 && val.signum() != prev_g.signum() {
            roots.push(refine_root(host, n, k, prev_p, p));
        }
        prev_p = p;
        prev_g = val;
    }
    roots
}

fn refine_root(host: Host, n: usize, k: f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = |p: f64| host.secular(n, p, k);
    let mut glo = g(lo);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if gm == 0.0 {
            return mid;
        }
        if gm.signum() == glo.signum() {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    // Newton polish towards machine precision; stay inside the bracket.
    let mut p = 0.5 * (lo + hi);
    for _ in 0..2 {
        let gp = host.secular_partials(n, p, k).gp;
        if gp == 0.0 {
            break;
        }
        let next = p - g(p) / gp;
        if next > lo - 1e-12 && next < hi + 1e-12 {
            p = next;
        }
    }
    p
}

/// One eigenpair of the reduced coupling matrix.
#[derive(Clone, Debug)]
pub struct BandPoint {
    pub lambda: f64,
    /// Secular parameter with `lambda = scale * cos p`; `None` on the
    /// analytic `k = 0 mod pi` branch when the eigenvector is the bare end
    /// vector.
    pub p: Option<f64>,
    /// Unit eigenvector of the reduced matrix, first component real
    /// positive whenever it is nonzero.
    pub phi: Vec<Complex64>,
}

/// A `k`-dependent eigenvalue branch of the reduced matrix, selected by its
/// descending rank, together with its eigenvector field and derivatives.
#[derive(Clone, Debug)]
pub struct Band {
    host: Host,
    n: usize,
    /// 1-based rank: `index = 1` is the largest eigenvalue at each `k`.
    index: usize,
}

impl Band {
    /// The median band: the `(n+2)/2`-th largest eigenvalue. Requires even `n`.
    pub fn median(host: Host, n: usize) -> Result<Self> {
        if n == 0 || !n.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!(
                "median band needs even n >= 2, got {n}"
            )));
        }
        Ok(Band { host, n, index: (n + 2) / 2 })
    }

    /// The central band for any `n`: coincides with the median for even `n`.
    pub fn central(host: Host, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("band needs n >= 1".into()));
        }
        Ok(Band { host, n, index: n / 2 + 1 })
    }

    /// Band of a given descending rank in `1..=n+1`.
    pub fn with_index(host: Host, n: usize, index: usize) -> Result<Self> {
        if index == 0 || index > n + 1 {
            return Err(Error::InvalidInput(format!(
                "band index {index} out of range 1..={}",
                n + 1
            )));
        }
        Ok(Band { host, n, index })
    }

    pub fn host(&self) -> Host {
        self.host
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn index(&self) -> usize {
        self.index
    }

    fn root_for_index(&self, roots: &[f64]) -> f64 {
        // Roots ascend in p, so eigenvalues scale*cos(p) descend: the l-th
        // largest eigenvalue is root l-1.
        roots[self.index - 1]
    }

    pub fn eval(&self, k: f64) -> Result<BandPoint> {
        if self.host == Host::Line && k.sin().abs() <= SIN_K_FLOOR {
            return self.eval_line_analytic(k);
        }
        let roots = secular_roots(self.host, self.n, k)?;
        let p = self.root_for_index(&roots);
        Ok(self.point_from_root(p, k))
    }

    fn point_from_root(&self, p: f64, k: f64) -> BandPoint {
        let n = self.n;
        let mut phi: Vec<Complex64> = (1..=n)
            .map(|y| Complex64::new((y as f64 * p).sin(), 0.0))
            .collect();
        phi.push(self.host.last_component(n, p, k));
        let norm = phi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        for c in &mut phi {
            *c /= norm;
        }
        debug_assert!(phi[0].re > 0.0);
        BandPoint { lambda: self.host.scale() * p.cos(), p: Some(p), phi }
    }

    /// Analytic spectrum at `k = 0 mod pi` on the line: the decoupled sine
    /// modes `4 cos(y pi / (n+1))` plus the bare end eigenvalue `4 cos k`.
    fn eval_line_analytic(&self, k: f64) -> Result<BandPoint> {
        let n = self.n;
        let a = (n + 1) as f64;
        let ck = if k.cos() > 0.0 { 1.0 } else { -1.0 };
        let mut values: Vec<(f64, Option<usize>)> = (1..=n)
            .map(|y| (4.0 * (y as f64 * PI / a).cos(), Some(y)))
            .collect();
        values.push((4.0 * ck, None));
        values.sort_by(|l, r| r.0.partial_cmp(&l.0).unwrap());
        let (lambda, source) = values[self.index - 1];
        match source {
            Some(y) => {
                let p = y as f64 * PI / a;
                let mut phi: Vec<Complex64> = (1..=n)
                    .map(|yy| Complex64::new((yy as f64 * p).sin(), 0.0))
                    .collect();
                phi.push(Complex64::default());
                let norm = phi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                for c in &mut phi {
                    *c /= norm;
                }
                Ok(BandPoint { lambda, p: Some(p), phi })
            }
            None => {
                // The end vector has no overlap with the first site, so the
                // sign convention cannot fix it; callers on the offset grid
                // never reach this point.
                let mut phi = vec![Complex64::default(); n + 1];
                phi[n] = Complex64::new(1.0, 0.0);
                Ok(BandPoint { lambda, p: None, phi })
            }
        }
    }

    pub fn lambda(&self, k: f64) -> Result<f64> {
        Ok(self.eval(k)?.lambda)
    }

    /// Implicit derivative of the band at `k`, order 1 to 3.
    pub fn derivative(&self, k: f64, order: usize) -> Result<f64> {
        let point = self.eval(k)?;
        let p = point.p.ok_or_else(|| {
            Error::InvalidInput("band derivative undefined for the bare end eigenvector".into())
        })?;
        let d = self.derivatives_at_root(p, k);
        match order {
            1 => Ok(d.0),
            2 => Ok(d.1),
            3 => Ok(d.2),
            _ => Err(Error::InvalidInput(format!("derivative order {order} not in 1..=3"))),
        }
    }

    fn derivatives_at_root(&self, p: f64, k: f64) -> (f64, f64, f64) {
        let g = self.host.secular_partials(self.n, p, k);
        let p1 = -g.gk / g.gp;
        let p2 = -(g.gkk + 2.0 * g.gkp * p1 + g.gpp * p1 * p1) / g.gp;
        let p3 = -(g.gkkk
            + 3.0 * g.gkkp * p1
            + 3.0 * g.gkpp * p1 * p1
            + g.gppp * p1 * p1 * p1
            + 3.0 * p2 * (g.gkp + g.gpp * p1))
            / g.gp;
        let s = self.host.scale();
        let (sp, cp) = p.sin_cos();
        let l1 = -s * sp * p1;
        let l2 = -s * (cp * p1 * p1 + sp * p2);
        let l3 = s * sp * p1 * p1 * p1 - 3.0 * s * cp * p1 * p2 - s * sp * p3;
        (l1, l2, l3)
    }

    /// Derivative with the finite-difference cross-check (central, step
    /// `1e-5`, applied to the analytic next-lower order). Disagreement
    /// beyond `1e-5` raises [`Error::DerivativeInstability`].
    pub fn derivative_checked(&self, k: f64, order: usize) -> Result<f64> {
        let value = self.derivative(k, order)?;
        let h = 1e-5;
        let fd = match order {
            1 => (self.lambda(k + h)? - self.lambda(k - h)?) / (2.0 * h),
            2 | 3 => {
                (self.derivative(k + h, order - 1)? - self.derivative(k - h, order - 1)?)
                    / (2.0 * h)
            }
            _ => return Err(Error::InvalidInput(format!("derivative order {order}"))),
        };
        let diff = (value - fd).abs();
        if diff > 1e-5 {
            return Err(Error::DerivativeInstability { order, diff });
        }
        Ok(value)
    }

    /// Evaluate the band on every grid node.
    pub fn sample(&self, grid: &MomentumGrid) -> Result<BandTable> {
        let points: Vec<(BandPoint, f64)> = grid
            .nodes()
            .par_iter()
            .map(|&k| {
                let point = self.eval(k)?;
                let d1 = match point.p {
                    Some(p) => self.derivatives_at_root(p, k).0,
                    None => 0.0,
                };
                Ok((point, d1))
            })
            .collect::<Result<_>>()?;
        let mut lambda = Vec::with_capacity(points.len());
        let mut d1 = Vec::with_capacity(points.len());
        let mut phi = Vec::with_capacity(points.len());
        for (pt, d) in points {
            lambda.push(pt.lambda);
            d1.push(d);
            phi.push(pt.phi);
        }
        Ok(BandTable {
            host: self.host,
            n: self.n,
            band_index: self.index,
            grid: grid.clone(),
            lambda,
            d1,
            phi,
        })
    }
}

/// A band evaluated on a momentum grid; the cache consumed by every
/// quadrature-based construction.
#[derive(Clone, Debug)]
pub struct BandTable {
    pub host: Host,
    pub n: usize,
    pub band_index: usize,
    pub grid: MomentumGrid,
    pub lambda: Vec<f64>,
    pub d1: Vec<f64>,
    pub phi: Vec<Vec<Complex64>>,
}

impl BandTable {
    pub fn max_group_velocity(&self) -> f64 {
        self.d1.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }
}

/// Full reduced eigensystem at one `k`: `n+1` pairs, eigenvalues descending.
pub fn reduced_eigensystem(host: Host, n: usize, k: f64) -> Result<Vec<(f64, Vec<Complex64>)>> {
    if host == Host::Line && k.sin().abs() <= SIN_K_FLOOR {
        return (1..=n + 1)
            .map(|index| {
                let pt = Band::with_index(host, n, index)?.eval(k)?;
                Ok((pt.lambda, pt.phi))
            })
            .collect();
    }
    let roots = secular_roots(host, n, k)?;
    let band = Band::with_index(host, n, 1)?;
    let mut out = Vec::with_capacity(n + 1);
    for l in 1..=n + 1 {
        let pt = band.point_from_root(roots[l - 1], k);
        out.push((pt.lambda, pt.phi));
    }
    Ok(out)
}
