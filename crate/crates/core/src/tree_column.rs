//! The snake walk deep inside the infinite binary tree and the column
//! subspace of the expanded glued trees graph: the tree band, the windowed
//! column Hamiltonian with its three coupling regimes, directed wave
//! packets, and the span observable.

use crate::band::{self, Band, BandTable, Host};
use crate::error::{Error, Result};
use crate::grid::{wrap_to_pi, MomentumGrid};
use crate::hat::{self, HatBasis};
use crate::linalg::{CMatrix, SparseSym};
use crate::state::{self, ColumnState};
use crate::word::{span_of_word, Span, Word};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const SQRT2: f64 = std::f64::consts::SQRT_2;

/// The momentum block of the walk deep inside the binary tree, with the
/// branching-weighted couplings.
pub fn build_tree_hnk(n: usize, k: f64) -> Result<CMatrix> {
    hat::hnk_matrix(Host::Tree, n, k)
}

/// The redefined (sqrt2-weighted) hat basis.
pub fn tree_hat_basis(n: usize, k: f64) -> Result<HatBasis> {
    hat::hat_basis(Host::Tree, n, k)
}

/// Roots of `6(3 cos p - 2 sqrt2 cos k) sin((n+1)p) = (1 + 8 sin^2 k) sin(np)`
/// in `(0, pi)`, ascending; eigenvalues are `6 cos p`.
pub fn solve_tree_p_equation(n: usize, k: f64) -> Result<Vec<f64>> {
    band::secular_roots(Host::Tree, n, k)
}

/// The reduced coupling matrix for the tree.
pub fn tree_phi_matrix(n: usize, k: f64) -> CMatrix {
    band::phi_matrix(Host::Tree, n, k)
}

/// The median tree band `lambda~(k)`.
pub fn tree_band(n: usize) -> Result<Band> {
    Band::median(Host::Tree, n)
}

/// `Lambda~(k) = 6 arctan(12 sqrt2 cos k / (1 + 8 sin^2 k))` and derivatives.
pub fn tree_lambda_inf(k: f64) -> f64 {
    Host::Tree.lambda_inf(k)
}

pub fn tree_lambda_inf_d1(k: f64) -> f64 {
    Host::Tree.lambda_inf_d1(k)
}

pub fn tree_lambda_inf_d2(k: f64) -> f64 {
    Host::Tree.lambda_inf_d2(k)
}

/// The column-subspace Hamiltonian on a finite start-column window: every
/// coupling connects `(x, jb)` to `(x+1, 0j)` or `(x-1, 1j)` with a weight
/// in `{1, sqrt2, 2}` selected by the word balance and the three
/// `x`-regimes. Rows at the window edges simply lack outward couplings.
pub struct ColumnHamiltonian {
    n: usize,
    x_min: i64,
    width: usize,
    matrix: SparseSym,
}

impl ColumnHamiltonian {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x_min(&self) -> i64 {
        self.x_min
    }

    pub fn x_max(&self) -> i64 {
        self.x_min + self.width as i64 - 1
    }

    pub fn dim(&self) -> usize {
        self.width << self.n
    }

    pub fn words(&self) -> usize {
        1 << self.n
    }

    pub fn index(&self, x: i64, w: usize) -> Option<usize> {
        if x < self.x_min || x > self.x_max() {
            return None;
        }
        Some(((x - self.x_min) as usize) << self.n | w)
    }

    pub fn site(&self, index: usize) -> (i64, usize) {
        (self.x_min + (index >> self.n) as i64, index & ((1 << self.n) - 1))
    }

    pub fn matrix(&self) -> &SparseSym {
        &self.matrix
    }

    pub fn entry(&self, from: (i64, usize), to: (i64, usize)) -> f64 {
        match (self.index(from.0, from.1), self.index(to.0, to.1)) {
            (Some(r), Some(c)) => self.matrix.get(r, c),
            _ => 0.0,
        }
    }
}

/// Regime weights for one coupling family at source column `x` and prefix
/// word balance `bal`: `(up0, up1, down0, down1)` are the weights of
/// `(x,j0)->(x+1,0j)`, `(x,j1)->(x+1,0j)`, `(x,j0)->(x-1,1j)` and
/// `(x,j1)->(x-1,1j)`.
fn regime_weights(x: i64, bal: i64) -> (f64, f64, f64, f64) {
    let hi = bal.max(0);
    let lo = bal.min(0);
    if x <= -hi {
        // deep in the first tree
        (SQRT2, 2.0, 1.0, SQRT2)
    } else if x <= -lo {
        // straddling the glued part
        let up0 = if bal > 0 { 2.0 } else { 1.0 };
        let down1 = if bal > 0 { 1.0 } else { 2.0 };
        (up0, SQRT2, SQRT2, down1)
    } else {
        // deep in the second tree
        (SQRT2, 1.0, 2.0, SQRT2)
    }
}

/// Build the column Hamiltonian on start columns `[x_lo, x_hi]`.
pub fn column_hamiltonian(n: usize, x_lo: i64, x_hi: i64) -> Result<ColumnHamiltonian> {
    hat::check_dense_n(n)?;
    if x_hi - x_lo + 1 < 4 * n as i64 {
        return Err(Error::InvalidInput(format!(
            "window [{x_lo}, {x_hi}] shorter than 4n = {}",
            4 * n
        )));
    }
    let width = (x_hi - x_lo + 1) as usize;
    let dim = width << n;
    let top = n - 1;
    let mut triplets: Vec<(u32, u32, f64)> = Vec::with_capacity(dim * 4);
    let index = |x: i64, w: usize| -> Option<u32> {
        (x >= x_lo && x <= x_hi).then(|| (((x - x_lo) as usize) << n | w) as u32)
    };
    for jbits in 0..(1usize << top) {
        let j = Word::new(jbits as u32, top);
        let bal = j.balance() as i64;
        let j0 = jbits;
        let j1 = jbits | (1 << top);
        let zj = jbits << 1;
        let oj = (jbits << 1) | 1;
        for x in x_lo..=x_hi {
            let (up0, up1, down0, down1) = regime_weights(x, bal);
            let src0 = index(x, j0).unwrap();
            let src1 = index(x, j1).unwrap();
            if let Some(up) = index(x + 1, zj) {
                triplets.push((up, src0, up0));
                triplets.push((src0, up, up0));
                triplets.push((up, src1, up1));
                triplets.push((src1, up, up1));
            }
            if let Some(down) = index(x - 1, oj) {
                triplets.push((down, src0, down0));
                triplets.push((src0, down, down0));
                triplets.push((down, src1, down1));
                triplets.push((src1, down, down1));
            }
        }
    }
    let matrix = SparseSym::from_triplets(dim, &triplets);
    Ok(ColumnHamiltonian { n, x_min: x_lo, width, matrix })
}

/// A directed Gaussian wave packet in momentum space.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct WavePacketSpec {
    /// Center start column.
    pub x0: i64,
    /// Carrier momentum in `(pi, 2pi)`.
    pub k0: f64,
    /// Momentum-space width.
    pub sigma: f64,
}

impl WavePacketSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.k0 > PI && self.k0 < 2.0 * PI) {
            return Err(Error::InvalidInput(format!(
                "carrier momentum {} outside (pi, 2pi)",
                self.k0
            )));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::InvalidInput(format!("sigma {} must be positive", self.sigma)));
        }
        Ok(())
    }

    /// Half-width of the window the packet construction must cover.
    pub fn coverage(&self, n: usize) -> i64 {
        (1.0 / (self.sigma * self.sigma)).ceil() as i64 + 3 * n as i64
    }

    /// Momentum profile: `sqrt(2pi g(k)) e^{-i k x0} / sqrt(erf(pi/(sqrt2 sigma)))`
    /// with the Gaussian `g` evaluated at the wrapped distance from `k0`.
    pub fn momentum_profile(&self) -> impl Fn(f64) -> Complex64 + Sync + '_ {
        let norm = statrs::function::erf::erf(PI / (SQRT2 * self.sigma)).sqrt();
        let sigma = self.sigma;
        let x0 = self.x0 as f64;
        let k0 = self.k0;
        move |k: f64| {
            let d = wrap_to_pi(k - k0);
            let gauss = (-d * d / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * PI).sqrt());
            Complex64::from_polar((2.0 * PI * gauss).sqrt() / norm, -k * x0)
        }
    }
}

/// `eta^_x`: the localized tree-band state centered at column `x`.
pub fn build_eta_hat(n: usize, x: i64, grid: &MomentumGrid) -> Result<ColumnState> {
    let pad = 3 * n as i64 + 2;
    let table = tree_band(n)?.sample(grid)?;
    eta_hat_from_table(&table, x, (x - pad, x + pad))
}

pub fn eta_hat_from_table(
    table: &BandTable,
    x: i64,
    window: (i64, i64),
) -> Result<ColumnState> {
    let coeffs = move |k: f64| Complex64::from_polar(1.0, -k * x as f64);
    state::synthesize(table, 0.0, &coeffs, window, Some(1e-6))
}

/// The Gaussian momentum-filtered packet, built by direct quadrature of its
/// k-space definition.
pub fn build_xi(spec: &WavePacketSpec, n: usize, grid: &MomentumGrid) -> Result<ColumnState> {
    spec.validate()?;
    let cover = spec.coverage(n);
    build_xi_windowed(spec, n, grid, (spec.x0 - cover, spec.x0 + cover))
}

pub fn build_xi_windowed(
    spec: &WavePacketSpec,
    n: usize,
    grid: &MomentumGrid,
    window: (i64, i64),
) -> Result<ColumnState> {
    spec.validate()?;
    let cover = spec.coverage(n);
    if window.0 > spec.x0 - cover || window.1 < spec.x0 + cover {
        return Err(Error::InvalidInput(format!(
            "window {window:?} must cover x0 +- {cover}"
        )));
    }
    let table = tree_band(n)?.sample(grid)?;
    let coeffs = spec.momentum_profile();
    state::synthesize(&table, 0.0, &coeffs, window, Some(1e-6))
}

/// Expansion coefficients `<eta^_{x0+z} | xi>` over the offset `z`.
pub fn xi_eta_coefficients(
    spec: &WavePacketSpec,
    grid: &MomentumGrid,
    z_max: i64,
) -> Vec<(i64, Complex64)> {
    let coeffs = spec.momentum_profile();
    (-z_max..=z_max)
        .map(|z| {
            let mut acc = Complex64::default();
            for &k in grid.nodes() {
                acc += coeffs(k) * Complex64::from_polar(1.0, k * z as f64);
            }
            (z, acc / grid.len() as f64)
        })
        .collect()
}

/// Span interval of a word's layer walk (including the start layer).
pub fn span_of(word: &Word) -> Span {
    span_of_word(word)
}

/// The diagonal observable returning the span length of the measured word.
pub fn span_observable(n: usize) -> Vec<f64> {
    state::word_diagonal(n, |w| span_of_word(w).length() as f64)
}

/// Expected span length of a normalized column state.
pub fn expected_span(state: &ColumnState) -> f64 {
    state.word_diag_expectation(&span_observable(state.n()))
}

/// `<psi^(k)| Q_n |psi^(k)>` per grid node.
pub fn band_span_profile(n: usize, grid: &MomentumGrid) -> Result<Vec<(f64, f64)>> {
    let table = tree_band(n)?.sample(grid)?;
    let factors = hat::word_factors(Host::Tree, n)?;
    let diag = span_observable(n);
    let profile: Vec<(f64, f64)> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let k = grid.node(i);
            let psi = hat::psi_vector(&factors, &table.phi[i], k);
            let value: f64 =
                psi.iter().zip(&diag).map(|(a, q)| a.norm_sqr() * q).sum();
            (k, value)
        })
        .collect();
    Ok(profile)
}

/// Position distribution of the packet evolved for time `t` under the
/// deep-tree band.
pub fn packet_propagation_profile(
    spec: &WavePacketSpec,
    n: usize,
    t: f64,
    grid: &MomentumGrid,
    window: (i64, i64),
) -> Result<Vec<(i64, f64)>> {
    spec.validate()?;
    let band = tree_band(n)?;
    let velocity = band.derivative(spec.k0, 1)?;
    let target = spec.x0 + (velocity * t).round() as i64;
    let margin = 2 * n as i64;
    for anchor in [spec.x0, target] {
        if window.0 > anchor - margin || window.1 < anchor + margin {
            return Err(Error::InvalidInput(format!(
                "window {window:?} leaves the packet within 2n of an edge (anchor {anchor})"
            )));
        }
    }
    let table = band.sample(grid)?;
    let coeffs = spec.momentum_profile();
    let state = state::synthesize(&table, t, &coeffs, window, Some(1e-6))?;
    Ok(state.probability_profile())
}

/// The closed-form median band vector at `k = pi/2`:
/// `-i sqrt(2/(n+2)) sum_l (v1 v1)^l (v0 v0)^{n/2-l}`.
pub fn psi_hat_half_pi_closed_form(n: usize) -> Result<Vec<Complex64>> {
    if !n.is_multiple_of(2) {
        return Err(Error::InvalidInput("closed form needs even n".into()));
    }
    let pairs = Host::Tree.basis_pairs(0.0);
    let dim = 1usize << n;
    let mut out = vec![Complex64::default(); dim];
    let amp = (2.0 / (n as f64 + 2.0)).sqrt();
    for l in 0..=n / 2 {
        for w in 0..dim {
            let mut term = Complex64::new(1.0, 0.0);
            for pos in 0..n {
                let bit = (w >> pos) & 1;
                let pair = if pos < 2 * l { &pairs.v1 } else { &pairs.v0 };
                term *= pair[bit];
            }
            out[w] += term * Complex64::new(0.0, -amp);
        }
    }
    Ok(out)
}
