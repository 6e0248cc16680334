//! Spectral machinery of the snake walk on the line: the momentum blocks
//! `H_{n,k}`, their hat-basis form, block projectors, the reduced coupling
//! matrix and its secular equation, and the median eigenvalue band.

use crate::band::{self, Band, Host};
use crate::error::{Error, Result};
use crate::graph::{self, Graph, Snake};
use crate::grid::MomentumGrid;
use crate::hat::{self, HatBasis};
use crate::linalg::{evolve_dense, CMatrix};
use crate::word::Word;
use num_complex::Complex64;

/// `H_{n,k}` in the word basis, realizing the four coupling families with
/// forward phases `e^{ik}` and backward phases `e^{-ik}`.
pub fn build_hnk(n: usize, k: f64) -> Result<CMatrix> {
    hat::hnk_matrix(Host::Line, n, k)
}

/// The orthonormal hat basis `B_{n,k}`.
pub fn hat_basis(n: usize, k: f64) -> Result<HatBasis> {
    hat::hat_basis(Host::Line, n, k)
}

/// `H_{n,k}` expressed over the hat basis.
pub fn hnk_hat_form(n: usize, k: f64) -> Result<CMatrix> {
    hat::hnk_hat_form(Host::Line, n, k)
}

/// The `2^{n-1}` orthogonal projectors that block diagonalize `H_{n,k}`,
/// one per greatest-odd-divisor class of hat indices.
pub fn block_projectors(n: usize, k: f64) -> Result<Vec<CMatrix>> {
    let basis = hat_basis(n, k)?;
    Ok(hat::block_classes(n).iter().map(|c| hat::block_projector(&basis, c)).collect())
}

/// The reduced `(n+1) x (n+1)` coupling matrix `Phi_{n,k}`: a chain with
/// hopping 2, end coupling `2 sin k`, and corner energy `4 cos k`.
pub fn phi_matrix(n: usize, k: f64) -> CMatrix {
    band::phi_matrix(Host::Line, n, k)
}

/// Roots of `2(cos p - cos k) sin((n+1)p) = sin^2 k sin(np)` in `(0, pi)`,
/// ascending. Eigenvalues of `Phi_{n,k}` are `4 cos p`.
pub fn solve_p_equation(n: usize, k: f64) -> Result<Vec<f64>> {
    band::secular_roots(Host::Line, n, k)
}

/// The median band `lambda(k)`: the `(n+2)/2`-th largest eigenvalue of
/// `Phi_{n,k}`, with the eigenvector sign fixed by a positive first
/// component.
pub fn median_band(n: usize) -> Result<Band> {
    Band::median(Host::Line, n)
}

/// All `n+1` eigenpairs of `Phi_{n,k}`, eigenvalues descending.
pub fn phi_eigensystem(n: usize, k: f64) -> Result<Vec<(f64, Vec<Complex64>)>> {
    band::reduced_eigensystem(Host::Line, n, k)
}

/// `Lambda(k) = 4 arctan(2 cos k / sin^2 k)`, continued through multiples
/// of pi, and its first two derivatives.
pub fn lambda_inf(k: f64) -> f64 {
    Host::Line.lambda_inf(k)
}

pub fn lambda_inf_d1(k: f64) -> f64 {
    Host::Line.lambda_inf_d1(k)
}

pub fn lambda_inf_d2(k: f64) -> f64 {
    Host::Line.lambda_inf_d2(k)
}

/// Result of comparing the full walk propagator against its restriction to
/// the first block (the `K_n` quadrature).
#[derive(Clone, Copy, Debug)]
pub struct EquivalenceReport {
    pub full: Complex64,
    pub restricted: Complex64,
    pub difference: f64,
}

/// Compare `<x2,j2| e^{-i H_n t} |x1,j1>` computed by dense windowed
/// simulation against the block-1 restricted quadrature. The two agree
/// whenever `|x1 - x2| > 2n`.
pub fn restricted_equivalence_check(
    n: usize,
    x1: i64,
    x2: i64,
    j1: Word,
    j2: Word,
    t: f64,
    grid: &MomentumGrid,
) -> Result<EquivalenceReport> {
    if j1.len() != n || j2.len() != n {
        return Err(Error::LengthMismatch { left: j1.len(), right: j2.len() });
    }
    if (x1 - x2).abs() <= 2 * n as i64 {
        return Err(Error::InvalidInput(format!(
            "|x1 - x2| = {} must exceed 2n = {}",
            (x1 - x2).abs(),
            2 * n
        )));
    }

    let full = windowed_amplitude(n, x1, x2, j1, j2, t)?;

    // Block-1 restriction: for x1 != x2 the identity part drops out and
    // <x2,j2| e^{-iK_n t} |x1,j1> =
    //   (1/K) sum_i e^{i k (x2-x1)} <j2| U (e^{-i Phi t} - 1) U* |j1>.
    let factors = hat::word_factors(Host::Line, n)?;
    let dx = (x2 - x1) as f64;
    let mut restricted = Complex64::default();
    for &k in grid.nodes() {
        let pairs = phi_eigensystem(n, k)?;
        let mut kernel = Complex64::default();
        for (lambda, phi) in &pairs {
            let psi1 = hat::psi_component(&factors, phi, k, j1.bits() as usize);
            let psi2 = hat::psi_component(&factors, phi, k, j2.bits() as usize);
            let weight = Complex64::from_polar(1.0, -lambda * t) - 1.0;
            kernel += psi2 * weight * psi1.conj();
        }
        restricted += Complex64::from_polar(1.0, k * dx) * kernel;
    }
    restricted /= grid.len() as f64;

    Ok(EquivalenceReport { full, restricted, difference: (full - restricted).norm() })
}

/// Dense oracle: evolve the basis snake `(x1, j1)` under `A_n` of a line
/// window wide enough that boundary truncation is negligible.
fn windowed_amplitude(
    n: usize,
    x1: i64,
    x2: i64,
    j1: Word,
    j2: Word,
    t: f64,
) -> Result<Complex64> {
    let reach = (4.0 * t.abs()).ceil() as i64 + 2 * n as i64 + 8;
    let lo = x1.min(x2) - reach;
    let hi = x1.max(x2) + reach;
    let g = Graph::line_window(lo, hi + n as i64);
    let space = graph::enumerate_snakes(&g, n, graph::DEFAULT_CAPACITY)?;
    let snake_of = |x: i64, j: Word| -> Result<usize> {
        let positions = graph::line_decode(x, j);
        let vertices = positions
            .iter()
            .map(|p| {
                g.vertex(&p.to_string())
                    .ok_or_else(|| Error::InvalidInput(format!("position {p} outside window")))
            })
            .collect::<Result<Vec<_>>>()?;
        space
            .index_of(&Snake(vertices))
            .ok_or_else(|| Error::InvalidInput("snake not enumerated".into()))
    };
    let from = snake_of(x1, j1)?;
    let to = snake_of(x2, j2)?;
    let h = space.adjacency().to_dense();
    let mut v = vec![Complex64::default(); space.len()];
    v[from] = Complex64::new(1.0, 0.0);
    let evolved = evolve_dense(&h, t, &v);
    Ok(evolved[to])
}
