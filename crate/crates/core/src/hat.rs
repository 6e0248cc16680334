//! The `k`-dependent hat basis of the move-word space and the Hamiltonians
//! `H_{n,k}` expressed in the word basis.
//!
//! Word indices are little-endian: letter `j_1` of `j_1 ... j_n` is the
//! least significant bit, and tensor factor `l` of a product vector acts on
//! letter `j_l`.

use crate::band::Host;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::word::Word;
use num_complex::Complex64;

/// Hard cap on the word length for dense `2^n` objects.
pub const MAX_DENSE_N: usize = 20;

pub(crate) fn check_dense_n(n: usize) -> Result<()> {
    if n == 0 || n > MAX_DENSE_N {
        return Err(Error::Capacity { required: n, limit: MAX_DENSE_N });
    }
    Ok(())
}

/// The momentum-resolved walk Hamiltonian on the move-word space: four
/// coupling families between words `bj` and `jb'`, the `x`-shift carried by
/// phases `e^{+-ik}`.
pub fn hnk_matrix(host: Host, n: usize, k: f64) -> Result<CMatrix> {
    check_dense_n(n)?;
    let dim = 1usize << n;
    let e = Complex64::from_polar(1.0, k);
    let em = e.conj();
    // Family weights (head-append-0, head-append-1, tail-prepend-1 after
    // dropping last 0, tail-prepend-1 after dropping last 1).
    let (wa, wb, wc, wd) = match host {
        Host::Line => (1.0, 1.0, 1.0, 1.0),
        Host::Tree => (2f64.sqrt(), 2.0, 1.0, 2f64.sqrt()),
    };
    let mut h = CMatrix::zeros(dim, dim);
    let top = n - 1;
    for j in 0..(1usize << top) {
        let j0 = j; // word j . 0
        let j1 = j | (1 << top); // word j . 1
        let zj = j << 1; // word 0 . j
        let oj = (j << 1) | 1; // word 1 . j
        h[(j0, zj)] += e * wa;
        h[(j1, zj)] += e * wb;
        h[(oj, j0)] += e * wc;
        h[(oj, j1)] += e * wd;
        h[(zj, j0)] += em * wa;
        h[(zj, j1)] += em * wb;
        h[(j0, oj)] += em * wc;
        h[(j1, oj)] += em * wd;
    }
    Ok(h)
}

/// The orthonormal hat basis `{ |0_k>, ..., |2^n-1_k> }` as matrix columns.
///
/// `|0_k> = -i u_0^(x)n`; for `m >= 1` written in binary as
/// `1 m_{L-1} ... m_1`, the column is
/// `u_0^(x)(n-L) (x) u_1 (x) v_{m_{L-1}} (x) ... (x) v_{m_1}`.
pub struct HatBasis {
    pub host: Host,
    pub n: usize,
    pub k: f64,
    pub columns: CMatrix,
}

pub fn hat_basis(host: Host, n: usize, k: f64) -> Result<HatBasis> {
    check_dense_n(n)?;
    let dim = 1usize << n;
    let pairs = host.basis_pairs(k);
    let mut columns = CMatrix::zeros(dim, dim);
    for m in 0..dim {
        let factors = hat_factors(n, m);
        for w in 0..dim {
            let mut amp = Complex64::new(1.0, 0.0);
            for (l, f) in factors.iter().enumerate() {
                let bit = (w >> l) & 1;
                let pair = match f {
                    HatFactor::U0 => &pairs.u0,
                    HatFactor::U1 => &pairs.u1,
                    HatFactor::V0 => &pairs.v0,
                    HatFactor::V1 => &pairs.v1,
                };
                amp *= pair[bit];
            }
            if m == 0 {
                amp *= Complex64::new(0.0, -1.0);
            }
            columns[(w, m)] = amp;
        }
    }
    Ok(HatBasis { host, n, k, columns })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum HatFactor {
    U0,
    U1,
    V0,
    V1,
}

/// Tensor factors of `|m_k>`, position `l = 1..=n` (0-indexed slice).
fn hat_factors(n: usize, m: usize) -> Vec<HatFactor> {
    if m == 0 {
        return vec![HatFactor::U0; n];
    }
    let len = usize::BITS as usize - m.leading_zeros() as usize; // floor(log2 m) + 1
    let mut factors = vec![HatFactor::U0; n - len];
    factors.push(HatFactor::U1);
    // Bits m_{L-1} ... m_1 follow the leading 1, highest first.
    for i in (0..len - 1).rev() {
        factors.push(if (m >> i) & 1 == 1 { HatFactor::V1 } else { HatFactor::V0 });
    }
    factors
}

/// `H_{n,k}` rewritten over the hat basis: a rooted coupling chain with the
/// only `k`-dependence on the `0`-`1` corner.
pub fn hnk_hat_form(host: Host, n: usize, k: f64) -> Result<CMatrix> {
    check_dense_n(n)?;
    let dim = 1usize << n;
    let (sk, ck) = k.sin_cos();
    let mut h = CMatrix::zeros(dim, dim);
    match host {
        Host::Line => {
            h[(0, 0)] = Complex64::new(4.0 * ck, 0.0);
            h[(1, 0)] = Complex64::new(2.0 * sk, 0.0);
            h[(0, 1)] = Complex64::new(2.0 * sk, 0.0);
        }
        Host::Tree => {
            h[(0, 0)] = Complex64::new(4.0 * 2f64.sqrt() * ck, 0.0);
            h[(1, 0)] = Complex64::new(3.0 * sk, ck);
            h[(0, 1)] = Complex64::new(3.0 * sk, -ck);
        }
    }
    let hop = Complex64::new(host.scale() / 2.0, 0.0);
    for m in 1..dim / 2 {
        h[(2 * m, m)] += hop;
        h[(m, 2 * m)] += hop;
    }
    Ok(h)
}

/// Hat-basis indices grouped by greatest odd divisor; the groups block
/// diagonalize `H_{n,k}`. The class of `0` is `1`.
#[derive(Clone, Debug)]
pub struct BlockClass {
    /// The greatest odd divisor labeling the block.
    pub l: usize,
    /// Hat indices `l * 2^j` belonging to the block (plus `0` for `l = 1`).
    pub members: Vec<usize>,
}

pub fn block_classes(n: usize) -> Vec<BlockClass> {
    let dim = 1usize << n;
    let mut classes = Vec::new();
    let mut first = BlockClass { l: 1, members: vec![0] };
    let mut m = 1;
    while m < dim {
        first.members.push(m);
        m *= 2;
    }
    classes.push(first);
    for l in (3..dim).step_by(2) {
        let mut members = Vec::new();
        let mut m = l;
        while m < dim {
            members.push(m);
            m *= 2;
        }
        classes.push(BlockClass { l, members });
    }
    classes
}

/// Orthogonal projector onto one block, in the word basis.
pub fn block_projector(basis: &HatBasis, class: &BlockClass) -> CMatrix {
    let dim = basis.columns.nrows();
    let mut p = CMatrix::zeros(dim, dim);
    for &m in &class.members {
        let col = basis.columns.column(m);
        p += col * col.adjoint();
    }
    p
}

/// The isometry from the reduced space onto block 1: reduced coordinate
/// `y` maps to hat vector `2^{n-y}` for `y = 1..=n` and `n+1` maps to hat
/// vector `0`.
pub fn block_isometry(basis: &HatBasis) -> CMatrix {
    let n = basis.n;
    let dim = 1usize << n;
    let mut u = CMatrix::zeros(dim, n + 1);
    for y in 1..=n {
        u.set_column(y - 1, &basis.columns.column(1 << (n - y)));
    }
    u.set_column(n, &basis.columns.column(0));
    u
}

/// Per-word magnitude factors and phase displacements of the band vector
/// `psi(k) = U_{n,k} phi(k)` in the word basis:
///
/// `psi_w(k) = dim^{-n/2} [ sum_y s_y(w) phi_y e^{i k z_y(w)}
///                          - i s_0(w) phi_{n+1} e^{i k z_n(w)} ]`
///
/// where `z_y` are the partial sums of the word's walk. The factors are
/// `k`-independent, which is what makes grid-wide synthesis cheap.
pub struct WordFactors {
    pub n: usize,
    /// `s_y(w)` for `y = 1..=n` followed by `s_0(w)`, per word.
    pub s: Vec<f64>,
    /// `z_y(w)` for `y = 1..=n` followed by `z_n(w)` again, per word.
    pub z: Vec<i16>,
    pub scale: f64,
}

impl WordFactors {
    pub fn stride(&self) -> usize {
        self.n + 1
    }
}

pub fn word_factors(host: Host, n: usize) -> Result<WordFactors> {
    check_dense_n(n)?;
    let dim = 1usize << n;
    let weights = host.synth_weights();
    let stride = n + 1;
    let mut s = vec![0.0f64; dim * stride];
    let mut z = vec![0i16; dim * stride];
    let mut suffix = vec![1.0f64; n + 2];
    for w in 0..dim {
        let word = Word::new(w as u32, n);
        // suffix[l] = prod_{m >= l} cv[w_m]
        suffix[n + 1] = 1.0;
        for l in (1..=n).rev() {
            suffix[l] = weights.cv[word.bit(l) as usize] * suffix[l + 1];
        }
        let mut prefix = 1.0f64;
        let mut depth = 0i16;
        for y in 1..=n {
            let bit = word.bit(y) as usize;
            depth += 2 * bit as i16 - 1;
            s[w * stride + y - 1] = prefix * weights.c1[bit] * suffix[y + 1];
            z[w * stride + y - 1] = depth;
            prefix *= weights.c0[bit];
        }
        s[w * stride + n] = prefix;
        z[w * stride + n] = depth;
    }
    let scale = weights.dim.powf(-(n as f64) / 2.0);
    Ok(WordFactors { n, s, z, scale })
}

/// One component of `psi(k)` straight from the factor tables.
pub fn psi_component(factors: &WordFactors, phi: &[Complex64], k: f64, w: usize) -> Complex64 {
    let stride = factors.stride();
    let n = factors.n;
    let mut acc = Complex64::default();
    for y in 0..n {
        let phase = Complex64::from_polar(1.0, k * factors.z[w * stride + y] as f64);
        acc += phase * factors.s[w * stride + y] * phi[y];
    }
    let phase = Complex64::from_polar(1.0, k * factors.z[w * stride + n] as f64);
    acc += phase * Complex64::new(0.0, -factors.s[w * stride + n]) * phi[n];
    acc * factors.scale
}

/// The full band vector `psi(k)` over all `2^n` words.
pub fn psi_vector(factors: &WordFactors, phi: &[Complex64], k: f64) -> Vec<Complex64> {
    (0..(1usize << factors.n)).map(|w| psi_component(factors, phi, k, w)).collect()
}
