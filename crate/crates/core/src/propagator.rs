//! Time evolution `e^{-iHt} v` for Hermitian operators at three scales:
//! dense eigendecomposition, Chebyshev polynomial iteration for sparse
//! operators, and analytic momentum-space quadrature for band states.

use crate::band::{Band, BandTable};
use crate::error::{Error, Result};
use crate::grid::MomentumGrid;
use crate::linalg::{self, CMatrix, HermitianOp};
use crate::state::{self, ColumnState};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const DENSE_TOL: f64 = 1e-10;
pub const ITERATIVE_TOL: f64 = 1e-8;
pub const HERMITICITY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug)]
pub enum Method {
    Dense,
    /// Chebyshev expansion of the exponential with spectral rescaling.
    Chebyshev { tol: f64 },
}

/// `e^{-iht} v` for a dense Hermitian matrix. The input must be Hermitian
/// within `1e-12` entrywise and `v` normalized within `1e-10`.
pub fn evolve(h: &CMatrix, t: f64, v: &[Complex64], method: Method) -> Result<Vec<Complex64>> {
    if h.nrows() != v.len() {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch: matrix {} vs vector {}",
            h.nrows(),
            v.len()
        )));
    }
    linalg::check_hermitian(h, HERMITICITY_TOL)?;
    let norm = linalg::norm2(v);
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidInput(format!("state norm {norm} is not 1")));
    }
    match method {
        Method::Dense => Ok(linalg::evolve_dense(h, t, v)),
        Method::Chebyshev { tol } => chebyshev_evolve(h, t, v, tol),
    }
}

/// Chebyshev evolution for any Hermitian operator: rescale by a spectral
/// bound (power iteration plus a 5% margin) and expand
/// `e^{-i tau x} = sum_m (2 - delta_m0) (-i)^m J_m(tau) T_m(x)`.
pub fn chebyshev_evolve(
    op: &dyn HermitianOp,
    t: f64,
    v: &[Complex64],
    tol: f64,
) -> Result<Vec<Complex64>> {
    let dim = op.dim();
    if dim != v.len() {
        return Err(Error::InvalidInput("operator/vector dimension mismatch".into()));
    }
    let radius = spectral_bound(op) * 1.05;
    let tau = radius * t;
    if tau.abs() < 1e-300 {
        return Ok(v.to_vec());
    }

    let m_max = (tau.abs() + 12.0 * tau.abs().cbrt() + 30.0).ceil() as usize;
    let bessel = bessel_j_sequence(tau.abs(), m_max);
    // Truncate where the coefficients drop below tol; they decay
    // superexponentially past m ~ tau.
    let mut cutoff = m_max;
    while cutoff > 1 && 2.0 * bessel[cutoff].abs() < 0.1 * tol {
        cutoff -= 1;
    }
    if 2.0 * bessel[cutoff].abs() >= 0.1 * tol && cutoff == m_max {
        return Err(Error::Convergence { iterations: m_max, tail: 2.0 * bessel[m_max].abs() });
    }

    // Sign handling for negative time: J_m(-x) = (-1)^m J_m(x).
    let tau_sign = if tau < 0.0 { -1.0 } else { 1.0 };
    let coeff = |m: usize| -> Complex64 {
        let jm = bessel[m] * if tau < 0.0 && m % 2 == 1 { -1.0 } else { 1.0 };
        let factor = if m == 0 { 1.0 } else { 2.0 };
        // (-i)^m
        let phase = match m % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, -1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, 1.0),
        };
        phase * (factor * jm)
    };
    let _ = tau_sign;

    let scale = 1.0 / radius;
    let mut prev = v.to_vec(); // T_0 v
    let mut curr = op.apply_vec(v); // H' v
    curr.iter_mut().for_each(|c| *c *= scale);
    let mut acc: Vec<Complex64> = prev.iter().map(|&a| coeff(0) * a).collect();
    for (a, &b) in acc.iter_mut().zip(&curr) {
        *a += coeff(1) * b;
    }
    let mut scratch = vec![Complex64::default(); dim];
    for m in 2..=cutoff {
        // T_{m} = 2 H' T_{m-1} - T_{m-2}
        op.apply(&curr, &mut scratch);
        for i in 0..dim {
            scratch[i] = scratch[i] * (2.0 * scale) - prev[i];
        }
        std::mem::swap(&mut prev, &mut curr);
        std::mem::swap(&mut curr, &mut scratch);
        let c = coeff(m);
        for (a, &b) in acc.iter_mut().zip(&curr) {
            *a += c * b;
        }
    }

    let norm = linalg::norm2(&acc);
    if (norm - 1.0).abs() > 100.0 * tol {
        return Err(Error::Convergence { iterations: cutoff, tail: (norm - 1.0).abs() });
    }
    Ok(acc)
}

/// Largest absolute eigenvalue estimate by power iteration on a fixed seed.
pub fn spectral_bound(op: &dyn HermitianOp) -> f64 {
    let dim = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_cafe);
    let mut v: Vec<Complex64> =
        (0..dim).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
    let mut norm = linalg::norm2(&v);
    if norm == 0.0 {
        return 0.0;
    }
    v.iter_mut().for_each(|c| *c /= norm);
    let mut bound = 0.0f64;
    let mut out = vec![Complex64::default(); dim];
    for _ in 0..80 {
        op.apply(&v, &mut out);
        norm = linalg::norm2(&out);
        if norm == 0.0 {
            break;
        }
        bound = bound.max(norm);
        for (a, b) in v.iter_mut().zip(&out) {
            *a = b / norm;
        }
    }
    bound
}

/// `J_0(x) .. J_{m_max}(x)` for `x >= 0` by Miller's downward recurrence,
/// normalized with `J_0 + 2 sum J_{2m} = 1`.
fn bessel_j_sequence(x: f64, m_max: usize) -> Vec<f64> {
    if x == 0.0 {
        let mut out = vec![0.0; m_max + 1];
        out[0] = 1.0;
        return out;
    }
    let start = m_max + (x.sqrt() as usize) + 40;
    let mut jp = 0.0f64;
    let mut j = 1e-30f64;
    let mut out = vec![0.0; m_max + 1];
    let mut norm = 0.0f64;
    for m in (0..=start).rev() {
        let jm = (2.0 * (m + 1) as f64 / x) * j - jp;
        jp = j;
        j = jm;
        if m <= m_max {
            out[m] = j;
        }
        if m % 2 == 0 {
            norm += if m == 0 { j } else { 2.0 * j };
        }
        if j.abs() > 1e250 {
            let s = 1e-250;
            j *= s;
            jp *= s;
            norm *= s;
            out.iter_mut().for_each(|v| *v *= s);
        }
    }
    out.iter_mut().for_each(|v| *v /= norm);
    out
}

/// Evolve a band-subspace state by momentum-space quadrature: multiply the
/// profile by `e^{-i lambda(k) t}` and inverse-transform onto a window.
pub fn band_evolve(
    band: &Band,
    grid: &MomentumGrid,
    t: f64,
    coeffs: &(dyn Fn(f64) -> Complex64 + Sync),
    window: (i64, i64),
    truncation_bound: Option<f64>,
) -> Result<ColumnState> {
    let table = band.sample(grid)?;
    state::synthesize(&table, t, coeffs, window, truncation_bound)
}

/// Same as [`band_evolve`] with a pre-sampled band table.
pub fn band_evolve_table(
    table: &BandTable,
    t: f64,
    coeffs: &(dyn Fn(f64) -> Complex64 + Sync),
    window: (i64, i64),
    truncation_bound: Option<f64>,
) -> Result<ColumnState> {
    state::synthesize(table, t, coeffs, window, truncation_bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn random_hermitian(dim: usize, seed: u64) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = CMatrix::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(rng.gen::<f64>() - 0.5, 0.0);
            for j in i + 1..dim {
                let z = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        m
    }

    fn random_unit(dim: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v: Vec<Complex64> =
            (0..dim).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
        let norm = linalg::norm2(&v);
        v.iter_mut().for_each(|c| *c /= norm);
        v
    }

    #[test]
    fn zero_time_is_identity() {
        let h = random_hermitian(16, 7);
        let v = random_unit(16, 8);
        for method in [Method::Dense, Method::Chebyshev { tol: 1e-10 }] {
            let out = evolve(&h, 0.0, &v, method).unwrap();
            for (a, b) in out.iter().zip(&v) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn diagonal_hamiltonian_evolves_phases() {
        let dim = 8;
        let mut h = CMatrix::zeros(dim, dim);
        let diag: Vec<f64> = (0..dim).map(|i| i as f64 * 0.7 - 2.0).collect();
        for i in 0..dim {
            h[(i, i)] = Complex64::new(diag[i], 0.0);
        }
        let v = random_unit(dim, 3);
        let t = 2.3;
        let out = evolve(&h, t, &v, Method::Dense).unwrap();
        for i in 0..dim {
            let want = v[i] * Complex64::from_polar(1.0, -diag[i] * t);
            assert!((out[i] - want).norm() < 1e-12);
        }
    }

    #[test]
    fn chebyshev_matches_dense_on_random_64dim() {
        let h = random_hermitian(64, 42);
        let v = random_unit(64, 43);
        let t = 3.7;
        let dense = evolve(&h, t, &v, Method::Dense).unwrap();
        let cheb = evolve(&h, t, &v, Method::Chebyshev { tol: 1e-10 }).unwrap();
        let mut worst = 0.0f64;
        for (a, b) in dense.iter().zip(&cheb) {
            worst = worst.max((a - b).norm());
        }
        assert!(worst < 1e-9, "max deviation {worst:e}");
    }

    #[test]
    fn norm_energy_and_composition() {
        let h = random_hermitian(32, 11);
        let v = random_unit(32, 12);
        let t1 = 1.4;
        let t2 = 2.9;
        let once = evolve(&h, t1 + t2, &v, Method::Dense).unwrap();
        let first = evolve(&h, t1, &v, Method::Dense).unwrap();
        let twice = evolve(&h, t2, &first, Method::Dense).unwrap();
        let mut worst = 0.0f64;
        for (a, b) in once.iter().zip(&twice) {
            worst = worst.max((a - b).norm());
        }
        assert!(worst < 2e-10, "composition defect {worst:e}");
        assert_abs_diff_eq!(linalg::norm2(&once), 1.0, epsilon = 1e-10);

        let energy = |state: &[Complex64]| -> f64 {
            let hv = h.apply_vec(state);
            linalg::inner(state, &hv).re
        };
        assert_abs_diff_eq!(energy(&v), energy(&once), epsilon = 1e-9);
    }

    #[test]
    fn non_hermitian_is_rejected() {
        let mut h = random_hermitian(4, 1);
        h[(0, 1)] += Complex64::new(1e-6, 0.0);
        let v = random_unit(4, 2);
        assert!(matches!(
            evolve(&h, 1.0, &v, Method::Dense),
            Err(Error::NonHermitian { .. })
        ));
    }

    #[test]
    fn spectral_bound_close_to_radius() {
        let h = random_hermitian(24, 5);
        let (vals, _) = linalg::hermitian_eigen(&h);
        let rho = vals.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        let bound = spectral_bound(&h);
        assert!(bound <= rho + 1e-9);
        assert!(bound > 0.9 * rho, "bound {bound} vs radius {rho}");
    }

    #[test]
    fn bessel_values_match_known() {
        // J_0(1) and J_1(1) reference values.
        let j = bessel_j_sequence(1.0, 4);
        assert_abs_diff_eq!(j[0], 0.7651976865579666, epsilon = 1e-13);
        assert_abs_diff_eq!(j[1], 0.4400505857449335, epsilon = 1e-13);
        // Normalization identity at a larger argument.
        let j = bessel_j_sequence(20.0, 60);
        let mut s = j[0];
        for m in (2..=60).step_by(2) {
            s += 2.0 * j[m];
        }
        assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
    }
}
