//! Scattering of median-band wave packets on the glued part: closed-form
//! reflection and transmission amplitudes, the effective length of the
//! glued part, and the interior solve for the scattering eigenvector.

use crate::band::Host;
use crate::error::{Error, Result};
use crate::hat;
use crate::state::ColumnState;
use crate::tree_column::{column_hamiltonian, tree_band, ColumnHamiltonian};
use crate::word::span_of_word;
use num_complex::Complex64;
use serde::Serialize;
use std::collections::BTreeMap;

/// Closed-form scattering data at momentum `k`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScatteringCoefficients {
    pub k: f64,
    pub reflection: (f64, f64),
    pub transmission: (f64, f64),
    /// Derivative of `arg T` at `k`: the delay the glued part imposes on a
    /// transmitted packet, divided by its momentum.
    pub effective_length: f64,
}

impl ScatteringCoefficients {
    pub fn r(&self) -> Complex64 {
        Complex64::new(self.reflection.0, self.reflection.1)
    }

    pub fn t(&self) -> Complex64 {
        Complex64::new(self.transmission.0, self.transmission.1)
    }

    pub fn reflection_probability(&self) -> f64 {
        self.r().norm_sqr()
    }

    pub fn transmission_probability(&self) -> f64 {
        self.t().norm_sqr()
    }
}

/// `R(k) = (1 - 2e^{2ik}) / (5 - 2e^{-2ik} - 2e^{2ik})`.
pub fn reflection_amplitude(k: f64) -> Complex64 {
    let e2 = Complex64::from_polar(1.0, 2.0 * k);
    (1.0 - 2.0 * e2) / (5.0 - 2.0 * e2.conj() - 2.0 * e2)
}

/// `T(k) = sqrt2 (e^{-2ik} - 3 + 2e^{2ik}) / (5 - 2e^{-2ik} - 2e^{2ik})`.
pub fn transmission_amplitude(k: f64) -> Complex64 {
    let e2 = Complex64::from_polar(1.0, 2.0 * k);
    2f64.sqrt() * (e2.conj() - 3.0 + 2.0 * e2) / (5.0 - 2.0 * e2.conj() - 2.0 * e2)
}

/// Central difference of `arg T` with unwrapping, step `1e-6`.
pub fn effective_length(k: f64) -> f64 {
    let h = 1e-6;
    let hi = transmission_amplitude(k + h).arg();
    let lo = transmission_amplitude(k - h).arg();
    let mut diff = hi - lo;
    while diff > std::f64::consts::PI {
        diff -= 2.0 * std::f64::consts::PI;
    }
    while diff < -std::f64::consts::PI {
        diff += 2.0 * std::f64::consts::PI;
    }
    diff / (2.0 * h)
}

pub fn scattering_coefficients(k: f64) -> ScatteringCoefficients {
    let r = reflection_amplitude(k);
    let t = transmission_amplitude(k);
    ScatteringCoefficients {
        k,
        reflection: (r.re, r.im),
        transmission: (t.re, t.im),
        effective_length: effective_length(k),
    }
}

/// The scattering eigenvector of the column Hamiltonian at momentum `k`:
/// incoming plus reflected wave below the glued part, transmitted wave
/// above, and solved interior amplitudes in between.
pub struct ScatteringEigenvector {
    pub n: usize,
    pub k: f64,
    pub lambda: f64,
    /// Assembled state: ansatz on the exterior columns, least-squares
    /// solution on `[-n+2, n-1]`.
    pub state: ColumnState,
    /// Largest row residual of `(H - lambda) mu` over rows `[-n+1, n]`.
    pub interior_residual: f64,
    /// Largest row residual over the deeper exterior rows of the window,
    /// where the ansatz alone must already satisfy the eigenequation.
    pub exterior_residual: f64,
    pub iterations: usize,
    pub condition_estimate: f64,
}

/// Solve the bordered interior system. The unknowns are the interior
/// amplitudes; every row touching them (start columns `-n+1 ..= n`) enters
/// the least-squares system, with the fixed exterior ansatz on the
/// right-hand side. The reported residual measures how well the eigenvector
/// ansatz holds; it is not forced to zero.
pub fn solve_scattering_vector(n: usize, k: f64, guard: i64) -> Result<ScatteringEigenvector> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::InvalidInput("scattering solve needs even n".into()));
    }
    if n > 10 {
        return Err(Error::Capacity { required: n, limit: 10 });
    }
    let band = tree_band(n)?;
    let lambda = band.lambda(k)?;
    // The window needs at least n extra columns per side so the column
    // Hamiltonian covers every regime; more guard only widens the emitted
    // span tables.
    let guard = guard.max(n as i64).max(2);
    let x_lo = -(n as i64) - guard;
    let x_hi = n as i64 + guard;
    let h = column_hamiltonian(n, x_lo, x_hi)?;
    let words = 1usize << n;

    // Exterior ansatz amplitudes.
    let factors = hat::word_factors(Host::Tree, n)?;
    let psi_in = hat::psi_vector(&factors, &band.eval(k)?.phi, k);
    let psi_back = hat::psi_vector(&factors, &band.eval(-k)?.phi, -k);
    let refl = reflection_amplitude(k);
    let trans = transmission_amplitude(k);
    let full = (1usize << n) - 1;
    let psi_check: Vec<Complex64> =
        (0..words).map(|w| psi_in[w ^ full].conj()).collect();
    let ansatz = |x: i64, w: usize| -> Complex64 {
        if x <= -(n as i64) + 1 {
            Complex64::from_polar(1.0, k * x as f64) * psi_in[w]
                + refl * Complex64::from_polar(1.0, -k * x as f64) * psi_back[w]
        } else if x >= n as i64 {
            trans * Complex64::from_polar(1.0, k * x as f64) * psi_check[w]
        } else {
            Complex64::default()
        }
    };

    let int_lo = -(n as i64) + 2;
    let int_hi = n as i64 - 1;
    let interior_index = |x: i64, w: usize| -> Option<usize> {
        (x >= int_lo && x <= int_hi).then(|| ((x - int_lo) as usize) * words + w)
    };
    let unknowns = ((int_hi - int_lo + 1) as usize) * words;

    // Rows of the bordered system, as sparse combinations of unknowns plus
    // a fixed right-hand side.
    let row_lo = -(n as i64) + 1;
    let row_hi = n as i64;
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut rhs: Vec<Complex64> = Vec::new();
    for x in row_lo..=row_hi {
        for w in 0..words {
            let r = h.index(x, w).unwrap();
            let mut entries: Vec<(usize, f64)> = Vec::with_capacity(5);
            let mut b = Complex64::default();
            let (cols, vals) = row_of(&h, r);
            for (&c, &v) in cols.iter().zip(vals) {
                let (cx, cw) = h.site(c as usize);
                match interior_index(cx, cw) {
                    Some(u) => entries.push((u, v)),
                    None => b -= ansatz(cx, cw) * v,
                }
            }
            match interior_index(x, w) {
                Some(u) => entries.push((u, -lambda)),
                None => b += ansatz(x, w) * lambda,
            }
            rows.push(entries);
            rhs.push(b);
        }
    }

    let solve = lsqr(&rows, unknowns, &rhs, 1e-12, 200 * unknowns.max(100));

    // Assemble the full state and measure residuals.
    let mut state = ColumnState::zeros(n, x_lo, x_hi);
    for x in x_lo..=x_hi {
        for w in 0..words {
            *state.amplitude_mut(x, w) = match interior_index(x, w) {
                Some(u) => solve.x[u],
                None => ansatz(x, w),
            };
        }
    }
    let mut interior_residual = 0.0f64;
    let mut exterior_residual = 0.0f64;
    for x in (x_lo + 1)..=(x_hi - 1) {
        for w in 0..words {
            let r = h.index(x, w).unwrap();
            let (cols, vals) = row_of(&h, r);
            let mut acc = Complex64::default();
            for (&c, &v) in cols.iter().zip(vals) {
                let (cx, cw) = h.site(c as usize);
                acc += state.amplitude(cx, cw) * v;
            }
            acc -= state.amplitude(x, w) * lambda;
            let res = acc.norm();
            if x >= row_lo && x <= row_hi {
                interior_residual = interior_residual.max(res);
            } else {
                exterior_residual = exterior_residual.max(res);
            }
        }
    }

    Ok(ScatteringEigenvector {
        n,
        k,
        lambda,
        state,
        interior_residual,
        exterior_residual,
        iterations: solve.iterations,
        condition_estimate: solve.condition_estimate,
    })
}

fn row_of(h: &ColumnHamiltonian, r: usize) -> (&[u32], &[f64]) {
    h.matrix().row(r)
}

struct LsqrOutcome {
    x: Vec<Complex64>,
    iterations: usize,
    condition_estimate: f64,
}

/// LSQR on a sparse real matrix with a complex right-hand side. Converges
/// to the minimal-norm least-squares solution, so isolated rank deficiency
/// degrades gracefully.
fn lsqr(
    rows: &[Vec<(usize, f64)>],
    unknowns: usize,
    b: &[Complex64],
    tol: f64,
    max_iter: usize,
) -> LsqrOutcome {
    let m = rows.len();
    let apply = |v: &[Complex64], out: &mut Vec<Complex64>| {
        out.clear();
        out.resize(m, Complex64::default());
        for (r, row) in rows.iter().enumerate() {
            let mut acc = Complex64::default();
            for &(c, w) in row {
                acc += v[c] * w;
            }
            out[r] = acc;
        }
    };
    let apply_t = |u: &[Complex64], out: &mut Vec<Complex64>| {
        out.clear();
        out.resize(unknowns, Complex64::default());
        for (r, row) in rows.iter().enumerate() {
            let ur = u[r];
            for &(c, w) in row {
                out[c] += ur * w;
            }
        }
    };
    let norm = |v: &[Complex64]| v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let scale = |v: &mut [Complex64], s: f64| v.iter_mut().for_each(|c| *c *= s);

    let mut x = vec![Complex64::default(); unknowns];
    let mut u = b.to_vec();
    let mut beta = norm(&u);
    if beta == 0.0 {
        return LsqrOutcome { x, iterations: 0, condition_estimate: 0.0 };
    }
    scale(&mut u, 1.0 / beta);
    let mut v = Vec::new();
    apply_t(&u, &mut v);
    let mut alpha = norm(&v);
    if alpha == 0.0 {
        return LsqrOutcome { x, iterations: 0, condition_estimate: 0.0 };
    }
    scale(&mut v, 1.0 / alpha);
    let mut w = v.clone();
    let mut phi_bar = beta;
    let mut rho_bar = alpha;
    let b_norm = beta;
    let mut a_norm_sq = 0.0f64;
    let mut d_norm_sq = 0.0f64;
    let mut scratch = Vec::new();
    let mut iterations = 0;

    for iter in 1..=max_iter {
        iterations = iter;
        // beta u = A v - alpha u
        apply(&v, &mut scratch);
        for (s, ui) in scratch.iter_mut().zip(&u) {
            *s -= ui * alpha;
        }
        std::mem::swap(&mut u, &mut scratch);
        beta = norm(&u);
        if beta > 0.0 {
            scale(&mut u, 1.0 / beta);
        }
        // alpha v = A^T u - beta v
        apply_t(&u, &mut scratch);
        for (s, vi) in scratch.iter_mut().zip(&v) {
            *s -= vi * beta;
        }
        std::mem::swap(&mut v, &mut scratch);
        alpha = norm(&v);
        if alpha > 0.0 {
            scale(&mut v, 1.0 / alpha);
        }
        a_norm_sq += alpha * alpha + beta * beta;

        let rho = (rho_bar * rho_bar + beta * beta).sqrt();
        let c = rho_bar / rho;
        let s = beta / rho;
        let theta = s * alpha;
        rho_bar = -c * alpha;
        let phi = c * phi_bar;
        phi_bar *= s;

        let step = phi / rho;
        d_norm_sq += (1.0 / rho).powi(2) * w.iter().map(|c| c.norm_sqr()).sum::<f64>();
        for (xi, wi) in x.iter_mut().zip(&w) {
            *xi += wi * step;
        }
        for (wi, vi) in w.iter_mut().zip(&v) {
            *wi = vi - *wi * (theta / rho);
        }

        if phi_bar <= tol * b_norm {
            break;
        }
    }

    LsqrOutcome {
        x,
        iterations,
        condition_estimate: (a_norm_sq * d_norm_sq).sqrt(),
    }
}

/// Span-class probabilities `p_{x,a}` of an assembled scattering vector:
/// the squared amplitude mass on snakes whose span interval is exactly
/// `(x - a/2, x + a/2)`. Keys are doubled centers `2x`, so half-integer
/// centers (odd `a`) stay exact.
pub fn span_probabilities(vec: &ScatteringEigenvector, a: usize) -> Vec<(i64, f64)> {
    let n = vec.n;
    let words = 1usize << n;
    let spans: Vec<(i32, i32)> = crate::word::Word::all(n)
        .map(|w| {
            let s = span_of_word(&w);
            (s.doubled_center(), s.length())
        })
        .collect();
    let mut table: BTreeMap<i64, f64> = BTreeMap::new();
    let state = &vec.state;
    for x in state.x_min()..=state.x_max() {
        for w in 0..words {
            let (center2, len) = spans[w];
            if len as usize != a {
                continue;
            }
            let p = state.amplitude(x, w).norm_sqr();
            if p > 0.0 {
                *table.entry(2 * x + center2 as i64).or_insert(0.0) += p;
            }
        }
    }
    table.into_iter().collect()
}

/// Aggregate the squared norm per start column, split by span class, for
/// the completeness check `sum_a p = |mu_x|^2`.
pub fn column_norm(vec: &ScatteringEigenvector, x: i64) -> f64 {
    vec.state.slice_prob(x)
}
