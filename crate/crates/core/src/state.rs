//! States in the column subspace: complex amplitudes over `(x, j)` with
//! `x` in a finite window and `j` a move word, plus the quadrature
//! synthesis that turns band-space data into such states.

use crate::band::BandTable;
use crate::error::{Error, Result};
use crate::hat;
use crate::word::Word;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

/// Amplitudes over `(x, j)` for `x` in `[x_min, x_max]`, `j` in `{0,1}^n`,
/// stored row-major in `x`.
#[derive(Clone, Debug)]
pub struct ColumnState {
    n: usize,
    x_min: i64,
    amps: Vec<Complex64>,
}

impl ColumnState {
    pub fn zeros(n: usize, x_min: i64, x_max: i64) -> Self {
        let width = (x_max - x_min + 1) as usize;
        ColumnState { n, x_min, amps: vec![Complex64::default(); width << n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn words(&self) -> usize {
        1 << self.n
    }

    pub fn x_min(&self) -> i64 {
        self.x_min
    }

    pub fn x_max(&self) -> i64 {
        self.x_min + (self.amps.len() >> self.n) as i64 - 1
    }

    pub fn width(&self) -> usize {
        self.amps.len() >> self.n
    }

    pub fn contains(&self, x: i64) -> bool {
        x >= self.x_min && x <= self.x_max()
    }

    pub fn amplitude(&self, x: i64, w: usize) -> Complex64 {
        if !self.contains(x) {
            return Complex64::default();
        }
        self.amps[((x - self.x_min) as usize) * self.words() + w]
    }

    pub fn amplitude_mut(&mut self, x: i64, w: usize) -> &mut Complex64 {
        let words = self.words();
        let at = ((x - self.x_min) as usize) * words + w;
        &mut self.amps[at]
    }

    pub fn slice(&self, x: i64) -> &[Complex64] {
        let words = self.words();
        let at = ((x - self.x_min) as usize) * words;
        &self.amps[at..at + words]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let norm = self.norm();
        if norm > 0.0 {
            for a in &mut self.amps {
                *a /= norm;
            }
        }
    }

    pub fn inner(&self, other: &ColumnState) -> Complex64 {
        assert_eq!(self.n, other.n);
        let lo = self.x_min.max(other.x_min);
        let hi = self.x_max().min(other.x_max());
        let mut acc = Complex64::default();
        for x in lo..=hi {
            for (a, b) in self.slice(x).iter().zip(other.slice(x)) {
                acc += a.conj() * b;
            }
        }
        acc
    }

    /// Probability of observing a snake whose start column is `x`.
    pub fn slice_prob(&self, x: i64) -> f64 {
        if !self.contains(x) {
            return 0.0;
        }
        self.slice(x).iter().map(|c| c.norm_sqr()).sum()
    }

    /// 1-norm of the `x` slice.
    pub fn slice_l1(&self, x: i64) -> f64 {
        if !self.contains(x) {
            return 0.0;
        }
        self.slice(x).iter().map(|c| c.norm()).sum()
    }

    pub fn probability_profile(&self) -> Vec<(i64, f64)> {
        (self.x_min..=self.x_max()).map(|x| (x, self.slice_prob(x))).collect()
    }

    /// Expectation of a word-diagonal observable `sum q(j) |x,j><x,j|`.
    pub fn word_diag_expectation(&self, diag: &[f64]) -> f64 {
        assert_eq!(diag.len(), self.words());
        let words = self.words();
        self.amps
            .chunks_exact(words)
            .map(|row| row.iter().zip(diag).map(|(a, q)| a.norm_sqr() * q).sum::<f64>())
            .sum()
    }

    /// Probability mass sitting on the two outermost slices.
    pub fn boundary_mass(&self) -> f64 {
        self.slice_prob(self.x_min) + self.slice_prob(self.x_max())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let amps: Vec<(f64, f64)> = self.amps.iter().map(|c| (c.re, c.im)).collect();
        serde_json::json!({
            "n": self.n,
            "x_min": self.x_min,
            "x_max": self.x_max(),
            "amplitudes": amps,
        })
    }
}

/// Synthesize the band-subspace state with momentum profile `coeffs`
/// evolved for time `t`:
///
/// `amp(x, j) = (1/K) sum_i coeffs(k_i) e^{-i lambda(k_i) t} e^{i k_i x} psi_j(k_i)`
///
/// on the window `[x_lo, x_hi]`. The grid sum is evaluated exactly via one
/// inverse FFT per reduced coordinate, using the product structure of the
/// hat basis; this is the same Riemann sum as the naive per-node loop.
pub fn synthesize(
    table: &BandTable,
    t: f64,
    coeffs: &(dyn Fn(f64) -> Complex64 + Sync),
    window: (i64, i64),
    truncation_bound: Option<f64>,
) -> Result<ColumnState> {
    let (x_lo, x_hi) = window;
    if x_hi < x_lo {
        return Err(Error::InvalidInput(format!("empty window [{x_lo}, {x_hi}]")));
    }
    let k_count = table.grid.len();
    let n = table.n;
    let width = (x_hi - x_lo + 1) as usize;
    if width + 2 * n + 2 > k_count {
        return Err(Error::GridResolution { required: width + 2 * n + 2, actual: k_count });
    }
    if !table.grid.is_offset() {
        return Err(Error::InvalidInput("synthesis requires the half-offset grid".into()));
    }

    // One spectral profile per reduced coordinate y:
    //   F_y(m) = (1/K) sum_i q_i phi_y(k_i) e^{i k_i m},
    // which is anti-periodic in m with period K on the offset grid.
    let q: Vec<Complex64> = table
        .grid
        .nodes()
        .iter()
        .zip(&table.lambda)
        .map(|(&k, &lam)| coeffs(k) * Complex64::from_polar(1.0, -lam * t))
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_inverse(k_count);
    let profiles: Vec<Vec<Complex64>> = (0..=n)
        .into_par_iter()
        .map(|y| {
            let mut buf: Vec<Complex64> =
                (0..k_count).map(|i| q[i] * table.phi[i][y]).collect();
            fft.process(&mut buf);
            let scale = 1.0 / k_count as f64;
            for (m, value) in buf.iter_mut().enumerate() {
                *value *= Complex64::from_polar(scale, std::f64::consts::PI * m as f64 / k_count as f64);
            }
            buf
        })
        .collect();

    let factors = hat::word_factors(table.host, n)?;
    let words = 1usize << n;
    let stride = factors.stride();
    let mut state = ColumnState::zeros(n, x_lo, x_hi);
    let kf = k_count as i64;
    state
        .amps
        .par_chunks_mut(words)
        .enumerate()
        .for_each(|(row, out)| {
            let x = x_lo + row as i64;
            for (w, slot) in out.iter_mut().enumerate() {
                let mut acc = Complex64::default();
                for y in 0..n {
                    let m = x + factors.z[w * stride + y] as i64;
                    acc += factors.s[w * stride + y] * profile_at(&profiles[y], m, kf);
                }
                let m = x + factors.z[w * stride + n] as i64;
                let f = profile_at(&profiles[n], m, kf);
                acc += Complex64::new(0.0, -factors.s[w * stride + n]) * f;
                *slot = acc * factors.scale;
            }
        });

    if let Some(bound) = truncation_bound {
        let mass = state.boundary_mass();
        if mass > bound {
            return Err(Error::WindowTruncation { mass, bound });
        }
    }
    Ok(state)
}

/// `F(m)` for any integer `m`, using anti-periodicity `F(m + K) = -F(m)`.
#[inline]
fn profile_at(profile: &[Complex64], m: i64, k: i64) -> Complex64 {
    let folded = m.rem_euclid(k);
    let wraps = (m - folded) / k;
    let value = profile[folded as usize];
    if wraps & 1 == 0 {
        value
    } else {
        -value
    }
}

/// Reference synthesis: the same Riemann sum evaluated node by node through
/// the dense band vector. Quadratically slower; used as an oracle.
pub fn synthesize_direct(
    table: &BandTable,
    t: f64,
    coeffs: &(dyn Fn(f64) -> Complex64 + Sync),
    window: (i64, i64),
) -> Result<ColumnState> {
    let (x_lo, x_hi) = window;
    let n = table.n;
    let factors = hat::word_factors(table.host, n)?;
    let words = 1usize << n;
    let mut state = ColumnState::zeros(n, x_lo, x_hi);
    let k_count = table.grid.len();
    for i in 0..k_count {
        let k = table.grid.node(i);
        let q = coeffs(k) * Complex64::from_polar(1.0, -table.lambda[i] * t)
            / k_count as f64;
        let psi = hat::psi_vector(&factors, &table.phi[i], k);
        for x in x_lo..=x_hi {
            let phase = Complex64::from_polar(1.0, k * x as f64) * q;
            let row = ((x - x_lo) as usize) * words;
            for w in 0..words {
                state.amps[row + w] += phase * psi[w];
            }
        }
    }
    Ok(state)
}

/// Convenience: the word observable given by a per-word function.
pub fn word_diagonal(n: usize, f: impl Fn(&Word) -> f64) -> Vec<f64> {
    Word::all(n).map(|w| f(&w)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::band::{Band, Host};
    use crate::grid::MomentumGrid;
    use approx::assert_abs_diff_eq;

    fn table(host: Host, n: usize, k_count: usize) -> BandTable {
        Band::median(host, n).unwrap().sample(&MomentumGrid::new(k_count).unwrap()).unwrap()
    }

    #[test]
    fn fft_synthesis_matches_direct() {
        for host in [Host::Line, Host::Tree] {
            let table = table(host, 2, 256);
            let coeffs = |k: f64| Complex64::from_polar(1.0, -3.0 * k) * (0.3 * k).cos();
            let fast = synthesize(&table, 1.7, &coeffs, (-20, 25), None).unwrap();
            let slow = synthesize_direct(&table, 1.7, &coeffs, (-20, 25)).unwrap();
            let mut worst = 0.0f64;
            for (a, b) in fast.as_slice().iter().zip(slow.as_slice()) {
                worst = worst.max((a - b).norm());
            }
            assert!(worst < 1e-12, "{host:?}: max deviation {worst:e}");
        }
    }

    #[test]
    fn localized_state_has_unit_norm() {
        let table = table(Host::Line, 2, 256);
        let coeffs = |_k: f64| Complex64::new(1.0, 0.0);
        let eta = synthesize(&table, 0.0, &coeffs, (-30, 30), Some(1e-6)).unwrap();
        assert_abs_diff_eq!(eta.norm(), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn constant_band_evolution_is_a_global_phase() {
        let mut table = table(Host::Line, 2, 256);
        let c = 0.83;
        table.lambda.iter_mut().for_each(|l| *l = c);
        let coeffs = |k: f64| Complex64::from_polar(1.0, -2.0 * k);
        let t = 5.0;
        let evolved = synthesize(&table, t, &coeffs, (-20, 20), None).unwrap();
        let frozen = synthesize(&table, 0.0, &coeffs, (-20, 20), None).unwrap();
        let phase = Complex64::from_polar(1.0, -c * t);
        for (a, b) in evolved.as_slice().iter().zip(frozen.as_slice()) {
            assert!((a - phase * b).norm() < 1e-12);
        }
    }

    #[test]
    fn shifted_profiles_are_orthonormal() {
        let table = table(Host::Line, 2, 256);
        let states: Vec<ColumnState> = (-5..=5)
            .map(|x| {
                let coeffs = move |k: f64| Complex64::from_polar(1.0, -k * x as f64);
                synthesize(&table, 0.0, &coeffs, (-40, 40), None).unwrap()
            })
            .collect();
        for (i, a) in states.iter().enumerate() {
            for (j, b) in states.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                let got = a.inner(b);
                assert!(
                    (got - Complex64::new(want, 0.0)).norm() < 1e-6,
                    "gram({i},{j}) = {got}"
                );
            }
        }
    }

    #[test]
    fn window_truncation_is_reported() {
        let table = table(Host::Line, 2, 256);
        let coeffs = |_k: f64| Complex64::new(1.0, 0.0);
        match synthesize(&table, 40.0, &coeffs, (-10, 10), Some(1e-6)) {
            Err(Error::WindowTruncation { mass, .. }) => assert!(mass > 1e-6),
            other => panic!("expected truncation error, got {:?}", other.map(|s| s.norm())),
        }
    }

    #[test]
    fn anti_periodic_profile_lookup() {
        let profile = vec![Complex64::new(1.0, 2.0), Complex64::new(-3.0, 0.5)];
        let k = 2i64;
        assert_eq!(profile_at(&profile, 0, k), profile[0]);
        assert_eq!(profile_at(&profile, 2, k), -profile[0]);
        assert_eq!(profile_at(&profile, -1, k), -profile[1]);
        assert_eq!(profile_at(&profile, -2, k), -profile[0]);
        assert_eq!(profile_at(&profile, 4, k), profile[0]);
    }
}
