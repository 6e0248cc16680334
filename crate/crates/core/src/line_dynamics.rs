//! Localized band states on the line, their evolution, and the stationary
//! phase picture: most of the walk stays put, but the median-band packets
//! travel at momentum `8/(n+2)`.

use crate::band::{Band, BandTable, Host};
use crate::error::{Error, Result};
use crate::graph::{self, Graph, Snake};
use crate::grid::MomentumGrid;
use crate::linalg::evolve_dense;
use crate::state::{self, ColumnState};
use crate::word::Word;
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

/// `eta_x`: the localized uniform superposition of median-band eigenvectors
/// centered at `x`, on a window containing `[x - 3n, x + 3n]`.
pub fn build_eta(n: usize, x: i64, grid: &MomentumGrid) -> Result<ColumnState> {
    let pad = 3 * n as i64 + 2;
    build_eta_windowed(n, x, grid, (x - pad, x + pad))
}

pub fn build_eta_windowed(
    n: usize,
    x: i64,
    grid: &MomentumGrid,
    window: (i64, i64),
) -> Result<ColumnState> {
    if window.0 > x - 3 * n as i64 || window.1 < x + 3 * n as i64 {
        return Err(Error::InvalidInput(format!(
            "window {window:?} must contain [{}, {}]",
            x - 3 * n as i64,
            x + 3 * n as i64
        )));
    }
    let table = Band::median(Host::Line, n)?.sample(grid)?;
    eta_from_table(&table, x, window)
}

pub fn eta_from_table(table: &BandTable, x: i64, window: (i64, i64)) -> Result<ColumnState> {
    let coeffs = move |k: f64| Complex64::from_polar(1.0, -k * x as f64);
    state::synthesize(table, 0.0, &coeffs, window, Some(1e-6))
}

/// `<eta_x| e^{-i H_n t} |eta_0>` by quadrature of
/// `(1/2pi) Integral e^{i(kx - lambda(k) t)} dk`.
///
/// At `t = 0` this is the Kronecker delta in `x`, exactly reproduced by the
/// discrete sum.
pub fn eta_overlap_at(n: usize, x: i64, t: f64, grid: &MomentumGrid) -> Result<Complex64> {
    let table = Band::median(Host::Line, n)?.sample(grid)?;
    let required = (8.0 * (t.abs() * table.max_group_velocity() + x.abs() as f64)).ceil() as usize;
    if grid.len() < required {
        return Err(Error::GridResolution { required, actual: grid.len() });
    }
    let mut acc = Complex64::default();
    for (i, &k) in grid.nodes().iter().enumerate() {
        acc += Complex64::from_polar(1.0, k * x as f64 - table.lambda[i] * t);
    }
    Ok(acc / grid.len() as f64)
}

/// Same overlap parametrized by momentum `omega` with `omega t` integral.
pub fn eta_overlap_evolved(n: usize, omega: f64, t: f64, grid: &MomentumGrid) -> Result<Complex64> {
    let target = omega * t;
    if (target - target.round()).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!("omega*t = {target} is not an integer")));
    }
    eta_overlap_at(n, target.round() as i64, t, grid)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Regime {
    /// `|omega| > 8/(n+2)`: amplitude superpolynomially small in `t`.
    Outside,
    /// `|omega| = 8/(n+2)`: Airy edge, amplitude decaying as `t^{-1/3}`.
    Edge,
    /// `|omega| < 8/(n+2)`: oscillatory `t^{-1/2}` regime.
    Interior,
}

/// Stationary-phase estimate of the overlap at momentum `omega` and time `t`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct StationaryPhasePrediction {
    pub regime: Regime,
    pub amplitude: (f64, f64),
    /// Stationary momentum in `(pi/2, 3pi/2)`, present in the interior regime.
    pub k_stationary: Option<f64>,
}

impl StationaryPhasePrediction {
    pub fn amplitude_c(&self) -> Complex64 {
        Complex64::new(self.amplitude.0, self.amplitude.1)
    }
}

/// `i^z` for real `z`.
fn i_pow(z: f64) -> Complex64 {
    Complex64::from_polar(1.0, 0.5 * PI * z)
}

pub fn stationary_phase_predict(
    n: usize,
    omega: f64,
    t: f64,
) -> Result<StationaryPhasePrediction> {
    if t <= 0.0 {
        return Err(Error::InvalidInput("stationary phase needs t > 0".into()));
    }
    let band = Band::median(Host::Line, n)?;
    let edge = 8.0 / (n as f64 + 2.0);
    let tol = 1e-12;
    if omega.abs() > edge + tol {
        return Ok(StationaryPhasePrediction {
            regime: Regime::Outside,
            amplitude: (0.0, 0.0),
            k_stationary: None,
        });
    }
    if (omega.abs() - edge).abs() <= tol {
        let nf = n as f64;
        let gamma_third = statrs::function::gamma::gamma(1.0 / 3.0);
        let magnitude = (nf + 2.0) * gamma_third
            / (2.0 * PI * (4.0 * 3f64.sqrt() * (3.0 * nf * nf + 4.0)).cbrt())
            / t.cbrt();
        let amp = i_pow(-omega.abs() * t) * magnitude;
        return Ok(StationaryPhasePrediction {
            regime: Regime::Edge,
            amplitude: (amp.re, amp.im),
            k_stationary: None,
        });
    }

    // Interior: the unique k in (pi/2, 3pi/2) with lambda'(k) = omega;
    // lambda' increases through that interval.
    let f = |k: f64| -> Result<f64> { Ok(band.derivative(k, 1)? - omega) };
    let mut lo = PI / 2.0 + 1e-9;
    let mut hi = 1.5 * PI - 1e-9;
    let mut flo = f(lo)?;
    let fhi = f(hi)?;
    if flo > 0.0 || fhi < 0.0 {
        return Err(Error::NoStationaryPoint { omega });
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let k_omega = 0.5 * (lo + hi);
    let lambda = band.lambda(k_omega)?;
    let curvature = band.derivative(k_omega, 2)?;
    if curvature.abs() < 1e-14 {
        return Err(Error::NoStationaryPoint { omega });
    }
    let phase = t * (omega * (k_omega - PI / 2.0) - lambda) - PI / 4.0;
    let magnitude = (2.0 / PI).sqrt() * phase.cos() / (t * curvature.abs()).sqrt();
    let amp = i_pow(omega * t) * magnitude;
    Ok(StationaryPhasePrediction {
        regime: Regime::Interior,
        amplitude: (amp.re, amp.im),
        k_stationary: Some(k_omega),
    })
}

/// 1-norm of the part of `eta_0` on snakes starting at least `n` away from
/// the center: `sum_{x <= -n} |eta_0_x|_1 + sum_{x >= n} |eta_0_x|_1`.
pub fn locality_tail(n: usize, grid: &MomentumGrid) -> Result<f64> {
    locality_tail_around(n, 0, grid)
}

pub fn locality_tail_around(n: usize, center: i64, grid: &MomentumGrid) -> Result<f64> {
    let pad = 3 * n as i64 + 8;
    let table = Band::median(Host::Line, n)?.sample(grid)?;
    let eta = eta_from_table(&table, center, (center - pad, center + pad))?;
    let mut tail = 0.0;
    for x in eta.x_min()..=eta.x_max() {
        if (x - center).abs() >= n as i64 {
            tail += eta.slice_l1(x);
        }
    }
    Ok(tail)
}

/// Start-position distribution of `e^{-i H_n t} eta_0` over the window.
pub fn wavefront_profile(
    n: usize,
    t: f64,
    grid: &MomentumGrid,
    window: (i64, i64),
) -> Result<Vec<(i64, f64)>> {
    let reach = (t / 2.0).ceil() as i64 + 4 * n as i64;
    if window.0 > -reach || window.1 < reach {
        return Err(Error::InvalidInput(format!(
            "window {window:?} must contain [-{reach}, {reach}]"
        )));
    }
    let table = Band::median(Host::Line, n)?.sample(grid)?;
    let coeffs = |_k: f64| Complex64::new(1.0, 0.0);
    let state = state::synthesize(&table, t, &coeffs, window, Some(1e-6))?;
    Ok(state.probability_profile())
}

/// Dense oracle: expand a column state into the snake basis of a finite
/// line window, evolve under the full `A_n`, and project back. The guard
/// sets how far the window extends beyond the state on each side.
pub fn dense_windowed_evolution(
    initial: &ColumnState,
    t: f64,
    guard: i64,
) -> Result<ColumnState> {
    let n = initial.n();
    let lo = initial.x_min() - guard - n as i64;
    let hi = initial.x_max() + guard + n as i64;
    let g = Graph::line_window(lo, hi);
    let space = graph::enumerate_snakes(&g, n, graph::DEFAULT_CAPACITY)?;

    let snake_index = |x: i64, w: usize| -> Option<usize> {
        let positions = graph::line_decode(x, Word::new(w as u32, n));
        let vertices: Option<Vec<_>> =
            positions.iter().map(|p| g.vertex(&p.to_string())).collect();
        space.index_of(&Snake(vertices?))
    };

    let mut v = vec![Complex64::default(); space.len()];
    for x in initial.x_min()..=initial.x_max() {
        for w in 0..initial.words() {
            if let Some(i) = snake_index(x, w) {
                v[i] = initial.amplitude(x, w);
            }
        }
    }
    let h = space.adjacency().to_dense();
    let evolved = evolve_dense(&h, t, &v);

    let mut out = ColumnState::zeros(n, initial.x_min(), initial.x_max());
    for x in initial.x_min()..=initial.x_max() {
        for w in 0..initial.words() {
            if let Some(i) = snake_index(x, w) {
                *out.amplitude_mut(x, w) = evolved[i];
            }
        }
    }
    Ok(out)
}
