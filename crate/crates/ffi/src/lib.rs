//! C ABI over the snake-walk library: opaque band handles, plain structs
//! for scattering data, and status codes. Every function is
//! panic-free at the boundary and reports failures through [`SwStatus`].

use snake_walk::band::{Band, Host};
use snake_walk::grid::MomentumGrid;
use snake_walk::line_dynamics;
use snake_walk::scattering;
use snake_walk::word::{span_of_word, Word};
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Status code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SwStatus {
    /// Success.
    SwOk = 0,
    /// A required pointer argument was null.
    SwNullArgument = 1,
    /// An argument was outside its documented domain.
    SwInvalidArgument = 2,
    /// The computation failed to meet its numerical contract.
    SwNumerical = 3,
}

/// Opaque handle to an eigenvalue band of the walk.
pub struct SwBand {
    inner: Band,
}

/// Closed-form scattering data at one momentum.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct SwScattering {
    pub k: f64,
    pub reflection_re: f64,
    pub reflection_im: f64,
    pub transmission_re: f64,
    pub transmission_im: f64,
    /// Derivative of the transmission phase: the effective length of the
    /// glued part.
    pub effective_length: f64,
}

fn guard<F: FnOnce() -> SwStatus>(f: F) -> SwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => SwStatus::SwNumerical,
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

fn band_new(host: Host, n: usize, out: *mut *mut SwBand) -> SwStatus {
    if out.is_null() {
        return SwStatus::SwNullArgument;
    }
    match Band::median(host, n) {
        Ok(inner) => {
            let handle = Box::into_raw(Box::new(SwBand { inner }));
            unsafe { *out = handle };
            SwStatus::SwOk
        }
        Err(_) => SwStatus::SwInvalidArgument,
    }
}

/// Create the median band of the walk on the line; `n` must be even.
#[no_mangle]
pub extern "C" fn sw_line_band_new(n: usize, out: *mut *mut SwBand) -> SwStatus {
    guard(|| band_new(Host::Line, n, out))
}

/// Create the median band of the walk deep in the binary tree; `n` even.
#[no_mangle]
pub extern "C" fn sw_tree_band_new(n: usize, out: *mut *mut SwBand) -> SwStatus {
    guard(|| band_new(Host::Tree, n, out))
}

/// Release a band handle. Null is accepted and ignored.
///
/// # Safety
/// `band` must be a pointer previously returned by one of the band
/// constructors and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sw_band_free(band: *mut SwBand) {
    if !band.is_null() {
        drop(unsafe { Box::from_raw(band) });
    }
}

/// Band eigenvalue at momentum `k`.
///
/// # Safety
/// `band` must be a live handle from a band constructor.
#[no_mangle]
pub unsafe extern "C" fn sw_band_lambda(
    band: *const SwBand,
    k: f64,
    out: *mut f64,
) -> SwStatus {
    if band.is_null() || out.is_null() {
        return SwStatus::SwNullArgument;
    }
    let band = unsafe { &*band };
    guard(|| match band.inner.lambda(k) {
        Ok(value) => {
            unsafe { *out = value };
            SwStatus::SwOk
        }
        Err(_) => SwStatus::SwNumerical,
    })
}

/// Band derivative of order 1 to 3 at momentum `k`.
///
/// # Safety
/// `band` must be a live handle from a band constructor.
#[no_mangle]
pub unsafe extern "C" fn sw_band_derivative(
    band: *const SwBand,
    k: f64,
    order: u32,
    out: *mut f64,
) -> SwStatus {
    if band.is_null() || out.is_null() {
        return SwStatus::SwNullArgument;
    }
    if !(1..=3).contains(&order) {
        return SwStatus::SwInvalidArgument;
    }
    let band = unsafe { &*band };
    guard(|| match band.inner.derivative(k, order as usize) {
        Ok(value) => {
            unsafe { *out = value };
            SwStatus::SwOk
        }
        Err(_) => SwStatus::SwNumerical,
    })
}

/// The limiting scaled band value `Lambda(k)` on the line.
#[no_mangle]
pub extern "C" fn sw_line_lambda_inf(k: f64) -> f64 {
    Host::Line.lambda_inf(k)
}

/// The limiting scaled band value on the tree.
#[no_mangle]
pub extern "C" fn sw_tree_lambda_inf(k: f64) -> f64 {
    Host::Tree.lambda_inf(k)
}

/// Closed-form reflection and transmission data at momentum `k`.
///
/// # Safety
/// `out` must be valid for a write of one `SwScattering`.
#[no_mangle]
pub unsafe extern "C" fn sw_scattering_coefficients(k: f64, out: *mut SwScattering) -> SwStatus {
    if out.is_null() {
        return SwStatus::SwNullArgument;
    }
    guard(|| {
        let c = scattering::scattering_coefficients(k);
        unsafe {
            *out = SwScattering {
                k,
                reflection_re: c.reflection.0,
                reflection_im: c.reflection.1,
                transmission_re: c.transmission.0,
                transmission_im: c.transmission.1,
                effective_length: c.effective_length,
            };
        }
        SwStatus::SwOk
    })
}

/// Span length of the move word `bits` of length `len` (at most 31).
///
/// # Safety
/// `out` must be valid for a write of one `i32`.
#[no_mangle]
pub unsafe extern "C" fn sw_word_span_length(bits: u32, len: u32, out: *mut i32) -> SwStatus {
    if out.is_null() {
        return SwStatus::SwNullArgument;
    }
    if len == 0 || len > 31 {
        return SwStatus::SwInvalidArgument;
    }
    let span = span_of_word(&Word::new(bits, len as usize));
    unsafe { *out = span.length() };
    SwStatus::SwOk
}

/// 1-norm of the localized line state outside `(-n, n)`, computed on a
/// half-offset momentum grid with `grid_nodes` points (even, >= 256).
///
/// # Safety
/// `out` must be valid for a write of one `f64`.
#[no_mangle]
pub unsafe extern "C" fn sw_locality_tail(n: usize, grid_nodes: usize, out: *mut f64) -> SwStatus {
    if out.is_null() {
        return SwStatus::SwNullArgument;
    }
    guard(|| {
        let grid = match MomentumGrid::new(grid_nodes) {
            Ok(g) => g,
            Err(_) => return SwStatus::SwInvalidArgument,
        };
        match line_dynamics::locality_tail(n, &grid) {
            Ok(value) => {
                unsafe { *out = value };
                SwStatus::SwOk
            }
            Err(_) => SwStatus::SwInvalidArgument,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;
    use std::ptr;

    #[test]
    fn version_is_nul_terminated() {
        let ptr = sw_version();
        let s = unsafe { std::ffi::CStr::from_ptr(ptr) }.to_str().unwrap();
        assert_eq!(s, env!("CARGO_PKG_VERSION"));
    }

    #[test]
    fn band_lifecycle_and_values() {
        let mut handle: *mut SwBand = ptr::null_mut();
        assert_eq!(sw_line_band_new(8, &mut handle), SwStatus::SwOk);
        assert!(!handle.is_null());
        let mut value = 0.0f64;
        unsafe {
            assert_eq!(sw_band_lambda(handle, PI / 2.0, &mut value), SwStatus::SwOk);
            assert!(value.abs() < 1e-10);
            assert_eq!(sw_band_derivative(handle, PI / 2.0, 1, &mut value), SwStatus::SwOk);
            assert!((value + 0.8).abs() < 1e-9); // -8/(n+2)
            assert_eq!(
                sw_band_derivative(handle, PI / 2.0, 4, &mut value),
                SwStatus::SwInvalidArgument
            );
            sw_band_free(handle);
        }

        // Odd n is rejected by the median constructor.
        let mut bad: *mut SwBand = ptr::null_mut();
        assert_eq!(sw_line_band_new(3, &mut bad), SwStatus::SwInvalidArgument);
        assert_eq!(sw_line_band_new(8, ptr::null_mut()), SwStatus::SwNullArgument);
    }

    #[test]
    fn tree_band_velocity() {
        let mut handle: *mut SwBand = ptr::null_mut();
        assert_eq!(sw_tree_band_new(8, &mut handle), SwStatus::SwOk);
        let mut value = 0.0;
        unsafe {
            assert_eq!(
                sw_band_derivative(handle, 1.5 * PI, 1, &mut value),
                SwStatus::SwOk
            );
            sw_band_free(handle);
        }
        assert!((value - 8.0 * 2f64.sqrt() / 10.0).abs() < 1e-9);
    }

    #[test]
    fn scattering_struct_roundtrip() {
        let mut out = SwScattering {
            k: 0.0,
            reflection_re: 0.0,
            reflection_im: 0.0,
            transmission_re: 0.0,
            transmission_im: 0.0,
            effective_length: 0.0,
        };
        assert_eq!(unsafe { sw_scattering_coefficients(1.5 * PI, &mut out) }, SwStatus::SwOk);
        let t2 = out.transmission_re.powi(2) + out.transmission_im.powi(2);
        assert!((t2 - 8.0 / 9.0).abs() < 1e-12);
        assert_eq!(
            unsafe { sw_scattering_coefficients(1.0, ptr::null_mut()) },
            SwStatus::SwNullArgument
        );
    }

    #[test]
    fn word_span_and_tail() {
        let mut span = 0i32;
        assert_eq!(unsafe { sw_word_span_length(0b11111, 5, &mut span) }, SwStatus::SwOk);
        assert_eq!(span, 5);
        assert_eq!(unsafe { sw_word_span_length(0b10101, 5, &mut span) }, SwStatus::SwOk);
        assert_eq!(span, 1);
        assert_eq!(
            unsafe { sw_word_span_length(1, 0, &mut span) },
            SwStatus::SwInvalidArgument
        );

        let mut tail = f64::NAN;
        assert_eq!(unsafe { sw_locality_tail(2, 512, &mut tail) }, SwStatus::SwOk);
        assert!(tail < 1e-10);
        assert_eq!(
            unsafe { sw_locality_tail(2, 10, &mut tail) },
            SwStatus::SwInvalidArgument
        );
    }
}
