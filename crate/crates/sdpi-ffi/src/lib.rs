//! C ABI for `sdpi`.
//!
//! Noise models and input distributions cross the boundary as opaque
//! handles created by `sdpi_*_new`-style constructors and released with the
//! matching `*_free`. Every fallible call returns an [`SdpiStatus`] and
//! writes results through out-pointers; on failure the message is available
//! from [`sdpi_last_error`] on the same thread. Panics never unwind into C.

#![deny(unsafe_op_in_unsafe_fn)]
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sdpi::channels::{mi_additive, AdditiveChannel, DmcKernel, NoiseModel};
use sdpi::contraction::{alpha_star, eta_tv_amplitude, theta_shift};
use sdpi::deconv::ks_deconv_solve;
use sdpi::fi_curves::{fi_bsc, fi_erasure, mrs_gerber};
use sdpi::gaussian_sdpi::{gd_lower, ln_gh_lower, t_lower_from_ln_gap};
use sdpi::general_sdpi::general_diag_bound;
use sdpi::oracle::fi_bruteforce_dmc;
use sdpi::prob::{binary_entropy, q_function, DiscretePmf};
use sdpi::Error;

/// Version of this C interface; bumped on any incompatible change.
pub const SDPI_ABI_VERSION: u32 = 1;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpiStatus {
    Ok = 0,
    Domain = 1,
    Shape = 2,
    Truncation = 3,
    NoSolution = 4,
    ProfileFailure = 5,
    Precondition = 6,
    Budget = 7,
    Parse = 8,
    Io = 9,
    NullPointer = 10,
    Panic = 11,
}

impl From<&Error> for SdpiStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Domain(_) => SdpiStatus::Domain,
            Error::Shape(_) => SdpiStatus::Shape,
            Error::Truncation { .. } => SdpiStatus::Truncation,
            Error::NoSolution(_) => SdpiStatus::NoSolution,
            Error::ProfileFailure(_) => SdpiStatus::ProfileFailure,
            Error::Precondition(_) => SdpiStatus::Precondition,
            Error::Budget { .. } => SdpiStatus::Budget,
            Error::Parse(_) => SdpiStatus::Parse,
            Error::Io(_) | Error::Csv(_) => SdpiStatus::Io,
        }
    }
}

/// Opaque noise model.
pub struct SdpiNoise(NoiseModel);

/// Opaque finitely supported distribution.
pub struct SdpiPmf(DiscretePmf);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(SdpiStatus);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        set_error(e.to_string());
        Fail((&e).into())
    }
}

fn null() -> Fail {
    set_error("null pointer argument".into());
    Fail(SdpiStatus::NullPointer)
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SdpiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SdpiStatus::Ok,
        Ok(Err(Fail(s))) => s,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            SdpiStatus::Panic
        }
    }
}

unsafe fn write<T>(out: *mut T, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null());
    }
    // SAFETY: non-null and, per the API contract, valid for writes.
    unsafe { out.write(v) };
    Ok(())
}

unsafe fn noise_ref<'a>(h: *const SdpiNoise) -> Result<&'a NoiseModel, Fail> {
    // SAFETY: the caller passes a handle from an `sdpi_noise_*` constructor or null.
    unsafe { h.as_ref() }.map(|n| &n.0).ok_or_else(null)
}

unsafe fn slice<'a>(p: *const f64, n: usize) -> Result<&'a [f64], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null());
    }
    // SAFETY: non-null and, per the API contract, valid for `n` reads.
    Ok(unsafe { std::slice::from_raw_parts(p, n) })
}

/// Returns [`SDPI_ABI_VERSION`].
#[no_mangle]
pub extern "C" fn sdpi_abi_version() -> u32 {
    SDPI_ABI_VERSION
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sdpi_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Clears the last error message.
#[no_mangle]
pub extern "C" fn sdpi_clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn box_noise(n: NoiseModel) -> *mut SdpiNoise {
    Box::into_raw(Box::new(SdpiNoise(n)))
}

/// Gaussian noise `N(0, sigma²)`.
#[no_mangle]
pub unsafe extern "C" fn sdpi_noise_gaussian(sigma: f64, out: *mut *mut SdpiNoise) -> SdpiStatus {
    guard(|| unsafe { write(out, box_noise(NoiseModel::gaussian(sigma)?)) })
}

/// Uniform noise on `[lo, hi]`.
#[no_mangle]
pub unsafe extern "C" fn sdpi_noise_uniform(lo: f64, hi: f64, out: *mut *mut SdpiNoise) -> SdpiStatus {
    guard(|| unsafe { write(out, box_noise(NoiseModel::uniform(lo, hi)?)) })
}

/// Laplace noise with the given scale.
#[no_mangle]
pub unsafe extern "C" fn sdpi_noise_laplace(scale: f64, out: *mut *mut SdpiNoise) -> SdpiStatus {
    guard(|| unsafe { write(out, box_noise(NoiseModel::laplace(scale)?)) })
}

/// Noise from a spec string such as `gaussian:1`, `uniform:0,1`,
/// `laplace:0.5` or `grid:path.csv`.
#[no_mangle]
pub unsafe extern "C" fn sdpi_noise_parse(spec: *const c_char, out: *mut *mut SdpiNoise) -> SdpiStatus {
    guard(|| {
        if spec.is_null() {
            return Err(null());
        }
        // SAFETY: non-null and, per the API contract, NUL-terminated.
        let s = unsafe { CStr::from_ptr(spec) }
            .to_str()
            .map_err(|_| Fail::from(Error::Parse("noise spec is not UTF-8".into())))?;
        unsafe { write(out, box_noise(NoiseModel::parse(s)?)) }
    })
}

/// Releases a noise handle; null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn sdpi_noise_free(h: *mut SdpiNoise) {
    if !h.is_null() {
        // SAFETY: created by `Box::into_raw` in a constructor and not yet freed.
        drop(unsafe { Box::from_raw(h) });
    }
}

/// Distribution with `n` strictly increasing atoms and weights summing to 1.
#[no_mangle]
pub unsafe extern "C" fn sdpi_pmf_new(atoms: *const f64, weights: *const f64, n: usize, out: *mut *mut SdpiPmf) -> SdpiStatus {
    guard(|| {
        let a = unsafe { slice(atoms, n)? }.to_vec();
        let w = unsafe { slice(weights, n)? }.to_vec();
        let p = DiscretePmf::new(a, w)?;
        unsafe { write(out, Box::into_raw(Box::new(SdpiPmf(p)))) }
    })
}

/// Releases a distribution handle; null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn sdpi_pmf_free(h: *mut SdpiPmf) {
    if !h.is_null() {
        // SAFETY: created by `Box::into_raw` in `sdpi_pmf_new` and not yet freed.
        drop(unsafe { Box::from_raw(h) });
    }
}

/// `h_b(p)` in nats.
#[no_mangle]
pub unsafe extern "C" fn sdpi_binary_entropy(p: f64, out: *mut f64) -> SdpiStatus {
    guard(|| unsafe { write(out, binary_entropy(p)?) })
}

/// Gaussian tail probability.
#[no_mangle]
pub extern "C" fn sdpi_q_function(x: f64) -> f64 {
    q_function(x)
}

#[no_mangle]
pub unsafe extern "C" fn sdpi_mrs_gerber(x: f64, delta: f64, out: *mut f64) -> SdpiStatus {
    guard(|| unsafe { write(out, mrs_gerber(x, delta)?) })
}

/// `F_I(t)` of the binary symmetric channel.
#[no_mangle]
pub unsafe extern "C" fn sdpi_fi_bsc(t: f64, delta: f64, out: *mut f64) -> SdpiStatus {
    guard(|| unsafe { write(out, fi_bsc(t, delta)?) })
}

/// `F_I(t)` of the erasure channel on an alphabet of size `k`.
#[no_mangle]
pub unsafe extern "C" fn sdpi_fi_erasure(t: f64, alpha: f64, k: usize, out: *mut f64) -> SdpiStatus {
    guard(|| unsafe { write(out, fi_erasure(t, alpha, k)?) })
}

/// Lattice search lower bound on `F_I(t)` for a row-major `rows × cols`
/// kernel.
#[no_mangle]
pub unsafe extern "C" fn sdpi_fi_bruteforce_dmc(
    kernel: *const f64,
    rows: usize,
    cols: usize,
    t: f64,
    w_size: usize,
    resolution: usize,
    out: *mut f64,
) -> SdpiStatus {
    guard(|| {
        let data = unsafe { slice(kernel, rows.saturating_mul(cols))? }.to_vec();
        let k = DmcKernel::new(rows, cols, data)?;
        unsafe { write(out, fi_bruteforce_dmc(&k, t, w_size, resolution)?) }
    })
}

/// Diagonal gap lower bound for `Y = √γ X + N(0,1)`, `E X² <= 1`.
#[no_mangle]
pub unsafe extern "C" fn sdpi_gd_lower(t: f64, gamma: f64, out: *mut f64) -> SdpiStatus {
    guard(|| unsafe { write(out, gd_lower(t, gamma)?) })
}

/// Lower bound on `I(W;X)` when the capacity gap is at most `exp(-ln_inv_eps)`.
#[no_mangle]
pub unsafe extern "C" fn sdpi_t_lower_from_ln_gap(ln_inv_eps: f64, gamma: f64, out: *mut f64) -> SdpiStatus {
    guard(|| unsafe { write(out, t_lower_from_ln_gap(ln_inv_eps, gamma)?) })
}

/// Logarithm of the horizontal gap lower bound.
#[no_mangle]
pub unsafe extern "C" fn sdpi_ln_gh_lower(t: f64, gamma: f64, out: *mut f64) -> SdpiStatus {
    guard(|| unsafe { write(out, ln_gh_lower(t, gamma)?) })
}

/// `d_TV(P_Z, P_{Z+delta})`.
#[no_mangle]
pub unsafe extern "C" fn sdpi_theta_shift(noise: *const SdpiNoise, delta: f64, out: *mut f64) -> SdpiStatus {
    guard(|| unsafe { write(out, theta_shift(noise_ref(noise)?, delta)?) })
}

/// Amplitude-constrained TV contraction coefficient.
#[no_mangle]
pub unsafe extern "C" fn sdpi_eta_tv_amplitude(noise: *const SdpiNoise, a: f64, out: *mut f64) -> SdpiStatus {
    guard(|| unsafe { write(out, eta_tv_amplitude(noise_ref(noise)?, a)?) })
}

#[no_mangle]
pub unsafe extern "C" fn sdpi_alpha_star(noise: *const SdpiNoise, out: *mut f64) -> SdpiStatus {
    guard(|| {
        let r = alpha_star(unsafe { noise_ref(noise)? })?;
        unsafe { write(out, r.alpha_star.unwrap_or(f64::NAN)) }
    })
}

/// `I(X; scale·X + Z)` in nats.
#[no_mangle]
pub unsafe extern "C" fn sdpi_mi_additive(input: *const SdpiPmf, noise: *const SdpiNoise, scale: f64, out: *mut f64) -> SdpiStatus {
    guard(|| {
        // SAFETY: the caller passes a handle from `sdpi_pmf_new` or null.
        let x = unsafe { input.as_ref() }.ok_or_else(null)?;
        let ch = AdditiveChannel::new(unsafe { noise_ref(noise)? }.clone(), scale)?;
        unsafe { write(out, mi_additive(&x.0, &ch)?) }
    })
}

/// General-noise diagonal gap; `contracting` receives 1 or 0.
#[no_mangle]
pub unsafe extern "C" fn sdpi_general_diag_bound(
    t: f64,
    noise: *const SdpiNoise,
    p: f64,
    gamma: f64,
    value: *mut f64,
    contracting: *mut c_int,
) -> SdpiStatus {
    guard(|| {
        let r = general_diag_bound(t, unsafe { noise_ref(noise)? }, p, gamma)?;
        unsafe {
            write(value, r.value)?;
            write(contracting, c_int::from(r.contracting))
        }
    })
}

/// KS bound from the TV distance after convolution with `noise`.
#[no_mangle]
pub unsafe extern "C" fn sdpi_ks_deconv_solve(
    noise: *const SdpiNoise,
    d_tv: f64,
    m2: f64,
    first_moments: f64,
    bound: *mut f64,
    cutoff: *mut f64,
) -> SdpiStatus {
    guard(|| {
        let r = ks_deconv_solve(unsafe { noise_ref(noise)? }, d_tv, m2, first_moments)?;
        unsafe {
            write(bound, r.bound)?;
            write(cutoff, r.t)
        }
    })
}
