//! C ABI over the sidebandit simulator.
//!
//! Handles are opaque heap pointers created and destroyed by this library;
//! every entry point returns an [`SbStatus`] and writes results through out
//! pointers. All functions are panic-safe: a panic inside the library is
//! caught and surfaced as [`SbStatus::Panic`] instead of unwinding across
//! the ABI boundary.
//!
//! The exposed slice of the API is the self-contained pipeline: build an
//! environment, log an offline dataset, run either the no-side-information
//! baseline or the online-estimation learner, and read back regret traces.

use sidebandit::bandit::{
    run_doubling_oful, run_projected_oful, ConfidenceParams, CrossSource, DoublingMode,
    RegretTrace, SideInformation,
};
use sidebandit::env::{
    stream_rng, streams, BanditEnvironment, EnvError, OfflineDataset, SimStreams,
};
use sidebandit::estimation::offline_least_squares_narrowed;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

/// Result of every ABI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SbStatus {
    /// Success.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// An argument was out of range or inconsistent.
    InvalidArgument = 2,
    /// The simulation or estimation failed; see the argument constraints.
    RuntimeError = 3,
    /// A file could not be read or written.
    IoError = 4,
    /// An internal panic was caught at the ABI boundary.
    Panic = 5,
}

/// Opaque bandit environment handle.
pub struct SbEnv {
    inner: BanditEnvironment,
}

/// Opaque offline dataset handle.
pub struct SbDataset {
    inner: OfflineDataset,
}

/// Opaque regret trace handle.
pub struct SbTrace {
    inner: RegretTrace,
}

fn guarded(f: impl FnOnce() -> SbStatus) -> SbStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(SbStatus::Panic)
}

fn env_status(e: &EnvError) -> SbStatus {
    match e {
        EnvError::Io { .. } | EnvError::BadFile { .. } => SbStatus::IoError,
        EnvError::EmptyEnvironment { .. }
        | EnvError::BadNoise { .. }
        | EnvError::BadVisibleDim { .. }
        | EnvError::EmptyDataset { .. } => SbStatus::InvalidArgument,
        _ => SbStatus::RuntimeError,
    }
}

/// Confidence parameters matching the simulator defaults: unit context and
/// weight bounds, ridge 1, confidence level 0.01.
fn default_params(noise_sd: f64, alpha: f64, horizon: usize) -> ConfidenceParams {
    ConfidenceParams {
        ridge: 1.0,
        delta: 0.01,
        noise_sd,
        context_bound: 1.0,
        weight_bound: 1.0,
        offline_context_bound: 1.0,
        offline_weight_bound: 1.0,
        width_scale: alpha,
        cross_sqrt_coeff: 0.0,
        cross_inv_coeff: 0.0,
        horizon: horizon.max(1),
    }
}

/// Creates an environment with seeded weights and behavior policy.
///
/// # Safety
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn sb_env_create(
    dim: usize,
    n_arms: usize,
    noise_sd: f64,
    seed: u64,
    out: *mut *mut SbEnv,
) -> SbStatus {
    guarded(|| {
        if out.is_null() {
            return SbStatus::NullArgument;
        }
        match BanditEnvironment::generate(dim, n_arms, noise_sd, seed) {
            Ok(env) => {
                unsafe { *out = Box::into_raw(Box::new(SbEnv { inner: env })) };
                SbStatus::Ok
            }
            Err(e) => env_status(&e),
        }
    })
}

/// Releases an environment; a null handle is ignored.
///
/// # Safety
/// `env` must be null or a pointer returned by [`sb_env_create`] that has
/// not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn sb_env_free(env: *mut SbEnv) {
    if !env.is_null() {
        drop(unsafe { Box::from_raw(env) });
    }
}

/// Reads the context dimension.
///
/// # Safety
/// `env` must be a live environment handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_env_dim(env: *const SbEnv, out: *mut usize) -> SbStatus {
    guarded(|| {
        if env.is_null() || out.is_null() {
            return SbStatus::NullArgument;
        }
        unsafe { *out = (*env).inner.dim() };
        SbStatus::Ok
    })
}

/// Reads the number of arms.
///
/// # Safety
/// `env` must be a live environment handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_env_arms(env: *const SbEnv, out: *mut usize) -> SbStatus {
    guarded(|| {
        if env.is_null() || out.is_null() {
            return SbStatus::NullArgument;
        }
        unsafe { *out = (*env).inner.n_arms() };
        SbStatus::Ok
    })
}

/// Logs `rows` behavior-policy rounds, keeping the first `visible_dim`
/// context coordinates. Fails with `RuntimeError` if some arm is never
/// sampled; retry with another seed.
///
/// # Safety
/// `env` must be a live environment handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_dataset_generate(
    env: *const SbEnv,
    visible_dim: usize,
    rows: usize,
    seed: u64,
    out: *mut *mut SbDataset,
) -> SbStatus {
    guarded(|| {
        if env.is_null() || out.is_null() {
            return SbStatus::NullArgument;
        }
        let mut rng = stream_rng(seed, streams::OFFLINE);
        match unsafe { &(*env).inner }.generate_offline_dataset(visible_dim, rows, &mut rng) {
            Ok(data) => {
                unsafe { *out = Box::into_raw(Box::new(SbDataset { inner: data })) };
                SbStatus::Ok
            }
            Err(e) => env_status(&e),
        }
    })
}

/// Releases a dataset; a null handle is ignored.
///
/// # Safety
/// `ds` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn sb_dataset_free(ds: *mut SbDataset) {
    if !ds.is_null() {
        drop(unsafe { Box::from_raw(ds) });
    }
}

/// Reads the number of logged rows.
///
/// # Safety
/// `ds` must be a live dataset handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_dataset_rows(ds: *const SbDataset, out: *mut usize) -> SbStatus {
    guarded(|| {
        if ds.is_null() || out.is_null() {
            return SbStatus::NullArgument;
        }
        unsafe { *out = (*ds).inner.len() };
        SbStatus::Ok
    })
}

/// Writes a dataset to `path` in the binary log format.
///
/// # Safety
/// `ds` must be a live dataset handle; `path` must be a nul-terminated
/// string.
#[no_mangle]
pub unsafe extern "C" fn sb_dataset_save(ds: *const SbDataset, path: *const c_char) -> SbStatus {
    guarded(|| {
        if ds.is_null() || path.is_null() {
            return SbStatus::NullArgument;
        }
        let path = match unsafe { CStr::from_ptr(path) }.to_str() {
            Ok(p) => p,
            Err(_) => return SbStatus::InvalidArgument,
        };
        match unsafe { &(*ds).inner }.write_to(Path::new(path)) {
            Ok(()) => SbStatus::Ok,
            Err(e) => env_status(&e),
        }
    })
}

/// Loads a dataset previously written by [`sb_dataset_save`].
///
/// # Safety
/// `path` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_dataset_load(
    path: *const c_char,
    out: *mut *mut SbDataset,
) -> SbStatus {
    guarded(|| {
        if path.is_null() || out.is_null() {
            return SbStatus::NullArgument;
        }
        let path = match unsafe { CStr::from_ptr(path) }.to_str() {
            Ok(p) => p,
            Err(_) => return SbStatus::InvalidArgument,
        };
        match OfflineDataset::read_from(Path::new(path)) {
            Ok(data) => {
                unsafe { *out = Box::into_raw(Box::new(SbDataset { inner: data })) };
                SbStatus::Ok
            }
            Err(e) => env_status(&e),
        }
    })
}

/// Runs the no-side-information optimistic baseline for `horizon` rounds.
///
/// # Safety
/// `env` must be a live environment handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_run_baseline(
    env: *const SbEnv,
    alpha: f64,
    horizon: usize,
    seed: u64,
    out: *mut *mut SbTrace,
) -> SbStatus {
    guarded(|| {
        if env.is_null() || out.is_null() {
            return SbStatus::NullArgument;
        }
        let env = unsafe { &(*env).inner };
        let params = default_params(env.noise_sd(), alpha, horizon);
        let mut streams = SimStreams::for_seed(seed);
        match run_projected_oful(env, &SideInformation::None, &params, horizon, &mut streams) {
            Ok(trace) => {
                unsafe { *out = Box::into_raw(Box::new(SbTrace { inner: trace })) };
                SbStatus::Ok
            }
            Err(_) => SbStatus::RuntimeError,
        }
    })
}

/// Runs the online-estimation learner: per-arm regressions on the first
/// `visible_dim` dataset coordinates, cross moments re-estimated from
/// behavior policy queries on a doubling schedule.
///
/// # Safety
/// `env` and `ds` must be live handles from this library; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn sb_run_estimated(
    env: *const SbEnv,
    ds: *const SbDataset,
    visible_dim: usize,
    alpha: f64,
    horizon: usize,
    seed: u64,
    out: *mut *mut SbTrace,
) -> SbStatus {
    guarded(|| {
        if env.is_null() || ds.is_null() || out.is_null() {
            return SbStatus::NullArgument;
        }
        let env = unsafe { &(*env).inner };
        let data = unsafe { &(*ds).inner };
        if visible_dim == 0 || visible_dim >= env.dim() {
            return SbStatus::InvalidArgument;
        }
        let side = match offline_least_squares_narrowed(data, visible_dim) {
            Ok(side) => side,
            Err(_) => return SbStatus::RuntimeError,
        };
        let params = default_params(env.noise_sd(), alpha, horizon);
        let mut streams = SimStreams::for_seed(seed);
        match run_doubling_oful(
            env,
            &side,
            &params,
            horizon,
            DoublingMode::Faithful,
            &CrossSource::Queries,
            &mut streams,
        ) {
            Ok(trace) => {
                unsafe { *out = Box::into_raw(Box::new(SbTrace { inner: trace })) };
                SbStatus::Ok
            }
            Err(_) => SbStatus::RuntimeError,
        }
    })
}

/// Releases a trace; a null handle is ignored.
///
/// # Safety
/// `trace` must be null or a live trace handle.
#[no_mangle]
pub unsafe extern "C" fn sb_trace_free(trace: *mut SbTrace) {
    if !trace.is_null() {
        drop(unsafe { Box::from_raw(trace) });
    }
}

/// Reads the number of rounds in a trace.
///
/// # Safety
/// `trace` must be a live trace handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_trace_len(trace: *const SbTrace, out: *mut usize) -> SbStatus {
    guarded(|| {
        if trace.is_null() || out.is_null() {
            return SbStatus::NullArgument;
        }
        unsafe { *out = (*trace).inner.len() };
        SbStatus::Ok
    })
}

/// Reads the final cumulative regret.
///
/// # Safety
/// `trace` must be a live trace handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_trace_total_regret(trace: *const SbTrace, out: *mut f64) -> SbStatus {
    guarded(|| {
        if trace.is_null() || out.is_null() {
            return SbStatus::NullArgument;
        }
        unsafe { *out = (*trace).inner.final_cum() };
        SbStatus::Ok
    })
}

/// Copies per-round regrets into caller-owned buffers. Either destination
/// may be null to skip it; a non-null destination must hold at least
/// `capacity >= len` values.
///
/// # Safety
/// `trace` must be a live trace handle; non-null destinations must point to
/// at least `capacity` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn sb_trace_copy(
    trace: *const SbTrace,
    inst_out: *mut f64,
    cum_out: *mut f64,
    capacity: usize,
) -> SbStatus {
    guarded(|| {
        if trace.is_null() {
            return SbStatus::NullArgument;
        }
        let trace = unsafe { &(*trace).inner };
        if capacity < trace.len() {
            return SbStatus::InvalidArgument;
        }
        if !inst_out.is_null() {
            unsafe { std::ptr::copy_nonoverlapping(trace.inst().as_ptr(), inst_out, trace.len()) };
        }
        if !cum_out.is_null() {
            unsafe { std::ptr::copy_nonoverlapping(trace.cum().as_ptr(), cum_out, trace.len()) };
        }
        SbStatus::Ok
    })
}

/// Static name for a status code, always a valid nul-terminated string.
#[no_mangle]
pub extern "C" fn sb_status_name(status: SbStatus) -> *const c_char {
    let name: &'static [u8] = match status {
        SbStatus::Ok => b"ok\0",
        SbStatus::NullArgument => b"null argument\0",
        SbStatus::InvalidArgument => b"invalid argument\0",
        SbStatus::RuntimeError => b"runtime error\0",
        SbStatus::IoError => b"io error\0",
        SbStatus::Panic => b"panic\0",
    };
    name.as_ptr() as *const c_char
}
