//! C ABI over the `relnet` crate.
//!
//! Networks are opaque handles created by `relnet_network_*` constructors
//! and released with [`relnet_network_free`]. Fallible functions return a
//! [`RelnetStatus`] and write results through out-pointers; on failure
//! [`relnet_last_error`] returns a message for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use relnet::bat::{exact_reliability, factoring_reliability};
use relnet::estimators::{bat_mcs_estimate, mcs_estimate, required_sample_size};
use relnet::graph::{bridge_distribution, bridge_network, generate_benchmark, parse_network_file};
use relnet::{ArcDistribution, Error, Network};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelnetStatus {
    Ok = 0,
    NullPointer = 1,
    Parse = 2,
    InvalidArgument = 3,
    CapExceeded = 4,
    Internal = 5,
}

/// Opaque network handle.
pub struct RelnetNetwork {
    network: Network,
    distribution: Option<ArcDistribution>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> RelnetStatus {
    match err {
        Error::Parse { .. } => RelnetStatus::Parse,
        Error::CapExceeded { .. } => RelnetStatus::CapExceeded,
        _ => RelnetStatus::InvalidArgument,
    }
}

fn guard<F: FnOnce() -> Result<(), RelnetStatus>>(f: F) -> RelnetStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RelnetStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            RelnetStatus::Internal
        }
    }
}

fn fail(err: Error) -> RelnetStatus {
    set_error(err.to_string());
    status_of(&err)
}

fn null(what: &str) -> RelnetStatus {
    set_error(format!("{what} is null"));
    RelnetStatus::NullPointer
}

unsafe fn network_ref<'a>(net: *const RelnetNetwork) -> Result<&'a RelnetNetwork, RelnetStatus> {
    net.as_ref().ok_or_else(|| null("network"))
}

unsafe fn distribution(net: &RelnetNetwork, probs: *const f64, len: usize) -> Result<ArcDistribution, RelnetStatus> {
    if probs.is_null() {
        return net.distribution.clone().ok_or_else(|| {
            set_error("no probabilities given and the network file has none".into());
            RelnetStatus::InvalidArgument
        });
    }
    let slice = std::slice::from_raw_parts(probs, len);
    ArcDistribution::for_network(&net.network, slice.to_vec()).map_err(fail)
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), RelnetStatus> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

fn boxed(network: Network, distribution: Option<ArcDistribution>) -> *mut RelnetNetwork {
    Box::into_raw(Box::new(RelnetNetwork { network, distribution }))
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn relnet_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn relnet_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses network-file text. Probabilities in the file become the default
/// distribution of the handle.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relnet_network_parse(text: *const c_char, out: *mut *mut RelnetNetwork) -> RelnetStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        let s = CStr::from_ptr(text)
            .to_str()
            .map_err(|_| fail(Error::InvalidArgument("text is not UTF-8".into())))?;
        let file = parse_network_file(s).map_err(fail)?;
        write(out, boxed(file.network, file.distribution))
    })
}

/// The built-in 4-node bridge with its reference probabilities.
#[no_mangle]
pub extern "C" fn relnet_network_bridge() -> *mut RelnetNetwork {
    boxed(bridge_network(), Some(bridge_distribution()))
}

/// Random connected network with `nodes` nodes and `arcs` arcs.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relnet_network_generate(
    nodes: usize,
    arcs: usize,
    seed: u64,
    out: *mut *mut RelnetNetwork,
) -> RelnetStatus {
    guard(|| {
        let net = generate_benchmark(nodes, arcs, seed).map_err(fail)?;
        write(out, boxed(net, None))
    })
}

/// # Safety
/// `net` must come from a `relnet_network_*` constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn relnet_network_free(net: *mut RelnetNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// # Safety
/// `net` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn relnet_network_node_count(net: *const RelnetNetwork) -> usize {
    net.as_ref().map_or(0, |n| n.network.node_count())
}

/// # Safety
/// `net` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn relnet_network_arc_count(net: *const RelnetNetwork) -> usize {
    net.as_ref().map_or(0, |n| n.network.arc_count())
}

/// Exact reliability by enumeration (at most 30 arcs). `probs` may be null
/// to use the handle's default distribution; otherwise it holds `len` values.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn relnet_exact_reliability(
    net: *const RelnetNetwork,
    probs: *const f64,
    len: usize,
    out: *mut f64,
) -> RelnetStatus {
    guard(|| {
        let net = network_ref(net)?;
        let dist = distribution(net, probs, len)?;
        write(out, exact_reliability(&net.network, &dist).map_err(fail)?)
    })
}

/// Exact reliability by arc factoring; no arc-count cap.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn relnet_factoring_reliability(
    net: *const RelnetNetwork,
    probs: *const f64,
    len: usize,
    out: *mut f64,
) -> RelnetStatus {
    guard(|| {
        let net = network_ref(net)?;
        let dist = distribution(net, probs, len)?;
        write(out, factoring_reliability(&net.network, &dist).map_err(fail)?)
    })
}

/// Crude Monte Carlo estimate with `n_sim` samples.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn relnet_mcs_estimate(
    net: *const RelnetNetwork,
    probs: *const f64,
    len: usize,
    n_sim: u64,
    seed: u64,
    out: *mut f64,
) -> RelnetStatus {
    guard(|| {
        let net = network_ref(net)?;
        let dist = distribution(net, probs, len)?;
        write(out, mcs_estimate(&net.network, &dist, n_sim, seed).map_err(fail)?.value)
    })
}

/// BAT-MCS estimate with supervector width `delta`. `total_sims` may be null.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn relnet_bat_mcs_estimate(
    net: *const RelnetNetwork,
    probs: *const f64,
    len: usize,
    delta: usize,
    n_sim: u64,
    seed: u64,
    out: *mut f64,
    total_sims: *mut u64,
) -> RelnetStatus {
    guard(|| {
        let net = network_ref(net)?;
        let dist = distribution(net, probs, len)?;
        let est = bat_mcs_estimate(&net.network, &dist, delta, n_sim, seed).map_err(fail)?;
        if !total_sims.is_null() {
            total_sims.write(est.total_sims);
        }
        write(out, est.value)
    })
}

/// Smallest sample size meeting relative error `epsilon` at normal quantile `z`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relnet_required_sample_size(
    reliability: f64,
    epsilon: f64,
    z: f64,
    out: *mut u64,
) -> RelnetStatus {
    guard(|| write(out, required_sample_size(reliability, epsilon, z).map_err(fail)?))
}
