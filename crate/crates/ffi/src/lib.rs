//! C interface to the dyadmnar sampler.
//!
//! Panels and chains are handed out as opaque pointers that the caller owns
//! and must release with the matching `_free` function. Every fallible entry
//! point returns a [`DyadmnarStatus`]; the message for the most recent failure
//! on the calling thread is available from [`dyadmnar_last_error`].

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use libc::c_char;

use dyadmnar::io::{parse_panel, RunConfig};
use dyadmnar::sim::{generate_dataset, SimDesign, Variant};
use dyadmnar::{run_chain, ChainOutput, DyadPanel, Error};

/// Opaque panel handle.
pub struct DyadmnarPanel {
    panel: DyadPanel,
}

/// Opaque handle to a finished chain.
pub struct DyadmnarChain {
    output: ChainOutput,
    names: Vec<CString>,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DyadmnarStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Panel = 4,
    Config = 5,
    Sampler = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DyadmnarVariant {
    A = 0,
    B = 1,
}

/// Posterior summary of one parameter.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DyadmnarSummary {
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q975: f64,
    pub ess: f64,
    pub mcse: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(DyadmnarStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let status = match &e {
            Error::Io(_) => DyadmnarStatus::Io,
            Error::InvalidPanel(_)
            | Error::NonMonotone { .. }
            | Error::MissingBaseline { .. }
            | Error::MissingCovariate { .. }
            | Error::Csv(_) => DyadmnarStatus::Panel,
            Error::Config(_)
            | Error::Json(_)
            | Error::ImproperPrior(_)
            | Error::UnsupportedOrder(_)
            | Error::Domain(_) => DyadmnarStatus::Config,
            _ => DyadmnarStatus::Sampler,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard<F>(f: F) -> DyadmnarStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DyadmnarStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_last_error(format!("panic: {msg}"));
            DyadmnarStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(DyadmnarStatus::NullPointer, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        Failure(
            DyadmnarStatus::InvalidArgument,
            format!("{what} is not valid UTF-8"),
        )
    })
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message describing the last failure on this thread, or NULL if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dyadmnar_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dyadmnar_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Reads a long-format panel CSV (`dyad_id,member,time,y[,covariates...]`).
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn dyadmnar_panel_read_csv(
    path: *const c_char,
    out: *mut *mut DyadmnarPanel,
) -> DyadmnarStatus {
    guard(|| {
        let path = c_str(path, "path")?;
        let panel = parse_panel(path)?;
        write_out(out, DyadmnarPanel { panel })
    })
}

/// Generates one replicate of a built-in simulation design.
///
/// # Safety
/// `out` must be a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn dyadmnar_panel_simulate(
    variant: DyadmnarVariant,
    n_dyads: usize,
    seed: u64,
    replicate: u64,
    out: *mut *mut DyadmnarPanel,
) -> DyadmnarStatus {
    guard(|| {
        if n_dyads == 0 {
            return Err(Failure(
                DyadmnarStatus::InvalidArgument,
                "n_dyads must be positive".into(),
            ));
        }
        let mut design = SimDesign::new(match variant {
            DyadmnarVariant::A => Variant::A,
            DyadmnarVariant::B => Variant::B,
        });
        design.n_dyads = n_dyads;
        design.seed = seed;
        design.validate()?;
        let panel = generate_dataset(&design, replicate).panel;
        write_out(out, DyadmnarPanel { panel })
    })
}

/// Number of dyads, or 0 for a NULL handle.
///
/// # Safety
/// `panel` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dyadmnar_panel_n_dyads(panel: *const DyadmnarPanel) -> usize {
    panel.as_ref().map_or(0, |p| p.panel.n_dyads())
}

/// Number of measurement waves, or 0 for a NULL handle.
///
/// # Safety
/// `panel` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dyadmnar_panel_n_times(panel: *const DyadmnarPanel) -> usize {
    panel.as_ref().map_or(0, |p| p.panel.n_times())
}

/// # Safety
/// `panel` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dyadmnar_panel_free(panel: *mut DyadmnarPanel) {
    if !panel.is_null() {
        drop(Box::from_raw(panel));
    }
}

/// Fits the selection model. `config_json` may be NULL for defaults; otherwise
/// it uses the same schema as the command-line `--config` file.
///
/// # Safety
/// `panel` must be a live handle, `config_json` NULL or NUL-terminated, and
/// `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn dyadmnar_fit(
    panel: *const DyadmnarPanel,
    config_json: *const c_char,
    out: *mut *mut DyadmnarChain,
) -> DyadmnarStatus {
    guard(|| {
        let panel = borrow(panel, "panel")?;
        let cfg = if config_json.is_null() {
            RunConfig::default()
        } else {
            RunConfig::from_json(c_str(config_json, "config_json")?)?
        };
        let (selected, model) = cfg.resolve(&panel.panel)?;
        let output = run_chain(&selected, &model, &cfg.sampler_config()?)?;
        let names = output
            .names
            .iter()
            .map(|n| CString::new(n.as_str()).unwrap_or_default())
            .collect();
        write_out(out, DyadmnarChain { output, names })
    })
}

/// # Safety
/// `chain` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dyadmnar_chain_n_params(chain: *const DyadmnarChain) -> usize {
    chain.as_ref().map_or(0, |c| c.names.len())
}

/// Number of retained draws.
///
/// # Safety
/// `chain` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dyadmnar_chain_n_draws(chain: *const DyadmnarChain) -> usize {
    chain.as_ref().map_or(0, |c| c.output.draws.len())
}

/// Name of parameter `index`, owned by the chain. NULL when out of range.
///
/// # Safety
/// `chain` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dyadmnar_chain_param_name(
    chain: *const DyadmnarChain,
    index: usize,
) -> *const c_char {
    chain
        .as_ref()
        .and_then(|c| c.names.get(index))
        .map_or(ptr::null(), |n| n.as_ptr())
}

/// # Safety
/// `chain` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dyadmnar_chain_summary(
    chain: *const DyadmnarChain,
    index: usize,
    out: *mut DyadmnarSummary,
) -> DyadmnarStatus {
    guard(|| {
        let chain = borrow(chain, "chain")?;
        let out = out.as_mut().ok_or_else(|| null("output pointer"))?;
        let s = chain.output.summaries.get(index).ok_or_else(|| {
            Failure(
                DyadmnarStatus::InvalidArgument,
                format!("parameter index {index} out of range"),
            )
        })?;
        *out = DyadmnarSummary {
            mean: s.mean,
            sd: s.sd,
            q025: s.q025,
            q975: s.q975,
            ess: s.ess,
            mcse: s.mcse,
        };
        Ok(())
    })
}

/// Copies the retained draws of parameter `index` into `buf`, which must hold
/// at least `dyadmnar_chain_n_draws(chain)` values.
///
/// # Safety
/// `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn dyadmnar_chain_draws(
    chain: *const DyadmnarChain,
    index: usize,
    buf: *mut f64,
    len: usize,
) -> DyadmnarStatus {
    guard(|| {
        let chain = borrow(chain, "chain")?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        if index >= chain.names.len() {
            return Err(Failure(
                DyadmnarStatus::InvalidArgument,
                format!("parameter index {index} out of range"),
            ));
        }
        let n = chain.output.draws.len();
        if len < n {
            return Err(Failure(
                DyadmnarStatus::InvalidArgument,
                format!("buffer holds {len} values but the chain has {n} draws"),
            ));
        }
        let dst = std::slice::from_raw_parts_mut(buf, n);
        for (d, row) in dst.iter_mut().zip(&chain.output.draws) {
            *d = row[index];
        }
        Ok(())
    })
}

/// Summary JSON for the whole chain. Release with [`dyadmnar_string_free`].
///
/// # Safety
/// `chain` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dyadmnar_chain_summary_json(
    chain: *const DyadmnarChain,
    out: *mut *mut c_char,
) -> DyadmnarStatus {
    guard(|| {
        let chain = borrow(chain, "chain")?;
        let out = out.as_mut().ok_or_else(|| null("output pointer"))?;
        let json = chain.output.summary_json()?;
        *out = CString::new(json)
            .map_err(|_| Failure(DyadmnarStatus::Sampler, "summary contains NUL".into()))?
            .into_raw();
        Ok(())
    })
}

/// # Safety
/// `chain` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dyadmnar_chain_free(chain: *mut DyadmnarChain) {
    if !chain.is_null() {
        drop(Box::from_raw(chain));
    }
}

/// # Safety
/// `s` must be NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dyadmnar_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
