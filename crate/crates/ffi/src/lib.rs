//! C ABI over `percspeed`.
//!
//! Every function returns a [`PsStatus`] and writes results through out
//! pointers. Laws and models are opaque heap handles freed with
//! `ps_law_free` / `ps_model_free`. After a non-OK status,
//! `ps_last_error_message` describes the failure on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use percspeed::offspring::{parse_law, OffspringLaw};
use percspeed::percolation::PercolatedModel;
use percspeed::simulate::{estimate_speed, simulate_pipes, WalkEstimate};
use percspeed::speed::{backbone_speed, check_condition, cluster_speed, eq1_speed, pipes_speed};
use percspeed::Error;

/// Offspring law handle.
pub struct PsLaw(OffspringLaw);

/// Offspring law plus retention probability, with the extinction
/// probability already solved.
pub struct PsModel(PercolatedModel);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    /// Offspring mean at most 1, or retention at or below 1/m.
    Subcritical = 4,
    /// The law puts all mass on one child.
    Degenerate = 5,
    /// Quantity undefined for this model (no bushes, impossible degree, p_0 > 0).
    Undefined = 6,
    Convergence = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PsWalkEstimate {
    pub speed_hat: f64,
    pub std_error: f64,
    pub replicas: u64,
    pub horizon: u64,
    pub seed: u64,
    pub p: f64,
}

impl From<&WalkEstimate> for PsWalkEstimate {
    fn from(e: &WalkEstimate) -> Self {
        PsWalkEstimate {
            speed_hat: e.speed_hat,
            std_error: e.std_error,
            replicas: e.replicas,
            horizon: e.horizon,
            seed: e.seed,
            p: e.p,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> PsStatus {
    match err {
        Error::Parse { .. } => PsStatus::Parse,
        Error::InvalidArgument { .. } => PsStatus::InvalidArgument,
        Error::DegenerateLaw => PsStatus::Degenerate,
        Error::NotSupercritical { .. } | Error::BelowCritical { .. } => PsStatus::Subcritical,
        Error::ImpossibleDegree { .. } | Error::NoBushes | Error::PositiveP0 { .. } => PsStatus::Undefined,
        Error::NoConvergence { .. }
        | Error::Critical { .. }
        | Error::RouteMismatch { .. }
        | Error::RejectionCap { .. }
        | Error::ArenaFull { .. } => PsStatus::Convergence,
    }
}

struct Fail(PsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(PsStatus::NullPointer, format!("{what} is null"))
}

/// Runs `body`, converting errors and panics into a status.
fn guard(body: impl FnOnce() -> Result<(), Fail>) -> PsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            PsStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            PsStatus::Panic
        }
    }
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

unsafe fn law_ref<'a>(law: *const PsLaw) -> Result<&'a OffspringLaw, Fail> {
    law.as_ref().map(|l| &l.0).ok_or_else(|| null("law"))
}

unsafe fn model_ref<'a>(model: *const PsModel) -> Result<&'a PercolatedModel, Fail> {
    model.as_ref().map(|m| &m.0).ok_or_else(|| null("model"))
}

/// Message for the last failed call on this thread, or NULL after a
/// successful one. Valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn ps_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses a law such as `"pmf:0,0,1"`, `"geometric:0.5"`, `"poisson:2"` or
/// `"binomial:3,0.8"`.
///
/// # Safety
/// `spec` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_law_parse(spec: *const c_char, out: *mut *mut PsLaw) -> PsStatus {
    guard(|| {
        if spec.is_null() {
            return Err(null("spec"));
        }
        let text = CStr::from_ptr(spec)
            .to_str()
            .map_err(|_| Fail(PsStatus::Parse, "spec is not UTF-8".into()))?;
        let law = parse_law(text)?;
        write(out, Box::into_raw(Box::new(PsLaw(law))))
    })
}

/// # Safety
/// `law` must come from `ps_law_parse` and not be freed twice. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn ps_law_free(law: *mut PsLaw) {
    if !law.is_null() {
        drop(Box::from_raw(law));
    }
}

/// # Safety
/// `law` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_law_mean(law: *const PsLaw, out: *mut f64) -> PsStatus {
    guard(|| write(out, law_ref(law)?.mean()))
}

/// `order`-th derivative of the generating function at `s` in [0, 1].
///
/// # Safety
/// `law` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_law_pgf_derivative(
    law: *const PsLaw,
    s: f64,
    order: usize,
    out: *mut f64,
) -> PsStatus {
    guard(|| write(out, law_ref(law)?.pgf_derivative(s, order)?))
}

/// Speed of the walk on the unpercolated tree (requires p_0 = 0).
///
/// # Safety
/// `law` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_eq1_speed(law: *const PsLaw, out: *mut f64) -> PsStatus {
    guard(|| write(out, eq1_speed(law_ref(law)?)?))
}

/// Checks the monotonicity condition on `grid_size` points. Writes 1 or 0
/// to `ok` and the smallest successive difference to `worst`.
///
/// # Safety
/// `law` must be a live handle; `ok` and `worst` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_check_condition(
    law: *const PsLaw,
    grid_size: usize,
    ok: *mut i32,
    worst: *mut f64,
) -> PsStatus {
    guard(|| {
        let (holds, w) = check_condition(law_ref(law)?, grid_size)?;
        write(ok, i32::from(holds))?;
        write(worst, w)
    })
}

/// Solves the percolated model for retention `p`. `tol <= 0` selects the
/// default tolerance. The law handle is copied and may be freed afterwards.
///
/// # Safety
/// `law` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_model_new(
    law: *const PsLaw,
    p: f64,
    tol: f64,
    out: *mut *mut PsModel,
) -> PsStatus {
    guard(|| {
        let law = law_ref(law)?.clone();
        let model = if tol > 0.0 {
            PercolatedModel::with_tol(law, p, tol)?
        } else {
            PercolatedModel::new(law, p)?
        };
        write(out, Box::into_raw(Box::new(PsModel(model))))
    })
}

/// # Safety
/// `model` must come from `ps_model_new` and not be freed twice. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn ps_model_free(model: *mut PsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_model_rho(model: *const PsModel, out: *mut f64) -> PsStatus {
    guard(|| write(out, model_ref(model)?.rho()))
}

/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_model_lambda(model: *const PsModel, out: *mut f64) -> PsStatus {
    guard(|| write(out, model_ref(model)?.lambda()))
}

/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_model_m_hat(model: *const PsModel, out: *mut f64) -> PsStatus {
    guard(|| write(out, model_ref(model)?.m_hat()))
}

/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_model_rho_derivative(model: *const PsModel, out: *mut f64) -> PsStatus {
    guard(|| write(out, model_ref(model)?.rho_derivative()?))
}

/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_model_thinned_pmf(model: *const PsModel, l: usize, out: *mut f64) -> PsStatus {
    guard(|| write(out, model_ref(model)?.thinned_pmf(l)))
}

/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_model_backbone_pmf(model: *const PsModel, k: usize, out: *mut f64) -> PsStatus {
    guard(|| write(out, model_ref(model)?.backbone_pmf(k)))
}

/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_model_bush_pmf(model: *const PsModel, k: usize, out: *mut f64) -> PsStatus {
    guard(|| write(out, model_ref(model)?.bush_pmf(k)?))
}

/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_model_bush_mean_size(model: *const PsModel, out: *mut f64) -> PsStatus {
    guard(|| write(out, model_ref(model)?.bush_mean_size()?))
}

/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_model_mean_excursions(model: *const PsModel, k: usize, out: *mut f64) -> PsStatus {
    guard(|| write(out, model_ref(model)?.mean_excursions(k)?))
}

/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_model_backbone_speed(model: *const PsModel, out: *mut f64) -> PsStatus {
    guard(|| write(out, backbone_speed(model_ref(model)?)?))
}

/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_model_cluster_speed(model: *const PsModel, out: *mut f64) -> PsStatus {
    guard(|| write(out, cluster_speed(model_ref(model)?)?))
}

/// Monte Carlo estimate of the cluster speed. Deterministic in `seed`.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_estimate_speed(
    model: *const PsModel,
    horizon: u64,
    replicas: u64,
    seed: u64,
    out: *mut PsWalkEstimate,
) -> PsStatus {
    guard(|| {
        let est = estimate_speed(model_ref(model)?, horizon, replicas, seed)?;
        write(out, PsWalkEstimate::from(&est))
    })
}

/// Closed-form speed on the binary tree with pipes, `p` in [0.5, 1].
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_pipes_speed(p: f64, out: *mut f64) -> PsStatus {
    guard(|| write(out, pipes_speed(p)?))
}

/// Monte Carlo speed on the binary tree with pipes, `p` in (0.5, 1).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_simulate_pipes(
    p: f64,
    horizon: u64,
    replicas: u64,
    seed: u64,
    out: *mut PsWalkEstimate,
) -> PsStatus {
    guard(|| {
        let est = simulate_pipes(p, horizon, replicas, seed)?;
        write(out, PsWalkEstimate::from(&est))
    })
}
