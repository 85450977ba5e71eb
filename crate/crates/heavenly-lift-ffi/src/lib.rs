//! C ABI over the heavenly-lift engine.
//!
//! Every function returns an [`HlStatus`]; on failure the message is kept per
//! thread and can be read with [`hl_last_error`]. Handles are opaque and owned
//! by the caller, who releases them with the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use heavenly_lift::catalog::default_spec;
use heavenly_lift::cli::commands::{cmd_curvature, cmd_noninv, cmd_verify};
use heavenly_lift::cli::config::RunConfig;
use heavenly_lift::cli::report::to_json;
use heavenly_lift::curvature::riemann_ricci;
use heavenly_lift::geometry::{metric_closed, metric_from_psi, MetricForm};
use heavenly_lift::noninv::{classify, Classification, Verdict};
use heavenly_lift::pde::{backlund_compatibility, residual_bf, residual_leghcma, residual_legrot};
use heavenly_lift::solutions::{psi_jet, Family, SolutionSpec};
use heavenly_lift::{Error, Point4};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Domain = 4,
    NoConvergence = 5,
    Singular = 6,
    InsufficientSampling = 7,
    Numeric = 8,
    Panic = 9,
}

pub const HL_FAMILY_SOL1: u32 = 0;
pub const HL_FAMILY_SOL2: u32 = 1;
pub const HL_FAMILY_SOL3: u32 = 2;
pub const HL_FAMILY_SPECIAL1: u32 = 3;
pub const HL_FAMILY_SPECIAL2: u32 = 4;

pub const HL_COMMAND_VERIFY: u32 = 0;
pub const HL_COMMAND_CURVATURE: u32 = 1;
pub const HL_COMMAND_NONINV: u32 = 2;

/// Opaque solution specification.
pub struct HlSpec {
    spec: SolutionSpec,
}

/// Opaque result of the non-invariance classification.
pub struct HlClassification {
    inner: Classification,
}

/// Residuals at one point; NaN where a check does not apply to the family.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct HlResiduals {
    pub leghcma: f64,
    pub bf: f64,
    pub legrot: f64,
    pub backlund: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> HlStatus {
    match e {
        Error::Config(_) | Error::Precondition(_) | Error::Unsupported(_) | Error::InvalidPattern(_) => HlStatus::Config,
        Error::Domain(_) | Error::BranchCut { .. } | Error::PoleProximity(_) | Error::ZeroArgument { .. } => {
            HlStatus::Domain
        }
        Error::NoConvergence { .. } => HlStatus::NoConvergence,
        Error::SingularHessian(_) | Error::DegenerateMetric(_) | Error::SingularCoframe(_) | Error::DivisionByZero => {
            HlStatus::Singular
        }
        Error::InsufficientSampling { .. } => HlStatus::InsufficientSampling,
        _ => HlStatus::Numeric,
    }
}

/// Runs `f`, mapping engine errors and panics to a status.
fn guard(f: impl FnOnce() -> Result<(), (HlStatus, String)>) -> HlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            HlStatus::Ok
        }
        Ok(Err((s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("panic inside heavenly-lift");
            HlStatus::Panic
        }
    }
}

fn engine(e: Error) -> (HlStatus, String) {
    (status_of(&e), e.to_string())
}

fn null() -> (HlStatus, String) {
    (HlStatus::NullPointer, "null pointer argument".into())
}

unsafe fn spec_ref<'a>(s: *const HlSpec) -> Result<&'a SolutionSpec, (HlStatus, String)> {
    s.as_ref().map(|h| &h.spec).ok_or_else(null)
}

unsafe fn point(x: *const f64) -> Result<Point4, (HlStatus, String)> {
    if x.is_null() {
        return Err(null());
    }
    let c = std::slice::from_raw_parts(x, 4);
    if c.iter().any(|v| !v.is_finite()) {
        return Err((HlStatus::InvalidArgument, "point coordinates must be finite".into()));
    }
    Ok(Point4::from_coords([c[0], c[1], c[2], c[3]]))
}

unsafe fn text<'a>(s: *const c_char) -> Result<&'a str, (HlStatus, String)> {
    if s.is_null() {
        return Err(null());
    }
    CStr::from_ptr(s).to_str().map_err(|_| (HlStatus::InvalidArgument, "string is not UTF-8".into()))
}

/// Message of the last failing call on this thread ("" after a success).
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn hl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Default specification of a family (`HL_FAMILY_*`).
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn hl_spec_default(family: u32, out: *mut *mut HlSpec) -> HlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let f = match family {
            HL_FAMILY_SOL1 => Family::Sol1,
            HL_FAMILY_SOL2 => Family::Sol2,
            HL_FAMILY_SOL3 => Family::Sol3,
            HL_FAMILY_SPECIAL1 => Family::Special1,
            HL_FAMILY_SPECIAL2 => Family::Special2,
            _ => return Err((HlStatus::InvalidArgument, format!("unknown family {family}"))),
        };
        *out = Box::into_raw(Box::new(HlSpec { spec: default_spec(f) }));
        Ok(())
    })
}

/// Specification from the `[solution]` section of a TOML run configuration.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hl_spec_from_toml(toml: *const c_char, out: *mut *mut HlSpec) -> HlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let cfg = RunConfig::parse(text(toml)?).map_err(engine)?;
        *out = Box::into_raw(Box::new(HlSpec { spec: cfg.spec }));
        Ok(())
    })
}

/// # Safety
/// `spec` must come from an `hl_spec_*` constructor (or be null) and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hl_spec_free(spec: *mut HlSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// ψ at x = (Re q, Im q, Re z, Im z).
///
/// # Safety
/// `x` must point to 4 doubles, `out` to one.
#[no_mangle]
pub unsafe extern "C" fn hl_psi(spec: *const HlSpec, x: *const f64, out: *mut f64) -> HlStatus {
    guard(|| {
        let (s, p) = (spec_ref(spec)?, point(x)?);
        let out = out.as_mut().ok_or_else(null)?;
        *out = psi_jet(s, p, 0).map_err(engine)?.value().re;
        Ok(())
    })
}

/// Relative residuals of the solution's equations at x.
///
/// # Safety
/// `x` must point to 4 doubles, `out` to one `HlResiduals`.
#[no_mangle]
pub unsafe extern "C" fn hl_residuals(spec: *const HlSpec, x: *const f64, out: *mut HlResiduals) -> HlStatus {
    guard(|| {
        let (s, p) = (spec_ref(spec)?, point(x)?);
        let out = out.as_mut().ok_or_else(null)?;
        let psi = psi_jet(s, p, 3).map_err(engine)?;
        let mut r = HlResiduals {
            leghcma: residual_leghcma(&psi).map_err(engine)?.relative(),
            bf: residual_bf(&psi).map_err(engine)?.relative(),
            legrot: f64::NAN,
            backlund: f64::NAN,
        };
        if s.family.is_special() {
            r.legrot = residual_legrot(&psi, s.alpha).map_err(engine)?.iter().fold(0.0f64, |m, x| m.max(x.relative()));
            r.backlund = backlund_compatibility(&psi, s.alpha).map_err(engine)?.relative();
        }
        *out = r;
        Ok(())
    })
}

/// Metric g_{μν} at x, row-major in `out[16]`; `closed_form` ≠ 0 selects the
/// family's closed form instead of the metric built from ψ.
///
/// # Safety
/// `x` must point to 4 doubles, `out` to 16.
#[no_mangle]
pub unsafe extern "C" fn hl_metric(spec: *const HlSpec, x: *const f64, closed_form: i32, out: *mut f64) -> HlStatus {
    guard(|| {
        let (s, p) = (spec_ref(spec)?, point(x)?);
        if out.is_null() {
            return Err(null());
        }
        let g = if closed_form != 0 {
            metric_closed(MetricForm::for_family(s.family), s, p, 0)
        } else {
            metric_from_psi(s, p, 0)
        }
        .map_err(engine)?;
        let v = g.value();
        let o = std::slice::from_raw_parts_mut(out, 16);
        for a in 0..4 {
            for b in 0..4 {
                o[4 * a + b] = v[(a, b)];
            }
        }
        Ok(())
    })
}

/// max |Ricci| relative to the curvature terms, and max |R_{abcd}|, of the ψ metric at x.
///
/// # Safety
/// `x` must point to 4 doubles; `ricci_rel` and `riemann_max` to one double each.
#[no_mangle]
pub unsafe extern "C" fn hl_curvature(
    spec: *const HlSpec,
    x: *const f64,
    ricci_rel: *mut f64,
    riemann_max: *mut f64,
) -> HlStatus {
    guard(|| {
        let (s, p) = (spec_ref(spec)?, point(x)?);
        let (rr, rm) = (ricci_rel.as_mut().ok_or_else(null)?, riemann_max.as_mut().ok_or_else(null)?);
        let rep = riemann_ricci(&metric_from_psi(s, p, 2).map_err(engine)?).map_err(engine)?;
        *rr = rep.ricci_relative();
        *rm = rep.max_riemann();
        Ok(())
    })
}

/// Non-invariance classification at degrees 4, 6, 8.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn hl_classify(spec: *const HlSpec, out: *mut *mut HlClassification) -> HlStatus {
    guard(|| {
        let s = spec_ref(spec)?;
        if out.is_null() {
            return Err(null());
        }
        let inner = classify(s).map_err(engine)?;
        *out = Box::into_raw(Box::new(HlClassification { inner }));
        Ok(())
    })
}

/// 1 if an invariance direction was found, 0 if the solution is noninvariant, −1 on null.
///
/// # Safety
/// `c` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn hl_classification_invariant(c: *const HlClassification) -> i32 {
    match c.as_ref() {
        None => -1,
        Some(h) => (h.inner.verdict == Verdict::InvariantDirectionFound) as i32,
    }
}

/// Number of degrees tested.
///
/// # Safety
/// `c` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn hl_classification_len(c: *const HlClassification) -> usize {
    c.as_ref().map_or(0, |h| h.inner.reports.len())
}

/// Degree and kernel dimension of the i-th report.
///
/// # Safety
/// `c` must be a live handle; `degree` and `kernel_dim` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn hl_classification_report(
    c: *const HlClassification,
    i: usize,
    degree: *mut usize,
    kernel_dim: *mut usize,
) -> HlStatus {
    guard(|| {
        let h = c.as_ref().ok_or_else(null)?;
        let r = h.inner.reports.get(i).ok_or((HlStatus::InvalidArgument, format!("report index {i} out of range")))?;
        *degree.as_mut().ok_or_else(null)? = r.degree;
        *kernel_dim.as_mut().ok_or_else(null)? = r.kernel_dim;
        Ok(())
    })
}

/// # Safety
/// `c` must come from [`hl_classify`] (or be null) and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hl_classification_free(c: *mut HlClassification) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Runs a CLI suite (`HL_COMMAND_*`) on a TOML configuration and returns its
/// JSON report in `*json` (free with [`hl_string_free`]) and its exit code in
/// `*exit_code` (0 pass, 1 tolerance failure, 3 invariance found).
///
/// # Safety
/// `toml` must be NUL-terminated; `json` and `exit_code` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn hl_run(command: u32, toml: *const c_char, json: *mut *mut c_char, exit_code: *mut i32) -> HlStatus {
    guard(|| {
        if json.is_null() || exit_code.is_null() {
            return Err(null());
        }
        let cfg = RunConfig::parse(text(toml)?).map_err(engine)?;
        let out = match command {
            HL_COMMAND_VERIFY => cmd_verify(&cfg),
            HL_COMMAND_CURVATURE => cmd_curvature(&cfg),
            HL_COMMAND_NONINV => cmd_noninv(&cfg),
            _ => return Err((HlStatus::InvalidArgument, format!("unknown command {command}"))),
        }
        .map_err(engine)?;
        let s = CString::new(to_json(&out.json)).map_err(|_| (HlStatus::Numeric, "report contains NUL".into()))?;
        *json = s.into_raw();
        *exit_code = out.code;
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library (or be null) and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
