//! C ABI over the `etendue` library.
//!
//! Every fallible function returns an [`EtStatus`] and writes its result
//! through an out-pointer. On failure a message is kept per thread and can be
//! read with [`et_last_error_message`]. Handles are opaque and owned by the
//! caller until passed to the matching `_free` function; strings returned by
//! the library are released with [`et_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use etendue::cli::{load_site, CliError};
use etendue::geometry;
use etendue::presheaf::{BaseRef, PresheafDescription};
use etendue::sites::{self, Example, SiteSpec};
use etendue::{ExtNat, FinCategory, Presheaf};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EtStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    MalformedInput = 3,
    AxiomViolation = 4,
    UnknownObject = 5,
    BudgetExceeded = 6,
    HypothesisFailed = 7,
    TheoremViolation = 8,
    Internal = 9,
}

/// A validated finite category.
pub struct EtCategory {
    inner: Arc<FinCategory>,
}

/// A finite presheaf together with its base.
pub struct EtPresheaf {
    inner: Arc<Presheaf>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(EtStatus, String);

impl<E: Into<CliError>> From<E> for Failure {
    fn from(e: E) -> Self {
        let e: CliError = e.into();
        let status = match e.code() {
            "AxiomViolation" => EtStatus::AxiomViolation,
            "UnknownObject" => EtStatus::UnknownObject,
            "BudgetExceeded" => EtStatus::BudgetExceeded,
            "HypothesisFailed" => EtStatus::HypothesisFailed,
            "TheoremViolation" => EtStatus::TheoremViolation,
            "Internal" => EtStatus::Internal,
            _ => EtStatus::MalformedInput,
        };
        Failure(status, e.to_string())
    }
}

fn fail<T>(status: EtStatus, message: &str) -> Result<T, Failure> {
    Err(Failure(status, message.to_string()))
}

/// Runs `body`, records any failure or panic, and returns the status.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> EtStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => EtStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            EtStatus::Internal
        }
    }
}

unsafe fn text<'a>(s: *const c_char) -> Result<&'a str, Failure> {
    if s.is_null() {
        return fail(EtStatus::NullArgument, "null string argument");
    }
    CStr::from_ptr(s)
        .to_str()
        .or_else(|_| fail(EtStatus::InvalidUtf8, "argument is not valid UTF-8"))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure(EtStatus::NullArgument, "null handle".into()))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return fail(EtStatus::NullArgument, "null output pointer");
    }
    out.write(value);
    Ok(())
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

fn json<T: serde::Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string(value).or_else(|e| fail(EtStatus::Internal, &e.to_string()))
}

// ---- categories ----

unsafe fn put_category(out: *mut *mut EtCategory, cat: FinCategory) -> Result<(), Failure> {
    if out.is_null() {
        return fail(EtStatus::NullArgument, "null output pointer");
    }
    let boxed = Box::new(EtCategory { inner: Arc::new(cat) });
    out.write(Box::into_raw(boxed));
    Ok(())
}

/// Parses and validates a category from its JSON description.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn et_category_from_json(json: *const c_char, out: *mut *mut EtCategory) -> EtStatus {
    guard(|| {
        let desc = serde_json::from_str(text(json)?).map_err(|e| Failure(EtStatus::MalformedInput, e.to_string()))?;
        put_category(out, FinCategory::validate(&desc)?)
    })
}

/// Builds the truncation Δ_≤k.
///
/// # Safety
/// `out` must be a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn et_category_build_delta(k: usize, out: *mut *mut EtCategory) -> EtStatus {
    guard(|| put_category(out, sites::build_delta(k)?))
}

/// Builds the category of finite sets {1..m}, 1 ≤ m ≤ k.
///
/// # Safety
/// `out` must be a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn et_category_build_finset(k: usize, out: *mut *mut EtCategory) -> EtStatus {
    guard(|| put_category(out, sites::build_finset(k)?))
}

/// # Safety
/// `cat` must be null or a handle returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn et_category_free(cat: *mut EtCategory) {
    if !cat.is_null() {
        drop(Box::from_raw(cat));
    }
}

/// # Safety
/// `cat` must be a live handle; the out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn et_category_counts(
    cat: *const EtCategory,
    objects: *mut usize,
    morphisms: *mut usize,
) -> EtStatus {
    guard(|| {
        let c = &handle(cat)?.inner;
        put(objects, c.object_count())?;
        put(morphisms, c.morphism_count())
    })
}

/// Height of object `object` (objects are numbered in declaration order).
///
/// # Safety
/// `cat` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn et_category_height(cat: *const EtCategory, object: usize, out: *mut usize) -> EtStatus {
    guard(|| {
        let c = &handle(cat)?.inner;
        put(out, c.height(object)?)
    })
}

/// JSON description of the category; free the result with [`et_string_free`].
///
/// # Safety
/// `cat` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn et_category_to_json(cat: *const EtCategory, out: *mut *mut c_char) -> EtStatus {
    guard(|| {
        let c = &handle(cat)?.inner;
        put(out, owned_string(json(&c.describe())?))
    })
}

// ---- presheaves ----

unsafe fn put_presheaf(out: *mut *mut EtPresheaf, x: Presheaf) -> Result<(), Failure> {
    if out.is_null() {
        return fail(EtStatus::NullArgument, "null output pointer");
    }
    out.write(Box::into_raw(Box::new(EtPresheaf { inner: Arc::new(x) })));
    Ok(())
}

/// Parses a presheaf description. A named base is a generated site such as
/// `delta:2` or a path to a category JSON file.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn et_presheaf_from_json(json: *const c_char, out: *mut *mut EtPresheaf) -> EtStatus {
    guard(|| {
        let desc: PresheafDescription =
            serde_json::from_str(text(json)?).map_err(|e| Failure(EtStatus::MalformedInput, e.to_string()))?;
        let base = match &desc.base {
            BaseRef::Named(name) => load_site(name, None)?,
            BaseRef::Inline(cat) => FinCategory::validate(cat)?,
        };
        put_presheaf(out, Presheaf::from_description(&desc, Arc::new(base))?)
    })
}

/// Builds a bundled example (`representable:<obj>`, `boundary:<n>`,
/// `loop_Y`, `collapsed_Z`) over a generated site (`delta:K`, `finset:K`).
///
/// # Safety
/// `example` and `site` must be NUL-terminated strings and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn et_presheaf_example(
    example: *const c_char,
    site: *const c_char,
    out: *mut *mut EtPresheaf,
) -> EtStatus {
    guard(|| {
        let which = Example::parse(text(example)?)?;
        let site = text(site)?;
        let Some(spec) = SiteSpec::parse(site) else {
            return fail(EtStatus::MalformedInput, &format!("unknown site {site:?}"));
        };
        let base = Arc::new(spec.build()?);
        put_presheaf(out, sites::example(&which, &base)?)
    })
}

/// # Safety
/// `x` must be null or a handle returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn et_presheaf_free(x: *mut EtPresheaf) {
    if !x.is_null() {
        drop(Box::from_raw(x));
    }
}

/// Encodes -∞ as -1 and ∞ as `INT64_MAX`.
fn encode(n: ExtNat) -> i64 {
    n.to_i64()
}

/// Dimension of the presheaf; -1 for the empty presheaf.
///
/// # Safety
/// `x` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn et_presheaf_dim(x: *const EtPresheaf, out: *mut i64) -> EtStatus {
    guard(|| put(out, encode(geometry::dim(&handle(x)?.inner)?)))
}

/// Depth of the site of minimal figures; -1 for the empty presheaf.
///
/// # Safety
/// `x` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn et_presheaf_depth(x: *const EtPresheaf, out: *mut i64) -> EtStatus {
    guard(|| put(out, encode(geometry::depth(&handle(x)?.inner)?)))
}

/// Dimension report as JSON; `n_max < 0` selects the default range.
/// Free the result with [`et_string_free`].
///
/// # Safety
/// `x` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn et_presheaf_report_json(x: *const EtPresheaf, n_max: i64, out: *mut *mut c_char) -> EtStatus {
    guard(|| {
        let n_max = usize::try_from(n_max).ok();
        let report = geometry::verify_dimension_theorem(&handle(x)?.inner, n_max)?;
        put(out, owned_string(json(&report)?))
    })
}

// ---- strings and errors ----

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn et_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn et_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}
