//! C ABI over the papageno core: trained-model prediction, text normalization,
//! binomial intervals, Cohen's kappa and the annotation rule engine.
//!
//! Every function returns a [`PapagenoStatus`]. On failure a message is kept per thread and
//! can be read with [`papageno_last_error`]. Strings crossing the boundary are NUL-terminated
//! UTF-8; outputs are written to caller-provided pointers.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::OnceLock;

use papageno::annotate::rules::{self, DimensionAnnotation};
use papageno::annotate::taxonomy::{FineCategory, Level};
use papageno::models::{Model, ModelFile};
use papageno::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PapagenoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    Io = 4,
    Parse = 5,
    Validation = 6,
    UnknownLabel = 7,
    Degenerate = 8,
    BufferTooSmall = 9,
    Internal = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PapagenoLevel {
    Fine = 12,
    Task1 = 6,
    Task2 = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PapagenoMessageType {
    PersonalExperience = 0,
    NewsExperience = 1,
    BereavedExperience = 2,
    CaseReport = 3,
    CallForAction = 4,
    Irrelevant = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PapagenoPerspective {
    ProblemSuffering = 0,
    SolutionCoping = 1,
    Both = 2,
    Neither = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PapagenoPerson {
    First = 0,
    Third = 1,
    Mixed = 2,
    NotApplicable = 3,
}

/// Coder dimensions for [`papageno_derive_category`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PapagenoDimensions {
    pub message_type: PapagenoMessageType,
    pub perspective: PapagenoPerspective,
    pub person: PapagenoPerson,
    pub serious: bool,
    pub focus_on_bereaved: bool,
    pub mentions_case: bool,
}

/// Opaque trained model.
pub struct PapagenoModel {
    model: Model,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> PapagenoStatus {
    match e {
        Error::Io { .. } => PapagenoStatus::Io,
        Error::Json(_) | Error::Csv(_) => PapagenoStatus::Parse,
        Error::Validation { .. } => PapagenoStatus::Validation,
        Error::UnknownLabel { .. } => PapagenoStatus::UnknownLabel,
        Error::Degenerate(_) => PapagenoStatus::Degenerate,
        _ => PapagenoStatus::InvalidInput,
    }
}

struct Fail(PapagenoStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

/// Runs `f`, converting errors and panics into a status and a stored message.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PapagenoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            PapagenoStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            PapagenoStatus::Internal
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(PapagenoStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(PapagenoStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

fn level_of(l: PapagenoLevel) -> Level {
    match l {
        PapagenoLevel::Fine => Level::Fine,
        PapagenoLevel::Task1 => Level::Task1,
        PapagenoLevel::Task2 => Level::Task2,
    }
}

fn ffi_level(l: Level) -> PapagenoLevel {
    match l {
        Level::Fine => PapagenoLevel::Fine,
        Level::Task1 => PapagenoLevel::Task1,
        Level::Task2 => PapagenoLevel::Task2,
    }
}

fn class_cstrings(level: Level) -> &'static [CString] {
    static FINE: OnceLock<Vec<CString>> = OnceLock::new();
    static TASK1: OnceLock<Vec<CString>> = OnceLock::new();
    static TASK2: OnceLock<Vec<CString>> = OnceLock::new();
    let cell = match level {
        Level::Fine => &FINE,
        Level::Task1 => &TASK1,
        Level::Task2 => &TASK2,
    };
    cell.get_or_init(|| level.classes().iter().map(|c| CString::new(*c).expect("no NUL in class names")).collect())
}

fn class_index(level: Level, label: &str) -> Result<u32, Fail> {
    level
        .classes()
        .iter()
        .position(|c| *c == label)
        .map(|i| i as u32)
        .ok_or_else(|| Fail(PapagenoStatus::Internal, format!("model produced unknown label {label}")))
}

/// Copies `s` plus a NUL into `buf`. `needed` always receives the required size in bytes.
unsafe fn copy_out(s: &str, buf: *mut c_char, len: usize, needed: *mut usize) -> Result<(), Fail> {
    let need = s.len() + 1;
    if let Some(n) = needed.as_mut() {
        *n = need;
    }
    if buf.is_null() || len < need {
        return Err(Fail(PapagenoStatus::BufferTooSmall, format!("buffer needs {need} bytes, got {len}")));
    }
    std::ptr::copy_nonoverlapping(s.as_ptr(), buf.cast::<u8>(), s.len());
    *buf.add(s.len()) = 0;
    Ok(())
}

/// Message for the last failing call on this thread; empty after a success.
/// The pointer stays valid until the next papageno call on the same thread.
#[no_mangle]
pub extern "C" fn papageno_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Loads a model file written by `papageno train`.
///
/// # Safety
/// `path` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn papageno_model_load(path: *const c_char, out: *mut *mut PapagenoModel) -> PapagenoStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let slot = out_arg(out, "out")?;
        let file = ModelFile::load(Path::new(path))?;
        *slot = Box::into_raw(Box::new(PapagenoModel { model: file.model }));
        Ok(())
    })
}

/// Loads a model from its JSON text.
///
/// # Safety
/// `json` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn papageno_model_from_json(json: *const c_char, out: *mut *mut PapagenoModel) -> PapagenoStatus {
    guard(|| {
        let json = str_arg(json, "json")?;
        let slot = out_arg(out, "out")?;
        let file = ModelFile::from_json(json)?;
        *slot = Box::into_raw(Box::new(PapagenoModel { model: file.model }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from a papageno load function and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn papageno_model_free(model: *mut PapagenoModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Label granularity the model predicts at.
///
/// # Safety
/// `model` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn papageno_model_level(model: *const PapagenoModel, out: *mut PapagenoLevel) -> PapagenoStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        *out_arg(out, "out")? = ffi_level(m.model.level());
        Ok(())
    })
}

/// Predicts one post; `out_class` receives an index into the model level's classes
/// (see [`papageno_class_name`]).
///
/// # Safety
/// `model` must be valid, `text` a valid C string, `out_class` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn papageno_model_predict(
    model: *const PapagenoModel,
    text: *const c_char,
    out_class: *mut u32,
) -> PapagenoStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let text = str_arg(text, "text")?;
        let slot = out_arg(out_class, "out_class")?;
        *slot = class_index(m.model.level(), m.model.predict(text))?;
        Ok(())
    })
}

/// Predicts `n` posts at once. `out_classes` must have room for `n` indices.
///
/// # Safety
/// `texts` must point to `n` valid C strings and `out_classes` to `n` writable `uint32_t`.
#[no_mangle]
pub unsafe extern "C" fn papageno_model_predict_batch(
    model: *const PapagenoModel,
    texts: *const *const c_char,
    n: usize,
    out_classes: *mut u32,
) -> PapagenoStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        if n == 0 {
            return Ok(());
        }
        if texts.is_null() || out_classes.is_null() {
            return Err(null("texts or out_classes"));
        }
        let docs = std::slice::from_raw_parts(texts, n)
            .iter()
            .map(|&p| str_arg(p, "text"))
            .collect::<Result<Vec<_>, _>>()?;
        let out = std::slice::from_raw_parts_mut(out_classes, n);
        let level = m.model.level();
        for (slot, label) in out.iter_mut().zip(m.model.predict_batch(&docs)) {
            *slot = class_index(level, label)?;
        }
        Ok(())
    })
}

/// Number of classes at `level`.
#[no_mangle]
pub extern "C" fn papageno_class_count(level: PapagenoLevel) -> u32 {
    level_of(level).size() as u32
}

/// Static name of class `index` at `level`, or null when out of range.
#[no_mangle]
pub extern "C" fn papageno_class_name(level: PapagenoLevel, index: u32) -> *const c_char {
    class_cstrings(level_of(level)).get(index as usize).map_or(std::ptr::null(), |c| c.as_ptr())
}

/// URL and mention replacement plus lowercasing. Writes into `buf` (capacity `len`);
/// `needed` receives the size including the terminating NUL, so a first call with a null
/// buffer can size the second.
///
/// # Safety
/// `text` must be a valid C string; `buf` must have `len` writable bytes or be null.
#[no_mangle]
pub unsafe extern "C" fn papageno_normalize(
    text: *const c_char,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> PapagenoStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        copy_out(&papageno::preprocess::normalize(text), buf, len, needed)
    })
}

/// Exact binomial interval for `successes` out of `trials` at the given confidence (e.g. 0.95).
///
/// # Safety
/// `lower` and `upper` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn papageno_clopper_pearson(
    successes: u64,
    trials: u64,
    confidence: f64,
    lower: *mut f64,
    upper: *mut f64,
) -> PapagenoStatus {
    guard(|| {
        let lo = out_arg(lower, "lower")?;
        let hi = out_arg(upper, "upper")?;
        (*lo, *hi) = papageno::eval::clopper_pearson(successes, trials, confidence)?;
        Ok(())
    })
}

/// Cohen's kappa for two raters' integer codes over `n` items. `ci_lower`/`ci_upper` may be null.
///
/// # Safety
/// `a` and `b` must point to `n` values; `kappa` must be valid.
#[no_mangle]
pub unsafe extern "C" fn papageno_cohens_kappa(
    a: *const u32,
    b: *const u32,
    n: usize,
    kappa: *mut f64,
    ci_lower: *mut f64,
    ci_upper: *mut f64,
) -> PapagenoStatus {
    guard(|| {
        if a.is_null() || b.is_null() {
            return Err(null("rater codes"));
        }
        let slot = out_arg(kappa, "kappa")?;
        let a: Vec<String> = std::slice::from_raw_parts(a, n).iter().map(u32::to_string).collect();
        let b: Vec<String> = std::slice::from_raw_parts(b, n).iter().map(u32::to_string).collect();
        let k = papageno::eval::cohens_kappa(&a, &b)?;
        *slot = k.kappa;
        if let Some(lo) = ci_lower.as_mut() {
            *lo = k.ci.0;
        }
        if let Some(hi) = ci_upper.as_mut() {
            *hi = k.ci.1;
        }
        Ok(())
    })
}

fn dims_of(d: &PapagenoDimensions) -> DimensionAnnotation {
    use rules::{MessageType as M, Perspective as P, Person as W};
    let message_type = match d.message_type {
        PapagenoMessageType::PersonalExperience => M::PersonalExperience,
        PapagenoMessageType::NewsExperience => M::NewsExperience,
        PapagenoMessageType::BereavedExperience => M::BereavedExperience,
        PapagenoMessageType::CaseReport => M::CaseReport,
        PapagenoMessageType::CallForAction => M::CallForAction,
        PapagenoMessageType::Irrelevant => M::Irrelevant,
    };
    let perspective = match d.perspective {
        PapagenoPerspective::ProblemSuffering => P::ProblemSuffering,
        PapagenoPerspective::SolutionCoping => P::SolutionCoping,
        PapagenoPerspective::Both => P::Both,
        PapagenoPerspective::Neither => P::Neither,
    };
    let person = match d.person {
        PapagenoPerson::First => W::First,
        PapagenoPerson::Third => W::Third,
        PapagenoPerson::Mixed => W::Mixed,
        PapagenoPerson::NotApplicable => W::NotApplicable,
    };
    DimensionAnnotation {
        serious: d.serious,
        focus_on_bereaved: d.focus_on_bereaved,
        mentions_case: d.mentions_case,
        ..DimensionAnnotation::new(message_type, perspective, person)
    }
}

/// Fine category for a set of coder dimensions, as an index into the 12 fine classes.
/// `needs_adjudication` (may be null) is set when the combination should be reviewed.
///
/// # Safety
/// `dims` and `out_category` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn papageno_derive_category(
    dims: *const PapagenoDimensions,
    out_category: *mut u32,
    needs_adjudication: *mut bool,
) -> PapagenoStatus {
    guard(|| {
        let d = dims.as_ref().ok_or_else(|| null("dims"))?;
        let slot = out_arg(out_category, "out_category")?;
        let derivation = rules::derive(&dims_of(d))?;
        *slot = FineCategory::ALL.iter().position(|c| *c == derivation.category).expect("category in ALL") as u32;
        if let Some(flag) = needs_adjudication.as_mut() {
            *flag = derivation.adjudication_suggested.is_some();
        }
        Ok(())
    })
}

/// Coarsens fine class `fine_index` to `level`, writing the class index at that level.
///
/// # Safety
/// `out_class` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn papageno_coarsen(fine_index: u32, level: PapagenoLevel, out_class: *mut u32) -> PapagenoStatus {
    guard(|| {
        let slot = out_arg(out_class, "out_class")?;
        let fine = FineCategory::ALL
            .get(fine_index as usize)
            .ok_or_else(|| Fail(PapagenoStatus::InvalidInput, format!("fine class index {fine_index} out of range")))?;
        let level = level_of(level);
        *slot = class_index(level, fine.at_level(level))?;
        Ok(())
    })
}
