//! C ABI for ripflow.
//!
//! Results live behind opaque handles that the caller releases with the
//! matching `*_free` function. Every fallible call returns an [`RfStatus`];
//! on failure `rf_last_error_message` describes the error on the calling
//! thread. Grids cross the boundary as row-major arrays of `width * height`
//! elements, intensities in `[0, 1]`, masks as bytes (non-zero = set).

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ripflow::detect::{accumulate, rip_region, LikelihoodMatrix};
use ripflow::eval::pr_curve;
use ripflow::frame_io::{BinaryMask, Frame, MaskKind};
use ripflow::geometry::{offshore_from_shore, DirectionField, GeometryParams};
use ripflow::grid::Grid;
use ripflow::optflow::{estimate_flow, FlowConfig, Method, VelocityField};
use ripflow::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RfStatus {
    Ok = 0,
    NullPointer = 1,
    Dimension = 2,
    InvalidArgument = 3,
    InsufficientData = 4,
    UnsupportedInput = 5,
    NoCoastline = 6,
    UndefinedGroundTruth = 7,
    Numerical = 8,
    Io = 9,
    Panic = 10,
}

impl From<&Error> for RfStatus {
    fn from(e: &Error) -> Self {
        match e.root() {
            Error::Dimension(_) => RfStatus::Dimension,
            Error::InvalidArgument(_) | Error::Config(_) => RfStatus::InvalidArgument,
            Error::InsufficientData(_) => RfStatus::InsufficientData,
            Error::UnsupportedInput(_) => RfStatus::UnsupportedInput,
            Error::NoCoastline(_) => RfStatus::NoCoastline,
            Error::UndefinedGroundTruth(_) => RfStatus::UndefinedGroundTruth,
            Error::Numerical(_) => RfStatus::Numerical,
            _ => RfStatus::Io,
        }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RfMethod {
    Lk = 0,
    Hs = 1,
    HorLk = 2,
    HorHs = 3,
}

impl From<RfMethod> for Method {
    fn from(m: RfMethod) -> Self {
        match m {
            RfMethod::Lk => Method::Lk,
            RfMethod::Hs => Method::Hs,
            RfMethod::HorLk => Method::HorLk,
            RfMethod::HorHs => Method::HorHs,
        }
    }
}

impl From<Method> for RfMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Lk => RfMethod::Lk,
            Method::Hs => RfMethod::Hs,
            Method::HorLk => RfMethod::HorLk,
            Method::HorHs => RfMethod::HorHs,
        }
    }
}

/// Estimator parameters; see `rf_flow_config_default`.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RfFlowConfig {
    pub method: RfMethod,
    pub window: usize,
    pub gamma: f64,
    pub lambda_hor: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub presmooth_sigma: f64,
    pub intensity_scale: f64,
}

impl From<&FlowConfig> for RfFlowConfig {
    fn from(c: &FlowConfig) -> Self {
        RfFlowConfig {
            method: c.method.into(),
            window: c.window,
            gamma: c.gamma,
            lambda_hor: c.lambda_hor,
            max_iters: c.max_iters,
            tol: c.tol,
            presmooth_sigma: c.presmooth_sigma,
            intensity_scale: c.intensity_scale,
        }
    }
}

impl From<&RfFlowConfig> for FlowConfig {
    fn from(c: &RfFlowConfig) -> Self {
        FlowConfig {
            method: c.method.into(),
            window: c.window,
            gamma: c.gamma,
            lambda_hor: c.lambda_hor,
            max_iters: c.max_iters,
            tol: c.tol,
            presmooth_sigma: c.presmooth_sigma,
            intensity_scale: c.intensity_scale,
        }
    }
}

/// Opaque velocity field.
pub struct RfVelocityField(VelocityField);

/// Opaque offshore direction field.
pub struct RfDirectionField(DirectionField);

/// Opaque likelihood accumulator.
pub struct RfLikelihood(LikelihoodMatrix);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

/// Runs `f`, converting errors and panics into a status plus message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RfStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RfStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            RfStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            RfStatus::from(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            RfStatus::Panic
        }
    }
}

fn cells(width: usize, height: usize) -> Result<usize, Failure> {
    width
        .checked_mul(height)
        .filter(|n| *n > 0)
        .ok_or_else(|| Failure::Lib(Error::InvalidArgument(format!("bad grid size {width}x{height}"))))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &'static str) -> Result<&'a mut [T], Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn handle<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

fn check_len(have: usize, need: usize, what: &str) -> Result<(), Failure> {
    if have < need {
        return Err(Failure::Lib(Error::Dimension(format!(
            "{what} buffer holds {have} elements, {need} needed"
        ))));
    }
    Ok(())
}

unsafe fn mask_from(p: *const u8, width: usize, height: usize, kind: MaskKind, what: &'static str) -> Result<BinaryMask, Failure> {
    let n = cells(width, height)?;
    let bytes = slice(p, n, what)?;
    let bits = Grid::from_vec(width, height, bytes.iter().map(|b| *b != 0).collect())?;
    Ok(BinaryMask::new(bits, kind))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or NULL. Valid until
/// the next ripflow call on the same thread.
#[no_mangle]
pub extern "C" fn rf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Fills `out` with the default estimator parameters.
///
/// # Safety
/// `out` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rf_flow_config_default(out: *mut RfFlowConfig) -> RfStatus {
    guard(|| {
        let out = out.as_mut().ok_or(Failure::Null("out"))?;
        *out = RfFlowConfig::from(&FlowConfig::default());
        Ok(())
    })
}

/// Estimates the flow from frame `f0` to frame `f1` (grayscale,
/// `width * height` each) and stores a new handle in `out`.
///
/// # Safety
/// Frame pointers must reference `width * height` readable doubles; `cfg`
/// and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn rf_flow_estimate(
    f0: *const f64,
    f1: *const f64,
    width: usize,
    height: usize,
    cfg: *const RfFlowConfig,
    out: *mut *mut RfVelocityField,
) -> RfStatus {
    guard(|| {
        let out = out.as_mut().ok_or(Failure::Null("out"))?;
        let cfg = FlowConfig::from(handle(cfg, "cfg")?);
        let n = cells(width, height)?;
        let a = Grid::from_vec(width, height, slice(f0, n, "f0")?.to_vec())?;
        let b = Grid::from_vec(width, height, slice(f1, n, "f1")?.to_vec())?;
        let v = estimate_flow(&Frame::from_gray(a), &Frame::from_gray(b), &cfg)?;
        *out = Box::into_raw(Box::new(RfVelocityField(v)));
        Ok(())
    })
}

/// # Safety
/// `field` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rf_velocity_width(field: *const RfVelocityField) -> usize {
    field.as_ref().map_or(0, |f| f.0.width())
}

/// # Safety
/// `field` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rf_velocity_height(field: *const RfVelocityField) -> usize {
    field.as_ref().map_or(0, |f| f.0.height())
}

/// Copies `u`, `v` (doubles) and `valid` (bytes) into caller buffers of
/// `len >= width * height` elements. Any destination may be NULL to skip it.
///
/// # Safety
/// Non-NULL destinations must be writable for `len` elements.
#[no_mangle]
pub unsafe extern "C" fn rf_velocity_copy(
    field: *const RfVelocityField,
    u: *mut f64,
    v: *mut f64,
    valid: *mut u8,
    len: usize,
) -> RfStatus {
    guard(|| {
        let f = &handle(field, "field")?.0;
        let n = f.u.len();
        check_len(len, n, "velocity")?;
        if !u.is_null() {
            slice_mut(u, n, "u")?.copy_from_slice(f.u.as_slice());
        }
        if !v.is_null() {
            slice_mut(v, n, "v")?.copy_from_slice(f.v.as_slice());
        }
        if !valid.is_null() {
            for (d, s) in slice_mut(valid, n, "valid")?.iter_mut().zip(f.valid.iter()) {
                *d = *s as u8;
            }
        }
        Ok(())
    })
}

/// # Safety
/// `field` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rf_velocity_free(field: *mut RfVelocityField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Builds the offshore direction field from a shore mask (non-zero =
/// land, sky or other non-water) with default geometry parameters.
///
/// # Safety
/// `shore` must reference `width * height` readable bytes; `out` must be
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rf_offshore_from_mask(
    shore: *const u8,
    width: usize,
    height: usize,
    out: *mut *mut RfDirectionField,
) -> RfStatus {
    guard(|| {
        let out = out.as_mut().ok_or(Failure::Null("out"))?;
        let mask = mask_from(shore, width, height, MaskKind::Shore, "shore")?;
        let (field, _) = offshore_from_shore(&mask, &GeometryParams::default())?;
        *out = Box::into_raw(Box::new(RfDirectionField(field)));
        Ok(())
    })
}

/// Copies interleaved `(ox, oy)` pairs (`2 * width * height` doubles) and
/// validity bytes. Either destination may be NULL.
///
/// # Safety
/// Non-NULL destinations must be writable for `2 * len` doubles and `len`
/// bytes respectively.
#[no_mangle]
pub unsafe extern "C" fn rf_direction_copy(
    field: *const RfDirectionField,
    dirs: *mut f64,
    valid: *mut u8,
    len: usize,
) -> RfStatus {
    guard(|| {
        let f = &handle(field, "field")?.0;
        let n = f.dirs.len();
        check_len(len, n, "direction")?;
        if !dirs.is_null() {
            let d = slice_mut(dirs, 2 * n, "dirs")?;
            for (pair, s) in d.chunks_exact_mut(2).zip(f.dirs.iter()) {
                pair.copy_from_slice(s);
            }
        }
        if !valid.is_null() {
            for (d, s) in slice_mut(valid, n, "valid")?.iter_mut().zip(f.valid.iter()) {
                *d = *s as u8;
            }
        }
        Ok(())
    })
}

/// # Safety
/// `field` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rf_direction_free(field: *mut RfDirectionField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// New all-zero accumulator with `T = 0`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rf_likelihood_new(width: usize, height: usize, out: *mut *mut RfLikelihood) -> RfStatus {
    guard(|| {
        let out = out.as_mut().ok_or(Failure::Null("out"))?;
        cells(width, height)?;
        *out = Box::into_raw(Box::new(RfLikelihood(LikelihoodMatrix::new(width, height))));
        Ok(())
    })
}

/// Applies the rip predicate to one flow field and adds the result.
/// `combined` is the exclusion mask (non-zero = shore or wave); NULL means
/// nothing is excluded.
///
/// # Safety
/// Handles must be live; `combined` must be NULL or reference
/// `width * height` readable bytes.
#[no_mangle]
pub unsafe extern "C" fn rf_likelihood_accumulate(
    lik: *mut RfLikelihood,
    flow: *const RfVelocityField,
    offshore: *const RfDirectionField,
    combined: *const u8,
    speed_eps: f64,
) -> RfStatus {
    guard(|| {
        let lik = lik.as_mut().ok_or(Failure::Null("lik"))?;
        let flow = &handle(flow, "flow")?.0;
        let offshore = &handle(offshore, "offshore")?.0;
        let (w, h) = lik.0.dims();
        let mask = if combined.is_null() {
            BinaryMask::filled(w, h, false, MaskKind::Combined)
        } else {
            mask_from(combined, w, h, MaskKind::Combined, "combined")?
        };
        let region = rip_region(flow, offshore, &mask, speed_eps)?;
        let next = accumulate(lik.0.clone(), &region)?;
        lik.0 = next;
        Ok(())
    })
}

/// Number of fields accumulated so far, or 0 for NULL.
///
/// # Safety
/// `lik` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rf_likelihood_t(lik: *const RfLikelihood) -> u32 {
    lik.as_ref().map_or(0, |l| l.0.t)
}

/// Copies the counts into `counts` (`len >= width * height`).
///
/// # Safety
/// `counts` must be writable for `len` elements.
#[no_mangle]
pub unsafe extern "C" fn rf_likelihood_copy_counts(lik: *const RfLikelihood, counts: *mut u32, len: usize) -> RfStatus {
    guard(|| {
        let l = &handle(lik, "lik")?.0;
        let n = l.counts.len();
        check_len(len, n, "counts")?;
        slice_mut(counts, n, "counts")?.copy_from_slice(l.counts.as_slice());
        Ok(())
    })
}

/// Area under the precision-recall curve against a ground-truth mask.
///
/// # Safety
/// `truth` must reference `width * height` readable bytes of the
/// accumulator's size; `auc` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rf_likelihood_pr_auc(lik: *const RfLikelihood, truth: *const u8, auc: *mut f64) -> RfStatus {
    guard(|| {
        let l = &handle(lik, "lik")?.0;
        let auc = auc.as_mut().ok_or(Failure::Null("auc"))?;
        let (w, h) = l.dims();
        let gt = mask_from(truth, w, h, MaskKind::GroundTruth, "truth")?;
        *auc = pr_curve(l, &gt)?.auc;
        Ok(())
    })
}

/// # Safety
/// `lik` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rf_likelihood_free(lik: *mut RfLikelihood) {
    if !lik.is_null() {
        drop(Box::from_raw(lik));
    }
}
