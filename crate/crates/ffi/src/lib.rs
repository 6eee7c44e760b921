//! C interface to the text-reading pipeline.
//!
//! Objects are opaque handles created and freed by this library. Every
//! fallible call returns an [`LrStatus`]; on failure a message is kept per
//! thread and can be read with [`lr_last_error_message`]. Panics never cross
//! the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use labelreader::cascade::{load_model, CascadeClassifier};
use labelreader::imaging::{Frame, Rect};
use labelreader::motion::FrameSequence;
use labelreader::pipeline::{find_roi, localize, PipelineConfig};
use labelreader::readout::otsu_threshold;
use labelreader::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LrStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    Parameter = 5,
    Dimension = 6,
    NoObject = 7,
    Degenerate = 8,
    Ocr = 9,
    Tts = 10,
    UnknownImage = 11,
    Panic = 12,
}

impl From<&Error> for LrStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Dimension(_) => LrStatus::Dimension,
            Error::Parameter(_) => LrStatus::Parameter,
            Error::NoObjectDetected => LrStatus::NoObject,
            Error::Degenerate(_) => LrStatus::Degenerate,
            Error::Parse { .. } => LrStatus::Parse,
            Error::Ocr { .. } => LrStatus::Ocr,
            Error::Tts { .. } => LrStatus::Tts,
            Error::UnknownImage(_) => LrStatus::UnknownImage,
            Error::Io { .. } => LrStatus::Io,
        }
    }
}

/// Axis-aligned box in pixels.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LrRect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl From<Rect> for LrRect {
    fn from(r: Rect) -> Self {
        LrRect { x: r.x, y: r.y, w: r.w, h: r.h }
    }
}

/// Pipeline settings.
pub struct LrConfig {
    inner: PipelineConfig,
}

/// Trained cascade classifier.
pub struct LrModel {
    inner: CascadeClassifier,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

/// Runs `f`, recording any error or panic and converting it to a status.
fn guard(f: impl FnOnce() -> Result<(), (LrStatus, String)>) -> LrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            LrStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            LrStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (LrStatus, String) {
    (LrStatus::from(&e), e.to_string())
}

fn null_err(what: &str) -> (LrStatus, String) {
    (LrStatus::NullArgument, format!("{what} is null"))
}

unsafe fn path_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (LrStatus, String)> {
    if p.is_null() {
        return Err(null_err(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (LrStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

/// Frame over `w*h*3` interleaved RGB bytes.
unsafe fn frame_arg(rgb: *const u8, w: u32, h: u32) -> Result<Frame, (LrStatus, String)> {
    if rgb.is_null() {
        return Err(null_err("rgb"));
    }
    let len = (w as usize).checked_mul(h as usize).and_then(|n| n.checked_mul(3));
    let len = len.ok_or_else(|| (LrStatus::Dimension, "image size overflows".to_string()))?;
    let data = std::slice::from_raw_parts(rgb, len).to_vec();
    Frame::new(w, h, data).map_err(lib_err)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn lr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Default settings.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn lr_config_default(out: *mut *mut LrConfig) -> LrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_err("out"));
        }
        *out = Box::into_raw(Box::new(LrConfig { inner: PipelineConfig::default() }));
        Ok(())
    })
}

/// Settings read from a `key = value` file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn lr_config_load(path: *const c_char, out: *mut *mut LrConfig) -> LrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_err("out"));
        }
        let path = path_arg(path, "path")?;
        let inner = PipelineConfig::load(path).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(LrConfig { inner }));
        Ok(())
    })
}

/// # Safety
/// `cfg` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn lr_config_free(cfg: *mut LrConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Loads a cascade model file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn lr_model_load(path: *const c_char, out: *mut *mut LrModel) -> LrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_err("out"));
        }
        let path = path_arg(path, "path")?;
        let inner = load_model(path).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(LrModel { inner }));
        Ok(())
    })
}

/// Feature vector length the model expects, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle from [`lr_model_load`].
#[no_mangle]
pub unsafe extern "C" fn lr_model_feature_len(model: *const LrModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.feature_len)
}

/// # Safety
/// `model` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn lr_model_free(model: *mut LrModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Text regions in an RGB image. On success `*out_rects` holds `*out_len`
/// boxes in reading order (null when there are none); release them with
/// [`lr_rects_free`].
///
/// # Safety
/// `rgb` must point to `width*height*3` bytes; handles must be live;
/// `out_rects` and `out_len` must be valid for one write each.
#[no_mangle]
pub unsafe extern "C" fn lr_localize(
    cfg: *const LrConfig,
    model: *const LrModel,
    rgb: *const u8,
    width: u32,
    height: u32,
    out_rects: *mut *mut LrRect,
    out_len: *mut usize,
) -> LrStatus {
    guard(|| {
        let cfg = cfg.as_ref().ok_or_else(|| null_err("cfg"))?;
        let model = model.as_ref().ok_or_else(|| null_err("model"))?;
        if out_rects.is_null() || out_len.is_null() {
            return Err(null_err("output pointer"));
        }
        let frame = frame_arg(rgb, width, height)?;
        let dets = localize(&frame, &cfg.inner, &model.inner).map_err(lib_err)?;
        let rects: Box<[LrRect]> = dets.iter().map(|d| LrRect::from(d.bbox)).collect();
        *out_len = rects.len();
        *out_rects = if rects.is_empty() { ptr::null_mut() } else { Box::into_raw(rects).cast() };
        Ok(())
    })
}

/// # Safety
/// `rects`/`len` must be exactly what [`lr_localize`] returned. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn lr_rects_free(rects: *mut LrRect, len: usize) {
    if !rects.is_null() {
        drop(Box::from_raw(ptr::slice_from_raw_parts_mut(rects, len)));
    }
}

/// Region of interest of a shaken object. `frames` holds `count` RGB frames
/// of `width*height*3` bytes each, back to back. Returns
/// [`LrStatus::NoObject`] when nothing moved persistently.
///
/// # Safety
/// `frames` must point to `count*width*height*3` bytes; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn lr_roi(
    cfg: *const LrConfig,
    frames: *const u8,
    count: usize,
    width: u32,
    height: u32,
    out: *mut LrRect,
) -> LrStatus {
    guard(|| {
        let cfg = cfg.as_ref().ok_or_else(|| null_err("cfg"))?;
        if out.is_null() {
            return Err(null_err("out"));
        }
        if frames.is_null() {
            return Err(null_err("frames"));
        }
        let stride = width as usize * height as usize * 3;
        let list = (0..count)
            .map(|i| frame_arg(frames.add(i * stride), width, height))
            .collect::<Result<Vec<_>, _>>()?;
        let seq = FrameSequence::new(list).map_err(lib_err)?;
        let roi = find_roi(&seq, &cfg.inner).map_err(lib_err)?.ok_or_else(|| lib_err(Error::NoObjectDetected))?;
        *out = roi.bbox.into();
        Ok(())
    })
}

/// Otsu threshold of a 256-bin histogram. Fails with
/// [`LrStatus::Degenerate`] when all mass sits in one bin.
///
/// # Safety
/// `histogram` must point to 256 values; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn lr_otsu_threshold(histogram: *const u64, out: *mut u8) -> LrStatus {
    guard(|| {
        if histogram.is_null() || out.is_null() {
            return Err(null_err("argument"));
        }
        let mut hist = [0u64; 256];
        hist.copy_from_slice(std::slice::from_raw_parts(histogram, 256));
        let t = otsu_threshold(&hist).ok_or_else(|| (LrStatus::Degenerate, "one-bin histogram".to_string()))?;
        *out = t;
        Ok(())
    })
}
