use std::ffi::{CStr, CString};
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::ptr;

use labelreader::cascade::{format_model, CascadeClassifier, CascadeStage, WeakLearner};
use labelreader::pipeline::synth;
use labelreader_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(lr_last_error_message()) }.to_string_lossy().into_owned()
}

fn accept_all_model(dir: &Path) -> CString {
    let l = WeakLearner { feature: 0, threshold: -1.0, polarity: 1, alpha: 1.0 };
    let m = CascadeClassifier::new(171, vec![CascadeStage { learners: vec![l], threshold: 0.0 }]);
    let path = dir.join("model.txt");
    std::fs::write(&path, format_model(&m)).unwrap();
    CString::new(path.to_str().unwrap()).unwrap()
}

#[test]
fn version_is_set() {
    let v = unsafe { CStr::from_ptr(lr_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn null_arguments_are_reported() {
    unsafe {
        assert_eq!(lr_config_default(ptr::null_mut()), LrStatus::NullArgument);
        assert!(last_error().contains("null"));
        let mut m = ptr::null_mut();
        assert_eq!(lr_model_load(ptr::null(), &mut m), LrStatus::NullArgument);
        assert_eq!(lr_model_feature_len(ptr::null()), 0);
        lr_model_free(ptr::null_mut());
        lr_config_free(ptr::null_mut());
        lr_rects_free(ptr::null_mut(), 0);
    }
}

#[test]
fn missing_model_is_an_io_error() {
    let path = CString::new("/nonexistent/model.txt").unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { lr_model_load(path.as_ptr(), &mut m) }, LrStatus::Io);
    assert!(m.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn bad_config_key_is_a_parse_error() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "mog.unknown = 1").unwrap();
    let path = CString::new(f.path().to_str().unwrap()).unwrap();
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { lr_config_load(path.as_ptr(), &mut c) }, LrStatus::Parse);
    assert!(last_error().contains("mog.unknown"));
}

#[test]
fn otsu_through_the_c_interface() {
    let mut hist = [0u64; 256];
    hist[10] = 50;
    hist[200] = 30;
    let mut t = 0u8;
    assert_eq!(unsafe { lr_otsu_threshold(hist.as_ptr(), &mut t) }, LrStatus::Ok);
    assert_eq!(t, 10);
    let flat = [0u64; 256];
    assert_eq!(unsafe { lr_otsu_threshold(flat.as_ptr(), &mut t) }, LrStatus::Degenerate);
}

#[test]
fn localize_returns_owned_boxes() {
    let dir = tempfile::tempdir().unwrap();
    let model_path = accept_all_model(dir.path());
    let img = &synth::stills(5, 2, 1, &Default::default(), "x")[0];
    unsafe {
        let (mut cfg, mut model) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(lr_config_default(&mut cfg), LrStatus::Ok);
        assert_eq!(lr_model_load(model_path.as_ptr(), &mut model), LrStatus::Ok);
        assert_eq!(lr_model_feature_len(model), 171);
        let (mut rects, mut len) = (ptr::null_mut(), 0usize);
        let (w, h) = img.frame.dims();
        let st = lr_localize(cfg, model, img.frame.data().as_ptr(), w, h, &mut rects, &mut len);
        assert_eq!(st, LrStatus::Ok, "{}", last_error());
        // every word chain passes a cascade that accepts everything
        assert!(len >= img.words.len());
        let boxes = std::slice::from_raw_parts(rects, len);
        for b in boxes {
            assert!(b.x + b.w <= w && b.y + b.h <= h);
        }
        lr_rects_free(rects, len);

        let st = lr_localize(cfg, model, img.frame.data().as_ptr(), 0, h, &mut rects, &mut len);
        assert_eq!(st, LrStatus::Dimension);
        lr_model_free(model);
        lr_config_free(cfg);
    }
}

#[test]
fn roi_of_static_frames_is_no_object() {
    let (w, h, n) = (32u32, 24u32, 4usize);
    let frames = vec![77u8; n * (w * h * 3) as usize];
    let mut cfg = ptr::null_mut();
    let mut out = LrRect::default();
    unsafe {
        lr_config_default(&mut cfg);
        assert_eq!(lr_roi(cfg, frames.as_ptr(), n, w, h, &mut out), LrStatus::NoObject);
        assert_eq!(lr_roi(cfg, frames.as_ptr(), 0, w, h, &mut out), LrStatus::Dimension);
        lr_config_free(cfg);
    }
}

#[test]
fn roi_of_shaken_square() {
    let (frames, squares) = synth::shaken_square(9, 160, 120, 20, 30, 8);
    let (w, h) = frames[0].dims();
    let bytes: Vec<u8> = frames.iter().flat_map(|f| f.data().iter().copied()).collect();
    let mut cfg = ptr::null_mut();
    let mut out = LrRect::default();
    unsafe {
        lr_config_default(&mut cfg);
        assert_eq!(lr_roi(cfg, bytes.as_ptr(), frames.len(), w, h, &mut out), LrStatus::Ok, "{}", last_error());
        lr_config_free(cfg);
    }
    let last = squares.last().unwrap();
    assert!(out.x <= last.x && out.y <= last.y);
    assert!(out.x + out.w >= last.x + last.w && out.y + out.h >= last.y + last.h);
}

/// The checked-in header must compile as C and declare every export.
#[test]
fn header_is_valid_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/labelreader.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in [
        "lr_version", "lr_last_error_message", "lr_config_default", "lr_config_load", "lr_config_free",
        "lr_model_load", "lr_model_feature_len", "lr_model_free", "lr_localize", "lr_rects_free", "lr_roi",
        "lr_otsu_threshold",
    ] {
        assert!(text.contains(&format!(" {f}(")) || text.contains(&format!("*{f}(")), "{f} missing from header");
    }
    let Ok(status) = Command::new("cc").args(["-fsyntax-only", "-x", "c", "-std=c99"]).arg(&header).status() else {
        eprintln!("no C compiler; syntax check skipped");
        return;
    };
    assert!(status.success());
}
