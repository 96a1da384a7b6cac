//! C ABI over the `labseg` pipeline.
//!
//! Every fallible call returns a [`LabsegStatus`]. On failure a message is
//! stored per thread and can be read with [`labseg_last_error_message`].
//! Objects are opaque handles created by `*_new`/`*_read`/`labseg_run` and
//! released with the matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use labseg::cluster::Distance;
use labseg::color::FeatureMode;
use labseg::gradient::Magnitude;
use labseg::io::{read_rgb, write_outputs};
use labseg::metrics::psnr_per_channel;
use labseg::pipeline::{run_pipeline, MetricsTarget, PipelineConfig, PipelineResult};
use labseg::{Connectivity, Error, RgbImage};

pub const LABSEG_DISTANCE_COSINE: u32 = 0;
pub const LABSEG_DISTANCE_SQEUCLIDEAN: u32 = 1;
pub const LABSEG_FEATURES_AB: u32 = 0;
pub const LABSEG_FEATURES_LAB: u32 = 1;
pub const LABSEG_MAGNITUDE_EXACT: u32 = 0;
pub const LABSEG_MAGNITUDE_MANHATTAN: u32 = 1;
pub const LABSEG_TARGET_FINAL_RENDER: u32 = 0;
pub const LABSEG_TARGET_RIDGE_OVERLAY: u32 = 1;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabsegStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Processing = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

/// Opaque 8-bit sRGB image.
pub struct LabsegImage(RgbImage);

/// Opaque pipeline configuration.
pub struct LabsegConfig(PipelineConfig);

/// Opaque pipeline output.
pub struct LabsegResult(PipelineResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: LabsegStatus, msg: impl Into<String>) -> LabsegStatus {
    set_error(msg);
    status
}

fn status_of(err: &Error) -> LabsegStatus {
    if err.is_io() {
        LabsegStatus::Io
    } else if matches!(
        err,
        Error::InvalidParameter(_) | Error::InvalidDimensions { .. } | Error::DimensionMismatch { .. }
    ) {
        LabsegStatus::InvalidArgument
    } else {
        LabsegStatus::Processing
    }
}

/// Runs `f`, clearing the last error first and converting panics.
fn guard(f: impl FnOnce() -> Result<(), LabsegStatus>) -> LabsegStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LabsegStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(LabsegStatus::Panic, "internal panic"),
    }
}

fn lib_err(err: Error) -> LabsegStatus {
    fail(status_of(&err), err.to_string())
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, LabsegStatus> {
    p.as_ref().ok_or_else(|| fail(LabsegStatus::NullPointer, format!("{what} is null")))
}

unsafe fn borrow_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, LabsegStatus> {
    p.as_mut().ok_or_else(|| fail(LabsegStatus::NullPointer, format!("{what} is null")))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, LabsegStatus> {
    if p.is_null() {
        return Err(fail(LabsegStatus::NullPointer, "path is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(PathBuf::from)
        .map_err(|_| fail(LabsegStatus::InvalidArgument, "path is not valid UTF-8"))
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), LabsegStatus> {
    if out.is_null() {
        return Err(fail(LabsegStatus::NullPointer, "output handle pointer is null"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Last error message on this thread, or null. The pointer stays valid until
/// the next labseg call on the same thread.
#[no_mangle]
pub extern "C" fn labseg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Copies `len` bytes of packed RGB (`3 * width * height`) into a new image.
///
/// # Safety
/// `rgb` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn labseg_image_new(
    width: usize,
    height: usize,
    rgb: *const u8,
    len: usize,
    out: *mut *mut LabsegImage,
) -> LabsegStatus {
    guard(|| {
        if rgb.is_null() {
            return Err(fail(LabsegStatus::NullPointer, "rgb is null"));
        }
        if Some(len) != width.checked_mul(height).and_then(|n| n.checked_mul(3)) {
            return Err(fail(LabsegStatus::InvalidArgument, format!("expected 3*{width}*{height} bytes, got {len}")));
        }
        let bytes = std::slice::from_raw_parts(rgb, len);
        let px = bytes.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        emit(out, LabsegImage(RgbImage::new(width, height, px).map_err(lib_err)?))
    })
}

/// Reads a PNG or binary PPM file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn labseg_image_read(path: *const c_char, out: *mut *mut LabsegImage) -> LabsegStatus {
    guard(|| {
        let path = path_arg(path)?;
        emit(out, LabsegImage(read_rgb(&path).map_err(lib_err)?))
    })
}

/// # Safety
/// `image` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn labseg_image_width(image: *const LabsegImage) -> usize {
    image.as_ref().map_or(0, |i| i.0.width())
}

/// # Safety
/// `image` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn labseg_image_height(image: *const LabsegImage) -> usize {
    image.as_ref().map_or(0, |i| i.0.height())
}

/// # Safety
/// `image` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn labseg_image_free(image: *mut LabsegImage) {
    if !image.is_null() {
        drop(Box::from_raw(image));
    }
}

/// A configuration holding the defaults.
#[no_mangle]
pub extern "C" fn labseg_config_new() -> *mut LabsegConfig {
    Box::into_raw(Box::new(LabsegConfig(PipelineConfig::default())))
}

/// # Safety
/// `config` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn labseg_config_free(config: *mut LabsegConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

unsafe fn with_config(config: *mut LabsegConfig, f: impl FnOnce(&mut PipelineConfig) -> Result<(), LabsegStatus>) -> LabsegStatus {
    guard(|| {
        let cfg = borrow_mut(config, "config")?;
        let mut next = cfg.0.clone();
        f(&mut next)?;
        next.validate().map_err(lib_err)?;
        cfg.0 = next;
        Ok(())
    })
}

fn bad_code(what: &str, code: u32) -> LabsegStatus {
    fail(LabsegStatus::InvalidArgument, format!("unknown {what} code {code}"))
}

/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn labseg_config_set_k(config: *mut LabsegConfig, k: usize) -> LabsegStatus {
    with_config(config, |c| {
        c.k = k;
        Ok(())
    })
}

/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn labseg_config_set_seed(config: *mut LabsegConfig, seed: u64) -> LabsegStatus {
    with_config(config, |c| {
        c.seed = seed;
        Ok(())
    })
}

/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn labseg_config_set_max_iter(config: *mut LabsegConfig, max_iter: usize, tol: f64) -> LabsegStatus {
    with_config(config, |c| {
        c.max_iter = max_iter;
        c.tol = tol;
        Ok(())
    })
}

/// One of `LABSEG_DISTANCE_*`.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn labseg_config_set_distance(config: *mut LabsegConfig, distance: u32) -> LabsegStatus {
    with_config(config, |c| {
        c.distance = match distance {
            LABSEG_DISTANCE_COSINE => Distance::Cosine,
            LABSEG_DISTANCE_SQEUCLIDEAN => Distance::SqEuclidean,
            other => return Err(bad_code("distance", other)),
        };
        Ok(())
    })
}

/// One of `LABSEG_FEATURES_*`.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn labseg_config_set_features(config: *mut LabsegConfig, features: u32) -> LabsegStatus {
    with_config(config, |c| {
        c.features = match features {
            LABSEG_FEATURES_AB => FeatureMode::Ab,
            LABSEG_FEATURES_LAB => FeatureMode::Lab,
            other => return Err(bad_code("features", other)),
        };
        Ok(())
    })
}

/// One of `LABSEG_MAGNITUDE_*`.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn labseg_config_set_magnitude(config: *mut LabsegConfig, magnitude: u32) -> LabsegStatus {
    with_config(config, |c| {
        c.magnitude = match magnitude {
            LABSEG_MAGNITUDE_EXACT => Magnitude::Exact,
            LABSEG_MAGNITUDE_MANHATTAN => Magnitude::Manhattan,
            other => return Err(bad_code("magnitude", other)),
        };
        Ok(())
    })
}

/// 4 or 8.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn labseg_config_set_connectivity(config: *mut LabsegConfig, connectivity: u32) -> LabsegStatus {
    with_config(config, |c| {
        c.connectivity = Connectivity::from_count(connectivity).map_err(lib_err)?;
        Ok(())
    })
}

/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn labseg_config_set_markers(
    config: *mut LabsegConfig,
    fg_se_radius: usize,
    min_marker_area: usize,
) -> LabsegStatus {
    with_config(config, |c| {
        c.fg_se_radius = fg_se_radius;
        c.min_marker_area = min_marker_area;
        Ok(())
    })
}

/// Peak value and comparison image (`LABSEG_TARGET_*`) for the metrics.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn labseg_config_set_metrics(config: *mut LabsegConfig, max_i: f64, target: u32) -> LabsegStatus {
    with_config(config, |c| {
        c.max_i = max_i;
        c.metrics_target = match target {
            LABSEG_TARGET_FINAL_RENDER => MetricsTarget::FinalRender,
            LABSEG_TARGET_RIDGE_OVERLAY => MetricsTarget::RidgeOverlay,
            other => return Err(bad_code("metrics target", other)),
        };
        Ok(())
    })
}

/// Runs the full pipeline. A null `config` means defaults.
///
/// # Safety
/// `image` must be a live handle, `config` null or live, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn labseg_run(
    image: *const LabsegImage,
    config: *const LabsegConfig,
    out: *mut *mut LabsegResult,
) -> LabsegStatus {
    guard(|| {
        let image = borrow(image, "image")?;
        let default = PipelineConfig::default();
        let cfg = config.as_ref().map_or(&default, |c| &c.0);
        emit(out, LabsegResult(run_pipeline(&image.0, cfg).map_err(lib_err)?))
    })
}

/// # Safety
/// `result` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn labseg_result_free(result: *mut LabsegResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Number of pixels; the length `labseg_result_labels` needs.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn labseg_result_pixel_count(result: *const LabsegResult) -> usize {
    result.as_ref().map_or(0, |r| r.0.labels.len())
}

/// Largest region label; 0 marks watershed lines.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn labseg_result_region_count(result: *const LabsegResult) -> u32 {
    result.as_ref().map_or(0, |r| r.0.labels.max_label())
}

/// Copies the row-major region labels into `out` (`len` >= pixel count).
///
/// # Safety
/// `result` must be live; `out` must have room for `len` values.
#[no_mangle]
pub unsafe extern "C" fn labseg_result_labels(result: *const LabsegResult, out: *mut u32, len: usize) -> LabsegStatus {
    guard(|| {
        let labels = borrow(result, "result")?.0.labels.data();
        if out.is_null() {
            return Err(fail(LabsegStatus::NullPointer, "out is null"));
        }
        if len < labels.len() {
            return Err(fail(LabsegStatus::BufferTooSmall, format!("need {} labels, got {len}", labels.len())));
        }
        ptr::copy_nonoverlapping(labels.as_ptr(), out, labels.len());
        Ok(())
    })
}

/// Copies the final region-mean render as packed RGB (`len` >= 3 * pixels).
///
/// # Safety
/// `result` must be live; `out` must have room for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn labseg_result_final_rgb(result: *const LabsegResult, out: *mut u8, len: usize) -> LabsegStatus {
    guard(|| {
        let px = borrow(result, "result")?.0.final_render.data();
        if out.is_null() {
            return Err(fail(LabsegStatus::NullPointer, "out is null"));
        }
        if len < px.len() * 3 {
            return Err(fail(LabsegStatus::BufferTooSmall, format!("need {} bytes, got {len}", px.len() * 3)));
        }
        let dst = std::slice::from_raw_parts_mut(out, px.len() * 3);
        for (d, p) in dst.chunks_exact_mut(3).zip(px) {
            d.copy_from_slice(p);
        }
        Ok(())
    })
}

/// Per-channel MSE and PSNR (dB; +inf for identical channels).
///
/// # Safety
/// `result` must be live; `mse` and `psnr_db` must each hold 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn labseg_result_metrics(result: *const LabsegResult, mse: *mut f64, psnr_db: *mut f64) -> LabsegStatus {
    guard(|| {
        let m = &borrow(result, "result")?.0.metrics;
        if mse.is_null() || psnr_db.is_null() {
            return Err(fail(LabsegStatus::NullPointer, "metric output is null"));
        }
        ptr::copy_nonoverlapping(m.mse.as_ptr(), mse, 3);
        ptr::copy_nonoverlapping(m.psnr_db.as_ptr(), psnr_db, 3);
        Ok(())
    })
}

/// Writes the standard output files into `dir`, creating it if needed.
///
/// # Safety
/// `result` must be live; `dir` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn labseg_result_write(result: *const LabsegResult, dir: *const c_char) -> LabsegStatus {
    guard(|| {
        let r = borrow(result, "result")?;
        let dir = path_arg(dir)?;
        write_outputs(&dir, &r.0).map_err(lib_err)?;
        Ok(())
    })
}

/// PSNR in dB for a single MSE value.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn labseg_psnr(mse: f64, max_i: f64, out: *mut f64) -> LabsegStatus {
    guard(|| {
        let out = borrow_mut(out, "out")?;
        *out = psnr_per_channel([mse; 3], max_i).map_err(lib_err)?[0];
        Ok(())
    })
}
