//! C ABI over the `namf` crate.
//!
//! Images cross the boundary as opaque `NamfImage` handles owned by the
//! caller and released with `namf_image_free`. Every fallible function
//! returns a `NamfStatus`; on failure a description is available from
//! `namf_last_error_message` on the same thread. Panics never unwind into C:
//! they are caught and reported as `NAMF_STATUS_PANIC`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use namf::{Error, GrayImage};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NamfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    DimensionMismatch = 5,
    Panic = 6,
}

/// Opaque 8-bit grayscale image.
pub struct NamfImage {
    inner: GrayImage,
}

/// Tunables of the two-stage filter. Obtain defaults from
/// `namf_params_default`.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NamfParams {
    pub threshold: f64,
    pub w_max: u32,
    pub w_step: u32,
    pub patch_radius: u32,
    pub search_radius: u32,
    pub beta0: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub kernel_a: f64,
}

impl From<namf::NamfParams> for NamfParams {
    fn from(p: namf::NamfParams) -> Self {
        Self {
            threshold: p.detector.threshold,
            w_max: p.detector.w_max as u32,
            w_step: p.detector.w_step as u32,
            patch_radius: p.nlm.patch_radius as u32,
            search_radius: p.nlm.search_radius as u32,
            beta0: p.nlm.beta0,
            beta1: p.nlm.beta1,
            beta2: p.nlm.beta2,
            kernel_a: p.nlm.kernel_a,
        }
    }
}

impl From<NamfParams> for namf::NamfParams {
    fn from(p: NamfParams) -> Self {
        Self {
            detector: namf::DetectorParams {
                w_max: p.w_max as usize,
                w_step: p.w_step as usize,
                threshold: p.threshold,
            },
            nlm: namf::NlmParams {
                patch_radius: p.patch_radius as usize,
                search_radius: p.search_radius as usize,
                beta0: p.beta0,
                beta1: p.beta1,
                beta2: p.beta2,
                kernel_a: p.kernel_a,
            },
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> NamfStatus {
    match e {
        Error::Io { .. } => NamfStatus::Io,
        Error::UnsupportedFormat { .. } | Error::Malformed { .. } => NamfStatus::Format,
        Error::DimensionMismatch { .. } | Error::ImageTooSmall { .. } => {
            NamfStatus::DimensionMismatch
        }
        _ => NamfStatus::InvalidArgument,
    }
}

/// Runs `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), (NamfStatus, String)>) -> NamfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NamfStatus::Ok,
        Ok(Err((status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("internal panic: {msg}"));
            NamfStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (NamfStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (NamfStatus, String) {
    (NamfStatus::NullPointer, format!("{what} is null"))
}

unsafe fn image_ref<'a>(
    img: *const NamfImage,
    what: &str,
) -> Result<&'a GrayImage, (NamfStatus, String)> {
    img.as_ref().map(|h| &h.inner).ok_or_else(|| null(what))
}

unsafe fn path_arg(path: *const c_char) -> Result<String, (NamfStatus, String)> {
    if path.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(path)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| {
            (
                NamfStatus::InvalidArgument,
                "path is not valid UTF-8".into(),
            )
        })
}

unsafe fn emit(out: *mut *mut NamfImage, img: GrayImage) {
    *out = Box::into_raw(Box::new(NamfImage { inner: img }));
}

unsafe fn copy_mask(mask: &namf::PixelMask, dst: *mut u8) {
    if !dst.is_null() {
        let bits = mask.bits();
        let out = std::slice::from_raw_parts_mut(dst, bits.len());
        for (o, &b) in out.iter_mut().zip(bits) {
            *o = u8::from(b);
        }
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn namf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the most recent failure on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn namf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn namf_params_default() -> NamfParams {
    namf::NamfParams::default().into()
}

/// Copies `width * height` bytes from `data` into a new image.
#[no_mangle]
pub unsafe extern "C" fn namf_image_new(
    width: u32,
    height: u32,
    data: *const u8,
    out: *mut *mut NamfImage,
) -> NamfStatus {
    guard(|| {
        if data.is_null() {
            return Err(null("data"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let len = (width as usize)
            .checked_mul(height as usize)
            .ok_or((NamfStatus::InvalidArgument, "dimensions overflow".into()))?;
        let pixels = std::slice::from_raw_parts(data, len).to_vec();
        let img = GrayImage::new(width as usize, height as usize, pixels).map_err(lib_err)?;
        emit(out, img);
        Ok(())
    })
}

/// Releases an image. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn namf_image_free(img: *mut NamfImage) {
    if !img.is_null() {
        drop(Box::from_raw(img));
    }
}

/// Width in pixels, or 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn namf_image_width(img: *const NamfImage) -> u32 {
    img.as_ref().map_or(0, |h| h.inner.width() as u32)
}

#[no_mangle]
pub unsafe extern "C" fn namf_image_height(img: *const NamfImage) -> u32 {
    img.as_ref().map_or(0, |h| h.inner.height() as u32)
}

/// Row-major pixel buffer of `width * height` bytes, owned by the image.
#[no_mangle]
pub unsafe extern "C" fn namf_image_data(img: *const NamfImage) -> *const u8 {
    img.as_ref()
        .map_or(ptr::null(), |h| h.inner.pixels().as_ptr())
}

/// Reads a binary PGM (P5, maxval 255) or 8-bit grayscale PNG.
#[no_mangle]
pub unsafe extern "C" fn namf_image_load(
    path: *const c_char,
    out: *mut *mut NamfImage,
) -> NamfStatus {
    guard(|| {
        let path = path_arg(path)?;
        if out.is_null() {
            return Err(null("out"));
        }
        emit(out, namf::load_image(path).map_err(lib_err)?);
        Ok(())
    })
}

/// Writes PNG for a `.png` path, binary PGM otherwise.
#[no_mangle]
pub unsafe extern "C" fn namf_image_save(img: *const NamfImage, path: *const c_char) -> NamfStatus {
    guard(|| {
        let img = image_ref(img, "img")?;
        let path = path_arg(path)?;
        namf::save_image(img, path).map_err(lib_err)
    })
}

/// Salt-and-pepper corruption. `truth_out`, when not NULL, receives
/// `width * height` bytes: 1 for each overwritten pixel, else 0.
#[no_mangle]
pub unsafe extern "C" fn namf_inject(
    img: *const NamfImage,
    density: f64,
    salt_fraction: f64,
    seed: u64,
    out: *mut *mut NamfImage,
    truth_out: *mut u8,
) -> NamfStatus {
    guard(|| {
        let img = image_ref(img, "img")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let spec = namf::NoiseSpec {
            density,
            salt_fraction,
            seed,
        };
        let (noisy, truth) = namf::inject_sap(img, &spec).map_err(lib_err)?;
        copy_mask(&truth, truth_out);
        emit(out, noisy);
        Ok(())
    })
}

/// Two-stage restoration. `params` may be NULL for defaults; `mask_out`,
/// when not NULL, receives the detected-noise mask (1 = noisy).
#[no_mangle]
pub unsafe extern "C" fn namf_denoise(
    img: *const NamfImage,
    params: *const NamfParams,
    out: *mut *mut NamfImage,
    mask_out: *mut u8,
) -> NamfStatus {
    guard(|| {
        let img = image_ref(img, "img")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let params: namf::NamfParams = params
            .as_ref()
            .copied()
            .map_or_else(Default::default, Into::into);
        let result = namf::namf_detailed(img, &params).map_err(lib_err)?;
        copy_mask(&result.mask, mask_out);
        emit(out, result.image);
        Ok(())
    })
}

/// 3x3 median filter over every pixel.
#[no_mangle]
pub unsafe extern "C" fn namf_median_filter(
    img: *const NamfImage,
    out: *mut *mut NamfImage,
) -> NamfStatus {
    guard(|| {
        let img = image_ref(img, "img")?;
        if out.is_null() {
            return Err(null("out"));
        }
        emit(out, namf::median_filter(img));
        Ok(())
    })
}

/// PSNR in dB; writes +infinity for identical images.
#[no_mangle]
pub unsafe extern "C" fn namf_psnr(
    a: *const NamfImage,
    b: *const NamfImage,
    out: *mut f64,
) -> NamfStatus {
    guard(|| {
        let (a, b) = (image_ref(a, "a")?, image_ref(b, "b")?);
        if out.is_null() {
            return Err(null("out"));
        }
        *out = namf::psnr(a, b).map_err(lib_err)?;
        Ok(())
    })
}

/// Mean SSIM over 11x11 Gaussian windows.
#[no_mangle]
pub unsafe extern "C" fn namf_ssim(
    a: *const NamfImage,
    b: *const NamfImage,
    out: *mut f64,
) -> NamfStatus {
    guard(|| {
        let (a, b) = (image_ref(a, "a")?, image_ref(b, "b")?);
        if out.is_null() {
            return Err(null("out"));
        }
        *out = namf::ssim(a, b).map_err(lib_err)?;
        Ok(())
    })
}
