//! C ABI over the `naseval` core.
//!
//! Every fallible function returns an [`NseStatus`] and writes its result
//! through an out-pointer. On failure, [`nse_last_error_message`] describes
//! the error for the calling thread. Objects are opaque handles released
//! with their matching `_free` function.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use naseval::audio::{make_anchor, read_wav, write_wav16, AudioClip};
use naseval::data_io::load_embeddings;
use naseval::metrics::{fad, inception_score, kid, EmbeddingSet, ProbabilityMatrix};
use naseval::stats::{krippendorff_alpha, wilcoxon_signed_rank};
use naseval::Error;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NseStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ShapeMismatch = 3,
    InsufficientData = 4,
    Format = 5,
    Io = 6,
    Panic = 7,
}

/// Opaque N×D embedding matrix.
pub struct NseEmbeddings(EmbeddingSet);

/// Opaque mono audio clip.
pub struct NseClip(AudioClip);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<String>) {
    let msg = CString::new(message.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> NseStatus {
    match err {
        Error::InvalidParameter(_) | Error::NonFinite(_) | Error::RowNotNormalized(_) => {
            NseStatus::InvalidArgument
        }
        Error::ShapeMismatch(_) => NseStatus::ShapeMismatch,
        Error::InsufficientData(_) | Error::InsufficientDiversity(_) | Error::EmptyAudio => {
            NseStatus::InsufficientData
        }
        Error::MalformedWav(_)
        | Error::UnsupportedCodec(_)
        | Error::NotAemb
        | Error::Aemb(_)
        | Error::Manifest(_)
        | Error::Parse { .. }
        | Error::Json(_) => NseStatus::Format,
        Error::File { .. } | Error::Io(_) => NseStatus::Io,
    }
}

/// Runs `f`, recording any error or panic for [`nse_last_error_message`].
fn guard(f: impl FnOnce() -> Result<(), NseStatus>) -> NseStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            NseStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(_) => {
            set_error("internal panic");
            NseStatus::Panic
        }
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, NseStatus>;
}

impl<T> OrStatus<T> for naseval::Result<T> {
    fn or_status(self) -> Result<T, NseStatus> {
        self.map_err(|e| {
            set_error(e.to_string());
            status_of(&e)
        })
    }
}

fn null(what: &str) -> NseStatus {
    set_error(format!("null pointer: {what}"));
    NseStatus::NullPointer
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], NseStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn path<'a>(p: *const c_char) -> Result<&'a str, NseStatus> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("path is not valid UTF-8");
        NseStatus::InvalidArgument
    })
}

fn checked_len(a: usize, b: usize) -> Result<usize, NseStatus> {
    a.checked_mul(b).ok_or_else(|| {
        set_error("matrix size overflows");
        NseStatus::InvalidArgument
    })
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn nse_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Copies a row-major `rows × cols` matrix into a new handle.
#[no_mangle]
pub unsafe extern "C" fn nse_embeddings_new(
    data: *const f64,
    rows: usize,
    cols: usize,
    out: *mut *mut NseEmbeddings,
) -> NseStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let values = slice(data, checked_len(rows, cols)?, "data")?.to_vec();
        let set = EmbeddingSet::new(values, rows, cols, "ffi").or_status()?;
        *out = Box::into_raw(Box::new(NseEmbeddings(set)));
        Ok(())
    })
}

/// Loads an AEMB or CSV embedding file.
#[no_mangle]
pub unsafe extern "C" fn nse_embeddings_read(
    file: *const c_char,
    out: *mut *mut NseEmbeddings,
) -> NseStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let set = load_embeddings(path(file)?, "ffi").or_status()?;
        *out = Box::into_raw(Box::new(NseEmbeddings(set)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn nse_embeddings_rows(set: *const NseEmbeddings) -> usize {
    set.as_ref().map_or(0, |s| s.0.rows())
}

#[no_mangle]
pub unsafe extern "C" fn nse_embeddings_cols(set: *const NseEmbeddings) -> usize {
    set.as_ref().map_or(0, |s| s.0.dim())
}

#[no_mangle]
pub unsafe extern "C" fn nse_embeddings_free(set: *mut NseEmbeddings) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

unsafe fn pair<'a>(
    a: *const NseEmbeddings,
    b: *const NseEmbeddings,
    out: *mut f64,
) -> Result<(&'a EmbeddingSet, &'a EmbeddingSet), NseStatus> {
    if out.is_null() {
        return Err(null("out"));
    }
    match (a.as_ref(), b.as_ref()) {
        (Some(a), Some(b)) => Ok((&a.0, &b.0)),
        _ => Err(null("embeddings")),
    }
}

/// Fréchet audio distance between two embedding sets.
#[no_mangle]
pub unsafe extern "C" fn nse_fad(
    reference: *const NseEmbeddings,
    generated: *const NseEmbeddings,
    out: *mut f64,
) -> NseStatus {
    guard(|| {
        let (r, g) = pair(reference, generated, out)?;
        *out = fad(r, g).or_status()?;
        Ok(())
    })
}

/// Unbiased kernel inception distance (whole-set).
#[no_mangle]
pub unsafe extern "C" fn nse_kid(
    reference: *const NseEmbeddings,
    generated: *const NseEmbeddings,
    out: *mut f64,
) -> NseStatus {
    guard(|| {
        let (r, g) = pair(reference, generated, out)?;
        *out = kid(r, g).or_status()?;
        Ok(())
    })
}

/// Inception score of a row-major `rows × classes` probability matrix.
#[no_mangle]
pub unsafe extern "C" fn nse_inception_score(
    probs: *const f64,
    rows: usize,
    classes: usize,
    out: *mut f64,
) -> NseStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let values = slice(probs, checked_len(rows, classes)?, "probs")?.to_vec();
        let m = ProbabilityMatrix::new(values, rows, classes).or_status()?;
        *out = inception_score(&m);
        Ok(())
    })
}

/// Two-sided Wilcoxon signed-rank test on `n` paired scores.
#[no_mangle]
pub unsafe extern "C" fn nse_wilcoxon(
    x: *const f64,
    y: *const f64,
    n: usize,
    statistic: *mut f64,
    p_value: *mut f64,
) -> NseStatus {
    guard(|| {
        if statistic.is_null() || p_value.is_null() {
            return Err(null("out"));
        }
        let r = wilcoxon_signed_rank(slice(x, n, "x")?, slice(y, n, "y")?).or_status()?;
        *statistic = r.statistic;
        *p_value = r.p_value;
        Ok(())
    })
}

/// Interval Krippendorff's α over a row-major `raters × units` matrix; NaN marks a missing score.
#[no_mangle]
pub unsafe extern "C" fn nse_krippendorff_alpha(
    values: *const f64,
    raters: usize,
    units: usize,
    out: *mut f64,
) -> NseStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let v = slice(values, checked_len(raters, units)?, "values")?;
        let matrix: Vec<Vec<Option<f64>>> = (0..raters)
            .map(|r| {
                v[r * units..(r + 1) * units]
                    .iter()
                    .map(|x| (!x.is_nan()).then_some(*x))
                    .collect()
            })
            .collect();
        *out = krippendorff_alpha(&matrix).or_status()?;
        Ok(())
    })
}

/// Copies samples in [-1, 1] into a new clip.
#[no_mangle]
pub unsafe extern "C" fn nse_clip_new(
    samples: *const f64,
    len: usize,
    sample_rate: u32,
    out: *mut *mut NseClip,
) -> NseStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let clip = AudioClip::new(slice(samples, len, "samples")?.to_vec(), sample_rate).or_status()?;
        *out = Box::into_raw(Box::new(NseClip(clip)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn nse_clip_read_wav(file: *const c_char, out: *mut *mut NseClip) -> NseStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let clip = read_wav(path(file)?).or_status()?;
        *out = Box::into_raw(Box::new(NseClip(clip)));
        Ok(())
    })
}

/// Writes the clip as 16-bit PCM.
#[no_mangle]
pub unsafe extern "C" fn nse_clip_write_wav16(clip: *const NseClip, file: *const c_char) -> NseStatus {
    guard(|| {
        let clip = clip.as_ref().ok_or_else(|| null("clip"))?;
        write_wav16(path(file)?, &clip.0).or_status()
    })
}

/// Renders the listening-test anchor (1 kHz low-pass, 8-bit) of `clip`.
#[no_mangle]
pub unsafe extern "C" fn nse_clip_anchor(clip: *const NseClip, out: *mut *mut NseClip) -> NseStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let clip = clip.as_ref().ok_or_else(|| null("clip"))?;
        let anchor = make_anchor(&clip.0).or_status()?;
        *out = Box::into_raw(Box::new(NseClip(anchor)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn nse_clip_len(clip: *const NseClip) -> usize {
    clip.as_ref().map_or(0, |c| c.0.len())
}

#[no_mangle]
pub unsafe extern "C" fn nse_clip_sample_rate(clip: *const NseClip) -> u32 {
    clip.as_ref().map_or(0, |c| c.0.sample_rate())
}

/// Borrowed view of the samples, valid until the clip is freed.
#[no_mangle]
pub unsafe extern "C" fn nse_clip_samples(clip: *const NseClip) -> *const f64 {
    clip.as_ref().map_or(ptr::null(), |c| c.0.samples().as_ptr())
}

#[no_mangle]
pub unsafe extern "C" fn nse_clip_free(clip: *mut NseClip) {
    if !clip.is_null() {
        drop(Box::from_raw(clip));
    }
}
