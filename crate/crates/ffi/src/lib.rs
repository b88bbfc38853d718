//! C interface to `markov-product`.
//!
//! Kernels and certificates are passed as opaque handles created and
//! released by this library. Every fallible call returns an [`MpkStatus`];
//! on failure a description is available from [`mpk_last_error`] on the
//! same thread until the next failing call.
//!
//! Matrices cross the boundary as row-major arrays of real and imaginary
//! parts, each of length `dim * dim`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use markov_product::io::{
    kernel_from_document, kernel_to_document, tree_from_document, DocumentError,
};
use markov_product::{
    glue_tree, markov_product, psd_check_eigen, psd_check_schur, schur_reduce, verify_realization,
    IndexedKernel, KernelError, PsdCertificate, Tolerances, VerifyConfig,
};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Result of a library call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MpkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    Panic = 4,
    DuplicateLabel = 10,
    DimensionMismatch = 11,
    NotHermitian = 12,
    IntersectionNotSingleton = 13,
    GlueLabelNotShared = 14,
    BasepointNotUnit = 15,
    BasepointNotPositive = 16,
    LabelNotFound = 17,
    BasepointMismatch = 18,
    LabelCollision = 19,
    EmptyBatch = 20,
    InvalidSampleCount = 21,
    RealModeRequiresRealKernel = 22,
    NotATree = 23,
    InvalidTolerance = 24,
    NumericalFailure = 30,
    NotPsd = 31,
    FactorizationFailure = 32,
    IndexOutOfRange = 40,
}

impl From<&KernelError> for MpkStatus {
    fn from(e: &KernelError) -> Self {
        match e {
            KernelError::DuplicateLabel { .. } => MpkStatus::DuplicateLabel,
            KernelError::DimensionMismatch { .. } => MpkStatus::DimensionMismatch,
            KernelError::NotHermitian { .. } => MpkStatus::NotHermitian,
            KernelError::IntersectionNotSingleton { .. } => MpkStatus::IntersectionNotSingleton,
            KernelError::GlueLabelNotShared { .. } => MpkStatus::GlueLabelNotShared,
            KernelError::BasepointNotUnit { .. } => MpkStatus::BasepointNotUnit,
            KernelError::BasepointNotPositive { .. } => MpkStatus::BasepointNotPositive,
            KernelError::LabelNotFound { .. } => MpkStatus::LabelNotFound,
            KernelError::NumericalFailure { .. } => MpkStatus::NumericalFailure,
            KernelError::NotPsd { .. } => MpkStatus::NotPsd,
            KernelError::FactorizationFailure { .. } => MpkStatus::FactorizationFailure,
            KernelError::BasepointMismatch { .. } => MpkStatus::BasepointMismatch,
            KernelError::LabelCollision { .. } => MpkStatus::LabelCollision,
            KernelError::EmptyBatch { .. } => MpkStatus::EmptyBatch,
            KernelError::InvalidSampleCount => MpkStatus::InvalidSampleCount,
            KernelError::RealModeRequiresRealKernel => MpkStatus::RealModeRequiresRealKernel,
            KernelError::NotATree { .. } => MpkStatus::NotATree,
            KernelError::InvalidTolerance { .. } => MpkStatus::InvalidTolerance,
        }
    }
}

/// Kernel on a finite labeled set.
pub struct MpkKernel {
    kernel: IndexedKernel,
    labels: Vec<CString>,
}

/// Outcome of a positive semidefiniteness check.
pub struct MpkCertificate {
    cert: PsdCertificate,
}

/// Summary of an empirical second-moment verification.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MpkVerifySummary {
    pub passed: bool,
    pub certified: bool,
    pub min_eigenvalue: f64,
    pub max_deviation: f64,
    pub max_variance: f64,
    pub mc_tol: f64,
    pub samples: u64,
    pub seed: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(MpkStatus, String);

impl From<KernelError> for Failure {
    fn from(e: KernelError) -> Self {
        Failure(MpkStatus::from(&e), e.to_string())
    }
}

impl From<DocumentError> for Failure {
    fn from(e: DocumentError) -> Self {
        match e {
            DocumentError::Kernel(k) => k.into(),
            other => Failure(MpkStatus::ParseError, other.to_string()),
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(MpkStatus::NullPointer, format!("{what} is null"))
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MpkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MpkStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            MpkStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(MpkStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

fn wrap(kernel: IndexedKernel) -> *mut MpkKernel {
    let labels = kernel
        .labels()
        .iter()
        .map(|l| CString::new(l.as_str()).unwrap_or_default())
        .collect();
    Box::into_raw(Box::new(MpkKernel { kernel, labels }))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s)
        .map(CString::into_raw)
        .unwrap_or(ptr::null_mut())
}

/// Message describing the last failure on this thread, or null if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mpk_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Stable name of a status code, e.g. `"BasepointNotUnit"`. Never null.
#[no_mangle]
pub extern "C" fn mpk_status_name(status: MpkStatus) -> *const c_char {
    let name: &'static CStr = match status {
        MpkStatus::Ok => c"Ok",
        MpkStatus::NullPointer => c"NullPointer",
        MpkStatus::InvalidUtf8 => c"InvalidUtf8",
        MpkStatus::ParseError => c"ParseError",
        MpkStatus::Panic => c"Panic",
        MpkStatus::DuplicateLabel => c"DuplicateLabel",
        MpkStatus::DimensionMismatch => c"DimensionMismatch",
        MpkStatus::NotHermitian => c"NotHermitian",
        MpkStatus::IntersectionNotSingleton => c"IntersectionNotSingleton",
        MpkStatus::GlueLabelNotShared => c"GlueLabelNotShared",
        MpkStatus::BasepointNotUnit => c"BasepointNotUnit",
        MpkStatus::BasepointNotPositive => c"BasepointNotPositive",
        MpkStatus::LabelNotFound => c"LabelNotFound",
        MpkStatus::BasepointMismatch => c"BasepointMismatch",
        MpkStatus::LabelCollision => c"LabelCollision",
        MpkStatus::EmptyBatch => c"EmptyBatch",
        MpkStatus::InvalidSampleCount => c"InvalidSampleCount",
        MpkStatus::RealModeRequiresRealKernel => c"RealModeRequiresRealKernel",
        MpkStatus::NotATree => c"NotATree",
        MpkStatus::InvalidTolerance => c"InvalidTolerance",
        MpkStatus::NumericalFailure => c"NumericalFailure",
        MpkStatus::NotPsd => c"NotPsd",
        MpkStatus::FactorizationFailure => c"FactorizationFailure",
        MpkStatus::IndexOutOfRange => c"IndexOutOfRange",
    };
    name.as_ptr()
}

/// Builds a kernel from `dim` labels and row-major real and imaginary parts.
///
/// # Safety
/// `labels` must point to `dim` NUL-terminated strings; `re` and `im` must
/// each point to `dim * dim` doubles. `out` must be writable. On success the
/// caller owns `*out` and releases it with [`mpk_kernel_free`].
#[no_mangle]
pub unsafe extern "C" fn mpk_kernel_new(
    labels: *const *const c_char,
    re: *const f64,
    im: *const f64,
    dim: usize,
    out: *mut *mut MpkKernel,
) -> MpkStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        if dim > 0 && (labels.is_null() || re.is_null() || im.is_null()) {
            return Err(null("labels, re or im"));
        }
        let names = (0..dim)
            .map(|i| str_arg(*labels.add(i), "label").map(str::to_owned))
            .collect::<Result<Vec<_>, _>>()?;
        let entries = if dim == 0 {
            DMatrix::zeros(0, 0)
        } else {
            let re = std::slice::from_raw_parts(re, dim * dim);
            let im = std::slice::from_raw_parts(im, dim * dim);
            DMatrix::from_fn(dim, dim, |i, j| {
                Complex64::new(re[i * dim + j], im[i * dim + j])
            })
        };
        *out = wrap(IndexedKernel::new(names, entries)?);
        Ok(())
    })
}

/// Parses a kernel JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable. The caller
/// owns `*out` on success.
#[no_mangle]
pub unsafe extern "C" fn mpk_kernel_from_json(
    json: *const c_char,
    out: *mut *mut MpkKernel,
) -> MpkStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let text = str_arg(json, "json")?;
        *out = wrap(kernel_from_document(text)?);
        Ok(())
    })
}

/// Serializes a kernel to its JSON document.
///
/// # Safety
/// `kernel` must be a live handle and `out` writable. The caller releases
/// `*out` with [`mpk_string_free`].
#[no_mangle]
pub unsafe extern "C" fn mpk_kernel_to_json(
    kernel: *const MpkKernel,
    out: *mut *mut c_char,
) -> MpkStatus {
    guard(|| {
        let k = handle(kernel, "kernel")?;
        let out = out_arg(out, "out")?;
        *out = into_c_string(kernel_to_document(&k.kernel));
        Ok(())
    })
}

/// Releases a kernel. Null is ignored.
///
/// # Safety
/// `kernel` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mpk_kernel_free(kernel: *mut MpkKernel) {
    if !kernel.is_null() {
        drop(Box::from_raw(kernel));
    }
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mpk_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Number of labels, or 0 for a null handle.
///
/// # Safety
/// `kernel` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mpk_kernel_dim(kernel: *const MpkKernel) -> usize {
    kernel.as_ref().map_or(0, |k| k.kernel.dim())
}

/// Label at position `index`, or null when out of range. The string is
/// owned by the kernel.
///
/// # Safety
/// `kernel` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mpk_kernel_label(kernel: *const MpkKernel, index: usize) -> *const c_char {
    kernel
        .as_ref()
        .and_then(|k| k.labels.get(index))
        .map_or(ptr::null(), |c| c.as_ptr())
}

/// Copies the row-major entries into `re` and `im`, each `dim * dim` long.
///
/// # Safety
/// `kernel` must be a live handle; `re` and `im` must each have room for
/// `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mpk_kernel_entries(
    kernel: *const MpkKernel,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> MpkStatus {
    guard(|| {
        let k = handle(kernel, "kernel")?;
        let n = k.kernel.dim();
        if len != n * n {
            return Err(Failure(
                MpkStatus::DimensionMismatch,
                format!("buffer holds {len} entries, kernel has {}", n * n),
            ));
        }
        if len == 0 {
            return Ok(());
        }
        if re.is_null() || im.is_null() {
            return Err(null("re or im"));
        }
        let re = std::slice::from_raw_parts_mut(re, len);
        let im = std::slice::from_raw_parts_mut(im, len);
        let e = k.kernel.entries();
        for i in 0..n {
            for j in 0..n {
                re[i * n + j] = e[(i, j)].re;
                im[i * n + j] = e[(i, j)].im;
            }
        }
        Ok(())
    })
}

/// Entry at `(row, col)` by label.
///
/// # Safety
/// `kernel` must be a live handle, `row` and `col` NUL-terminated strings,
/// `re` and `im` writable.
#[no_mangle]
pub unsafe extern "C" fn mpk_kernel_get(
    kernel: *const MpkKernel,
    row: *const c_char,
    col: *const c_char,
    re: *mut f64,
    im: *mut f64,
) -> MpkStatus {
    guard(|| {
        let k = handle(kernel, "kernel")?;
        let (a, b) = (str_arg(row, "row")?, str_arg(col, "col")?);
        let (re, im) = (out_arg(re, "re")?, out_arg(im, "im")?);
        let z = k.kernel.get(a, b).ok_or_else(|| {
            let missing = if k.kernel.contains(a) { b } else { a };
            Failure::from(KernelError::LabelNotFound {
                label: missing.into(),
            })
        })?;
        *re = z.re;
        *im = z.im;
        Ok(())
    })
}

/// Markov product of two kernels sharing exactly the label `glue`.
///
/// # Safety
/// `k1` and `k2` must be live handles, `glue` a NUL-terminated string and
/// `out` writable. The caller owns `*out` on success.
#[no_mangle]
pub unsafe extern "C" fn mpk_markov_product(
    k1: *const MpkKernel,
    k2: *const MpkKernel,
    glue: *const c_char,
    basepoint_tol: f64,
    out: *mut *mut MpkKernel,
) -> MpkStatus {
    guard(|| {
        let (a, b) = (handle(k1, "k1")?, handle(k2, "k2")?);
        let label = str_arg(glue, "glue")?;
        let out = out_arg(out, "out")?;
        *out = wrap(markov_product(
            &a.kernel,
            &b.kernel,
            &label.into(),
            basepoint_tol,
        )?);
        Ok(())
    })
}

/// Folds a gluing tree given as a JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable. The caller
/// owns `*out` on success.
#[no_mangle]
pub unsafe extern "C" fn mpk_glue_tree_json(
    json: *const c_char,
    basepoint_tol: f64,
    out: *mut *mut MpkKernel,
) -> MpkStatus {
    guard(|| {
        let text = str_arg(json, "json")?;
        let out = out_arg(out, "out")?;
        let tree = tree_from_document(text)?;
        *out = wrap(glue_tree(&tree, basepoint_tol)?);
        Ok(())
    })
}

/// Certifies positive semidefiniteness through the full spectrum.
///
/// # Safety
/// `kernel` must be a live handle and `out` writable. The caller releases
/// `*out` with [`mpk_certificate_free`].
#[no_mangle]
pub unsafe extern "C" fn mpk_psd_check_eigen(
    kernel: *const MpkKernel,
    tol: f64,
    out: *mut *mut MpkCertificate,
) -> MpkStatus {
    guard(|| {
        let k = handle(kernel, "kernel")?;
        let out = out_arg(out, "out")?;
        let cert = psd_check_eigen(&k.kernel, tol)?;
        *out = Box::into_raw(Box::new(MpkCertificate { cert }));
        Ok(())
    })
}

/// Certifies positive semidefiniteness through the Schur complement at
/// `basepoint`, whose diagonal entry must be 1.
///
/// # Safety
/// `kernel` must be a live handle, `basepoint` a NUL-terminated string and
/// `out` writable. The caller releases `*out` with [`mpk_certificate_free`].
#[no_mangle]
pub unsafe extern "C" fn mpk_psd_check_schur(
    kernel: *const MpkKernel,
    basepoint: *const c_char,
    tol: f64,
    basepoint_tol: f64,
    out: *mut *mut MpkCertificate,
) -> MpkStatus {
    guard(|| {
        let k = handle(kernel, "kernel")?;
        let s0 = str_arg(basepoint, "basepoint")?;
        let out = out_arg(out, "out")?;
        let split = schur_reduce(&k.kernel, s0, basepoint_tol)?;
        let cert = psd_check_schur(&split, tol)?;
        *out = Box::into_raw(Box::new(MpkCertificate { cert }));
        Ok(())
    })
}

/// Releases a certificate. Null is ignored.
///
/// # Safety
/// `cert` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mpk_certificate_free(cert: *mut MpkCertificate) {
    if !cert.is_null() {
        drop(Box::from_raw(cert));
    }
}

/// Verdict of the certificate; false for a null handle.
///
/// # Safety
/// `cert` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mpk_certificate_verdict(cert: *const MpkCertificate) -> bool {
    cert.as_ref().is_some_and(|c| c.cert.verdict)
}

/// Smallest eigenvalue found; NaN for a null handle.
///
/// # Safety
/// `cert` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mpk_certificate_min_eigenvalue(cert: *const MpkCertificate) -> f64 {
    cert.as_ref().map_or(f64::NAN, |c| c.cert.min_eigenvalue)
}

/// Scale the tolerance is measured against; NaN for a null handle.
///
/// # Safety
/// `cert` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mpk_certificate_scale(cert: *const MpkCertificate) -> f64 {
    cert.as_ref().map_or(f64::NAN, |c| c.cert.scale)
}

/// Relative tolerance used; NaN for a null handle.
///
/// # Safety
/// `cert` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mpk_certificate_tolerance(cert: *const MpkCertificate) -> f64 {
    cert.as_ref().map_or(f64::NAN, |c| c.cert.tolerance_used)
}

/// Length of the witness vector, 0 when the verdict is true.
///
/// # Safety
/// `cert` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mpk_certificate_witness_len(cert: *const MpkCertificate) -> usize {
    cert.as_ref()
        .and_then(|c| c.cert.witness.as_ref())
        .map_or(0, Vec::len)
}

/// Copies the witness into `re` and `im`, each of length `len`.
///
/// # Safety
/// `cert` must be a live handle; `re` and `im` must each have room for
/// `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mpk_certificate_witness(
    cert: *const MpkCertificate,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> MpkStatus {
    guard(|| {
        let c = handle(cert, "cert")?;
        let Some(w) = c.cert.witness.as_ref() else {
            return Err(Failure(
                MpkStatus::IndexOutOfRange,
                "certificate has no witness".into(),
            ));
        };
        if len != w.len() {
            return Err(Failure(
                MpkStatus::DimensionMismatch,
                format!("buffer holds {len} entries, witness has {}", w.len()),
            ));
        }
        if re.is_null() || im.is_null() {
            return Err(null("re or im"));
        }
        let re = std::slice::from_raw_parts_mut(re, len);
        let im = std::slice::from_raw_parts_mut(im, len);
        for (i, z) in w.iter().enumerate() {
            re[i] = z.re;
            im[i] = z.im;
        }
        Ok(())
    })
}

/// Glues Gaussian realizations of `k1` and `k2` at `glue`, draws `samples`
/// rows from `seed` and compares the second moments with the product.
/// A non-positive or NaN `mc_tol` selects the default five-sigma threshold.
///
/// # Safety
/// `k1` and `k2` must be live handles, `glue` a NUL-terminated string and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mpk_verify(
    k1: *const MpkKernel,
    k2: *const MpkKernel,
    glue: *const c_char,
    samples: u64,
    seed: u64,
    mc_tol: f64,
    out: *mut MpkVerifySummary,
) -> MpkStatus {
    guard(|| {
        let (a, b) = (handle(k1, "k1")?, handle(k2, "k2")?);
        let label = str_arg(glue, "glue")?;
        let out = out_arg(out, "out")?;
        let config = VerifyConfig {
            samples: usize::try_from(samples).map_err(|_| KernelError::InvalidSampleCount)?,
            seed,
            mc_tol: (mc_tol > 0.0).then_some(mc_tol),
            tolerances: Tolerances::default(),
            ..VerifyConfig::default()
        };
        let report = verify_realization(&a.kernel, &b.kernel, &label.into(), &config)?;
        *out = MpkVerifySummary {
            passed: report.passed,
            certified: report.certificate.verdict,
            min_eigenvalue: report.certificate.min_eigenvalue,
            max_deviation: report.max_deviation,
            max_variance: report.max_variance,
            mc_tol: report.mc_tol,
            samples: report.samples as u64,
            seed: report.seed,
        };
        Ok(())
    })
}
