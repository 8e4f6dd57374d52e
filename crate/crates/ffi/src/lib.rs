//! C interface to `stablekm`.
//!
//! Every fallible function returns an [`SkmStatus`] and writes its result through an
//! out-pointer. Handles are owned by the caller and released with the matching `_free`
//! function. After a non-`OK` status, [`skm_last_error_message`] describes the failure
//! on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use stablekm::bench::{self, Algorithm, RunOptions};
use stablekm::config::Config;
use stablekm::{datasets, stability, Clustering, Error, Instance, Matrix};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    TooLarge = 4,
    Insufficient = 5,
    MissingDataset = 6,
    Io = 7,
    Parse = 8,
    Degenerate = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkmAlgorithm {
    Stable = 0,
    StableLloyd = 1,
    Robust = 2,
    Lloyd = 3,
    Kmeanspp = 4,
    KmeansppLloyd = 5,
    TwoMeans = 6,
    GroundTruth = 7,
}

impl From<SkmAlgorithm> for Algorithm {
    fn from(a: SkmAlgorithm) -> Self {
        match a {
            SkmAlgorithm::Stable => Algorithm::Stable,
            SkmAlgorithm::StableLloyd => Algorithm::StableLloyd,
            SkmAlgorithm::Robust => Algorithm::Robust,
            SkmAlgorithm::Lloyd => Algorithm::Lloyd,
            SkmAlgorithm::Kmeanspp => Algorithm::Kmeanspp,
            SkmAlgorithm::KmeansppLloyd => Algorithm::KmeansppLloyd,
            SkmAlgorithm::TwoMeans => Algorithm::TwoMeans,
            SkmAlgorithm::GroundTruth => Algorithm::GroundTruth,
        }
    }
}

/// Run options for [`skm_cluster`]. Start from [`skm_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SkmOptions {
    pub k: usize,
    pub seed: u64,
    /// Restarts for the randomized algorithms; the cheapest wins.
    pub trials: usize,
    /// Fixed robust threshold; NaN together with `t` selects the search.
    pub r: f64,
    pub t: f64,
    /// Cap on the point pairs lifted by two-means; 0 means no cap.
    pub max_pairs: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SkmEpsSummary {
    pub min: f64,
    pub avg: f64,
    pub max: f64,
}

/// Opaque point set, optionally labeled.
pub struct SkmInstance {
    inner: Instance,
}

/// Opaque clustering result.
pub struct SkmClustering {
    inner: Clustering,
}

struct Failure {
    status: SkmStatus,
    message: String,
}

impl Failure {
    fn new(status: SkmStatus, message: impl Into<String>) -> Self {
        Self { status, message: message.into() }
    }

    fn null(what: &str) -> Self {
        Self::new(SkmStatus::NullPointer, format!("{what} is null"))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::DimensionMismatch { .. }
            | Error::ShapeMismatch { .. }
            | Error::SizeMismatch { .. }
            | Error::MissingPairGeometry { .. } => SkmStatus::DimensionMismatch,
            Error::KTooLarge { .. } | Error::TooLarge(_) => SkmStatus::TooLarge,
            Error::Insufficient { .. } => SkmStatus::Insufficient,
            Error::MissingDataset(_) => SkmStatus::MissingDataset,
            Error::Io(_) => SkmStatus::Io,
            Error::Parse { .. } | Error::ConfigParse { .. } | Error::Json(_) | Error::Csv(_) => SkmStatus::Parse,
            Error::DegenerateCenters(_)
            | Error::EmptyCluster(_)
            | Error::ZeroVectorSample(_)
            | Error::CoincidentPair { .. }
            | Error::NotUnique { .. } => SkmStatus::Degenerate,
            _ => SkmStatus::InvalidArgument,
        };
        Self::new(status, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    // interior NULs would truncate the C string
    let clean = message.replace('\0', " ");
    let c = CString::new(clean).expect("NULs removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SkmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SkmStatus::Ok,
        Ok(Err(failure)) => {
            set_last_error(failure.message);
            failure.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            SkmStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    // SAFETY: caller passes either null or a pointer obtained from this library.
    unsafe { p.as_ref() }.ok_or_else(|| Failure::null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::null(what));
    }
    // SAFETY: non-null and, per the contract, valid for one write.
    unsafe { out.write(value) };
    Ok(())
}

unsafe fn copy_into<T: Copy>(src: &[T], out: *mut T, len: usize) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::null("output buffer"));
    }
    if len < src.len() {
        return Err(Failure::new(
            SkmStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", src.len()),
        ));
    }
    // SAFETY: `out` is valid for `len >= src.len()` writes per the contract.
    unsafe { std::ptr::copy_nonoverlapping(src.as_ptr(), out, src.len()) };
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn skm_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version contains a NUL"),
    };
    VERSION.as_ptr()
}

/// Length in bytes of the last error message, without the terminating NUL. 0 if none.
#[no_mangle]
pub extern "C" fn skm_last_error_length() -> usize {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(0, |c| c.as_bytes().len()))
}

/// Copies the last error message, NUL-terminated, into `buf`.
///
/// # Safety
/// `buf` must be valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn skm_last_error_message(buf: *mut c_char, len: usize) -> SkmStatus {
    let bytes = LAST_ERROR.with(|slot| slot.borrow().as_ref().map(|c| c.as_bytes_with_nul().to_vec()));
    let bytes = bytes.unwrap_or_else(|| vec![0]);
    if buf.is_null() {
        return SkmStatus::NullPointer;
    }
    if len < bytes.len() {
        return SkmStatus::BufferTooSmall;
    }
    // SAFETY: `buf` is valid for `len >= bytes.len()` bytes.
    unsafe { std::ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, bytes.len()) };
    SkmStatus::Ok
}

#[no_mangle]
pub extern "C" fn skm_options_default() -> SkmOptions {
    SkmOptions { k: 2, seed: 0, trials: 1, r: f64::NAN, t: f64::NAN, max_pairs: 0 }
}

/// Builds an instance from `n * d` row-major values. `labels` may be null.
///
/// # Safety
/// `data` must hold `n * d` doubles and `labels`, when non-null, `n` values.
#[no_mangle]
pub unsafe extern "C" fn skm_instance_new(
    data: *const f64,
    n: usize,
    d: usize,
    labels: *const usize,
    out: *mut *mut SkmInstance,
) -> SkmStatus {
    guard(|| {
        if data.is_null() {
            return Err(Failure::null("data"));
        }
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let len = n.checked_mul(d).ok_or_else(|| Failure::new(SkmStatus::TooLarge, "n * d overflows"))?;
        // SAFETY: the caller guarantees `n * d` readable doubles.
        let values = unsafe { std::slice::from_raw_parts(data, len) }.to_vec();
        let labels = if labels.is_null() {
            None
        } else {
            // SAFETY: the caller guarantees `n` readable labels.
            Some(unsafe { std::slice::from_raw_parts(labels, n) }.to_vec())
        };
        let points = Matrix::from_vec(n, d, values)?;
        let inner = Instance::new(points, labels, "ffi")?;
        // SAFETY: checked non-null above.
        unsafe { write_out(out, Box::into_raw(Box::new(SkmInstance { inner })), "out") }
    })
}

/// Loads a registered dataset by name or a CSV file by path.
///
/// # Safety
/// `name_or_path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn skm_instance_load(
    name_or_path: *const c_char,
    normalize: bool,
    out: *mut *mut SkmInstance,
) -> SkmStatus {
    guard(|| {
        if name_or_path.is_null() {
            return Err(Failure::null("name_or_path"));
        }
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        // SAFETY: non-null and NUL-terminated per the contract.
        let name = unsafe { CStr::from_ptr(name_or_path) }
            .to_str()
            .map_err(|_| Failure::new(SkmStatus::InvalidArgument, "name is not UTF-8"))?;
        let inner = bench::load_dataset(name, normalize)?;
        // SAFETY: checked non-null above.
        unsafe { write_out(out, Box::into_raw(Box::new(SkmInstance { inner })), "out") }
    })
}

/// Writes the instance as CSV (features, then the label column when labeled).
///
/// # Safety
/// `inst` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn skm_instance_write_csv(inst: *const SkmInstance, path: *const c_char) -> SkmStatus {
    guard(|| {
        // SAFETY: null or a live handle.
        let inst = unsafe { as_ref(inst, "inst") }?;
        if path.is_null() {
            return Err(Failure::null("path"));
        }
        // SAFETY: non-null and NUL-terminated per the contract.
        let path = unsafe { CStr::from_ptr(path) }
            .to_str()
            .map_err(|_| Failure::new(SkmStatus::InvalidArgument, "path is not UTF-8"))?;
        datasets::write_csv(Path::new(path), &inst.inner)?;
        Ok(())
    })
}

/// Point count; 0 for a null handle.
///
/// # Safety
/// `inst` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn skm_instance_n(inst: *const SkmInstance) -> usize {
    // SAFETY: null or a live handle.
    unsafe { inst.as_ref() }.map_or(0, |i| i.inner.n())
}

/// Dimension; 0 for a null handle.
///
/// # Safety
/// `inst` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn skm_instance_d(inst: *const SkmInstance) -> usize {
    // SAFETY: null or a live handle.
    unsafe { inst.as_ref() }.map_or(0, |i| i.inner.d())
}

/// Number of distinct labels; 0 when unlabeled.
///
/// # Safety
/// `inst` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn skm_instance_label_count(inst: *const SkmInstance) -> usize {
    // SAFETY: null or a live handle.
    unsafe { inst.as_ref() }.map_or(0, |i| i.inner.label_count())
}

/// # Safety
/// `inst` must be null or come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn skm_instance_free(inst: *mut SkmInstance) {
    if !inst.is_null() {
        // SAFETY: created by Box::into_raw in this library and freed once.
        drop(unsafe { Box::from_raw(inst) });
    }
}

/// Clusters `inst` with `algo`. `opts` may be null for the defaults.
///
/// # Safety
/// `inst` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn skm_cluster(
    inst: *const SkmInstance,
    algo: SkmAlgorithm,
    opts: *const SkmOptions,
    out: *mut *mut SkmClustering,
) -> SkmStatus {
    guard(|| {
        // SAFETY: null or a live handle.
        let inst = unsafe { as_ref(inst, "inst") }?;
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        // SAFETY: null or a valid options struct.
        let o = unsafe { opts.as_ref() }.copied().unwrap_or_else(|| skm_options_default());
        let run = RunOptions {
            k: o.k,
            seed: o.seed,
            trials: o.trials,
            r: (!o.r.is_nan()).then_some(o.r),
            t: (!o.t.is_nan()).then_some(o.t),
            max_pairs: (o.max_pairs > 0).then_some(o.max_pairs),
        };
        let result = bench::run_algorithm(&inst.inner, algo.into(), &run, &Config::default())?;
        let handle = Box::new(SkmClustering { inner: result.clustering });
        // SAFETY: checked non-null above.
        unsafe { write_out(out, Box::into_raw(handle), "out") }
    })
}

/// Wraps an existing assignment; centroids and cost are recomputed.
///
/// # Safety
/// `assignment` must hold `skm_instance_n(inst)` values.
#[no_mangle]
pub unsafe extern "C" fn skm_clustering_from_assignment(
    inst: *const SkmInstance,
    assignment: *const usize,
    k: usize,
    out: *mut *mut SkmClustering,
) -> SkmStatus {
    guard(|| {
        // SAFETY: null or a live handle.
        let inst = unsafe { as_ref(inst, "inst") }?;
        if assignment.is_null() {
            return Err(Failure::null("assignment"));
        }
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        // SAFETY: the caller guarantees `n` readable values.
        let a = unsafe { std::slice::from_raw_parts(assignment, inst.inner.n()) }.to_vec();
        let inner = Clustering::from_assignment(&inst.inner, a, k)?;
        // SAFETY: checked non-null above.
        unsafe { write_out(out, Box::into_raw(Box::new(SkmClustering { inner })), "out") }
    })
}

/// k-means objective; NaN for a null handle.
///
/// # Safety
/// `c` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn skm_clustering_cost(c: *const SkmClustering) -> f64 {
    // SAFETY: null or a live handle.
    unsafe { c.as_ref() }.map_or(f64::NAN, |c| c.inner.cost)
}

/// # Safety
/// `c` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn skm_clustering_k(c: *const SkmClustering) -> usize {
    // SAFETY: null or a live handle.
    unsafe { c.as_ref() }.map_or(0, |c| c.inner.k)
}

/// # Safety
/// `c` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn skm_clustering_n(c: *const SkmClustering) -> usize {
    // SAFETY: null or a live handle.
    unsafe { c.as_ref() }.map_or(0, |c| c.inner.assignment.len())
}

/// Copies the `n` cluster ids into `out`.
///
/// # Safety
/// `out` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn skm_clustering_assignment(c: *const SkmClustering, out: *mut usize, len: usize) -> SkmStatus {
    guard(|| {
        // SAFETY: null or a live handle.
        let c = unsafe { as_ref(c, "clustering") }?;
        // SAFETY: forwarded caller contract.
        unsafe { copy_into(&c.inner.assignment, out, len) }
    })
}

/// Copies the `k * d` row-major centers into `out`. Empty clusters have NaN rows.
///
/// # Safety
/// `out` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn skm_clustering_centers(c: *const SkmClustering, out: *mut f64, len: usize) -> SkmStatus {
    guard(|| {
        // SAFETY: null or a live handle.
        let c = unsafe { as_ref(c, "clustering") }?;
        // SAFETY: forwarded caller contract.
        unsafe { copy_into(c.inner.centers.as_slice(), out, len) }
    })
}

/// # Safety
/// `c` must be null or come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn skm_clustering_free(c: *mut SkmClustering) {
    if !c.is_null() {
        // SAFETY: created by Box::into_raw in this library and freed once.
        drop(unsafe { Box::from_raw(c) });
    }
}

/// Largest margin for which every point of clusters `i` and `j` stays on its own side.
///
/// # Safety
/// Both handles must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn skm_max_eps_pair(
    c: *const SkmClustering,
    inst: *const SkmInstance,
    i: usize,
    j: usize,
    out: *mut f64,
) -> SkmStatus {
    guard(|| {
        // SAFETY: null or live handles.
        let (c, inst) = unsafe { (as_ref(c, "clustering")?, as_ref(inst, "inst")?) };
        if i >= c.inner.k || j >= c.inner.k || i == j {
            return Err(Failure::new(SkmStatus::InvalidArgument, format!("bad pair ({i}, {j})")));
        }
        let eps = stability::max_eps_pair(&c.inner, &inst.inner, i, j)?;
        // SAFETY: forwarded caller contract.
        unsafe { write_out(out, eps, "out") }
    })
}

/// Minimum, average and maximum of the per-pair margins.
///
/// # Safety
/// Both handles must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn skm_eps_summary(
    c: *const SkmClustering,
    inst: *const SkmInstance,
    out: *mut SkmEpsSummary,
) -> SkmStatus {
    guard(|| {
        // SAFETY: null or live handles.
        let (c, inst) = unsafe { (as_ref(c, "clustering")?, as_ref(inst, "inst")?) };
        let s = stability::eps_summary(&c.inner, &inst.inner)?;
        // SAFETY: forwarded caller contract.
        unsafe { write_out(out, SkmEpsSummary { min: s.min, avg: s.avg, max: s.max }, "out") }
    })
}

/// Fraction of points on which two clusterings agree under the best label matching.
///
/// # Safety
/// Both handles must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn skm_recovery_score(
    a: *const SkmClustering,
    b: *const SkmClustering,
    out: *mut f64,
) -> SkmStatus {
    guard(|| {
        // SAFETY: null or live handles.
        let (a, b) = unsafe { (as_ref(a, "a")?, as_ref(b, "b")?) };
        let score = datasets::recovery_score(&a.inner, &b.inner)?;
        // SAFETY: forwarded caller contract.
        unsafe { write_out(out, score, "out") }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_mapping() {
        assert_eq!(Failure::from(Error::KTooLarge { k: 5, n: 2 }).status, SkmStatus::TooLarge);
        assert_eq!(Failure::from(Error::MissingDataset(vec!["x".into()])).status, SkmStatus::MissingDataset);
        assert_eq!(Failure::from(Error::InvalidParameter("x".into())).status, SkmStatus::InvalidArgument);
    }

    #[test]
    fn panic_becomes_status() {
        let status = guard(|| panic!("boom"));
        assert_eq!(status, SkmStatus::Panic);
        let mut buf = vec![0 as c_char; skm_last_error_length() + 1];
        assert_eq!(unsafe { skm_last_error_message(buf.as_mut_ptr(), buf.len()) }, SkmStatus::Ok);
        let msg = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap();
        assert_eq!(msg, "panic: boom");
    }

    #[test]
    fn interior_nul_is_replaced() {
        set_last_error("a\0b".into());
        assert_eq!(skm_last_error_length(), 3);
    }
}
