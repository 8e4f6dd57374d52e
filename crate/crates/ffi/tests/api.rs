use std::ffi::{CStr, CString};
use std::ptr;

use stablekm_ffi::*;

const BLOBS: [f64; 12] = [0.0, 0.0, 0.1, 0.0, 0.0, 0.1, 5.0, 5.0, 5.1, 5.0, 5.0, 5.1];

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; skm_last_error_length() + 1];
    assert_eq!(unsafe { skm_last_error_message(buf.as_mut_ptr(), buf.len()) }, SkmStatus::Ok);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn blobs(labels: Option<&[usize]>) -> *mut SkmInstance {
    let mut inst = ptr::null_mut();
    let l = labels.map_or(ptr::null(), |l| l.as_ptr());
    assert_eq!(unsafe { skm_instance_new(BLOBS.as_ptr(), 6, 2, l, &mut inst) }, SkmStatus::Ok);
    inst
}

fn cluster(inst: *const SkmInstance, algo: SkmAlgorithm, k: usize) -> Result<*mut SkmClustering, SkmStatus> {
    let mut opts = skm_options_default();
    opts.k = k;
    opts.trials = 3;
    let mut c = ptr::null_mut();
    match unsafe { skm_cluster(inst, algo, &opts, &mut c) } {
        SkmStatus::Ok => Ok(c),
        s => Err(s),
    }
}

#[test]
fn every_algorithm_splits_blobs() {
    let inst = blobs(Some(&[0, 0, 0, 1, 1, 1]));
    for algo in [
        SkmAlgorithm::Stable,
        SkmAlgorithm::StableLloyd,
        SkmAlgorithm::Robust,
        SkmAlgorithm::Lloyd,
        SkmAlgorithm::KmeansppLloyd,
        SkmAlgorithm::TwoMeans,
        SkmAlgorithm::GroundTruth,
    ] {
        let c = cluster(inst, algo, 2).unwrap_or_else(|s| panic!("{algo:?}: {s:?} {}", last_error()));
        let mut a = [9usize; 6];
        assert_eq!(unsafe { skm_clustering_assignment(c, a.as_mut_ptr(), a.len()) }, SkmStatus::Ok);
        assert!(a[0] == a[1] && a[1] == a[2] && a[3] == a[4] && a[4] == a[5] && a[0] != a[3], "{algo:?}");
        let cost = unsafe { skm_clustering_cost(c) };
        assert!((cost - 4.0 * 0.01 * 2.0 / 3.0).abs() < 1e-9, "{algo:?} cost {cost}");
        unsafe { skm_clustering_free(c) };
    }
    unsafe { skm_instance_free(inst) };
}

#[test]
fn centers_and_recost_agree() {
    let inst = blobs(None);
    let c = cluster(inst, SkmAlgorithm::Stable, 2).unwrap();
    assert_eq!(unsafe { skm_clustering_k(c) }, 2);
    assert_eq!(unsafe { skm_clustering_n(c) }, 6);
    let mut centers = [0.0; 4];
    assert_eq!(unsafe { skm_clustering_centers(c, centers.as_mut_ptr(), 4) }, SkmStatus::Ok);
    let mut a = [0usize; 6];
    unsafe { skm_clustering_assignment(c, a.as_mut_ptr(), 6) };
    let mut again = ptr::null_mut();
    assert_eq!(unsafe { skm_clustering_from_assignment(inst, a.as_ptr(), 2, &mut again) }, SkmStatus::Ok);
    assert_eq!(unsafe { skm_clustering_cost(again) }, unsafe { skm_clustering_cost(c) });
    let mut score = 0.0;
    assert_eq!(unsafe { skm_recovery_score(c, again, &mut score) }, SkmStatus::Ok);
    assert_eq!(score, 1.0);
    let mut s = SkmEpsSummary::default();
    assert_eq!(unsafe { skm_eps_summary(c, inst, &mut s) }, SkmStatus::Ok);
    assert!(s.min > 0.0 && s.min == s.max);
    let mut e = 0.0;
    assert_eq!(unsafe { skm_max_eps_pair(c, inst, 0, 1, &mut e) }, SkmStatus::Ok);
    assert_eq!(e, s.min);
    unsafe {
        skm_clustering_free(again);
        skm_clustering_free(c);
        skm_instance_free(inst);
    }
}

#[test]
fn null_handles_are_reported() {
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { skm_cluster(ptr::null(), SkmAlgorithm::Stable, ptr::null(), &mut c) }, SkmStatus::NullPointer);
    assert_eq!(last_error(), "inst is null");
    let mut inst = ptr::null_mut();
    assert_eq!(unsafe { skm_instance_new(ptr::null(), 1, 1, ptr::null(), &mut inst) }, SkmStatus::NullPointer);
    assert_eq!(unsafe { skm_instance_n(ptr::null()) }, 0);
    assert!(unsafe { skm_clustering_cost(ptr::null()) }.is_nan());
    unsafe {
        skm_instance_free(ptr::null_mut());
        skm_clustering_free(ptr::null_mut());
    }
}

#[test]
fn errors_map_to_statuses() {
    let inst = blobs(None);
    assert_eq!(cluster(inst, SkmAlgorithm::Stable, 7).unwrap_err(), SkmStatus::TooLarge);
    assert!(last_error().contains("k = 7"));
    assert_eq!(cluster(inst, SkmAlgorithm::TwoMeans, 3).unwrap_err(), SkmStatus::InvalidArgument);
    assert_eq!(cluster(inst, SkmAlgorithm::GroundTruth, 2).unwrap_err(), SkmStatus::InvalidArgument);

    let c = cluster(inst, SkmAlgorithm::Stable, 2).unwrap();
    let mut small = [0usize; 3];
    assert_eq!(unsafe { skm_clustering_assignment(c, small.as_mut_ptr(), 3) }, SkmStatus::BufferTooSmall);
    let mut e = 0.0;
    assert_eq!(unsafe { skm_max_eps_pair(c, inst, 1, 1, &mut e) }, SkmStatus::InvalidArgument);
    let bad = [0usize, 0, 0, 5, 1, 1];
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { skm_clustering_from_assignment(inst, bad.as_ptr(), 2, &mut out) }, SkmStatus::InvalidArgument);

    let mut tiny = [0 as std::ffi::c_char; 2];
    assert_eq!(unsafe { skm_last_error_message(tiny.as_mut_ptr(), 2) }, SkmStatus::BufferTooSmall);
    unsafe {
        skm_clustering_free(c);
        skm_instance_free(inst);
    }

    let nan = [f64::NAN, 0.0];
    let mut i = ptr::null_mut();
    assert_eq!(unsafe { skm_instance_new(nan.as_ptr(), 1, 2, ptr::null(), &mut i) }, SkmStatus::InvalidArgument);
    assert!(i.is_null());
}

#[test]
fn csv_round_trip_and_missing_dataset() {
    let inst = blobs(Some(&[0, 0, 0, 1, 1, 1]));
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("blobs.csv").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { skm_instance_write_csv(inst, path.as_ptr()) }, SkmStatus::Ok);
    let mut back = ptr::null_mut();
    assert_eq!(unsafe { skm_instance_load(path.as_ptr(), false, &mut back) }, SkmStatus::Ok, "{}", last_error());
    assert_eq!(unsafe { skm_instance_n(back) }, 6);
    assert_eq!(unsafe { skm_instance_d(back) }, 2);
    assert_eq!(unsafe { skm_instance_label_count(back) }, 2);

    let missing = CString::new(dir.path().join("nope.csv").to_str().unwrap()).unwrap();
    let mut none = ptr::null_mut();
    assert_eq!(unsafe { skm_instance_load(missing.as_ptr(), false, &mut none) }, SkmStatus::MissingDataset);
    unsafe {
        skm_instance_free(back);
        skm_instance_free(inst);
    }
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(skm_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
