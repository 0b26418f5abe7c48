use std::ffi::{c_char, CStr, CString};
use std::ptr;

use cpwl_core::constructions::sawtooth_scalar_network;
use cpwl_core::{LayerSpec, NetworkSpec};
use cpwl_ffi::*;

fn load(json: &str) -> *mut CpwlNetwork {
    let text = CString::new(json).unwrap();
    let mut net = ptr::null_mut();
    let status = unsafe { cpwl_network_from_json(text.as_ptr(), &mut net) };
    assert_eq!(status, CpwlStatus::Ok, "{}", last_error());
    assert!(!net.is_null());
    net
}

fn last_error() -> String {
    unsafe {
        let n = cpwl_last_error_message(ptr::null_mut(), 0);
        let mut buf = vec![0 as c_char; n];
        cpwl_last_error_message(buf.as_mut_ptr(), n);
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn sawtooth(p: usize) -> *mut CpwlNetwork {
    load(&sawtooth_scalar_network(p).unwrap().to_json())
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(cpwl_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn dims_and_eval() {
    let net = sawtooth(4);
    unsafe {
        let (mut i, mut o) = (0, 0);
        assert_eq!(cpwl_network_dims(net, &mut i, &mut o), CpwlStatus::Ok);
        assert_eq!((i, o), (1, 1));
        let mut y = [0.0];
        for (x, want) in [(0.0, 0.0), (0.125, 0.5), (0.25, 1.0), (0.375, 0.5)] {
            assert_eq!(cpwl_network_eval(net, &x, 1, y.as_mut_ptr(), 1), CpwlStatus::Ok);
            assert!((y[0] - want).abs() < 1e-12, "sw4({x}) = {}", y[0]);
        }
        let x = [0.0, 0.0];
        assert_eq!(
            cpwl_network_eval(net, x.as_ptr(), 2, y.as_mut_ptr(), 1),
            CpwlStatus::DimensionMismatch
        );
        assert!(last_error().contains("dimension"));
        assert_eq!(
            cpwl_network_eval(net, x.as_ptr(), 1, y.as_mut_ptr(), 0),
            CpwlStatus::BufferTooSmall
        );
        cpwl_network_free(net);
    }
}

#[test]
fn regions_on_box_and_unbounded() {
    let net = sawtooth(4);
    unsafe {
        let mut c = CpwlCounts::default();
        let (lo, hi) = (0.0, 1.0);
        assert_eq!(cpwl_count_regions(net, &lo, &hi, 1, &mut c), CpwlStatus::Ok);
        assert_eq!(c.cells, 4);
        assert_eq!(c.connected_pieces, 4);
        assert_eq!(cpwl_count_regions(net, ptr::null(), ptr::null(), 0, &mut c), CpwlStatus::Ok);
        assert!(c.cells >= 4);
        cpwl_network_free(net);
    }
}

#[test]
fn groupsort_regions() {
    let net = load(&NetworkSpec::new(2, vec![LayerSpec::Groupsort { group_size: 2 }]).unwrap().to_json());
    unsafe {
        let mut c = CpwlCounts::default();
        let (lo, hi) = ([-1.0, -1.0], [1.0, 1.0]);
        assert_eq!(cpwl_count_regions(net, lo.as_ptr(), hi.as_ptr(), 2, &mut c), CpwlStatus::Ok);
        assert_eq!(c.cells, 2);
        cpwl_network_free(net);
    }
}

#[test]
fn knots_along_segment() {
    let net = sawtooth(8);
    unsafe {
        let mut k = CpwlKnots::default();
        let verts = [0.0, 1.0];
        assert_eq!(cpwl_count_knots(net, verts.as_ptr(), 2, &mut k), CpwlStatus::Ok);
        assert_eq!(k.count, 7);
        assert!((k.length - 1.0).abs() < 1e-12);
        assert!((k.density - 7.0).abs() < 1e-9);
        let bad = [0.0, 0.0];
        assert_ne!(cpwl_count_knots(net, bad.as_ptr(), 2, &mut k), CpwlStatus::Ok);
        cpwl_network_free(net);
    }
}

#[test]
fn beta_as_decimal() {
    unsafe {
        let sizes = [2u64, 2, 2];
        let mut needed = 0;
        assert_eq!(
            cpwl_beta(1, sizes.as_ptr(), 3, ptr::null_mut(), 0, &mut needed),
            CpwlStatus::BufferTooSmall
        );
        let mut buf = vec![0 as c_char; needed];
        assert_eq!(
            cpwl_beta(1, sizes.as_ptr(), 3, buf.as_mut_ptr(), needed, &mut needed),
            CpwlStatus::Ok
        );
        assert_eq!(CStr::from_ptr(buf.as_ptr()).to_str().unwrap(), "4");
        assert_eq!(
            cpwl_beta(0, sizes.as_ptr(), 3, buf.as_mut_ptr(), needed, &mut needed),
            CpwlStatus::InvalidParameter
        );
    }
}

#[test]
fn bad_input_is_reported() {
    unsafe {
        let mut net = ptr::null_mut();
        let text = CString::new("{\"input_dim\": 1, \"layers\": [{\"type\": \"nope\"}]}").unwrap();
        assert_eq!(cpwl_network_from_json(text.as_ptr(), &mut net), CpwlStatus::InvalidNetwork);
        assert!(net.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(cpwl_network_from_json(ptr::null(), &mut net), CpwlStatus::NullPointer);
        assert_eq!(cpwl_network_from_json(text.as_ptr(), ptr::null_mut()), CpwlStatus::NullPointer);
        let (mut i, mut o) = (0, 0);
        assert_eq!(cpwl_network_dims(ptr::null(), &mut i, &mut o), CpwlStatus::NullPointer);
        cpwl_network_free(ptr::null_mut());
        let bytes = [0xffu8 as c_char, 0];
        assert_eq!(cpwl_network_from_json(bytes.as_ptr(), &mut net), CpwlStatus::InvalidUtf8);
    }
}

#[test]
fn error_cleared_on_success() {
    unsafe {
        let mut net = ptr::null_mut();
        cpwl_network_from_json(ptr::null(), &mut net);
        assert!(!last_error().is_empty());
    }
    let net = sawtooth(2);
    assert!(last_error().is_empty());
    unsafe { cpwl_network_free(net) };
}
