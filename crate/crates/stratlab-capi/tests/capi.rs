//! Exercises the C ABI exactly as a foreign caller would: through the
//! exported extern "C" functions and raw pointers.

use std::ffi::{c_char, CString};
use std::ptr;

use stratlab_capi::*;

fn last_error() -> String {
    let mut buf = vec![0i8; 256];
    let n = unsafe { stratlab_last_error(buf.as_mut_ptr() as *mut c_char, buf.len()) };
    let bytes: Vec<u8> = buf[..n.min(buf.len() - 1)].iter().map(|&b| b as u8).collect();
    String::from_utf8_lossy(&bytes).into_owned()
}

#[test]
fn version_is_nonempty() {
    let v = stratlab_version();
    assert!(!v.is_null());
    let s = unsafe { std::ffi::CStr::from_ptr(v) }.to_str().unwrap();
    assert!(!s.is_empty());
}

#[test]
fn unknown_preset_reports_error() {
    let name = CString::new("no-such-preset").unwrap();
    let mut sim: *mut StratSim = ptr::null_mut();
    let status = unsafe { stratlab_sim_from_preset(name.as_ptr(), &mut sim) };
    assert_eq!(status, StratStatus::UnknownPreset);
    assert!(sim.is_null());
    assert!(last_error().contains("no-such-preset"));
}

#[test]
fn null_arguments_are_rejected() {
    let mut sim: *mut StratSim = ptr::null_mut();
    assert_eq!(
        unsafe { stratlab_sim_from_preset(ptr::null(), &mut sim) },
        StratStatus::NullArgument
    );
    assert_eq!(unsafe { stratlab_sim_theta(ptr::null(), ptr::null_mut(), 0) }, StratStatus::NullArgument);
    assert!(unsafe { stratlab_sim_time(ptr::null()) }.is_nan());
    unsafe { stratlab_sim_free(ptr::null_mut()) }; // no-op
}

#[test]
fn null_preset_lifecycle() {
    let name = CString::new("null").unwrap();
    let mut sim: *mut StratSim = ptr::null_mut();
    assert_eq!(unsafe { stratlab_sim_from_preset(name.as_ptr(), &mut sim) }, StratStatus::Ok);
    assert!(!sim.is_null());

    let (mut n1, mut n2) = (0usize, 0usize);
    assert_eq!(unsafe { stratlab_sim_grid(sim, &mut n1, &mut n2) }, StratStatus::Ok);
    assert_eq!((n1, n2), (32, 33));

    assert_eq!(unsafe { stratlab_sim_advance(sim, 0.1) }, StratStatus::Ok);
    assert!((unsafe { stratlab_sim_time(sim) } - 0.1).abs() < 1e-12);

    let mut diag = StratDiagnostics {
        t: 0.0,
        e_p: 0.0,
        e: 0.0,
        k: 0.0,
        u2_l2sq: 0.0,
        u_l2sq: 0.0,
        theta_h: [0.0; 5],
        gradpsi_hk: 0.0,
        d2e_integrand: 0.0,
        mass: 0.0,
        linf: 0.0,
        bc_drift: 0.0,
    };
    assert_eq!(unsafe { stratlab_sim_diagnostics(sim, &mut diag) }, StratStatus::Ok);
    assert_eq!(diag.e, 0.0);
    assert_eq!(diag.k, 0.0);
    assert_eq!(diag.linf, 0.0);

    let mut theta = vec![1.0f64; n1 * n2];
    assert_eq!(
        unsafe { stratlab_sim_theta(sim, theta.as_mut_ptr(), theta.len()) },
        StratStatus::Ok
    );
    assert!(theta.iter().all(|&v| v == 0.0));

    // wrong buffer size is rejected
    assert_eq!(
        unsafe { stratlab_sim_theta(sim, theta.as_mut_ptr(), 7) },
        StratStatus::InvalidArgument
    );

    // cannot advance backwards
    assert_eq!(unsafe { stratlab_sim_advance(sim, 0.0) }, StratStatus::InvalidArgument);

    unsafe { stratlab_sim_free(sim) };
}

#[test]
fn quick_preset_evolves_and_dissipates() {
    let name = CString::new("ipm-quick").unwrap();
    let mut sim: *mut StratSim = ptr::null_mut();
    assert_eq!(unsafe { stratlab_sim_from_preset(name.as_ptr(), &mut sim) }, StratStatus::Ok);
    let mut d0 = unsafe { std::mem::zeroed::<StratDiagnostics>() };
    let mut d1 = unsafe { std::mem::zeroed::<StratDiagnostics>() };
    assert_eq!(unsafe { stratlab_sim_diagnostics(sim, &mut d0) }, StratStatus::Ok);
    assert_eq!(unsafe { stratlab_sim_advance(sim, 0.5) }, StratStatus::Ok);
    assert_eq!(unsafe { stratlab_sim_diagnostics(sim, &mut d1) }, StratStatus::Ok);
    assert!(d0.e > 0.0 && d1.e < d0.e, "E: {} -> {}", d0.e, d1.e);
    assert!(d1.k < d0.k);
    unsafe { stratlab_sim_free(sim) };
}

#[test]
fn rearrange_flips_an_increasing_profile() {
    let (n1, n2) = (16usize, 17usize);
    let mut values = vec![0.0f64; n1 * n2];
    for i in 0..n1 {
        for j in 0..n2 {
            values[i * n2 + j] = j as f64 / (n2 - 1) as f64;
        }
    }
    let mut out = vec![0.0f64; n2];
    let status =
        unsafe { stratlab_rearrange(values.as_ptr(), n1, n2, out.as_mut_ptr()) };
    assert_eq!(status, StratStatus::Ok);
    for j in 0..n2 {
        let want = 1.0 - j as f64 / (n2 - 1) as f64;
        assert!((out[j] - want).abs() <= 1.0 / (n2 - 1) as f64, "j={j}: {}", out[j]);
    }
}

#[test]
fn fit_power_law_matches_exact_data() {
    let times: Vec<f64> = (1..200).map(|i| i as f64 * 0.5).collect();
    let values: Vec<f64> = times.iter().map(|t| 3.0 * t.powi(-2)).collect();
    let (mut exp, mut r2) = (0.0f64, 0.0f64);
    let status = unsafe {
        stratlab_fit_power_law(
            times.as_ptr(),
            values.as_ptr(),
            times.len(),
            5.0,
            90.0,
            &mut exp,
            &mut r2,
        )
    };
    assert_eq!(status, StratStatus::Ok);
    assert!((exp + 2.0).abs() < 1e-9);
    assert!(r2 > 0.999999);

    // starved window is an invalid-argument error with a message
    let status = unsafe {
        stratlab_fit_power_law(
            times.as_ptr(),
            values.as_ptr(),
            times.len(),
            1000.0,
            2000.0,
            &mut exp,
            &mut r2,
        )
    };
    assert_eq!(status, StratStatus::InvalidArgument);
    assert!(!last_error().is_empty());
}
