use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use affine_traj_ffi::*;

fn last_code() -> String {
    let p = at_last_error_code();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

fn generate(name: &str, dt: f64) -> *mut AtTrajectory {
    let name = CString::new(name).unwrap();
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { at_trajectory_generate(name.as_ptr(), ptr::null(), dt, &mut t) }, AtStatus::Ok);
    t
}

fn model(json: &str) -> *mut AtModel {
    let json = CString::new(json).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { at_model_from_json(json.as_ptr(), &mut m) }, AtStatus::Ok);
    m
}

#[test]
fn trajectory_round_trip_through_buffers() {
    let coords: Vec<f64> = (0..20).flat_map(|k| [k as f64 * 0.1, (k as f64 * 0.1).powi(2)]).collect();
    let mut t = ptr::null_mut();
    unsafe {
        assert_eq!(at_trajectory_new(2, 0.1, coords.as_ptr(), 20, &mut t), AtStatus::Ok);
        assert_eq!(at_trajectory_len(t), 20);
        assert_eq!(at_trajectory_dim(t), 2);
        assert_eq!(at_trajectory_dt(t), 0.1);
        let mut needed = 0;
        let mut small = [0.0; 4];
        assert_eq!(at_trajectory_copy_points(t, small.as_mut_ptr(), 4, &mut needed), AtStatus::BufferTooSmall);
        assert_eq!(needed, 40);
        assert_eq!(last_code(), "buffer_too_small");
        let mut buf = vec![0.0; needed];
        assert_eq!(at_trajectory_copy_points(t, buf.as_mut_ptr(), buf.len(), &mut needed), AtStatus::Ok);
        assert_eq!(buf, coords);
        assert!(at_last_error_message().is_null());
        at_trajectory_free(t);
    }
}

#[test]
fn bad_arguments_map_to_status_codes() {
    let mut t = ptr::null_mut();
    unsafe {
        assert_eq!(at_trajectory_new(2, 0.1, ptr::null(), 10, &mut t), AtStatus::NullPointer);
        assert_eq!(last_code(), "null_pointer");
        let few = [0.0, 0.0, 1.0, 0.0];
        assert_eq!(at_trajectory_new(2, 0.1, few.as_ptr(), 2, &mut t), AtStatus::InvalidTrajectory);
        assert_eq!(last_code(), "trajectory_too_short");
        assert_eq!(at_trajectory_new(4, 0.1, few.as_ptr(), 1, &mut t), AtStatus::InvalidTrajectory);
        assert!(t.is_null());
        let name = CString::new("spiral").unwrap();
        assert_eq!(at_trajectory_generate(name.as_ptr(), ptr::null(), 0.01, &mut t), AtStatus::InvalidInput);
        assert_eq!(last_code(), "unknown_generator");
        let msg = CStr::from_ptr(at_last_error_message()).to_str().unwrap();
        assert!(msg.contains("spiral"));
        assert_eq!(at_trajectory_len(ptr::null()), 0);
        at_trajectory_free(ptr::null_mut());
    }
}

#[test]
fn corrections_through_handles() {
    let half = generate("circle", 1e-3);
    let unicycle = model(r#"{"kind":"unicycle"}"#);
    unsafe {
        let mut c = ptr::null_mut();
        assert_eq!(at_correct_position(half, unicycle, 0.3, -0.2, 0.0, &mut c), AtStatus::Ok);
        assert!(at_correction_residual_position(c) < 1e-9);
        assert!(at_correction_residual_orientation(c).is_nan());
        let mut out = ptr::null_mut();
        assert_eq!(at_correction_trajectory(c, &mut out), AtStatus::Ok);
        let mut ok = false;
        assert_eq!(at_check_admissible(unicycle, out, &mut ok), AtStatus::Ok);
        assert!(ok);
        let mut dev = f64::NAN;
        assert_eq!(at_round_trip_error(unicycle, out, &mut dev), AtStatus::Ok);
        assert!(dev < 1e-4, "{dev}");
        at_trajectory_free(out);
        at_correction_free(c);

        // a quarter turn cannot reach a point behind its tangent cone
        let quarter_params = CString::new(r#"{"duration":1.5707963267948966}"#).unwrap();
        let name = CString::new("circle").unwrap();
        let mut quarter = ptr::null_mut();
        assert_eq!(at_trajectory_generate(name.as_ptr(), quarter_params.as_ptr(), 1e-3, &mut quarter), AtStatus::Ok);
        let mut c = ptr::null_mut();
        assert_eq!(at_correct_position(quarter, ptr::null(), 1.1, 0.9, 0.0, &mut c), AtStatus::ComputationFailed);
        assert_eq!(last_code(), "no_accessible_tangent");
        assert!(c.is_null());
        at_trajectory_free(quarter);

        let helix = generate("helix", 1e-3);
        let uwv = model(r#"{"kind":"underwater3d"}"#);
        let mut ok = true;
        assert_eq!(at_check_admissible(uwv, half, &mut ok), AtStatus::InvalidTrajectory);
        let mut c = ptr::null_mut();
        assert_eq!(at_correct_position(helix, uwv, 1.0, 0.5, 3.2, &mut c), AtStatus::Ok);
        assert!(at_correction_residual_position(c) < 1e-9);
        at_correction_free(c);
        at_model_free(uwv);
        at_trajectory_free(helix);
    }
    unsafe {
        at_model_free(unicycle);
        at_trajectory_free(half);
    }
}

#[test]
fn pose_and_orientation() {
    let seed = generate("seed_arc", 1e-3);
    let scurve = generate("scurve", 1e-3);
    unsafe {
        let mut c = ptr::null_mut();
        assert_eq!(at_correct_pose(seed, 20.0, 40.0, 1.4, &mut c), AtStatus::Ok);
        assert!(at_correction_residual_orientation(c) < 1e-6);
        assert_eq!(at_correction_deformation_count(c), 3);
        at_correction_free(c);

        let reference = affine_traj::fixtures::generate("scurve", None, 1e-3).unwrap();
        let theta0 = affine_traj::correct::heading_at(&reference, reference.last_index());
        let mut hits = 0;
        for delta in [0.15, -0.15] {
            let mut c = ptr::null_mut();
            match at_correct_orientation(scurve, theta0 + delta, &mut c) {
                AtStatus::Ok => {
                    hits += 1;
                    assert!(at_correction_residual_orientation(c) < 1e-6);
                    at_correction_free(c);
                }
                AtStatus::ComputationFailed => assert!(c.is_null()),
                s => panic!("{s:?}"),
            }
        }
        assert!(hits >= 1);
        at_trajectory_free(seed);
        at_trajectory_free(scurve);
    }
}

#[test]
fn csv_and_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let csv = CString::new(dir.path().join("t.csv").to_str().unwrap()).unwrap();
    let t = generate("line", 1e-2);
    unsafe {
        assert_eq!(at_trajectory_write_csv(t, csv.as_ptr()), AtStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(at_trajectory_from_csv(csv.as_ptr(), &mut back), AtStatus::Ok);
        assert_eq!(at_trajectory_len(back), at_trajectory_len(t));
        at_trajectory_free(back);
        at_trajectory_free(t);

        let missing = CString::new(dir.path().join("none.csv").to_str().unwrap()).unwrap();
        let mut back = ptr::null_mut();
        assert_eq!(at_trajectory_from_csv(missing.as_ptr(), &mut back), AtStatus::InvalidInput);
        assert_eq!(last_code(), "io");
    }

    let scenario = dir.path().join("s.json");
    std::fs::write(
        &scenario,
        r#"{"task":"correct_pose","model":{"kind":"kinematic_car","wheelbase":2.5},"trajectory":{"generator":"seed_arc"},"params":{"target":[20,40],"heading":1.4}}"#,
    )
    .unwrap();
    let path = CString::new(scenario.to_str().unwrap()).unwrap();
    let out = CString::new(dir.path().join("out").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { at_run_scenario(path.as_ptr(), out.as_ptr()) }, AtStatus::Ok);
    assert!(dir.path().join("out/report.json").exists());

    std::fs::write(&scenario, r#"{"task":"correct_pose","params":{"target":"north"}}"#).unwrap();
    assert_eq!(unsafe { at_run_scenario(path.as_ptr(), out.as_ptr()) }, AtStatus::InvalidInput);
    assert_eq!(last_code(), "scenario");
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(at_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

/// Compile and run a C program against the generated header and the static
/// library when a C compiler is available.
#[test]
fn c_program_links_against_the_static_library() {
    let Ok(cc) = which_cc() else { return };
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let deps = std::env::current_exe().unwrap().parent().unwrap().to_path_buf();
    let lib = deps.parent().unwrap().join("libaffine_traj_ffi.a");
    if !lib.exists() {
        eprintln!("skipping: {} not built", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new(&cc)
        .arg(manifest.join("tests/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}

fn which_cc() -> Result<String, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if Command::new(cc).arg("--version").output().is_ok_and(|o| o.status.success()) {
            return Ok(cc.to_string());
        }
    }
    Err(())
}
