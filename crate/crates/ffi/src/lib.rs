//! C interface to `affine-traj`.
//!
//! Objects are opaque handles created by `at_*_new`/`at_*_from_*` functions
//! and released with the matching `at_*_free`. Every fallible call returns an
//! [`AtStatus`]; on failure `at_last_error_message` and `at_last_error_code`
//! describe the error for the calling thread. Panics never cross the
//! boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use affine_traj::correct::{
    class1_correct_position_auto, class2_correct_orientation, class2_correct_pose_3step, class2_correct_position,
    uwv_correct_position_auto, CorrectionResult, PoseOptions, TauSearchPolicy,
};
use affine_traj::io::{read_trajectory_csv, write_trajectory_csv};
use affine_traj::kinematics::{check_admissible, integrate, recover_commands, ModelClass, ReverseAux, RobotModel};
use affine_traj::scenario::{run, Overrides, RunOptions, Scenario};
use affine_traj::trajectory::{Dim, Point, Trajectory};
use affine_traj::{fixtures, Error};

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AtStatus {
    Ok = 0,
    NullPointer = 1,
    /// Malformed input: files, JSON, parameters, strings that are not UTF-8.
    InvalidInput = 2,
    /// Too few samples, zero speed, wrong dimension.
    InvalidTrajectory = 3,
    /// The requested correction or computation has no solution here.
    ComputationFailed = 4,
    Inadmissible = 5,
    CheckFailed = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

pub struct AtTrajectory(Trajectory);

pub struct AtModel(RobotModel);

pub struct AtCorrection(CorrectionResult);

struct LastError {
    code: CString,
    message: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<LastError>> = const { RefCell::new(None) };
}

fn set_error(code: &str, message: &str) {
    let clean = |s: &str| CString::new(s.replace('\0', " ")).unwrap();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(LastError { code: clean(code), message: clean(message) }));
}

fn status_of(e: &Error) -> AtStatus {
    match e {
        _ if e.is_input_error() => AtStatus::InvalidInput,
        Error::TrajectoryTooShort { .. }
        | Error::InvalidTrajectory(_)
        | Error::ZeroVelocity { .. }
        | Error::DimensionMismatch { .. } => AtStatus::InvalidTrajectory,
        Error::Inadmissible(_) => AtStatus::Inadmissible,
        Error::CheckFailed(_) => AtStatus::CheckFailed,
        _ => AtStatus::ComputationFailed,
    }
}

enum Failure {
    Core(Error),
    Status(AtStatus, String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn null() -> Failure {
    Failure::Status(AtStatus::NullPointer, "null pointer argument".into())
}

/// Run `f`, record its error and convert panics.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> AtStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AtStatus::Ok,
        Ok(Err(Failure::Core(e))) => {
            set_error(e.code(), &e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Status(s, msg))) => {
            let code = match s {
                AtStatus::NullPointer => "null_pointer",
                AtStatus::BufferTooSmall => "buffer_too_small",
                _ => "invalid_input",
            };
            set_error(code, &msg);
            s
        }
        Err(_) => {
            set_error("panic", "internal error");
            AtStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null());
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Status(AtStatus::InvalidInput, "string argument is not UTF-8".into()))
}

unsafe fn opt_str_arg<'a>(p: *const c_char) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p).map(Some)
    }
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(null)
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null());
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

fn dim_of(dim: u32) -> Result<Dim, Failure> {
    Ok(Dim::from_usize(dim as usize)?)
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn at_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn at_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |e| e.message.as_ptr()))
}

/// Stable snake-case code of the last failed call on this thread, or NULL.
#[no_mangle]
pub extern "C" fn at_last_error_code() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |e| e.code.as_ptr()))
}

// ---------------------------------------------------------------- trajectories

/// Trajectory from `n_points` samples of `dim` (2 or 3) coordinates each,
/// stored point after point in `coords`, spaced `dt` seconds apart.
///
/// # Safety
/// `coords` must point to `n_points * dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn at_trajectory_new(
    dim: u32,
    dt: f64,
    coords: *const f64,
    n_points: usize,
    out: *mut *mut AtTrajectory,
) -> AtStatus {
    guard(|| {
        let d = dim_of(dim)?;
        if coords.is_null() {
            return Err(null());
        }
        let k = d.as_usize();
        let values = std::slice::from_raw_parts(coords, n_points * k);
        let points = values
            .chunks(k)
            .map(|c| Point::new(c[0], c[1], if k == 3 { c[2] } else { 0.0 }))
            .collect();
        put(out, AtTrajectory(Trajectory::new(d, dt, points)?))
    })
}

/// Read a `t,x,y[,z]` CSV file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn at_trajectory_from_csv(path: *const c_char, out: *mut *mut AtTrajectory) -> AtStatus {
    guard(|| {
        let file = std::fs::File::open(str_arg(path)?).map_err(Error::from)?;
        put(out, AtTrajectory(read_trajectory_csv(std::io::BufReader::new(file))?))
    })
}

/// Sample a built-in generator. `params_json` may be NULL for defaults.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn at_trajectory_generate(
    name: *const c_char,
    params_json: *const c_char,
    dt: f64,
    out: *mut *mut AtTrajectory,
) -> AtStatus {
    guard(|| {
        let name = str_arg(name)?;
        let params = match opt_str_arg(params_json)? {
            Some(s) => Some(
                serde_json::from_str::<serde_json::Value>(s)
                    .map_err(|e| Failure::Status(AtStatus::InvalidInput, format!("params: {e}")))?,
            ),
            None => None,
        };
        put(out, AtTrajectory(fixtures::generate(name, params.as_ref(), dt)?))
    })
}

/// # Safety
/// `t` must come from this library and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn at_trajectory_free(t: *mut AtTrajectory) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Number of samples; 0 for NULL.
///
/// # Safety
/// `t` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn at_trajectory_len(t: *const AtTrajectory) -> usize {
    t.as_ref().map_or(0, |t| t.0.len())
}

/// 2 or 3; 0 for NULL.
///
/// # Safety
/// `t` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn at_trajectory_dim(t: *const AtTrajectory) -> u32 {
    t.as_ref().map_or(0, |t| t.0.dim().as_usize() as u32)
}

/// Sample step in seconds; NaN for NULL.
///
/// # Safety
/// `t` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn at_trajectory_dt(t: *const AtTrajectory) -> f64 {
    t.as_ref().map_or(f64::NAN, |t| t.0.dt())
}

/// Copy the coordinates (`len * dim` doubles, point after point) into
/// `buf`. `needed` receives the required count; when `capacity` is smaller
/// nothing is copied and `BufferTooSmall` is returned.
///
/// # Safety
/// `buf` must hold `capacity` doubles; `needed` must be writable or NULL.
#[no_mangle]
pub unsafe extern "C" fn at_trajectory_copy_points(
    t: *const AtTrajectory,
    buf: *mut f64,
    capacity: usize,
    needed: *mut usize,
) -> AtStatus {
    guard(|| {
        let t = &deref(t)?.0;
        let k = t.dim().as_usize();
        let n = t.len() * k;
        if !needed.is_null() {
            *needed = n;
        }
        if capacity < n {
            return Err(Failure::Status(AtStatus::BufferTooSmall, format!("{n} values needed, capacity {capacity}")));
        }
        if buf.is_null() {
            return Err(null());
        }
        let dst = std::slice::from_raw_parts_mut(buf, n);
        for (chunk, p) in dst.chunks_mut(k).zip(t.points()) {
            chunk.copy_from_slice(&p.as_slice()[..k]);
        }
        Ok(())
    })
}

/// Write the trajectory as CSV with 12 significant digits.
///
/// # Safety
/// `t` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn at_trajectory_write_csv(t: *const AtTrajectory, path: *const c_char) -> AtStatus {
    guard(|| {
        let t = &deref(t)?.0;
        let file = std::fs::File::create(str_arg(path)?).map_err(Error::from)?;
        write_trajectory_csv(t, std::io::BufWriter::new(file))?;
        Ok(())
    })
}

// ---------------------------------------------------------------- models

/// Model from JSON, e.g. `{"kind":"kinematic_car","wheelbase":2.5}`.
///
/// # Safety
/// `json` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn at_model_from_json(json: *const c_char, out: *mut *mut AtModel) -> AtStatus {
    guard(|| {
        let model: RobotModel = serde_json::from_str(str_arg(json)?)
            .map_err(|e| Failure::Status(AtStatus::InvalidInput, format!("model: {e}")))?;
        model.validate()?;
        put(out, AtModel(model))
    })
}

/// # Safety
/// `m` must come from this library and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn at_model_free(m: *mut AtModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Whether `t` can be followed by the model.
///
/// # Safety
/// Handles must be live; `admissible` must be writable.
#[no_mangle]
pub unsafe extern "C" fn at_check_admissible(m: *const AtModel, t: *const AtTrajectory, admissible: *mut bool) -> AtStatus {
    guard(|| {
        let (m, t) = (&deref(m)?.0, &deref(t)?.0);
        if admissible.is_null() {
            return Err(null());
        }
        if m.dim() != t.dim() {
            return Err(Error::DimensionMismatch { expected: m.dim().as_usize(), found: t.dim().as_usize() }.into());
        }
        *admissible = check_admissible(m, t).admissible;
        Ok(())
    })
}

/// Recover the commands of `t`, integrate them and report the largest
/// position deviation from `t` in metres.
///
/// # Safety
/// Handles must be live; `deviation` must be writable.
#[no_mangle]
pub unsafe extern "C" fn at_round_trip_error(m: *const AtModel, t: *const AtTrajectory, deviation: *mut f64) -> AtStatus {
    guard(|| {
        let (m, t) = (&deref(m)?.0, &deref(t)?.0);
        if deviation.is_null() {
            return Err(null());
        }
        let rec = recover_commands(m, t, &ReverseAux::default())?;
        let back = integrate(m, &rec.initial_state(), &rec.commands)?.trajectory(m.dim())?;
        *deviation = back.max_deviation(t);
        Ok(())
    })
}

// ---------------------------------------------------------------- corrections

/// Move the final position to `(x, y, z)` (`z` ignored in 2D) with the
/// deformation family of the model: general planar maps for class I
/// models, tangent-preserving maps for class II models, six-parameter maps
/// in 3D. `m` may be NULL for planar class II behaviour.
///
/// # Safety
/// `t` must be live, `m` live or NULL, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn at_correct_position(
    t: *const AtTrajectory,
    m: *const AtModel,
    x: f64,
    y: f64,
    z: f64,
    out: *mut *mut AtCorrection,
) -> AtStatus {
    guard(|| {
        let t = &deref(t)?.0;
        let model = m.as_ref().map(|m| &m.0);
        let policy = TauSearchPolicy::default();
        let res = match (t.dim(), model.map(RobotModel::class)) {
            (Dim::Three, _) => uwv_correct_position_auto(t, Point::new(x, y, z), &policy)?,
            (_, Some(ModelClass::ClassI)) => class1_correct_position_auto(t, Point::new(x, y, 0.0), &policy)?,
            _ => class2_correct_position(t, Point::new(x, y, 0.0), &policy)?,
        };
        put(out, AtCorrection(res))
    })
}

/// Turn the final heading to `heading` (rad) keeping the final position.
///
/// # Safety
/// `t` must be live, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn at_correct_orientation(t: *const AtTrajectory, heading: f64, out: *mut *mut AtCorrection) -> AtStatus {
    guard(|| {
        let t = &deref(t)?.0;
        put(out, AtCorrection(class2_correct_orientation(t, heading, &TauSearchPolicy::default())?))
    })
}

/// Move the final pose to `(x, y, heading)` with three deformations.
///
/// # Safety
/// `t` must be live, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn at_correct_pose(
    t: *const AtTrajectory,
    x: f64,
    y: f64,
    heading: f64,
    out: *mut *mut AtCorrection,
) -> AtStatus {
    guard(|| {
        let t = &deref(t)?.0;
        let res = class2_correct_pose_3step(
            t,
            Point::new(x, y, 0.0),
            heading,
            &TauSearchPolicy::default(),
            &PoseOptions::default(),
        )?;
        put(out, AtCorrection(res))
    })
}

/// # Safety
/// `c` must come from this library and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn at_correction_free(c: *mut AtCorrection) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// New handle holding a copy of the corrected trajectory.
///
/// # Safety
/// `c` must be live, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn at_correction_trajectory(c: *const AtCorrection, out: *mut *mut AtTrajectory) -> AtStatus {
    guard(|| put(out, AtTrajectory(deref(c)?.0.corrected.clone())))
}

/// Final position error (m); NaN for NULL.
///
/// # Safety
/// `c` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn at_correction_residual_position(c: *const AtCorrection) -> f64 {
    c.as_ref().map_or(f64::NAN, |c| c.0.residual_position)
}

/// Final heading error (rad); NaN when the correction has no heading target.
///
/// # Safety
/// `c` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn at_correction_residual_orientation(c: *const AtCorrection) -> f64 {
    c.as_ref().and_then(|c| c.0.residual_orientation).unwrap_or(f64::NAN)
}

/// Number of deformations applied; 0 for NULL.
///
/// # Safety
/// `c` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn at_correction_deformation_count(c: *const AtCorrection) -> usize {
    c.as_ref().map_or(0, |c| c.0.deformations.len())
}

// ---------------------------------------------------------------- scenarios

/// Run a JSON scenario file as the command-line tool does. `out_dir` may be
/// NULL to use the scenario's own output directory.
///
/// # Safety
/// String arguments must be NUL-terminated (or NULL for `out_dir`).
#[no_mangle]
pub unsafe extern "C" fn at_run_scenario(scenario_path: *const c_char, out_dir: *const c_char) -> AtStatus {
    guard(|| {
        let path = PathBuf::from(str_arg(scenario_path)?);
        let out = opt_str_arg(out_dir)?.map(PathBuf::from);
        let scn = Scenario::load(&path, &Overrides::default())?;
        run(&scn, &RunOptions { out, timing: false })?;
        Ok(())
    })
}
