//! Uniformly sampled base-space trajectories and their discrete differential
//! geometry: derivatives, local frames, headings, regularity checks.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = Vector3<f64>;

/// Minimum number of samples (K >= 8 intervals).
pub const MIN_SAMPLES: usize = 9;
/// Default minimum speed at interior samples, m/s.
pub const DEFAULT_MIN_SPEED: f64 = 1e-6;
/// Default relative threshold of the inflection test.
pub const DEFAULT_TOL_CROSS: f64 = 1e-6;
/// Absolute acceleration floor of the inflection test, m/s^2.
pub const A_FLOOR: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dim {
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "3")]
    Three,
}

impl Dim {
    pub fn as_usize(self) -> usize {
        match self {
            Dim::Two => 2,
            Dim::Three => 3,
        }
    }

    pub fn from_usize(n: usize) -> Result<Self> {
        match n {
            2 => Ok(Dim::Two),
            3 => Ok(Dim::Three),
            _ => Err(Error::DimensionMismatch { expected: 2, found: n }),
        }
    }
}

/// A base-space curve sampled at `t_k = k * dt`, `k = 0..=K`.
///
/// Planar trajectories keep `z = 0` in every sample so that the same
/// 3-vector arithmetic serves both dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    dim: Dim,
    dt: f64,
    points: Vec<Point>,
}

impl Trajectory {
    pub fn new(dim: Dim, dt: f64, points: Vec<Point>) -> Result<Self> {
        Self::with_min_speed(dim, dt, points, DEFAULT_MIN_SPEED)
    }

    pub fn with_min_speed(dim: Dim, dt: f64, points: Vec<Point>, v_min: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidTrajectory(format!("dt must be positive, got {dt}")));
        }
        if points.len() < MIN_SAMPLES {
            return Err(Error::TrajectoryTooShort { len: points.len(), min: MIN_SAMPLES });
        }
        for (k, p) in points.iter().enumerate() {
            if !p.iter().all(|c| c.is_finite()) {
                return Err(Error::InvalidTrajectory(format!("non-finite sample {k}")));
            }
            if dim == Dim::Two && p.z != 0.0 {
                return Err(Error::InvalidTrajectory(format!("planar sample {k} has z != 0")));
            }
        }
        let traj = Trajectory { dim, dt, points };
        traj.check_min_speed(v_min)?;
        Ok(traj)
    }

    /// Sample `f` on `n_intervals + 1` grid points.
    pub fn sample(dim: Dim, dt: f64, n_intervals: usize, f: impl Fn(f64) -> Point) -> Result<Self> {
        let points = (0..=n_intervals)
            .map(|k| {
                let mut p = f(k as f64 * dt);
                if dim == Dim::Two {
                    p.z = 0.0;
                }
                p
            })
            .collect();
        Self::new(dim, dt, points)
    }

    pub fn from_xy(dt: f64, xy: &[[f64; 2]]) -> Result<Self> {
        Self::new(Dim::Two, dt, xy.iter().map(|p| Point::new(p[0], p[1], 0.0)).collect())
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index K of the final sample.
    pub fn last_index(&self) -> usize {
        self.points.len() - 1
    }

    pub fn duration(&self) -> f64 {
        self.last_index() as f64 * self.dt
    }

    pub fn point(&self, k: usize) -> Point {
        self.points[k]
    }

    pub fn end(&self) -> Point {
        self.points[self.last_index()]
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    /// Nearest sample index of time `t` (clamped to the grid).
    pub fn index_at(&self, t: f64) -> usize {
        ((t / self.dt).round().max(0.0) as usize).min(self.last_index())
    }

    /// Linear interpolation between samples.
    pub fn position_at(&self, t: f64) -> Point {
        let s = (t / self.dt).clamp(0.0, self.last_index() as f64);
        let k = (s.floor() as usize).min(self.last_index() - 1);
        let w = s - k as f64;
        self.points[k] * (1.0 - w) + self.points[k + 1] * w
    }

    /// Samples `0..=k` as a new trajectory.
    pub fn prefix(&self, k: usize) -> Result<Self> {
        Self::new(self.dim, self.dt, self.points[..=k].to_vec())
    }

    /// Samples `k..=K` as a new trajectory starting at time 0.
    pub fn suffix(&self, k: usize) -> Result<Self> {
        Self::new(self.dim, self.dt, self.points[k..].to_vec())
    }

    /// Largest absolute coordinate, used to scale rounding-noise floors.
    pub fn coordinate_scale(&self) -> f64 {
        self.points
            .iter()
            .flat_map(|p| p.iter().copied())
            .fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    /// Acceleration magnitude produced by rounding noise in the samples alone.
    pub fn acceleration_noise(&self) -> f64 {
        64.0 * f64::EPSILON * self.coordinate_scale().max(1e-3) / (self.dt * self.dt)
    }

    pub fn check_min_speed(&self, v_min: f64) -> Result<()> {
        let vel = velocity(self);
        for (k, v) in vel.iter().enumerate().take(self.last_index()).skip(1) {
            if v.norm() <= v_min {
                return Err(Error::ZeroVelocity { index: k });
            }
        }
        Ok(())
    }

    /// Maximum distance between corresponding samples of two trajectories.
    pub fn max_deviation(&self, other: &Trajectory) -> f64 {
        self.points
            .iter()
            .zip(other.points.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Root-mean-square distance between corresponding samples.
    pub fn l2_distance(&self, other: &Trajectory) -> f64 {
        let n = self.len().min(other.len());
        let sum: f64 = (0..n).map(|k| (self.points[k] - other.points[k]).norm_squared()).sum();
        (sum * self.dt).sqrt()
    }
}

/// First derivative of a scalar series: central differences inside, one-sided
/// second-order stencils at both ends.
pub fn diff1(values: &[f64], dt: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    if n < 3 {
        return out;
    }
    out[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * dt);
    for k in 1..n - 1 {
        out[k] = (values[k + 1] - values[k - 1]) / (2.0 * dt);
    }
    out[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * dt);
    out
}

/// Second derivative of a scalar series, same stencil layout as [`diff1`].
pub fn diff2(values: &[f64], dt: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    if n < 4 {
        return out;
    }
    let h2 = dt * dt;
    out[0] = (2.0 * values[0] - 5.0 * values[1] + 4.0 * values[2] - values[3]) / h2;
    for k in 1..n - 1 {
        out[k] = (values[k + 1] - 2.0 * values[k] + values[k - 1]) / h2;
    }
    out[n - 1] =
        (2.0 * values[n - 1] - 5.0 * values[n - 2] + 4.0 * values[n - 3] - values[n - 4]) / h2;
    out
}

fn diff_points(points: &[Point], dt: f64, order: u8) -> Vec<Point> {
    let n = points.len();
    let mut out = vec![Point::zeros(); n];
    for axis in 0..3 {
        let series: Vec<f64> = points.iter().map(|p| p[axis]).collect();
        let d = if order == 1 { diff1(&series, dt) } else { diff2(&series, dt) };
        for (o, v) in out.iter_mut().zip(d) {
            o[axis] = v;
        }
    }
    out
}

pub(crate) fn velocity(traj: &Trajectory) -> Vec<Point> {
    diff_points(&traj.points, traj.dt, 1)
}

pub(crate) fn acceleration(traj: &Trajectory) -> Vec<Point> {
    diff_points(&traj.points, traj.dt, 2)
}

/// Sampled first (`order = 1`) or second (`order = 2`) derivative on the
/// trajectory grid.
pub fn differentiate(traj: &Trajectory, order: u8) -> Result<Vec<Point>> {
    if order != 1 && order != 2 {
        return Err(Error::InvalidParameter(format!("derivative order {order} not in {{1, 2}}")));
    }
    if traj.len() < 5 {
        return Err(Error::TrajectoryTooShort { len: traj.len(), min: 5 });
    }
    Ok(diff_points(&traj.points, traj.dt, order))
}

/// Velocity, acceleration and an orthonormal frame at one sample.
///
/// In the plane `w1` is the unit normal `u_perp` (the tangent rotated by +90
/// degrees) and `w2` is `+z`. In space `w1` follows the normal part of the
/// acceleration and `w2 = u_par x w1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameSample {
    pub v: Point,
    pub a: Point,
    pub speed: f64,
    pub u_par: Point,
    pub w1: Point,
    pub w2: Point,
}

impl FrameSample {
    pub fn u_perp(&self) -> Point {
        self.w1
    }

    /// Columns `[u_par, w1, w2]`; orthonormal and right-handed.
    pub fn basis(&self) -> Matrix3<f64> {
        Matrix3::from_columns(&[self.u_par, self.w1, self.w2])
    }
}

pub(crate) fn frame_from(dim: Dim, v: Point, a: Point, v_min: f64, a_tol: f64, index: usize) -> Result<FrameSample> {
    let speed = v.norm();
    if speed <= v_min {
        return Err(Error::ZeroVelocity { index });
    }
    let u_par = v / speed;
    let (w1, w2) = match dim {
        Dim::Two => (Point::new(-u_par.y, u_par.x, 0.0), Point::z()),
        Dim::Three => {
            let a_perp = a - u_par * a.dot(&u_par);
            let w1 = if a_perp.norm() > a_tol {
                a_perp.normalize()
            } else {
                let reference = if u_par.z.abs() > 1.0 - 1e-6 { Point::x() } else { Point::z() };
                (reference - u_par * reference.dot(&u_par)).normalize()
            };
            (w1, u_par.cross(&w1))
        }
    };
    Ok(FrameSample { v, a, speed, u_par, w1, w2 })
}

/// Local frame at sample `k`.
pub fn frame_at(traj: &Trajectory, k: usize) -> Result<FrameSample> {
    if k > traj.last_index() {
        return Err(Error::InvalidParameter(format!("sample index {k} out of range")));
    }
    let (v, a) = local_derivatives(traj, k);
    frame_from(traj.dim, v, a, DEFAULT_MIN_SPEED, A_FLOOR.max(traj.acceleration_noise()), k)
}

/// Velocity and acceleration at one sample without differentiating the whole
/// trajectory.
pub(crate) fn local_derivatives(traj: &Trajectory, k: usize) -> (Point, Point) {
    let p = &traj.points;
    let n = p.len();
    let dt = traj.dt;
    let h2 = dt * dt;
    if k == 0 {
        (
            (p[0] * -3.0 + p[1] * 4.0 - p[2]) / (2.0 * dt),
            (p[0] * 2.0 - p[1] * 5.0 + p[2] * 4.0 - p[3]) / h2,
        )
    } else if k == n - 1 {
        (
            (p[k] * 3.0 - p[k - 1] * 4.0 + p[k - 2]) / (2.0 * dt),
            (p[k] * 2.0 - p[k - 1] * 5.0 + p[k - 2] * 4.0 - p[k - 3]) / h2,
        )
    } else {
        ((p[k + 1] - p[k - 1]) / (2.0 * dt), (p[k + 1] - p[k] * 2.0 + p[k - 1]) / h2)
    }
}

/// Continuous (unwrapped) representative of a wrapped angle series.
pub fn unwrap_angles(angles: &mut [f64]) {
    use std::f64::consts::{PI, TAU};
    for k in 1..angles.len() {
        let d = angles[k] - angles[k - 1];
        if d.abs() > PI {
            angles[k] -= (d / TAU).round() * TAU;
        }
    }
}

/// Wrap an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut r = a.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    r
}

/// Planar heading `atan2(y', x')`, unwrapped.
pub fn heading(traj: &Trajectory) -> Result<Vec<f64>> {
    let vel = velocity(traj);
    heading_from_velocity(&vel)
}

pub(crate) fn heading_from_velocity(vel: &[Point]) -> Result<Vec<f64>> {
    let mut theta = Vec::with_capacity(vel.len());
    for (k, v) in vel.iter().enumerate() {
        if v.x.hypot(v.y) <= DEFAULT_MIN_SPEED {
            return Err(Error::ZeroVelocity { index: k });
        }
        theta.push(v.y.atan2(v.x));
    }
    unwrap_angles(&mut theta);
    Ok(theta)
}

/// Explicit tolerances for [`check_regularity`]; `None` selects the scaled
/// defaults.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RegularityTolerances {
    pub velocity_jump: Option<f64>,
    pub omega_jump: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub is_d2: bool,
    pub heading_d2: bool,
    pub worst_velocity_jump: f64,
    pub worst_accel_jump_tangential: f64,
    pub worst_omega_jump: f64,
    pub velocity_tolerance: f64,
    pub omega_tolerance: f64,
    pub discontinuity_indices: Vec<usize>,
    pub heading_discontinuity_indices: Vec<usize>,
}

pub(crate) fn percentile(values: impl Iterator<Item = f64>, q: f64) -> f64 {
    let mut v: Vec<f64> = values.filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let idx = ((v.len() - 1) as f64 * q).round() as usize;
    v[idx]
}

fn backward_first(p: &[Point], k: usize, dt: f64) -> Point {
    (p[k] * 3.0 - p[k - 1] * 4.0 + p[k - 2]) / (2.0 * dt)
}

fn forward_first(p: &[Point], k: usize, dt: f64) -> Point {
    (p[k] * -3.0 + p[k + 1] * 4.0 - p[k + 2]) / (2.0 * dt)
}

fn backward_second(p: &[Point], k: usize, dt: f64) -> Point {
    (p[k] * 2.0 - p[k - 1] * 5.0 + p[k - 2] * 4.0 - p[k - 3]) / (dt * dt)
}

fn forward_second(p: &[Point], k: usize, dt: f64) -> Point {
    (p[k] * 2.0 - p[k + 1] * 5.0 + p[k + 2] * 4.0 - p[k + 3]) / (dt * dt)
}

/// One-sided estimates of dtheta/dt on each side of sample `k`.
pub(crate) fn one_sided_omega(theta: &[f64], k: usize, dt: f64) -> (f64, f64) {
    let before = (3.0 * theta[k] - 4.0 * theta[k - 1] + theta[k - 2]) / (2.0 * dt);
    let after = (-3.0 * theta[k] + 4.0 * theta[k + 1] - theta[k + 2]) / (2.0 * dt);
    (before, after)
}

/// Scaled tolerance used by heading-continuity checks for a trajectory.
pub(crate) fn omega_tolerance(traj: &Trajectory, theta: &[f64], vel: &[Point], acc: &[Point]) -> f64 {
    let dt = traj.dt;
    let speeds: Vec<f64> = vel.iter().map(|v| v.norm()).collect();
    let v_ref = speeds.iter().copied().fold(0.0, f64::max).max(DEFAULT_MIN_SPEED);
    let v_low = speeds.iter().copied().fold(f64::INFINITY, f64::min).max(DEFAULT_MIN_SPEED);
    let a_ref = percentile(acc.iter().map(|a| a.norm()), 0.95);
    let omega = diff1(theta, dt);
    let omega_dot = diff2(theta, dt);
    let w_ref = percentile(omega.iter().map(|w| w.abs()), 0.95);
    let wd_ref = percentile(omega_dot.iter().map(|w| w.abs()), 0.95);
    let scale = wd_ref.max(w_ref * w_ref).max((a_ref / v_ref).powi(2)).max(1e-6);
    let noise = 64.0 * f64::EPSILON * traj.coordinate_scale().max(1e-3) / (dt * dt * v_low);
    50.0 * dt * scale + noise
}

/// Discrete proxy for membership of the base coordinates (and optionally the
/// heading) in the piecewise-regular class D2.
///
/// A velocity jump at sample `k` is the difference between the backward and
/// forward second-order one-sided velocity estimates; the heading check does
/// the same for the angular rate computed from the unwrapped heading.
pub fn check_regularity(traj: &Trajectory, tol: RegularityTolerances) -> RegularityReport {
    let dt = traj.dt;
    let p = &traj.points;
    let n = p.len();
    let vel = velocity(traj);
    let acc = acceleration(traj);
    let v_ref = vel.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let a_ref = percentile(acc.iter().map(|a| a.norm()), 0.95);
    let tol_v = tol.velocity_jump.unwrap_or(
        10.0 * dt * a_ref + 1e-9 * v_ref + 4.0 * dt * traj.acceleration_noise(),
    );

    let mut worst_v = 0.0_f64;
    let mut worst_at = 0.0_f64;
    let mut disc = Vec::new();
    for k in 2..n - 2 {
        let jump = (forward_first(p, k, dt) - backward_first(p, k, dt)).norm();
        worst_v = worst_v.max(jump);
        if jump > tol_v {
            disc.push(k);
        }
        if k >= 3 && k + 3 < n {
            let u = vel[k].normalize();
            let da = (forward_second(p, k, dt) - backward_second(p, k, dt)).dot(&u).abs();
            worst_at = worst_at.max(da);
        }
    }

    let (heading_d2, worst_w, tol_w, heading_disc) = if traj.dim == Dim::Two {
        match heading_from_velocity(&vel) {
            Ok(theta) => {
                let tol_w = tol.omega_jump.unwrap_or_else(|| omega_tolerance(traj, &theta, &vel, &acc));
                let mut worst = 0.0_f64;
                let mut idx = Vec::new();
                for k in 2..n - 2 {
                    let (before, after) = one_sided_omega(&theta, k, dt);
                    let jump = (after - before).abs();
                    worst = worst.max(jump);
                    if jump > tol_w {
                        idx.push(k);
                    }
                }
                (idx.is_empty(), worst, tol_w, idx)
            }
            Err(_) => (false, f64::INFINITY, 0.0, Vec::new()),
        }
    } else {
        (true, 0.0, 0.0, Vec::new())
    };

    RegularityReport {
        is_d2: worst_v <= tol_v,
        heading_d2,
        worst_velocity_jump: worst_v,
        worst_accel_jump_tangential: worst_at,
        worst_omega_jump: worst_w,
        velocity_tolerance: tol_v,
        omega_tolerance: tol_w,
        discontinuity_indices: disc,
        heading_discontinuity_indices: heading_disc,
    }
}

/// Inflection test for one velocity/acceleration pair.
///
/// Flags the sample when the normal acceleration is negligible relative to the
/// acceleration itself or below the rounding-noise floor of the samples.
pub(crate) fn is_inflection(v: &Point, a: &Point, tol_cross: f64, a_noise: f64) -> bool {
    let speed = v.norm();
    let cross = v.cross(a).norm();
    cross < speed * (tol_cross * a.norm().max(A_FLOOR)).max(a_noise)
}

/// Sample indices where velocity and acceleration are (numerically) collinear.
pub fn inflection_indices(traj: &Trajectory, tol_cross: f64) -> Vec<usize> {
    let vel = velocity(traj);
    let acc = acceleration(traj);
    let noise = traj.acceleration_noise();
    (0..traj.len())
        .filter(|&k| is_inflection(&vel[k], &acc[k], tol_cross, noise))
        .collect()
}

/// 2D cross product (z component).
pub fn cross2(a: &Point, b: &Point) -> f64 {
    a.x * b.y - a.y * b.x
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn line(dt: f64, n: usize) -> Trajectory {
        Trajectory::sample(Dim::Two, dt, n, |t| Point::new(t, 0.0, 0.0)).unwrap()
    }

    #[test]
    fn derivative_exact_on_linear_and_quadratic() {
        let dt = 0.1;
        let lin = line(dt, 20);
        for v in differentiate(&lin, 1).unwrap() {
            assert!((v.x - 1.0).abs() < 1e-12);
        }
        let quad = Trajectory::sample(Dim::Two, dt, 20, |t| Point::new(t + 1.0, t * t, 0.0)).unwrap();
        for a in differentiate(&quad, 2).unwrap() {
            assert!((a.y - 2.0).abs() < 1e-9, "{}", a.y);
        }
    }

    #[test]
    fn derivative_of_sine_matches_cosine() {
        let dt = 1e-3;
        let traj = Trajectory::sample(Dim::Two, dt, 3000, |t| Point::new(t, t.sin(), 0.0)).unwrap();
        let v = differentiate(&traj, 1).unwrap();
        let worst = v
            .iter()
            .enumerate()
            .map(|(k, v)| (v.y - (k as f64 * dt).cos()).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-6, "{worst}");
    }

    #[test]
    fn bad_order_and_short_input() {
        let traj = line(0.1, 10);
        assert!(matches!(differentiate(&traj, 3), Err(Error::InvalidParameter(_))));
        assert!(matches!(
            Trajectory::from_xy(0.1, &[[0.0, 0.0]; 4]),
            Err(Error::TrajectoryTooShort { .. })
        ));
    }

    #[test]
    fn frames_on_circle_and_line() {
        let dt = 1e-3;
        let circle =
            Trajectory::sample(Dim::Two, dt, 2000, |t| Point::new(t.cos(), t.sin(), 0.0)).unwrap();
        let f = frame_at(&circle, 0).unwrap();
        assert!((f.u_par - Point::new(0.0, 1.0, 0.0)).norm() < 1e-6);
        assert!((f.u_perp() - Point::new(-1.0, 0.0, 0.0)).norm() < 1e-6);
        let f = frame_at(&line(0.1, 10), 5).unwrap();
        assert_eq!(f.u_par, Point::new(1.0, 0.0, 0.0));
        assert_eq!(f.u_perp(), Point::new(0.0, 1.0, 0.0));
        assert!(f.a.norm() < 1e-9);
    }

    #[test]
    fn helix_frame_follows_acceleration() {
        let dt = 1e-3;
        let helix = Trajectory::sample(Dim::Three, dt, 100, |t| {
            Point::new((t - 0.05).cos(), (t - 0.05).sin(), t - 0.05)
        })
        .unwrap();
        let f = frame_at(&helix, 50).unwrap();
        let s = 0.5_f64.sqrt();
        assert!((f.u_par - Point::new(0.0, s, s)).norm() < 1e-6);
        assert!((f.w1 - Point::new(-1.0, 0.0, 0.0)).norm() < 1e-6);
        let q = f.basis();
        assert!((q.transpose() * q - Matrix3::identity()).norm() < 1e-12);
        assert!((q.determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spatial_fallback_frame_on_straight_line() {
        let traj =
            Trajectory::sample(Dim::Three, 0.1, 10, |t| Point::new(t, 2.0 * t, 0.5 * t)).unwrap();
        let f = frame_at(&traj, 4).unwrap();
        assert!(f.u_par.dot(&f.w1).abs() < 1e-12);
        assert!((f.w1.norm() - 1.0).abs() < 1e-12);
        assert!(f.w1.z > 0.0);
    }

    #[test]
    fn zero_velocity_frame_errors() {
        let pts: Vec<Point> = (0..12)
            .map(|k| {
                let t = k as f64 * 0.1 - 0.5;
                Point::new(t * t, 0.0, 0.0)
            })
            .collect();
        let traj = Trajectory::with_min_speed(Dim::Two, 0.1, pts, -1.0).unwrap();
        assert!(matches!(frame_at(&traj, 5), Err(Error::ZeroVelocity { index: 5 })));
        assert!(matches!(traj.check_min_speed(DEFAULT_MIN_SPEED), Err(Error::ZeroVelocity { .. })));
    }

    #[test]
    fn heading_unwraps() {
        let dt = 1e-3;
        let circle = Trajectory::sample(Dim::Two, dt, 10_000, |t| Point::new(t.cos(), t.sin(), 0.0))
            .unwrap();
        let theta = heading(&circle).unwrap();
        for (k, th) in theta.iter().enumerate() {
            assert!((th - (k as f64 * dt + FRAC_PI_2)).abs() < 1e-6);
        }
        let back = Trajectory::sample(Dim::Two, 0.1, 20, |t| Point::new(-t, 0.0, 0.0)).unwrap();
        for th in heading(&back).unwrap() {
            assert!((th - PI).abs() < 1e-12);
        }
    }

    #[test]
    fn regularity_detects_corner_and_curvature_step() {
        let dt = 1e-3;
        let smooth = Trajectory::sample(Dim::Two, dt, 3000, |t| Point::new(t, t.sin(), 0.0)).unwrap();
        let r = check_regularity(&smooth, RegularityTolerances::default());
        assert!(r.is_d2 && r.heading_d2, "{r:?}");

        let corner = Trajectory::sample(Dim::Two, dt, 2000, |t| {
            if t <= 1.0 {
                Point::new(t, 0.0, 0.0)
            } else {
                Point::new(1.0, t - 1.0, 0.0)
            }
        })
        .unwrap();
        let r = check_regularity(&corner, RegularityTolerances::default());
        assert!(!r.is_d2);
        assert!(r.discontinuity_indices.contains(&1000));

        let step = Trajectory::sample(Dim::Two, dt, 2000, |t| {
            if t <= 1.0 {
                Point::new(t, 0.0, 0.0)
            } else {
                let s = t - 1.0;
                Point::new(1.0 + s.sin(), 1.0 - s.cos(), 0.0)
            }
        })
        .unwrap();
        let r = check_regularity(&step, RegularityTolerances::default());
        assert!(r.is_d2, "{r:?}");
        assert!(!r.heading_d2);
        assert!(r.heading_discontinuity_indices.contains(&1000));
    }

    #[test]
    fn inflections() {
        let dt = 1e-3;
        let circle =
            Trajectory::sample(Dim::Two, dt, 3000, |t| Point::new(t.cos(), t.sin(), 0.0)).unwrap();
        assert!(inflection_indices(&circle, DEFAULT_TOL_CROSS).is_empty());

        let n = 2000;
        let cubic = Trajectory::sample(Dim::Two, dt, n, |t| {
            let s = t - 1.0;
            Point::new(s, s * s * s, 0.0)
        })
        .unwrap();
        let idx = inflection_indices(&cubic, DEFAULT_TOL_CROSS);
        assert!(idx.contains(&1000), "{idx:?}");
        assert!(idx.iter().all(|&k| (k as i64 - 1000).abs() <= 2));

        let straight = line(0.01, 100);
        let idx = inflection_indices(&straight, DEFAULT_TOL_CROSS);
        assert!((1..100).all(|k| idx.contains(&k)));
    }

    #[test]
    fn wrap_and_position_at() {
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-0.5) + 0.5).abs() < 1e-15);
        let l = line(0.1, 10);
        assert!((l.position_at(0.25).x - 0.25).abs() < 1e-12);
    }
}
