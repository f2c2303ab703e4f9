use serde::{Deserialize, Serialize};

use crate::correct::{apply_deformations, pose_window, Deformation, PoseOptions, TauSearchPolicy};
use crate::error::{Error, Result};
use crate::kinematics::RobotModel;
use crate::trajectory::{cross2, local_derivatives, wrap_angle, Dim, Point, Trajectory};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GapSpec {
    /// Counter-steering duration (s).
    pub counter_steer: f64,
    /// Straight stub duration (s).
    pub straight: f64,
    /// Steering-rate cap while counter-steering (rad/s).
    pub max_steer_rate: f64,
    /// Acceleration cap of the speed blend (m/s^2).
    pub max_accel: f64,
}

impl Default for GapSpec {
    fn default() -> Self {
        GapSpec { counter_steer: 1.0, straight: 1.0, max_steer_rate: 0.5, max_accel: 2.0 }
    }
}

impl GapSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.counter_steer > 0.0 && self.straight > 0.0 && self.max_steer_rate > 0.0 && self.max_accel > 0.0) {
            return Err(Error::InvalidParameter("gap durations and caps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapFill {
    #[serde(skip)]
    pub joined: Trajectory,
    #[serde(skip)]
    pub extended1: Trajectory,
    #[serde(skip)]
    pub corrected1: Trajectory,
    #[serde(skip)]
    pub extended2: Trajectory,
    pub deformations: Vec<Deformation>,
    /// Sample range of the blended straight segment in `joined`.
    pub straight_range: (usize, usize),
    /// Index in `joined` of the connection point.
    pub junction: usize,
}

/// Car pose at sample `k`: position, heading, steering angle and speed.
fn car_state(traj: &Trajectory, k: usize, wheelbase: f64) -> (Point, f64, f64, f64) {
    let (v, a) = local_derivatives(traj, k);
    let speed = v.norm();
    let beta = (wheelbase * cross2(&v, &a) / speed.powi(3)).atan();
    (traj.point(k), v.y.atan2(v.x), beta, speed)
}

/// Counter-steer to zero steering over `n_a` steps at constant speed, then
/// drive straight for `n_b` steps. A negative speed integrates backwards in
/// time. Returns the samples after the start.
fn stub(start: (Point, f64, f64), speed: f64, wheelbase: f64, dt: f64, n_a: usize, n_b: usize) -> Vec<Point> {
    let (p, theta, beta) = start;
    let zeta = -beta / (n_a as f64 * dt);
    let f = |s: [f64; 4]| [speed * s[2].cos(), speed * s[2].sin(), speed * s[3].tan() / wheelbase, zeta];
    let mut s = [p.x, p.y, theta, beta];
    let mut out = Vec::with_capacity(n_a + n_b);
    for _ in 0..n_a {
        let add = |a: &[f64; 4], b: &[f64; 4], h: f64| std::array::from_fn::<f64, 4, _>(|i| a[i] + h * b[i]);
        let k1 = f(s);
        let k2 = f(add(&s, &k1, 0.5 * dt));
        let k3 = f(add(&s, &k2, 0.5 * dt));
        let k4 = f(add(&s, &k3, dt));
        s = std::array::from_fn(|i| s[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
        out.push(Point::new(s[0], s[1], 0.0));
    }
    let (c, sn) = (s[2].cos(), s[2].sin());
    let base = Point::new(s[0], s[1], 0.0);
    for j in 1..=n_b {
        out.push(base + Point::new(c, sn, 0.0) * (speed * dt * j as f64));
    }
    out
}

fn concat(a: &[Point], b: &[Point], dt: f64) -> Result<Trajectory> {
    let mut points = a.to_vec();
    points.extend_from_slice(b);
    Trajectory::new(Dim::Two, dt, points)
}

/// Connect `traj1` to `traj2` with a kinematic-car-feasible bridge.
///
/// Both ends are extended by a counter-steering stub and a straight stub
/// (the second one grown backwards in time). The extended first trajectory
/// is deformed so that its final pose matches the start pose of the
/// extended second one, and the speed is blended along the joint straight
/// segment; only that straight segment is reparameterized.
pub fn gap_fill(
    traj1: &Trajectory,
    traj2: &Trajectory,
    model: &RobotModel,
    spec: &GapSpec,
    policy: &TauSearchPolicy,
    opts: &PoseOptions,
) -> Result<GapFill> {
    let wheelbase = match *model {
        RobotModel::KinematicCar { wheelbase } | RobotModel::Type11 { wheelbase } => wheelbase,
        _ => return Err(Error::InvalidParameter(format!("gap filling needs a car-like model, got {}", model.name()))),
    };
    model.validate()?;
    spec.validate()?;
    for t in [traj1, traj2] {
        if t.dim() != Dim::Two {
            return Err(Error::DimensionMismatch { expected: 2, found: t.dim().as_usize() });
        }
    }
    let dt = traj1.dt();
    if (traj2.dt() - dt).abs() > 1e-12 * dt {
        return Err(Error::InvalidParameter("both trajectories must share the time step".into()));
    }

    let s1 = car_state(traj1, traj1.last_index(), wheelbase);
    let s2 = car_state(traj2, 0, wheelbase);
    let scale = traj1.coordinate_scale().max(1.0);
    if (s1.0 - s2.0).norm() <= 1e-12 * scale && wrap_angle(s1.1 - s2.1).abs() <= 1e-12 {
        let joined = concat(traj1.points(), &traj2.points()[1..], dt)?;
        let junction = traj1.last_index();
        return Ok(GapFill {
            joined,
            extended1: traj1.clone(),
            corrected1: traj1.clone(),
            extended2: traj2.clone(),
            deformations: Vec::new(),
            straight_range: (junction, junction),
            junction,
        });
    }

    let n_a = ((spec.counter_steer / dt).round() as usize).max(1);
    let n_b = ((spec.straight / dt).round() as usize).max(2);
    for beta in [s1.2, s2.2] {
        let required = beta.abs() / (n_a as f64 * dt);
        if required > spec.max_steer_rate {
            return Err(Error::StubTooShort { required, cap: spec.max_steer_rate });
        }
    }
    let stub1 = stub((s1.0, s1.1, s1.2), s1.3, wheelbase, dt, n_a, n_b);
    let extended1 = concat(traj1.points(), &stub1, dt)?;
    let mut stub2 = stub((s2.0, s2.1, s2.2), -s2.3, wheelbase, dt, n_a, n_b);
    stub2.reverse();
    let extended2 = concat(&stub2, traj2.points(), dt)?;

    let target = extended2.point(0);
    let (v2, _) = local_derivatives(&extended2, 0);
    let deformations = pose_window(&extended1, extended1.last_index(), target, v2.y.atan2(v2.x), policy, opts)?;
    let corrected1 = apply_deformations(&extended1, &deformations)?;

    // speed blend along the joint straight segment
    let i_a = traj1.last_index() + n_a;
    let a = corrected1.point(i_a);
    let b = extended2.point(n_b);
    let v_a = (corrected1.point(i_a + 1) - a).norm() / dt;
    let v_b = s2.3;
    let length = (b - a).norm();
    let u = (b - a) / length;
    let n = ((2.0 * length / (v_a + v_b) / dt).round() as usize).max(2);
    let d = n as f64 * dt;
    // cubic Hermite arc length with end speeds v_a, v_b
    let sigma = |t: f64| {
        let s = t / d;
        (s * s * s - 2.0 * s * s + s) * d * v_a + (-2.0 * s * s * s + 3.0 * s * s) * length + (s * s * s - s * s) * d * v_b
    };
    let accel_at = |t: f64| {
        let s = t / d;
        ((6.0 * s - 4.0) * d * v_a + (-12.0 * s + 6.0) * length + (6.0 * s - 2.0) * d * v_b) / (d * d)
    };
    let speed_at = |t: f64| {
        let s = t / d;
        ((3.0 * s * s - 4.0 * s + 1.0) * d * v_a + (-6.0 * s * s + 6.0 * s) * length + (3.0 * s * s - 2.0 * s) * d * v_b) / d
    };
    let required = accel_at(0.0).abs().max(accel_at(d).abs());
    let min_speed = (0..=n).map(|j| speed_at(j as f64 * dt)).fold(f64::INFINITY, f64::min);
    if required > spec.max_accel || min_speed <= 0.0 {
        return Err(Error::SpeedBlendInfeasible { required, cap: spec.max_accel });
    }
    let mut points = corrected1.points()[..=i_a].to_vec();
    points.extend((1..n).map(|j| a + u * sigma(j as f64 * dt)));
    let junction_offset = ((corrected1.last_index() - i_a) as f64 / (corrected1.last_index() - i_a + n_b) as f64 * n as f64)
        .round() as usize;
    points.extend_from_slice(&extended2.points()[n_b..]);
    let joined = Trajectory::new(Dim::Two, dt, points)?;
    Ok(GapFill {
        joined,
        extended1,
        corrected1,
        extended2,
        deformations,
        straight_range: (i_a, i_a + n),
        junction: i_a + junction_offset,
    })
}
