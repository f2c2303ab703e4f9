use serde::{Deserialize, Serialize};

use crate::correct::{self, apply_deformations, finish, CorrectionResult, Deformation, PoseOptions, TauSearchPolicy};
use crate::error::{Error, Result};
use crate::kinematics::{check_admissible, ModelClass, RobotModel};
use crate::trajectory::{local_derivatives, wrap_angle, Dim, Point, Trajectory};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Obstacle {
    Circle {
        center: [f64; 2],
        radius: f64,
        #[serde(default)]
        known: bool,
    },
    /// Axis-aligned rectangle.
    Rect {
        min: [f64; 2],
        max: [f64; 2],
        #[serde(default)]
        known: bool,
    },
}

impl Obstacle {
    /// Known obstacles are part of the original plan; unknown ones are
    /// discovered while driving.
    pub fn known(&self) -> bool {
        match self {
            Obstacle::Circle { known, .. } | Obstacle::Rect { known, .. } => *known,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Obstacle::Circle { radius, center, .. } => {
                if !(*radius > 0.0 && radius.is_finite()) || !center.iter().all(|c| c.is_finite()) {
                    return Err(Error::InvalidParameter(format!("circle radius must be positive, got {radius}")));
                }
            }
            Obstacle::Rect { min, max, .. } => {
                if !(min[0] < max[0] && min[1] < max[1]) {
                    return Err(Error::InvalidParameter("rectangle needs min < max on both axes".into()));
                }
            }
        }
        Ok(())
    }

    /// Signed distance to the boundary, negative inside.
    pub fn signed_distance(&self, p: &Point) -> f64 {
        match self {
            Obstacle::Circle { center, radius, .. } => (p.x - center[0]).hypot(p.y - center[1]) - radius,
            Obstacle::Rect { min, max, .. } => {
                let cx = 0.5 * (min[0] + max[0]);
                let cy = 0.5 * (min[1] + max[1]);
                let qx = (p.x - cx).abs() - 0.5 * (max[0] - min[0]);
                let qy = (p.y - cy).abs() - 0.5 * (max[1] - min[1]);
                qx.max(0.0).hypot(qy.max(0.0)) + qx.max(qy).min(0.0)
            }
        }
    }

    /// Unit outward normal of the nearest boundary point.
    pub fn outward_normal(&self, p: &Point) -> Point {
        match self {
            Obstacle::Circle { center, .. } => {
                let d = Point::new(p.x - center[0], p.y - center[1], 0.0);
                if d.norm() > 0.0 {
                    d.normalize()
                } else {
                    Point::x()
                }
            }
            Obstacle::Rect { min, max, .. } => {
                let cx = 0.5 * (min[0] + max[0]);
                let cy = 0.5 * (min[1] + max[1]);
                let qx = (p.x - cx).abs() - 0.5 * (max[0] - min[0]);
                let qy = (p.y - cy).abs() - 0.5 * (max[1] - min[1]);
                let sx = if p.x >= cx { 1.0 } else { -1.0 };
                let sy = if p.y >= cy { 1.0 } else { -1.0 };
                if qx > 0.0 || qy > 0.0 {
                    Point::new(sx * qx.max(0.0), sy * qy.max(0.0), 0.0).normalize()
                } else if qx > qy {
                    Point::new(sx, 0.0, 0.0)
                } else {
                    Point::new(0.0, sy, 0.0)
                }
            }
        }
    }

    /// Distance from `p` through the obstacle to the far boundary along `-n`.
    fn depth_along(&self, p: &Point, n: &Point) -> f64 {
        match self {
            Obstacle::Circle { center, radius, .. } => {
                let c = Point::new(center[0], center[1], 0.0);
                (p - c).dot(n) + radius
            }
            Obstacle::Rect { min, max, .. } => {
                if n.x.abs() > n.y.abs() {
                    if n.x > 0.0 { p.x - min[0] } else { max[0] - p.x }
                } else if n.y > 0.0 {
                    p.y - min[1]
                } else {
                    max[1] - p.y
                }
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObstacleSet {
    pub obstacles: Vec<Obstacle>,
}

impl ObstacleSet {
    pub fn new(obstacles: Vec<Obstacle>) -> Result<Self> {
        let s = ObstacleSet { obstacles };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.obstacles.iter().try_for_each(Obstacle::validate)
    }

    /// Smallest signed distance over all obstacles and the obstacle attaining it.
    pub fn nearest(&self, p: &Point) -> Option<(usize, f64)> {
        self.obstacles
            .iter()
            .enumerate()
            .map(|(i, o)| (i, o.signed_distance(p)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    pub fn is_free(&self, p: &Point, clearance: f64) -> bool {
        self.nearest(p).is_none_or(|(_, d)| d >= clearance)
    }

    /// Samples closer than `clearance` to some obstacle.
    pub fn colliding_indices(&self, traj: &Trajectory, clearance: f64) -> Vec<usize> {
        (0..traj.len()).filter(|&k| !self.is_free(&traj.point(k), clearance)).collect()
    }

    /// Smallest signed distance along the whole trajectory.
    pub fn min_clearance(&self, traj: &Trajectory) -> f64 {
        traj.points()
            .iter()
            .filter_map(|p| self.nearest(p).map(|n| n.1))
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AvoidOptions {
    pub max_iterations: usize,
    /// Waypoints are pushed this fraction beyond the clearance boundary.
    pub overshoot: f64,
    pub policy: TauSearchPolicy,
}

impl Default for AvoidOptions {
    fn default() -> Self {
        AvoidOptions { max_iterations: 10, overshoot: 0.25, policy: TauSearchPolicy::default() }
    }
}

/// Outcome of an application run: the correction plus the trajectory after
/// each stage.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Staged {
    pub correction: CorrectionResult,
    #[serde(skip)]
    pub stages: Vec<Trajectory>,
    pub waypoints: Vec<[f64; 2]>,
}

fn planar(traj: &Trajectory) -> Result<()> {
    if traj.dim() != Dim::Two {
        return Err(Error::DimensionMismatch { expected: 2, found: traj.dim().as_usize() });
    }
    Ok(())
}

/// Deformations in `[lo, end)` moving sample `end` to `target`.
pub(crate) fn correct_point(
    traj: &Trajectory,
    model: &RobotModel,
    lo: usize,
    end: usize,
    target: &Point,
    policy: &TauSearchPolicy,
) -> Result<Vec<Deformation>> {
    match model.class() {
        ModelClass::ClassI => Ok(vec![correct::class1_best(traj, lo, end, target, policy)?]),
        ModelClass::ClassII => correct::position_pair_window(traj, lo, end, target, policy),
        ModelClass::Spatial => Err(Error::DimensionMismatch { expected: 2, found: 3 }),
    }
}

/// Deform `traj` around `obstacles` keeping its final position.
///
/// Each iteration takes the deepest sample of the first colliding run,
/// pushes it out of the obstacle along the normal (both sides are tried),
/// corrects that sample onto the waypoint with deformations before it and
/// restores the final position with deformations after it.
pub fn avoid_obstacles(
    traj: &Trajectory,
    model: &RobotModel,
    obstacles: &ObstacleSet,
    clearance: f64,
    opts: &AvoidOptions,
) -> Result<Staged> {
    planar(traj)?;
    obstacles.validate()?;
    if !(clearance >= 0.0) {
        return Err(Error::InvalidParameter(format!("clearance must be non-negative, got {clearance}")));
    }
    let end = traj.last_index();
    let goal = traj.end();
    if !obstacles.is_free(&goal, clearance) || !obstacles.is_free(&traj.point(0), clearance) {
        return Err(Error::NoCollisionFreeWaypoint);
    }
    let mut current = traj.clone();
    let mut deformations = Vec::new();
    let mut stages = vec![traj.clone()];
    let mut waypoints = Vec::new();
    for _ in 0..opts.max_iterations {
        let colliding = obstacles.colliding_indices(&current, clearance);
        if colliding.is_empty() {
            return Ok(Staged { correction: finish(traj, deformations, end, Some(goal), None)?, stages, waypoints });
        }
        let mut run_end = colliding[0];
        while colliding.binary_search(&(run_end + 1)).is_ok() {
            run_end += 1;
        }
        let (t_obs, (obstacle, depth)) = (colliding[0]..=run_end)
            .map(|k| (k, obstacles.nearest(&current.point(k)).unwrap()))
            .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
            .unwrap();
        let p = current.point(t_obs);
        let o = &obstacles.obstacles[obstacle];
        let n = o.outward_normal(&p);
        let push = (clearance - depth) * (1.0 + opts.overshoot) + 1e-9;
        let far = (o.depth_along(&p, &n) + clearance) * (1.0 + opts.overshoot) + 1e-9;
        let mut best: Option<(f64, Vec<Deformation>, Trajectory, Point)> = None;
        let mut last_err = Error::NoCollisionFreeWaypoint;
        for w in [p + n * push, p - n * far] {
            if !obstacles.is_free(&w, clearance) {
                continue;
            }
            let attempt = (|| -> Result<(Vec<Deformation>, Trajectory)> {
                let mut defs = correct_point(&current, model, 0, t_obs, &w, &opts.policy)?;
                let moved = apply_deformations(&current, &defs)?;
                let restore = correct_point(&moved, model, t_obs + 2, end, &goal, &opts.policy)?;
                let out = apply_deformations(&moved, &restore)?;
                defs.extend(restore);
                Ok((defs, out))
            })();
            match attempt {
                Ok((defs, out)) => {
                    if obstacles.colliding_indices(&out, clearance).len() >= colliding.len()
                        || !check_admissible(model, &out).admissible
                    {
                        continue;
                    }
                    let score: f64 = defs.iter().map(|d| d.map.distance_from_identity()).sum();
                    if best.as_ref().is_none_or(|b| score < b.0) {
                        best = Some((score, defs, out, w));
                    }
                }
                Err(e) => last_err = e,
            }
        }
        let Some((_, defs, out, w)) = best else {
            return Err(last_err);
        };
        deformations.extend(defs);
        waypoints.push([w.x, w.y]);
        stages.push(out.clone());
        current = out;
    }
    if obstacles.colliding_indices(&current, clearance).is_empty() {
        return Ok(Staged { correction: finish(traj, deformations, end, Some(goal), None)?, stages, waypoints });
    }
    Err(Error::IterationCapExceeded { cap: opts.max_iterations })
}

/// Make the trajectory pass through `position` with `heading` at sample
/// `k_door`, then restore the original final position with deformations
/// after the doorway.
pub fn doorway_constraint(
    traj: &Trajectory,
    model: &RobotModel,
    k_door: usize,
    position: Point,
    heading: f64,
    policy: &TauSearchPolicy,
    opts: &PoseOptions,
) -> Result<Staged> {
    planar(traj)?;
    let end = traj.last_index();
    if k_door == 0 || k_door + 3 > end {
        return Err(Error::InvalidParameter(format!("doorway sample {k_door} must be interior")));
    }
    let goal = traj.end();
    let (v, _) = local_derivatives(traj, k_door);
    let same_position = (traj.point(k_door) - position).norm() == 0.0;
    let same_heading = wrap_angle(v.y.atan2(v.x) - heading) == 0.0;
    if same_position && same_heading {
        let correction = finish(traj, Vec::new(), end, Some(goal), None)?;
        return Ok(Staged { correction, stages: vec![traj.clone()], waypoints: Vec::new() });
    }
    let mut defs = correct::pose_window(traj, k_door, position, heading, policy, opts)?;
    let posed = apply_deformations(traj, &defs)?;
    let restore = correct_point(&posed, model, k_door + 2, end, &goal, policy)?;
    let out = apply_deformations(&posed, &restore)?;
    defs.extend(restore);
    let correction = finish(traj, defs, end, Some(goal), None)?;
    Ok(Staged { correction, stages: vec![traj.clone(), posed, out], waypoints: vec![[position.x, position.y]] })
}
