use super::{finish, CorrectionResult, Deformation, TauSearchPolicy};
use crate::deform::{class1_matrix, AffineMap};
use crate::error::{Error, Result};
use crate::trajectory::{frame_at, Dim, Point, Trajectory};

/// Class-I deformation at `tau` sending sample `end` to `target`.
pub(crate) fn class1_step(traj: &Trajectory, tau: usize, end: usize, target: &Point) -> Result<AffineMap> {
    if traj.dim() != Dim::Two {
        return Err(Error::DimensionMismatch { expected: 2, found: traj.dim().as_usize() });
    }
    if tau >= end || end > traj.last_index() {
        return Err(Error::InvalidParameter(format!("tau index {tau} must precede sample {end}")));
    }
    let frame = frame_at(traj, tau)?;
    let c = traj.point(tau);
    let d = traj.point(end) - c;
    let d2 = target - c;
    let (x1, y1) = (d.dot(&frame.u_par), d.dot(&frame.w1));
    let (x2, y2) = (d2.dot(&frame.u_par), d2.dot(&frame.w1));
    if y1.abs() <= 1e-9 * d.norm() || y1 == 0.0 {
        return Err(Error::TangentThroughEndpoint { index: tau });
    }
    if y2.abs() <= 1e-12 * d2.norm() {
        return Err(Error::SingularMatrix(format!("target lies on the tangent line at sample {tau}")));
    }
    let lambda = (x2 - x1) / y1;
    let mu = (y2 - y1) / y1;
    AffineMap::deformation(Dim::Two, c, class1_matrix(&frame, lambda, mu))
}

/// Move the final position onto `target` with one class-I deformation at `tau`.
pub fn class1_correct_position(traj: &Trajectory, tau: usize, target: Point) -> Result<CorrectionResult> {
    let end = traj.last_index();
    let map = class1_step(traj, tau, end, &target)?;
    finish(traj, vec![Deformation { tau_index: tau, map }], end, Some(target), None)
}

/// Orientation-preserving class-I deformation in `[lo, end)` closest to the
/// identity.
pub(crate) fn class1_best(traj: &Trajectory, lo: usize, end: usize, target: &Point, policy: &TauSearchPolicy) -> Result<Deformation> {
    let (first, last) = policy
        .range(traj, lo, end)
        .ok_or_else(|| Error::InvalidParameter("no room for a deformation point".into()))?;
    let mut best: Option<(f64, Deformation)> = None;
    let mut last_err = None;
    for tau in (first..=last).step_by(policy.stride.max(1)) {
        match class1_step(traj, tau, end, target) {
            Ok(map) if map.matrix().determinant() > 0.0 => {
                let sc = map.distance_from_identity();
                if best.as_ref().is_none_or(|b| sc < b.0) {
                    best = Some((sc, Deformation { tau_index: tau, map }));
                }
            }
            Ok(_) => {}
            Err(e) => last_err = Some(e),
        }
    }
    best.map(|b| b.1).ok_or_else(|| last_err.unwrap_or(Error::NoAccessibleTangent))
}

/// [`class1_correct_position`] at the deformation point closest to the identity.
pub fn class1_correct_position_auto(traj: &Trajectory, target: Point, policy: &TauSearchPolicy) -> Result<CorrectionResult> {
    let end = traj.last_index();
    if (traj.end() - target).norm() == 0.0 {
        return finish(traj, Vec::new(), end, Some(target), None);
    }
    let def = class1_best(traj, 0, end, &target, policy)?;
    finish(traj, vec![def], end, Some(target), None)
}
