use nalgebra::{SMatrix, Vector3};

use super::{finish, CorrectionResult, Deformation, TauSearchPolicy};
use crate::deform::{uwv_map_at, Uwv6Params};
use crate::error::{Error, Result};
use crate::trajectory::{frame_at, Dim, Point, Trajectory};

/// Linear system `U p = b` for the six parameters at `tau` that send sample
/// `end` to `target`, in the local basis at `tau`.
pub fn uwv_system(traj: &Trajectory, tau: usize, end: usize, target: &Point) -> Result<(SMatrix<f64, 3, 6>, Vector3<f64>)> {
    if traj.dim() != Dim::Three {
        return Err(Error::DimensionMismatch { expected: 3, found: traj.dim().as_usize() });
    }
    if tau >= end || end > traj.last_index() {
        return Err(Error::InvalidParameter(format!("tau index {tau} must precede sample {end}")));
    }
    let frame = frame_at(traj, tau)?;
    let q = frame.basis();
    let c = traj.point(tau);
    let d = q.transpose() * (traj.point(end) - c);
    let d2 = q.transpose() * (target - c);
    let (y1, z1) = (d.y, d.z);
    #[rustfmt::skip]
    let u = SMatrix::<f64, 3, 6>::from_row_slice(&[
        y1, z1, 0.0, 0.0, 0.0, 0.0,
        0.0, 0.0, y1, z1, 0.0, 0.0,
        0.0, 0.0, 0.0, 0.0, y1, z1,
    ]);
    Ok((u, d2 - d))
}

/// Minimum-norm parameters solving [`uwv_system`].
pub fn uwv_parameters(traj: &Trajectory, tau: usize, end: usize, target: &Point) -> Result<Uwv6Params> {
    let (u, b) = uwv_system(traj, tau, end, target)?;
    let (y1, z1) = (u[(0, 0)], u[(0, 1)]);
    let r2 = y1 * y1 + z1 * z1;
    let scale = (traj.point(end) - traj.point(tau)).norm_squared();
    if r2 <= 1e-18 * scale || r2 == 0.0 {
        return Err(Error::DegenerateU { index: tau });
    }
    Ok(Uwv6Params {
        tau_index: tau,
        lambda: b.x * y1 / r2,
        mu: b.x * z1 / r2,
        nu: b.y * y1 / r2,
        xi: b.y * z1 / r2,
        sigma: b.z * y1 / r2,
        chi: b.z * z1 / r2,
    })
}

fn uwv_step(traj: &Trajectory, tau: usize, end: usize, target: &Point) -> Result<(Uwv6Params, Deformation)> {
    let p = uwv_parameters(traj, tau, end, target)?;
    let map = uwv_map_at(&frame_at(traj, tau)?, traj.point(tau), &p)?;
    Ok((p, Deformation { tau_index: tau, map }))
}

/// Move the final position of a spatial trajectory onto `target` with one
/// six-parameter deformation at `tau`.
pub fn uwv_correct_position(traj: &Trajectory, tau: usize, target: Point) -> Result<CorrectionResult> {
    let end = traj.last_index();
    let (_, def) = uwv_step(traj, tau, end, &target)?;
    finish(traj, vec![def], end, Some(target), None)
}

/// [`uwv_correct_position`] at the deformation point with the smallest
/// parameter norm.
pub fn uwv_correct_position_auto(traj: &Trajectory, target: Point, policy: &TauSearchPolicy) -> Result<CorrectionResult> {
    let end = traj.last_index();
    if (traj.end() - target).norm() == 0.0 {
        return finish(traj, Vec::new(), end, Some(target), None);
    }
    let (first, last) = policy
        .range(traj, 0, end)
        .ok_or_else(|| Error::InvalidParameter("no room for a deformation point".into()))?;
    let mut best: Option<(f64, Deformation)> = None;
    let mut last_err = None;
    for tau in (first..=last).step_by(policy.stride.max(1)) {
        match uwv_step(traj, tau, end, &target) {
            Ok((p, def)) => {
                if best.as_ref().is_none_or(|b| p.norm() < b.0) {
                    best = Some((p.norm(), def));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let (_, def) = best.ok_or_else(|| last_err.unwrap_or(Error::NoAccessibleTangent))?;
    finish(traj, vec![def], end, Some(target), None)
}
