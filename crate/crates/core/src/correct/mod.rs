//! Trajectory corrections: closed-form choices of admissible deformations
//! that move the final position (and heading) onto a target.

mod class1;
mod class2;
mod pose;
mod tau;
mod uwv;

pub use class1::{class1_correct_position, class1_correct_position_auto};
pub use class2::{class2_correct_orientation, class2_correct_position, class2_correct_position_2step};
pub use pose::{class2_correct_pose_3step, Pose3Step, PoseOptions};
pub use tau::TauSearchPolicy;
pub use uwv::{uwv_correct_position, uwv_correct_position_auto, uwv_parameters, uwv_system};

pub(crate) use class1::class1_best;
pub(crate) use class2::{position_pair_window, position_pairs_window};
pub(crate) use pose::pose_window;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::deform::{apply, class2_generator, AffineMap};
use crate::error::{Error, Result};
use crate::trajectory::{cross2, local_derivatives, wrap_angle, Dim, Point, Trajectory};

/// One deformation applied from `tau_index` on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Deformation {
    pub tau_index: usize,
    pub map: AffineMap,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrectionResult {
    /// In order of application.
    pub deformations: Vec<Deformation>,
    #[serde(skip)]
    pub corrected: Trajectory,
    pub residual_position: f64,
    pub residual_orientation: Option<f64>,
}

impl CorrectionResult {
    pub fn total_distance_from_identity(&self) -> f64 {
        self.deformations.iter().map(|d| d.map.distance_from_identity()).sum()
    }
}

/// Apply deformations one after the other.
pub fn apply_deformations(traj: &Trajectory, deformations: &[Deformation]) -> Result<Trajectory> {
    let mut out = traj.clone();
    for d in deformations {
        out = apply(&out, &d.map, d.tau_index)?;
    }
    Ok(out)
}

/// Heading of the discrete velocity at sample `k`.
pub fn heading_at(traj: &Trajectory, k: usize) -> f64 {
    let (v, _) = local_derivatives(traj, k);
    v.y.atan2(v.x)
}

pub(crate) fn finish(
    traj: &Trajectory,
    deformations: Vec<Deformation>,
    end: usize,
    target: Option<Point>,
    theta_d: Option<f64>,
) -> Result<CorrectionResult> {
    let corrected = apply_deformations(traj, &deformations)?;
    let residual_position = target.map_or(0.0, |t| (corrected.point(end) - t).norm());
    let residual_orientation = theta_d.map(|th| wrap_angle(heading_at(&corrected, end) - th).abs());
    Ok(CorrectionResult { deformations, corrected, residual_position, residual_orientation })
}

/// Position, velocity and acceleration at one sample, with the first sample
/// index its stencils read. Deformations act on it algebraically, which is
/// exact because the stencils are linear with zero-sum weights.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Site {
    pub index: usize,
    pub lo: usize,
    pub c: Point,
    pub v: Point,
    pub a: Point,
    pub valid: bool,
}

impl Site {
    pub fn at(traj: &Trajectory, k: usize) -> Site {
        let (v, a) = local_derivatives(traj, k);
        let lo = if k == 0 {
            0
        } else if k == traj.last_index() {
            k.saturating_sub(3)
        } else {
            k - 1
        };
        Site { index: k, lo, c: traj.point(k), v, a, valid: true }
    }

    fn hi(&self) -> usize {
        if self.lo == self.index { self.index + 3 } else { self.index + 1 }.max(self.index)
    }

    pub fn deform(&mut self, tau: usize, map: &AffineMap) {
        if self.lo >= tau {
            self.c = map.apply_point(&self.c);
            self.v = map.apply_vector(&self.v);
            self.a = map.apply_vector(&self.a);
        } else if self.hi() >= tau && !map.is_identity() {
            self.valid = false;
        }
    }

    fn check(&self) -> Result<()> {
        if self.valid {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("deformation too close to sample {}", self.index)))
        }
    }

    pub fn heading(&self) -> f64 {
        self.v.y.atan2(self.v.x)
    }
}

/// Class-II deformation at `tau` that moves the end site by `alpha * v(tau)`.
pub(crate) fn class2_step(tau: &Site, end: &Site, alpha: f64, a_noise: f64) -> Result<AffineMap> {
    tau.check()?;
    end.check()?;
    if alpha == 0.0 {
        return Ok(AffineMap::identity(Dim::Two, tau.c));
    }
    let b = class2_generator(&tau.v, &tau.a, a_noise, tau.index)?;
    let d = end.c - tau.c;
    let num = cross2(&tau.v, &d);
    if num.abs() <= 1e-12 * tau.v.norm() * d.norm() || num == 0.0 {
        return Err(Error::TangentThroughEndpoint { index: tau.index });
    }
    let delta = num / cross2(&tau.v, &tau.a);
    class2_lambda(tau, alpha / delta, &b)
}

pub(crate) fn class2_lambda(tau: &Site, lambda: f64, b: &Matrix3<f64>) -> Result<AffineMap> {
    AffineMap::deformation(Dim::Two, tau.c, Matrix3::identity() + b * lambda)
}

/// Evenly thin a candidate list down to at most `n` entries.
pub(crate) fn thin(candidates: &[usize], n: usize) -> Vec<usize> {
    if candidates.len() <= n || n < 2 {
        return candidates.to_vec();
    }
    let m = candidates.len() - 1;
    let mut out: Vec<usize> = (0..n).map(|i| candidates[i * m / (n - 1)]).collect();
    out.dedup();
    out
}
