use rand::Rng;
use serde::Serialize;

use super::{integrate, recover_commands, ModelClass, ReverseAux, RobotModel};
use crate::deform::{apply, class1_map, class2_map, uwv_map, AffineMap, ClassIParams, ClassIIParams, Uwv6Params};
use crate::error::{Error, Result};
use crate::trajectory::Trajectory;

/// Outcome of deform, recover, integrate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundTrip {
    pub model: String,
    pub tau_index: usize,
    pub map: AffineMap,
    /// Largest base-position distance between the deformed trajectory and
    /// the integrated recovered commands (m).
    pub max_deviation: f64,
}

/// Random deformation of the family admissible for `model`, fixed at a
/// sample in the first half of `traj`. Parameters are uniform in
/// `[-scale, scale]`; sample points at inflections are skipped.
pub fn random_admissible_map(model: &RobotModel, traj: &Trajectory, scale: f64, rng: &mut impl Rng) -> Result<(usize, AffineMap)> {
    let n = traj.len();
    let mut last_err = Error::InvalidParameter("no admissible deformation point found".into());
    for _ in 0..32 {
        let tau = rng.random_range(n / 4..n / 2);
        let mut p = || rng.random_range(-scale..=scale);
        let map = match model.class() {
            ModelClass::ClassI => class1_map(traj, &ClassIParams { tau_index: tau, lambda: p(), mu: p() }),
            ModelClass::ClassII => class2_map(traj, &ClassIIParams { tau_index: tau, lambda: p() }),
            ModelClass::Spatial => uwv_map(
                traj,
                &Uwv6Params { tau_index: tau, lambda: p(), mu: p(), nu: p(), xi: p(), sigma: p(), chi: p() },
            ),
        };
        match map {
            Ok(m) => return Ok((tau, m)),
            Err(e) => last_err = e,
        }
    }
    Err(last_err)
}

/// Deform `traj` by `map` from `tau` on, recover the commands of the result,
/// integrate them from the recovered initial state and compare.
pub fn round_trip(model: &RobotModel, traj: &Trajectory, tau: usize, map: &AffineMap) -> Result<RoundTrip> {
    let deformed = apply(traj, map, tau)?;
    let rec = recover_commands(model, &deformed, &ReverseAux::default())?;
    let back = integrate(model, &rec.initial_state(), &rec.commands)?.trajectory(model.dim())?;
    Ok(RoundTrip {
        model: model.name().to_string(),
        tau_index: tau,
        map: map.clone(),
        max_deviation: back.max_deviation(&deformed),
    })
}
