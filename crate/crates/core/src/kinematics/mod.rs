//! Robot models, forward integration and the reverse (command recovery)
//! equations.

mod canonical;
mod reverse;
mod roundtrip;

pub use canonical::{correspondence_map, CanonicalVars, Correspondence, UserVars};
pub use reverse::{recover_commands, AngleProfile, Recovered, ReverseAux};
pub use roundtrip::{random_admissible_map, round_trip, RoundTrip};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::{check_regularity, Dim, Point, RegularityReport, RegularityTolerances, Trajectory};

/// Kinematic model selecting the forward/reverse equations and admissibility
/// rules. Canonical wheeled types are named after their (mobility,
/// steerability) degrees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RobotModel {
    Type30,
    Type20,
    Type21,
    Type11 { wheelbase: f64 },
    Type12 { wheelbase: f64 },
    Unicycle,
    KinematicCar { wheelbase: f64 },
    CarWithTrailers { wheelbase: f64, hitches: Vec<f64> },
    #[serde(rename = "underwater3d")]
    Underwater3d,
}

/// Which deformation family preserves admissibility.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelClass {
    /// Base coordinates in D2 suffice.
    ClassI,
    /// Heading must additionally be D2.
    ClassII,
    /// Spatial vehicle; D2 on (x, y, z).
    Spatial,
}

impl RobotModel {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
            }
        };
        match self {
            RobotModel::Type11 { wheelbase }
            | RobotModel::Type12 { wheelbase }
            | RobotModel::KinematicCar { wheelbase } => positive("wheelbase", *wheelbase),
            RobotModel::CarWithTrailers { wheelbase, hitches } => {
                positive("wheelbase", *wheelbase)?;
                if hitches.is_empty() {
                    return Err(Error::InvalidParameter("at least one trailer required".into()));
                }
                hitches.iter().try_for_each(|h| positive("hitch length", *h))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RobotModel::Type30 => "type30",
            RobotModel::Type20 => "type20",
            RobotModel::Type21 => "type21",
            RobotModel::Type11 { .. } => "type11",
            RobotModel::Type12 { .. } => "type12",
            RobotModel::Unicycle => "unicycle",
            RobotModel::KinematicCar { .. } => "kinematic_car",
            RobotModel::CarWithTrailers { .. } => "car_with_trailers",
            RobotModel::Underwater3d => "underwater3d",
        }
    }

    pub fn class(&self) -> ModelClass {
        match self {
            RobotModel::Type30 | RobotModel::Type21 | RobotModel::Type12 { .. } | RobotModel::Unicycle => {
                ModelClass::ClassI
            }
            RobotModel::Type20
            | RobotModel::Type11 { .. }
            | RobotModel::KinematicCar { .. }
            | RobotModel::CarWithTrailers { .. } => ModelClass::ClassII,
            RobotModel::Underwater3d => ModelClass::Spatial,
        }
    }

    pub fn dim(&self) -> Dim {
        match self {
            RobotModel::Underwater3d => Dim::Three,
            _ => Dim::Two,
        }
    }

    pub fn state_names(&self) -> Vec<String> {
        let fixed: &[&str] = match self {
            RobotModel::Type30 | RobotModel::Type20 | RobotModel::Unicycle => &["x", "y", "theta"],
            RobotModel::Type21 | RobotModel::Type11 { .. } | RobotModel::KinematicCar { .. } => {
                &["x", "y", "theta", "beta"]
            }
            RobotModel::Type12 { .. } => &["x", "y", "theta", "beta1", "beta2"],
            RobotModel::CarWithTrailers { .. } => &["x", "y", "theta0", "beta"],
            RobotModel::Underwater3d => &["x", "y", "z", "phi", "theta", "psi"],
        };
        let mut names: Vec<String> = fixed.iter().map(|s| s.to_string()).collect();
        if let RobotModel::CarWithTrailers { hitches, .. } = self {
            names.extend((1..=hitches.len()).map(|i| format!("theta{i}")));
        }
        names
    }

    pub fn command_names(&self) -> Vec<String> {
        let names: &[&str] = match self {
            RobotModel::Type30 => &["eta1", "eta2", "eta3"],
            RobotModel::Type20 => &["eta1", "eta2"],
            RobotModel::Type21 => &["eta1", "eta2", "zeta1"],
            RobotModel::Type11 { .. } => &["eta1", "zeta1"],
            RobotModel::Type12 { .. } => &["eta1", "zeta1", "zeta2"],
            RobotModel::Unicycle => &["v", "omega"],
            RobotModel::KinematicCar { .. } | RobotModel::CarWithTrailers { .. } => &["v", "zeta"],
            RobotModel::Underwater3d => &["v", "omega_x", "omega_y", "omega_z"],
        };
        names.iter().map(|s| s.to_string()).collect()
    }

    /// Commands that are rates of steering or attitude (checked for
    /// finiteness only); the others are velocity-like and checked for D1.
    pub fn is_rate_command(name: &str) -> bool {
        name.starts_with("zeta") || name.starts_with("omega")
    }

    /// Time derivative of the state for the given command values.
    pub fn rhs(&self, s: &[f64], u: &[f64], out: &mut [f64]) -> Result<()> {
        match self {
            RobotModel::Type30 => {
                let (c, sn) = (s[2].cos(), s[2].sin());
                out[0] = c * u[0] - sn * u[1];
                out[1] = sn * u[0] + c * u[1];
                out[2] = u[2];
            }
            RobotModel::Type20 => {
                out[0] = -u[0] * s[2].sin();
                out[1] = u[0] * s[2].cos();
                out[2] = u[1];
            }
            RobotModel::Type21 => {
                let h = s[2] + s[3];
                out[0] = -u[0] * h.sin();
                out[1] = u[0] * h.cos();
                out[2] = u[1];
                out[3] = u[2];
            }
            RobotModel::Type11 { wheelbase: l } => {
                let sb = s[3].sin();
                out[0] = -u[0] * l * s[2].sin() * sb;
                out[1] = u[0] * l * s[2].cos() * sb;
                out[2] = u[0] * s[3].cos();
                out[3] = u[1];
            }
            RobotModel::Type12 { wheelbase: l } => {
                let (th, b1, b2) = (s[2], s[3], s[4]);
                let ss = b1.sin() * b2.sin();
                let sp = (b1 + b2).sin();
                out[0] = -u[0] * (2.0 * l * th.cos() * ss + l * th.sin() * sp);
                out[1] = -u[0] * (2.0 * l * th.sin() * ss - l * th.cos() * sp);
                out[2] = u[0] * (b2 - b1).sin();
                out[3] = u[1];
                out[4] = u[2];
            }
            RobotModel::Unicycle => {
                out[0] = u[0] * s[2].cos();
                out[1] = u[0] * s[2].sin();
                out[2] = u[1];
            }
            RobotModel::KinematicCar { wheelbase: l } => {
                out[0] = u[0] * s[2].cos();
                out[1] = u[0] * s[2].sin();
                out[2] = u[0] * s[3].tan() / l;
                out[3] = u[1];
            }
            RobotModel::CarWithTrailers { wheelbase, hitches } => {
                let v = u[0];
                out[0] = v * s[2].cos();
                out[1] = v * s[2].sin();
                out[2] = v * s[3].tan() / wheelbase;
                out[3] = u[1];
                trailer_rates(v, s[2], &s[4..], hitches, &mut out[4..]);
            }
            RobotModel::Underwater3d => {
                let (phi, th, psi) = (s[3], s[4], s[5]);
                let ct = th.cos();
                if ct < EULER_GUARD {
                    return Err(Error::EulerSingularity { index: 0 });
                }
                let v = u[0];
                out[0] = v * psi.cos() * ct;
                out[1] = v * psi.sin() * ct;
                out[2] = -v * th.sin();
                let (sp, cp) = phi.sin_cos();
                let (wx, wy, wz) = (u[1], u[2], u[3]);
                out[3] = wx + (sp * wy + cp * wz) * th.tan();
                out[4] = cp * wy - sp * wz;
                out[5] = (sp * wy + cp * wz) / ct;
            }
        }
        Ok(())
    }
}

/// Smallest cos(pitch) accepted before the Euler parameterization is
/// considered singular.
pub const EULER_GUARD: f64 = 1e-6;

/// Trailer heading rates given car speed `v`, car heading and the trailer
/// headings.
pub(crate) fn trailer_rates(v: f64, theta0: f64, trailers: &[f64], hitches: &[f64], out: &mut [f64]) {
    let mut prev = theta0;
    let mut prod = 1.0;
    for i in 0..trailers.len() {
        let diff = prev - trailers[i];
        out[i] = v / hitches[i] * prod * diff.sin();
        prod *= diff.cos();
        prev = trailers[i];
    }
}

/// Full model state at one instant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FullState {
    pub values: Vec<f64>,
}

impl FullState {
    pub fn new(values: Vec<f64>) -> Self {
        FullState { values }
    }
}

/// Sampled command channels on a uniform grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommandProfile {
    pub dt: f64,
    pub names: Vec<String>,
    pub channels: Vec<Vec<f64>>,
}

impl CommandProfile {
    pub fn new(dt: f64, names: Vec<String>, channels: Vec<Vec<f64>>) -> Result<Self> {
        if channels.len() != names.len() || channels.is_empty() {
            return Err(Error::InvalidParameter("command names and channels differ".into()));
        }
        let n = channels[0].len();
        if n < 2 || channels.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidParameter("command channels must share a length >= 2".into()));
        }
        Ok(CommandProfile { dt, names, channels })
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels[0].is_empty()
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| n == name).map(|i| self.channels[i].as_slice())
    }

    fn at(&self, k: usize, out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.channels) {
            *o = c[k];
        }
    }

    fn midpoint(&self, k: usize, out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.channels) {
            *o = 0.5 * (c[k] + c[k + 1]);
        }
    }

    /// Largest absolute value of a channel.
    pub fn max_abs(&self, name: &str) -> Option<f64> {
        self.channel(name).map(|c| c.iter().fold(0.0_f64, |m, x| m.max(x.abs())))
    }
}

/// Full-state samples on a uniform grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateSeries {
    pub dt: f64,
    pub names: Vec<String>,
    pub states: Vec<Vec<f64>>,
}

impl StateSeries {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.names.iter().position(|n| n == name)?;
        Some(self.states.iter().map(|s| s[i]).collect())
    }

    pub fn last(&self) -> FullState {
        FullState::new(self.states[self.states.len() - 1].clone())
    }

    /// Base-space projection.
    pub fn trajectory(&self, dim: Dim) -> Result<Trajectory> {
        let points = self
            .states
            .iter()
            .map(|s| match dim {
                Dim::Two => Point::new(s[0], s[1], 0.0),
                Dim::Three => Point::new(s[0], s[1], s[2]),
            })
            .collect();
        Trajectory::new(dim, self.dt, points)
    }
}

/// Classical fourth-order Runge-Kutta on the command grid; commands at the
/// half step are the mean of the two neighbouring samples.
pub fn integrate(model: &RobotModel, initial: &FullState, cmds: &CommandProfile) -> Result<StateSeries> {
    model.validate()?;
    let names = model.state_names();
    if initial.values.len() != names.len() {
        return Err(Error::DimensionMismatch { expected: names.len(), found: initial.values.len() });
    }
    if cmds.names.len() != model.command_names().len() {
        return Err(Error::DimensionMismatch {
            expected: model.command_names().len(),
            found: cmds.names.len(),
        });
    }
    let n = names.len();
    let dt = cmds.dt;
    let mut states = Vec::with_capacity(cmds.len());
    let mut s = initial.values.clone();
    states.push(s.clone());
    let m = cmds.names.len();
    let (mut u0, mut um, mut u1) = (vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    let tag = |e: Error, k: usize| match e {
        Error::EulerSingularity { .. } => Error::EulerSingularity { index: k },
        other => other,
    };
    for k in 0..cmds.len() - 1 {
        cmds.at(k, &mut u0);
        cmds.midpoint(k, &mut um);
        cmds.at(k + 1, &mut u1);
        model.rhs(&s, &u0, &mut k1).map_err(|e| tag(e, k))?;
        for i in 0..n {
            tmp[i] = s[i] + 0.5 * dt * k1[i];
        }
        model.rhs(&tmp, &um, &mut k2).map_err(|e| tag(e, k))?;
        for i in 0..n {
            tmp[i] = s[i] + 0.5 * dt * k2[i];
        }
        model.rhs(&tmp, &um, &mut k3).map_err(|e| tag(e, k))?;
        for i in 0..n {
            tmp[i] = s[i] + dt * k3[i];
        }
        model.rhs(&tmp, &u1, &mut k4).map_err(|e| tag(e, k + 1))?;
        for i in 0..n {
            s[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if s.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidTrajectory(format!("integration diverged at step {k}")));
        }
        states.push(s.clone());
    }
    Ok(StateSeries { dt, names, states })
}

/// Result of the admissibility check of a base-space trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Admissibility {
    pub admissible: bool,
    pub class: ModelClass,
    pub regularity: RegularityReport,
}

pub fn check_admissible(model: &RobotModel, traj: &Trajectory) -> Admissibility {
    check_admissible_with(model, traj, RegularityTolerances::default())
}

pub fn check_admissible_with(model: &RobotModel, traj: &Trajectory, tol: RegularityTolerances) -> Admissibility {
    let regularity = check_regularity(traj, tol);
    let class = model.class();
    let dim_ok = traj.dim() == model.dim();
    let admissible = dim_ok
        && match class {
            ModelClass::ClassII => regularity.is_d2 && regularity.heading_d2,
            ModelClass::ClassI | ModelClass::Spatial => regularity.is_d2,
        };
    Admissibility { admissible, class, regularity }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(dt: f64, n: usize, names: &[&str], values: &[f64]) -> CommandProfile {
        CommandProfile::new(
            dt,
            names.iter().map(|s| s.to_string()).collect(),
            values.iter().map(|&v| vec![v; n]).collect(),
        )
        .unwrap()
    }

    #[test]
    fn unicycle_straight_and_circle() {
        let m = RobotModel::Unicycle;
        let cmds = constant(1e-3, 1001, &["v", "omega"], &[1.0, 0.0]);
        let s = integrate(&m, &FullState::new(vec![0.0; 3]), &cmds).unwrap().last();
        assert!((s.values[0] - 1.0).abs() < 1e-10 && s.values[1].abs() < 1e-10 && s.values[2].abs() < 1e-10);

        let t: f64 = 2.5;
        let cmds = constant(1e-3, 2501, &["v", "omega"], &[1.0, 1.0]);
        let s = integrate(&m, &FullState::new(vec![0.0; 3]), &cmds).unwrap().last();
        assert!((s.values[0] - t.sin()).abs() < 1e-8);
        assert!((s.values[1] - (1.0 - t.cos())).abs() < 1e-8);
    }

    #[test]
    fn car_zero_steering_is_straight() {
        let m = RobotModel::KinematicCar { wheelbase: 1.0 };
        let cmds = constant(1e-2, 201, &["v", "zeta"], &[1.0, 0.0]);
        let series = integrate(&m, &FullState::new(vec![0.0, 0.0, 0.3, 0.0]), &cmds).unwrap();
        for s in &series.states {
            assert!((s[2] - 0.3).abs() < 1e-14);
            assert!((s[1] - s[0] * 0.3_f64.tan()).abs() < 1e-12);
        }
    }

    #[test]
    fn underwater_singularity_is_reported() {
        let m = RobotModel::Underwater3d;
        let cmds = constant(1e-2, 300, &["v", "omega_x", "omega_y", "omega_z"], &[1.0, 0.0, 1.0, 0.0]);
        let err = integrate(&m, &FullState::new(vec![0.0; 6]), &cmds).unwrap_err();
        assert!(matches!(err, Error::EulerSingularity { .. }), "{err:?}");
    }

    #[test]
    fn model_validation() {
        assert!(RobotModel::KinematicCar { wheelbase: 0.0 }.validate().is_err());
        assert!(RobotModel::CarWithTrailers { wheelbase: 1.0, hitches: vec![] }.validate().is_err());
        assert_eq!(
            RobotModel::CarWithTrailers { wheelbase: 1.0, hitches: vec![1.0, 1.0] }.state_names().len(),
            6
        );
    }

    #[test]
    fn model_json_tag() {
        let m: RobotModel = serde_json::from_str(r#"{"kind":"kinematic_car","wheelbase":2.5}"#).unwrap();
        assert_eq!(m, RobotModel::KinematicCar { wheelbase: 2.5 });
        let m: RobotModel = serde_json::from_str(r#"{"kind":"underwater3d"}"#).unwrap();
        assert_eq!(m, RobotModel::Underwater3d);
    }
}
