use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::RobotModel;
use crate::error::{Error, Result};

/// Variables of the user-facing unicycle / kinematic-car models.
///
/// For the unicycle `beta` and `zeta` are unused; for the car `omega` is the
/// derived turning rate `v tan(beta) / L`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct UserVars {
    pub theta: f64,
    pub beta: f64,
    pub v: f64,
    pub omega: f64,
    pub zeta: f64,
}

/// Variables of the canonical wheeled types (2,1) and (1,1).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CanonicalVars {
    pub theta: f64,
    pub beta: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub zeta: f64,
}

/// Variable wiring between a user-facing model and its canonical type.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Correspondence {
    /// Unicycle as a (2,1) robot with frozen body angle.
    Unicycle,
    /// Kinematic car as a (1,1) robot.
    Car { wheelbase: f64 },
}

pub fn correspondence_map(model: &RobotModel) -> Result<Correspondence> {
    match model {
        RobotModel::Unicycle => Ok(Correspondence::Unicycle),
        RobotModel::KinematicCar { wheelbase } | RobotModel::CarWithTrailers { wheelbase, .. } => {
            Ok(Correspondence::Car { wheelbase: *wheelbase })
        }
        other => Err(Error::InvalidParameter(format!("{} has no correspondence map", other.name()))),
    }
}

impl Correspondence {
    pub fn canonical_model(&self) -> RobotModel {
        match *self {
            Correspondence::Unicycle => RobotModel::Type21,
            Correspondence::Car { wheelbase } => RobotModel::Type11 { wheelbase },
        }
    }

    pub fn to_canonical(&self, u: &UserVars) -> CanonicalVars {
        match *self {
            Correspondence::Unicycle => CanonicalVars {
                theta: 0.0,
                beta: u.theta - FRAC_PI_2,
                eta1: u.v,
                eta2: 0.0,
                zeta: u.omega,
            },
            Correspondence::Car { wheelbase } => CanonicalVars {
                theta: u.theta - FRAC_PI_2,
                beta: FRAC_PI_2 - u.beta,
                eta1: u.v / (wheelbase * u.beta.cos()),
                eta2: 0.0,
                zeta: -u.zeta,
            },
        }
    }

    pub fn from_canonical(&self, c: &CanonicalVars) -> UserVars {
        match *self {
            Correspondence::Unicycle => UserVars {
                theta: c.theta + c.beta + FRAC_PI_2,
                beta: 0.0,
                v: c.eta1,
                omega: c.eta2 + c.zeta,
                zeta: 0.0,
            },
            Correspondence::Car { wheelbase } => {
                let beta = FRAC_PI_2 - c.beta;
                let v = c.eta1 * wheelbase * c.beta.sin();
                UserVars {
                    theta: c.theta + FRAC_PI_2,
                    beta,
                    v,
                    omega: c.eta1 * c.beta.cos(),
                    zeta: -c.zeta,
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unicycle_heading_up_is_zero_beta() {
        let c = Correspondence::Unicycle.to_canonical(&UserVars { theta: FRAC_PI_2, v: 1.0, ..Default::default() });
        assert_eq!(c.beta, 0.0);
        assert_eq!(c.theta, 0.0);
    }

    #[test]
    fn straight_car_is_right_angle_beta() {
        let c = Correspondence::Car { wheelbase: 2.0 }.to_canonical(&UserVars { v: 1.0, ..Default::default() });
        assert!((c.beta - FRAC_PI_2).abs() < 1e-15);
        assert!((c.eta1 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn car_turning_rate_matches() {
        let m = Correspondence::Car { wheelbase: 1.5 };
        let u = UserVars { theta: 0.3, beta: 0.2, v: 2.0, omega: 2.0 * 0.2_f64.tan() / 1.5, zeta: 0.1 };
        let back = m.from_canonical(&m.to_canonical(&u));
        assert!((back.omega - u.omega).abs() < 1e-12);
    }
}
