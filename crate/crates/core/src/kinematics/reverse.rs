use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::canonical::{correspondence_map, CanonicalVars, UserVars};
use super::{check_admissible, trailer_rates, CommandProfile, RobotModel, StateSeries, EULER_GUARD};
use crate::error::{Error, Result};
use crate::trajectory::{acceleration, cross2, diff1, heading_from_velocity, unwrap_angles, velocity, Dim, Point, Trajectory};

/// Free angle profile the reverse equations leave to the caller.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AngleProfile {
    Zero,
    Constant { value: f64 },
    /// One value per trajectory sample.
    Series { values: Vec<f64> },
    /// Linear ramp between the path headings at both ends, plus `offset`.
    HeadingRamp { offset: f64 },
    /// Least-squares line through the path heading, plus `offset`. Keeps the
    /// body angle close to the heading on curves that turn back and forth.
    HeadingFit { offset: f64 },
}

impl AngleProfile {
    fn evaluate(&self, n: usize, heading: Option<&[f64]>) -> Result<Vec<f64>> {
        match self {
            AngleProfile::Zero => Ok(vec![0.0; n]),
            AngleProfile::Constant { value } => Ok(vec![*value; n]),
            AngleProfile::Series { values } => {
                if values.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, found: values.len() });
                }
                Ok(values.clone())
            }
            AngleProfile::HeadingRamp { offset } => {
                let h = heading.ok_or_else(|| {
                    Error::InvalidParameter("heading ramp needs a planar trajectory".into())
                })?;
                let (h0, h1) = (h[0], h[n - 1]);
                Ok((0..n)
                    .map(|k| offset + h0 + (h1 - h0) * k as f64 / (n - 1) as f64)
                    .collect())
            }
            AngleProfile::HeadingFit { offset } => {
                let h = heading.ok_or_else(|| {
                    Error::InvalidParameter("heading fit needs a planar trajectory".into())
                })?;
                let xm = (n - 1) as f64 / 2.0;
                let hm = h.iter().sum::<f64>() / n as f64;
                let (mut sxy, mut sxx) = (0.0, 0.0);
                for (k, hk) in h.iter().enumerate() {
                    let dx = k as f64 - xm;
                    sxy += dx * (hk - hm);
                    sxx += dx * dx;
                }
                let slope = sxy / sxx;
                Ok((0..n).map(|k| offset + hm + slope * (k as f64 - xm)).collect())
            }
        }
    }
}

/// Auxiliary inputs of the reverse equations.
///
/// `theta` overrides the body-angle profile of class-I types (defaults: zero,
/// or a path-aligned line for the (1,2) type); `phi` is the roll profile of
/// the underwater vehicle; `trailer_initial` the initial trailer headings
/// (default: aligned with the car).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReverseAux {
    #[serde(default)]
    pub theta: Option<AngleProfile>,
    #[serde(default)]
    pub phi: Option<AngleProfile>,
    #[serde(default)]
    pub trailer_initial: Option<Vec<f64>>,
}

impl ReverseAux {
    pub fn with_phi(values: Vec<f64>) -> Self {
        ReverseAux { phi: Some(AngleProfile::Series { values }), ..Default::default() }
    }

    fn theta_profile(&self, model: &RobotModel) -> AngleProfile {
        self.theta.clone().unwrap_or(match model {
            RobotModel::Type12 { .. } => AngleProfile::HeadingFit { offset: PI },
            _ => AngleProfile::Zero,
        })
    }
}

/// Commands and full states reconstructed from a base-space trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recovered {
    pub commands: CommandProfile,
    pub states: StateSeries,
}

impl Recovered {
    pub fn initial_state(&self) -> super::FullState {
        super::FullState::new(self.states.states[0].clone())
    }
}

fn assemble(
    model: &RobotModel,
    traj: &Trajectory,
    extra_states: Vec<Vec<f64>>,
    commands: Vec<Vec<f64>>,
) -> Result<Recovered> {
    let dt = traj.dt();
    let base = if model.dim() == Dim::Three { 3 } else { 2 };
    let states = traj
        .points()
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let mut s: Vec<f64> = p.iter().take(base).copied().collect();
            s.extend(extra_states.iter().map(|col| col[k]));
            s
        })
        .collect();
    Ok(Recovered {
        commands: CommandProfile::new(dt, model.command_names(), commands)?,
        states: StateSeries { dt, names: model.state_names(), states },
    })
}

/// Canonical (1,1) reverse equations; returns (theta, beta, eta1, zeta).
fn type11_reverse(traj: &Trajectory, vel: &[Point], l: f64) -> Result<[Vec<f64>; 4]> {
    let h = heading_from_velocity(vel)?;
    // turn rate from v and a: a central difference of the heading would mix
    // in the one-sided end estimates at first order
    let omega: Vec<f64> = vel.iter().zip(acceleration(traj)).map(|(v, a)| cross2(v, &a) / v.norm_squared()).collect();
    let n = vel.len();
    let mut theta = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n);
    let mut eta1 = Vec::with_capacity(n);
    for k in 0..n {
        let speed = vel[k].norm();
        let b = (speed / l).atan2(omega[k]);
        if b.sin().abs() < 1e-8 {
            return Err(Error::SingularSteering { index: k });
        }
        theta.push(h[k] - FRAC_PI_2);
        beta.push(b);
        eta1.push(speed / (l * b.sin()));
    }
    let zeta = diff1(&beta, traj.dt());
    Ok([theta, beta, eta1, zeta])
}

/// Recover commands and non-base states from an admissible trajectory.
///
/// The round-trip contract: integrating the recovered commands from the first
/// recovered state reproduces `traj` up to discretization error.
pub fn recover_commands(model: &RobotModel, traj: &Trajectory, aux: &ReverseAux) -> Result<Recovered> {
    model.validate()?;
    if traj.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim().as_usize(), found: traj.dim().as_usize() });
    }
    let adm = check_admissible(model, traj);
    if !adm.admissible {
        let r = &adm.regularity;
        return Err(Error::Inadmissible(format!(
            "{} check failed (velocity jumps at {:?}, heading jumps at {:?})",
            model.name(),
            r.discontinuity_indices,
            r.heading_discontinuity_indices
        )));
    }
    recover_unchecked(model, traj, aux)
}

pub(crate) fn recover_unchecked(model: &RobotModel, traj: &Trajectory, aux: &ReverseAux) -> Result<Recovered> {
    let dt = traj.dt();
    let n = traj.len();
    let vel = velocity(traj);
    let speed: Vec<f64> = vel.iter().map(|v| v.norm()).collect();

    match model {
        RobotModel::Type30 => {
            let theta = aux.theta_profile(model).evaluate(n, heading_from_velocity(&vel).ok().as_deref())?;
            let (mut e1, mut e2) = (Vec::with_capacity(n), Vec::with_capacity(n));
            for k in 0..n {
                let (s, c) = theta[k].sin_cos();
                e1.push(c * vel[k].x + s * vel[k].y);
                e2.push(-s * vel[k].x + c * vel[k].y);
            }
            let e3 = diff1(&theta, dt);
            assemble(model, traj, vec![theta], vec![e1, e2, e3])
        }
        RobotModel::Type20 => {
            let theta: Vec<f64> = heading_from_velocity(&vel)?.iter().map(|h| h - FRAC_PI_2).collect();
            let e2 = diff1(&theta, dt);
            assemble(model, traj, vec![theta], vec![speed, e2])
        }
        RobotModel::Type21 => {
            let h = heading_from_velocity(&vel)?;
            let theta = aux.theta_profile(model).evaluate(n, Some(&h))?;
            let beta: Vec<f64> = (0..n).map(|k| h[k] - FRAC_PI_2 - theta[k]).collect();
            let e2 = diff1(&theta, dt);
            let zeta = diff1(&beta, dt);
            assemble(model, traj, vec![theta, beta], vec![speed, e2, zeta])
        }
        RobotModel::Type11 { wheelbase } => {
            let [theta, beta, eta1, zeta] = type11_reverse(traj, &vel, *wheelbase)?;
            assemble(model, traj, vec![theta, beta], vec![eta1, zeta])
        }
        RobotModel::Type12 { wheelbase: l } => {
            let h = heading_from_velocity(&vel)?;
            let theta = aux.theta_profile(model).evaluate(n, Some(&h))?;
            let theta_dot = diff1(&theta, dt);
            let (mut b1, mut b2, mut eta1) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
            for k in 0..n {
                let (s, c) = theta[k].sin_cos();
                let p = vel[k].x * c + vel[k].y * s;
                let q = -vel[k].x * s + vel[k].y * c;
                let w = l * theta_dot[k];
                if p.abs() < 1e-9 * speed[k].max(1e-12) {
                    return Err(Error::SingularSteering { index: k });
                }
                b1.push((-p).atan2(q + w));
                b2.push((-p).atan2(q - w));
            }
            unwrap_angles(&mut b1);
            unwrap_angles(&mut b2);
            for k in 0..n {
                let (s, c) = theta[k].sin_cos();
                let p = vel[k].x * c + vel[k].y * s;
                let d = 2.0 * l * b1[k].sin() * b2[k].sin();
                if d.abs() < 1e-12 {
                    return Err(Error::SingularSteering { index: k });
                }
                eta1.push(-p / d);
            }
            let z1 = diff1(&b1, dt);
            let z2 = diff1(&b2, dt);
            assemble(model, traj, vec![theta, b1, b2], vec![eta1, z1, z2])
        }
        RobotModel::Unicycle => {
            let corr = correspondence_map(model)?;
            let canon = recover_unchecked(&corr.canonical_model(), traj, &ReverseAux::default())?;
            let (mut theta, mut v, mut omega) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
            for k in 0..n {
                let c = CanonicalVars {
                    theta: canon.states.states[k][2],
                    beta: canon.states.states[k][3],
                    eta1: canon.commands.channels[0][k],
                    eta2: canon.commands.channels[1][k],
                    zeta: canon.commands.channels[2][k],
                };
                let u = corr.from_canonical(&c);
                theta.push(u.theta);
                v.push(u.v);
                omega.push(u.omega);
            }
            assemble(model, traj, vec![theta], vec![v, omega])
        }
        RobotModel::KinematicCar { .. } | RobotModel::CarWithTrailers { .. } => {
            let corr = correspondence_map(model)?;
            let l = match corr {
                super::Correspondence::Car { wheelbase } => wheelbase,
                super::Correspondence::Unicycle => unreachable!(),
            };
            let [th, be, e1, ze] = type11_reverse(traj, &vel, l)?;
            let users: Vec<UserVars> = (0..n)
                .map(|k| {
                    corr.from_canonical(&CanonicalVars { theta: th[k], beta: be[k], eta1: e1[k], eta2: 0.0, zeta: ze[k] })
                })
                .collect();
            let theta: Vec<f64> = users.iter().map(|u| u.theta).collect();
            let beta: Vec<f64> = users.iter().map(|u| u.beta).collect();
            let v: Vec<f64> = users.iter().map(|u| u.v).collect();
            let zeta: Vec<f64> = users.iter().map(|u| u.zeta).collect();
            let mut extra = vec![theta.clone(), beta];
            if let RobotModel::CarWithTrailers { hitches, .. } = model {
                let initial = match &aux.trailer_initial {
                    Some(init) if init.len() == hitches.len() => init.clone(),
                    Some(init) => {
                        return Err(Error::DimensionMismatch { expected: hitches.len(), found: init.len() })
                    }
                    None => vec![theta[0]; hitches.len()],
                };
                let trailers = integrate_trailers(&v, &theta, hitches, &initial, dt);
                for i in 0..hitches.len() {
                    extra.push(trailers.iter().map(|s| s[i]).collect());
                }
            }
            assemble(model, traj, extra, vec![v, zeta])
        }
        RobotModel::Underwater3d => {
            let mut psi = Vec::with_capacity(n);
            let mut pitch = Vec::with_capacity(n);
            for (k, vk) in vel.iter().enumerate() {
                if vk.x.hypot(vk.y) < 1e-9 * speed[k].max(1e-12) {
                    return Err(Error::EulerSingularity { index: k });
                }
                psi.push(vk.y.atan2(vk.x));
                let th = -(vk.z / speed[k]).clamp(-1.0, 1.0).asin();
                if th.cos() < EULER_GUARD {
                    return Err(Error::EulerSingularity { index: k });
                }
                pitch.push(th);
            }
            unwrap_angles(&mut psi);
            let phi = aux.phi.clone().unwrap_or(AngleProfile::Zero).evaluate(n, None)?;
            let (dphi, dth, dpsi) = (diff1(&phi, dt), diff1(&pitch, dt), diff1(&psi, dt));
            let (mut wx, mut wy, mut wz) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
            for k in 0..n {
                let (sp, cp) = phi[k].sin_cos();
                let (st, ct) = pitch[k].sin_cos();
                wx.push(dphi[k] - st * dpsi[k]);
                wy.push(cp * dth[k] + sp * ct * dpsi[k]);
                wz.push(-sp * dth[k] + cp * ct * dpsi[k]);
            }
            assemble(model, traj, vec![phi, pitch, psi], vec![speed, wx, wy, wz])
        }
    }
}

/// Trailer headings driven by the sampled car speed and heading, integrated
/// with RK4 (inputs linearly interpolated at half steps).
pub(crate) fn integrate_trailers(v: &[f64], theta0: &[f64], hitches: &[f64], initial: &[f64], dt: f64) -> Vec<Vec<f64>> {
    let p = hitches.len();
    let mut out = Vec::with_capacity(v.len());
    let mut s = initial.to_vec();
    out.push(s.clone());
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; p], vec![0.0; p], vec![0.0; p], vec![0.0; p]);
    let mut tmp = vec![0.0; p];
    for k in 0..v.len() - 1 {
        let (vm, tm) = (0.5 * (v[k] + v[k + 1]), 0.5 * (theta0[k] + theta0[k + 1]));
        trailer_rates(v[k], theta0[k], &s, hitches, &mut k1);
        for i in 0..p {
            tmp[i] = s[i] + 0.5 * dt * k1[i];
        }
        trailer_rates(vm, tm, &tmp, hitches, &mut k2);
        for i in 0..p {
            tmp[i] = s[i] + 0.5 * dt * k2[i];
        }
        trailer_rates(vm, tm, &tmp, hitches, &mut k3);
        for i in 0..p {
            tmp[i] = s[i] + dt * k3[i];
        }
        trailer_rates(v[k + 1], theta0[k + 1], &tmp, hitches, &mut k4);
        for i in 0..p {
            s[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out.push(s.clone());
    }
    out
}
