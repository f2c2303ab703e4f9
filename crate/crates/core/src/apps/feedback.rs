use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correct::{apply_deformations, position_pairs_window, TauSearchPolicy};
use crate::error::{Error, Result};
use crate::kinematics::RobotModel;
use crate::trajectory::{cross2, diff1, velocity, acceleration, Dim, Point, Trajectory};

/// Open-loop plan for a kinematic car driven by acceleration and steering
/// rate. The state is `[x, y, theta, beta, v]`; commands are given on the
/// sample grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackPlan {
    pub dt: f64,
    pub initial: [f64; 5],
    pub accel: Vec<f64>,
    pub steer_rate: Vec<f64>,
}

impl FeedbackPlan {
    /// An S-shaped plan of about 50 m over 8 s.
    pub fn reference(dt: f64) -> Result<Self> {
        let n = (8.0 / dt).round() as usize;
        if n < 16 {
            return Err(Error::InvalidParameter(format!("dt {dt} too coarse for the reference plan")));
        }
        let h = 8.0 / n as f64;
        let w = std::f64::consts::PI / 4.0;
        Ok(FeedbackPlan {
            dt: h,
            initial: [0.0, 0.0, 0.0, 0.0, 4.0],
            accel: (0..=n).map(|k| 2.0 * (w * k as f64 * h).sin()).collect(),
            steer_rate: (0..=n).map(|k| 0.5 * (w * k as f64 * h).cos()).collect(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::InvalidParameter("plan dt must be positive".into()));
        }
        if self.accel.len() != self.steer_rate.len() || self.accel.len() < 9 {
            return Err(Error::InvalidParameter("plan channels must have equal length of at least 9".into()));
        }
        if self.initial[4] <= 0.0 {
            return Err(Error::InvalidParameter("initial speed must be positive".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.accel.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accel.is_empty()
    }

    pub fn duration(&self) -> f64 {
        (self.len() - 1) as f64 * self.dt
    }

    /// Noise-free states on the grid.
    pub fn simulate(&self, wheelbase: f64) -> Vec<[f64; 5]> {
        let mut s = self.initial;
        let mut out = vec![s];
        for k in 0..self.len() - 1 {
            s = step(s, wheelbase, self.dt, [self.accel[k], self.steer_rate[k]], [self.accel[k + 1], self.steer_rate[k + 1]], [0.0; 2]);
            out.push(s);
        }
        out
    }
}

fn rhs(s: &[f64; 5], wheelbase: f64, u: [f64; 2]) -> [f64; 5] {
    let v = s[4];
    [v * s[2].cos(), v * s[2].sin(), v * s[3].tan() / wheelbase, u[1], u[0]]
}

fn step(s: [f64; 5], wheelbase: f64, dt: f64, u0: [f64; 2], u1: [f64; 2], noise: [f64; 2]) -> [f64; 5] {
    let at = |c: [f64; 2]| [c[0] + noise[0], c[1] + noise[1]];
    let um = [0.5 * (u0[0] + u1[0]), 0.5 * (u0[1] + u1[1])];
    let add = |a: &[f64; 5], b: &[f64; 5], h: f64| std::array::from_fn::<f64, 5, _>(|i| a[i] + h * b[i]);
    let k1 = rhs(&s, wheelbase, at(u0));
    let k2 = rhs(&add(&s, &k1, 0.5 * dt), wheelbase, at(um));
    let k3 = rhs(&add(&s, &k2, 0.5 * dt), wheelbase, at(um));
    let k4 = rhs(&add(&s, &k3, dt), wheelbase, at(u1));
    std::array::from_fn(|i| s[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

/// Piecewise-constant uniform command noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    /// Duration of each constant piece (s).
    pub segment: f64,
    /// Half-width of the acceleration noise (m/s^2).
    pub accel_amplitude: f64,
    /// Half-width of the steering-rate noise (rad/s).
    pub steer_amplitude: f64,
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel { segment: 0.25, accel_amplitude: 1.1, steer_amplitude: 0.07, seed: 0 }
    }
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.segment > 0.0) || !(self.accel_amplitude >= 0.0) || !(self.steer_amplitude >= 0.0) {
            return Err(Error::InvalidParameter("noise segment must be positive and amplitudes non-negative".into()));
        }
        Ok(())
    }

    /// Generator of run `run`: the seed selects the key, the run index the
    /// stream.
    pub fn rng(&self, run: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(run as u64);
        rng
    }
}

fn uniform(rng: &mut ChaCha8Rng, amplitude: f64) -> f64 {
    if amplitude > 0.0 {
        rng.random_range(-amplitude..=amplitude)
    } else {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeedbackOptions {
    /// Corrections per run.
    pub corrections: usize,
    pub runs: usize,
    /// Corrected commands are accepted when their maxima stay within this
    /// factor of the planned maxima.
    pub bound_factor: f64,
    /// Sample paths kept for plotting.
    pub keep_paths: usize,
    pub policy: TauSearchPolicy,
}

impl Default for FeedbackOptions {
    fn default() -> Self {
        FeedbackOptions { corrections: 0, runs: 100, bound_factor: 3.0, keep_paths: 10, policy: TauSearchPolicy::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FeedbackStats {
    pub corrections: usize,
    pub runs: usize,
    pub dt: f64,
    pub target: [f64; 2],
    /// Standard deviation of the position across runs at each sample (m).
    pub variability: Vec<f64>,
    pub final_error_mean: f64,
    pub final_error_std: f64,
    pub final_errors: Vec<f64>,
    /// Per run: largest commanded acceleration, steering rate and actual
    /// steering angle magnitudes.
    pub max_accel: Vec<f64>,
    pub max_steer_rate: Vec<f64>,
    pub max_steer: Vec<f64>,
    pub accepted: usize,
    pub rejected: usize,
    #[serde(skip)]
    pub planned_path: Vec<[f64; 2]>,
    #[serde(skip)]
    pub sample_paths: Vec<Vec<[f64; 2]>>,
}

impl FeedbackStats {
    pub fn mean(values: &[f64]) -> f64 {
        values.iter().sum::<f64>() / values.len().max(1) as f64
    }
}

struct RunOutcome {
    path: Vec<[f64; 2]>,
    final_error: f64,
    max_accel: f64,
    max_steer_rate: f64,
    max_steer: f64,
    accepted: usize,
    rejected: usize,
}

struct Bounds {
    accel: f64,
    steer_rate: f64,
}

/// Commands `(accel, steer_rate)` of a car following `traj`.
fn recover(traj: &Trajectory, wheelbase: f64) -> (Vec<f64>, Vec<f64>) {
    let vel = velocity(traj);
    let acc = acceleration(traj);
    let speed: Vec<f64> = vel.iter().map(|v| v.norm()).collect();
    let steer: Vec<f64> = vel
        .iter()
        .zip(&acc)
        .map(|(v, a)| (wheelbase * cross2(v, a) / v.norm().powi(3)).atan())
        .collect();
    (diff1(&speed, traj.dt()), diff1(&steer, traj.dt()))
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Replan from sample `k` and state `s`: deform the predicted remainder so
/// that it ends at `target` and recover the commands of the deformed path.
/// The recovered commands are applied as a change to the current plan, which
/// cancels the discretization error of the recovery. Among the
/// closest-to-identity deformation pairs the one with the mildest commands
/// (relative to the bounds) is kept.
fn replan(
    plan: &FeedbackPlan,
    wheelbase: f64,
    k: usize,
    s: [f64; 5],
    target: &Point,
    bounds: &Bounds,
    policy: &TauSearchPolicy,
) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let n = plan.len();
    let mut state = s;
    let mut points = vec![Point::new(s[0], s[1], 0.0)];
    for j in k..n - 1 {
        state = step(state, wheelbase, plan.dt, [plan.accel[j], plan.steer_rate[j]], [plan.accel[j + 1], plan.steer_rate[j + 1]], [0.0; 2]);
        points.push(Point::new(state[0], state[1], 0.0));
    }
    let rem = Trajectory::new(Dim::Two, plan.dt, points)?;
    let (a0, z0) = recover(&rem, wheelbase);
    let mut best: Option<(Vec<f64>, Vec<f64>, f64)> = None;
    for defs in position_pairs_window(&rem, 0, rem.last_index(), target, policy, REPLAN_CANDIDATES)? {
        let (mut a, mut z) = recover(&apply_deformations(&rem, &defs)?, wheelbase);
        for j in 0..a.len() {
            a[j] += plan.accel[k + j] - a0[j];
            z[j] += plan.steer_rate[k + j] - z0[j];
        }
        let cost = (max_abs(&a) / bounds.accel).max(max_abs(&z) / bounds.steer_rate);
        if best.as_ref().is_none_or(|b| cost < b.2) {
            best = Some((a, z, cost));
        }
    }
    best.ok_or(Error::NoAccessibleTangent)
}

const REPLAN_CANDIDATES: usize = 64;

fn run_once(
    plan: &FeedbackPlan,
    wheelbase: f64,
    noise: &NoiseModel,
    opts: &FeedbackOptions,
    bounds: &Bounds,
    target: &Point,
    run: usize,
) -> RunOutcome {
    let n = plan.len();
    let last = n - 1;
    let mut rng = noise.rng(run);
    let mut current = plan.clone();
    let mut s = plan.initial;
    let mut path = Vec::with_capacity(n);
    path.push([s[0], s[1]]);
    let checkpoints: Vec<usize> = (1..=opts.corrections)
        .map(|i| ((i * last) as f64 / (opts.corrections + 1) as f64).round() as usize)
        .collect();
    let mut noise_now = [0.0; 2];
    let mut segment = usize::MAX;
    let (mut accepted, mut rejected) = (0, 0);
    let (mut max_accel, mut max_steer_rate, mut max_steer) = (0.0_f64, 0.0_f64, s[3].abs());
    for k in 0..last {
        if checkpoints.contains(&k) && last - k >= 16 {
            match replan(&current, wheelbase, k, s, target, bounds, &opts.policy) {
                Ok((a, z, cost)) if cost <= 1.0 => {
                    current.accel[k..].copy_from_slice(&a);
                    current.steer_rate[k..].copy_from_slice(&z);
                    accepted += 1;
                }
                _ => rejected += 1,
            }
        }
        let seg = (k as f64 * plan.dt / noise.segment + 1e-9).floor() as usize;
        if seg != segment {
            segment = seg;
            noise_now = [uniform(&mut rng, noise.accel_amplitude), uniform(&mut rng, noise.steer_amplitude)];
        }
        let u0 = [current.accel[k], current.steer_rate[k]];
        let u1 = [current.accel[k + 1], current.steer_rate[k + 1]];
        max_accel = max_accel.max(u0[0].abs());
        max_steer_rate = max_steer_rate.max(u0[1].abs());
        s = step(s, wheelbase, plan.dt, u0, u1, noise_now);
        max_steer = max_steer.max(s[3].abs());
        path.push([s[0], s[1]]);
    }
    let final_error = (s[0] - target.x).hypot(s[1] - target.y);
    RunOutcome { path, final_error, max_accel, max_steer_rate, max_steer, accepted, rejected }
}

/// Monte Carlo runs of the plan under command noise, with `corrections`
/// evenly spaced replanning steps per run.
///
/// Runs are independent; results are aggregated in run order so the
/// statistics do not depend on the thread count.
pub fn feedback_simulate(model: &RobotModel, plan: &FeedbackPlan, noise: &NoiseModel, opts: &FeedbackOptions) -> Result<FeedbackStats> {
    let RobotModel::KinematicCar { wheelbase } = *model else {
        return Err(Error::InvalidParameter(format!("feedback simulation needs a kinematic car, got {}", model.name())));
    };
    model.validate()?;
    plan.validate()?;
    noise.validate()?;
    if opts.runs == 0 {
        return Err(Error::InvalidParameter("runs must be at least 1".into()));
    }
    let planned = plan.simulate(wheelbase);
    let last = planned[planned.len() - 1];
    let target = Point::new(last[0], last[1], 0.0);
    let bounds = Bounds {
        accel: opts.bound_factor * max_abs(&plan.accel),
        steer_rate: opts.bound_factor * max_abs(&plan.steer_rate),
    };
    let outcomes: Vec<RunOutcome> = (0..opts.runs)
        .into_par_iter()
        .map(|run| run_once(plan, wheelbase, noise, opts, &bounds, &target, run))
        .collect();

    let n = plan.len();
    let runs = outcomes.len() as f64;
    let variability = (0..n)
        .map(|k| {
            let (mx, my) = outcomes.iter().fold((0.0, 0.0), |(x, y), o| (x + o.path[k][0], y + o.path[k][1]));
            let (mx, my) = (mx / runs, my / runs);
            let var = outcomes
                .iter()
                .map(|o| (o.path[k][0] - mx).powi(2) + (o.path[k][1] - my).powi(2))
                .sum::<f64>()
                / runs;
            var.sqrt()
        })
        .collect();
    let final_errors: Vec<f64> = outcomes.iter().map(|o| o.final_error).collect();
    let mean = FeedbackStats::mean(&final_errors);
    let std = (final_errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / runs).sqrt();
    Ok(FeedbackStats {
        corrections: opts.corrections,
        runs: opts.runs,
        dt: plan.dt,
        target: [target.x, target.y],
        variability,
        final_error_mean: mean,
        final_error_std: std,
        max_accel: outcomes.iter().map(|o| o.max_accel).collect(),
        max_steer_rate: outcomes.iter().map(|o| o.max_steer_rate).collect(),
        max_steer: outcomes.iter().map(|o| o.max_steer).collect(),
        accepted: outcomes.iter().map(|o| o.accepted).sum(),
        rejected: outcomes.iter().map(|o| o.rejected).sum(),
        planned_path: planned.iter().map(|s| [s[0], s[1]]).collect(),
        sample_paths: outcomes.iter().take(opts.keep_paths).map(|o| o.path.clone()).collect(),
        final_errors,
    })
}
