use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::class2::two_step;
use super::{class2_step, finish, CorrectionResult, Deformation, Site, TauSearchPolicy};
use crate::error::{Error, Result};
use crate::trajectory::{wrap_angle, Dim, Point, Trajectory};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoseOptions {
    /// Arc-length fractions of the three deformation points.
    pub quantiles: [f64; 3],
    /// Half-width of the bracket scan over the third displacement.
    pub alpha_max: f64,
    pub scan_points: usize,
}

impl Default for PoseOptions {
    fn default() -> Self {
        PoseOptions { quantiles: [0.2, 0.5, 0.8], alpha_max: 10.0, scan_points: 400 }
    }
}

/// Scan `[lo, hi]` (plus `center`) for a sign change of `g` and bisect the
/// bracket closest to `center`. Brackets straddling an angle wrap are
/// ignored.
pub(crate) fn find_root(g: &dyn Fn(f64) -> Option<f64>, lo: f64, hi: f64, n: usize, center: f64) -> Option<f64> {
    let n = n.max(2);
    let mut xs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    xs.push(center);
    xs.sort_by(|a, b| a.total_cmp(b));
    xs.dedup();
    let ys: Vec<Option<f64>> = xs.iter().map(|&x| g(x)).collect();
    if let Some(i) = xs.iter().position(|&x| x == center) {
        if ys[i] == Some(0.0) {
            return Some(center);
        }
    }
    let mut brackets: Vec<(f64, f64, f64, f64)> = Vec::new();
    for i in 0..xs.len() - 1 {
        if let (Some(a), Some(b)) = (ys[i], ys[i + 1]) {
            if a == 0.0 {
                brackets.push((xs[i], xs[i], a, a));
            } else if a * b < 0.0 && a.abs() + b.abs() < FRAC_PI_2 {
                brackets.push((xs[i], xs[i + 1], a, b));
            }
        }
    }
    brackets.sort_by(|p, q| {
        let dp = (0.5 * (p.0 + p.1) - center).abs();
        let dq = (0.5 * (q.0 + q.1) - center).abs();
        dp.total_cmp(&dq)
    });
    'outer: for (mut a, mut b, mut ga, gb) in brackets {
        if ga == 0.0 {
            return Some(a);
        }
        let mut best = if ga.abs() < gb.abs() { (a, ga) } else { (b, gb) };
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            let Some(gm) = g(m) else { continue 'outer };
            if gm.abs() < best.1.abs() {
                best = (m, gm);
            }
            if gm == 0.0 {
                break;
            }
            if (gm < 0.0) == (ga < 0.0) {
                a = m;
                ga = gm;
            } else {
                b = m;
            }
        }
        return Some(best.0);
    }
    None
}

/// Three class-II deformations that place sample `end` at a target position
/// with a target heading. The third (latest) deformation displaces the end
/// by `alpha3 * v(tau3)`; the first two then restore the position exactly,
/// which leaves the final heading a scalar function of `alpha3`.
#[derive(Clone, Debug)]
pub struct Pose3Step {
    sites: [Site; 3],
    end: Site,
    target: Point,
    noise: f64,
}

impl Pose3Step {
    pub fn new(traj: &Trajectory, end: usize, target: Point, taus: [usize; 3]) -> Result<Self> {
        if traj.dim() != Dim::Two {
            return Err(Error::DimensionMismatch { expected: 2, found: traj.dim().as_usize() });
        }
        if end > traj.last_index() {
            return Err(Error::InvalidParameter(format!("end index {end} out of range")));
        }
        let end_site = Site::at(traj, end);
        if taus[0] + 2 > taus[1] || taus[1] + 2 > taus[2] || end_site.lo < taus[2] || taus[0] == 0 {
            return Err(Error::InvalidParameter(format!(
                "deformation points {taus:?} must be increasing, two samples apart and clear of the end"
            )));
        }
        Ok(Pose3Step {
            sites: taus.map(|k| Site::at(traj, k)),
            end: end_site,
            target,
            noise: traj.acceleration_noise(),
        })
    }

    /// Deformation points at arc-length fractions of `[0, end]`, moved off
    /// inflections.
    pub fn choose(traj: &Trajectory, end: usize, target: Point, policy: &TauSearchPolicy, opts: &PoseOptions) -> Result<Self> {
        let (first, last) = policy
            .range(traj, 0, end)
            .ok_or_else(|| Error::InvalidParameter("trajectory too short for a pose correction".into()))?;
        let blocked = policy.blocked(traj, first, last);
        let mut arc = vec![0.0; end + 1];
        for k in 1..=end {
            arc[k] = arc[k - 1] + (traj.point(k) - traj.point(k - 1)).norm();
        }
        let total = arc[end];
        let mut taus = [0usize; 3];
        let mut floor = first;
        for (i, q) in opts.quantiles.iter().enumerate() {
            let want = arc.partition_point(|&s| s < q * total).clamp(floor, last);
            let pick = (0..=last - first)
                .flat_map(|d| [want.checked_add(d), want.checked_sub(d)])
                .flatten()
                .find(|&k| k >= floor && k <= last && !blocked[k - first])
                .ok_or(Error::InflectionOnlyMatches)?;
            taus[i] = pick;
            floor = pick + 2;
            if floor > last && i < 2 {
                return Err(Error::InvalidParameter("trajectory too short for a pose correction".into()));
            }
        }
        Pose3Step::new(traj, end, target, taus)
    }

    pub fn taus(&self) -> [usize; 3] {
        self.sites.map(|s| s.index)
    }

    pub fn deformations(&self, alpha3: f64) -> Result<Vec<Deformation>> {
        let [s1, s2, s3] = self.sites;
        let m3 = class2_step(&s3, &self.end, alpha3, self.noise)?;
        let mut end = self.end;
        end.deform(s3.index, &m3);
        let pair = two_step(&s1, &s2, &end, &self.target, self.noise)?;
        let mut out = vec![Deformation { tau_index: s3.index, map: m3 }];
        out.extend(pair);
        Ok(out)
    }

    fn end_after(&self, alpha3: f64) -> Result<Site> {
        let mut end = self.end;
        for d in self.deformations(alpha3)? {
            end.deform(d.tau_index, &d.map);
        }
        Ok(end)
    }

    /// Heading of the end velocity after all three deformations.
    pub fn final_heading(&self, alpha3: f64) -> Result<f64> {
        Ok(self.end_after(alpha3)?.heading())
    }

    /// `alpha3` giving final heading `theta_d`.
    pub fn solve(&self, theta_d: f64, opts: &PoseOptions) -> Result<f64> {
        let g = |a: f64| self.final_heading(a).ok().map(|h| wrap_angle(h - theta_d));
        let root = find_root(&g, -opts.alpha_max, opts.alpha_max, opts.scan_points, 0.0)
            .ok_or(Error::RootNotBracketed { alpha_max: opts.alpha_max })?;
        match g(root) {
            Some(r) if r.abs() <= 1e-10 => Ok(root),
            _ => Err(Error::RootNotBracketed { alpha_max: opts.alpha_max }),
        }
    }
}

/// Deformations placing sample `end` at `target` with heading `theta_d`.
pub(crate) fn pose_window(
    traj: &Trajectory,
    end: usize,
    target: Point,
    theta_d: f64,
    policy: &TauSearchPolicy,
    opts: &PoseOptions,
) -> Result<Vec<Deformation>> {
    let solver = Pose3Step::choose(traj, end, target, policy, opts)?;
    let alpha = solver.solve(theta_d, opts)?;
    solver.deformations(alpha)
}

/// Place the final sample at `target` with heading `theta_d`.
pub fn class2_correct_pose_3step(
    traj: &Trajectory,
    target: Point,
    theta_d: f64,
    policy: &TauSearchPolicy,
    opts: &PoseOptions,
) -> Result<CorrectionResult> {
    let end = traj.last_index();
    let defs = pose_window(traj, end, target, theta_d, policy, opts)?;
    finish(traj, defs, end, Some(target), Some(theta_d))
}
