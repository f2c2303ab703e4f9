use serde::{Deserialize, Serialize};

use crate::trajectory::{is_inflection, local_derivatives, Trajectory};

/// Which samples may serve as deformation points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TauSearchPolicy {
    pub stride: usize,
    /// Fractions of the search window kept at either end.
    pub start_margin: f64,
    pub end_margin: f64,
    /// Samples within this distance of an inflection are skipped.
    pub inflection_guard: usize,
    pub tol_cross: f64,
    /// Cap on candidates tried by the two-deformation pair search.
    pub max_pair_candidates: usize,
}

impl Default for TauSearchPolicy {
    fn default() -> Self {
        TauSearchPolicy {
            stride: 1,
            start_margin: 0.05,
            end_margin: 0.95,
            inflection_guard: 2,
            tol_cross: 1e-6,
            max_pair_candidates: 32,
        }
    }
}

impl TauSearchPolicy {
    /// Index range `[first, last]` searched inside `[lo, end]`. A deformation
    /// at `tau` must leave the stencil window of `end` entirely deformed.
    pub(crate) fn range(&self, traj: &Trajectory, lo: usize, end: usize) -> Option<(usize, usize)> {
        let span = end.saturating_sub(lo) as f64;
        let first = (lo + (self.start_margin * span).ceil() as usize).max(1);
        let end_lo = if end == traj.last_index() { end.saturating_sub(3) } else { end.saturating_sub(1) };
        let last = (lo + (self.end_margin * span).floor() as usize).min(end_lo).min(traj.last_index() - 1);
        (first <= last).then_some((first, last))
    }

    /// Inflection flags over `[first, last]`, widened by the guard.
    pub(crate) fn blocked(&self, traj: &Trajectory, first: usize, last: usize) -> Vec<bool> {
        let noise = traj.acceleration_noise();
        let g = self.inflection_guard;
        let lo = first.saturating_sub(g);
        let hi = (last + g).min(traj.last_index());
        let mut out = vec![false; last - first + 1];
        for k in lo..=hi {
            let (v, a) = local_derivatives(traj, k);
            if is_inflection(&v, &a, self.tol_cross, noise) {
                let a0 = k.saturating_sub(g).max(first);
                let a1 = (k + g).min(last);
                for j in a0..=a1.max(a0) {
                    if j >= first && j <= last {
                        out[j - first] = true;
                    }
                }
            }
        }
        out
    }

    /// Usable deformation points for correcting sample `end` with
    /// deformations at or after `lo`.
    pub fn candidates(&self, traj: &Trajectory, lo: usize, end: usize) -> Vec<usize> {
        let Some((first, last)) = self.range(traj, lo, end) else {
            return Vec::new();
        };
        let blocked = self.blocked(traj, first, last);
        (first..=last)
            .step_by(self.stride.max(1))
            .filter(|&k| !blocked[k - first])
            .collect()
    }
}
