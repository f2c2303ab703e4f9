use super::pose::find_root;
use super::{class2_lambda, class2_step, finish, thin, CorrectionResult, Deformation, Site, TauSearchPolicy};
use crate::deform::class2_generator;
use crate::error::{Error, Result};
use crate::trajectory::{cross2, wrap_angle, Dim, Point, Trajectory};

fn planar(traj: &Trajectory) -> Result<()> {
    if traj.dim() != Dim::Two {
        return Err(Error::DimensionMismatch { expected: 2, found: traj.dim().as_usize() });
    }
    Ok(())
}

/// Samples in `[first, last]` where `score(k)` changes sign, each reduced to
/// the neighbour with the smaller magnitude. Blocked neighbours are skipped;
/// the flag reports whether any sign change was lost that way.
fn sign_changes(first: usize, last: usize, blocked: &[bool], score: impl Fn(usize) -> f64) -> (Vec<usize>, bool) {
    let mut out = Vec::new();
    let mut lost = false;
    let s: Vec<f64> = (first..=last).map(&score).collect();
    for i in 0..s.len() {
        let here = s[i] == 0.0;
        let change = i + 1 < s.len() && s[i] * s[i + 1] < 0.0;
        if !here && !change {
            continue;
        }
        let pair = if here { vec![i] } else { vec![i, i + 1] };
        let pick = pair
            .iter()
            .copied()
            .filter(|&j| !blocked[j])
            .min_by(|&a, &b| s[a].abs().total_cmp(&s[b].abs()));
        match pick {
            Some(j) => {
                if out.last() != Some(&(first + j)) {
                    out.push(first + j);
                }
            }
            None => lost = true,
        }
    }
    (out, lost)
}

/// Two class-II deformations at `s1` (earlier) and `s2` that move the end
/// site exactly onto `target`. Returned in application order (`s2` first).
pub(crate) fn two_step(s1: &Site, s2: &Site, end: &Site, target: &Point, a_noise: f64) -> Result<[Deformation; 2]> {
    if s1.index + 2 > s2.index {
        return Err(Error::InvalidParameter(format!(
            "deformation points {} and {} must be at least two samples apart",
            s1.index, s2.index
        )));
    }
    if end.lo < s2.index {
        return Err(Error::InvalidParameter(format!("deformation point {} too close to the end", s2.index)));
    }
    let e = target - end.c;
    let det = cross2(&s1.v, &s2.v);
    if det.abs() <= 1e-9 * s1.v.norm() * s2.v.norm() {
        return Err(Error::CollinearTangents { tau1: s1.index, tau2: s2.index });
    }
    let alpha1 = cross2(&e, &s2.v) / det;
    let alpha2 = cross2(&s1.v, &e) / det;
    let m2 = class2_step(s2, end, alpha2, a_noise)?;
    let mut end2 = *end;
    end2.deform(s2.index, &m2);
    let m1 = class2_step(s1, &end2, alpha1, a_noise)?;
    Ok([Deformation { tau_index: s2.index, map: m2 }, Deformation { tau_index: s1.index, map: m1 }])
}

fn score(defs: &[Deformation]) -> f64 {
    defs.iter().map(|d| d.map.distance_from_identity()).sum()
}

/// Pair of deformations among `candidates` with the smallest total distance
/// from the identity that moves sample `end` onto `target`.
pub(crate) fn best_pair(traj: &Trajectory, end: usize, target: &Point, candidates: &[usize]) -> Result<Vec<Deformation>> {
    Ok(ranked_pairs(traj, end, target, candidates, 1)?.swap_remove(0))
}

/// Up to `keep` pairs ordered by total distance from the identity.
pub(crate) fn ranked_pairs(
    traj: &Trajectory,
    end: usize,
    target: &Point,
    candidates: &[usize],
    keep: usize,
) -> Result<Vec<Vec<Deformation>>> {
    let end_site = Site::at(traj, end);
    if (target - end_site.c).norm() == 0.0 {
        return Ok(vec![Vec::new()]);
    }
    let noise = traj.acceleration_noise();
    let sites: Vec<Site> = candidates.iter().map(|&k| Site::at(traj, k)).collect();
    let mut found: Vec<(f64, [Deformation; 2])> = Vec::new();
    let mut last_err = None;
    for (i, s1) in sites.iter().enumerate() {
        for s2 in &sites[i + 1..] {
            if s1.index + 2 > s2.index || end_site.lo < s2.index {
                continue;
            }
            match two_step(s1, s2, &end_site, target, noise) {
                Ok(defs) => {
                    let sc = score(&defs);
                    if sc.is_finite() {
                        found.push((sc, defs));
                    }
                }
                Err(e) => last_err = Some(e),
            }
        }
    }
    if found.is_empty() {
        return Err(last_err.unwrap_or_else(|| {
            Error::InvalidParameter("not enough deformation points for a two-step correction".into())
        }));
    }
    found.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(found.into_iter().take(keep.max(1)).map(|f| f.1.to_vec()).collect())
}

/// Two-step correction of sample `end` with deformation points in `[lo, end)`.
pub(crate) fn position_pair_window(
    traj: &Trajectory,
    lo: usize,
    end: usize,
    target: &Point,
    policy: &TauSearchPolicy,
) -> Result<Vec<Deformation>> {
    let candidates = thin(&policy.candidates(traj, lo, end), policy.max_pair_candidates);
    best_pair(traj, end, target, &candidates)
}

/// [`position_pair_window`] returning up to `keep` ranked alternatives.
pub(crate) fn position_pairs_window(
    traj: &Trajectory,
    lo: usize,
    end: usize,
    target: &Point,
    policy: &TauSearchPolicy,
    keep: usize,
) -> Result<Vec<Vec<Deformation>>> {
    let candidates = thin(&policy.candidates(traj, lo, end), policy.max_pair_candidates);
    ranked_pairs(traj, end, target, &candidates, keep)
}

/// Move the final position onto `target` with one class-II deformation at a
/// sample whose tangent is parallel to the displacement. When the nearest
/// sample leaves a residual above 1e-9 a second, small deformation at a
/// helper sample makes the correction exact.
pub fn class2_correct_position(traj: &Trajectory, target: Point, policy: &TauSearchPolicy) -> Result<CorrectionResult> {
    planar(traj)?;
    let end = traj.last_index();
    let end_site = Site::at(traj, end);
    let e = target - end_site.c;
    if e.norm() == 0.0 {
        return finish(traj, Vec::new(), end, Some(target), None);
    }
    let (first, last) = policy.range(traj, 0, end).ok_or(Error::NoAccessibleTangent)?;
    let blocked = policy.blocked(traj, first, last);
    let sites: Vec<Site> = (first..=last).map(|k| Site::at(traj, k)).collect();
    let (taus, lost) = sign_changes(first, last, &blocked, |k| {
        let v = &sites[k - first].v;
        cross2(v, &e) / v.norm()
    });
    if taus.is_empty() {
        return Err(if lost { Error::InflectionOnlyMatches } else { Error::NoAccessibleTangent });
    }

    let noise = traj.acceleration_noise();
    let helpers = thin(&policy.candidates(traj, 0, end), policy.max_pair_candidates);
    let helper_sites: Vec<Site> = helpers.iter().map(|&k| Site::at(traj, k)).collect();
    let mut best: Option<(f64, Vec<Deformation>)> = None;
    let mut last_err = None;
    for &tau in &taus {
        let s = sites[tau - first];
        let alpha = e.dot(&s.v) / s.v.norm_squared();
        let map = match class2_step(&s, &end_site, alpha, noise) {
            Ok(m) => m,
            Err(err) => {
                last_err = Some(err);
                continue;
            }
        };
        let residual = (map.apply_point(&end_site.c) - target).norm();
        let mut defs = vec![Deformation { tau_index: tau, map }];
        if residual > 1e-9 {
            let mut micro: Option<(f64, Vec<Deformation>)> = None;
            for h in &helper_sites {
                let pair = if h.index + 2 <= tau {
                    two_step(h, &s, &end_site, &target, noise)
                } else if tau + 2 <= h.index && end_site.lo >= h.index {
                    two_step(&s, h, &end_site, &target, noise)
                } else {
                    continue;
                };
                if let Ok(pair) = pair {
                    let sc = score(&pair);
                    if sc.is_finite() && micro.as_ref().is_none_or(|m| sc < m.0) {
                        micro = Some((sc, pair.to_vec()));
                    }
                }
            }
            if let Some((_, pair)) = micro {
                defs = pair;
            }
        }
        let sc = score(&defs);
        if best.as_ref().is_none_or(|b| sc < b.0) {
            best = Some((sc, defs));
        }
    }
    match best {
        Some((_, defs)) => finish(traj, defs, end, Some(target), None),
        None => Err(last_err.unwrap_or(Error::NoAccessibleTangent)),
    }
}

/// Exact position correction with deformations at `tau1 < tau2`.
pub fn class2_correct_position_2step(traj: &Trajectory, target: Point, tau1: usize, tau2: usize) -> Result<CorrectionResult> {
    planar(traj)?;
    let end = traj.last_index();
    if tau2 > end {
        return Err(Error::InvalidParameter(format!("tau index {tau2} out of range")));
    }
    let (t1, t2) = if tau1 <= tau2 { (tau1, tau2) } else { (tau2, tau1) };
    let end_site = Site::at(traj, end);
    if (target - end_site.c).norm() == 0.0 {
        return finish(traj, Vec::new(), end, Some(target), None);
    }
    let defs = two_step(&Site::at(traj, t1), &Site::at(traj, t2), &end_site, &target, traj.acceleration_noise())?;
    finish(traj, defs.to_vec(), end, Some(target), None)
}

/// Turn the final heading to `theta_d` while keeping the final position.
///
/// The main deformation sits where a tangent line passes through the final
/// position; there it rotates the end velocity without moving the end point.
/// The discrete mismatch of that tangent is absorbed by a two-step position
/// restore, and the heading is then matched by a scalar root find.
pub fn class2_correct_orientation(traj: &Trajectory, theta_d: f64, policy: &TauSearchPolicy) -> Result<CorrectionResult> {
    planar(traj)?;
    let end = traj.last_index();
    let end_site = Site::at(traj, end);
    if wrap_angle(end_site.heading() - theta_d) == 0.0 {
        return finish(traj, Vec::new(), end, Some(end_site.c), Some(theta_d));
    }
    let target = end_site.c;
    let (first, last) = policy.range(traj, 0, end).ok_or(Error::NoTangentThroughEndpoint)?;
    let blocked = policy.blocked(traj, first, last);
    let sites: Vec<Site> = (first..=last).map(|k| Site::at(traj, k)).collect();
    let (taus, _) = sign_changes(first, last, &blocked, |k| {
        let s = &sites[k - first];
        let d = target - s.c;
        cross2(&s.v, &d) / (s.v.norm() * d.norm())
    });
    if taus.is_empty() {
        return Err(Error::NoTangentThroughEndpoint);
    }

    let u_d = Point::new(theta_d.cos(), theta_d.sin(), 0.0);
    let noise = traj.acceleration_noise();
    let helpers = thin(&policy.candidates(traj, 0, end), policy.max_pair_candidates);
    let helper_sites: Vec<Site> = helpers.iter().map(|&k| Site::at(traj, k)).collect();
    let mut best: Option<(f64, Vec<Deformation>)> = None;
    let mut last_err = Error::TargetOrientationInaccessible;
    for &tau in &taus {
        let so = sites[tau - first];
        let side = cross2(&so.v, &end_site.v);
        let want = cross2(&so.v, &u_d);
        if side * want <= 0.0 {
            continue;
        }
        let b = match class2_generator(&so.v, &so.a, noise, tau) {
            Ok(b) => b,
            Err(e) => {
                last_err = e;
                continue;
            }
        };
        let c = cross2(&so.v, &so.a);
        let s = -cross2(&end_site.v, &u_d) / want;
        let lambda0 = s / (side / c);

        // restore pair chosen at the closed-form parameter
        let plan = |lambda: f64, pair: Option<(usize, usize)>| -> Result<(Vec<Deformation>, f64, (usize, usize))> {
            let m0 = class2_lambda(&so, lambda, &b)?;
            let mut end1 = end_site;
            end1.deform(tau, &m0);
            let moved = |h: &Site| {
                let mut h = *h;
                h.deform(tau, &m0);
                h
            };
            let mut chosen: Option<(f64, [Deformation; 2], (usize, usize))> = None;
            for (i, h1) in helper_sites.iter().enumerate() {
                for h2 in &helper_sites[i + 1..] {
                    if let Some(p) = pair {
                        if (h1.index, h2.index) != p {
                            continue;
                        }
                    }
                    let near = |k: usize| k + 1 >= tau && k <= tau + 1;
                    if near(h1.index) || near(h2.index) || h1.index + 2 > h2.index || end1.lo < h2.index {
                        continue;
                    }
                    if let Ok(defs) = two_step(&moved(h1), &moved(h2), &end1, &target, noise) {
                        let sc = score(&defs);
                        if sc.is_finite() && chosen.as_ref().is_none_or(|c| sc < c.0) {
                            chosen = Some((sc, defs, (h1.index, h2.index)));
                        }
                    }
                }
            }
            let (_, pair_defs, idx) = chosen.ok_or(Error::NoTangentThroughEndpoint)?;
            let mut end2 = end1;
            for d in &pair_defs {
                end2.deform(d.tau_index, &d.map);
            }
            let mut defs = vec![Deformation { tau_index: tau, map: m0 }];
            defs.extend(pair_defs);
            Ok((defs, wrap_angle(end2.heading() - theta_d), idx))
        };

        let pair = match plan(lambda0, None) {
            Ok((_, _, idx)) => idx,
            Err(e) => {
                last_err = e;
                continue;
            }
        };
        let g = |l: f64| plan(l, Some(pair)).ok().map(|p| p.1);
        let width = 2.0 * lambda0.abs().max(1e-6);
        let Some(root) = find_root(&g, lambda0 - width, lambda0 + width, 400, lambda0) else {
            last_err = Error::RootNotBracketed { alpha_max: width };
            continue;
        };
        let (defs, res, _) = plan(root, Some(pair))?;
        if res.abs() > 1e-10 {
            last_err = Error::RootNotBracketed { alpha_max: width };
            continue;
        }
        let sc = score(&defs);
        if best.as_ref().is_none_or(|b| sc < b.0) {
            best = Some((sc, defs));
        }
    }
    match best {
        Some((_, defs)) => finish(traj, defs, end, Some(target), Some(theta_d)),
        None => Err(last_err),
    }
}
