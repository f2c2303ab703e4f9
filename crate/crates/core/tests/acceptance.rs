//! Acceptance checks. One line per criterion; `ACCEPTANCE_STRICT=1` turns a
//! failing criterion into a non-zero exit status.

use std::time::Instant;

use affine_traj::apps::*;
use affine_traj::correct::*;
use affine_traj::deform::*;
use affine_traj::fixtures::{self, Circle, Helix, SCurve, SeedArc};
use affine_traj::kinematics::{check_admissible, integrate, recover_commands, round_trip, ModelClass, ReverseAux, RobotModel};
use affine_traj::scenario::all_models;
use affine_traj::trajectory::*;
use affine_traj::Result;
use nalgebra::{DMatrix, DVector, Matrix2, Matrix3, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CAR: RobotModel = RobotModel::KinematicCar { wheelbase: 2.5 };

struct Check {
    pass: bool,
    detail: String,
}

impl Check {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Check { pass, detail: detail.into() }
    }
}

/// Runs `f`, turning an error into a failing check.
fn guarded(f: impl FnOnce() -> Result<Check>) -> Check {
    f().unwrap_or_else(|e| Check::new(false, format!("error: {e}")))
}

fn rel(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    (a - b).norm() / (1.0 + a.norm().max(b.norm()))
}

// ---------------------------------------------------------------- round trip

fn build_map(model: &RobotModel, traj: &Trajectory, tau: usize, p: &[f64; 6]) -> Result<AffineMap> {
    match model.class() {
        ModelClass::ClassI => class1_map(traj, &ClassIParams { tau_index: tau, lambda: p[0], mu: p[1] }),
        ModelClass::ClassII => class2_map(traj, &ClassIIParams { tau_index: tau, lambda: p[0] }),
        ModelClass::Spatial => uwv_map(
            traj,
            &Uwv6Params { tau_index: tau, lambda: p[0], mu: p[1], nu: p[2], xi: p[3], sigma: p[4], chi: p[5] },
        ),
    }
}

fn ac1() -> Result<Check> {
    let start = Instant::now();
    let dts = [1e-3, 5e-4, 2.5e-4];
    let mut worst = 0.0_f64;
    let mut worst_pair = String::new();
    let mut min_ratio = f64::INFINITY;
    let mut ratio_pair = String::new();
    let mut pairs = 0;
    let mut bad = Vec::new();
    for (fi, name) in ["circle", "scurve", "helix"].iter().enumerate() {
        let base = fixtures::generate(name, None, dts[0])?;
        for (mi, model) in all_models().iter().enumerate() {
            if model.dim() != base.dim() {
                continue;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(2024);
            rng.set_stream((fi * 16 + mi) as u64);
            let n = base.len();
            let (t_tau, params) = (0..32)
                .map(|_| {
                    let t = base.time(rng.random_range(n / 4..n / 2));
                    let p: [f64; 6] = std::array::from_fn(|_| rng.random_range(-0.3..=0.3));
                    (t, p)
                })
                .find(|(t, p)| dts.iter().all(|dt| {
                    fixtures::generate(name, None, *dt).is_ok_and(|tr| build_map(model, &tr, tr.index_at(*t), p).is_ok())
                }))
                .expect("no admissible deformation point");
            let mut devs = Vec::new();
            for dt in dts {
                let traj = fixtures::generate(name, None, dt)?;
                let tau = traj.index_at(t_tau);
                let map = build_map(model, &traj, tau, &params)?;
                devs.push(round_trip(model, &traj, tau, &map)?.max_deviation);
            }
            pairs += 1;
            let label = format!("{name}/{}", model.name());
            if devs[0] > worst {
                worst = devs[0];
                worst_pair = label.clone();
            }
            let ratio = devs[0] / devs[2];
            if ratio < min_ratio {
                min_ratio = ratio;
                ratio_pair = label.clone();
            }
            if devs[0] > 1e-4 || ratio < 4.0 {
                bad.push(format!("{label} dev={:.2e} ratio={ratio:.1}", devs[0]));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = bad.is_empty() && secs < 5.0;
    Ok(Check::new(
        pass,
        format!(
            "{pairs} pairs; worst deviation {worst:.2e} m ({worst_pair}) <= 1e-4 at dt=1e-3; \
             min shrink over two halvings {min_ratio:.1}x ({ratio_pair}) >= 4; {secs:.2} s < 5 s{}",
            if bad.is_empty() { String::new() } else { format!("; failing: {}", bad.join(", ")) }
        ),
    ))
}

// ---------------------------------------------------------------- exactness

struct Corrected {
    label: &'static str,
    traj: Trajectory,
    models: Vec<RobotModel>,
    result: CorrectionResult,
}

fn corrections() -> Result<Vec<Corrected>> {
    let policy = TauSearchPolicy::default();
    let half = Circle::default().sample(1e-3)?;
    let scurve = SCurve::default().sample(1e-3)?;
    let seed = SeedArc::default().sample(1e-3)?;
    let helix = Helix::default().sample(1e-3)?;
    let car_small = RobotModel::KinematicCar { wheelbase: 0.5 };
    let theta0 = heading_at(&scurve, scurve.last_index());
    let orientation = [0.15, -0.15]
        .iter()
        .find_map(|d| class2_correct_orientation(&scurve, theta0 + d, &policy).ok())
        .ok_or(affine_traj::Error::TargetOrientationInaccessible)?;
    Ok(vec![
        Corrected {
            label: "class1",
            result: class1_correct_position(&half, 1000, Point::new(-0.4, 1.7, 0.0))?,
            traj: half.clone(),
            models: vec![RobotModel::Type21, RobotModel::Type30, RobotModel::Type12 { wheelbase: 0.5 }],
        },
        Corrected {
            label: "class2",
            result: class2_correct_position(&half, half.end() + Point::new(0.3, -0.2, 0.0), &policy)?,
            traj: half.clone(),
            models: vec![RobotModel::Type20, RobotModel::Unicycle, car_small.clone()],
        },
        Corrected {
            label: "class2_2step",
            result: class2_correct_position_2step(&half, Point::new(0.5, 2.5, 0.0), 800, 2000)?,
            traj: half.clone(),
            models: vec![RobotModel::Type20, car_small.clone()],
        },
        Corrected {
            label: "orientation",
            result: orientation,
            traj: scurve,
            models: vec![RobotModel::Type20, car_small],
        },
        Corrected {
            label: "pose_3step(20,40)",
            result: class2_correct_pose_3step(&seed, Point::new(20.0, 40.0, 0.0), 1.40, &policy, &PoseOptions::default())?,
            traj: seed,
            models: vec![CAR, RobotModel::Type11 { wheelbase: 2.5 }],
        },
        Corrected {
            label: "uwv",
            result: uwv_correct_position(&helix, 1200, helix.end() + Point::new(0.2, -0.1, 0.3))?,
            traj: helix,
            models: vec![RobotModel::Underwater3d],
        },
    ])
}

fn ac2(cs: &[Corrected]) -> Check {
    let mut parts = Vec::new();
    let mut pass = true;
    for c in cs {
        let pos_tol = if c.label.starts_with("pose") { 1e-6 } else { 1e-9 };
        let ok_pos = c.result.residual_position < pos_tol;
        let ok_or = c.result.residual_orientation.is_none_or(|r| r < 1e-6);
        pass &= ok_pos && ok_or;
        let mut s = format!("{} {:.1e} m", c.label, c.result.residual_position);
        if let Some(r) = c.result.residual_orientation {
            s.push_str(&format!("/{r:.1e} rad"));
        }
        parts.push(s);
    }
    Check::new(pass, format!("{} (position < 1e-9 algebraic, < 1e-6 for the pose chain; heading < 1e-6)", parts.join(", ")))
}

// ---------------------------------------------------------------- admissibility

/// One-sided second-order turn-rate estimates at `k`.
fn omega_sides(h: &[f64], k: usize, dt: f64) -> (f64, f64) {
    let back = (3.0 * h[k] - 4.0 * h[k - 1] + h[k - 2]) / (2.0 * dt);
    let fwd = (-3.0 * h[k] + 4.0 * h[k + 1] - h[k + 2]) / (2.0 * dt);
    (back, fwd)
}

fn ac3(cs: &[Corrected]) -> Result<Check> {
    let mut pass = true;
    let mut fails = Vec::new();
    let mut worst_omega_ratio = 0.0_f64;
    let mut worst_rt = 0.0_f64;
    let mut checked = 0;
    for c in cs {
        let out = &c.result.corrected;
        if apply_deformations(&c.traj, &c.result.deformations)?.points() != out.points() {
            pass = false;
            fails.push(format!("{}: replay differs", c.label));
        }
        for m in &c.models {
            let adm = check_admissible(m, out);
            checked += 1;
            if !adm.admissible {
                pass = false;
                fails.push(format!("{}:{}", c.label, m.name()));
            }
            let rec = recover_commands(m, out, &ReverseAux::default())?;
            let back = integrate(m, &rec.initial_state(), &rec.commands)?.trajectory(m.dim())?;
            let dev = back.max_deviation(out) / out.coordinate_scale().max(1.0);
            worst_rt = worst_rt.max(dev);
            if dev > 1e-4 {
                pass = false;
                fails.push(format!("{}:{} round trip {dev:.1e}", c.label, m.name()));
            }
            if m.class() == ModelClass::ClassII {
                let h = heading(out)?;
                let tol = adm.regularity.omega_tolerance;
                for d in &c.result.deformations {
                    let (b, f) = omega_sides(&h, d.tau_index, out.dt());
                    worst_omega_ratio = worst_omega_ratio.max((b - f).abs() / tol);
                    if (b - f).abs() >= tol {
                        pass = false;
                        fails.push(format!("{}: omega jump at {}", c.label, d.tau_index));
                    }
                }
            }
        }
    }
    let half = Circle::default().sample(1e-3)?;
    // only the stretch across the path leaves the class-II family; the pure
    // shear along the tangent is I + lambda B
    let bent = class1_map(&half, &ClassIParams { tau_index: 1000, lambda: 0.3, mu: 0.2 })?;
    let shear = class1_map(&half, &ClassIParams { tau_index: 1000, lambda: 0.3, mu: 0.0 })?;
    let flagged = !admissibility_of_map(&half, &bent, 1000, &RobotModel::Type20).admissible
        && !admissibility_of_map(&half, &bent, 1000, &CAR).admissible
        && admissibility_of_map(&half, &bent, 1000, &RobotModel::Type21).admissible
        && admissibility_of_map(&half, &shear, 1000, &RobotModel::Type20).admissible;
    pass &= flagged;
    Ok(Check::new(
        pass,
        format!(
            "{checked} corrected trajectory/model pairs admissible; relative round trip <= {worst_rt:.1e}; \
             worst omega jump at tau {:.2} x tol; class-I map with mu=0.2 flagged on class II, shear kept: {flagged}{}",
            worst_omega_ratio,
            if fails.is_empty() { String::new() } else { format!("; failing: {}", fails.join(", ")) }
        ),
    ))
}

// ---------------------------------------------------------------- group structure

fn ac4() -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let traj = SCurve::default().sample(1e-3)?;
    let mut worst1 = 0.0_f64;
    let mut worst2 = 0.0_f64;
    let mut worst_b2 = 0.0_f64;
    let mut worst_seq = 0.0_f64;
    let mut worst_assoc = 0.0_f64;
    for _ in 0..100 {
        let tau = rng.random_range(100..900);
        let frame = frame_at(&traj, tau)?;
        let [l1, m1, l2, m2]: [f64; 4] = std::array::from_fn(|_| rng.random_range(-0.8..0.8));
        let prod = class1_matrix(&frame, l1, m1) * class1_matrix(&frame, l2, m2);
        let expected = class1_matrix(&frame, l2 + l1 * (1.0 + m2), (1.0 + m1) * (1.0 + m2) - 1.0);
        let q = Matrix2::new(frame.u_par.x, frame.w1.x, frame.u_par.y, frame.w1.y);
        let local = q.transpose() * prod.fixed_view::<2, 2>(0, 0) * q;
        worst1 = worst1.max(rel(&prod, &expected)).max(local[(1, 0)].abs()).max((local[(0, 0)] - 1.0).abs());

        let b = *class2_map(&traj, &ClassIIParams { tau_index: tau, lambda: 1.0 })?.matrix() - Matrix3::identity();
        worst_b2 = worst_b2.max((b * b).norm() / b.norm().powi(2));
        let i = Matrix3::identity();
        worst2 = worst2.max(rel(&((i + b * l1) * (i + b * l2)), &(i + b * (l1 + l2))));

        let tau2 = tau + rng.random_range(200..800);
        let f1 = class2_map(&traj, &ClassIIParams { tau_index: tau, lambda: l1 })?;
        let once = apply(&traj, &f1, tau)?;
        let f2 = class2_map(&once, &ClassIIParams { tau_index: tau2, lambda: l2 })?;
        let seq = apply(&once, &f2, tau2)?;
        let seg = apply_segments(&traj, &[(tau, f1.clone()), (tau2, compose(&f2, &f1)?)])?;
        worst_seq = worst_seq.max(seg.max_deviation(&seq) / traj.coordinate_scale());

        let f3 = class1_map(&seq, &ClassIParams { tau_index: tau2 + 50, lambda: m1, mu: m2 })?;
        let left = compose(&compose(&f3, &f2)?, &f1)?;
        let right = compose(&f3, &compose(&f2, &f1)?)?;
        let p = Point::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), 0.0);
        worst_assoc = worst_assoc
            .max(rel(left.matrix(), right.matrix()))
            .max((left.apply_point(&p) - right.apply_point(&p)).norm() / (1.0 + p.norm()));
    }
    let worst = worst1.max(worst2).max(worst_b2).max(worst_seq).max(worst_assoc);
    Ok(Check::new(
        worst <= 1e-12,
        format!(
            "100 draws: class-I closure {worst1:.1e}, B^2 {worst_b2:.1e}, class-II closure {worst2:.1e}, \
             two-interval vs sequential {worst_seq:.1e}, associativity {worst_assoc:.1e} (all <= 1e-12)"
        ),
    ))
}

// ---------------------------------------------------------------- least norm

fn ac5() -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let helix = Helix::default().sample(1e-3)?;
    let end = helix.last_index();
    let mut worst_res = 0.0_f64;
    let mut worst_dense = 0.0_f64;
    let mut min_margin = f64::INFINITY;
    let mut worst_alt = 0.0_f64;
    let draws = 20;
    for _ in 0..draws {
        let tau = rng.random_range(200..2500);
        let target = helix.end() + Point::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
        let (u, b) = uwv_system(&helix, tau, end, &target)?;
        let p = uwv_parameters(&helix, tau, end, &target)?;
        let pv = Vector6::new(p.lambda, p.mu, p.nu, p.xi, p.sigma, p.chi);
        worst_res = worst_res.max((u * pv - b).norm());

        let ud = DMatrix::from_fn(3, 6, |i, j| u[(i, j)]);
        let bd = DVector::from_fn(3, |i, _| b[i]);
        let svd = ud.clone().svd(true, true);
        let dense = svd.solve(&bd, 1e-14).expect("svd solve");
        worst_dense = worst_dense.max((dense - DVector::from_column_slice(pv.as_slice())).norm());

        let pinv = ud.clone().pseudo_inverse(1e-14).expect("pseudo-inverse");
        let projector = DMatrix::<f64>::identity(6, 6) - &pinv * &ud;
        for _ in 0..100 {
            let z = DVector::from_fn(6, |_, _| rng.random_range(-1.0..1.0));
            let shift = &projector * z;
            let alt = pv + Vector6::from_column_slice(shift.as_slice());
            worst_alt = worst_alt.max((u * alt - b).norm());
            min_margin = min_margin.min(alt.norm() - pv.norm());
        }
    }
    let pass = worst_res < 1e-10 && worst_dense < 1e-10 && worst_alt < 1e-10 && min_margin >= 0.0;
    Ok(Check::new(
        pass,
        format!(
            "{draws} systems: residual {worst_res:.1e} < 1e-10; dense SVD least-norm difference {worst_dense:.1e} < 1e-10; \
             100 null-space alternatives each (residual {worst_alt:.1e}), min (alt - solution) norm {min_margin:.2e} >= 0"
        ),
    ))
}

// ---------------------------------------------------------------- collinearity

/// Curve whose curvature fades out at t = 2, then a straight segment to t = 5.
fn fading_curve(dt: f64, spatial: bool) -> Result<Trajectory> {
    let n = (5.0 / dt).round() as usize;
    let dim = if spatial { Dim::Three } else { Dim::Two };
    Trajectory::sample(dim, dt, n, |t| {
        let s = (2.0 - t).max(0.0).powi(4);
        Point::new(t, 0.08 * s, if spatial { -0.05 * s } else { 0.0 })
    })
}

fn line_deviation(traj: &Trajectory, from: usize) -> f64 {
    let a = traj.point(from);
    let d = (traj.end() - a).normalize();
    traj.points()[from..].iter().map(|p| (p - a - d * (p - a).dot(&d)).norm()).fold(0.0, f64::max)
}

fn ac6() -> Result<Check> {
    let dt = 1e-3;
    let curve = fading_curve(dt, false)?;
    let spatial = fading_curve(dt, true)?;
    let straight_from = curve.index_at(2.0);
    let tau = curve.index_at(0.8);
    let policy = TauSearchPolicy { end_margin: 0.3, ..TauSearchPolicy::default() };
    let mut deformed: Vec<(&str, Trajectory)> = vec![
        ("class1", apply(&curve, &class1_map(&curve, &ClassIParams { tau_index: tau, lambda: 0.4, mu: -0.3 })?, tau)?),
        ("class2", apply(&curve, &class2_map(&curve, &ClassIIParams { tau_index: tau, lambda: -0.5 })?, tau)?),
        (
            "uwv",
            apply(
                &spatial,
                &uwv_map(&spatial, &Uwv6Params { tau_index: tau, lambda: 0.2, mu: -0.1, nu: 0.3, xi: 0.1, sigma: -0.2, chi: 0.25 })?,
                tau,
            )?,
        ),
    ];
    let moved = class2_correct_position(&curve, curve.end() + Point::new(0.2, -0.2, 0.0), &policy)?;
    deformed.push(("class2_correct_position", moved.corrected));
    let mut worst = 0.0_f64;
    let mut parts = Vec::new();
    for (name, t) in &deformed {
        let d = line_deviation(t, straight_from);
        worst = worst.max(d);
        parts.push(format!("{name} {d:.1e}"));
    }

    let model = RobotModel::CarWithTrailers { wheelbase: 0.5, hitches: vec![0.4, 0.3] };
    let mut monotone = true;
    let mut decay = Vec::new();
    let class2 = [("original", curve.clone())]
        .into_iter()
        .chain(deformed.iter().filter(|(n, _)| n.starts_with("class2")).cloned());
    for (name, t) in class2 {
        let rec = recover_commands(&model, &t, &ReverseAux::default())?;
        let th0 = rec.states.column("theta0").expect("theta0");
        let th = [rec.states.column("theta1").expect("theta1"), rec.states.column("theta2").expect("theta2")];
        let gap: Vec<f64> = (straight_from..t.len())
            .map(|k| th.iter().map(|c| (c[k] - th0[k]).abs()).fold(0.0, f64::max))
            .collect();
        let seg_speed = (t.end() - t.point(straight_from)).norm() / (t.duration() - t.time(straight_from));
        let long_enough = t.duration() - t.time(straight_from) >= 5.0 * 0.4 / seg_speed;
        let mono = gap.windows(2).all(|w| w[1] <= w[0] + 1e-12) && gap.last() < gap.first();
        monotone &= mono && long_enough;
        decay.push(format!("{name} {:.1e}->{:.1e}", gap[0], gap[gap.len() - 1]));
    }
    Ok(Check::new(
        worst < 1e-9 && monotone,
        format!(
            "straight tail deviation: {} (< 1e-9); trailer misalignment decays monotonically: {monotone} ({})",
            parts.join(", "),
            decay.join(", ")
        ),
    ))
}

// ---------------------------------------------------------------- feedback

fn ac7() -> Result<Check> {
    let start = Instant::now();
    let plan = FeedbackPlan::reference(0.01)?;
    let noise = NoiseModel::default();
    let sim = |s: usize, runs: usize| feedback_simulate(&CAR, &plan, &noise, &FeedbackOptions { corrections: s, runs, ..Default::default() });
    let s0 = sim(0, 500)?;
    let s1 = sim(1, 500)?;
    let s5 = sim(5, 500)?;
    let secs = start.elapsed().as_secs_f64();
    let again = sim(1, 40)?;
    let first = sim(1, 40)?;
    let deterministic = serde_json::to_string(&again).unwrap() == serde_json::to_string(&first).unwrap();

    let ratio = s0.final_error_mean / s5.final_error_mean;
    let var = |s: &FeedbackStats| *s.variability.last().unwrap();
    let ordered = var(&s5) < var(&s1) && var(&s1) < var(&s0);
    let start_zero = [&s0, &s1, &s5].iter().all(|s| s.variability[0] == 0.0);
    let zeta = |s: &FeedbackStats| FeedbackStats::mean(&s.max_steer_rate);
    let zeta_ok = zeta(&s1) >= zeta(&s5);
    let pass = ratio >= 3.0 && ordered && start_zero && zeta_ok && deterministic && secs < 60.0;
    Ok(Check::new(
        pass,
        format!(
            "500 runs: mean final error S0 {:.2} m, S1 {:.2} m, S5 {:.2} m, S0/S5 {ratio:.2} >= 3 [{}]; \
             variability at T S5 {:.2} < S1 {:.2} < S0 {:.2} [{}]; zero at t=0 [{}]; \
             mean max|zeta| S1 {:.3} >= S5 {:.3} [{}]; deterministic [{}]; {secs:.1} s < 60 s",
            s0.final_error_mean,
            s1.final_error_mean,
            s5.final_error_mean,
            ok(ratio >= 3.0),
            var(&s5),
            var(&s1),
            var(&s0),
            ok(ordered),
            ok(start_zero),
            zeta(&s1),
            zeta(&s5),
            ok(zeta_ok),
            ok(deterministic),
        ),
    ))
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAIL"
    }
}

// ---------------------------------------------------------------- obstacles and gaps

fn arc_from(start: Point, heading: f64, radius: f64, speed: f64, duration: f64, dt: f64) -> Result<Trajectory> {
    let base = Circle { radius, speed, duration }.sample(dt)?;
    let (c, s) = (heading.cos(), heading.sin());
    let pts = base.points().iter().map(|p| start + Point::new(c * p.x - s * p.y, s * p.x + c * p.y, 0.0)).collect();
    Trajectory::new(Dim::Two, base.dt(), pts)
}

/// Largest step of `x` at `j` relative to `10 dt max|x'|`.
fn jump_ratio(x: &[f64], j: usize, dt: f64) -> f64 {
    let d = diff1(x, dt);
    let tol = 10.0 * dt * d.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-9);
    (x[j + 1] - x[j]).abs().max((x[j] - x[j - 1]).abs()) / tol
}

fn ac8() -> Result<Check> {
    let start = Instant::now();
    let traj = SeedArc::default().sample(1e-2)?;
    let mid = traj.point(traj.len() / 2);
    let late = traj.point(traj.len() * 3 / 4);
    let set = ObstacleSet::new(vec![
        Obstacle::Circle { center: [mid.x + 0.3, mid.y - 0.2], radius: 0.8, known: false },
        Obstacle::Circle { center: [late.x + 3.0, late.y + 2.0], radius: 1.0, known: true },
    ])?;
    let clearance = 0.5;
    let out = avoid_obstacles(&traj, &CAR, &set, clearance, &AvoidOptions::default())?;
    let c = &out.correction.corrected;
    let free = set.colliding_indices(c, clearance).is_empty();
    let end_err = (c.end() - traj.end()).norm();
    let adm = check_admissible(&CAR, c).admissible;
    let t_avoid = start.elapsed().as_secs_f64();
    let avoid_ok = free && end_err < 1e-6 && adm && t_avoid < 5.0;

    let start = Instant::now();
    let dt = 1e-2;
    let t1 = arc_from(Point::zeros(), 0.0, 10.0, 2.0, 5.0, dt)?;
    let e = t1.end();
    let h = heading_at(&t1, t1.last_index());
    let t2 = arc_from(
        e + Point::new(-h.sin(), h.cos(), 0.0) + Point::new(h.cos(), h.sin(), 0.0) * 8.0,
        h + 0.3,
        10.0,
        2.0,
        5.0,
        dt,
    )?;
    let gap = gap_fill(&t1, &t2, &CAR, &GapSpec::default(), &TauSearchPolicy::default(), &PoseOptions::default())?;
    let type11 = RobotModel::Type11 { wheelbase: 2.5 };
    let adm11 = check_admissible(&type11, &gap.joined).admissible && check_admissible(&CAR, &gap.joined).admissible;
    let rec = recover_commands(&CAR, &gap.joined, &ReverseAux::default())?;
    let beta = rec.states.column("beta").expect("beta");
    let v = rec.commands.channel("v").expect("v").to_vec();
    let j = gap.junction;
    let (jb, jv) = (jump_ratio(&beta, j, dt), jump_ratio(&v, j, dt));
    let t_gap = start.elapsed().as_secs_f64();
    let gap_ok = adm11 && jb < 1.0 && jv < 1.0 && t_gap < 5.0;
    Ok(Check::new(
        avoid_ok && gap_ok,
        format!(
            "avoidance: collision-free [{}], min clearance {:.2} m, final position error {end_err:.1e} < 1e-6, \
             admissible [{}], {t_avoid:.2} s; gap fill: (1,1) admissible [{}], junction jumps beta {jb:.2} x tol, \
             v {jv:.2} x tol, {t_gap:.2} s",
            ok(free),
            set.min_clearance(c),
            ok(adm),
            ok(adm11),
        ),
    ))
}

fn main() {
    let cs = corrections();
    let criteria: Vec<(&str, Check)> = vec![
        ("AC1 round-trip oracle", guarded(ac1)),
        ("AC2 exact corrections", match &cs {
            Ok(cs) => ac2(cs),
            Err(e) => Check::new(false, format!("error: {e}")),
        }),
        ("AC3 admissibility closure", match &cs {
            Ok(cs) => guarded(|| ac3(cs)),
            Err(e) => Check::new(false, format!("error: {e}")),
        }),
        ("AC4 group structure", guarded(ac4)),
        ("AC5 minimum-norm solve", guarded(ac5)),
        ("AC6 collinearity and trailers", guarded(ac6)),
        ("AC7 feedback correction", guarded(ac7)),
        ("AC8 obstacles and gap fill", guarded(ac8)),
    ];
    let mut failed = 0;
    for (name, c) in &criteria {
        println!("{} {name}: {}", if c.pass { "PASS" } else { "FAIL" }, c.detail);
        failed += usize::from(!c.pass);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
