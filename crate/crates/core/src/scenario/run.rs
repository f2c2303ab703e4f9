use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use super::plot::{svg, PlotLayer, STAGE_COLORS};
use super::{all_models, point, PositionMethod, Scenario, Task, TaskKind};
use crate::apps::{avoid_obstacles, doorway_constraint, feedback_simulate, gap_fill, FeedbackOptions, FeedbackPlan, FeedbackStats};
use crate::correct::{
    apply_deformations, class1_correct_position, class1_correct_position_auto, class2_correct_orientation,
    class2_correct_pose_3step, class2_correct_position, class2_correct_position_2step, uwv_correct_position,
    uwv_correct_position_auto, CorrectionResult,
};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::io::{fmt_g, write_columns_csv, write_trajectory_csv};
use crate::kinematics::{check_admissible, random_admissible_map, round_trip, ModelClass, RobotModel};
use crate::trajectory::{Dim, Point, Trajectory};

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Overrides the scenario `output_dir`; the fallback is `./out`.
    pub out: Option<PathBuf>,
    /// Record wall-clock time in the report (breaks byte-identical reruns).
    pub timing: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub task: TaskKind,
    pub status: &'static str,
    pub scenario: Value,
    pub inputs: BTreeMap<String, String>,
    pub result: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<Value>,
    pub files: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<f64>,
}

/// Machine-readable form of an error.
pub fn error_json(e: &Error) -> Value {
    let mut v = json!({ "code": e.code(), "message": e.to_string() });
    if let Error::Scenario { path, .. } = e {
        v["path"] = json!(path);
    }
    v
}

/// Round every float to 12 significant digits.
fn round12(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap();
            fmt_g(x).parse::<f64>().ok().and_then(serde_json::Number::from_f64).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round12).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round12(v))).collect()),
        other => other,
    }
}

#[derive(Default)]
struct Outcome {
    result: Value,
    trajectories: Vec<(String, Trajectory)>,
    layers: Vec<PlotLayer>,
    tables: Vec<(String, Vec<u8>)>,
    /// Set when the task produced a result but its check did not pass.
    failure: Option<Error>,
}

fn xy(traj: &Trajectory) -> Vec<[f64; 2]> {
    traj.points().iter().map(|p| [p.x, p.y]).collect()
}

fn path_layer(traj: &Trajectory, color: &str) -> PlotLayer {
    PlotLayer::Path { points: xy(traj), color: color.into(), width: 1.5 }
}

fn marker(p: &Point, color: &str) -> PlotLayer {
    PlotLayer::Marker { at: [p.x, p.y], color: color.into() }
}

/// Name and color stages: original red, final magenta, the ones between
/// alternate blue and green.
fn staged(stages: Vec<Trajectory>) -> (Vec<(String, Trajectory)>, Vec<PlotLayer>) {
    let n = stages.len();
    let mut named = Vec::with_capacity(n);
    let mut layers = Vec::with_capacity(n);
    for (i, t) in stages.into_iter().enumerate() {
        let (name, color) = if i == 0 {
            ("original".to_string(), STAGE_COLORS[0])
        } else if i + 1 == n {
            ("final".to_string(), STAGE_COLORS[3])
        } else {
            (format!("stage_{i}"), STAGE_COLORS[1 + (i - 1) % 2])
        };
        layers.push(path_layer(&t, color));
        named.push((name, t));
    }
    (named, layers)
}

fn admissibility(model: Option<&RobotModel>, traj: &Trajectory) -> Result<Value> {
    let Some(model) = model else { return Ok(Value::Null) };
    let adm = check_admissible(model, traj);
    if !adm.admissible {
        return Err(Error::Inadmissible(format!(
            "result fails the {} check (velocity jumps at {:?}, heading jumps at {:?})",
            model.name(),
            adm.regularity.discontinuity_indices,
            adm.regularity.heading_discontinuity_indices
        )));
    }
    Ok(serde_json::to_value(&adm.regularity).unwrap())
}

fn correction_outcome(traj: &Trajectory, model: Option<&RobotModel>, res: CorrectionResult, extra: Value) -> Result<Outcome> {
    let regularity = admissibility(model, &res.corrected)?;
    let mut stages = vec![traj.clone()];
    for i in 1..res.deformations.len() {
        stages.push(apply_deformations(traj, &res.deformations[..i])?);
    }
    stages.push(res.corrected.clone());
    let (trajectories, mut layers) = staged(stages);
    layers.push(marker(&traj.end(), STAGE_COLORS[0]));
    layers.push(marker(&res.corrected.end(), STAGE_COLORS[3]));
    let mut result = serde_json::to_value(&res).unwrap();
    result["total_distance_from_identity"] = json!(res.total_distance_from_identity());
    result["regularity"] = regularity;
    if let (Value::Object(r), Value::Object(e)) = (&mut result, extra) {
        r.extend(e);
    }
    Ok(Outcome { result, trajectories, layers, tables: Vec::new(), failure: None })
}

fn run_task(scn: &Scenario) -> Result<Outcome> {
    let model = scn.model.as_ref();
    let traj = scn.trajectory.as_ref();
    match &scn.task {
        Task::CorrectPosition(p) => {
            let traj = traj.unwrap();
            let target = point(&p.target, traj.dim(), "params.target")?;
            let class = model.map(RobotModel::class);
            let method = match p.method {
                PositionMethod::Auto => match (traj.dim(), class) {
                    (Dim::Three, _) => PositionMethod::Uwv,
                    (_, Some(ModelClass::ClassI)) => PositionMethod::Class1,
                    _ => PositionMethod::Class2,
                },
                m => m,
            };
            if method == PositionMethod::Class1 && class != Some(ModelClass::ClassI) {
                return Err(Error::InvalidParameter("class1 corrections need a class I model".into()));
            }
            let res = match method {
                PositionMethod::Class1 => match p.tau {
                    Some(tau) => class1_correct_position(traj, tau, target)?,
                    None => class1_correct_position_auto(traj, target, &p.policy)?,
                },
                PositionMethod::Class2 => class2_correct_position(traj, target, &p.policy)?,
                PositionMethod::Class2TwoStep => class2_correct_position_2step(traj, target, p.tau.unwrap(), p.tau2.unwrap())?,
                PositionMethod::Uwv => match p.tau {
                    Some(tau) => uwv_correct_position(traj, tau, target)?,
                    None => uwv_correct_position_auto(traj, target, &p.policy)?,
                },
                PositionMethod::Auto => unreachable!(),
            };
            correction_outcome(traj, model, res, json!({ "method": method }))
        }
        Task::CorrectOrientation(p) => {
            let traj = traj.unwrap();
            let res = class2_correct_orientation(traj, p.heading, &p.policy)?;
            correction_outcome(traj, model, res, json!({}))
        }
        Task::CorrectPose(p) => {
            let traj = traj.unwrap();
            let target = point(&p.target, traj.dim(), "params.target")?;
            let res = class2_correct_pose_3step(traj, target, p.heading, &p.policy, &p.options)?;
            correction_outcome(traj, model, res, json!({}))
        }
        Task::UwvCorrect(p) => {
            let traj = traj.unwrap();
            let target = point(&p.target, Dim::Three, "params.target")?;
            let res = match p.tau {
                Some(tau) => uwv_correct_position(traj, tau, target)?,
                None => uwv_correct_position_auto(traj, target, &p.policy)?,
            };
            correction_outcome(traj, model, res, json!({}))
        }
        Task::Avoid(p) => {
            let traj = traj.unwrap();
            let staged_run = avoid_obstacles(traj, model.unwrap(), &p.obstacles, p.clearance, &p.options)?;
            let regularity = admissibility(model, &staged_run.correction.corrected)?;
            let mut stages = staged_run.stages.clone();
            if stages.len() == 1 {
                stages.push(staged_run.correction.corrected.clone());
            }
            let (trajectories, mut layers) = staged(stages);
            layers.insert(0, PlotLayer::Obstacles(p.obstacles.clone()));
            for w in &staged_run.waypoints {
                layers.push(PlotLayer::Marker { at: *w, color: "black".into() });
            }
            let mut result = serde_json::to_value(&staged_run).unwrap();
            result["min_clearance"] = json!(p.obstacles.min_clearance(&staged_run.correction.corrected));
            result["regularity"] = regularity;
            Ok(Outcome { result, trajectories, layers, tables: Vec::new(), failure: None })
        }
        Task::Doorway(p) => {
            let traj = traj.unwrap();
            let k = p.index.unwrap_or_else(|| traj.index_at(p.time.unwrap()));
            let door = Point::new(p.position[0], p.position[1], 0.0);
            let staged_run = doorway_constraint(traj, model.unwrap(), k, door, p.heading, &p.policy, &p.options)?;
            let regularity = admissibility(model, &staged_run.correction.corrected)?;
            let mut stages = staged_run.stages.clone();
            if stages.len() == 1 {
                stages.push(staged_run.correction.corrected.clone());
            }
            let (trajectories, mut layers) = staged(stages);
            layers.push(PlotLayer::Marker { at: p.position, color: "black".into() });
            let mut result = serde_json::to_value(&staged_run).unwrap();
            result["door_index"] = json!(k);
            result["regularity"] = regularity;
            Ok(Outcome { result, trajectories, layers, tables: Vec::new(), failure: None })
        }
        Task::Feedback(p) => feedback(scn, p),
        Task::Gapfill(p, second) => {
            let traj = traj.unwrap();
            let g = gap_fill(traj, second, model.unwrap(), &p.spec, &p.policy, &p.options)?;
            let regularity = admissibility(model, &g.joined)?;
            let trajectories = vec![
                ("original".to_string(), traj.clone()),
                ("second".to_string(), second.clone()),
                ("extended1".to_string(), g.extended1.clone()),
                ("corrected1".to_string(), g.corrected1.clone()),
                ("extended2".to_string(), g.extended2.clone()),
                ("final".to_string(), g.joined.clone()),
            ];
            let layers = vec![
                path_layer(&g.extended1, STAGE_COLORS[1]),
                path_layer(&g.extended2, STAGE_COLORS[2]),
                path_layer(&g.joined, STAGE_COLORS[3]),
                path_layer(traj, STAGE_COLORS[0]),
                path_layer(second, STAGE_COLORS[0]),
                marker(&g.joined.point(g.junction), "black"),
            ];
            let mut result = serde_json::to_value(&g).unwrap();
            result["regularity"] = regularity;
            Ok(Outcome { result, trajectories, layers, tables: Vec::new(), failure: None })
        }
        Task::RoundtripCheck(p) => roundtrip(scn, p),
    }
}

fn feedback(scn: &Scenario, p: &super::FeedbackParams) -> Result<Outcome> {
    let model = scn.model.as_ref().unwrap();
    let plan = match &p.plan {
        Some(plan) => plan.clone(),
        None => FeedbackPlan::reference(scn.dt.max(1e-3))?,
    };
    let mut summaries = Vec::new();
    let mut tables = Vec::new();
    let mut layers = Vec::new();
    let mut planned = Vec::new();
    for (i, &s) in p.corrections.iter().enumerate() {
        let opts = FeedbackOptions {
            corrections: s,
            runs: p.runs,
            bound_factor: p.bound_factor,
            keep_paths: p.keep_paths,
            policy: p.policy.clone(),
        };
        let stats = feedback_simulate(model, &plan, &p.noise, &opts)?;
        let t: Vec<f64> = (0..stats.variability.len()).map(|k| k as f64 * stats.dt).collect();
        let mut buf = Vec::new();
        write_columns_csv(&["t", "variability"], &[&t, &stats.variability], &mut buf)?;
        tables.push((format!("feedback_S{s}.csv"), buf));
        let runs: Vec<f64> = (0..stats.runs).map(|r| r as f64).collect();
        let mut buf = Vec::new();
        write_columns_csv(
            &["run", "final_error", "max_accel", "max_steer_rate", "max_steer"],
            &[&runs, &stats.final_errors, &stats.max_accel, &stats.max_steer_rate, &stats.max_steer],
            &mut buf,
        )?;
        tables.push((format!("feedback_S{s}_runs.csv"), buf));
        let color = STAGE_COLORS[1 + i % 3];
        for path in &stats.sample_paths {
            layers.push(PlotLayer::Path { points: path.clone(), color: color.into(), width: 0.5 });
        }
        planned = stats.planned_path.clone();
        summaries.push(json!({
            "corrections": s,
            "runs": stats.runs,
            "final_error_mean": stats.final_error_mean,
            "final_error_std": stats.final_error_std,
            "variability_final": stats.variability.last(),
            "mean_max_accel": FeedbackStats::mean(&stats.max_accel),
            "mean_max_steer_rate": FeedbackStats::mean(&stats.max_steer_rate),
            "mean_max_steer": FeedbackStats::mean(&stats.max_steer),
            "accepted": stats.accepted,
            "rejected": stats.rejected,
            "target": stats.target,
        }));
    }
    layers.push(PlotLayer::Path { points: planned.clone(), color: STAGE_COLORS[0].into(), width: 2.0 });
    let planned_traj = Trajectory::from_xy(plan.dt, &planned)?;
    Ok(Outcome {
        result: json!({ "noise": p.noise, "plan_dt": plan.dt, "series": summaries }),
        trajectories: vec![("planned".to_string(), planned_traj)],
        layers,
        tables,
        failure: None,
    })
}

fn roundtrip(scn: &Scenario, p: &super::RoundtripParams) -> Result<Outcome> {
    let models = p.models.clone().unwrap_or_else(all_models);
    let seed = scn.seed.unwrap_or(0);
    let mut entries = Vec::new();
    let mut failures = Vec::new();
    let mut worst = 0.0_f64;
    for (fi, name) in p.fixtures.iter().enumerate() {
        let traj = fixtures::generate(name, None, scn.dt)?;
        for (mi, model) in models.iter().enumerate() {
            let mut entry = json!({ "fixture": name, "model": model.name() });
            let skip = if traj.dim() != model.dim() {
                Some("dimension mismatch".to_string())
            } else if !check_admissible(model, &traj).admissible {
                Some("fixture is not admissible for the model".to_string())
            } else {
                None
            };
            if let Some(reason) = skip {
                entry["status"] = json!("skipped");
                entry["reason"] = json!(reason);
                entries.push(entry);
                continue;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream((fi * models.len() + mi) as u64);
            let (tau, map) = match random_admissible_map(model, &traj, p.scale, &mut rng) {
                Ok(m) => m,
                Err(e) => {
                    entry["status"] = json!("skipped");
                    entry["reason"] = json!(format!("no admissible deformation: {e}"));
                    entries.push(entry);
                    continue;
                }
            };
            match round_trip(model, &traj, tau, &map) {
                Ok(r) => {
                    worst = worst.max(r.max_deviation);
                    let ok = r.max_deviation <= p.threshold;
                    entry["status"] = json!(if ok { "ok" } else { "failed" });
                    entry["tau_index"] = json!(r.tau_index);
                    entry["max_deviation"] = json!(r.max_deviation);
                    if !ok {
                        failures.push(format!("{name}/{}: {:e}", model.name(), r.max_deviation));
                    }
                }
                Err(e) => {
                    entry["status"] = json!("failed");
                    entry["error"] = error_json(&e);
                    failures.push(format!("{name}/{}: {e}", model.name()));
                }
            }
            entries.push(entry);
        }
    }
    let failure = (!failures.is_empty())
        .then(|| Error::CheckFailed(format!("round trip above {:e} m: {}", p.threshold, failures.join("; "))));
    Ok(Outcome {
        result: json!({ "dt": scn.dt, "threshold": p.threshold, "worst_deviation": worst, "pairs": entries }),
        failure,
        ..Default::default()
    })
}

fn write_file(dir: &Path, name: &str, bytes: &[u8], files: &mut Vec<String>) -> Result<()> {
    std::fs::write(dir.join(name), bytes)?;
    files.push(name.to_string());
    Ok(())
}

fn write_report(dir: &Path, report: &RunReport) -> Result<()> {
    let value = round12(serde_json::to_value(report).unwrap());
    let mut text = serde_json::to_string_pretty(&value).unwrap();
    text.push('\n');
    std::fs::write(dir.join("report.json"), text)?;
    Ok(())
}

/// Run the scenario and write its outputs. A failed task still leaves a
/// `report.json` with the error before the error is returned.
pub fn run(scn: &Scenario, opts: &RunOptions) -> Result<RunReport> {
    let dir = opts.out.clone().or_else(|| scn.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&dir)?;
    let mut report = RunReport {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        task: scn.kind,
        status: "ok",
        scenario: scn.echo.clone(),
        inputs: scn.input_hashes.clone(),
        result: Value::Null,
        error: None,
        files: Vec::new(),
        timing_ms: None,
    };
    let start = Instant::now();
    let outcome = run_task(scn);
    if opts.timing {
        report.timing_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            report.status = "failed";
            report.error = Some(error_json(&e));
            write_report(&dir, &report)?;
            return Err(e);
        }
    };
    for (name, traj) in &outcome.trajectories {
        let mut buf = Vec::new();
        write_trajectory_csv(traj, &mut buf)?;
        write_file(&dir, &format!("trajectory_{name}.csv"), &buf, &mut report.files)?;
    }
    for (name, bytes) in &outcome.tables {
        write_file(&dir, name, bytes, &mut report.files)?;
    }
    if !outcome.layers.is_empty() {
        write_file(&dir, "plot.svg", svg(&outcome.layers).as_bytes(), &mut report.files)?;
    }
    report.files.push("report.json".into());
    report.result = outcome.result;
    if let Some(e) = outcome.failure {
        report.status = "failed";
        report.error = Some(error_json(&e));
        write_report(&dir, &report)?;
        return Err(e);
    }
    write_report(&dir, &report)?;
    Ok(report)
}
