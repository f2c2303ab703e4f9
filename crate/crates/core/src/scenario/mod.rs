//! JSON scenario files: one task per file, run by the `affine-traj` binary.
//!
//! ```json
//! {
//!   "task": "correct_pose",
//!   "model": { "kind": "kinematic_car", "wheelbase": 2.5 },
//!   "trajectory": { "generator": "seed_arc" },
//!   "params": { "target": [20, 40], "heading": 1.4 }
//! }
//! ```
//!
//! Relative paths (CSV inputs, `output_dir`) are resolved against the
//! directory of the scenario file. Every parse error carries the JSON path
//! of the offending field.

mod plot;
mod run;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::apps::{AvoidOptions, FeedbackPlan, GapSpec, NoiseModel, ObstacleSet};
use crate::correct::{PoseOptions, TauSearchPolicy};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::io::{read_trajectory_csv, sha256_hex};
use crate::kinematics::RobotModel;
use crate::trajectory::{Dim, Point, Trajectory};

pub use plot::{svg, PlotLayer, STAGE_COLORS};
pub use run::{error_json, run, RunOptions, RunReport};

/// Generator sample step used when neither the scenario nor the command line
/// sets one (s).
pub const DEFAULT_DT: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    CorrectPosition,
    CorrectOrientation,
    CorrectPose,
    UwvCorrect,
    Avoid,
    Doorway,
    Feedback,
    Gapfill,
    RoundtripCheck,
}

/// Trajectory input: a CSV file or a built-in generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Source {
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub generator: Option<String>,
    #[serde(default)]
    pub params: Option<Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    task: TaskKind,
    #[serde(default)]
    model: Option<RobotModel>,
    #[serde(default)]
    trajectory: Option<Source>,
    #[serde(default)]
    params: Option<Value>,
    #[serde(default)]
    output_dir: Option<PathBuf>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    dt: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositionMethod {
    /// Chosen from the model class.
    #[default]
    Auto,
    Class1,
    Class2,
    Class2TwoStep,
    Uwv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositionParams {
    pub target: Vec<f64>,
    #[serde(default)]
    pub method: PositionMethod,
    /// Deformation sample for `class1`, `uwv` and the first one of
    /// `class2_two_step`.
    #[serde(default)]
    pub tau: Option<usize>,
    #[serde(default)]
    pub tau2: Option<usize>,
    #[serde(default)]
    pub policy: TauSearchPolicy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrientationParams {
    /// Final heading (rad).
    pub heading: f64,
    #[serde(default)]
    pub policy: TauSearchPolicy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseParams {
    pub target: Vec<f64>,
    pub heading: f64,
    #[serde(default)]
    pub policy: TauSearchPolicy,
    #[serde(default)]
    pub options: PoseOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UwvParams {
    pub target: Vec<f64>,
    #[serde(default)]
    pub tau: Option<usize>,
    #[serde(default)]
    pub policy: TauSearchPolicy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AvoidParams {
    pub obstacles: ObstacleSet,
    #[serde(default)]
    pub clearance: f64,
    #[serde(default)]
    pub options: AvoidOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoorwayParams {
    /// Doorway sample; alternatively `time`.
    #[serde(default)]
    pub index: Option<usize>,
    #[serde(default)]
    pub time: Option<f64>,
    pub position: [f64; 2],
    pub heading: f64,
    #[serde(default)]
    pub policy: TauSearchPolicy,
    #[serde(default)]
    pub options: PoseOptions,
}

fn default_corrections() -> Vec<usize> {
    vec![0, 1, 5]
}

fn default_runs() -> usize {
    500
}

fn default_bound_factor() -> f64 {
    3.0
}

fn default_keep_paths() -> usize {
    10
}

fn default_wheelbase() -> f64 {
    2.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackParams {
    /// One simulation per entry.
    #[serde(default = "default_corrections")]
    pub corrections: Vec<usize>,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default = "default_bound_factor")]
    pub bound_factor: f64,
    #[serde(default = "default_keep_paths")]
    pub keep_paths: usize,
    #[serde(default)]
    pub noise: NoiseModel,
    /// Defaults to the built-in S-shaped plan sampled at the scenario `dt`.
    #[serde(default)]
    pub plan: Option<FeedbackPlan>,
    #[serde(default)]
    pub policy: TauSearchPolicy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapParams {
    pub second: Source,
    #[serde(default)]
    pub spec: GapSpec,
    #[serde(default)]
    pub policy: TauSearchPolicy,
    #[serde(default)]
    pub options: PoseOptions,
}

fn default_fixtures() -> Vec<String> {
    fixtures::NAMES.iter().map(|s| s.to_string()).collect()
}

fn default_scale() -> f64 {
    0.3
}

fn default_threshold() -> f64 {
    1e-4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundtripParams {
    #[serde(default = "default_fixtures")]
    pub fixtures: Vec<String>,
    /// Defaults to every model with unit-scale geometry.
    #[serde(default)]
    pub models: Option<Vec<RobotModel>>,
    /// Half-width of the random deformation parameters.
    #[serde(default = "default_scale")]
    pub scale: f64,
    /// Largest accepted base-position deviation (m).
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

/// Every model kind with unit-scale parameters.
pub fn all_models() -> Vec<RobotModel> {
    vec![
        RobotModel::Type30,
        RobotModel::Type20,
        RobotModel::Type21,
        RobotModel::Type11 { wheelbase: 0.5 },
        RobotModel::Type12 { wheelbase: 0.5 },
        RobotModel::Unicycle,
        RobotModel::KinematicCar { wheelbase: 0.5 },
        RobotModel::CarWithTrailers { wheelbase: 0.5, hitches: vec![0.4, 0.3] },
        RobotModel::Underwater3d,
    ]
}

#[derive(Clone, Debug, PartialEq)]
pub enum Task {
    CorrectPosition(PositionParams),
    CorrectOrientation(OrientationParams),
    CorrectPose(PoseParams),
    UwvCorrect(UwvParams),
    Avoid(AvoidParams),
    Doorway(DoorwayParams),
    Feedback(FeedbackParams),
    Gapfill(GapParams, Trajectory),
    RoundtripCheck(RoundtripParams),
}

/// A parsed and validated scenario with its inputs loaded.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub kind: TaskKind,
    pub task: Task,
    pub model: Option<RobotModel>,
    pub trajectory: Option<Trajectory>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub dt: f64,
    /// The scenario as read, with command-line overrides applied.
    pub echo: Value,
    /// SHA-256 of every input file, keyed by the path as written.
    pub input_hashes: BTreeMap<String, String>,
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub dt: Option<f64>,
    pub seed: Option<u64>,
}

fn scenario_err(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Scenario { path: path.into(), message: message.into() }
}

fn parse_at<T: DeserializeOwned>(prefix: &str, value: &Value) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let inner = e.path().to_string();
        let path = match (prefix, inner.as_str()) {
            ("", p) => p.to_string(),
            (pre, ".") => pre.to_string(),
            (pre, p) => format!("{pre}.{p}"),
        };
        scenario_err(path, e.into_inner().to_string())
    })
}

fn load_source(src: &Source, at: &str, base: &Path, dt: f64, hashes: &mut BTreeMap<String, String>) -> Result<Trajectory> {
    match (&src.csv, &src.generator) {
        (Some(csv), None) => {
            if src.params.is_some() {
                return Err(scenario_err(format!("{at}.params"), "params apply to generators only"));
            }
            let path = base.join(csv);
            let bytes = std::fs::read(&path).map_err(|e| scenario_err(format!("{at}.csv"), format!("{}: {e}", path.display())))?;
            hashes.insert(csv.display().to_string(), sha256_hex(&bytes));
            read_trajectory_csv(bytes.as_slice()).map_err(|e| match e {
                Error::Csv { line, message } => scenario_err(format!("{at}.csv"), format!("line {line}: {message}")),
                other => other,
            })
        }
        (None, Some(name)) => fixtures::generate(name, src.params.as_ref(), dt).map_err(|e| match e {
            Error::Scenario { path, message } => scenario_err(format!("{at}.{path}"), message),
            Error::UnknownGenerator(n) => {
                scenario_err(format!("{at}.generator"), format!("unknown generator '{n}' (known: {})", fixtures::NAMES.join(", ")))
            }
            other => other,
        }),
        _ => Err(scenario_err(at, "exactly one of 'csv' and 'generator' is required")),
    }
}

fn point(target: &[f64], dim: Dim, at: &str) -> Result<Point> {
    match (dim, target) {
        (Dim::Two, [x, y]) => Ok(Point::new(*x, *y, 0.0)),
        (Dim::Three, [x, y, z]) => Ok(Point::new(*x, *y, *z)),
        _ => Err(scenario_err(at, format!("expected {} coordinates, got {}", dim.as_usize(), target.len()))),
    }
}

fn check_index(k: Option<usize>, traj: &Trajectory, at: &str) -> Result<()> {
    match k {
        Some(k) if k > traj.last_index() => Err(scenario_err(at, format!("index {k} beyond last sample {}", traj.last_index()))),
        _ => Ok(()),
    }
}

impl Scenario {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Scenario> {
        let bytes = std::fs::read(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut hashes = BTreeMap::new();
        hashes.insert(path.file_name().map_or_else(|| path.display().to_string(), |f| f.to_string_lossy().into_owned()), sha256_hex(&bytes));
        let mut value: Value = serde_json::from_slice(&bytes).map_err(|e| scenario_err(".", format!("invalid JSON: {e}")))?;
        if let Some(obj) = value.as_object_mut() {
            if let Some(dt) = overrides.dt {
                obj.insert("dt".into(), dt.into());
            }
            if let Some(seed) = overrides.seed {
                obj.insert("seed".into(), seed.into());
            }
        }
        Self::from_value(value, &base, hashes)
    }

    /// Parse a scenario held in memory; relative paths resolve against `base`.
    pub fn from_value(value: Value, base: &Path, mut input_hashes: BTreeMap<String, String>) -> Result<Scenario> {
        let raw: RawScenario = parse_at("", &value)?;
        let dt = raw.dt.unwrap_or(DEFAULT_DT);
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(scenario_err("dt", format!("must be positive, got {dt}")));
        }
        if let Some(m) = &raw.model {
            m.validate().map_err(|e| scenario_err("model", e.to_string()))?;
        }
        let needs_trajectory = !matches!(raw.task, TaskKind::Feedback | TaskKind::RoundtripCheck);
        let trajectory = match (&raw.trajectory, needs_trajectory) {
            (Some(src), true) => Some(load_source(src, "trajectory", base, dt, &mut input_hashes)?),
            (None, true) => return Err(scenario_err("trajectory", "required for this task")),
            (Some(_), false) => return Err(scenario_err("trajectory", "not used by this task")),
            (None, false) => None,
        };
        let needs_model = !matches!(raw.task, TaskKind::RoundtripCheck | TaskKind::CorrectOrientation | TaskKind::CorrectPose | TaskKind::UwvCorrect);
        let model = match (&raw.model, raw.task) {
            (Some(m), _) => Some(m.clone()),
            (None, TaskKind::Feedback) => Some(RobotModel::KinematicCar { wheelbase: default_wheelbase() }),
            (None, TaskKind::UwvCorrect) => Some(RobotModel::Underwater3d),
            (None, _) if needs_model => return Err(scenario_err("model", "required for this task")),
            (None, _) => None,
        };
        if let (Some(m), Some(t)) = (&model, &trajectory) {
            if m.dim() != t.dim() {
                return Err(scenario_err(
                    "model",
                    format!("{} works on {}-D trajectories, input is {}-D", m.name(), m.dim().as_usize(), t.dim().as_usize()),
                ));
            }
        }
        let params = raw.params.clone().unwrap_or_else(|| Value::Object(Default::default()));
        let traj_dim = trajectory.as_ref().map(Trajectory::dim);
        let task = match raw.task {
            TaskKind::CorrectPosition => {
                let p: PositionParams = parse_at("params", &params)?;
                let t = trajectory.as_ref().unwrap();
                point(&p.target, t.dim(), "params.target")?;
                check_index(p.tau, t, "params.tau")?;
                check_index(p.tau2, t, "params.tau2")?;
                if p.method == PositionMethod::Class2TwoStep && (p.tau.is_none() || p.tau2.is_none()) {
                    return Err(scenario_err("params.tau2", "class2_two_step needs 'tau' and 'tau2'"));
                }
                Task::CorrectPosition(p)
            }
            TaskKind::CorrectOrientation => Task::CorrectOrientation(parse_at("params", &params)?),
            TaskKind::CorrectPose => {
                let p: PoseParams = parse_at("params", &params)?;
                point(&p.target, traj_dim.unwrap(), "params.target")?;
                Task::CorrectPose(p)
            }
            TaskKind::UwvCorrect => {
                let p: UwvParams = parse_at("params", &params)?;
                point(&p.target, Dim::Three, "params.target")?;
                check_index(p.tau, trajectory.as_ref().unwrap(), "params.tau")?;
                Task::UwvCorrect(p)
            }
            TaskKind::Avoid => {
                let p: AvoidParams = parse_at("params", &params)?;
                p.obstacles.validate().map_err(|e| scenario_err("params.obstacles", e.to_string()))?;
                if !(p.clearance >= 0.0) {
                    return Err(scenario_err("params.clearance", "must be non-negative"));
                }
                Task::Avoid(p)
            }
            TaskKind::Doorway => {
                let p: DoorwayParams = parse_at("params", &params)?;
                if p.index.is_some() == p.time.is_some() {
                    return Err(scenario_err("params.index", "exactly one of 'index' and 'time' is required"));
                }
                check_index(p.index, trajectory.as_ref().unwrap(), "params.index")?;
                Task::Doorway(p)
            }
            TaskKind::Feedback => {
                let mut p: FeedbackParams = parse_at("params", &params)?;
                if let Some(seed) = raw.seed {
                    p.noise.seed = seed;
                }
                p.noise.validate().map_err(|e| scenario_err("params.noise", e.to_string()))?;
                if let Some(plan) = &p.plan {
                    plan.validate().map_err(|e| scenario_err("params.plan", e.to_string()))?;
                }
                if p.runs == 0 {
                    return Err(scenario_err("params.runs", "must be at least 1"));
                }
                if p.corrections.is_empty() {
                    return Err(scenario_err("params.corrections", "at least one entry required"));
                }
                if !matches!(model, Some(RobotModel::KinematicCar { .. })) {
                    return Err(scenario_err("model", "feedback simulation needs a kinematic_car model"));
                }
                Task::Feedback(p)
            }
            TaskKind::Gapfill => {
                let p: GapParams = parse_at("params", &params)?;
                p.spec.validate().map_err(|e| scenario_err("params.spec", e.to_string()))?;
                let second = load_source(&p.second, "params.second", base, dt, &mut input_hashes)?;
                Task::Gapfill(p, second)
            }
            TaskKind::RoundtripCheck => {
                let p: RoundtripParams = parse_at("params", &params)?;
                for (i, name) in p.fixtures.iter().enumerate() {
                    if !fixtures::NAMES.contains(&name.as_str()) {
                        return Err(scenario_err(format!("params.fixtures[{i}]"), format!("unknown generator '{name}'")));
                    }
                }
                if let Some(models) = &p.models {
                    for (i, m) in models.iter().enumerate() {
                        m.validate().map_err(|e| scenario_err(format!("params.models[{i}]"), e.to_string()))?;
                    }
                }
                Task::RoundtripCheck(p)
            }
        };
        Ok(Scenario {
            kind: raw.task,
            task,
            model,
            trajectory,
            output_dir: raw.output_dir.map(|d| base.join(d)),
            seed: raw.seed,
            dt,
            echo: value,
            input_hashes,
        })
    }
}
