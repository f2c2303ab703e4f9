use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report.
///
/// `code()` gives a stable snake-case identifier used by the CLI report and the
/// C interface; `is_input_error()` separates malformed input from task failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("trajectory has {len} samples, at least {min} required")]
    TrajectoryTooShort { len: usize, min: usize },
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),
    #[error("non-uniform time grid at row {index} (deviation {deviation:e} s)")]
    NonUniformGrid { index: usize, deviation: f64 },
    #[error("speed below minimum at sample {index}")]
    ZeroVelocity { index: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("singular matrix: {0}")]
    SingularMatrix(String),
    #[error("map does not fix the trajectory point at tau (residual {residual:e})")]
    FixedPointMismatch { residual: f64 },
    #[error("sample {index} is an inflection point")]
    InflectionAtTau { index: usize },
    #[error("tangent at sample {index} goes through the final position")]
    TangentThroughEndpoint { index: usize },
    #[error("no tangent of the trajectory is parallel to the requested displacement")]
    NoAccessibleTangent,
    #[error("only inflection tangents are parallel to the requested displacement")]
    InflectionOnlyMatches,
    #[error("no tangent line goes through the final position")]
    NoTangentThroughEndpoint,
    #[error("target orientation is outside every accessible half-plane")]
    TargetOrientationInaccessible,
    #[error("tangents at samples {tau1} and {tau2} are collinear")]
    CollinearTangents { tau1: usize, tau2: usize },
    #[error("orientation target not bracketed for alpha in [-{alpha_max}, {alpha_max}]")]
    RootNotBracketed { alpha_max: f64 },
    #[error("correction system is rank deficient at sample {index}")]
    DegenerateU { index: usize },
    #[error("singular steering configuration at sample {index}")]
    SingularSteering { index: usize },
    #[error("Euler-angle singularity (pitch near +-pi/2) at sample {index}")]
    EulerSingularity { index: usize },
    #[error("trajectory is not admissible: {0}")]
    Inadmissible(String),
    #[error("no collision-free waypoint could be found")]
    NoCollisionFreeWaypoint,
    #[error("obstacle avoidance did not converge within {cap} iterations")]
    IterationCapExceeded { cap: usize },
    #[error("stub too short: counter-steering needs {required:.4} rad/s, cap is {cap:.4} rad/s")]
    StubTooShort { required: f64, cap: f64 },
    #[error("speed blend infeasible: needs {required:.4} m/s^2, cap is {cap:.4} m/s^2")]
    SpeedBlendInfeasible { required: f64, cap: f64 },
    #[error("check failed: {0}")]
    CheckFailed(String),
    #[error("unknown generator '{0}'")]
    UnknownGenerator(String),
    #[error("csv line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("scenario error at '{path}': {message}")]
    Scenario { path: String, message: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::TrajectoryTooShort { .. } => "trajectory_too_short",
            Error::InvalidTrajectory(_) => "invalid_trajectory",
            Error::NonUniformGrid { .. } => "non_uniform_grid",
            Error::ZeroVelocity { .. } => "zero_velocity",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::SingularMatrix(_) => "singular_matrix",
            Error::FixedPointMismatch { .. } => "fixed_point_mismatch",
            Error::InflectionAtTau { .. } => "inflection_at_tau",
            Error::TangentThroughEndpoint { .. } => "tangent_through_endpoint",
            Error::NoAccessibleTangent => "no_accessible_tangent",
            Error::InflectionOnlyMatches => "inflection_only_matches",
            Error::NoTangentThroughEndpoint => "no_tangent_through_endpoint",
            Error::TargetOrientationInaccessible => "target_orientation_inaccessible",
            Error::CollinearTangents { .. } => "collinear_tangents",
            Error::RootNotBracketed { .. } => "root_not_bracketed",
            Error::DegenerateU { .. } => "degenerate_u",
            Error::SingularSteering { .. } => "singular_steering",
            Error::EulerSingularity { .. } => "euler_singularity",
            Error::Inadmissible(_) => "inadmissible",
            Error::NoCollisionFreeWaypoint => "no_collision_free_waypoint",
            Error::IterationCapExceeded { .. } => "iteration_cap_exceeded",
            Error::StubTooShort { .. } => "stub_too_short",
            Error::SpeedBlendInfeasible { .. } => "speed_blend_infeasible",
            Error::CheckFailed(_) => "check_failed",
            Error::UnknownGenerator(_) => "unknown_generator",
            Error::Csv { .. } => "csv",
            Error::Scenario { .. } => "scenario",
            Error::Io(_) => "io",
        }
    }

    /// Malformed input (files, schema, parameters) rather than a failed task.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Csv { .. }
                | Error::Scenario { .. }
                | Error::Io(_)
                | Error::UnknownGenerator(_)
                | Error::NonUniformGrid { .. }
                | Error::InvalidParameter(_)
        )
    }
}
