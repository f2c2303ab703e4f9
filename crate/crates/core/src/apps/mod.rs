//! Applications: obstacle avoidance and doorway constraints, feedback
//! control under command noise, and gap filling between two trajectories.

mod feedback;
mod gap;
mod obstacles;

pub use feedback::{feedback_simulate, FeedbackOptions, FeedbackPlan, FeedbackStats, NoiseModel};
pub use gap::{gap_fill, GapFill, GapSpec};
pub use obstacles::{avoid_obstacles, doorway_constraint, AvoidOptions, Obstacle, ObstacleSet, Staged};
