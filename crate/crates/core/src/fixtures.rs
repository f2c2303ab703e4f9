//! Built-in analytic trajectories.
//!
//! Each generator samples its curve on a uniform grid that ends exactly at
//! the requested duration; the step is the requested `dt` rounded so that
//! the duration is a whole number of steps.

use std::f64::consts::{PI, TAU};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::{Dim, Point, Trajectory, MIN_SAMPLES};

pub const NAMES: &[&str] = &["circle", "scurve", "helix", "curvature_step", "corner", "line", "seed_arc"];

/// Counter-clockwise circle starting at the origin heading along +x.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Circle {
    pub radius: f64,
    pub speed: f64,
    pub duration: f64,
}

impl Default for Circle {
    fn default() -> Self {
        Circle { radius: 1.0, speed: 1.0, duration: PI }
    }
}

/// One period of a sine: `(length s, amplitude sin(2 pi s))`, `s = t / duration`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SCurve {
    pub length: f64,
    pub amplitude: f64,
    pub duration: f64,
}

impl Default for SCurve {
    fn default() -> Self {
        SCurve { length: 2.0, amplitude: 0.3, duration: 2.0 }
    }
}

/// `(r cos t, r sin t, pitch t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Helix {
    pub radius: f64,
    pub pitch: f64,
    pub duration: f64,
}

impl Default for Helix {
    fn default() -> Self {
        Helix { radius: 1.0, pitch: 1.0, duration: 3.0 }
    }
}

/// Straight segment followed by a circular arc: continuous velocity,
/// curvature jump at the junction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurvatureStep {
    pub straight: f64,
    pub radius: f64,
    pub arc: f64,
    pub speed: f64,
}

impl Default for CurvatureStep {
    fn default() -> Self {
        CurvatureStep { straight: 1.0, radius: 1.0, arc: 1.0, speed: 1.0 }
    }
}

/// Two straight legs meeting at a right angle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Corner {
    pub leg: f64,
    pub speed: f64,
}

impl Default for Corner {
    fn default() -> Self {
        Corner { leg: 1.0, speed: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Line {
    pub speed: f64,
    pub heading: f64,
    pub duration: f64,
}

impl Default for Line {
    fn default() -> Self {
        Line { speed: 1.0, heading: 0.0, duration: 2.0 }
    }
}

/// Gently curved planning seed at vehicle scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedArc {
    pub radius: f64,
    pub speed: f64,
    pub duration: f64,
}

impl Default for SeedArc {
    fn default() -> Self {
        SeedArc { radius: 20.0, speed: 5.0, duration: 5.6 }
    }
}

fn grid(duration: f64, dt: f64) -> Result<(usize, f64)> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::InvalidParameter(format!("duration must be positive, got {duration}")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let n = ((duration / dt).round() as usize).max(MIN_SAMPLES - 1);
    Ok((n, duration / n as f64))
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {x}")))
    }
}

impl Circle {
    pub fn sample(&self, dt: f64) -> Result<Trajectory> {
        positive("radius", self.radius)?;
        positive("speed", self.speed)?;
        let (n, h) = grid(self.duration, dt)?;
        let (r, w) = (self.radius, self.speed / self.radius);
        Trajectory::sample(Dim::Two, h, n, |t| Point::new(r * (w * t).sin(), r * (1.0 - (w * t).cos()), 0.0))
    }
}

impl SCurve {
    pub fn sample(&self, dt: f64) -> Result<Trajectory> {
        positive("length", self.length)?;
        let (n, h) = grid(self.duration, dt)?;
        let (l, a, d) = (self.length, self.amplitude, self.duration);
        Trajectory::sample(Dim::Two, h, n, |t| Point::new(l * t / d, a * (TAU * t / d).sin(), 0.0))
    }
}

impl Helix {
    pub fn sample(&self, dt: f64) -> Result<Trajectory> {
        positive("radius", self.radius)?;
        let (n, h) = grid(self.duration, dt)?;
        let (r, c) = (self.radius, self.pitch);
        Trajectory::sample(Dim::Three, h, n, |t| Point::new(r * t.cos(), r * t.sin(), c * t))
    }
}

impl CurvatureStep {
    pub fn sample(&self, dt: f64) -> Result<Trajectory> {
        positive("straight", self.straight)?;
        positive("radius", self.radius)?;
        positive("arc", self.arc)?;
        positive("speed", self.speed)?;
        let t0 = self.straight / self.speed;
        let (n, h) = grid(t0 + self.arc * self.radius / self.speed, dt)?;
        let (r, v, s0) = (self.radius, self.speed, self.straight);
        Trajectory::sample(Dim::Two, h, n, |t| {
            if t <= t0 {
                Point::new(v * t, 0.0, 0.0)
            } else {
                let phi = v * (t - t0) / r;
                Point::new(s0 + r * phi.sin(), r * (1.0 - phi.cos()), 0.0)
            }
        })
    }
}

impl Corner {
    pub fn sample(&self, dt: f64) -> Result<Trajectory> {
        positive("leg", self.leg)?;
        positive("speed", self.speed)?;
        let t0 = self.leg / self.speed;
        let (n, h) = grid(2.0 * t0, dt)?;
        let v = self.speed;
        Trajectory::sample(Dim::Two, h, n, |t| {
            if t <= t0 {
                Point::new(v * t, 0.0, 0.0)
            } else {
                Point::new(v * t0, v * (t - t0), 0.0)
            }
        })
    }
}

impl Line {
    pub fn sample(&self, dt: f64) -> Result<Trajectory> {
        positive("speed", self.speed)?;
        let (n, h) = grid(self.duration, dt)?;
        let (c, s) = (self.heading.cos(), self.heading.sin());
        Trajectory::sample(Dim::Two, h, n, |t| Point::new(self.speed * t * c, self.speed * t * s, 0.0))
    }
}

impl SeedArc {
    pub fn sample(&self, dt: f64) -> Result<Trajectory> {
        Circle { radius: self.radius, speed: self.speed, duration: self.duration }.sample(dt)
    }
}

fn parse<T: DeserializeOwned + Default>(params: Option<&serde_json::Value>) -> Result<T> {
    match params {
        None => Ok(T::default()),
        Some(v) => serde_path_to_error::deserialize(v).map_err(|e| Error::Scenario {
            path: format!("params.{}", e.path()),
            message: e.inner().to_string(),
        }),
    }
}

/// Sample the named generator with optional JSON parameters.
pub fn generate(name: &str, params: Option<&serde_json::Value>, dt: f64) -> Result<Trajectory> {
    match name {
        "circle" => parse::<Circle>(params)?.sample(dt),
        "scurve" => parse::<SCurve>(params)?.sample(dt),
        "helix" => parse::<Helix>(params)?.sample(dt),
        "curvature_step" => parse::<CurvatureStep>(params)?.sample(dt),
        "corner" => parse::<Corner>(params)?.sample(dt),
        "line" => parse::<Line>(params)?.sample(dt),
        "seed_arc" => parse::<SeedArc>(params)?.sample(dt),
        other => Err(Error::UnknownGenerator(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_circle_ends_at_diameter() {
        let c = Circle::default().sample(1e-3).unwrap();
        assert!((c.end() - Point::new(0.0, 2.0, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(generate("spiral", None, 0.01), Err(Error::UnknownGenerator(_))));
    }

    #[test]
    fn bad_param_reports_path() {
        let v = serde_json::json!({ "radius": "big" });
        match generate("circle", Some(&v), 0.01) {
            Err(Error::Scenario { path, .. }) => assert_eq!(path, "params.radius"),
            other => panic!("{other:?}"),
        }
    }
}
