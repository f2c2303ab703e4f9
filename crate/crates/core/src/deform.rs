//! Affine maps of the base space and the admissible deformation families.
//!
//! A deformation at sample `tau` leaves the trajectory untouched before `tau`
//! and replaces every later sample `C(t)` by `F(C(t))`. Matrices are kept in
//! world coordinates so that application and composition need no frame data.

use nalgebra::{Matrix2, Matrix3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{ModelClass, RobotModel};
use crate::trajectory::{cross2, frame_at, local_derivatives, Dim, FrameSample, Point, Trajectory};

/// Determinant magnitude below which a matrix counts as singular.
pub const SINGULAR_DET: f64 = 1e-12;
/// Relative cross-product guard of the class-II matrix.
pub const CLASS2_COND: f64 = 1e-8;

/// `F(P) = fixed_point + M (P - fixed_point) + translation`.
///
/// Deformations have zero translation; compositions of deformations with
/// different fixed points may not.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AffineMapJson", into = "AffineMapJson")]
pub struct AffineMap {
    dim: Dim,
    fixed_point: Point,
    matrix: Matrix3<f64>,
    translation: Point,
}

#[derive(Serialize, Deserialize)]
struct AffineMapJson {
    fixed_point: Vec<f64>,
    matrix: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    translation: Option<Vec<f64>>,
}

impl From<AffineMap> for AffineMapJson {
    fn from(m: AffineMap) -> Self {
        let n = m.dim.as_usize();
        let translation = (m.translation != Point::zeros()).then(|| m.translation.iter().take(n).copied().collect());
        AffineMapJson {
            fixed_point: m.fixed_point.iter().take(n).copied().collect(),
            matrix: (0..n).map(|i| (0..n).map(|j| m.matrix[(i, j)]).collect()).collect(),
            translation,
        }
    }
}

impl TryFrom<AffineMapJson> for AffineMap {
    type Error = Error;

    fn try_from(j: AffineMapJson) -> Result<Self> {
        let dim = Dim::from_usize(j.fixed_point.len())?;
        let n = dim.as_usize();
        if j.matrix.len() != n || j.matrix.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: j.matrix.len() });
        }
        let mut matrix = Matrix3::identity();
        let mut fixed_point = Point::zeros();
        let mut translation = Point::zeros();
        for i in 0..n {
            fixed_point[i] = j.fixed_point[i];
            for k in 0..n {
                matrix[(i, k)] = j.matrix[i][k];
            }
        }
        if let Some(t) = j.translation {
            if t.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: t.len() });
            }
            for i in 0..n {
                translation[i] = t[i];
            }
        }
        let map = AffineMap::deformation(dim, fixed_point, matrix)?;
        Ok(AffineMap { translation, ..map })
    }
}

impl AffineMap {
    pub fn identity(dim: Dim, fixed_point: Point) -> Self {
        AffineMap { dim, fixed_point, matrix: Matrix3::identity(), translation: Point::zeros() }
    }

    /// Map with the given fixed point and linear part. Planar maps use the
    /// upper-left 2x2 block only.
    pub fn deformation(dim: Dim, fixed_point: Point, matrix: Matrix3<f64>) -> Result<Self> {
        let matrix = normalize(dim, matrix);
        let det = matrix.determinant();
        if !(det.abs() > SINGULAR_DET) || !matrix.iter().all(|x| x.is_finite()) {
            return Err(Error::SingularMatrix(format!("determinant {det:e}")));
        }
        Ok(AffineMap { dim, fixed_point, matrix, translation: Point::zeros() })
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn fixed_point(&self) -> Point {
        self.fixed_point
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.matrix
    }

    pub fn translation(&self) -> Point {
        self.translation
    }

    /// Evaluated as `P + (M - I)(P - fixed_point) + translation`, which is
    /// exact for the identity and at the fixed point.
    pub fn apply_point(&self, p: &Point) -> Point {
        p + (self.matrix - Matrix3::identity()) * (p - self.fixed_point) + self.translation
    }

    pub fn apply_vector(&self, v: &Point) -> Point {
        self.matrix * v
    }

    /// Frobenius distance of the linear part from the identity.
    pub fn distance_from_identity(&self) -> f64 {
        (self.matrix - Matrix3::identity()).norm()
    }

    pub fn is_identity(&self) -> bool {
        self.matrix == Matrix3::identity() && self.translation == Point::zeros()
    }

    pub fn inverse(&self) -> Result<AffineMap> {
        let inv = self
            .matrix
            .try_inverse()
            .ok_or_else(|| Error::SingularMatrix("map is not invertible".into()))?;
        // F^-1(Q) = fp + M^-1 (Q - fp - t)
        Ok(AffineMap {
            dim: self.dim,
            fixed_point: self.fixed_point,
            matrix: inv,
            translation: -(inv * self.translation),
        })
    }
}

fn normalize(dim: Dim, mut m: Matrix3<f64>) -> Matrix3<f64> {
    if dim == Dim::Two {
        m[(0, 2)] = 0.0;
        m[(1, 2)] = 0.0;
        m[(2, 0)] = 0.0;
        m[(2, 1)] = 0.0;
        m[(2, 2)] = 1.0;
    }
    m
}

/// `f2 o f1`.
pub fn compose(f2: &AffineMap, f1: &AffineMap) -> Result<AffineMap> {
    if f2.dim != f1.dim {
        return Err(Error::DimensionMismatch { expected: f1.dim.as_usize(), found: f2.dim.as_usize() });
    }
    let matrix = f2.matrix * f1.matrix;
    let translation = f2.fixed_point + f2.matrix * (f1.fixed_point + f1.translation - f2.fixed_point)
        + f2.translation
        - f1.fixed_point;
    Ok(AffineMap { dim: f1.dim, fixed_point: f1.fixed_point, matrix, translation })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassIParams {
    pub tau_index: usize,
    pub lambda: f64,
    pub mu: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassIIParams {
    pub tau_index: usize,
    pub lambda: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Uwv6Params {
    pub tau_index: usize,
    pub lambda: f64,
    pub mu: f64,
    pub nu: f64,
    pub xi: f64,
    pub sigma: f64,
    pub chi: f64,
}

impl Uwv6Params {
    pub fn norm(&self) -> f64 {
        [self.lambda, self.mu, self.nu, self.xi, self.sigma, self.chi]
            .iter()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    /// Matrix in the local basis `{u_par, w1, w2}`.
    pub fn basis_matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            1.0, self.lambda, self.mu,
            0.0, 1.0 + self.nu, self.xi,
            0.0, self.sigma, 1.0 + self.chi,
        )
    }
}

/// World matrix of the class-I family: `Q [[1, lambda], [0, 1 + mu]] Q^T`.
pub fn class1_matrix(frame: &FrameSample, lambda: f64, mu: f64) -> Matrix3<f64> {
    let q = Matrix2::new(frame.u_par.x, frame.w1.x, frame.u_par.y, frame.w1.y);
    let mp = Matrix2::new(1.0, lambda, 0.0, 1.0 + mu);
    let m = q * mp * q.transpose();
    Matrix3::new(m[(0, 0)], m[(0, 1)], 0.0, m[(1, 0)], m[(1, 1)], 0.0, 0.0, 0.0, 1.0)
}

pub fn class1_map(traj: &Trajectory, p: &ClassIParams) -> Result<AffineMap> {
    planar(traj)?;
    if (1.0 + p.mu).abs() <= SINGULAR_DET {
        return Err(Error::SingularMatrix("1 + mu = 0".into()));
    }
    let frame = frame_at(traj, p.tau_index)?;
    AffineMap::deformation(Dim::Two, traj.point(p.tau_index), class1_matrix(&frame, p.lambda, p.mu))
}

/// The class-II generator `B` with `B v = 0` and `B a = v`.
///
/// `a_noise` is the rounding-noise acceleration floor of the sampled data;
/// samples whose normal acceleration is below it are treated as inflections.
pub fn class2_generator(v: &Point, a: &Point, a_noise: f64, index: usize) -> Result<Matrix3<f64>> {
    let c = cross2(v, a);
    let speed = v.norm();
    if !(c.abs() >= speed * (CLASS2_COND * a.norm()).max(a_noise)) || c == 0.0 {
        return Err(Error::InflectionAtTau { index });
    }
    // B = v n^T / c with n = (-v_y, v_x)
    Ok(Matrix3::new(
        -v.x * v.y / c, v.x * v.x / c, 0.0,
        -v.y * v.y / c, v.y * v.x / c, 0.0,
        0.0, 0.0, 0.0,
    ))
}

pub fn class2_map(traj: &Trajectory, p: &ClassIIParams) -> Result<AffineMap> {
    planar(traj)?;
    if p.tau_index > traj.last_index() {
        return Err(Error::InvalidParameter(format!("tau index {} out of range", p.tau_index)));
    }
    let (v, a) = local_derivatives(traj, p.tau_index);
    let b = class2_generator(&v, &a, traj.acceleration_noise(), p.tau_index)?;
    AffineMap::deformation(Dim::Two, traj.point(p.tau_index), Matrix3::identity() + b * p.lambda)
}

pub fn uwv_map(traj: &Trajectory, p: &Uwv6Params) -> Result<AffineMap> {
    if traj.dim() != Dim::Three {
        return Err(Error::DimensionMismatch { expected: 3, found: traj.dim().as_usize() });
    }
    let frame = frame_at(traj, p.tau_index)?;
    uwv_map_at(&frame, traj.point(p.tau_index), p)
}

pub(crate) fn uwv_map_at(frame: &FrameSample, fixed_point: Point, p: &Uwv6Params) -> Result<AffineMap> {
    let mp = p.basis_matrix();
    if mp.determinant().abs() <= SINGULAR_DET {
        return Err(Error::SingularMatrix("six-parameter basis matrix".into()));
    }
    let q = frame.basis();
    AffineMap::deformation(Dim::Three, fixed_point, q * mp * q.transpose())
}

fn planar(traj: &Trajectory) -> Result<()> {
    if traj.dim() != Dim::Two {
        return Err(Error::DimensionMismatch { expected: 2, found: traj.dim().as_usize() });
    }
    Ok(())
}

fn check_fixed_point(traj: &Trajectory, map: &AffineMap, tau: usize) -> Result<()> {
    if map.dim != traj.dim() {
        return Err(Error::DimensionMismatch { expected: traj.dim().as_usize(), found: map.dim.as_usize() });
    }
    if tau > traj.last_index() {
        return Err(Error::InvalidParameter(format!("tau index {tau} out of range")));
    }
    let c = traj.point(tau);
    let residual = (map.apply_point(&c) - c).norm();
    if residual > 1e-9 * c.norm().max(1.0) {
        return Err(Error::FixedPointMismatch { residual });
    }
    Ok(())
}

/// Deform `traj` by `map` from sample `tau` on.
pub fn apply(traj: &Trajectory, map: &AffineMap, tau: usize) -> Result<Trajectory> {
    check_fixed_point(traj, map, tau)?;
    let mut points = traj.points().to_vec();
    for p in points.iter_mut().skip(tau) {
        *p = map.apply_point(p);
    }
    Trajectory::new(traj.dim(), traj.dt(), points)
}

/// Piecewise application: `segments[i].1` acts on samples
/// `[segments[i].0, segments[i+1].0)`, the last one up to the end. The maps
/// are typically running compositions of successive deformations.
pub fn apply_segments(traj: &Trajectory, segments: &[(usize, AffineMap)]) -> Result<Trajectory> {
    let mut points = traj.points().to_vec();
    for (i, (tau, map)) in segments.iter().enumerate() {
        if map.dim != traj.dim() {
            return Err(Error::DimensionMismatch { expected: traj.dim().as_usize(), found: map.dim.as_usize() });
        }
        let end = segments.get(i + 1).map_or(points.len(), |s| s.0);
        if *tau > end || end > points.len() {
            return Err(Error::InvalidParameter("segments must be sorted by tau".into()));
        }
        for p in &mut points[*tau..end] {
            *p = map.apply_point(p);
        }
    }
    Trajectory::new(traj.dim(), traj.dt(), points)
}

/// Local admissibility conditions of a map at `tau` for a model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapAdmissibility {
    pub admissible: bool,
    pub fixed_point_residual: f64,
    /// `|M v - v| / |v|`.
    pub velocity_residual: f64,
    /// Normal part of `M a - a` relative to `|a|`; class-II models only.
    pub acceleration_residual: Option<f64>,
}

pub fn admissibility_of_map(traj: &Trajectory, map: &AffineMap, tau: usize, model: &RobotModel) -> MapAdmissibility {
    let (v, a) = local_derivatives(traj, tau.min(traj.last_index()));
    let c = traj.point(tau.min(traj.last_index()));
    let fixed_point_residual = (map.apply_point(&c) - c).norm();
    let velocity_residual = (map.apply_vector(&v) - v).norm() / v.norm().max(f64::MIN_POSITIVE);
    let tol = 1e-9 * (1.0 + map.matrix.norm());
    let acceleration_residual = (model.class() == ModelClass::ClassII).then(|| {
        let da = map.apply_vector(&a) - a;
        let u = v / v.norm().max(f64::MIN_POSITIVE);
        cross2(&u, &da).abs() / a.norm().max(f64::MIN_POSITIVE)
    });
    let admissible = map.dim == traj.dim()
        && tau <= traj.last_index()
        && fixed_point_residual <= 1e-9 * c.norm().max(1.0)
        && velocity_residual <= tol
        && acceleration_residual.is_none_or(|r| r <= tol);
    MapAdmissibility { admissible, fixed_point_residual, velocity_residual, acceleration_residual }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(dt: f64, n: usize) -> Trajectory {
        Trajectory::sample(Dim::Two, dt, n, |t| Point::new(t.cos(), t.sin(), 0.0)).unwrap()
    }

    #[test]
    fn class1_identity_and_velocity_fixed() {
        let traj = circle(1e-3, 2000);
        let m = class1_map(&traj, &ClassIParams { tau_index: 500, lambda: 0.0, mu: 0.0 }).unwrap();
        assert!((m.matrix() - Matrix3::identity()).norm() < 1e-15);
        let m = class1_map(&traj, &ClassIParams { tau_index: 500, lambda: 0.7, mu: -0.4 }).unwrap();
        let (v, _) = local_derivatives(&traj, 500);
        assert!((m.apply_vector(&v) - v).norm() < 1e-12);
    }

    #[test]
    fn class1_world_matrix_hand_value() {
        // tangent (0,1), normal (-1,0): Q [[1,1],[0,1]] Q^T = [[1,0],[-1,1]]
        let traj = circle(1e-3, 2000);
        let frame = FrameSample {
            u_par: Point::new(0.0, 1.0, 0.0),
            w1: Point::new(-1.0, 0.0, 0.0),
            w2: Point::z(),
            ..frame_at(&traj, 0).unwrap()
        };
        let m = class1_matrix(&frame, 1.0, 0.0);
        let expected = Matrix3::new(1.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!((m - expected).norm() < 1e-15);
        assert!(matches!(
            class1_map(&traj, &ClassIParams { tau_index: 3, lambda: 0.0, mu: -1.0 }),
            Err(Error::SingularMatrix(_))
        ));
    }

    #[test]
    fn class2_generator_on_circle() {
        let b = class2_generator(&Point::new(0.0, 1.0, 0.0), &Point::new(-1.0, 0.0, 0.0), 0.0, 0).unwrap();
        let expected = Matrix3::new(0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        assert!((b - expected).norm() < 1e-15);
    }

    #[test]
    fn class2_rejects_straight_line() {
        let line = Trajectory::sample(Dim::Two, 0.01, 50, |t| Point::new(t, 2.0 * t, 0.0)).unwrap();
        assert!(matches!(
            class2_map(&line, &ClassIIParams { tau_index: 20, lambda: 0.1 }),
            Err(Error::InflectionAtTau { index: 20 })
        ));
    }

    #[test]
    fn uwv_structure() {
        let helix = Trajectory::sample(Dim::Three, 1e-3, 1000, |t| Point::new(t.cos(), t.sin(), t)).unwrap();
        let p = Uwv6Params { tau_index: 400, lambda: 0.3, mu: -0.2, nu: 0.1, xi: 0.05, sigma: -0.3, chi: 0.2 };
        let m = uwv_map(&helix, &p).unwrap();
        let (v, _) = local_derivatives(&helix, 400);
        assert!((m.apply_vector(&v) - v).norm() < 1e-12);
        assert!(((p.basis_matrix() - Matrix3::identity()).norm() - p.norm()).abs() < 1e-15);
        let id = uwv_map(&helix, &Uwv6Params { tau_index: 400, ..Default::default() }).unwrap();
        assert!((id.matrix() - Matrix3::identity()).norm() < 1e-15);
    }

    #[test]
    fn apply_identity_and_prefix() {
        let traj = circle(1e-2, 200);
        let id = AffineMap::identity(Dim::Two, traj.point(50));
        assert_eq!(apply(&traj, &id, 50).unwrap(), traj);
        let m = class2_map(&traj, &ClassIIParams { tau_index: 50, lambda: 0.3 }).unwrap();
        let out = apply(&traj, &m, 50).unwrap();
        assert_eq!(&out.points()[..50], &traj.points()[..50]);
        let wrong = class2_map(&traj, &ClassIIParams { tau_index: 60, lambda: 0.3 }).unwrap();
        assert!(matches!(apply(&traj, &wrong, 50), Err(Error::FixedPointMismatch { .. })));
    }

    #[test]
    fn compose_and_inverse() {
        let traj = circle(1e-2, 200);
        let f = class1_map(&traj, &ClassIParams { tau_index: 40, lambda: 0.4, mu: 0.3 }).unwrap();
        let g = class2_map(&traj, &ClassIIParams { tau_index: 120, lambda: -0.6 }).unwrap();
        let id = AffineMap::identity(Dim::Two, Point::new(3.0, -1.0, 0.0));
        let p = Point::new(0.3, 2.0, 0.0);
        assert!((compose(&id, &f).unwrap().apply_point(&p) - f.apply_point(&p)).norm() < 1e-15);
        let gf = compose(&g, &f).unwrap();
        assert!((gf.apply_point(&p) - g.apply_point(&f.apply_point(&p))).norm() < 1e-12);
        let back = compose(&gf, &gf.inverse().unwrap()).unwrap();
        assert!((back.apply_point(&p) - p).norm() < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let traj = circle(1e-2, 200);
        let f = class2_map(&traj, &ClassIIParams { tau_index: 40, lambda: 0.25 }).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert!(s.contains("\"fixed_point\"") && s.contains("\"matrix\""));
        let back: AffineMap = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
        assert!(serde_json::from_str::<AffineMap>(r#"{"fixed_point":[0,0],"matrix":[[0,0],[0,0]]}"#).is_err());
    }

    #[test]
    fn map_admissibility_by_class() {
        let traj = circle(1e-3, 2000);
        let car = RobotModel::KinematicCar { wheelbase: 1.0 };
        let c1 = class1_map(&traj, &ClassIParams { tau_index: 700, lambda: 0.4, mu: 0.3 }).unwrap();
        assert!(admissibility_of_map(&traj, &c1, 700, &RobotModel::Type21).admissible);
        assert!(!admissibility_of_map(&traj, &c1, 700, &car).admissible);
        let c2 = class2_map(&traj, &ClassIIParams { tau_index: 700, lambda: 0.4 }).unwrap();
        assert!(admissibility_of_map(&traj, &c2, 700, &car).admissible);
    }
}
