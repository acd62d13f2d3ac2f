//! Euclidean and Minkowski linear algebra, model conversions and hyperbolic metric primitives.
//!
//! Minkowski vectors use the form `-x0*y0 + x1*y1 + x2*y2 + x3*y3`. Points of the Klein model
//! may lie outside the unit ball, where they stand for de Sitter points (hyperideal vertices).

use crate::error::{Error, Result};
use crate::rigidity::FlexField;
use nalgebra::{DMatrix, Matrix4, Vector3, Vector4};
use serde::{Deserialize, Serialize};

pub type Vec3 = Vector3<f64>;
pub type Vec4 = Vector4<f64>;

/// Tolerance used when checking that a point lies on a quadric.
pub const QUADRIC_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Euclidean,
    Klein,
    Hyperboloid,
    #[serde(rename = "desitter")]
    DeSitter,
    #[serde(rename = "halfspace")]
    HalfSpace,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Euclidean => "euclidean",
            Model::Klein => "klein",
            Model::Hyperboloid => "hyperboloid",
            Model::DeSitter => "desitter",
            Model::HalfSpace => "halfspace",
        }
    }

    pub fn parse(s: &str) -> Result<Model> {
        Ok(match s {
            "euclidean" => Model::Euclidean,
            "klein" => Model::Klein,
            "hyperboloid" => Model::Hyperboloid,
            "desitter" => Model::DeSitter,
            "halfspace" => Model::HalfSpace,
            other => return Err(Error::InvalidInput(format!("unknown model '{other}'"))),
        })
    }

    pub fn is_hyperbolic(self) -> bool {
        self != Model::Euclidean
    }
}

/// A point tagged by the model it lives in. Half-space points with third coordinate 0 are ideal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelPoint {
    Euclidean(Vec3),
    Klein(Vec3),
    Hyperboloid(Vec4),
    DeSitter(Vec4),
    HalfSpace(Vec3),
}

impl ModelPoint {
    pub fn model(&self) -> Model {
        match self {
            ModelPoint::Euclidean(_) => Model::Euclidean,
            ModelPoint::Klein(_) => Model::Klein,
            ModelPoint::Hyperboloid(_) => Model::Hyperboloid,
            ModelPoint::DeSitter(_) => Model::DeSitter,
            ModelPoint::HalfSpace(_) => Model::HalfSpace,
        }
    }

    pub fn from_coords(model: Model, c: &[f64]) -> Result<ModelPoint> {
        let need = match model {
            Model::Hyperboloid | Model::DeSitter => 4,
            _ => 3,
        };
        if c.len() != need {
            return Err(Error::InvalidPoint(format!(
                "{} point needs {need} coordinates, got {}",
                model.name(),
                c.len()
            )));
        }
        if c.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidPoint("non-finite coordinate".into()));
        }
        let p = match model {
            Model::Euclidean => ModelPoint::Euclidean(Vec3::new(c[0], c[1], c[2])),
            Model::Klein => ModelPoint::Klein(Vec3::new(c[0], c[1], c[2])),
            Model::HalfSpace => ModelPoint::HalfSpace(Vec3::new(c[0], c[1], c[2])),
            Model::Hyperboloid => ModelPoint::Hyperboloid(Vec4::new(c[0], c[1], c[2], c[3])),
            Model::DeSitter => ModelPoint::DeSitter(Vec4::new(c[0], c[1], c[2], c[3])),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn coords(&self) -> Vec<f64> {
        match self {
            ModelPoint::Euclidean(v) | ModelPoint::Klein(v) | ModelPoint::HalfSpace(v) => {
                v.iter().copied().collect()
            }
            ModelPoint::Hyperboloid(v) | ModelPoint::DeSitter(v) => v.iter().copied().collect(),
        }
    }

    /// Checks the quadric and chart invariants of the point's model.
    pub fn validate(&self) -> Result<()> {
        match self {
            ModelPoint::Hyperboloid(x) => {
                let s = minkowski_dot(x, x);
                if (s + 1.0).abs() > QUADRIC_TOL * x.norm_squared().max(1.0) || x[0] <= 0.0 {
                    return Err(Error::InvalidPoint(format!(
                        "hyperboloid point has self-product {s} and x0 = {}",
                        x[0]
                    )));
                }
            }
            ModelPoint::DeSitter(x) => {
                let s = minkowski_dot(x, x);
                if (s - 1.0).abs() > QUADRIC_TOL * x.norm_squared().max(1.0) {
                    return Err(Error::InvalidPoint(format!("de Sitter point has self-product {s}")));
                }
            }
            ModelPoint::HalfSpace(h) => {
                if h[2] < 0.0 {
                    return Err(Error::InvalidPoint("half-space point below the boundary".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Half-space points on the boundary plane and Klein points on the unit sphere.
    pub fn is_ideal(&self) -> bool {
        match self {
            ModelPoint::HalfSpace(h) => h[2] == 0.0,
            ModelPoint::Klein(k) => (k.norm() - 1.0).abs() < 1e-12,
            _ => false,
        }
    }
}

/// The Minkowski form of signature (3,1).
pub fn minkowski_dot(x: &Vec4, y: &Vec4) -> f64 {
    -x[0] * y[0] + x[1] * y[1] + x[2] * y[2] + x[3] * y[3]
}

/// `J = diag(-1, 1, 1, 1)`.
pub fn minkowski_metric() -> Matrix4<f64> {
    Matrix4::from_diagonal(&Vec4::new(-1.0, 1.0, 1.0, 1.0))
}

/// Lifts a Klein point to the hyperboloid (inside the ball) or to de Sitter space (outside).
pub fn lift_klein(k: &Vec3) -> Result<Vec4> {
    let n2 = k.norm_squared();
    let d = (1.0 - n2).abs();
    if d < 1e-12 {
        return Err(Error::PointAtInfinity);
    }
    Ok(Vec4::new(1.0, k[0], k[1], k[2]) / d.sqrt())
}

/// Central projection of a Minkowski vector to the affine chart `x0 = 1`.
pub fn project_klein(x: &Vec4) -> Result<Vec3> {
    if x[0].abs() < 1e-300 {
        return Err(Error::InvalidPoint("vector has x0 = 0 and no Klein representative".into()));
    }
    Ok(Vec3::new(x[1], x[2], x[3]) / x[0])
}

/// Null vector with `x0 = 1` representing an ideal point of the Klein sphere.
pub fn ideal_vector(k: &Vec3) -> Vec4 {
    let k = k.normalize();
    Vec4::new(1.0, k[0], k[1], k[2])
}

fn hyperboloid_to_halfspace(x: &Vec4) -> Result<Vec3> {
    let u = x[0] - x[3];
    if u <= 0.0 {
        return Err(Error::InvalidPoint("hyperboloid point maps to infinity".into()));
    }
    Ok(Vec3::new(x[1] / u, x[2] / u, 1.0 / u))
}

fn halfspace_to_hyperboloid(h: &Vec3) -> Result<Vec4> {
    if h[2] <= 0.0 {
        return Err(Error::PointAtInfinity);
    }
    let (a, b, z) = (h[0], h[1], h[2]);
    let m = 1.0 / z;
    let p = (z * z + a * a + b * b) / z;
    Ok(Vec4::new((p + m) / 2.0, a / z, b / z, (p - m) / 2.0))
}

/// Klein coordinates of a point of any hyperbolic or de Sitter model (ideal points allowed).
pub fn klein_coords(p: &ModelPoint) -> Result<Vec3> {
    match p {
        ModelPoint::Klein(k) => Ok(*k),
        ModelPoint::Hyperboloid(x) | ModelPoint::DeSitter(x) => project_klein(x),
        ModelPoint::HalfSpace(h) => {
            if h[2] > 0.0 {
                project_klein(&halfspace_to_hyperboloid(h)?)
            } else {
                // boundary point (a, b, 0): null vector (1 + r^2, 2a, 2b, r^2 - 1) / 2
                let r2 = h[0] * h[0] + h[1] * h[1];
                Ok(Vec3::new(2.0 * h[0], 2.0 * h[1], r2 - 1.0) / (1.0 + r2))
            }
        }
        ModelPoint::Euclidean(_) => Err(Error::UnsupportedConversion { from: "euclidean", to: "klein" }),
    }
}

/// Converts between models. Supported: any pair among klein, hyperboloid, desitter and halfspace
/// that preserves the point's causal type, plus the identity on euclidean points.
pub fn convert_model(p: &ModelPoint, target: Model) -> Result<ModelPoint> {
    if p.model() == target {
        return Ok(*p);
    }
    let unsupported = || Error::UnsupportedConversion { from: p.model().name(), to: target.name() };
    if p.model() == Model::Euclidean || target == Model::Euclidean {
        return Err(unsupported());
    }
    let k = klein_coords(p)?;
    let n2 = k.norm_squared();
    match target {
        Model::Klein => Ok(ModelPoint::Klein(k)),
        Model::Hyperboloid => {
            if (n2 - 1.0).abs() < 1e-12 {
                return Err(Error::PointAtInfinity);
            }
            if n2 > 1.0 {
                return Err(unsupported());
            }
            match p {
                ModelPoint::Hyperboloid(x) => Ok(ModelPoint::Hyperboloid(*x)),
                ModelPoint::HalfSpace(h) => Ok(ModelPoint::Hyperboloid(halfspace_to_hyperboloid(h)?)),
                _ => Ok(ModelPoint::Hyperboloid(lift_klein(&k)?)),
            }
        }
        Model::DeSitter => {
            if (n2 - 1.0).abs() < 1e-12 {
                return Err(Error::PointAtInfinity);
            }
            if n2 < 1.0 {
                return Err(unsupported());
            }
            Ok(ModelPoint::DeSitter(lift_klein(&k)?))
        }
        Model::HalfSpace => {
            if (n2 - 1.0).abs() < 1e-12 {
                let u = 1.0 - k[2];
                if u <= 0.0 {
                    return Err(Error::PointAtInfinity);
                }
                return Ok(ModelPoint::HalfSpace(Vec3::new(k[0] / u, k[1] / u, 0.0)));
            }
            if n2 > 1.0 {
                return Err(unsupported());
            }
            let x = match p {
                ModelPoint::Hyperboloid(x) => *x,
                _ => lift_klein(&k)?,
            };
            Ok(ModelPoint::HalfSpace(hyperboloid_to_halfspace(&x)?))
        }
        Model::Euclidean => Err(unsupported()),
    }
}

fn to_hyperboloid(p: &ModelPoint) -> Result<Vec4> {
    match convert_model(p, Model::Hyperboloid)? {
        ModelPoint::Hyperboloid(x) => Ok(x),
        _ => unreachable!(),
    }
}

/// Hyperbolic distance `arccosh(-<p,q>)` between two points of H^3.
pub fn hyp_distance(p: &ModelPoint, q: &ModelPoint) -> Result<f64> {
    hyperboloid_distance(&to_hyperboloid(p)?, &to_hyperboloid(q)?)
}

pub fn hyperboloid_distance(x: &Vec4, y: &Vec4) -> Result<f64> {
    let c = -minkowski_dot(x, y);
    if c < 1.0 - 1e-9 {
        return Err(Error::InvalidPoint(format!("-<p,q> = {c} < 1: points not on the hyperboloid")));
    }
    Ok(c.max(1.0).acosh())
}

/// A plane `a . x = b` in model coordinates with `|a| = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub a: [f64; 3],
    pub b: f64,
}

impl Plane {
    pub fn new(a: Vec3, b: f64) -> Result<Plane> {
        let n = a.norm();
        if !(n > 1e-300) {
            return Err(Error::Degenerate("plane normal vanishes".into()));
        }
        Ok(Plane { a: [a[0] / n, a[1] / n, a[2] / n], b: b / n })
    }

    pub fn normal(&self) -> Vec3 {
        Vec3::new(self.a[0], self.a[1], self.a[2])
    }

    pub fn eval(&self, x: &Vec3) -> f64 {
        self.normal().dot(x) - self.b
    }

    /// Unit spacelike Minkowski normal of the Klein-model plane. Requires the plane to meet the ball.
    pub fn minkowski_normal(&self) -> Result<Vec4> {
        let n = Vec4::new(self.b, self.a[0], self.a[1], self.a[2]);
        let s = minkowski_dot(&n, &n);
        if s <= 1e-15 {
            return Err(Error::Degenerate("plane does not meet the Klein ball".into()));
        }
        Ok(n / s.sqrt())
    }
}

/// Klein polar plane of a de Sitter point.
pub fn polar_dual(p: &ModelPoint) -> Result<Plane> {
    let x = match p {
        ModelPoint::DeSitter(x) => *x,
        ModelPoint::Klein(k) if k.norm_squared() > 1.0 + 1e-12 => lift_klein(k)?,
        _ => return Err(Error::InvalidPoint("polar dual needs a de Sitter point".into())),
    };
    Plane::new(Vec3::new(x[1], x[2], x[3]), x[0])
}

/// Distance between the polar planes of two de Sitter points, `arccosh(-<p_i,p_j>)`.
pub fn dual_plane_distance(pi: &Vec4, pj: &Vec4) -> Result<f64> {
    if (pi - pj).norm() < 1e-12 {
        return Ok(0.0);
    }
    let c = minkowski_dot(pi, pj);
    if c > -1.0 + 1e-12 {
        if c > -1.0 + 1e-9 {
            return Err(Error::Precondition(format!(
                "polar planes intersect (<p_i,p_j> = {c} > -1)"
            )));
        }
        return Ok(0.0);
    }
    Ok((-c).acosh())
}

/// Point at parameter `t` on the geodesic through `p` with initial velocity `v`.
pub fn geodesic_point(p: &Vec4, v: &Vec4, t: f64) -> Result<Vec4> {
    let tang = minkowski_dot(p, v);
    if tang.abs() > 1e-10 * v.norm().max(1.0) * p.norm() {
        return Err(Error::InvalidInput(format!("velocity not tangent: <p,v> = {tang:e}")));
    }
    let s = minkowski_dot(v, v);
    if s <= 0.0 || v.norm() == 0.0 {
        return Ok(*p);
    }
    let n = s.sqrt();
    Ok(p * (t * n).cosh() + v * ((t * n).sinh() / n))
}

/// Orthonormal frame `(e0, e1)` of the Minkowski 2-plane through two hyperboloid points,
/// with `e0 = a` timelike and `e1` the unit tangent towards `b`, plus the distance `d(a,b)`.
fn line_frame(a: &Vec4, b: &Vec4) -> Result<(Vec4, Vec4, f64)> {
    let c = minkowski_dot(a, b);
    let w = b + a * c;
    let s = minkowski_dot(&w, &w);
    if s <= 1e-24 {
        return Err(Error::Degenerate("line through coincident points".into()));
    }
    Ok((*a, w / s.sqrt(), (-c).max(1.0).acosh()))
}

/// Length of the common perpendicular of two hyperbolic lines, each given by two hyperboloid
/// points. Intersecting and asymptotic lines give 0.
pub fn line_line_distance(l1: (&Vec4, &Vec4), l2: (&Vec4, &Vec4)) -> Result<f64> {
    let (e0, e1, _) = line_frame(l1.0, l1.1)?;
    let (f0, f1, _) = line_frame(l2.0, l2.1)?;
    let e = [e0, e1];
    let f = [f0, f1];
    let mut g = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            g[i][j] = minkowski_dot(&e[i], &f[j]);
        }
    }
    // cosh^2 of the distance is the minimum of the quadratic form K over the unit hyperbola
    let k00 = g[0][0] * g[0][0] - g[0][1] * g[0][1];
    let k11 = g[1][0] * g[1][0] - g[1][1] * g[1][1];
    let k01 = g[0][0] * g[1][0] - g[0][1] * g[1][1];
    let a = (k00 + k11) / 2.0;
    let b = k01;
    let c = (k00 - k11) / 2.0;
    let m = if a > b.abs() { c + (a * a - b * b).sqrt() } else { c };
    Ok(m.max(1.0).sqrt().acosh())
}

fn golden_min<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let mut best = ((a + b) / 2.0, f((a + b) / 2.0));
    for (x, fx) in [(lo, f(lo)), (hi, f(hi))] {
        if fx < best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Minimum distance between two geodesic segments of H^3, by nested golden-section search
/// over arclength parameters (the distance is jointly convex).
pub fn segment_distance(s1: (&Vec4, &Vec4), s2: (&Vec4, &Vec4)) -> Result<f64> {
    let (e0, e1, l1) = line_frame(s1.0, s1.1)?;
    let (f0, f1, l2) = line_frame(s2.0, s2.1)?;
    let tol = 1e-10;
    let point = |e0: &Vec4, e1: &Vec4, s: f64| e0 * s.cosh() + e1 * s.sinh();
    let dist = |x: &Vec4, y: &Vec4| (-minkowski_dot(x, y)).max(1.0).acosh();
    let inner = |s: f64| {
        let x = point(&e0, &e1, s);
        golden_min(|t| dist(&x, &point(&f0, &f1, t)), 0.0, l2, tol).1
    };
    Ok(golden_min(inner, 0.0, l1, tol).1)
}

/// Ambient geometry for rigidity computations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ambient {
    Euclidean,
    Minkowski,
}

impl Ambient {
    pub fn name(self) -> &'static str {
        match self {
            Ambient::Euclidean => "euclidean",
            Ambient::Minkowski => "minkowski",
        }
    }
}

/// Basis of the Lie algebra of the Minkowski isometry group: three rotations and three boosts.
pub fn lorentz_algebra_basis() -> Vec<Matrix4<f64>> {
    let mut out = Vec::with_capacity(6);
    for (i, j) in [(1, 2), (1, 3), (2, 3)] {
        let mut m = Matrix4::zeros();
        m[(i, j)] = -1.0;
        m[(j, i)] = 1.0;
        out.push(m);
    }
    for k in 1..4 {
        let mut m = Matrix4::zeros();
        m[(0, k)] = 1.0;
        m[(k, 0)] = 1.0;
        out.push(m);
    }
    out
}

fn matrix_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * max).count()
}

pub fn killing_basis_euclidean(points: &[Vec3]) -> Result<Vec<Vec<Vec3>>> {
    let mut fields = Vec::with_capacity(6);
    for k in 0..3 {
        let mut c = Vec3::zeros();
        c[k] = 1.0;
        fields.push(vec![c; points.len()]);
    }
    for k in 0..3 {
        let mut w = Vec3::zeros();
        w[k] = 1.0;
        fields.push(points.iter().map(|p| w.cross(p)).collect());
    }
    let m = DMatrix::from_fn(3 * points.len(), 6, |r, c| fields[c][r / 3][r % 3]);
    let rank = matrix_rank(&m, 1e-9);
    if rank < 6 {
        return Err(Error::Degenerate(format!("trivial motions have rank {rank} < 6")));
    }
    Ok(fields)
}

pub fn killing_basis_minkowski(points: &[Vec4]) -> Result<Vec<Vec<Vec4>>> {
    let fields: Vec<Vec<Vec4>> = lorentz_algebra_basis()
        .iter()
        .map(|a| points.iter().map(|p| a * p).collect())
        .collect();
    let m = DMatrix::from_fn(4 * points.len(), 6, |r, c| fields[c][r / 4][r % 4]);
    let rank = matrix_rank(&m, 1e-9);
    if rank < 6 {
        return Err(Error::Degenerate(format!("trivial motions have rank {rank} < 6")));
    }
    Ok(fields)
}

/// The six Killing fields evaluated at the given points. Euclidean ambient reads Euclidean
/// coordinates; Minkowski ambient lifts every point to the hyperboloid or to de Sitter space.
pub fn killing_basis(points: &[ModelPoint], ambient: Ambient) -> Result<Vec<FlexField>> {
    match ambient {
        Ambient::Euclidean => {
            let pts = points
                .iter()
                .map(|p| match p {
                    ModelPoint::Euclidean(v) => Ok(*v),
                    other => Err(Error::AmbientMismatch { ambient: "euclidean", model: other.model().name() }),
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(killing_basis_euclidean(&pts)?.into_iter().map(FlexField::Euclidean).collect())
        }
        Ambient::Minkowski => {
            let pts = points.iter().map(minkowski_position).collect::<Result<Vec<_>>>()?;
            Ok(killing_basis_minkowski(&pts)?.into_iter().map(FlexField::Minkowski).collect())
        }
    }
}

/// Position of a hyperbolic-model point on the hyperboloid or the de Sitter quadric.
pub fn minkowski_position(p: &ModelPoint) -> Result<Vec4> {
    match p {
        ModelPoint::Hyperboloid(x) | ModelPoint::DeSitter(x) => Ok(*x),
        ModelPoint::Euclidean(_) => Err(Error::AmbientMismatch { ambient: "minkowski", model: "euclidean" }),
        other => lift_klein(&klein_coords(other)?),
    }
}
