//! Parametric constructors for the example polyhedra.
//!
//! Vertex order of the twisted octahedron is `A, B, C, A', B', C'` (indices 0..6).

use crate::error::{Error, Result};
use crate::geom::{klein_coords, minkowski_dot, Model, ModelPoint, Vec3, Vec4};
use crate::polyhedron::{orient_consistently, Coloring, Polyhedron};
use crate::rigidity::FlexField;
use nalgebra::{Rotation3, Unit};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const A: usize = 0;
pub const B: usize = 1;
pub const C: usize = 2;
pub const A1: usize = 3;
pub const B1: usize = 4;
pub const C1: usize = 5;
pub const VERTEX_NAMES: [&str; 6] = ["A", "B", "C", "A'", "B'", "C'"];

/// Faces in the order ABC, A'B'C', ABC', A'BC, AB'C, A'B'C, AB'C', A'BC'.
pub const SCHONHARDT_FACES: [[usize; 3]; 8] = [
    [A, B, C],
    [A1, B1, C1],
    [A, B, C1],
    [A1, B, C],
    [A, B1, C],
    [A1, B1, C],
    [A, B1, C1],
    [A1, B, C1],
];
/// Black faces ABC', A'BC, AB'C, A'B'C' (indices into `SCHONHARDT_FACES`).
pub const SCHONHARDT_BLACK: [usize; 4] = [2, 3, 4, 1];
pub const SCHONHARDT_WHITE: [usize; 4] = [0, 5, 6, 7];

/// The opposite vertex: A <-> A', B <-> B', C <-> C'.
pub fn opposite(v: usize) -> usize {
    (v + 3) % 6
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchonhardtParams {
    pub a: f64,
    pub b: f64,
    pub twist: f64,
}

impl SchonhardtParams {
    pub fn new(a: f64, b: f64, twist: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::InvalidInput(format!("a = {a} and b = {b} must be positive")));
        }
        if !(twist > 0.0 && twist < 2.0 * PI) {
            return Err(Error::InvalidInput(format!("twist {twist} outside (0, 2pi)")));
        }
        Ok(SchonhardtParams { a, b, twist })
    }

    pub fn flexible(a: f64, b: f64) -> Result<Self> {
        Self::new(a, b, PI / 2.0)
    }

    pub fn circumradius(&self) -> f64 {
        (self.a * self.a / 3.0 + self.b * self.b / 4.0).sqrt()
    }
}

/// Symmetry class of a twisted-octahedron edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum EdgeClass {
    /// Edges of the triangles ABC and A'B'C'.
    BaseTop,
    /// AC', BA', CB'.
    ConvexLateral,
    /// AB', BC', CA'.
    ReflexLateral,
}

pub fn edge_class(u: usize, v: usize) -> EdgeClass {
    let (lo, hi) = (u.min(v), u.max(v));
    if hi < 3 || lo >= 3 {
        EdgeClass::BaseTop
    } else if hi == lo + 4 || (lo == C && hi == A1) {
        EdgeClass::ReflexLateral
    } else {
        EdgeClass::ConvexLateral
    }
}

fn schonhardt_points(p: &SchonhardtParams) -> Vec<Vec3> {
    let r = p.a / 3f64.sqrt();
    let mut pts = Vec::with_capacity(6);
    for (z, rot) in [(-p.b / 2.0, 0.0), (p.b / 2.0, p.twist)] {
        for k in 0..3 {
            let ang = 2.0 * PI * k as f64 / 3.0 + rot;
            pts.push(Vec3::new(r * ang.cos(), r * ang.sin(), z));
        }
    }
    pts
}

fn octahedron_from(points: Vec<ModelPoint>, faces: &[[usize; 3]], black: &[usize]) -> Result<Polyhedron> {
    let oriented = orient_consistently(faces)?;
    let white: Vec<usize> = (0..faces.len()).filter(|f| !black.contains(f)).collect();
    let coloring = Coloring { black: black.to_vec(), white };
    Polyhedron::new(points, oriented, Some(coloring))
}

/// Twisted octahedron: equilateral triangle ABC with edge `a` in the plane `z = -b/2`, and its
/// screw image A'B'C' in the plane `z = b/2` rotated by `twist`. Inscribed in a sphere about
/// the origin. Twist pi/2 is the flexible Schonhardt octahedron, twist pi the convex antiprism.
pub fn schonhardt(p: &SchonhardtParams) -> Result<Polyhedron> {
    let pts = schonhardt_points(p).into_iter().map(ModelPoint::Euclidean).collect();
    octahedron_from(pts, &SCHONHARDT_FACES, &SCHONHARDT_BLACK)
}

/// The explicit nontrivial flex of the twisted octahedron with twist pi/2: A, B, C fixed,
/// C' moving orthogonally to the plane ABC', A' and B' moving by the rotated copies.
pub fn schonhardt_flex(p: &Polyhedron, params: &SchonhardtParams) -> Result<FlexField> {
    if (params.twist - PI / 2.0).abs() > 1e-12 {
        return Err(Error::Precondition(format!("explicit flex needs twist pi/2, got {}", params.twist)));
    }
    if p.num_vertices() != 6 {
        return Err(Error::InvalidInput("expected a twisted octahedron".into()));
    }
    let c = p.coords();
    let n = (c[B] - c[A]).cross(&(c[C1] - c[A])).normalize();
    let rot = |k: f64| Rotation3::from_axis_angle(&Vec3::z_axis(), 2.0 * PI * k / 3.0);
    let mut q = vec![Vec3::zeros(); 6];
    q[C1] = n;
    q[A1] = rot(1.0) * n;
    q[B1] = rot(2.0) * n;
    Ok(FlexField::Euclidean(q))
}

/// Half-turn about the horizontal axis at angle `pi/4 + 2 pi k/3`; it swaps the two triangles
/// of the twisted octahedron (twist pi/2), mapping vertex `k` to its opposite.
pub fn half_turn(k: usize) -> Rotation3<f64> {
    let ang = PI / 4.0 + 2.0 * PI * (k % 3) as f64 / 3.0;
    let axis = Unit::new_normalize(Vec3::new(ang.cos(), ang.sin(), 0.0));
    Rotation3::from_axis_angle(&axis, PI)
}

/// Vertex permutation induced by `half_turn(k)` on the twisted octahedron.
pub fn half_turn_permutation(k: usize) -> [usize; 6] {
    match k % 3 {
        0 => [3, 5, 4, 0, 2, 1],
        1 => [5, 4, 3, 2, 1, 0],
        _ => [4, 3, 5, 1, 0, 2],
    }
}

/// Image of a Euclidean field under a symmetry `x -> R x` with vertex permutation `perm`.
pub fn push_forward(q: &[Vec3], r: &Rotation3<f64>, perm: &[usize; 6]) -> Vec<Vec3> {
    let mut out = vec![Vec3::zeros(); q.len()];
    for (i, v) in q.iter().enumerate() {
        out[perm[i]] = r * v;
    }
    out
}

/// Explicit flex averaged with its half-turn image, so that all three symmetry classes of
/// edges stay symmetric along the deformation. Normalized to unit maximal speed.
pub fn symmetric_schonhardt_flex(p: &Polyhedron, params: &SchonhardtParams) -> Result<FlexField> {
    let FlexField::Euclidean(q) = schonhardt_flex(p, params)? else { unreachable!() };
    let img = push_forward(&q, &half_turn(0), &half_turn_permutation(0));
    let avg: Vec<Vec3> = q.iter().zip(&img).map(|(a, b)| (a + b) / 2.0).collect();
    Ok(FlexField::Euclidean(avg).normalized())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GluckParams {
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub c: [f64; 3],
    /// Projected onto the plane ABC.
    pub d: [f64; 3],
    pub e: [f64; 3],
    /// F = X + lambda (E - X), X the intersection of the lines AB and CD.
    pub lambda: f64,
    /// Displacement of D off the plane ABC after construction (0 for the flexible instance).
    pub d_offset: f64,
}

impl Default for GluckParams {
    fn default() -> Self {
        GluckParams {
            a: [1.0, 0.0, 0.0],
            b: [-1.0, 0.3, 0.0],
            c: [0.2, 1.0, 0.0],
            d: [0.1, -1.0, 0.4],
            e: [0.1, 0.2, 1.2],
            lambda: -0.7,
            d_offset: 0.0,
        }
    }
}

pub const GLUCK_NAMES: [&str; 6] = ["A", "B", "C", "D", "E", "F"];

/// Octahedron with opposite vertex pairs (A,B), (C,E), (D,F) and A, B, C, D coplanar.
/// Returns the polyhedron and the intersection point X of the lines AB and CD.
pub fn gluck_octahedron(g: &GluckParams) -> Result<(Polyhedron, Vec3)> {
    let v = |x: [f64; 3]| Vec3::new(x[0], x[1], x[2]);
    let (a, b, c, e) = (v(g.a), v(g.b), v(g.c), v(g.e));
    let n = (b - a).cross(&(c - a));
    if n.norm() < 1e-9 * (b - a).norm() * (c - a).norm() {
        return Err(Error::Degenerate("A, B, C are collinear".into()));
    }
    let n = n.normalize();
    let d = v(g.d) - n * n.dot(&(v(g.d) - a));
    // solve a + s (b - a) = c + u (d - c) in the plane
    let m = nalgebra::Matrix3x2::from_columns(&[b - a, c - d]);
    let mtm = m.transpose() * m;
    let det = mtm.determinant();
    if det.abs() < 1e-12 * mtm.norm().powi(2) {
        return Err(Error::Degenerate("lines AB and CD are parallel".into()));
    }
    let su = mtm.try_inverse().unwrap() * (m.transpose() * (c - a));
    let x = a + (b - a) * su[0];
    let f = x + (e - x) * g.lambda;
    let d = d + n * g.d_offset;
    let pts = [a, b, c, d, e, f];
    // faces: one vertex from each opposite pair (A|B, C|E, D|F)
    let mut faces = Vec::new();
    let mut black = Vec::new();
    for (i, &p0) in [0usize, 1].iter().enumerate() {
        for (j, &p1) in [2usize, 4].iter().enumerate() {
            for (k, &p2) in [3usize, 5].iter().enumerate() {
                if (i + j + k) % 2 == 0 {
                    black.push(faces.len());
                }
                faces.push([p0, p1, p2]);
            }
        }
    }
    let poly = octahedron_from(pts.iter().map(|p| ModelPoint::Euclidean(*p)).collect(), &faces, &black)?;
    Ok((poly, x))
}

/// Octahedron with opposite pairs `(0,1), (2,3), (4,5)` whose four black faces lie in the planes
/// through `x` with the given normals. Vertex `k` sits at `x + s[k] d_k`, where `d_k` spans the
/// line shared by the two black planes through it.
pub fn concurrent_octahedron(x: Vec3, normals: [Vec3; 4], s: [f64; 6]) -> Result<Polyhedron> {
    // black faces {0,2,4}, {0,3,5}, {1,2,5}, {1,3,4} are planes 0..4
    const LINES: [(usize, usize); 6] = [(0, 1), (2, 3), (0, 2), (1, 3), (0, 3), (1, 2)];
    let mut pts = Vec::with_capacity(6);
    for (k, &(i, j)) in LINES.iter().enumerate() {
        let d = normals[i].cross(&normals[j]);
        if d.norm() < 1e-9 * normals[i].norm() * normals[j].norm() {
            return Err(Error::Degenerate(format!("black planes {i} and {j} are parallel")));
        }
        pts.push(ModelPoint::Euclidean(x + d.normalize() * s[k]));
    }
    let (faces, black) = octahedron_faces();
    octahedron_from(pts, &faces, &black)
}

/// The eight faces of an octahedron with opposite pairs `(0,1), (2,3), (4,5)` and the indices of
/// the black class `{0,2,4}, {0,3,5}, {1,2,5}, {1,3,4}`.
fn octahedron_faces() -> (Vec<[usize; 3]>, Vec<usize>) {
    let mut faces = Vec::with_capacity(8);
    let mut black = Vec::with_capacity(4);
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                if (i + j + k) % 2 == 0 {
                    black.push(faces.len());
                }
                faces.push([i, 2 + j, 4 + k]);
            }
        }
    }
    (faces, black)
}

fn random_unit(rng: &mut impl Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.2 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Random octahedron with concurrent black planes; retries until the construction is
/// nondegenerate.
pub fn random_concurrent_octahedron(rng: &mut impl Rng) -> Polyhedron {
    loop {
        let x = random_unit(rng) * rng.random_range(0.0..0.5);
        let normals = [random_unit(rng), random_unit(rng), random_unit(rng), random_unit(rng)];
        let s = std::array::from_fn(|_| {
            let m: f64 = rng.random_range(0.5..1.5);
            if rng.random_bool(0.5) { m } else { -m }
        });
        if let Ok(p) = concurrent_octahedron(x, normals, s) {
            return p;
        }
    }
}

/// Random octahedron with vertices in the cube `[-1, 1]^3`.
pub fn random_octahedron(rng: &mut impl Rng) -> Polyhedron {
    let (faces, black) = octahedron_faces();
    loop {
        let pts = (0..6)
            .map(|_| ModelPoint::Euclidean(Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))))
            .collect();
        if let Ok(p) = octahedron_from(pts, &faces, &black) {
            return p;
        }
    }
}

/// Antiprism over regular n-gons of edge `a` at heights `-b/2, b/2`, with the top rotated by
/// `pi/n + extra_twist`. Caps are fan-triangulated.
pub fn antiprism(n: usize, a: f64, b: f64, extra_twist: f64) -> Result<Polyhedron> {
    if n < 3 {
        return Err(Error::InvalidInput(format!("antiprism needs n >= 3, got {n}")));
    }
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::InvalidInput("a and b must be positive".into()));
    }
    let r = a / (2.0 * (PI / n as f64).sin());
    let rot = PI / n as f64 + extra_twist;
    let mut pts = Vec::with_capacity(2 * n);
    for (z, off) in [(-b / 2.0, 0.0), (b / 2.0, rot)] {
        for k in 0..n {
            let ang = 2.0 * PI * k as f64 / n as f64 + off;
            pts.push(ModelPoint::Euclidean(Vec3::new(r * ang.cos(), r * ang.sin(), z)));
        }
    }
    let mut faces = Vec::new();
    for k in 1..n - 1 {
        faces.push([0, k + 1, k]);
        faces.push([n, n + k, n + k + 1]);
    }
    for i in 0..n {
        let j = (i + 1) % n;
        faces.push([i, j, n + i]);
        faces.push([n + i, j, n + j]);
    }
    Polyhedron::new(pts, orient_consistently(&faces)?, None)
}

/// Antiprism with the top additionally rotated by pi/2; it has a nontrivial flex for every n.
pub fn twisted_antiprism(n: usize, a: f64, b: f64) -> Result<Polyhedron> {
    antiprism(n, a, b, PI / 2.0)
}

/// Shape parameters of the inscribed twisted octahedron matching an ideal octahedron whose
/// outer triangle is `r` times larger than the inner one.
pub fn inscribed_params_for_ratio(r: f64) -> Result<SchonhardtParams> {
    if !(r > 1.0) {
        return Err(Error::InvalidInput(format!("ratio must exceed 1, got {r}")));
    }
    let h = (r - 1.0) / (r + 1.0);
    let rad = (1.0 - h * h).sqrt();
    SchonhardtParams::flexible(rad * 3f64.sqrt(), 2.0 * h)
}

/// Vertex positions of the ideal twisted octahedron in the boundary plane of the half-space
/// model: inner triangle on the unit circle, outer triangle of radius `r` rotated by pi/2.
pub fn ideal_octahedron_points(r: f64) -> Vec<[f64; 2]> {
    let mut z = Vec::with_capacity(6);
    for (rad, off) in [(1.0, 0.0), (r, PI / 2.0)] {
        for k in 0..3 {
            let ang = 2.0 * PI * k as f64 / 3.0 + off;
            z.push([rad * ang.cos(), rad * ang.sin()]);
        }
    }
    z
}

/// The ideal twisted octahedron as a half-space polyhedron with ideal vertices.
pub fn ideal_twisted_octahedron(r: f64) -> Result<Polyhedron> {
    let pts = ideal_octahedron_points(r)
        .into_iter()
        .map(|[x, y]| ModelPoint::HalfSpace(Vec3::new(x, y, 0.0)))
        .collect();
    octahedron_from(pts, &SCHONHARDT_FACES, &SCHONHARDT_BLACK)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdealAngles {
    pub ratio: f64,
    /// Dihedral angle per edge `[u, v, angle]` in the twisted-octahedron labeling.
    pub edges: Vec<(usize, usize, f64)>,
    /// The four angles at edges incident to vertex A, ascending.
    pub classes: [f64; 4],
    /// Sum of the four angles at A (always 2 pi for an ideal vertex).
    pub angle_sum_at_a: f64,
}

fn circumcircle(p: [f64; 2], q: [f64; 2], s: [f64; 2]) -> ([f64; 2], f64) {
    let d = 2.0 * (p[0] * (q[1] - s[1]) + q[0] * (s[1] - p[1]) + s[0] * (p[1] - q[1]));
    let n = |v: [f64; 2]| v[0] * v[0] + v[1] * v[1];
    let ux = (n(p) * (q[1] - s[1]) + n(q) * (s[1] - p[1]) + n(s) * (p[1] - q[1])) / d;
    let uy = (n(p) * (s[0] - q[0]) + n(q) * (p[0] - s[0]) + n(s) * (q[0] - p[0])) / d;
    let r = ((p[0] - ux).powi(2) + (p[1] - uy).powi(2)).sqrt();
    ([ux, uy], r)
}

/// Dihedral angles of the ideal twisted octahedron computed as intersection angles of the
/// face circles in the boundary plane of the half-space model.
pub fn ideal_twisted_octahedron_angles(r: f64) -> Result<IdealAngles> {
    if !(r > 1.0) {
        return Err(Error::InvalidInput(format!("ratio must exceed 1, got {r}")));
    }
    let z = ideal_octahedron_points(r);
    let poly = ideal_twisted_octahedron(r)?;
    let faces = poly.faces();
    // the solid lies under the dome of a face iff the face is counter-clockwise in the plane
    let info = |f: usize| {
        let [a, b, c] = faces[f].map(|i| z[i]);
        let (cen, rad) = circumcircle(a, b, c);
        let ccw = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]) > 0.0;
        (cen, rad, ccw)
    };
    let mut edges = Vec::new();
    for e in poly.edges() {
        let [u, v] = e.ends;
        let (c1, r1, in1) = info(e.faces[0]);
        let (c2, r2, in2) = info(e.faces[1]);
        let pu = z[u];
        let d1 = [c1[0] - pu[0], c1[1] - pu[1]];
        let d2 = [c2[0] - pu[0], c2[1] - pu[1]];
        let cos = ((d1[0] * d2[0] + d1[1] * d2[1]) / (r1 * r2)).clamp(-1.0, 1.0);
        let lens = PI - cos.acos();
        let sector = if in1 == in2 { lens } else { PI - lens };
        let w = *faces[e.faces[1]].iter().find(|&&x| x != u && x != v).unwrap();
        let w_inside = ((z[w][0] - c1[0]).powi(2) + (z[w][1] - c1[1]).powi(2)).sqrt() < r1;
        let angle = if w_inside == in1 { sector } else { 2.0 * PI - sector };
        edges.push((u, v, angle));
    }
    let mut at_a: Vec<f64> = edges.iter().filter(|(u, v, _)| *u == A || *v == A).map(|e| e.2).collect();
    at_a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let angle_sum_at_a = at_a.iter().sum();
    Ok(IdealAngles { ratio: r, edges, classes: [at_a[0], at_a[1], at_a[2], at_a[3]], angle_sum_at_a })
}

/// Twisted octahedron scaled so that its vertices sit at Klein radius `1/s > 1`.
pub fn hyperideal_schonhardt(params: &SchonhardtParams, s: f64) -> Result<Polyhedron> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidInput(format!("shrink factor {s} outside (0, 1)")));
    }
    let e = schonhardt(params)?;
    let scale = 1.0 / (params.circumradius() * s);
    let k = e.coords().iter().map(|c| c * scale).collect::<Vec<_>>();
    if k.iter().any(|p| p.norm() <= 1.0 + 1e-9) {
        return Err(Error::Precondition("vertices are not outside the ball".into()));
    }
    for edge in e.edges() {
        let [i, j] = edge.ends;
        if segment_origin_distance(&k[i], &k[j]) >= 1.0 - 1e-9 {
            return Err(Error::Precondition(format!(
                "edge {}{} misses the open ball at shrink {s}",
                VERTEX_NAMES[i], VERTEX_NAMES[j]
            )));
        }
    }
    e.reinterpret(Model::Klein)?.with_coords(k)
}

/// Euclidean distance from the origin to a segment.
pub fn segment_origin_distance(p: &Vec3, q: &Vec3) -> f64 {
    let d = q - p;
    let t = (-p.dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
    (p + d * t).norm()
}

/// Klein vertex of a half-space ideal point, as a null Minkowski vector.
pub fn ideal_null_vector(p: &ModelPoint) -> Result<Vec4> {
    let k = klein_coords(p)?;
    let v = Vec4::new(1.0, k[0], k[1], k[2]);
    debug_assert!(minkowski_dot(&v, &v).abs() < 1e-9);
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Ambient;
    use crate::rigidity::{flex_analysis, killing_complement_norm, rigidity_matrix, DEFAULT_KERNEL_TOL};
    use approx::assert_abs_diff_eq;

    fn kernel(p: &Polyhedron) -> usize {
        flex_analysis(p, Ambient::Euclidean, DEFAULT_KERNEL_TOL).unwrap().kernel_dim
    }

    #[test]
    fn reflex_edges_of_twisted_octahedron() {
        let p = schonhardt(&SchonhardtParams::flexible(1.0, 1.0).unwrap()).unwrap();
        for (ei, e) in p.edges().iter().enumerate() {
            let ang = p.dihedral_angle(ei).unwrap();
            let class = edge_class(e.ends[0], e.ends[1]);
            assert_eq!(ang > PI, class == EdgeClass::ReflexLateral, "edge {:?}", e.ends);
        }
        let reflex: Vec<_> = p
            .edges()
            .iter()
            .filter(|e| edge_class(e.ends[0], e.ends[1]) == EdgeClass::ReflexLateral)
            .map(|e| e.ends)
            .collect();
        assert_eq!(reflex, vec![[A, B1], [B, C1], [C, A1]]);
    }

    #[test]
    fn plane_abc1_contains_top_centroid() {
        let p = schonhardt(&SchonhardtParams::flexible(1.3, 0.8).unwrap()).unwrap();
        let c = p.coords();
        let f = p.faces().iter().position(|f| f.contains(&A) && f.contains(&B) && f.contains(&C1)).unwrap();
        let centroid = (c[A1] + c[B1] + c[C1]) / 3.0;
        assert!(p.face_plane(f).unwrap().eval(&centroid).abs() < 1e-12);
    }

    #[test]
    fn inscribed_in_sphere() {
        let par = SchonhardtParams::flexible(0.7, 1.9).unwrap();
        let p = schonhardt(&par).unwrap();
        for c in p.coords() {
            assert_abs_diff_eq!(c.norm(), par.circumradius(), epsilon = 1e-12);
        }
    }

    #[test]
    fn kernel_dimensions_by_twist() {
        let k = |t: f64| kernel(&schonhardt(&SchonhardtParams::new(1.0, 1.0, t).unwrap()).unwrap());
        assert_eq!(k(PI / 2.0), 7);
        assert_eq!(k(PI / 3.0), 6);
        assert_eq!(k(PI), 6);
        assert_eq!(k(PI / 2.0 + 0.1), 6);
    }

    #[test]
    fn twist_pi_is_convex() {
        let p = schonhardt(&SchonhardtParams::new(1.0, 1.0, PI).unwrap()).unwrap();
        assert!(p.dihedral_angles().unwrap().iter().all(|&a| a < PI));
    }

    #[test]
    fn explicit_flex() {
        let par = SchonhardtParams::flexible(1.0, 1.0).unwrap();
        let p = schonhardt(&par).unwrap();
        let q = schonhardt_flex(&p, &par).unwrap();
        let rm = rigidity_matrix(&p, Ambient::Euclidean).unwrap();
        assert!(rm.relative_residual(&q).unwrap() < 1e-10);
        let FlexField::Euclidean(v) = &q else { panic!() };
        assert_abs_diff_eq!(v[A1].norm(), v[C1].norm(), epsilon = 1e-15);
        assert_abs_diff_eq!(v[B1].norm(), v[C1].norm(), epsilon = 1e-15);
        let r = Rotation3::from_axis_angle(&Vec3::z_axis(), 2.0 * PI / 3.0);
        assert_abs_diff_eq!(r * v[C1], v[A1], epsilon = 1e-15);
        assert_abs_diff_eq!(r * v[A1], v[B1], epsilon = 1e-15);
        assert!(killing_complement_norm(&rm, &q).unwrap() > 0.1);
        let bad = SchonhardtParams::new(1.0, 1.0, 1.0).unwrap();
        assert!(schonhardt_flex(&p, &bad).is_err());
    }

    #[test]
    fn half_turn_is_a_symmetry_and_fixes_the_flex() {
        let par = SchonhardtParams::flexible(1.1, 0.9).unwrap();
        let p = schonhardt(&par).unwrap();
        let c = p.coords();
        for k in 0..3 {
            let r = half_turn(k);
            let perm = half_turn_permutation(k);
            for i in 0..6 {
                assert!((r * c[i] - c[perm[i]]).norm() < 1e-12);
            }
            assert_eq!(perm[k], opposite(k));
        }
        let FlexField::Euclidean(q) = schonhardt_flex(&p, &par).unwrap() else { panic!() };
        let img = push_forward(&q, &half_turn(0), &half_turn_permutation(0));
        let rm = rigidity_matrix(&p, Ambient::Euclidean).unwrap();
        let diff: Vec<Vec3> = img.iter().zip(&q).map(|(a, b)| a - b).collect();
        let sum: Vec<Vec3> = img.iter().zip(&q).map(|(a, b)| a + b).collect();
        // the image equals the flex up to a trivial motion, not its negative
        assert!(killing_complement_norm(&rm, &FlexField::Euclidean(diff)).unwrap() < 1e-9);
        assert!(killing_complement_norm(&rm, &FlexField::Euclidean(sum)).unwrap() > 0.1);
    }

    #[test]
    fn gluck_instance() {
        let (p, x) = gluck_octahedron(&GluckParams::default()).unwrap();
        assert_eq!(kernel(&p), 7);
        let c = p.coords();
        // X lies on AB and CD
        assert!((c[1] - c[0]).cross(&(x - c[0])).norm() < 1e-12);
        assert!((c[3] - c[2]).cross(&(x - c[2])).norm() < 1e-12);
        let g = GluckParams { d_offset: 0.1, ..GluckParams::default() };
        assert_eq!(kernel(&gluck_octahedron(&g).unwrap().0), 6);
        let g = GluckParams { c: [3.0, -0.3, 0.0], ..GluckParams::default() };
        assert!(gluck_octahedron(&g).is_err());
    }

    #[test]
    fn antiprisms() {
        let t = twisted_antiprism(3, 1.0, 1.0).unwrap();
        assert_eq!((t.num_vertices(), t.faces().len(), t.edges().len()), (6, 8, 12));
        for n in 3..8 {
            let p = twisted_antiprism(n, 1.0, 1.0).unwrap();
            assert_eq!(kernel(&p), 7, "n = {n}");
        }
        for n in 3..6 {
            let p = antiprism(n, 1.0, 1.0, 0.0).unwrap();
            assert_eq!(kernel(&p), 6);
            assert!(p.dihedral_angles().unwrap().iter().all(|&a| a <= PI + 1e-12));
        }
        assert!(twisted_antiprism(2, 1.0, 1.0).is_err());
    }

    #[test]
    fn ideal_angle_limits() {
        let ia = ideal_twisted_octahedron_angles(1e3).unwrap();
        let target = [PI / 6.0, PI / 3.0, PI / 3.0, 7.0 * PI / 6.0];
        for (a, t) in ia.classes.iter().zip(target) {
            assert!((a - t).abs() < 1e-2, "{a} vs {t}");
        }
        assert!(ideal_twisted_octahedron_angles(1.0).is_err());
    }

    #[test]
    fn ideal_angles_match_klein_dihedral_angles() {
        // independent computation: Minkowski normals of the Klein planes through ideal vertices
        for r in [1.5, 4.0, 30.0] {
            let ia = ideal_twisted_octahedron_angles(r).unwrap();
            let poly = ideal_twisted_octahedron(r).unwrap();
            for &(u, v, ang) in &ia.edges {
                let e = poly.edge_between(u, v).unwrap();
                assert_abs_diff_eq!(poly.dihedral_angle(e).unwrap(), ang, epsilon = 1e-9);
            }
            assert_abs_diff_eq!(ia.angle_sum_at_a, 2.0 * PI, epsilon = 1e-9);
        }
    }

    #[test]
    fn inscribed_params_reproduce_ideal_shape() {
        let r = 12.0;
        let par = inscribed_params_for_ratio(r).unwrap();
        assert_abs_diff_eq!(par.circumradius(), 1.0, epsilon = 1e-12);
        let ideal = ideal_twisted_octahedron_angles(r).unwrap();
        let e = schonhardt(&par).unwrap().reinterpret(Model::Klein).unwrap();
        let mut a: Vec<f64> = ideal.edges.iter().map(|x| x.2).collect();
        let mut b = e.dihedral_angles().unwrap();
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-9);
        }
    }

    #[test]
    fn ideal_angles_monotone() {
        let mut prev: Option<[f64; 4]> = None;
        let target = [PI / 6.0, PI / 3.0, PI / 3.0, 7.0 * PI / 6.0];
        for k in 0..30 {
            let r = 2.0 * 1.3f64.powi(k);
            let c = ideal_twisted_octahedron_angles(r).unwrap().classes;
            if let Some(p) = prev {
                for i in 0..4 {
                    assert!((c[i] - target[i]).abs() <= (p[i] - target[i]).abs() + 1e-12);
                }
            }
            prev = Some(c);
        }
    }

    #[test]
    fn hyperideal_scaling() {
        let par = SchonhardtParams::flexible(1.0, 1.0).unwrap();
        let h = hyperideal_schonhardt(&par, 0.95).unwrap();
        for c in h.coords() {
            assert_abs_diff_eq!(c.norm(), 1.0 / 0.95, epsilon = 1e-12);
        }
        assert!(hyperideal_schonhardt(&par, 0.3).is_err());
        assert!(hyperideal_schonhardt(&par, 1.0).is_err());
        for s in [0.9, 0.95, 0.99] {
            let h = hyperideal_schonhardt(&par, s).unwrap();
            let e = h.reinterpret(Model::Euclidean).unwrap();
            assert_eq!(kernel(&e), 7);
        }
    }

    #[test]
    fn concurrent_octahedra_are_flexible() {
        use crate::rigidity::{blaschke_liebmann, BL_TOL};
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let p = random_concurrent_octahedron(&mut rng);
            let bl = blaschke_liebmann(&p, BL_TOL).unwrap();
            assert!(bl.flexible && bl.det_white.abs() < BL_TOL);
            assert_eq!(kernel(&p), 7);
            let q = random_octahedron(&mut rng);
            assert!(!blaschke_liebmann(&q, BL_TOL).unwrap().flexible);
            assert_eq!(kernel(&q), 6);
        }
        let x = Vec3::new(0.1, 0.2, 0.3);
        let n = [Vec3::x(), Vec3::x() * 2.0, Vec3::y(), Vec3::z()];
        assert!(concurrent_octahedron(x, n, [1.0; 6]).is_err());
    }
}
