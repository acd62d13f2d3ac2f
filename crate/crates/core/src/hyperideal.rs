//! Truncation of polyhedra with hyperideal vertices along the polar planes of the vertices.

use crate::error::{Error, Result};
use crate::geom::{
    dual_plane_distance, hyperboloid_distance, lift_klein, minkowski_dot, segment_distance, Ambient, Model, Plane,
    Vec3, Vec4,
};
use crate::generators::segment_origin_distance;
use crate::polyhedron::Polyhedron;
use crate::rigidity::{flex_analysis, minkowski_positions, FlexReport};
use nalgebra::{Matrix3, Matrix4, Vector3};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;

/// Truncated hyperideal polyhedron. Truncation vertex `p_ij` lies on the line `p_i p_j` and on
/// the polar plane of `p_i`.
#[derive(Debug, Clone)]
pub struct TruncatedPolyhedron {
    source: Polyhedron,
    desitter: Vec<Vec4>,
    polar_planes: Vec<Plane>,
    vertices: Vec<Vec4>,
    vertex_keys: Vec<(usize, usize)>,
    key_index: HashMap<(usize, usize), usize>,
    old_faces: Vec<[usize; 6]>,
    new_faces: Vec<Vec<usize>>,
    old_edges: Vec<[usize; 2]>,
    new_edges: Vec<[usize; 2]>,
}

/// Foot of the common perpendicular on the polar plane of `pi` towards `pj`.
pub fn truncation_vertex(pi: &Vec4, pj: &Vec4) -> Result<Vec4> {
    let c = minkowski_dot(pi, pj);
    let v = pj - pi * c;
    let s = minkowski_dot(&v, &v);
    if s >= 0.0 {
        return Err(Error::Precondition("polar planes intersect; the edge misses the ball".into()));
    }
    let v = v / (-s).sqrt();
    Ok(if v[0] < 0.0 { -v } else { v })
}

pub fn truncate(p: &Polyhedron) -> Result<TruncatedPolyhedron> {
    if p.space() != Model::Klein {
        return Err(Error::InvalidInput("truncation needs a klein-model polyhedron".into()));
    }
    let k = p.coords();
    for (i, c) in k.iter().enumerate() {
        if c.norm() <= 1.0 + 1e-9 {
            return Err(Error::Precondition(format!("vertex {i} is not outside the unit ball (|p| = {})", c.norm())));
        }
    }
    for e in p.edges() {
        let [i, j] = e.ends;
        if segment_origin_distance(&k[i], &k[j]) >= 1.0 - 1e-12 {
            return Err(Error::Precondition(format!("edge {i}-{j} does not meet the open ball")));
        }
    }
    let desitter = minkowski_positions(p)?;
    let polar_planes = desitter
        .iter()
        .map(|x| Plane::new(Vec3::new(x[1], x[2], x[3]), x[0]))
        .collect::<Result<Vec<_>>>()?;
    let n = p.num_vertices();
    let mut vertices = Vec::new();
    let mut vertex_keys = Vec::new();
    let mut key_index = HashMap::new();
    let links: Vec<Vec<usize>> = (0..n).map(|v| p.link_cycle(v)).collect();
    for i in 0..n {
        for &j in &links[i] {
            key_index.insert((i, j), vertices.len());
            vertex_keys.push((i, j));
            vertices.push(truncation_vertex(&desitter[i], &desitter[j])?);
        }
    }
    let old_faces = p
        .faces()
        .iter()
        .map(|&[i, j, l]| {
            [(i, j), (j, i), (j, l), (l, j), (l, i), (i, l)].map(|key| key_index[&key])
        })
        .collect();
    let new_faces: Vec<Vec<usize>> =
        (0..n).map(|i| links[i].iter().map(|&j| key_index[&(i, j)]).collect()).collect();
    let old_edges = p.edges().iter().map(|e| [key_index[&(e.ends[0], e.ends[1])], key_index[&(e.ends[1], e.ends[0])]]).collect();
    let new_edges = new_faces
        .iter()
        .flat_map(|f| (0..f.len()).map(move |k| [f[k], f[(k + 1) % f.len()]]))
        .collect();
    Ok(TruncatedPolyhedron {
        source: p.clone(),
        desitter,
        polar_planes,
        vertices,
        vertex_keys,
        key_index,
        old_faces,
        new_faces,
        old_edges,
        new_edges,
    })
}

impl TruncatedPolyhedron {
    pub fn source(&self) -> &Polyhedron {
        &self.source
    }

    pub fn desitter(&self) -> &[Vec4] {
        &self.desitter
    }

    pub fn polar_planes(&self) -> &[Plane] {
        &self.polar_planes
    }

    /// Truncation vertices on the hyperboloid.
    pub fn vertices(&self) -> &[Vec4] {
        &self.vertices
    }

    /// `(i, j)` for the vertex `p_ij` on the polar plane of `p_i` towards `p_j`.
    pub fn vertex_keys(&self) -> &[(usize, usize)] {
        &self.vertex_keys
    }

    pub fn vertex_index(&self, i: usize, j: usize) -> Option<usize> {
        self.key_index.get(&(i, j)).copied()
    }

    /// Hexagons `p_ij, p_ji, p_jk, p_kj, p_ki, p_ik`, one per source face.
    pub fn old_faces(&self) -> &[[usize; 6]] {
        &self.old_faces
    }

    /// One polygon per source vertex, in the cyclic order of its link.
    pub fn new_faces(&self) -> &[Vec<usize>] {
        &self.new_faces
    }

    /// `p_ij - p_ji`, indexed like the source edges.
    pub fn old_edges(&self) -> &[[usize; 2]] {
        &self.old_edges
    }

    pub fn new_edges(&self) -> &[[usize; 2]] {
        &self.new_edges
    }

    pub fn counts(&self) -> (usize, usize, usize) {
        (
            self.vertices.len(),
            self.old_edges.len() + self.new_edges.len(),
            self.old_faces.len() + self.new_faces.len(),
        )
    }

    pub fn euler_characteristic(&self) -> i64 {
        let (v, e, f) = self.counts();
        v as i64 - e as i64 + f as i64
    }

    /// Dihedral angle at every new edge, between an old face plane and a polar plane.
    pub fn new_edge_dihedral_angles(&self) -> Result<Vec<f64>> {
        let faces = self.source.faces();
        self.new_edges
            .iter()
            .map(|&[a, b]| {
                let (i, j) = self.vertex_keys[a];
                let (_, l) = self.vertex_keys[b];
                let f = faces
                    .iter()
                    .position(|f| [i, j, l].iter().all(|v| f.contains(v)))
                    .ok_or_else(|| Error::Degenerate(format!("no face through {i}, {j}, {l}")))?;
                let nf = self.source.face_plane(f)?.minkowski_normal()?;
                let np = self.desitter[i];
                Ok(PI - minkowski_dot(&nf, &np).clamp(-1.0, 1.0).acos())
            })
            .collect()
    }

    /// Interior angles of every old hexagon at its six vertices.
    pub fn hexagon_angles(&self) -> Vec<[f64; 6]> {
        self.old_faces
            .iter()
            .map(|h| {
                let mut out = [0.0; 6];
                for k in 0..6 {
                    out[k] = vertex_angle(&self.vertices[h[k]], &self.vertices[h[(k + 5) % 6]], &self.vertices[h[(k + 1) % 6]]);
                }
                out
            })
            .collect()
    }

    /// Edge lengths of every new face, in cyclic order.
    pub fn new_face_edge_lengths(&self) -> Result<Vec<Vec<f64>>> {
        self.new_faces
            .iter()
            .map(|f| {
                (0..f.len())
                    .map(|k| hyperboloid_distance(&self.vertices[f[k]], &self.vertices[f[(k + 1) % f.len()]]))
                    .collect()
            })
            .collect()
    }

    /// Interior angles of every new face, in cyclic order. Reflex angles are reported as such.
    pub fn new_face_angles(&self) -> Vec<Vec<f64>> {
        self.new_faces
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let pts: Vec<Vec4> = f.iter().map(|&v| self.vertices[v]).collect();
                polygon_angles(&pts, &self.desitter[i])
            })
            .collect()
    }
}

/// Interior angles of a simple hyperbolic polygon lying in the plane with spacelike normal `n`.
/// The orientation is the one whose angle sum stays below `(m - 2) pi`.
pub fn polygon_angles(pts: &[Vec4], n: &Vec4) -> Vec<f64> {
    let m = pts.len();
    let mut raw = Vec::with_capacity(m);
    for k in 0..m {
        let (x, y, z) = (&pts[k], &pts[(k + m - 1) % m], &pts[(k + 1) % m]);
        let u = y + x * minkowski_dot(x, y);
        let w = z + x * minkowski_dot(x, z);
        let side = Matrix4::from_columns(&[*n, *x, u, w]).determinant();
        raw.push((vertex_angle(x, y, z), side >= 0.0));
    }
    let pick = |positive: bool| -> Vec<f64> {
        raw.iter().map(|&(a, s)| if s == positive { a } else { 2.0 * PI - a }).collect()
    };
    let a = pick(true);
    if a.iter().sum::<f64>() < (m as f64 - 2.0) * PI {
        a
    } else {
        pick(false)
    }
}

/// Hyperbolic angle at `x` between the geodesics towards `y` and `z`.
pub fn vertex_angle(x: &Vec4, y: &Vec4, z: &Vec4) -> f64 {
    let u = y + x * minkowski_dot(x, y);
    let w = z + x * minkowski_dot(x, z);
    let c = minkowski_dot(&u, &w) / (minkowski_dot(&u, &u) * minkowski_dot(&w, &w)).sqrt();
    c.clamp(-1.0, 1.0).acos()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruncatedMetrics {
    /// Per source edge `[i, j]`.
    pub edges: Vec<[usize; 2]>,
    pub old_edge_lengths: Vec<f64>,
    /// `arccosh(-<p_i, p_j>)` for the same edges.
    pub old_edge_lengths_dual: Vec<f64>,
    pub max_length_discrepancy: f64,
    pub old_edge_dihedral_angles: Vec<f64>,
    pub max_new_edge_angle_error: f64,
    pub max_hexagon_angle_error: f64,
    pub new_face_edge_lengths: Vec<Vec<f64>>,
}

pub fn truncated_metrics(t: &TruncatedPolyhedron) -> Result<TruncatedMetrics> {
    let edges: Vec<[usize; 2]> = t.source.edges().iter().map(|e| e.ends).collect();
    let old_edge_lengths = t
        .old_edges
        .iter()
        .map(|&[a, b]| hyperboloid_distance(&t.vertices[a], &t.vertices[b]))
        .collect::<Result<Vec<_>>>()?;
    let old_edge_lengths_dual = edges
        .iter()
        .map(|&[i, j]| dual_plane_distance(&t.desitter[i], &t.desitter[j]))
        .collect::<Result<Vec<_>>>()?;
    let max_length_discrepancy = old_edge_lengths
        .iter()
        .zip(&old_edge_lengths_dual)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if max_length_discrepancy > 1e-9 {
        return Err(Error::Degenerate(format!("old edge lengths disagree by {max_length_discrepancy:e}")));
    }
    let old_edge_dihedral_angles = t.source.dihedral_angles()?;
    let max_new_edge_angle_error =
        t.new_edge_dihedral_angles()?.iter().map(|a| (a - PI / 2.0).abs()).fold(0.0, f64::max);
    let max_hexagon_angle_error = t
        .hexagon_angles()
        .iter()
        .flat_map(|h| h.iter().map(|a| (a - PI / 2.0).abs()))
        .fold(0.0, f64::max);
    Ok(TruncatedMetrics {
        edges,
        old_edge_lengths,
        old_edge_lengths_dual,
        max_length_discrepancy,
        old_edge_dihedral_angles,
        max_new_edge_angle_error,
        max_hexagon_angle_error,
        new_face_edge_lengths: t.new_face_edge_lengths()?,
    })
}

/// Flex analysis of the de Sitter vertices in the Minkowski ambient.
pub fn truncated_flex_analysis(t: &TruncatedPolyhedron, tol: f64) -> Result<FlexReport> {
    flex_analysis(&t.source, Ambient::Minkowski, tol)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TubeReport {
    pub min_distance: f64,
    /// The attaining pair of old edges, as source edges `[i, j]`.
    pub pair: [[usize; 2]; 2],
    pub bound: f64,
    pub within_bound: bool,
}

/// `arctanh(1/sqrt 3)`.
pub fn tube_bound() -> f64 {
    (1.0 / 3f64.sqrt()).atanh()
}

/// Minimum hyperbolic distance between two distinct old edges.
pub fn min_tube_distance(t: &TruncatedPolyhedron) -> Result<TubeReport> {
    let src: Vec<[usize; 2]> = t.source.edges().iter().map(|e| e.ends).collect();
    let mut best = (f64::INFINITY, [[0; 2]; 2]);
    for a in 0..t.old_edges.len() {
        for b in a + 1..t.old_edges.len() {
            let [a0, a1] = t.old_edges[a];
            let [b0, b1] = t.old_edges[b];
            let d = segment_distance(
                (&t.vertices[a0], &t.vertices[a1]),
                (&t.vertices[b0], &t.vertices[b1]),
            )?;
            if d < best.0 {
                best = (d, [src[a], src[b]]);
            }
        }
    }
    let bound = tube_bound();
    Ok(TubeReport { min_distance: best.0, pair: best.1, bound, within_bound: best.0 <= bound + 1e-9 })
}

fn minkowski3(x: &Vector3<f64>, y: &Vector3<f64>) -> f64 {
    -x[0] * y[0] + x[1] * y[1] + x[2] * y[2]
}

/// New side lengths of the right-angled hexagon with old sides `l = (l1, l2, l3)` (alternate
/// sides). New side `k` is opposite to old side `k`. Computed from coordinates in R^{2,1}.
pub fn hexagon_new_lengths(l: [f64; 3]) -> Result<[f64; 3]> {
    if l.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::InvalidInput("hexagon side lengths must be positive".into()));
    }
    let [l1, l2, l3] = l;
    // unit spacelike normals of the lines carrying the new sides, <e_i, e_j> = -cosh(old side)
    let e1 = Vector3::new(0.0, 1.0, 0.0);
    let e2 = Vector3::new(l3.sinh(), -l3.cosh(), 0.0);
    let y1 = -l2.cosh();
    let y0 = (l1.cosh() + l2.cosh() * l3.cosh()) / l3.sinh();
    let e3 = Vector3::new(y0, y1, (1.0 + y0 * y0 - y1 * y1).sqrt());
    let e = [e1, e2, e3];
    let foot = |i: usize, j: usize| {
        let v = e[j] - e[i] * minkowski3(&e[i], &e[j]);
        let v = v / (-minkowski3(&v, &v)).sqrt();
        if v[0] < 0.0 { -v } else { v }
    };
    let side = |i: usize| {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        (-minkowski3(&foot(i, j), &foot(i, k))).max(1.0).acosh()
    };
    Ok([side(0), side(1), side(2)])
}

/// Finite-difference Jacobian (step 1e-6) of the map from old to new hexagon side lengths,
/// and its singular values.
pub fn hexagon_jacobian(l: [f64; 3]) -> Result<(Matrix3<f64>, Vector3<f64>)> {
    let h = 1e-6;
    let mut jac = Matrix3::zeros();
    for c in 0..3 {
        let mut lp = l;
        let mut lm = l;
        lp[c] += h;
        lm[c] -= h;
        let fp = hexagon_new_lengths(lp)?;
        let fm = hexagon_new_lengths(lm)?;
        for r in 0..3 {
            jac[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    let sv = jac.svd(false, false).singular_values;
    Ok((jac, sv))
}

/// Lifts of the source vertices, for callers building trajectories.
pub fn lift_all(k: &[Vec3]) -> Result<Vec<Vec4>> {
    k.iter().map(lift_klein).collect()
}
