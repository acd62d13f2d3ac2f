//! Deaveraging of a flex into the pair `P_t`, `P_-t` with equal edge lengths, the three doubles
//! built from such pairs, and the search for two non-isometric doubles with equal cone angles.

use crate::conemanifold::{assemble, GluingSchema, Pairing, Piece};
use crate::error::{Error, Result};
use crate::generators::{edge_class, schonhardt, symmetric_schonhardt_flex, EdgeClass, SchonhardtParams};
use crate::geom::{hyperboloid_distance, Ambient, Model, ModelPoint};
use crate::polyhedron::Polyhedron;
use crate::rigidity::{minkowski_positions, pogorelov_field, quadric_path, rigidity_matrix, FlexField};
use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct DeaveragedPair {
    pub plus: Polyhedron,
    pub minus: Polyhedron,
    pub t: f64,
    /// Largest difference between corresponding edge lengths.
    pub max_length_difference: f64,
}

/// Moves every vertex along the normalized path `(p_i + s q_i) / sqrt(-<., .>)` for `s = t` and
/// `s = -t`. A Euclidean field is read as a flex of the Klein coordinates and transferred first.
pub fn deaverage(p: &Polyhedron, flex: &FlexField, t: f64) -> Result<DeaveragedPair> {
    if !p.is_hyperbolic() {
        return Err(Error::InvalidInput("deaveraging needs a hyperbolic polyhedron".into()));
    }
    let q = pogorelov_field(p.coords(), flex)?;
    let rm = rigidity_matrix(p, Ambient::Minkowski)?;
    let res = rm.relative_residual(&q)?;
    if res > 1e-9 {
        return Err(Error::NotAFlex(res));
    }
    let FlexField::Minkowski(v) = q else { unreachable!() };
    let pos = minkowski_positions(p)?;
    let build = |s: f64| -> Result<Polyhedron> {
        let pts = pos
            .iter()
            .zip(&v)
            .map(|(x, v)| quadric_path(x, v, s).map(ModelPoint::Hyperboloid))
            .collect::<Result<Vec<_>>>()?;
        Polyhedron::new(pts, p.faces().to_vec(), p.coloring().cloned())
    };
    let plus = build(t)?;
    let minus = build(-t)?;
    let max_length_difference = plus
        .edge_lengths()?
        .iter()
        .zip(&minus.edge_lengths()?)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(DeaveragedPair { plus, minus, t, max_length_difference })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Congruence {
    pub congruent: bool,
    /// Vertex permutation realizing the best match.
    pub automorphism: Vec<usize>,
    pub max_length_difference: f64,
    pub max_angle_difference: f64,
}

fn same_combinatorics(p: &Polyhedron, q: &Polyhedron) -> bool {
    let norm = |x: &Polyhedron| {
        let mut f: Vec<[usize; 3]> = x
            .faces()
            .iter()
            .map(|f| {
                let mut s = *f;
                s.sort();
                s
            })
            .collect();
        f.sort();
        f
    };
    p.num_vertices() == q.num_vertices() && norm(p) == norm(q)
}

/// Compares edge lengths and dihedral angles under every automorphism of the face lattice.
pub fn congruence_test(p: &Polyhedron, q: &Polyhedron, tol: f64) -> Result<Congruence> {
    if !same_combinatorics(p, q) {
        return Err(Error::InvalidInput("polyhedra have different combinatorics".into()));
    }
    let (lp, lq) = (p.edge_lengths()?, q.edge_lengths()?);
    let (ap, aq) = (p.dihedral_angles()?, q.dihedral_angles()?);
    let mut best: Option<Congruence> = None;
    for sigma in p.automorphisms() {
        let mut dl: f64 = 0.0;
        let mut da: f64 = 0.0;
        for (i, e) in p.edges().iter().enumerate() {
            let j = q
                .edge_between(sigma[e.ends[0]], sigma[e.ends[1]])
                .ok_or_else(|| Error::InvalidInput("automorphism does not map edges to edges".into()))?;
            dl = dl.max((lp[i] - lq[j]).abs());
            da = da.max((ap[i] - aq[j]).abs());
        }
        if best.as_ref().is_none_or(|b| dl.max(da) < b.max_length_difference.max(b.max_angle_difference)) {
            best = Some(Congruence { congruent: dl <= tol && da <= tol, automorphism: sigma, max_length_difference: dl, max_angle_difference: da });
        }
    }
    best.ok_or_else(|| Error::Degenerate("no automorphisms".into()))
}

/// Smallest, over automorphisms, of the largest edge-length difference.
pub fn edge_length_gap(p: &Polyhedron, q: &Polyhedron) -> Result<f64> {
    if !same_combinatorics(p, q) {
        return Err(Error::InvalidInput("polyhedra have different combinatorics".into()));
    }
    let (lp, lq) = (p.edge_lengths()?, q.edge_lengths()?);
    let mut gap = f64::INFINITY;
    for sigma in p.automorphisms() {
        let mut dl: f64 = 0.0;
        for (i, e) in p.edges().iter().enumerate() {
            let j = q.edge_between(sigma[e.ends[0]], sigma[e.ends[1]]).unwrap();
            dl = dl.max((lp[i] - lq[j]).abs());
        }
        gap = gap.min(dl);
    }
    Ok(gap)
}

/// The twisted octahedron with base edge `a` and height `b` read as a Klein-model polyhedron
/// centred in the ball, with its symmetric flex.
pub fn family_polyhedron(a: f64, b: f64) -> Result<(Polyhedron, FlexField)> {
    let params = SchonhardtParams::flexible(a, b)?;
    if params.circumradius() >= 1.0 {
        return Err(Error::InvalidInput(format!("(a, b) = ({a}, {b}) does not fit in the Klein ball")));
    }
    let e = schonhardt(&params)?;
    let q = symmetric_schonhardt_flex(&e, &params)?;
    Ok((e.reinterpret(Model::Klein)?, q))
}

/// The three doubles: 1 glues `P_t` to itself, 2 glues `P_t` to `P_-t`, 3 glues `P_-t` to itself.
pub fn family_schema(i: u8, t: f64, a: f64, b: f64) -> Result<GluingSchema> {
    let (p, q) = family_polyhedron(a, b)?;
    let pair = deaverage(&p, &q, t)?;
    let (first, second) = match i {
        1 => (pair.plus.clone(), pair.plus),
        2 => (pair.plus, pair.minus),
        3 => (pair.minus.clone(), pair.minus),
        _ => return Err(Error::InvalidInput(format!("family {i} is not 1, 2 or 3"))),
    };
    let pairings = first
        .faces()
        .iter()
        .enumerate()
        .map(|(f, vs)| {
            let face_b = second
                .faces()
                .iter()
                .position(|w| vs.iter().all(|v| w.contains(v)))
                .ok_or_else(|| Error::Gluing(format!("face {f} missing in the second piece")))?;
            let rotation_matches = (0..3).any(|k| second.faces()[face_b] == [vs[k], vs[(k + 1) % 3], vs[(k + 2) % 3]]);
            Ok(Pairing {
                piece_a: 0,
                face_a: f,
                piece_b: 1,
                face_b,
                vertex_map: vs.iter().map(|&v| (v, v)).collect(),
                orientation_preserving: rotation_matches,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let piece = |label: &str, source: Polyhedron, sign: i8| Piece { label: label.into(), source, truncated: false, flex_sign: sign };
    Ok(GluingSchema {
        name: format!("family{i}"),
        pieces: vec![piece("first", first, 1), piece("second", second, -1)],
        pairings,
        alternatives: vec![],
        expected_topology: Some("3-sphere with singular locus the 1-skeleton (not verified)".into()),
    })
}

const CLASS_ORDER: [EdgeClass; 3] = [EdgeClass::BaseTop, EdgeClass::ConvexLateral, EdgeClass::ReflexLateral];

/// Cone angles of the double of family `i` at `(t, a, b)`, one per edge class: base and top
/// edges, convex laterals, reflex laterals.
pub fn cone_angle_triple(i: u8, t: f64, a: f64, b: f64) -> Result<[f64; 3]> {
    if !(t >= 0.0) {
        return Err(Error::InvalidInput(format!("t = {t} must be non-negative")));
    }
    let m = assemble(&family_schema(i, t, a, b)?)?;
    let mut out = [0.0; 3];
    for (k, class) in CLASS_ORDER.iter().enumerate() {
        let angles: Vec<f64> = m
            .components
            .iter()
            .filter(|c| {
                let [u, v] = c.source_edges[0].1;
                edge_class(u, v) == *class
            })
            .map(|c| c.cone_angle)
            .collect();
        if angles.is_empty() {
            return Err(Error::Degenerate(format!("no singular component of class {class:?}")));
        }
        let lo = angles.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = angles.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if hi - lo > 1e-8 {
            return Err(Error::Degenerate(format!("class {class:?} angles spread by {:e}", hi - lo)));
        }
        out[k] = angles.iter().sum::<f64>() / angles.len() as f64;
    }
    Ok(out)
}

/// Twice the class dihedral angles of `P_s`, for signed `s`; equals family 1 for `s >= 0` and
/// family 3 at `-s` for `s < 0`.
fn signed_double_triple(s: f64, a: f64, b: f64) -> Result<[f64; 3]> {
    if s >= 0.0 {
        cone_angle_triple(1, s, a, b)
    } else {
        cone_angle_triple(3, -s, a, b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyPoint {
    pub family: u8,
    pub t: f64,
    pub a: f64,
    pub b: f64,
    pub angles: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Displacement {
    /// Largest vertex distance between the pieces of the first witness and `P_0(a1, b1)`.
    pub first_to_base: f64,
    pub second_to_base: f64,
    /// Largest vertex distance between `P_0(a1, b1)` and `P_0(a2, b2)`.
    pub base_to_base: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CollisionReport {
    pub eps: f64,
    pub a_range: [f64; 2],
    pub b_range: [f64; 2],
    pub first: FamilyPoint,
    pub second: FamilyPoint,
    pub angle_residual: f64,
    /// Smallest edge-length mismatch between the pieces of the two doubles over automorphisms.
    pub edge_length_gap: f64,
    pub non_isometric: bool,
    pub start_index: usize,
    pub iterations: usize,
    pub displacement: Displacement,
}

fn max_vertex_distance(p: &Polyhedron, q: &Polyhedron) -> Result<f64> {
    let (a, b) = (minkowski_positions(p)?, minkowski_positions(q)?);
    a.iter().zip(&b).map(|(x, y)| hyperboloid_distance(x, y)).try_fold(0.0, |m: f64, d| Ok(m.max(d?)))
}

fn residual(x: &Vector3<f64>, target: &[f64; 3]) -> Result<Vector3<f64>> {
    let f = signed_double_triple(x[0], x[1], x[2])?;
    Ok(Vector3::new(f[0] - target[0], f[1] - target[1], f[2] - target[2]))
}

struct NewtonResult {
    x: Vector3<f64>,
    iterations: usize,
}

fn newton(start: Vector3<f64>, target: &[f64; 3], tol: f64) -> Option<NewtonResult> {
    let h = 1e-6;
    let mut x = start;
    let mut r = residual(&x, target).ok()?;
    for it in 0..200 {
        if r.amax() < tol {
            return Some(NewtonResult { x, iterations: it });
        }
        let mut jac = Matrix3::zeros();
        for c in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[c] += h;
            xm[c] -= h;
            let col = (residual(&xp, target).ok()? - residual(&xm, target).ok()?) / (2.0 * h);
            jac.set_column(c, &col);
        }
        let step = jac.lu().solve(&(-r))?;
        let mut lambda = 1.0;
        loop {
            let trial = x + step * lambda;
            if let Ok(rt) = residual(&trial, target) {
                if rt.norm() < r.norm() {
                    x = trial;
                    r = rt;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-6 {
                return None;
            }
        }
    }
    (r.amax() < tol).then_some(NewtonResult { x, iterations: 200 })
}

/// Finds a double from family 2 and a double from family 1 or 3, with parameters in the given
/// intervals and `t` in `[0, eps]`, that have the same three cone angles. Family 2 is fixed at
/// `t = eps / 2` and interval midpoints; the other is solved by damped Newton from 27 starts.
pub fn collision_search(eps: f64, a_range: [f64; 2], b_range: [f64; 2], tol: f64) -> Result<CollisionReport> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput("eps must be positive".into()));
    }
    for r in [a_range, b_range] {
        if !(r[0] < r[1]) {
            return Err(Error::InvalidInput(format!("empty interval [{}, {}]", r[0], r[1])));
        }
    }
    let mid = |r: [f64; 2]| (r[0] + r[1]) / 2.0;
    let (t1, a1, b1) = (eps / 2.0, mid(a_range), mid(b_range));
    let target = cone_angle_triple(2, t1, a1, b1)?;
    let inside = |x: &Vector3<f64>| {
        x[0].abs() <= eps && (a_range[0]..=a_range[1]).contains(&x[1]) && (b_range[0]..=b_range[1]).contains(&x[2])
    };
    let grid = |r: [f64; 2], k: usize| r[0] + (r[1] - r[0]) * (k as f64 + 1.0) / 4.0;
    let starts: Vec<Vector3<f64>> = (0..27)
        .map(|n| Vector3::new(grid([-eps, eps], n / 9), grid(a_range, (n / 3) % 3), grid(b_range, n % 3)))
        .collect();
    let newton_tol = (tol * 1e-2).max(1e-13);
    let results: Vec<Option<NewtonResult>> = starts.par_iter().map(|s| newton(*s, &target, newton_tol)).collect();
    let (start_index, found) = results
        .into_iter()
        .enumerate()
        .find_map(|(i, r)| r.filter(|r| inside(&r.x)).map(|r| (i, r)))
        .ok_or_else(|| Error::SearchFailed("no multistart converged inside the parameter box".into()))?;
    let x = found.x;
    let (family, t2) = if x[0] >= 0.0 { (1, x[0]) } else { (3, -x[0]) };
    let angles2 = cone_angle_triple(family, t2, x[1], x[2])?;
    let angle_residual = (0..3).map(|k| (angles2[k] - target[k]).abs()).fold(0.0, f64::max);

    let (p1, q1) = family_polyhedron(a1, b1)?;
    let (p2, q2) = family_polyhedron(x[1], x[2])?;
    let pair1 = deaverage(&p1, &q1, t1)?;
    let pair2 = deaverage(&p2, &q2, t2)?;
    let piece2 = if family == 1 { &pair2.plus } else { &pair2.minus };
    let gap = edge_length_gap(&pair1.plus, piece2)?.min(edge_length_gap(&pair1.minus, piece2)?);
    let first_to_base = max_vertex_distance(&pair1.plus, &p1)?.max(max_vertex_distance(&pair1.minus, &p1)?);
    let second_to_base = max_vertex_distance(piece2, &p2)?;
    let base_to_base = max_vertex_distance(&p1, &p2)?;
    Ok(CollisionReport {
        eps,
        a_range,
        b_range,
        first: FamilyPoint { family: 2, t: t1, a: a1, b: b1, angles: target },
        second: FamilyPoint { family, t: t2, a: x[1], b: x[2], angles: angles2 },
        angle_residual,
        edge_length_gap: gap,
        non_isometric: gap > 1e-6,
        start_index,
        iterations: found.iterations,
        displacement: Displacement {
            first_to_base,
            second_to_base,
            base_to_base,
            bound: first_to_base + base_to_base + second_to_base,
        },
    })
}

/// Central-difference derivative of the cone-angle triple of family `i` in `t` at `t = 0`,
/// using the symmetric extension `t -> -t` (families 1 and 3 swap).
pub fn triple_derivative_at_zero(i: u8, a: f64, b: f64, h: f64) -> Result<[f64; 3]> {
    let fwd = cone_angle_triple(i, h, a, b)?;
    let mirror = match i {
        1 => 3,
        3 => 1,
        _ => 2,
    };
    let bwd = cone_angle_triple(mirror, h, a, b)?;
    Ok([0, 1, 2].map(|k| (fwd[k] - bwd[k]) / (2.0 * h)))
}

/// Whether every entry of a triple exceeds `2 pi`.
pub fn reflex_class_above_two_pi(triple: &[f64; 3]) -> bool {
    triple[2] > 2.0 * PI
}
