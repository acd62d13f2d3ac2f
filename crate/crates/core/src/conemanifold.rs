//! Cone-manifolds glued from copies of polyhedra: face pairings, singular locus, cone angles,
//! orientability, first-order angle preservation and branched-cover angle bookkeeping.

use crate::error::{Error, Result};
use crate::generators::{opposite, VERTEX_NAMES};
use crate::geom::{hyperboloid_distance, lift_klein, minkowski_metric, Vec4};
use crate::hyperideal::{polygon_angles, truncate};
use crate::polyhedron::Polyhedron;
use crate::rigidity::{flex_residual, flexed_coords, FlexField};
use nalgebra::{Matrix4, SMatrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};
use std::f64::consts::PI;

/// Cone angles within this distance of `2 pi` count as nonsingular.
pub const NONSINGULAR_TOL: f64 = 1e-8;
const ISOMETRY_TOL: f64 = 1e-9;

/// One copy of a polyhedron. Truncated pieces use the truncation of `source` (Klein model,
/// vertices beyond the ball); their faces are the old hexagons `0..F` followed by the new faces
/// `F + v` for every source vertex `v`.
#[derive(Debug, Clone)]
pub struct Piece {
    pub label: String,
    pub source: Polyhedron,
    pub truncated: bool,
    /// Sign of the base flex on this copy: +1, -1 or 0.
    pub flex_sign: i8,
}

/// Identification of face `face_a` of `piece_a` with `face_b` of `piece_b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pairing {
    pub piece_a: usize,
    pub face_a: usize,
    pub piece_b: usize,
    pub face_b: usize,
    /// Pairs `(vertex of piece_a, vertex of piece_b)`.
    pub vertex_map: Vec<(usize, usize)>,
    /// Whether the map carries the outward cyclic order of face a onto that of face b.
    pub orientation_preserving: bool,
}

/// A face pairing that is isometric but not chosen, kept for the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlternativePairing {
    pub chosen: usize,
    pub vertex_map: Vec<(usize, usize)>,
    pub extends_to_symmetry: bool,
}

#[derive(Debug, Clone)]
pub struct GluingSchema {
    pub name: String,
    pub pieces: Vec<Piece>,
    pub pairings: Vec<Pairing>,
    pub alternatives: Vec<AlternativePairing>,
    pub expected_topology: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemaKind {
    Double,
    DoubleOfDouble,
    ThreeComp,
    FourComp,
}

impl SchemaKind {
    pub fn name(self) -> &'static str {
        match self {
            SchemaKind::Double => "double",
            SchemaKind::DoubleOfDouble => "double_of_double",
            SchemaKind::ThreeComp => "three_comp",
            SchemaKind::FourComp => "four_comp",
        }
    }

    pub fn parse(s: &str) -> Result<SchemaKind> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "double" => Ok(SchemaKind::Double),
            "double_of_double" => Ok(SchemaKind::DoubleOfDouble),
            "three_comp" => Ok(SchemaKind::ThreeComp),
            "four_comp" => Ok(SchemaKind::FourComp),
            _ => Err(Error::InvalidInput(format!("unknown schema '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaceKind {
    Old,
    New,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PieceEdge {
    pub ends: [usize; 2],
    pub faces: [usize; 2],
    pub angle: f64,
    pub length: f64,
    /// Source vertices of the edge for old edges.
    pub source: Option<[usize; 2]>,
}

/// Derived combinatorics and metric data of one piece.
#[derive(Debug, Clone)]
pub struct PieceGeometry {
    /// Face cycles in outward cyclic order.
    pub faces: Vec<Vec<usize>>,
    pub face_kinds: Vec<FaceKind>,
    pub edges: Vec<PieceEdge>,
    /// Corner angles of every face, aligned with `faces`.
    pub face_angles: Vec<Vec<f64>>,
    pub points: Vec<Vec4>,
    pub hyperbolic: bool,
    edge_index: HashMap<(usize, usize), usize>,
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl PieceGeometry {
    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_index.get(&key(a, b)).copied()
    }

    pub fn num_vertices(&self) -> usize {
        self.points.len()
    }

    pub fn distance(&self, a: usize, b: usize) -> Result<f64> {
        if self.hyperbolic {
            hyperboloid_distance(&self.points[a], &self.points[b])
        } else {
            Ok((self.points[a] - self.points[b]).norm())
        }
    }
}

fn euclid_angle(x: &Vec4, y: &Vec4, z: &Vec4) -> f64 {
    let (u, w) = (y - x, z - x);
    (u.dot(&w) / (u.norm() * w.norm())).clamp(-1.0, 1.0).acos()
}

fn edges_from_faces(faces: &[Vec<usize>]) -> Result<(Vec<([usize; 2], [usize; 2])>, HashMap<(usize, usize), usize>)> {
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut out: Vec<([usize; 2], Vec<usize>)> = Vec::new();
    for (fi, f) in faces.iter().enumerate() {
        for k in 0..f.len() {
            let (a, b) = (f[k], f[(k + 1) % f.len()]);
            let id = *index.entry(key(a, b)).or_insert_with(|| {
                out.push(([a, b], Vec::new()));
                out.len() - 1
            });
            out[id].1.push(fi);
        }
    }
    let edges = out
        .into_iter()
        .map(|(ends, fs)| {
            if fs.len() != 2 {
                return Err(Error::NonManifoldEdge { edge: ends, count: fs.len() });
            }
            Ok((ends, [fs[0], fs[1]]))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((edges, index))
}

fn closed_geometry(p: &Polyhedron) -> Result<PieceGeometry> {
    let hyperbolic = p.is_hyperbolic();
    if hyperbolic && p.coords().iter().any(|c| c.norm() >= 1.0) {
        return Err(Error::Precondition("closed hyperbolic pieces need all vertices inside the ball".into()));
    }
    let points: Vec<Vec4> = if hyperbolic {
        p.coords().iter().map(lift_klein).collect::<Result<_>>()?
    } else {
        p.coords().iter().map(|c| Vec4::new(0.0, c[0], c[1], c[2])).collect()
    };
    let faces: Vec<Vec<usize>> = p.faces().iter().map(|f| f.to_vec()).collect();
    let angles = p.dihedral_angles()?;
    let lengths = p.edge_lengths()?;
    let mut edge_index = HashMap::new();
    let edges = p
        .edges()
        .iter()
        .enumerate()
        .map(|(i, e)| {
            edge_index.insert(key(e.ends[0], e.ends[1]), i);
            PieceEdge { ends: e.ends, faces: e.faces, angle: angles[i], length: lengths[i], source: Some(e.ends) }
        })
        .collect();
    let face_angles = faces
        .iter()
        .enumerate()
        .map(|(fi, f)| {
            let pts: Vec<Vec4> = f.iter().map(|&v| points[v]).collect();
            if hyperbolic {
                Ok(polygon_angles(&pts, &p.face_plane(fi)?.minkowski_normal()?))
            } else {
                Ok((0..3).map(|k| euclid_angle(&pts[k], &pts[(k + 2) % 3], &pts[(k + 1) % 3])).collect())
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PieceGeometry {
        face_kinds: vec![FaceKind::Old; faces.len()],
        faces,
        edges,
        face_angles,
        points,
        hyperbolic,
        edge_index,
    })
}

fn truncated_geometry(p: &Polyhedron) -> Result<PieceGeometry> {
    let t = truncate(p)?;
    let points = t.vertices().to_vec();
    let klein: Vec<_> = points.iter().map(|x| x.fixed_rows::<3>(1) / x[0]).collect();
    let mut faces: Vec<Vec<usize>> = Vec::new();
    let mut normals: Vec<Vec4> = Vec::new();
    let mut face_kinds = Vec::new();
    for (fi, h) in t.old_faces().iter().enumerate() {
        let plane = p.face_plane(fi)?;
        faces.push(h.to_vec());
        normals.push(plane.minkowski_normal()?);
        face_kinds.push(FaceKind::Old);
    }
    for (i, f) in t.new_faces().iter().enumerate() {
        faces.push(f.clone());
        normals.push(t.desitter()[i]);
        face_kinds.push(FaceKind::New);
    }
    // outward orientation in Klein coordinates, as for closed pieces
    for (f, n) in faces.iter_mut().zip(&normals) {
        let mut area = nalgebra::Vector3::zeros();
        for k in 0..f.len() {
            area += klein[f[k]].cross(&klein[f[(k + 1) % f.len()]]);
        }
        if area.dot(&n.fixed_rows::<3>(1)) < 0.0 {
            f.reverse();
        }
    }
    let (raw, edge_index) = edges_from_faces(&faces)?;
    let src_angles = p.dihedral_angles()?;
    let new_angles: HashMap<(usize, usize), f64> =
        t.new_edges().iter().map(|e| key(e[0], e[1])).zip(t.new_edge_dihedral_angles()?).collect();
    let keys = t.vertex_keys();
    let edges = raw
        .into_iter()
        .map(|(ends, fs)| {
            let (i, j) = keys[ends[0]];
            let (i2, _) = keys[ends[1]];
            let length = hyperboloid_distance(&points[ends[0]], &points[ends[1]])?;
            if i == i2 {
                Ok(PieceEdge { ends, faces: fs, angle: new_angles[&key(ends[0], ends[1])], length, source: None })
            } else {
                let e = p.edge_between(i, j).ok_or_else(|| Error::Degenerate(format!("no source edge {i}-{j}")))?;
                Ok(PieceEdge { ends, faces: fs, angle: src_angles[e], length, source: Some([i, j]) })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let face_angles = faces
        .iter()
        .zip(&normals)
        .map(|(f, n)| polygon_angles(&f.iter().map(|&v| points[v]).collect::<Vec<_>>(), n))
        .collect();
    Ok(PieceGeometry { faces, face_kinds, edges, face_angles, points, hyperbolic: true, edge_index })
}

pub fn piece_geometry(source: &Polyhedron, truncated: bool) -> Result<PieceGeometry> {
    if truncated {
        truncated_geometry(source)
    } else {
        closed_geometry(source)
    }
}

fn is_hyperideal(p: &Polyhedron) -> bool {
    p.is_hyperbolic() && p.coords().iter().all(|c| c.norm() > 1.0)
}

/// Whether `map` sends the cyclic order of `fa` to the cyclic order of `fb` (`Some(true)`), to
/// its reverse (`Some(false)`), or breaks adjacency (`None`).
fn map_orientation(fa: &[usize], fb: &[usize], map: &HashMap<usize, usize>) -> Option<bool> {
    let m = fa.len();
    if fb.len() != m {
        return None;
    }
    let pos = |v: usize| fb.iter().position(|&x| x == v);
    let images: Vec<usize> = fa.iter().map(|v| map.get(v).and_then(|&w| pos(w))).collect::<Option<_>>()?;
    let fwd = (0..m).all(|k| images[(k + 1) % m] == (images[k] + 1) % m);
    let bwd = (0..m).all(|k| (images[(k + 1) % m] + 1) % m == images[k]);
    match (fwd, bwd) {
        (true, _) => Some(true),
        (false, true) => Some(false),
        _ => None,
    }
}

fn identity_pairing(ga: &PieceGeometry, pa: usize, pb: usize, face: usize) -> Pairing {
    let f = &ga.faces[face];
    Pairing {
        piece_a: pa,
        face_a: face,
        piece_b: pb,
        face_b: face,
        vertex_map: f.iter().map(|&v| (v, v)).collect(),
        orientation_preserving: true,
    }
}

/// Candidate isometric maps from new face `v` to new face `w` of a truncated piece, the chosen one
/// being the restriction of a Lorentz transformation that maps `p_v` to `p_w` and permutes the
/// de Sitter vertices.
fn symmetric_face_map(
    src: &Polyhedron,
    g: &PieceGeometry,
    fv: usize,
    fw: usize,
    v: usize,
    w: usize,
) -> Result<(Vec<(usize, usize)>, Vec<Vec<(usize, usize)>>)> {
    let desitter = crate::rigidity::minkowski_positions(src)?;
    let a = &g.faces[fv];
    let b = &g.faces[fw];
    let m = a.len();
    if b.len() != m {
        return Err(Error::Gluing(format!("new faces {v} and {w} have different sizes")));
    }
    let mut compatible = Vec::new();
    for shift in 0..m {
        for reflect in [false, true] {
            let img: Vec<usize> =
                (0..m).map(|k| b[if reflect { (shift + m - k) % m } else { (shift + k) % m }]).collect();
            let mut ok = true;
            for x in 0..m {
                for y in x + 1..m {
                    if (g.distance(a[x], a[y])? - g.distance(img[x], img[y])?).abs() > ISOMETRY_TOL {
                        ok = false;
                    }
                }
            }
            if ok {
                compatible.push(img);
            }
        }
    }
    let j = minkowski_metric();
    let mut chosen = None;
    let mut others = Vec::new();
    for img in compatible {
        let mut xs = SMatrix::<f64, 4, 5>::zeros();
        let mut ys = SMatrix::<f64, 4, 5>::zeros();
        for k in 0..m.min(4) {
            xs.set_column(k, &g.points[a[k]]);
            ys.set_column(k, &g.points[img[k]]);
        }
        xs.set_column(4, &desitter[v]);
        ys.set_column(4, &desitter[w]);
        let gram = xs * xs.transpose();
        let extends = gram.try_inverse().is_some_and(|inv| {
            let l: Matrix4<f64> = ys * xs.transpose() * inv;
            let lorentz = (l.transpose() * j * l - j).norm() < 1e-8;
            let fits = (0..m).all(|k| (l * g.points[a[k]] - g.points[img[k]]).norm() < 1e-8);
            let permutes = desitter.iter().all(|p| desitter.iter().any(|q| (l * p - q).norm() < 1e-8));
            lorentz && fits && permutes
        });
        let map: Vec<(usize, usize)> = a.iter().copied().zip(img).collect();
        if extends && chosen.is_none() {
            chosen = Some(map);
        } else {
            others.push(map);
        }
    }
    let chosen = chosen.ok_or_else(|| {
        Error::Gluing(format!(
            "no isometry of new face {} onto {} extends to a symmetry of the piece",
            VERTEX_NAMES.get(v).unwrap_or(&"?"),
            VERTEX_NAMES.get(w).unwrap_or(&"?")
        ))
    })?;
    Ok((chosen, others))
}

fn labeled_octahedron(p: &Polyhedron) -> Result<()> {
    if !is_hyperideal(p) {
        return Err(Error::Precondition("schema needs a hyperideal piece with old and new faces".into()));
    }
    if p.num_vertices() != 6 || (0..6).any(|v| p.edge_between(v, opposite(v)).is_some()) {
        return Err(Error::Precondition(
            "schema needs an octahedron labeled A, B, C, A', B', C' with opposite vertices v and v+3".into(),
        ));
    }
    Ok(())
}

/// The named gluing of copies of `source`. A hyperideal Klein source is truncated first.
pub fn builtin_schema(kind: SchemaKind, source: &Polyhedron) -> Result<GluingSchema> {
    let truncated = is_hyperideal(source);
    let piece = |label: &str, sign: i8| Piece { label: label.into(), source: source.clone(), truncated, flex_sign: sign };
    let g = piece_geometry(source, truncated)?;
    let nf = source.faces().len();
    let old: Vec<usize> = (0..nf).collect();
    let mut pairings = Vec::new();
    let mut alternatives = Vec::new();
    let mut new_face_pair = |pa: usize, pb: usize, v: usize, w: usize, pairings: &mut Vec<Pairing>| -> Result<()> {
        let (map, others) = symmetric_face_map(source, &g, nf + v, nf + w, v, w)?;
        let hm: HashMap<usize, usize> = map.iter().copied().collect();
        let orientation_preserving = map_orientation(&g.faces[nf + v], &g.faces[nf + w], &hm)
            .ok_or_else(|| Error::Gluing("face map breaks adjacency".into()))?;
        let idx = pairings.len();
        pairings.push(Pairing { piece_a: pa, face_a: nf + v, piece_b: pb, face_b: nf + w, vertex_map: map, orientation_preserving });
        alternatives.extend(others.into_iter().map(|m| AlternativePairing { chosen: idx, vertex_map: m, extends_to_symmetry: false }));
        Ok(())
    };
    let (name, pieces, topology) = match kind {
        SchemaKind::Double => {
            for &f in &old {
                pairings.push(identity_pairing(&g, 0, 1, f));
            }
            let topo = (!truncated).then(|| "3-sphere with singular locus the 1-skeleton (not verified)".to_string());
            ("double", vec![piece("P", 1), piece("P'", -1)], topo)
        }
        SchemaKind::DoubleOfDouble => {
            labeled_octahedron(source)?;
            for &f in &old {
                pairings.push(identity_pairing(&g, 0, 1, f));
                pairings.push(identity_pairing(&g, 2, 3, f));
            }
            for v in 0..6 {
                pairings.push(identity_pairing(&g, 0, 2, nf + v));
                pairings.push(identity_pairing(&g, 1, 3, nf + v));
            }
            ("double_of_double", vec![piece("T1", 1), piece("U1", -1), piece("T2", 1), piece("U2", -1)], None)
        }
        SchemaKind::ThreeComp => {
            labeled_octahedron(source)?;
            for &f in &old {
                pairings.push(identity_pairing(&g, 0, 1, f));
            }
            for v in 0..3 {
                new_face_pair(0, 0, v, opposite(v), &mut pairings)?;
                new_face_pair(1, 1, v, opposite(v), &mut pairings)?;
            }
            ("three_comp", vec![piece("T", 1), piece("U", -1)], None)
        }
        SchemaKind::FourComp => {
            labeled_octahedron(source)?;
            for &f in &old {
                pairings.push(identity_pairing(&g, 0, 1, f));
                pairings.push(identity_pairing(&g, 2, 3, f));
            }
            for v in 0..6 {
                new_face_pair(0, 2, v, opposite(v), &mut pairings)?;
                new_face_pair(1, 3, v, opposite(v), &mut pairings)?;
            }
            ("four_comp", vec![piece("T1", 1), piece("U1", -1), piece("T2", 1), piece("U2", -1)], None)
        }
    };
    let schema = GluingSchema { name: name.into(), pieces, pairings, alternatives, expected_topology: topology };
    if kind == SchemaKind::FourComp && !new_face_graph_bipartite(&schema, &[0, 1], &[2, 3]) {
        return Err(Error::Gluing("new-face gluings do not join copy 1 to copy 2 only".into()));
    }
    Ok(schema)
}

/// True when every new-face pairing joins a piece of `left` to a piece of `right`, and each piece
/// is glued along new faces to exactly one other piece.
pub fn new_face_graph_bipartite(schema: &GluingSchema, left: &[usize], right: &[usize]) -> bool {
    let mut partners: HashMap<usize, BTreeSet<usize>> = HashMap::new();
    for p in &schema.pairings {
        let nf_a = schema.pieces[p.piece_a].source.faces().len();
        if !schema.pieces[p.piece_a].truncated || p.face_a < nf_a {
            continue;
        }
        let crosses = (left.contains(&p.piece_a) && right.contains(&p.piece_b))
            || (right.contains(&p.piece_a) && left.contains(&p.piece_b));
        if !crosses {
            return false;
        }
        partners.entry(p.piece_a).or_default().insert(p.piece_b);
        partners.entry(p.piece_b).or_default().insert(p.piece_a);
    }
    partners.values().all(|s| s.len() == 1)
}

/// The wedges `(piece, edge)` around one edge of the glued complex.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeCycle {
    pub wedges: Vec<(usize, usize)>,
    pub closed: bool,
    pub angle: f64,
    pub length: f64,
    /// Vertex classes of the two ends.
    pub ends: [usize; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SingularComponent {
    /// Indices into `ConeManifold::cycles`.
    pub arcs: Vec<usize>,
    pub cone_angle: f64,
    pub length: f64,
    pub is_circle: bool,
    /// `(piece, [i, j])` for every constituent wedge with a source edge.
    pub source_edges: Vec<(usize, [usize; 2])>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConeManifold {
    pub schema: String,
    pub cycles: Vec<EdgeCycle>,
    pub components: Vec<SingularComponent>,
    pub vertex_classes: usize,
    pub orientable: bool,
    pub has_boundary: bool,
    pub expected_topology: Option<String>,
}

impl ConeManifold {
    pub fn singular_angles(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.cone_angle).collect()
    }
}

struct Glued {
    geoms: Vec<PieceGeometry>,
    partner: HashMap<(usize, usize), (usize, usize, HashMap<usize, usize>)>,
}

fn union_find_root(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    let mut y = x;
    while parent[y] != r {
        let n = parent[y];
        parent[y] = r;
        y = n;
    }
    r
}

fn validate(schema: &GluingSchema, geoms: Vec<PieceGeometry>) -> Result<Glued> {
    let mut partner = HashMap::new();
    for (pi, p) in schema.pairings.iter().enumerate() {
        let (ga, gb) = match (geoms.get(p.piece_a), geoms.get(p.piece_b)) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::Gluing(format!("pairing {pi} names a missing piece"))),
        };
        let (fa, fb) = match (ga.faces.get(p.face_a), gb.faces.get(p.face_b)) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::Gluing(format!("pairing {pi} names a missing face"))),
        };
        let fwd: HashMap<usize, usize> = p.vertex_map.iter().copied().collect();
        let bwd: HashMap<usize, usize> = p.vertex_map.iter().map(|&(a, b)| (b, a)).collect();
        if fwd.len() != fa.len() || bwd.len() != fb.len() || fa.iter().any(|v| !fwd.contains_key(v)) {
            return Err(Error::Gluing(format!("pairing {pi}: vertex map is not a bijection of the faces")));
        }
        let orient = map_orientation(fa, fb, &fwd)
            .ok_or_else(|| Error::Gluing(format!("pairing {pi}: vertex map breaks face adjacency")))?;
        if orient != p.orientation_preserving {
            return Err(Error::Gluing(format!("pairing {pi}: orientation flag disagrees with the vertex map")));
        }
        let m = fa.len();
        for k in 0..m {
            let (u, v) = (fa[k], fa[(k + 1) % m]);
            let la = ga.distance(u, v)?;
            let lb = gb.distance(fwd[&u], fwd[&v])?;
            if (la - lb).abs() > ISOMETRY_TOL * la.max(1.0) {
                return Err(Error::Gluing(format!("pairing {pi}: faces are not isometric (edge {u}-{v})")));
            }
        }
        let pos_b = |x: usize| fb.iter().position(|&y| y == x).unwrap();
        for k in 0..m {
            let (aa, ab) = (ga.face_angles[p.face_a][k], gb.face_angles[p.face_b][pos_b(fwd[&fa[k]])]);
            if (aa - ab).abs() > ISOMETRY_TOL {
                return Err(Error::Gluing(format!("pairing {pi}: face angles differ at vertex {}", fa[k])));
            }
        }
        for (side, target) in [((p.piece_a, p.face_a), (p.piece_b, p.face_b, fwd)), ((p.piece_b, p.face_b), (p.piece_a, p.face_a, bwd))] {
            if partner.insert(side, target).is_some() {
                return Err(Error::Gluing(format!("face {} of piece {} is paired twice", side.1, side.0)));
            }
        }
    }
    Ok(Glued { geoms, partner })
}

fn trace_cycles(g: &Glued) -> Result<Vec<(Vec<(usize, usize)>, bool)>> {
    let total: usize = g.geoms.iter().map(|x| x.edges.len()).sum();
    let mut seen: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut out = Vec::new();
    // walk from `start` leaving through `face`; returns the wedges met and whether it closed
    let walk = |start: (usize, usize), face: usize| -> Result<(Vec<(usize, usize)>, bool)> {
        let mut list = Vec::new();
        let (mut cur, mut f) = (start, face);
        for _ in 0..=total {
            let Some((q, gf, map)) = g.partner.get(&(cur.0, f)) else {
                return Ok((list, false));
            };
            let [u, v] = g.geoms[cur.0].edges[cur.1].ends;
            let e2 = g.geoms[*q]
                .edge_between(map[&u], map[&v])
                .ok_or_else(|| Error::Gluing(format!("edge {u}-{v} of piece {} has no image", cur.0)))?;
            if (*q, e2) == start {
                return Ok((list, true));
            }
            let fs = g.geoms[*q].edges[e2].faces;
            f = if fs[0] == *gf { fs[1] } else { fs[0] };
            cur = (*q, e2);
            list.push(cur);
        }
        Err(Error::Gluing("edge cycle does not close".into()))
    };
    for (pi, geom) in g.geoms.iter().enumerate() {
        for (ei, e) in geom.edges.iter().enumerate() {
            if seen.contains(&(pi, ei)) {
                continue;
            }
            let (fwd, closed) = walk((pi, ei), e.faces[1])?;
            let wedges = if closed {
                std::iter::once((pi, ei)).chain(fwd).collect::<Vec<_>>()
            } else {
                let (back, _) = walk((pi, ei), e.faces[0])?;
                back.into_iter().rev().chain(std::iter::once((pi, ei))).chain(fwd).collect()
            };
            for w in &wedges {
                if !seen.insert(*w) {
                    return Err(Error::Gluing(format!("wedge {w:?} lies on two edge cycles")));
                }
            }
            out.push((wedges, closed));
        }
    }
    Ok(out)
}

fn orientability(schema: &GluingSchema) -> bool {
    let n = schema.pieces.len();
    let mut sign: Vec<Option<i8>> = vec![None; n];
    let mut adj: Vec<Vec<(usize, i8)>> = vec![Vec::new(); n];
    for p in &schema.pairings {
        // an order-preserving face map reverses the induced orientations unless the signs differ
        let rel = if p.orientation_preserving { -1 } else { 1 };
        adj[p.piece_a].push((p.piece_b, rel));
        adj[p.piece_b].push((p.piece_a, rel));
    }
    for s in 0..n {
        if sign[s].is_some() {
            continue;
        }
        sign[s] = Some(1);
        let mut stack = vec![s];
        while let Some(x) = stack.pop() {
            for &(y, rel) in &adj[x] {
                let want = sign[x].unwrap() * rel;
                match sign[y] {
                    None => {
                        sign[y] = Some(want);
                        stack.push(y);
                    }
                    Some(v) if v != want => return false,
                    _ => {}
                }
            }
        }
    }
    true
}

/// Builds the geometry of every piece and glues them.
pub fn assemble(schema: &GluingSchema) -> Result<ConeManifold> {
    let geoms = schema
        .pieces
        .iter()
        .map(|p| piece_geometry(&p.source, p.truncated))
        .collect::<Result<Vec<_>>>()?;
    assemble_with(schema, geoms)
}

fn assemble_with(schema: &GluingSchema, geoms: Vec<PieceGeometry>) -> Result<ConeManifold> {
    let glued = validate(schema, geoms)?;
    let geoms = &glued.geoms;
    let offsets: Vec<usize> = geoms
        .iter()
        .scan(0, |acc, g| {
            let o = *acc;
            *acc += g.num_vertices();
            Some(o)
        })
        .collect();
    let total_v: usize = geoms.iter().map(|g| g.num_vertices()).sum();
    let mut parent: Vec<usize> = (0..total_v).collect();
    for p in &schema.pairings {
        for &(a, b) in &p.vertex_map {
            let ra = union_find_root(&mut parent, offsets[p.piece_a] + a);
            let rb = union_find_root(&mut parent, offsets[p.piece_b] + b);
            parent[ra] = rb;
        }
    }
    let mut class_id: HashMap<usize, usize> = HashMap::new();
    let mut vclass = vec![0; total_v];
    for x in 0..total_v {
        let r = union_find_root(&mut parent, x);
        let n = class_id.len();
        vclass[x] = *class_id.entry(r).or_insert(n);
    }

    let mut cycles = Vec::new();
    for (wedges, closed) in trace_cycles(&glued)? {
        let (p0, e0) = wedges[0];
        let length = geoms[p0].edges[e0].length;
        for &(p, e) in &wedges {
            let l = geoms[p].edges[e].length;
            if (l - length).abs() > ISOMETRY_TOL * length.max(1.0) {
                return Err(Error::Gluing(format!("identified edges have lengths {length} and {l}")));
            }
        }
        let angle = wedges.iter().map(|&(p, e)| geoms[p].edges[e].angle).sum();
        let [u, v] = geoms[p0].edges[e0].ends;
        cycles.push(EdgeCycle { wedges, closed, angle, length, ends: [vclass[offsets[p0] + u], vclass[offsets[p0] + v]] });
    }

    let singular: Vec<usize> = (0..cycles.len())
        .filter(|&c| cycles[c].closed && (cycles[c].angle - 2.0 * PI).abs() > NONSINGULAR_TOL)
        .collect();
    let mut at_node: HashMap<usize, Vec<usize>> = HashMap::new();
    for &c in &singular {
        for end in cycles[c].ends {
            at_node.entry(end).or_default().push(c);
        }
    }
    let other_end = |c: usize, node: usize| if cycles[c].ends[0] == node { cycles[c].ends[1] } else { cycles[c].ends[0] };
    let mut visited: BTreeSet<usize> = BTreeSet::new();
    let mut components = Vec::new();
    for &s in &singular {
        if !visited.insert(s) {
            continue;
        }
        let mut arcs = vec![s];
        let mut is_circle = false;
        for dir in [1usize, 0] {
            if is_circle {
                break;
            }
            let mut cur = s;
            let mut node = cycles[s].ends[dir];
            loop {
                let here = &at_node[&node];
                if here.len() != 2 {
                    break;
                }
                let next = if here[0] == cur { here[1] } else { here[0] };
                if next == s {
                    is_circle = true;
                    break;
                }
                if !visited.insert(next) {
                    break;
                }
                if dir == 1 {
                    arcs.push(next);
                } else {
                    arcs.insert(0, next);
                }
                node = other_end(next, node);
                cur = next;
            }
        }
        let cone_angle = cycles[s].angle;
        for &a in &arcs {
            if (cycles[a].angle - cone_angle).abs() > NONSINGULAR_TOL {
                return Err(Error::Gluing(format!(
                    "cone angle changes along a component: {} vs {cone_angle}",
                    cycles[a].angle
                )));
            }
            if (cycles[a].length - cycles[s].length).abs() > ISOMETRY_TOL * cycles[s].length.max(1.0) {
                return Err(Error::Gluing("merged arcs have different lengths".into()));
            }
        }
        let length = arcs.iter().map(|&a| cycles[a].length).sum();
        let mut source_edges: Vec<(usize, [usize; 2])> = arcs
            .iter()
            .flat_map(|&a| cycles[a].wedges.iter())
            .filter_map(|&(p, e)| geoms[p].edges[e].source.map(|s| (p, [s[0].min(s[1]), s[0].max(s[1])])))
            .collect();
        source_edges.sort();
        source_edges.dedup();
        components.push(SingularComponent { arcs, cone_angle, length, is_circle, source_edges });
    }

    let paired: BTreeSet<(usize, usize)> = glued.partner.keys().copied().collect();
    let has_boundary = geoms.iter().enumerate().any(|(p, g)| (0..g.faces.len()).any(|f| !paired.contains(&(p, f))));
    Ok(ConeManifold {
        schema: schema.name.clone(),
        cycles,
        components,
        vertex_classes: class_id.len(),
        orientable: orientability(schema),
        has_boundary,
        expected_topology: schema.expected_topology.clone(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComponentVariation {
    pub component: usize,
    pub cone_angle: f64,
    /// Signed sum of wedge angle derivatives, per arc.
    pub arc_variations: Vec<f64>,
    pub max_variation: f64,
    pub max_length_variation: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifoldFlexReport {
    pub step: f64,
    pub flex_residual: f64,
    pub components: Vec<ComponentVariation>,
    pub max_component_variation: f64,
    /// Largest angle derivative over every closed edge cycle, singular or not.
    pub max_cycle_variation: f64,
    /// Largest first-order disagreement of paired face shapes.
    pub max_pairing_mismatch: f64,
    pub max_length_variation: f64,
    /// Largest first-order change of a wedge dihedral angle.
    pub witness: f64,
    pub nontrivial: bool,
    pub passed: bool,
}

/// Finite-difference check (step `h`) that the signed base flex on every piece keeps the cone
/// angles fixed to first order while deforming the pieces.
pub fn manifold_flex_check(schema: &GluingSchema, flex: &FlexField, h: f64) -> Result<ManifoldFlexReport> {
    if !(h > 0.0) {
        return Err(Error::InvalidInput("step must be positive".into()));
    }
    let flex = flex.normalized();
    let base = assemble(schema)?;
    let mut residual: f64 = 0.0;
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for piece in &schema.pieces {
        if flex.len() != piece.source.num_vertices() {
            return Err(Error::InvalidInput("flex length differs from the piece vertex count".into()));
        }
        residual = residual.max(flex_residual(&piece.source, &flex)?);
        let s = piece.flex_sign as f64;
        for (dt, out) in [(h, &mut plus), (-h, &mut minus)] {
            let moved = if s == 0.0 {
                piece.source.clone()
            } else {
                piece.source.with_coords(flexed_coords(&piece.source, &flex, s * dt)?)?
            };
            out.push(piece_geometry(&moved, piece.truncated)?);
        }
    }
    if residual > 1e-8 {
        return Err(Error::NotAFlex(residual));
    }
    let d = |a: f64, b: f64| (a - b) / (2.0 * h);
    let dangle = |p: usize, e: usize| d(plus[p].edges[e].angle, minus[p].edges[e].angle);
    let dlen = |p: usize, e: usize| d(plus[p].edges[e].length, minus[p].edges[e].length);

    let cycle_var = |c: &EdgeCycle| c.wedges.iter().map(|&(p, e)| dangle(p, e)).sum::<f64>();
    let max_cycle_variation = base.cycles.iter().filter(|c| c.closed).map(|c| cycle_var(c).abs()).fold(0.0, f64::max);
    let components: Vec<ComponentVariation> = base
        .components
        .iter()
        .enumerate()
        .map(|(i, comp)| {
            let arc_variations: Vec<f64> = comp.arcs.iter().map(|&a| cycle_var(&base.cycles[a])).collect();
            let max_length_variation = comp
                .arcs
                .iter()
                .flat_map(|&a| base.cycles[a].wedges.iter())
                .map(|&(p, e)| dlen(p, e).abs())
                .fold(0.0, f64::max);
            ComponentVariation {
                component: i,
                cone_angle: comp.cone_angle,
                max_variation: arc_variations.iter().map(|v| v.abs()).fold(0.0, f64::max),
                arc_variations,
                max_length_variation,
            }
        })
        .collect();
    let max_component_variation = components.iter().map(|c| c.max_variation).fold(0.0, f64::max);
    let max_length_variation = components.iter().map(|c| c.max_length_variation).fold(0.0, f64::max);

    let mut max_pairing_mismatch: f64 = 0.0;
    for p in &schema.pairings {
        let fa = &plus[p.piece_a].faces[p.face_a];
        let fb = &plus[p.piece_b].faces[p.face_b];
        let map: HashMap<usize, usize> = p.vertex_map.iter().copied().collect();
        for (k, v) in fa.iter().enumerate() {
            let kb = fb.iter().position(|x| *x == map[v]).unwrap();
            let da = d(plus[p.piece_a].face_angles[p.face_a][k], minus[p.piece_a].face_angles[p.face_a][k]);
            let db = d(plus[p.piece_b].face_angles[p.face_b][kb], minus[p.piece_b].face_angles[p.face_b][kb]);
            max_pairing_mismatch = max_pairing_mismatch.max((da - db).abs());
            let w = fa[(k + 1) % fa.len()];
            let dla = d(plus[p.piece_a].distance(*v, w)?, minus[p.piece_a].distance(*v, w)?);
            let dlb = d(plus[p.piece_b].distance(map[v], map[&w])?, minus[p.piece_b].distance(map[v], map[&w])?);
            max_pairing_mismatch = max_pairing_mismatch.max((dla - dlb).abs());
        }
    }
    let witness = (0..plus.len())
        .flat_map(|p| (0..plus[p].edges.len()).map(move |e| (p, e)))
        .map(|(p, e)| dangle(p, e).abs())
        .fold(0.0, f64::max);
    let nontrivial = witness > 1e-3;
    let passed = max_component_variation < 1e-6 && max_pairing_mismatch < 1e-6 && nontrivial;
    Ok(ManifoldFlexReport {
        step: h,
        flex_residual: residual,
        components,
        max_component_variation,
        max_cycle_variation,
        max_pairing_mismatch,
        max_length_variation,
        witness,
        nontrivial,
        passed,
    })
}

/// A word in the meridian generators: `(generator, exponent)` letters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeridianWord {
    pub name: String,
    /// Edge of the twisted octahedron the meridian encircles.
    pub edge: [usize; 2],
    pub letters: Vec<(usize, i64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeridianSystem {
    pub generators: Vec<String>,
    pub words: Vec<MeridianWord>,
}

impl MeridianSystem {
    pub fn validate(&self) -> Result<()> {
        for w in &self.words {
            if w.letters.is_empty() {
                return Err(Error::InvalidInput(format!("meridian word {} is empty", w.name)));
            }
            if let Some((g, _)) = w.letters.iter().find(|(g, _)| *g >= self.generators.len()) {
                return Err(Error::InvalidInput(format!("word {} uses unknown generator {g}", w.name)));
            }
        }
        Ok(())
    }

    /// Image of word `w` in `Z_n` under `assignment`.
    pub fn evaluate(&self, w: usize, assignment: &[u64], n: u64) -> u64 {
        let s: i128 = self.words[w].letters.iter().map(|&(g, e)| assignment[g] as i128 * e as i128).sum();
        s.rem_euclid(n as i128) as u64
    }

    pub fn images(&self, assignment: &[u64], n: u64) -> Vec<u64> {
        (0..self.words.len()).map(|w| self.evaluate(w, assignment, n)).collect()
    }

    pub fn word_for_edge(&self, u: usize, v: usize) -> Option<usize> {
        self.words.iter().position(|w| (w.edge == [u, v]) || (w.edge == [v, u]))
    }
}

fn word(name: &str, edge: [usize; 2], letters: &[(usize, i64)]) -> MeridianWord {
    MeridianWord { name: name.into(), edge, letters: letters.to_vec() }
}

/// Meridians of the edges of a triangular prism (the nine edges of the twisted octahedron with
/// dihedral angle below pi), generated by those of the four-cycle `BA', AB, C'A', AC'`.
pub fn prism_meridian_system() -> MeridianSystem {
    use crate::generators::{A, A1, B, B1, C, C1};
    MeridianSystem {
        generators: vec!["a1".into(), "a2".into(), "a3".into(), "a4".into()],
        words: vec![
            word("a1", [B, A1], &[(0, 1)]),
            word("a2", [A, B], &[(1, 1)]),
            word("a3", [A, C1], &[(2, 1)]),
            word("a4", [C1, A1], &[(3, 1)]),
            word("a2a3", [A, C], &[(1, 1), (2, 1)]),
            word("a4a3", [C1, B1], &[(3, 1), (2, 1)]),
            word("a2a1", [B, C], &[(1, 1), (0, 1)]),
            word("a4a1", [A1, B1], &[(3, 1), (0, 1)]),
            word("a1^-1a3", [C, B1], &[(0, -1), (2, 1)]),
        ],
    }
}

/// Every assignment of generators to `Z_n` under which all meridians map to nonzero elements,
/// in lexicographic order.
pub fn meridian_cover_search(system: &MeridianSystem, n: u64) -> Result<Vec<Vec<u64>>> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("cover degree {n} must be at least 2")));
    }
    system.validate()?;
    let g = system.generators.len() as u32;
    let total = n.checked_pow(g).filter(|&t| t <= 1 << 32).ok_or_else(|| {
        Error::InvalidInput(format!("{n}^{g} assignments is too many for an exhaustive search"))
    })?;
    let decode = |mut idx: u64| {
        let mut a = vec![0u64; g as usize];
        for slot in a.iter_mut().rev() {
            *slot = idx % n;
            idx /= n;
        }
        a
    };
    Ok((0..total)
        .into_par_iter()
        .filter_map(|idx| {
            let a = decode(idx);
            (0..system.words.len()).all(|w| system.evaluate(w, &a, n) != 0).then_some(a)
        })
        .collect())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LiftedComponent {
    pub component: usize,
    pub base_angle: f64,
    pub branched: bool,
    /// Order of the meridian image in `Z_k` (1 for unbranched components).
    pub order: u64,
    pub angle: f64,
    /// Number of preimage components.
    pub copies: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LiftedAngles {
    pub sheets: u64,
    pub components: Vec<LiftedComponent>,
    pub min_angle: f64,
    pub all_above_two_pi: bool,
    /// Flexibility of the base passes to the cover.
    pub flexibility_inherited: bool,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 { a } else { gcd(b, a % b) }
}

/// Cone angles of the `k`-sheeted cyclic cover branched over the listed components, each given
/// with the image of its meridian in `Z_k`.
pub fn lift_cone_angles(m: &ConeManifold, branched: &[(usize, u64)], k: u64) -> Result<LiftedAngles> {
    if k < 2 {
        return Err(Error::InvalidInput(format!("cover degree {k} must be at least 2")));
    }
    let mut image: HashMap<usize, u64> = HashMap::new();
    for &(c, g) in branched {
        if c >= m.components.len() {
            return Err(Error::InvalidInput(format!("no singular component {c}")));
        }
        if g % k == 0 {
            return Err(Error::InvalidInput(format!("component {c} has trivial meridian image")));
        }
        image.insert(c, g % k);
    }
    let components: Vec<LiftedComponent> = m
        .components
        .iter()
        .enumerate()
        .map(|(i, c)| match image.get(&i) {
            Some(&g) => {
                let order = k / gcd(g, k);
                LiftedComponent {
                    component: i,
                    base_angle: c.cone_angle,
                    branched: true,
                    order,
                    angle: c.cone_angle * order as f64,
                    copies: k / order,
                }
            }
            None => LiftedComponent {
                component: i,
                base_angle: c.cone_angle,
                branched: false,
                order: 1,
                angle: c.cone_angle,
                copies: k,
            },
        })
        .collect();
    let min_angle = components.iter().map(|c| c.angle).fold(f64::INFINITY, f64::min);
    Ok(LiftedAngles { sheets: k, all_above_two_pi: min_angle > 2.0 * PI, min_angle, components, flexibility_inherited: true })
}

/// Meridian images of the components of a double of a truncated twisted octahedron whose cone
/// angle is below `2 pi`, read off the prism system.
pub fn prism_branch_data(m: &ConeManifold, system: &MeridianSystem, assignment: &[u64], n: u64) -> Result<Vec<(usize, u64)>> {
    let mut out = Vec::new();
    for (i, c) in m.components.iter().enumerate() {
        if c.cone_angle >= 2.0 * PI {
            continue;
        }
        let edges: BTreeSet<[usize; 2]> = c.source_edges.iter().map(|(_, e)| *e).collect();
        let [u, v] = *edges
            .iter()
            .next()
            .ok_or_else(|| Error::InvalidInput(format!("component {i} has no source edge")))?;
        let w = system
            .word_for_edge(u, v)
            .ok_or_else(|| Error::InvalidInput(format!("edge {u}-{v} has no meridian word")))?;
        out.push((i, system.evaluate(w, assignment, n)));
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LargeAngleCover {
    pub ratio: f64,
    pub shrink: f64,
    /// Smallest dihedral angle of the truncated piece at an old edge.
    pub min_dihedral: f64,
    pub sheets: u64,
    pub assignment: Vec<u64>,
    pub meridian_images: Vec<u64>,
    /// Singular components of the double along old faces, before lifting.
    pub base_angles: Vec<f64>,
    pub lifted: LiftedAngles,
}

/// Double along old faces of the truncated hyperideal twisted octahedron matching the ideal
/// octahedron of `ratio` (vertices pushed out by `1 / shrink`), lifted to the `n`-sheeted cover
/// given by `assignment` on the prism meridians.
pub fn large_angle_cover(ratio: f64, shrink: f64, assignment: &[u64], n: u64) -> Result<LargeAngleCover> {
    use crate::generators::{hyperideal_schonhardt, inscribed_params_for_ratio};
    let source = hyperideal_schonhardt(&inscribed_params_for_ratio(ratio)?, shrink)?;
    let min_dihedral = source.dihedral_angles()?.into_iter().fold(f64::INFINITY, f64::min);
    let system = prism_meridian_system();
    if assignment.len() != system.generators.len() {
        return Err(Error::InvalidInput(format!(
            "assignment needs {} entries, got {}",
            system.generators.len(),
            assignment.len()
        )));
    }
    let m = assemble(&builtin_schema(SchemaKind::Double, &source)?)?;
    let branch = prism_branch_data(&m, &system, assignment, n)?;
    let lifted = lift_cone_angles(&m, &branch, n)?;
    Ok(LargeAngleCover {
        ratio,
        shrink,
        min_dihedral,
        sheets: n,
        assignment: assignment.to_vec(),
        meridian_images: system.images(assignment, n),
        base_angles: m.singular_angles(),
        lifted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{
        edge_class, hyperideal_schonhardt, schonhardt, symmetric_schonhardt_flex, EdgeClass, SchonhardtParams,
    };
    use crate::geom::{Ambient, Model};
    use crate::polyhedron::regular_octahedron;
    use crate::rigidity::{killing_complement_norm, rigidity_matrix};
    use approx::assert_abs_diff_eq;

    fn params() -> SchonhardtParams {
        SchonhardtParams::flexible(1.0, 1.0).unwrap()
    }

    fn klein_schonhardt() -> Polyhedron {
        let p = schonhardt(&params()).unwrap();
        let k: Vec<_> = p.coords().iter().map(|c| c * 0.5).collect();
        p.reinterpret(Model::Klein).unwrap().with_coords(k).unwrap()
    }

    fn hyperideal() -> Polyhedron {
        hyperideal_schonhardt(&params(), 0.95).unwrap()
    }

    fn flex_for(p: &Polyhedron) -> FlexField {
        let e = p.reinterpret(Model::Euclidean).unwrap();
        symmetric_schonhardt_flex(&e, &params()).unwrap()
    }

    #[test]
    fn double_of_closed_octahedron() {
        let p = klein_schonhardt();
        let s = builtin_schema(SchemaKind::Double, &p).unwrap();
        assert_eq!(s.pieces.len(), 2);
        assert_eq!(s.pairings.len(), 8);
        let m = assemble(&s).unwrap();
        assert_eq!(m.components.len(), 12);
        assert!(m.orientable);
        assert!(!m.has_boundary);
        let dih = p.dihedral_angles().unwrap();
        for c in &m.components {
            assert!(!c.is_circle);
            let [i, j] = c.source_edges[0].1;
            let e = p.edge_between(i, j).unwrap();
            assert!((c.cone_angle - 2.0 * dih[e]).abs() < 1e-12);
        }
    }

    #[test]
    fn double_of_double_has_twelve_circles() {
        let p = hyperideal();
        let m = assemble(&builtin_schema(SchemaKind::DoubleOfDouble, &p).unwrap()).unwrap();
        assert_eq!(m.components.len(), 12);
        assert!(m.components.iter().all(|c| c.is_circle));
        assert!(m.orientable);
        assert!(!m.has_boundary);
        let dih = p.dihedral_angles().unwrap();
        for c in &m.components {
            let [i, j] = c.source_edges[0].1;
            assert!((c.cone_angle - 2.0 * dih[p.edge_between(i, j).unwrap()]).abs() < 1e-12);
        }
    }

    #[test]
    fn three_and_four_component_gluings() {
        let p = hyperideal();
        let three = assemble(&builtin_schema(SchemaKind::ThreeComp, &p).unwrap()).unwrap();
        assert_eq!(three.components.len(), 3);
        assert!(!three.orientable);
        assert!(!three.has_boundary);
        assert_eq!(three.components.iter().filter(|c| c.cone_angle > 2.0 * PI).count(), 1);
        let four = assemble(&builtin_schema(SchemaKind::FourComp, &p).unwrap()).unwrap();
        assert_eq!(four.components.len(), 4);
        assert!(four.orientable);
        assert_eq!(four.components.iter().filter(|c| c.cone_angle > 2.0 * PI).count(), 1);
        for c in three.components.iter().chain(&four.components) {
            let classes: BTreeSet<EdgeClass> = c.source_edges.iter().map(|(_, e)| edge_class(e[0], e[1])).collect();
            assert_eq!(classes.len(), 1);
            assert!(c.is_circle);
        }
    }

    #[test]
    fn three_comp_uses_half_turns() {
        let p = hyperideal();
        let s = builtin_schema(SchemaKind::ThreeComp, &p).unwrap();
        let t = truncate(&p).unwrap();
        let nf = p.faces().len();
        for pr in s.pairings.iter().filter(|pr| pr.face_a >= nf) {
            let v = pr.face_a - nf;
            let perm = crate::generators::half_turn_permutation(v % 3);
            assert_eq!(perm[v], pr.face_b - nf);
            for &(x, y) in &pr.vertex_map {
                let (i, j) = t.vertex_keys()[x];
                assert_eq!(t.vertex_keys()[y], (perm[i], perm[j]));
            }
        }
    }

    #[test]
    fn closed_double_flex_check_and_sign_control() {
        let p = klein_schonhardt();
        let q = flex_for(&p);
        let s = builtin_schema(SchemaKind::Double, &p).unwrap();
        let r = manifold_flex_check(&s, &q, 1e-4).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.max_component_variation < 1e-6);
        assert!(r.max_length_variation < 1e-6);
        assert!(r.witness > 1e-3);
        let mut wrong = s.clone();
        wrong.pieces[1].flex_sign = 1;
        let r = manifold_flex_check(&wrong, &q, 1e-4).unwrap();
        assert!(r.max_component_variation > 1e-3);
    }

    #[test]
    fn killing_flex_is_trivial_on_the_double() {
        let p = klein_schonhardt();
        let s = builtin_schema(SchemaKind::Double, &p).unwrap();
        let rm = rigidity_matrix(&p.reinterpret(Model::Euclidean).unwrap(), Ambient::Euclidean).unwrap();
        let k = rm.killing_fields().unwrap()[4].clone();
        assert!(killing_complement_norm(&rm, &k).unwrap() < 1e-9);
        let r = manifold_flex_check(&s, &k, 1e-4).unwrap();
        assert!(r.max_component_variation < 1e-7);
        assert!(!r.nontrivial);
    }

    #[test]
    fn truncated_schemas_flex_check() {
        let p = hyperideal();
        let q = flex_for(&p);
        for kind in [SchemaKind::DoubleOfDouble, SchemaKind::ThreeComp, SchemaKind::FourComp] {
            let s = builtin_schema(kind, &p).unwrap();
            let r = manifold_flex_check(&s, &q, 1e-4).unwrap();
            assert!(r.passed, "{kind:?}: {r:?}");
            for i in 0..s.pieces.len() {
                let mut wrong = s.clone();
                wrong.pieces[i].flex_sign = -wrong.pieces[i].flex_sign;
                let r = manifold_flex_check(&wrong, &q, 1e-4).unwrap();
                assert!(r.max_component_variation > 1e-3, "{kind:?} flip {i}");
            }
        }
    }

    #[test]
    fn truncated_double_has_boundary() {
        let p = hyperideal();
        let m = assemble(&builtin_schema(SchemaKind::Double, &p).unwrap()).unwrap();
        assert!(m.has_boundary);
        assert_eq!(m.components.len(), 12);
        assert!(m.components.iter().all(|c| !c.is_circle));
    }

    #[test]
    fn labeled_schemas_reject_closed_pieces() {
        let p = regular_octahedron(0.5, Model::Klein).unwrap();
        assert!(matches!(builtin_schema(SchemaKind::ThreeComp, &p), Err(Error::Precondition(_))));
    }

    #[test]
    fn bad_pairings_are_rejected() {
        let p = klein_schonhardt();
        let mut s = builtin_schema(SchemaKind::Double, &p).unwrap();
        s.pairings[0].vertex_map.swap(0, 1);
        s.pairings[0].vertex_map[0].1 = s.pairings[0].vertex_map[1].1;
        assert!(matches!(assemble(&s), Err(Error::Gluing(_))));
        let mut s = builtin_schema(SchemaKind::Double, &p).unwrap();
        s.pairings[0].orientation_preserving = false;
        assert!(matches!(assemble(&s), Err(Error::Gluing(_))));
    }

    #[test]
    fn prism_system_shape() {
        let s = prism_meridian_system();
        assert_eq!(s.generators.len(), 4);
        assert_eq!(s.words.len(), 9);
        assert!(s.words.iter().filter(|w| w.letters.len() != 1).all(|w| w.letters.len() == 2));
        for w in &s.words {
            assert_ne!(edge_class(w.edge[0], w.edge[1]), EdgeClass::ReflexLateral);
        }
    }

    #[test]
    fn seven_fold_assignment() {
        let s = prism_meridian_system();
        let img = s.images(&[1, 1, 2, 1], 7);
        assert!(img.iter().all(|&g| (1..=3).contains(&g)), "{img:?}");
        let all = meridian_cover_search(&s, 7).unwrap();
        assert!(all.contains(&vec![1, 1, 2, 1]));
    }

    #[test]
    fn cover_search_small_cases() {
        let one = MeridianSystem { generators: vec!["a1".into()], words: vec![word("a1", [0, 1], &[(0, 1)])] };
        assert_eq!(meridian_cover_search(&one, 2).unwrap(), vec![vec![1]]);
        let none = MeridianSystem {
            generators: vec!["a1".into(), "a2".into()],
            words: vec![word("a1", [0, 1], &[(0, 1)]), word("a1^-1a2", [1, 2], &[(0, -1), (1, 1)]), word("a2", [2, 0], &[(1, 1)])],
        };
        assert!(meridian_cover_search(&none, 2).unwrap().is_empty());
        assert!(meridian_cover_search(&one, 1).is_err());
    }

    #[test]
    fn lifting_arithmetic() {
        let m = ConeManifold {
            schema: "test".into(),
            cycles: vec![],
            components: vec![SingularComponent { arcs: vec![], cone_angle: 3.0 * PI, length: 1.0, is_circle: true, source_edges: vec![] }],
            vertex_classes: 0,
            orientable: true,
            has_boundary: false,
            expected_topology: None,
        };
        let l = lift_cone_angles(&m, &[(0, 1)], 2).unwrap();
        assert_abs_diff_eq!(l.components[0].angle, 6.0 * PI, epsilon = 1e-12);
        assert!(lift_cone_angles(&m, &[(0, 1)], 1).is_err());
        assert!(lift_cone_angles(&m, &[(0, 2)], 2).is_err());
        let l = lift_cone_angles(&m, &[(0, 2)], 4).unwrap();
        assert_eq!((l.components[0].order, l.components[0].copies), (2, 2));
    }

    #[test]
    fn seven_fold_cover_has_large_angles() {
        let c = large_angle_cover(50.0, 0.99, &[1, 1, 2, 1], 7).unwrap();
        assert!(c.min_dihedral > PI / 7.0);
        assert_eq!(c.base_angles.len(), 12);
        assert_eq!(c.lifted.components.iter().filter(|l| l.branched).count(), 9);
        assert!(c.lifted.all_above_two_pi, "{}", c.lifted.min_angle);
        assert!(large_angle_cover(50.0, 0.99, &[1, 1, 2], 7).is_err());
    }
}
