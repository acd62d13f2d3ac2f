//! Closed triangulated surfaces with embedded coordinates.

use crate::error::{Error, Result};
use crate::geom::{
    convert_model, hyperboloid_distance, klein_coords, lift_klein, minkowski_dot, Model, ModelPoint, Plane,
    Vec3,
};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, VecDeque};
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coloring {
    pub black: Vec<usize>,
    pub white: Vec<usize>,
}

/// An undirected edge. `faces[0]` traverses `ends[0] -> ends[1]`, `faces[1]` the reverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub ends: [usize; 2],
    pub faces: [usize; 2],
}

#[derive(Debug, Clone)]
pub struct Polyhedron {
    space: Model,
    vertices: Vec<ModelPoint>,
    coords: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    coloring: Option<Coloring>,
    edges: Vec<Edge>,
    edge_index: HashMap<(usize, usize), usize>,
    euler: i64,
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Reorders face vertex triples so that orientations agree across edges (breadth-first from
/// face 0). Returns an error on non-orientable or non-manifold input.
pub fn orient_consistently(faces: &[[usize; 3]]) -> Result<Vec<[usize; 3]>> {
    let mut incident: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (fi, f) in faces.iter().enumerate() {
        for k in 0..3 {
            incident.entry(edge_key(f[k], f[(k + 1) % 3])).or_default().push(fi);
        }
    }
    for (e, fs) in &incident {
        if fs.len() != 2 {
            return Err(Error::NonManifoldEdge { edge: [e.0, e.1], count: fs.len() });
        }
    }
    let mut out: Vec<[usize; 3]> = faces.to_vec();
    let mut done = vec![false; faces.len()];
    for start in 0..faces.len() {
        if done[start] {
            continue;
        }
        done[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(fi) = queue.pop_front() {
            let f = out[fi];
            for k in 0..3 {
                let (u, v) = (f[k], f[(k + 1) % 3]);
                let other = incident[&edge_key(u, v)].iter().copied().find(|&g| g != fi).unwrap();
                let g = out[other];
                let same = (0..3).any(|m| g[m] == u && g[(m + 1) % 3] == v);
                if done[other] {
                    if same {
                        return Err(Error::Orientation { edge: [u, v] });
                    }
                    continue;
                }
                if same {
                    out[other] = [g[0], g[2], g[1]];
                }
                done[other] = true;
                queue.push_back(other);
            }
        }
    }
    Ok(out)
}

fn signed_volume(coords: &[Vec3], faces: &[[usize; 3]]) -> f64 {
    faces.iter().map(|f| coords[f[0]].dot(&coords[f[1]].cross(&coords[f[2]]))).sum::<f64>() / 6.0
}

impl Polyhedron {
    /// Validates combinatorics, orientation and coloring, and reorients all faces outward if
    /// the enclosed signed volume is negative. Geometry of hyperbolic models is computed in
    /// Klein coordinates.
    pub fn new(vertices: Vec<ModelPoint>, faces: Vec<[usize; 3]>, coloring: Option<Coloring>) -> Result<Polyhedron> {
        if vertices.is_empty() {
            return Err(Error::InvalidInput("no vertices".into()));
        }
        let space = vertices[0].model();
        if space == Model::DeSitter {
            return Err(Error::InvalidInput("use klein coordinates for hyperideal vertices".into()));
        }
        for (i, v) in vertices.iter().enumerate() {
            if v.model() != space {
                return Err(Error::InvalidInput(format!("vertex {i} is not in the {} model", space.name())));
            }
            v.validate()?;
        }
        let coords: Vec<Vec3> = match space {
            Model::Euclidean => vertices
                .iter()
                .map(|v| match v {
                    ModelPoint::Euclidean(p) => *p,
                    _ => unreachable!(),
                })
                .collect(),
            _ => vertices.iter().map(klein_coords).collect::<Result<_>>()?,
        };
        Self::from_parts(space, vertices, coords, faces, coloring)
    }

    fn from_parts(
        space: Model,
        vertices: Vec<ModelPoint>,
        coords: Vec<Vec3>,
        mut faces: Vec<[usize; 3]>,
        coloring: Option<Coloring>,
    ) -> Result<Polyhedron> {
        let n = vertices.len();
        for (fi, f) in faces.iter().enumerate() {
            if let Some(&bad) = f.iter().find(|&&i| i >= n) {
                return Err(Error::BadFace { face: fi, reason: format!("vertex index {bad} out of range") });
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::BadFace { face: fi, reason: "repeated vertex".into() });
            }
        }
        let diam2 = coords
            .iter()
            .flat_map(|a| coords.iter().map(move |b| (a - b).norm_squared()))
            .fold(0.0, f64::max);
        for (fi, f) in faces.iter().enumerate() {
            let area = (coords[f[1]] - coords[f[0]]).cross(&(coords[f[2]] - coords[f[0]])).norm() / 2.0;
            if area < 1e-14 * diam2 {
                return Err(Error::BadFace { face: fi, reason: format!("degenerate face (area {area:e})") });
            }
        }
        // each directed edge once, each undirected edge in exactly two faces
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        let mut count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for (fi, f) in faces.iter().enumerate() {
            for k in 0..3 {
                let (u, v) = (f[k], f[(k + 1) % 3]);
                *count.entry(edge_key(u, v)).or_default() += 1;
                if directed.insert((u, v), fi).is_some() {
                    return Err(Error::Orientation { edge: [u, v] });
                }
            }
        }
        for (e, c) in &count {
            if *c != 2 {
                return Err(Error::NonManifoldEdge { edge: [e.0, e.1], count: *c });
            }
        }
        if signed_volume(&coords, &faces) < 0.0 {
            for f in faces.iter_mut() {
                f.swap(1, 2);
            }
            directed = directed.into_iter().map(|((u, v), f)| ((v, u), f)).collect();
        }
        let mut edges = Vec::with_capacity(count.len());
        let mut edge_index = HashMap::new();
        for &(a, b) in count.keys() {
            let f0 = directed[&(a, b)];
            let f1 = directed[&(b, a)];
            edge_index.insert((a, b), edges.len());
            edges.push(Edge { ends: [a, b], faces: [f0, f1] });
        }
        if let Some(c) = &coloring {
            let mut color = vec![None; faces.len()];
            for (list, tag) in [(&c.black, 0u8), (&c.white, 1u8)] {
                for &f in list.iter() {
                    if f >= faces.len() {
                        return Err(Error::Coloring(format!("face {f} out of range")));
                    }
                    if color[f].replace(tag).is_some() {
                        return Err(Error::Coloring(format!("face {f} colored twice")));
                    }
                }
            }
            if let Some(f) = color.iter().position(|c| c.is_none()) {
                return Err(Error::Coloring(format!("face {f} has no color")));
            }
            for e in &edges {
                if color[e.faces[0]] == color[e.faces[1]] {
                    return Err(Error::Coloring(format!(
                        "adjacent faces {} and {} share a color",
                        e.faces[0], e.faces[1]
                    )));
                }
            }
        }
        let euler = n as i64 - edges.len() as i64 + faces.len() as i64;
        Ok(Polyhedron { space, vertices, coords, faces, coloring, edges, edge_index, euler })
    }

    pub fn space(&self) -> Model {
        self.space
    }

    pub fn is_hyperbolic(&self) -> bool {
        self.space.is_hyperbolic()
    }

    pub fn vertices(&self) -> &[ModelPoint] {
        &self.vertices
    }

    /// Euclidean coordinates, or Klein coordinates for hyperbolic models.
    pub fn coords(&self) -> &[Vec3] {
        &self.coords
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn coloring(&self) -> Option<&Coloring> {
        self.coloring.as_ref()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.euler
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_index.get(&edge_key(a, b)).copied()
    }

    /// Same combinatorics with new Euclidean or Klein coordinates. Vertices are stored back in the
    /// original model when possible and in the Klein model otherwise.
    pub fn with_coords(&self, coords: Vec<Vec3>) -> Result<Polyhedron> {
        assert_eq!(coords.len(), self.coords.len());
        let vertices = coords
            .iter()
            .map(|c| match self.space {
                Model::Euclidean => Ok(ModelPoint::Euclidean(*c)),
                Model::Klein => Ok(ModelPoint::Klein(*c)),
                m => convert_model(&ModelPoint::Klein(*c), m).or(Ok(ModelPoint::Klein(*c))),
            })
            .collect::<Result<Vec<_>>>()?;
        let space = vertices.iter().map(|v| v.model()).fold(self.space, |acc, m| if m != acc { Model::Klein } else { acc });
        let vertices = if space != self.space {
            coords.iter().map(|c| ModelPoint::Klein(*c)).collect()
        } else {
            vertices
        };
        Self::from_parts(space, vertices, coords, self.faces.clone(), self.coloring.clone())
    }

    /// The same coordinates reinterpreted in another model (Euclidean <-> Klein).
    pub fn reinterpret(&self, space: Model) -> Result<Polyhedron> {
        let vertices = self
            .coords
            .iter()
            .map(|c| match space {
                Model::Euclidean => Ok(ModelPoint::Euclidean(*c)),
                Model::Klein => Ok(ModelPoint::Klein(*c)),
                _ => Err(Error::InvalidInput("reinterpret only between euclidean and klein".into())),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_parts(space, vertices, self.coords.clone(), self.faces.clone(), self.coloring.clone())
    }

    /// Outward normalized plane of a face in model coordinates.
    pub fn face_plane(&self, face: usize) -> Result<Plane> {
        let f = self.faces.get(face).ok_or_else(|| Error::InvalidInput(format!("no face {face}")))?;
        let [a, b, c] = f.map(|i| self.coords[i]);
        let n = (b - a).cross(&(c - a));
        if n.norm() < 1e-14 * (b - a).norm().max((c - a).norm()).powi(2) {
            return Err(Error::Degenerate(format!("face {face} is collinear")));
        }
        Plane::new(n, n.dot(&a))
    }

    /// Interior dihedral angle at an edge, in (0, 2pi). Euclidean models use the Euclidean
    /// angle; hyperbolic models use Minkowski normals of the Klein face planes.
    pub fn dihedral_angle(&self, edge: usize) -> Result<f64> {
        let e = self.edges[edge];
        let p1 = self.face_plane(e.faces[0])?;
        let p2 = self.face_plane(e.faces[1])?;
        let f2 = self.faces[e.faces[1]];
        let w = *f2.iter().find(|&&x| x != e.ends[0] && x != e.ends[1]).unwrap();
        let side = p1.eval(&self.coords[w]);
        let scale = (self.coords[w] - self.coords[e.ends[0]]).norm();
        let between = if self.is_hyperbolic() {
            let n1 = p1.minkowski_normal()?;
            let n2 = p2.minkowski_normal()?;
            minkowski_dot(&n1, &n2).clamp(-1.0, 1.0).acos()
        } else {
            let (n1, n2) = (p1.normal(), p2.normal());
            n1.cross(&n2).norm().atan2(n1.dot(&n2))
        };
        if side.abs() <= 1e-14 * scale {
            return Ok(PI);
        }
        Ok(if side < 0.0 { PI - between } else { PI + between })
    }

    pub fn dihedral_angles(&self) -> Result<Vec<f64>> {
        (0..self.edges.len()).map(|e| self.dihedral_angle(e)).collect()
    }

    /// Edge lengths in the ambient metric (hyperbolic lengths for hyperbolic models).
    pub fn edge_lengths(&self) -> Result<Vec<f64>> {
        self.edges
            .iter()
            .map(|e| {
                let (a, b) = (self.coords[e.ends[0]], self.coords[e.ends[1]]);
                if self.is_hyperbolic() {
                    hyperboloid_distance(&lift_klein(&a)?, &lift_klein(&b)?)
                } else {
                    Ok((a - b).norm())
                }
            })
            .collect()
    }

    /// Neighbors of a vertex in the cyclic order induced by the outward orientation.
    pub fn link_cycle(&self, v: usize) -> Vec<usize> {
        let mut next = HashMap::new();
        for f in &self.faces {
            if let Some(k) = f.iter().position(|&x| x == v) {
                next.insert(f[(k + 1) % 3], f[(k + 2) % 3]);
            }
        }
        let start = *next.keys().min().unwrap();
        let mut cyc = vec![start];
        let mut cur = next[&start];
        while cur != start && cyc.len() <= next.len() {
            cyc.push(cur);
            cur = next[&cur];
        }
        cyc
    }

    /// The face lattice automorphisms as vertex permutations, found by propagating a flag
    /// (face with ordered vertices) across edges. Includes orientation-reversing ones.
    pub fn automorphisms(&self) -> Vec<Vec<usize>> {
        let mut face_of: HashMap<(usize, usize), usize> = HashMap::new();
        for (fi, f) in self.faces.iter().enumerate() {
            for k in 0..3 {
                face_of.insert((f[k], f[(k + 1) % 3]), fi);
            }
        }
        let third = |fi: usize, u: usize, v: usize| *self.faces[fi].iter().find(|&&x| x != u && x != v).unwrap();
        let other_face = |u: usize, v: usize, not: usize| {
            let a = face_of[&(u, v)];
            if a != not {
                a
            } else {
                face_of[&(v, u)]
            }
        };
        let f0 = self.faces[0];
        let mut out = Vec::new();
        for (gi, g) in self.faces.iter().enumerate() {
            let orders: [[usize; 3]; 6] =
                [[0, 1, 2], [1, 2, 0], [2, 0, 1], [0, 2, 1], [2, 1, 0], [1, 0, 2]];
            'perm: for o in orders {
                let mut map = vec![usize::MAX; self.vertices.len()];
                let mut fmap = vec![usize::MAX; self.faces.len()];
                for k in 0..3 {
                    map[f0[k]] = g[o[k]];
                }
                fmap[0] = gi;
                let mut queue = VecDeque::from([0usize]);
                while let Some(fi) = queue.pop_front() {
                    let f = self.faces[fi];
                    for k in 0..3 {
                        let (u, v) = (f[k], f[(k + 1) % 3]);
                        let nf = other_face(u, v, fi);
                        let w = third(nf, u, v);
                        let img_f = other_face(map[u], map[v], fmap[fi]);
                        let img_w = third(img_f, map[u], map[v]);
                        if map[w] == usize::MAX {
                            if map.contains(&img_w) {
                                continue 'perm;
                            }
                            map[w] = img_w;
                        } else if map[w] != img_w {
                            continue 'perm;
                        }
                        if fmap[nf] == usize::MAX {
                            fmap[nf] = img_f;
                            queue.push_back(nf);
                        } else if fmap[nf] != img_f {
                            continue 'perm;
                        }
                    }
                }
                if map.iter().all(|&x| x != usize::MAX) {
                    out.push(map);
                }
            }
        }
        out
    }

    /// Two-coloring of the faces if the dual graph is bipartite, face 0 black.
    pub fn face_two_coloring(&self) -> Option<Coloring> {
        let mut color = vec![None; self.faces.len()];
        color[0] = Some(0u8);
        let mut queue = VecDeque::from([0usize]);
        let mut adj = vec![Vec::new(); self.faces.len()];
        for e in &self.edges {
            adj[e.faces[0]].push(e.faces[1]);
            adj[e.faces[1]].push(e.faces[0]);
        }
        while let Some(f) = queue.pop_front() {
            for &g in &adj[f] {
                match color[g] {
                    None => {
                        color[g] = Some(1 - color[f].unwrap());
                        queue.push_back(g);
                    }
                    Some(c) if c == color[f].unwrap() => return None,
                    _ => {}
                }
            }
        }
        let black = (0..self.faces.len()).filter(|&f| color[f] == Some(0)).collect();
        let white = (0..self.faces.len()).filter(|&f| color[f] == Some(1)).collect();
        Some(Coloring { black, white })
    }
}

/// Regular octahedron with vertices at distance `r` on the coordinate axes.
pub fn regular_octahedron(r: f64, space: Model) -> Result<Polyhedron> {
    let pts = [
        Vec3::new(r, 0.0, 0.0),
        Vec3::new(-r, 0.0, 0.0),
        Vec3::new(0.0, r, 0.0),
        Vec3::new(0.0, -r, 0.0),
        Vec3::new(0.0, 0.0, r),
        Vec3::new(0.0, 0.0, -r),
    ];
    let faces = vec![[0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4], [2, 0, 5], [1, 2, 5], [3, 1, 5], [0, 3, 5]];
    let vertices = pts
        .iter()
        .map(|p| match space {
            Model::Euclidean => Ok(ModelPoint::Euclidean(*p)),
            Model::Klein => Ok(ModelPoint::Klein(*p)),
            _ => Err(Error::InvalidInput("regular octahedron in euclidean or klein coordinates".into())),
        })
        .collect::<Result<Vec<_>>>()?;
    let p = Polyhedron::new(vertices, faces, None)?;
    let c = p.face_two_coloring();
    Polyhedron::new(p.vertices.clone(), p.faces.clone(), c)
}

/// Regular tetrahedron inscribed in the sphere of radius `r`.
pub fn regular_tetrahedron(r: f64) -> Result<Polyhedron> {
    let s = r / 3f64.sqrt();
    let pts = [
        Vec3::new(s, s, s),
        Vec3::new(s, -s, -s),
        Vec3::new(-s, s, -s),
        Vec3::new(-s, -s, s),
    ];
    Polyhedron::new(
        pts.iter().map(|p| ModelPoint::Euclidean(*p)).collect(),
        vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]],
        None,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::Rotation3;
    use proptest::prelude::*;

    #[test]
    fn octahedron_and_tetrahedron_counts() {
        let o = regular_octahedron(1.0, Model::Euclidean).unwrap();
        assert_eq!(o.edges().len(), 12);
        assert_eq!(o.euler_characteristic(), 2);
        let t = regular_tetrahedron(1.0).unwrap();
        assert_eq!(t.edges().len(), 6);
        assert_eq!(t.euler_characteristic(), 2);
    }

    #[test]
    fn inconsistent_orientation_is_rejected() {
        let t = regular_tetrahedron(1.0).unwrap();
        let mut faces = t.faces().to_vec();
        faces[0] = [faces[0][0], faces[0][2], faces[0][1]];
        let r = Polyhedron::new(t.vertices().to_vec(), faces, None);
        assert!(matches!(r, Err(Error::Orientation { .. })));
    }

    #[test]
    fn non_manifold_and_bad_indices() {
        let t = regular_tetrahedron(1.0).unwrap();
        let faces = t.faces()[..3].to_vec();
        assert!(matches!(Polyhedron::new(t.vertices().to_vec(), faces, None), Err(Error::NonManifoldEdge { .. })));
        let mut faces = t.faces().to_vec();
        faces[2] = [0, 1, 9];
        assert!(matches!(
            Polyhedron::new(t.vertices().to_vec(), faces, None),
            Err(Error::BadFace { face: 2, .. })
        ));
    }

    #[test]
    fn inward_faces_are_flipped() {
        let t = regular_tetrahedron(1.0).unwrap();
        let flipped: Vec<[usize; 3]> = t.faces().iter().map(|f| [f[0], f[2], f[1]]).collect();
        let u = Polyhedron::new(t.vertices().to_vec(), flipped, None).unwrap();
        assert_eq!(u.faces(), t.faces());
    }

    #[test]
    fn orient_consistently_fixes_random_flips() {
        let o = regular_octahedron(1.0, Model::Euclidean).unwrap();
        let mut faces = o.faces().to_vec();
        faces[3].swap(0, 1);
        faces[6].swap(1, 2);
        let fixed = orient_consistently(&faces).unwrap();
        Polyhedron::new(o.vertices().to_vec(), fixed, None).unwrap();
    }

    #[test]
    fn octahedron_dihedral() {
        let o = regular_octahedron(1.0, Model::Euclidean).unwrap();
        for a in o.dihedral_angles().unwrap() {
            assert_abs_diff_eq!(a, (-1.0f64 / 3.0).acos(), epsilon = 1e-12);
        }
        assert_abs_diff_eq!((-1.0f64 / 3.0).acos(), 1.91063, epsilon = 1e-5);
    }

    #[test]
    fn flat_edge_is_pi() {
        // square pyramid with the base split into two coplanar triangles
        let pts = [
            Vec3::new(1.0, 1.0, 0.0),
            Vec3::new(-1.0, 1.0, 0.0),
            Vec3::new(-1.0, -1.0, 0.0),
            Vec3::new(1.0, -1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ];
        let faces = vec![[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4], [0, 2, 1], [0, 3, 2]];
        let p = Polyhedron::new(pts.iter().map(|v| ModelPoint::Euclidean(*v)).collect(), faces, None).unwrap();
        let e = p.edge_between(0, 2).unwrap();
        assert_abs_diff_eq!(p.dihedral_angle(e).unwrap(), PI, epsilon = 1e-12);
    }

    #[test]
    fn face_planes() {
        let pts = [Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0), Vec3::new(0.0, 0.0, 1.0), Vec3::zeros()];
        let p = Polyhedron::new(
            pts.iter().map(|v| ModelPoint::Euclidean(*v)).collect(),
            vec![[0, 1, 2], [0, 2, 3], [0, 3, 1], [1, 3, 2]],
            None,
        )
        .unwrap();
        let f = p.faces().iter().position(|f| !f.contains(&3)).unwrap();
        let pl = p.face_plane(f).unwrap();
        let s = 1.0 / 3f64.sqrt();
        assert_abs_diff_eq!(pl.normal(), Vec3::new(s, s, s), epsilon = 1e-14);
        assert_abs_diff_eq!(pl.b, s, epsilon = 1e-14);
        let shifted: Vec<ModelPoint> = pts.iter().map(|v| ModelPoint::Euclidean(v + Vec3::new(1.0, 0.0, 0.0))).collect();
        let q = Polyhedron::new(shifted, p.faces().to_vec(), None).unwrap();
        let pq = q.face_plane(f).unwrap();
        assert_abs_diff_eq!(pq.normal(), pl.normal(), epsilon = 1e-14);
        assert_abs_diff_eq!(pq.b, 2.0 * s, epsilon = 1e-14);
    }

    #[test]
    fn coloring_is_validated() {
        let o = regular_octahedron(1.0, Model::Euclidean).unwrap();
        let c = o.coloring().unwrap().clone();
        assert_eq!(c.black.len(), 4);
        let bad = Coloring { black: vec![0, 1, 2, 3], white: vec![4, 5, 6, 7] };
        assert!(matches!(Polyhedron::new(o.vertices().to_vec(), o.faces().to_vec(), Some(bad)), Err(Error::Coloring(_))));
    }

    #[test]
    fn octahedron_has_48_automorphisms() {
        let o = regular_octahedron(1.0, Model::Euclidean).unwrap();
        assert_eq!(o.automorphisms().len(), 48);
        assert_eq!(regular_tetrahedron(1.0).unwrap().automorphisms().len(), 24);
    }

    #[test]
    fn link_cycles_have_vertex_degree() {
        let o = regular_octahedron(1.0, Model::Euclidean).unwrap();
        for v in 0..6 {
            let c = o.link_cycle(v);
            assert_eq!(c.len(), 4);
            for k in 0..4 {
                assert!(o.edge_between(c[k], c[(k + 1) % 4]).is_some());
            }
        }
    }

    #[test]
    fn hyperbolic_octahedron_angle_below_euclidean() {
        let o = regular_octahedron(0.5, Model::Klein).unwrap();
        let a = o.dihedral_angle(0).unwrap();
        assert!(a < (-1.0f64 / 3.0).acos());
        // regular ideal octahedron has right dihedral angles
        let o = regular_octahedron(1.0, Model::Klein).unwrap();
        for a in o.dihedral_angles().unwrap() {
            assert_abs_diff_eq!(a, PI / 2.0, epsilon = 1e-12);
        }
    }

    fn random_polyhedron() -> Polyhedron {
        crate::generators::schonhardt(&crate::generators::SchonhardtParams::new(1.0, 1.0, PI / 2.0).unwrap())
            .unwrap()
    }

    proptest! {
        #[test]
        fn dihedral_invariant_under_rotation(ax in -1.0f64..1.0, ay in -1.0f64..1.0, az in -1.0f64..1.0, ang in 0.0f64..6.0,
                                             tx in -2.0f64..2.0) {
            let p = random_polyhedron();
            let axis = nalgebra::Unit::new_normalize(Vec3::new(ax, ay, az + 1.5));
            let r = Rotation3::from_axis_angle(&axis, ang);
            let moved: Vec<Vec3> = p.coords().iter().map(|c| r * c + Vec3::new(tx, 0.0, 0.0)).collect();
            let q = p.with_coords(moved).unwrap();
            for (a, b) in p.dihedral_angles().unwrap().iter().zip(q.dihedral_angles().unwrap()) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }

        #[test]
        fn hyperbolic_dihedral_invariant_under_isometry(ax in -1.0f64..1.0, ang in 0.0f64..6.0, boost in -1.0f64..1.0) {
            let p = random_polyhedron();
            let k: Vec<Vec3> = p.coords().iter().map(|c| c * 0.6).collect();
            let p = p.reinterpret(Model::Klein).unwrap().with_coords(k.clone()).unwrap();
            let axis = nalgebra::Unit::new_normalize(Vec3::new(ax, 0.3, 1.0));
            let r = Rotation3::from_axis_angle(&axis, ang);
            let (ch, sh) = (boost.cosh(), boost.sinh());
            let moved: Vec<Vec3> = k.iter().map(|c| {
                let x = lift_klein(&(r * c)).unwrap();
                let y = nalgebra::Vector4::new(ch * x[0] + sh * x[1], sh * x[0] + ch * x[1], x[2], x[3]);
                Vec3::new(y[1], y[2], y[3]) / y[0]
            }).collect();
            let q = p.with_coords(moved).unwrap();
            for (a, b) in p.dihedral_angles().unwrap().iter().zip(q.dihedral_angles().unwrap()) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }
    }
}
