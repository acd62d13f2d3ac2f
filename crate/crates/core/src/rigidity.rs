//! Rigidity matrices, flex spaces, the Pogorelov transfer and angle variations.

use crate::error::{Error, Result};
use crate::geom::{
    killing_basis_euclidean, killing_basis_minkowski, lift_klein, minkowski_dot, minkowski_metric,
    minkowski_position, project_klein, Ambient, Model, Vec3, Vec4,
};
use crate::polyhedron::Polyhedron;
use nalgebra::{DMatrix, DVector, Matrix4, Matrix4x3};
use serde::{Deserialize, Serialize};

pub const DEFAULT_KERNEL_TOL: f64 = 1e-9;
pub const BL_TOL: f64 = 1e-8;

/// Per-vertex velocities: Euclidean (or Klein-coordinate) vectors, or Minkowski tangent vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "ambient", content = "vectors", rename_all = "lowercase")]
pub enum FlexField {
    Euclidean(Vec<Vec3>),
    Minkowski(Vec<Vec4>),
}

impl FlexField {
    pub fn len(&self) -> usize {
        match self {
            FlexField::Euclidean(v) => v.len(),
            FlexField::Minkowski(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ambient(&self) -> Ambient {
        match self {
            FlexField::Euclidean(_) => Ambient::Euclidean,
            FlexField::Minkowski(_) => Ambient::Minkowski,
        }
    }

    /// Largest Euclidean norm of the per-vertex vectors.
    pub fn max_speed(&self) -> f64 {
        match self {
            FlexField::Euclidean(v) => v.iter().map(|x| x.norm()).fold(0.0, f64::max),
            FlexField::Minkowski(v) => v.iter().map(|x| x.norm()).fold(0.0, f64::max),
        }
    }

    pub fn scaled(&self, s: f64) -> FlexField {
        match self {
            FlexField::Euclidean(v) => FlexField::Euclidean(v.iter().map(|x| x * s).collect()),
            FlexField::Minkowski(v) => FlexField::Minkowski(v.iter().map(|x| x * s).collect()),
        }
    }

    /// Rescaled so that the largest vertex speed is 1.
    pub fn normalized(&self) -> FlexField {
        let m = self.max_speed();
        if m == 0.0 {
            self.clone()
        } else {
            self.scaled(1.0 / m)
        }
    }

    pub fn add(&self, other: &FlexField) -> Result<FlexField> {
        match (self, other) {
            (FlexField::Euclidean(a), FlexField::Euclidean(b)) if a.len() == b.len() => {
                Ok(FlexField::Euclidean(a.iter().zip(b).map(|(x, y)| x + y).collect()))
            }
            (FlexField::Minkowski(a), FlexField::Minkowski(b)) if a.len() == b.len() => {
                Ok(FlexField::Minkowski(a.iter().zip(b).map(|(x, y)| x + y).collect()))
            }
            _ => Err(Error::InvalidInput("flex fields of different kinds".into())),
        }
    }
}

/// Edge-by-velocity matrix whose kernel is the space of infinitesimal isometric deformations.
/// Minkowski columns are coordinates in a per-vertex orthonormal basis of the tangent space.
#[derive(Debug, Clone)]
pub struct RigidityMatrix {
    pub matrix: DMatrix<f64>,
    pub ambient: Ambient,
    pub positions: Vec<Vec4>,
    pub tangent_bases: Vec<Matrix4x3<f64>>,
}

/// Euclidean-orthonormal basis of `{v : <p, v> = 0}`, the tangent space of the quadric at `p`.
pub fn tangent_basis(p: &Vec4) -> Matrix4x3<f64> {
    let n = (minkowski_metric() * p).normalize();
    let mut basis: Vec<Vec4> = Vec::with_capacity(3);
    let mut cands: Vec<(f64, usize)> = (0..4).map(|k| (n[k].abs(), k)).collect();
    cands.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for &(_, k) in &cands {
        if basis.len() == 3 {
            break;
        }
        let mut v = Vec4::zeros();
        v[k] = 1.0;
        v -= n * n.dot(&v);
        for b in &basis {
            v -= b * b.dot(&v);
        }
        let l = v.norm();
        if l > 1e-6 {
            basis.push(v / l);
        }
    }
    Matrix4x3::from_columns(&basis)
}

impl RigidityMatrix {
    pub fn num_vertices(&self) -> usize {
        match self.ambient {
            Ambient::Euclidean => self.matrix.ncols() / 3,
            Ambient::Minkowski => self.positions.len(),
        }
    }

    /// Column vector of a field.
    pub fn field_to_vector(&self, field: &FlexField) -> Result<DVector<f64>> {
        let n = self.matrix.ncols() / 3;
        if field.len() != n {
            return Err(Error::InvalidInput(format!("field has {} vectors, expected {n}", field.len())));
        }
        let mut x = DVector::zeros(3 * n);
        match (self.ambient, field) {
            (Ambient::Euclidean, FlexField::Euclidean(v)) => {
                for (i, q) in v.iter().enumerate() {
                    x.fixed_rows_mut::<3>(3 * i).copy_from(q);
                }
            }
            (Ambient::Minkowski, FlexField::Minkowski(v)) => {
                for (i, q) in v.iter().enumerate() {
                    let c = self.tangent_bases[i].transpose() * q;
                    x.fixed_rows_mut::<3>(3 * i).copy_from(&c);
                }
            }
            (a, f) => {
                return Err(Error::AmbientMismatch { ambient: a.name(), model: f.ambient().name() })
            }
        }
        Ok(x)
    }

    pub fn vector_to_field(&self, x: &DVector<f64>) -> FlexField {
        let n = self.matrix.ncols() / 3;
        match self.ambient {
            Ambient::Euclidean => FlexField::Euclidean((0..n).map(|i| x.fixed_rows::<3>(3 * i).into_owned()).collect()),
            Ambient::Minkowski => FlexField::Minkowski(
                (0..n).map(|i| self.tangent_bases[i] * x.fixed_rows::<3>(3 * i)).collect(),
            ),
        }
    }

    /// Largest edge-length derivative divided by the largest vertex speed.
    pub fn relative_residual(&self, field: &FlexField) -> Result<f64> {
        if let FlexField::Minkowski(v) = field {
            for (p, q) in self.positions.iter().zip(v) {
                if minkowski_dot(p, q).abs() > 1e-10 * q.norm().max(1e-300) * p.norm() {
                    return Err(Error::InvalidInput("Minkowski field is not tangent to the quadric".into()));
                }
            }
        }
        let x = self.field_to_vector(field)?;
        let r = (&self.matrix * &x).amax();
        let s = field.max_speed();
        Ok(if s == 0.0 { 0.0 } else { r / s })
    }

    pub fn killing_fields(&self) -> Result<Vec<FlexField>> {
        match self.ambient {
            Ambient::Euclidean => {
                let pts: Vec<Vec3> = self.positions.iter().map(|p| Vec3::new(p[1], p[2], p[3])).collect();
                Ok(killing_basis_euclidean(&pts)?.into_iter().map(FlexField::Euclidean).collect())
            }
            Ambient::Minkowski => {
                Ok(killing_basis_minkowski(&self.positions)?.into_iter().map(FlexField::Minkowski).collect())
            }
        }
    }
}

/// Minkowski positions of the vertices of a hyperbolic-model polyhedron (hyperboloid or
/// de Sitter lifts of the Klein coordinates).
pub fn minkowski_positions(p: &Polyhedron) -> Result<Vec<Vec4>> {
    if !p.is_hyperbolic() {
        return Err(Error::AmbientMismatch { ambient: "minkowski", model: "euclidean" });
    }
    p.vertices()
        .iter()
        .zip(p.coords())
        .map(|(v, k)| match v.model() {
            Model::Hyperboloid => minkowski_position(v),
            _ => lift_klein(k),
        })
        .collect()
}

pub fn rigidity_matrix(p: &Polyhedron, ambient: Ambient) -> Result<RigidityMatrix> {
    let n = p.num_vertices();
    let edges = p.edges();
    let mut m = DMatrix::zeros(edges.len(), 3 * n);
    match ambient {
        Ambient::Euclidean => {
            if p.space() != Model::Euclidean {
                return Err(Error::AmbientMismatch { ambient: "euclidean", model: p.space().name() });
            }
            let c = p.coords();
            for (r, e) in edges.iter().enumerate() {
                let [i, j] = e.ends;
                let d = c[i] - c[j];
                m.fixed_view_mut::<1, 3>(r, 3 * i).copy_from(&d.transpose());
                m.fixed_view_mut::<1, 3>(r, 3 * j).copy_from(&(-d).transpose());
            }
            let positions = c.iter().map(|v| Vec4::new(0.0, v[0], v[1], v[2])).collect();
            Ok(RigidityMatrix { matrix: m, ambient, positions, tangent_bases: Vec::new() })
        }
        Ambient::Minkowski => {
            let pos = minkowski_positions(p)?;
            let bases: Vec<Matrix4x3<f64>> = pos.iter().map(tangent_basis).collect();
            let j = minkowski_metric();
            for (r, e) in edges.iter().enumerate() {
                let [a, b] = e.ends;
                let d = j * (pos[a] - pos[b]);
                m.fixed_view_mut::<1, 3>(r, 3 * a).copy_from(&(bases[a].transpose() * d).transpose());
                m.fixed_view_mut::<1, 3>(r, 3 * b).copy_from(&(-(bases[b].transpose() * d)).transpose());
            }
            Ok(RigidityMatrix { matrix: m, ambient, positions: pos, tangent_bases: bases })
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlexReport {
    pub ambient: Ambient,
    pub tolerance: f64,
    pub singular_values: Vec<f64>,
    pub kernel_dim: usize,
    pub trivial_dim: usize,
    pub flexible: bool,
    pub flex_basis: Vec<FlexField>,
}

/// Orthonormal basis (columns) of the column space of `m`, at relative tolerance `tol`.
fn orthonormal_span(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let svd = m.clone().svd(true, false);
    let u = svd.u.unwrap();
    let s = &svd.singular_values;
    let max = s.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..s.len()).filter(|&k| s[k] > tol * max).collect();
    DMatrix::from_fn(m.nrows(), keep.len(), |r, c| u[(r, keep[c])])
}

/// SVD of the rigidity matrix (padded to square), kernel dimension, Killing rank and a
/// Killing-orthogonal basis of nontrivial flexes normalized to unit maximal vertex speed.
pub fn flex_analysis(p: &Polyhedron, ambient: Ambient, tol: f64) -> Result<FlexReport> {
    let rm = rigidity_matrix(p, ambient)?;
    analyze_matrix(&rm, tol)
}

pub fn analyze_matrix(rm: &RigidityMatrix, tol: f64) -> Result<FlexReport> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    let cols = rm.matrix.ncols();
    let rows = rm.matrix.nrows().max(cols);
    let mut a = DMatrix::zeros(rows, cols);
    a.view_mut((0, 0), (rm.matrix.nrows(), cols)).copy_from(&rm.matrix);
    let svd = a.svd(false, true);
    let v_t = svd.v_t.unwrap();
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].partial_cmp(&svd.singular_values[x]).unwrap());
    let sv: Vec<f64> = order.iter().map(|&k| svd.singular_values[k]).collect();
    let smax = sv.first().copied().unwrap_or(0.0);
    let kernel: Vec<usize> = order.iter().copied().filter(|&k| svd.singular_values[k] < tol * smax).collect();

    let killing = rm.killing_fields()?;
    let kmat = DMatrix::from_columns(
        &killing.iter().map(|f| rm.field_to_vector(f)).collect::<Result<Vec<_>>>()?,
    );
    let kspan = orthonormal_span(&kmat, 1e-9);
    let trivial_dim = kspan.ncols();
    if trivial_dim < 6 {
        return Err(Error::Degenerate(format!("trivial motions have rank {trivial_dim} < 6")));
    }
    let kernel_dim = kernel.len();
    let mut flex_basis = Vec::new();
    if kernel_dim > trivial_dim {
        let ker = DMatrix::from_fn(cols, kernel_dim, |r, c| v_t[(kernel[c], r)]);
        let proj = &ker - &kspan * (kspan.transpose() * &ker);
        let svd = proj.svd(true, false);
        let u = svd.u.unwrap();
        let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
        idx.sort_by(|&x, &y| svd.singular_values[y].partial_cmp(&svd.singular_values[x]).unwrap());
        for &k in idx.iter().take(kernel_dim - trivial_dim) {
            let col = u.column(k).into_owned();
            flex_basis.push(rm.vector_to_field(&col).normalized());
        }
    }
    Ok(FlexReport {
        ambient: rm.ambient,
        tolerance: tol,
        singular_values: sv,
        kernel_dim,
        trivial_dim,
        flexible: kernel_dim > trivial_dim,
        flex_basis,
    })
}

/// Whether a field lies in the span of the Killing fields (relative residual below `tol`).
pub fn is_trivial(rm: &RigidityMatrix, field: &FlexField, tol: f64) -> Result<bool> {
    Ok(killing_complement_norm(rm, field)? <= tol)
}

/// Norm of the component of a field orthogonal to the Killing span, relative to the field norm.
pub fn killing_complement_norm(rm: &RigidityMatrix, field: &FlexField) -> Result<f64> {
    let x = rm.field_to_vector(field)?;
    let killing = rm.killing_fields()?;
    let kmat = DMatrix::from_columns(
        &killing.iter().map(|f| rm.field_to_vector(f)).collect::<Result<Vec<_>>>()?,
    );
    let q = orthonormal_span(&kmat, 1e-9);
    let r = &x - &q * (q.transpose() * &x);
    let n = x.norm();
    Ok(if n == 0.0 { 0.0 } else { r.norm() / n })
}

/// Klein-coordinate velocity of the hyperbolic (or de Sitter) deformation associated with a
/// Euclidean velocity `q` at `p`: `v = q - (p . q) p`.
pub fn pogorelov_velocity(p: &Vec3, q: &Vec3) -> Result<Vec3> {
    if (p.norm() - 1.0).abs() < 1e-12 {
        return Err(Error::PointAtInfinity);
    }
    Ok(q - p * p.dot(q))
}

/// Minkowski tangent vector at the lift of `p` of the Klein trajectory `p + t v`, where `v` is
/// the Pogorelov image of `q`. Equals `(p . q, q) / sqrt|1 - |p|^2|`.
pub fn pogorelov_tangent(p: &Vec3, q: &Vec3) -> Result<Vec4> {
    let d = (1.0 - p.norm_squared()).abs();
    if d < 1e-12 {
        return Err(Error::PointAtInfinity);
    }
    Ok(Vec4::new(p.dot(q), q[0], q[1], q[2]) / d.sqrt())
}

/// Transfers a Euclidean flex of the Klein coordinates to a Minkowski flex of the lifted points.
pub fn pogorelov_field(klein: &[Vec3], q: &FlexField) -> Result<FlexField> {
    match q {
        FlexField::Euclidean(v) => {
            if v.len() != klein.len() {
                return Err(Error::InvalidInput("field length mismatch".into()));
            }
            Ok(FlexField::Minkowski(
                klein.iter().zip(v).map(|(p, q)| pogorelov_tangent(p, q)).collect::<Result<_>>()?,
            ))
        }
        FlexField::Minkowski(_) => Ok(q.clone()),
    }
}

/// Point at time `t` on the normalized Minkowski-linear path `(x + t v) / sqrt|<x + t v, x + t v>|`.
pub fn quadric_path(x: &Vec4, v: &Vec4, t: f64) -> Result<Vec4> {
    let y = x + v * t;
    let s = minkowski_dot(&y, &y);
    let target = minkowski_dot(x, x).signum();
    if s.signum() != target || s.abs() < 1e-14 {
        return Err(Error::Precondition("trajectory leaves the quadric's domain".into()));
    }
    let y = y / s.abs().sqrt();
    Ok(if y[0] * x[0] < 0.0 { -y } else { y })
}

/// Vertex coordinates (Euclidean or Klein) after moving for time `t` along a flex.
pub fn flexed_coords(p: &Polyhedron, flex: &FlexField, t: f64) -> Result<Vec<Vec3>> {
    match (p.is_hyperbolic(), flex) {
        (false, FlexField::Euclidean(q)) => Ok(p.coords().iter().zip(q).map(|(c, v)| c + v * t).collect()),
        (false, FlexField::Minkowski(_)) => Err(Error::AmbientMismatch { ambient: "minkowski", model: "euclidean" }),
        (true, _) => {
            let m = pogorelov_field(p.coords(), flex)?;
            let FlexField::Minkowski(vs) = m else { unreachable!() };
            let pos = minkowski_positions(p)?;
            pos.iter().zip(&vs).map(|(x, v)| project_klein(&quadric_path(x, v, t)?)).collect()
        }
    }
}

/// Residual of a flex on a polyhedron in the natural ambient (Pogorelov-transferred for
/// hyperbolic models given a Euclidean field).
pub fn flex_residual(p: &Polyhedron, flex: &FlexField) -> Result<f64> {
    if p.is_hyperbolic() {
        let rm = rigidity_matrix(p, Ambient::Minkowski)?;
        rm.relative_residual(&pogorelov_field(p.coords(), flex)?)
    } else {
        rigidity_matrix(p, Ambient::Euclidean)?.relative_residual(flex)
    }
}

/// Central-difference derivative of every dihedral angle along the flex trajectory.
pub fn angle_variation(p: &Polyhedron, flex: &FlexField, h: f64) -> Result<Vec<f64>> {
    let res = flex_residual(p, flex)?;
    if res > 1e-6 {
        return Err(Error::NotAFlex(res));
    }
    let plus = p.with_coords(flexed_coords(p, flex, h)?)?.dihedral_angles()?;
    let minus = p.with_coords(flexed_coords(p, flex, -h)?)?.dihedral_angles()?;
    Ok(plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * h)).collect())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlaschkeLiebmann {
    pub det_black: f64,
    pub det_white: f64,
    pub flexible: bool,
    /// Homogeneous common point `(x, y, z, w)` of the black planes (w = 0 at infinity).
    pub black_point: [f64; 4],
    pub black_point_residual: f64,
}

/// Concurrency test of the black (and white) face planes of an octahedron.
pub fn blaschke_liebmann(p: &Polyhedron, tol: f64) -> Result<BlaschkeLiebmann> {
    if p.num_vertices() != 6 || p.faces().len() != 8 || (0..6).any(|v| p.link_cycle(v).len() != 4) {
        return Err(Error::InvalidInput("not combinatorially an octahedron".into()));
    }
    let coloring = match p.coloring() {
        Some(c) => c.clone(),
        None => p.face_two_coloring().ok_or_else(|| Error::Coloring("faces are not two-colorable".into()))?,
    };
    if coloring.black.len() != 4 {
        return Err(Error::Coloring("expected four black and four white faces".into()));
    }
    let rows = |fs: &[usize]| -> Result<Matrix4<f64>> {
        let mut m = Matrix4::zeros();
        for (r, &f) in fs.iter().enumerate() {
            let pl = p.face_plane(f)?;
            m.set_row(r, &nalgebra::RowVector4::new(pl.a[0], pl.a[1], pl.a[2], pl.b));
        }
        Ok(m)
    };
    let mb = rows(&coloring.black)?;
    let mw = rows(&coloring.white)?;
    let det_black = mb.determinant();
    let det_white = mw.determinant();
    // planes a.x - b w = 0 in homogeneous coordinates
    let mut hom = mb;
    for r in 0..4 {
        hom[(r, 3)] = -hom[(r, 3)];
    }
    let svd = hom.svd(false, true);
    let v_t = svd.v_t.unwrap();
    let k = (0..4).min_by(|&a, &b| svd.singular_values[a].partial_cmp(&svd.singular_values[b]).unwrap()).unwrap();
    let x = v_t.row(k).transpose();
    let black_point = [x[0], x[1], x[2], x[3]];
    let black_point_residual = (hom * x).amax();
    Ok(BlaschkeLiebmann { det_black, det_white, flexible: det_black.abs() < tol, black_point, black_point_residual })
}
