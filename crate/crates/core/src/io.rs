//! JSON file formats for polyhedra, truncations, gluing schemas and reports.

use crate::conemanifold::{AlternativePairing, GluingSchema, Pairing, Piece};
use crate::error::{Error, Result};
use crate::geom::{Model, ModelPoint};
use crate::hyperideal::{truncate, TruncatedPolyhedron};
use crate::polyhedron::{Coloring, Polyhedron};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::path::{Path, PathBuf};

/// Largest coordinate mismatch accepted when a truncation file is checked against a fresh
/// truncation of its source.
pub const TRUNCATION_CHECK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyhedronFile {
    pub space: String,
    pub vertices: Vec<Vec<f64>>,
    pub faces: Vec<[usize; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coloring: Option<Coloring>,
}

#[derive(Deserialize)]
struct RawPolyhedron {
    space: String,
    vertices: Vec<Value>,
    faces: Vec<Value>,
    #[serde(default)]
    coloring: Option<Value>,
}

fn parse_err(e: serde_json::Error) -> Error {
    Error::Parse(format!("line {} column {}: {e}", e.line(), e.column()))
}

fn face_from_value(i: usize, v: &Value) -> Result<[usize; 3]> {
    let bad = |reason: String| Error::BadFace { face: i, reason };
    let arr = v.as_array().ok_or_else(|| bad(format!("expected an array of 3 vertex indices, got {v}")))?;
    if arr.len() != 3 {
        return Err(bad(format!("expected 3 vertex indices, got {}", arr.len())));
    }
    let mut out = [0; 3];
    for (k, x) in arr.iter().enumerate() {
        out[k] = x
            .as_u64()
            .ok_or_else(|| bad(format!("index {k} is not a non-negative integer: {x}")))? as usize;
    }
    Ok(out)
}

fn coords_from_value(i: usize, v: &Value) -> Result<Vec<f64>> {
    let bad = |reason: String| Error::InvalidPoint(format!("vertex {i}: {reason}"));
    let arr = v.as_array().ok_or_else(|| bad(format!("expected a coordinate array, got {v}")))?;
    arr.iter()
        .enumerate()
        .map(|(k, x)| x.as_f64().ok_or_else(|| bad(format!("coordinate {k} is not a number: {x}"))))
        .collect()
}

fn polyhedron_from_raw(raw: RawPolyhedron) -> Result<Polyhedron> {
    let space = Model::parse(&raw.space)?;
    if space == Model::DeSitter {
        return Err(Error::InvalidInput("space 'desitter' is not a polyhedron model; use klein".into()));
    }
    let faces = raw.faces.iter().enumerate().map(|(i, v)| face_from_value(i, v)).collect::<Result<Vec<_>>>()?;
    let vertices = raw
        .vertices
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let c = coords_from_value(i, v)?;
            ModelPoint::from_coords(space, &c).map_err(|e| Error::InvalidPoint(format!("vertex {i}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let coloring = match raw.coloring {
        None | Some(Value::Null) => None,
        Some(v) => Some(serde_json::from_value(v).map_err(|e| Error::Parse(format!("coloring: {e}")))?),
    };
    Polyhedron::new(vertices, faces, coloring)
}

pub fn parse_polyhedron(text: &str) -> Result<Polyhedron> {
    let raw: RawPolyhedron = serde_json::from_str(text).map_err(parse_err)?;
    polyhedron_from_raw(raw)
}

fn polyhedron_from_value(v: Value) -> Result<Polyhedron> {
    let raw: RawPolyhedron = serde_json::from_value(v).map_err(|e| Error::Parse(e.to_string()))?;
    polyhedron_from_raw(raw)
}

pub fn polyhedron_file(p: &Polyhedron) -> PolyhedronFile {
    PolyhedronFile {
        space: p.space().name().to_string(),
        vertices: p.vertices().iter().map(|v| v.coords()).collect(),
        faces: p.faces().to_vec(),
        coloring: p.coloring().cloned(),
    }
}

pub fn polyhedron_to_json(p: &Polyhedron) -> String {
    to_json(&polyhedron_file(p))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruncatedFile {
    pub source: PolyhedronFile,
    /// De Sitter positions of the source vertices.
    pub desitter: Vec<[f64; 4]>,
    /// `[i, j]` for the truncation vertex on the polar plane of `i` towards `j`.
    pub vertex_keys: Vec<[usize; 2]>,
    /// Hyperboloid coordinates of the truncation vertices.
    pub vertices: Vec<[f64; 4]>,
    pub old_faces: Vec<[usize; 6]>,
    pub new_faces: Vec<Vec<usize>>,
    pub old_edges: Vec<[usize; 2]>,
    pub new_edges: Vec<[usize; 2]>,
}

fn arr4(x: &crate::geom::Vec4) -> [f64; 4] {
    [x[0], x[1], x[2], x[3]]
}

pub fn truncated_file(t: &TruncatedPolyhedron) -> TruncatedFile {
    TruncatedFile {
        source: polyhedron_file(t.source()),
        desitter: t.desitter().iter().map(arr4).collect(),
        vertex_keys: t.vertex_keys().iter().map(|&(i, j)| [i, j]).collect(),
        vertices: t.vertices().iter().map(arr4).collect(),
        old_faces: t.old_faces().to_vec(),
        new_faces: t.new_faces().to_vec(),
        old_edges: t.old_edges().to_vec(),
        new_edges: t.new_edges().to_vec(),
    }
}

pub fn truncated_to_json(t: &TruncatedPolyhedron) -> String {
    to_json(&truncated_file(t))
}

/// Parses a truncation file, re-truncates its source and checks that tables and coordinates
/// agree with the stored ones.
pub fn parse_truncated(text: &str) -> Result<TruncatedPolyhedron> {
    let v: Value = serde_json::from_str(text).map_err(parse_err)?;
    let source = v.get("source").cloned().ok_or_else(|| Error::Parse("missing field 'source'".into()))?;
    let file: TruncatedFile = serde_json::from_value(v).map_err(|e| Error::Parse(e.to_string()))?;
    let t = truncate(&polyhedron_from_value(source)?)?;
    let fresh = truncated_file(&t);
    let mismatch = |what: &str| Error::InvalidInput(format!("truncation file: {what} disagree with the source"));
    if fresh.vertex_keys != file.vertex_keys {
        return Err(mismatch("vertex keys"));
    }
    if fresh.old_faces != file.old_faces || fresh.new_faces != file.new_faces {
        return Err(mismatch("face tables"));
    }
    if fresh.old_edges != file.old_edges || fresh.new_edges != file.new_edges {
        return Err(mismatch("edge tables"));
    }
    let gap = |a: &[[f64; 4]], b: &[[f64; 4]]| {
        a.iter().zip(b).flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs())).fold(0.0, f64::max)
    };
    if file.vertices.len() != fresh.vertices.len() || gap(&file.vertices, &fresh.vertices) > TRUNCATION_CHECK_TOL {
        return Err(mismatch("truncation vertex coordinates"));
    }
    if file.desitter.len() != fresh.desitter.len() || gap(&file.desitter, &fresh.desitter) > TRUNCATION_CHECK_TOL {
        return Err(mismatch("de Sitter coordinates"));
    }
    Ok(t)
}

/// A piece source given inline or as a path relative to the schema file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SourceRef {
    Path(String),
    Inline(Value),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PieceFile {
    pub label: String,
    pub source: SourceRef,
    #[serde(default)]
    pub truncated: bool,
    pub flex_sign: i8,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemaFile {
    pub name: String,
    pub pieces: Vec<PieceFile>,
    pub pairings: Vec<Pairing>,
    #[serde(default)]
    pub alternatives: Vec<AlternativePairing>,
    #[serde(default)]
    pub expected_topology: Option<String>,
}

pub fn schema_file(s: &GluingSchema) -> SchemaFile {
    SchemaFile {
        name: s.name.clone(),
        pieces: s
            .pieces
            .iter()
            .map(|p| PieceFile {
                label: p.label.clone(),
                source: SourceRef::Inline(serde_json::to_value(polyhedron_file(&p.source)).expect("serializable")),
                truncated: p.truncated,
                flex_sign: p.flex_sign,
            })
            .collect(),
        pairings: s.pairings.clone(),
        alternatives: s.alternatives.clone(),
        expected_topology: s.expected_topology.clone(),
    }
}

pub fn schema_to_json(s: &GluingSchema) -> String {
    to_json(&schema_file(s))
}

/// Parses a schema. Path sources are resolved against `base_dir` (the current directory when
/// `None`).
pub fn parse_schema(text: &str, base_dir: Option<&Path>) -> Result<GluingSchema> {
    let file: SchemaFile = serde_json::from_str(text).map_err(parse_err)?;
    let mut pieces = Vec::with_capacity(file.pieces.len());
    for (i, p) in file.pieces.into_iter().enumerate() {
        if !matches!(p.flex_sign, -1..=1) {
            return Err(Error::InvalidInput(format!("piece {i}: flex_sign must be -1, 0 or 1")));
        }
        let source = match p.source {
            SourceRef::Inline(v) => polyhedron_from_value(v),
            SourceRef::Path(rel) => {
                let path: PathBuf = base_dir.map(|d| d.join(&rel)).unwrap_or_else(|| PathBuf::from(&rel));
                read_polyhedron(&path)
            }
        }
        .map_err(|e| Error::InvalidInput(format!("piece {i} source: {e}")))?;
        if p.truncated {
            truncate(&source).map_err(|e| Error::InvalidInput(format!("piece {i}: {e}")))?;
        }
        pieces.push(Piece { label: p.label, source, truncated: p.truncated, flex_sign: p.flex_sign });
    }
    Ok(GluingSchema {
        name: file.name,
        pieces,
        pairings: file.pairings,
        alternatives: file.alternatives,
        expected_topology: file.expected_topology,
    })
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

pub fn read_polyhedron(path: &Path) -> Result<Polyhedron> {
    parse_polyhedron(&read_text(path)?)
}

pub fn read_schema(path: &Path) -> Result<GluingSchema> {
    parse_schema(&read_text(path)?, path.parent())
}

/// Pretty-printed JSON of any report.
pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report types serialize")
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(parse_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conemanifold::{assemble, builtin_schema, SchemaKind};
    use crate::generators::{hyperideal_schonhardt, schonhardt, SchonhardtParams};
    use crate::geom::{convert_model, Ambient};
    use crate::polyhedron::regular_octahedron;
    use crate::rigidity::{flex_analysis, FlexReport};

    fn schon() -> Polyhedron {
        schonhardt(&SchonhardtParams::flexible(1.0, 1.3).unwrap()).unwrap()
    }

    #[test]
    fn polyhedron_round_trip() {
        let p = schon();
        let q = parse_polyhedron(&polyhedron_to_json(&p)).unwrap();
        assert_eq!(q.faces(), p.faces());
        assert_eq!(q.coords(), p.coords());
        assert_eq!(q.space(), p.space());
        let k = regular_octahedron(0.5, Model::Klein).unwrap();
        let verts = k.vertices().iter().map(|v| convert_model(v, Model::Hyperboloid).unwrap()).collect();
        let h = Polyhedron::new(verts, k.faces().to_vec(), None).unwrap();
        let back = parse_polyhedron(&polyhedron_to_json(&h)).unwrap();
        assert_eq!(back.vertices(), h.vertices());
    }

    #[test]
    fn coloring_round_trip() {
        let p = regular_octahedron(1.0, Model::Euclidean).unwrap();
        let c = p.face_two_coloring().unwrap();
        let colored = Polyhedron::new(p.vertices().to_vec(), p.faces().to_vec(), Some(c.clone())).unwrap();
        let q = parse_polyhedron(&polyhedron_to_json(&colored)).unwrap();
        assert_eq!(q.coloring(), Some(&c));
    }

    #[test]
    fn malformed_face_names_index() {
        let text = r#"{"space":"euclidean","vertices":[[0,0,0],[1,0,0],[0,1,0],[0,0,1]],
            "faces":[[0,2,1],[0,1,3],[1,2],[0,3,2]]}"#;
        let err = parse_polyhedron(text).unwrap_err();
        assert!(matches!(err, Error::BadFace { face: 2, .. }), "{err}");
        let text = r#"{"space":"euclidean","vertices":[[0,0,0],[1,0,0],[0,1,0],[0,0,1]],
            "faces":[[0,2,1],[0,1,3],[1,2,3],[0,3,"x"]]}"#;
        assert!(matches!(parse_polyhedron(text).unwrap_err(), Error::BadFace { face: 3, .. }));
        let text = r#"{"space":"euclidean","vertices":[[0,0,0],[1,0,0],[0,1,0],[0,0,1]],
            "faces":[[0,2,1],[0,1,3],[1,2,3],[0,3,9]]}"#;
        assert!(matches!(parse_polyhedron(text).unwrap_err(), Error::BadFace { face: 3, .. }));
    }

    #[test]
    fn syntax_errors_report_position() {
        let err = parse_polyhedron("{\"space\": \"klein\",\n \"vertices\": [,]}").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(parse_polyhedron(r#"{"space":"sphere","vertices":[],"faces":[]}"#).is_err());
    }

    #[test]
    fn truncated_round_trip_and_tamper() {
        let src = hyperideal_schonhardt(&SchonhardtParams::flexible(1.0, 1.0).unwrap(), 0.95).unwrap();
        let t = truncate(&src).unwrap();
        let text = truncated_to_json(&t);
        let back = parse_truncated(&text).unwrap();
        assert_eq!(back.vertices(), t.vertices());
        let mut file: TruncatedFile = from_json(&text).unwrap();
        file.vertices[3][1] += 1e-6;
        assert!(parse_truncated(&to_json(&file)).is_err());
        let mut file: TruncatedFile = from_json(&text).unwrap();
        file.old_faces.swap(0, 1);
        assert!(parse_truncated(&to_json(&file)).is_err());
    }

    #[test]
    fn schema_round_trip_inline_and_path() {
        let src = hyperideal_schonhardt(&SchonhardtParams::flexible(1.0, 1.0).unwrap(), 0.95).unwrap();
        let s = builtin_schema(SchemaKind::FourComp, &src).unwrap();
        let back = parse_schema(&schema_to_json(&s), None).unwrap();
        assert_eq!(back.pairings, s.pairings);
        let a = assemble(&s).unwrap();
        let b = assemble(&back).unwrap();
        assert_eq!(a.components.len(), b.components.len());
        for (x, y) in a.singular_angles().iter().zip(b.singular_angles()) {
            assert_eq!(*x, y);
        }

        let dir = std::env::temp_dir().join(format!("flexcone-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(dir.join("piece.json"), polyhedron_to_json(&src)).unwrap();
        let mut file = schema_file(&s);
        for p in &mut file.pieces {
            p.source = SourceRef::Path("piece.json".into());
        }
        std::fs::write(dir.join("schema.json"), to_json(&file)).unwrap();
        let from_path = read_schema(&dir.join("schema.json")).unwrap();
        assert_eq!(from_path.pieces.len(), s.pieces.len());
        assert_eq!(assemble(&from_path).unwrap().components.len(), a.components.len());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn schema_rejects_bad_sign() {
        let s = builtin_schema(SchemaKind::Double, &schon()).unwrap();
        let mut file = schema_file(&s);
        file.pieces[0].flex_sign = 3;
        assert!(parse_schema(&to_json(&file), None).is_err());
    }

    #[test]
    fn flex_report_round_trip() {
        let r = flex_analysis(&schon(), Ambient::Euclidean, 1e-9).unwrap();
        let back: FlexReport = from_json(&to_json(&r)).unwrap();
        assert_eq!(back.kernel_dim, r.kernel_dim);
        assert_eq!(back.flex_basis, r.flex_basis);
        assert_eq!(back.singular_values, r.singular_values);
    }
}
