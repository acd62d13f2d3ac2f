use crate::{
    AmbientArg, Cli, Command, GenerateKind, Global, SchemaArg, SchemaInput, EXIT_CHECK_FAILED, EXIT_FLEXIBLE,
};
use anyhow::{anyhow, bail, Context, Result};
use flexcone::conemanifold::{
    assemble, builtin_schema, large_angle_cover, manifold_flex_check, meridian_cover_search, prism_meridian_system,
    GluingSchema, SchemaKind,
};
use flexcone::deaverage::{collision_search, congruence_test, deaverage};
use flexcone::generators::{
    antiprism, gluck_octahedron, hyperideal_schonhardt, ideal_twisted_octahedron, inscribed_params_for_ratio,
    random_concurrent_octahedron, random_octahedron, schonhardt, GluckParams, SchonhardtParams,
};
use flexcone::geom::convert_model;
use flexcone::hyperideal::{min_tube_distance, truncate, truncated_metrics, TruncatedPolyhedron};
use flexcone::io::{
    from_json, parse_polyhedron, parse_truncated, polyhedron_file, read_polyhedron, read_schema, read_text,
    schema_to_json, truncated_file,
};
use flexcone::polyhedron::regular_octahedron;
use flexcone::rigidity::{blaschke_liebmann, flex_analysis, BL_TOL};
use flexcone::{Ambient, FlexField, Model, Polyhedron};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::path::Path;

/// A rendered command result.
pub struct Report {
    pub json: Value,
    pub text: String,
    pub code: u8,
}

impl Report {
    pub fn new<T: Serialize>(value: &T, text: String) -> Result<Report> {
        Ok(Report { json: serde_json::to_value(value)?, text, code: 0 })
    }

    fn with_code(mut self, code: u8) -> Report {
        self.code = code;
        self
    }
}

pub fn run(cli: &Cli) -> Result<u8> {
    let g = &cli.global;
    let report = match &cli.command {
        Command::Analyze { input, ambient } => analyze(g, input, *ambient)?,
        Command::Bl { input } => bl(input)?,
        Command::Generate { kind } => generate(g, kind)?,
        Command::Truncate { input } => {
            let t = truncate(&read_polyhedron(input)?)?;
            let (v, e, f) = t.counts();
            Report::new(&truncated_file(&t), format!("truncation: {v} vertices, {e} edges, {f} faces\n"))?
        }
        Command::Metrics { input } => metrics(input)?,
        Command::Tube { input } => {
            let r = min_tube_distance(&load_truncation(input)?)?;
            let text = format!(
                "min old-edge distance {:.6} between source edges {:?} and {:?}; bound {:.6}; within bound: {}\n",
                r.min_distance, r.pair[0], r.pair[1], r.bound, r.within_bound
            );
            Report::new(&r, text)?
        }
        Command::Glue { input, schema_out } => {
            let s = load_schema(input)?;
            if let Some(path) = schema_out {
                std::fs::write(path, schema_to_json(&s)).with_context(|| format!("writing {}", path.display()))?;
            }
            let m = assemble(&s)?;
            let mut text = format!(
                "{}: {} singular components, orientable {}, boundary {}\n",
                m.schema,
                m.components.len(),
                m.orientable,
                m.has_boundary
            );
            for (i, c) in m.components.iter().enumerate() {
                let _ = writeln!(
                    text,
                    "  component {i}: angle {:.6}, length {:.6}, {}",
                    c.cone_angle,
                    c.length,
                    if c.is_circle { "circle" } else { "segment" }
                );
            }
            Report::new(&m, text)?
        }
        Command::Flexcheck { input, flex, step } => {
            let s = load_schema(input)?;
            let flex = match flex {
                Some(path) => from_json::<FlexField>(&read_text(path)?)?,
                None => default_flex(&s.pieces.first().ok_or_else(|| anyhow!("schema has no pieces"))?.source, g.tol)?,
            };
            let r = manifold_flex_check(&s, &flex, *step)?;
            let text = format!(
                "{}: component variation {:.3e}, pairing mismatch {:.3e}, witness {:.4}, passed {}\n",
                s.name, r.max_component_variation, r.max_pairing_mismatch, r.witness, r.passed
            );
            let code = if r.passed { 0 } else { EXIT_CHECK_FAILED };
            Report::new(&r, text)?.with_code(code)
        }
        Command::Cover { n, assignment } => cover(*n, assignment.as_deref())?,
        Command::Lift { ratio, shrink, n, assignment } => {
            let c = large_angle_cover(*ratio, *shrink, assignment, *n)?;
            let text = format!(
                "ratio {}, shrink {}: min dihedral {:.6}; {}-fold cover min angle {:.6}; all above 2pi: {}\n",
                c.ratio, c.shrink, c.min_dihedral, c.sheets, c.lifted.min_angle, c.lifted.all_above_two_pi
            );
            Report::new(&c, text)?
        }
        Command::Deaverage { input, t, flex } => deaverage_cmd(g, input, *t, flex.as_deref())?,
        Command::Collide { eps, a_range, b_range } => {
            let r = collision_search(*eps, *a_range, *b_range, 1e-8)?;
            let text = format!(
                "family {} at (t {:.6}, a {:.6}, b {:.6}) and family {} at (t {:.6}, a {:.6}, b {:.6})\n  angles {:.9?}\n  angle residual {:.2e}, edge length gap {:.3e}, non-isometric {}\n",
                r.first.family, r.first.t, r.first.a, r.first.b, r.second.family, r.second.t, r.second.a, r.second.b,
                r.first.angles, r.angle_residual, r.edge_length_gap, r.non_isometric
            );
            Report::new(&r, text)?
        }
        Command::Reproduce { id } => crate::reproduce::reproduce(*id, g)?,
    };
    emit(g, &report)?;
    Ok(report.code)
}

fn emit(g: &Global, r: &Report) -> Result<()> {
    let body = if g.text { r.text.clone() } else { serde_json::to_string_pretty(&r.json)? + "\n" };
    match &g.out {
        Some(path) => std::fs::write(path, body).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{body}"),
    }
    Ok(())
}

fn analyze(g: &Global, input: &Path, ambient: Option<AmbientArg>) -> Result<Report> {
    let p = read_polyhedron(input)?;
    let ambient = match ambient {
        Some(AmbientArg::Euclidean) => Ambient::Euclidean,
        Some(AmbientArg::Minkowski) => Ambient::Minkowski,
        None if p.space() == Model::Euclidean => Ambient::Euclidean,
        None => Ambient::Minkowski,
    };
    let p = if ambient == Ambient::Euclidean && p.is_hyperbolic() { p.reinterpret(Model::Euclidean)? } else { p };
    let r = flex_analysis(&p, ambient, g.tol)?;
    let text = format!(
        "{}: kernel {}, trivial {}, {}\n",
        ambient.name(),
        r.kernel_dim,
        r.trivial_dim,
        if r.flexible { "flexible" } else { "rigid" }
    );
    let code = if r.flexible { EXIT_FLEXIBLE } else { 0 };
    Ok(Report::new(&r, text)?.with_code(code))
}

fn bl(input: &Path) -> Result<Report> {
    let p = read_polyhedron(input)?;
    let r = blaschke_liebmann(&p, BL_TOL)?;
    let text = format!(
        "det black {:.3e}, det white {:.3e}: {}\n",
        r.det_black,
        r.det_white,
        if r.flexible { "flexible" } else { "rigid" }
    );
    let code = if r.flexible { EXIT_FLEXIBLE } else { 0 };
    Ok(Report::new(&r, text)?.with_code(code))
}

fn generate(g: &Global, kind: &GenerateKind) -> Result<Report> {
    let p: Polyhedron = match kind {
        GenerateKind::Schonhardt { a, b, twist, klein_radius } => {
            let params = SchonhardtParams::new(*a, *b, *twist)?;
            let e = schonhardt(&params)?;
            match klein_radius {
                None => e,
                Some(r) => {
                    let s = r / params.circumradius();
                    e.reinterpret(Model::Klein)?.with_coords(e.coords().iter().map(|c| c * s).collect())?
                }
            }
        }
        GenerateKind::Hyperideal { a, b, shrink, ratio } => {
            let params = match ratio {
                Some(r) => inscribed_params_for_ratio(*r)?,
                None => SchonhardtParams::flexible(*a, *b)?,
            };
            hyperideal_schonhardt(&params, *shrink)?
        }
        GenerateKind::Ideal { ratio } => ideal_twisted_octahedron(*ratio)?,
        GenerateKind::Gluck { lambda, d_offset } => {
            gluck_octahedron(&GluckParams { lambda: *lambda, d_offset: *d_offset, ..GluckParams::default() })?.0
        }
        GenerateKind::Antiprism { n, a, b, twisted } => {
            antiprism(*n, *a, *b, if *twisted { std::f64::consts::FRAC_PI_2 } else { 0.0 })?
        }
        GenerateKind::Regular { radius, space } => match Model::parse(space)? {
            m @ (Model::Euclidean | Model::Klein) => regular_octahedron(*radius, m)?,
            m => {
                let k = regular_octahedron(*radius, Model::Klein)?;
                let pts = k.vertices().iter().map(|v| convert_model(v, m)).collect::<flexcone::Result<_>>()?;
                Polyhedron::new(pts, k.faces().to_vec(), None)?
            }
        },
        GenerateKind::Concurrent => random_concurrent_octahedron(&mut ChaCha8Rng::seed_from_u64(g.seed)),
        GenerateKind::Random => random_octahedron(&mut ChaCha8Rng::seed_from_u64(g.seed)),
    };
    let text = format!(
        "{} polyhedron: {} vertices, {} faces\n",
        p.space().name(),
        p.num_vertices(),
        p.faces().len()
    );
    Report::new(&polyhedron_file(&p), text)
}

/// Reads a truncation file, or truncates a polyhedron file.
fn load_truncation(input: &Path) -> Result<TruncatedPolyhedron> {
    let text = read_text(input)?;
    let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", input.display()))?;
    Ok(if v.get("old_faces").is_some() { parse_truncated(&text)? } else { truncate(&parse_polyhedron(&text)?)? })
}

fn metrics(input: &Path) -> Result<Report> {
    let m = truncated_metrics(&load_truncation(input)?)?;
    let text = format!(
        "old edges: lengths {:.6?}\n  length discrepancy {:.2e}, new-edge angle error {:.2e}, hexagon angle error {:.2e}\n  dihedral angles {:.6?}\n",
        m.old_edge_lengths, m.max_length_discrepancy, m.max_new_edge_angle_error, m.max_hexagon_angle_error,
        m.old_edge_dihedral_angles
    );
    Report::new(&m, text)
}

fn schema_kind(a: SchemaArg) -> SchemaKind {
    match a {
        SchemaArg::Double => SchemaKind::Double,
        SchemaArg::DoubleOfDouble => SchemaKind::DoubleOfDouble,
        SchemaArg::ThreeComp => SchemaKind::ThreeComp,
        SchemaArg::FourComp => SchemaKind::FourComp,
    }
}

fn load_schema(input: &SchemaInput) -> Result<GluingSchema> {
    match (&input.schema, input.builtin, &input.source) {
        (Some(path), _, _) => Ok(read_schema(path)?),
        (None, Some(kind), Some(src)) => Ok(builtin_schema(schema_kind(kind), &read_polyhedron(src)?)?),
        _ => bail!("give --schema FILE or --builtin KIND --source FILE"),
    }
}

/// First nontrivial flex of the Euclidean reinterpretation of a polyhedron.
pub fn default_flex(p: &Polyhedron, tol: f64) -> Result<FlexField> {
    let e = if p.space() == Model::Euclidean { p.clone() } else { p.reinterpret(Model::Euclidean)? };
    let r = flex_analysis(&e, Ambient::Euclidean, tol)?;
    r.flex_basis.into_iter().next().ok_or_else(|| anyhow!("the polyhedron is infinitesimally rigid; pass --flex"))
}

fn cover(n: u64, assignment: Option<&[u64]>) -> Result<Report> {
    let system = prism_meridian_system();
    let start = std::time::Instant::now();
    let all = meridian_cover_search(&system, n)?;
    let elapsed = start.elapsed().as_secs_f64();
    let mut text = format!("{} of {} assignments valid in Z_{n} ({:.1} ms)\n", all.len(), n.pow(4), elapsed * 1e3);
    let mut checked = Value::Null;
    if let Some(a) = assignment {
        if a.len() != system.generators.len() {
            bail!("assignment needs {} entries", system.generators.len());
        }
        let images = system.images(a, n);
        let valid = images.iter().all(|&x| x != 0);
        let _ = writeln!(text, "assignment {a:?}: images {images:?}, valid {valid}");
        checked = json!({
            "assignment": a,
            "words": system.words.iter().map(|w| w.name.clone()).collect::<Vec<_>>(),
            "images": images,
            "valid": valid,
        });
    }
    Report::new(
        &json!({ "n": n, "count": all.len(), "elapsed_seconds": elapsed, "assignments": all, "checked": checked }),
        text,
    )
}

fn deaverage_cmd(g: &Global, input: &Path, t: f64, flex: Option<&Path>) -> Result<Report> {
    let p = read_polyhedron(input)?;
    let flex = match flex {
        Some(path) => from_json::<FlexField>(&read_text(path)?)?,
        None => default_flex(&p, g.tol)?,
    };
    let d = deaverage(&p, &flex, t)?;
    let c = congruence_test(&d.plus, &d.minus, 1e-8)?;
    let text = format!(
        "t = {t}: edge length difference {:.2e}, congruent {}, max dihedral difference {:.3e}\n",
        d.max_length_difference, c.congruent, c.max_angle_difference
    );
    Report::new(
        &json!({
            "t": t,
            "plus": polyhedron_file(&d.plus),
            "minus": polyhedron_file(&d.minus),
            "max_length_difference": d.max_length_difference,
            "congruence": c,
        }),
        text,
    )
}
