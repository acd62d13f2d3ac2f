//! End-to-end pipelines for the main constructions, each reduced to named pass/fail checks.

use crate::commands::Report;
use crate::{Global, ReproduceId, EXIT_CHECK_FAILED};
use anyhow::{Context, Result};
use flexcone::conemanifold::{
    assemble, builtin_schema, large_angle_cover, manifold_flex_check, meridian_cover_search, prism_meridian_system,
    SchemaKind,
};
use flexcone::deaverage::collision_search;
use flexcone::generators::{
    hyperideal_schonhardt, ideal_twisted_octahedron_angles, schonhardt, symmetric_schonhardt_flex, SchonhardtParams,
};
use flexcone::hyperideal::{min_tube_distance, truncate, truncated_flex_analysis};
use flexcone::rigidity::flex_analysis;
use flexcone::{Ambient, Model, Polyhedron};
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt::Write as _;

#[derive(Serialize)]
struct Check {
    name: String,
    passed: bool,
    detail: String,
}

#[derive(Serialize)]
struct Reproduction {
    id: String,
    checks: Vec<Check>,
    passed: bool,
}

#[derive(Default)]
struct Checks(Vec<Check>);

impl Checks {
    fn add(&mut self, name: &str, passed: bool, detail: String) {
        self.0.push(Check { name: name.into(), passed, detail });
    }
}

fn params() -> Result<SchonhardtParams> {
    Ok(SchonhardtParams::flexible(1.0, 1.0)?)
}

fn hyperideal() -> Result<Polyhedron> {
    Ok(hyperideal_schonhardt(&params()?, 0.95)?)
}

fn labeled_gluing(kind: SchemaKind, components: usize, orientable: bool, c: &mut Checks) -> Result<()> {
    let p = hyperideal().context("stage generate")?;
    let t = truncate(&p).context("stage truncate")?;
    let f = truncated_flex_analysis(&t, 1e-9).context("stage analyze")?;
    c.add("truncated piece flexible", f.flexible, format!("kernel {}", f.kernel_dim));
    let s = builtin_schema(kind, &p).context("stage glue")?;
    let m = assemble(&s).context("stage assemble")?;
    let angles = m.singular_angles();
    c.add(
        "singular components",
        m.components.len() == components,
        format!("{} components, angles {:.6?}", m.components.len(), angles),
    );
    c.add("orientability", m.orientable == orientable, format!("orientable {}", m.orientable));
    let big = angles.iter().filter(|&&a| a > 2.0 * PI).count();
    c.add("one component above 2pi", big == 1, format!("{big} components above 2pi"));
    let flex = symmetric_schonhardt_flex(&p.reinterpret(Model::Euclidean)?, &params()?)?;
    let r = manifold_flex_check(&s, &flex, 1e-4).context("stage flexcheck")?;
    c.add(
        "cone angles preserved to first order",
        r.passed,
        format!("variation {:.2e}, witness {:.4}", r.max_component_variation, r.witness),
    );
    Ok(())
}

pub fn reproduce(id: ReproduceId, _g: &Global) -> Result<Report> {
    let mut c = Checks::default();
    let name = match id {
        ReproduceId::Thm1 => {
            let e = schonhardt(&params()?).context("stage generate")?;
            let k = e.reinterpret(Model::Klein)?.with_coords(e.coords().iter().map(|x| x * 0.5).collect())?;
            let f = flex_analysis(&k, Ambient::Minkowski, 1e-9).context("stage analyze")?;
            c.add("hyperbolic octahedron flexible", f.flexible, format!("kernel {}", f.kernel_dim));
            let s = builtin_schema(SchemaKind::Double, &k).context("stage glue")?;
            let m = assemble(&s).context("stage assemble")?;
            c.add(
                "singular locus is the octahedron skeleton",
                m.components.len() == 12 && m.vertex_classes == 6 && m.components.iter().all(|x| !x.is_circle),
                format!("{} segments between {} vertices", m.components.len(), m.vertex_classes),
            );
            c.add("closed and orientable", m.orientable && !m.has_boundary, format!("boundary {}", m.has_boundary));
            let flex = symmetric_schonhardt_flex(&e, &params()?)?;
            let r = manifold_flex_check(&s, &flex, 1e-4).context("stage flexcheck")?;
            c.add(
                "cone angles preserved, deformation nontrivial",
                r.passed,
                format!("variation {:.2e}, witness {:.4}", r.max_component_variation, r.witness),
            );
            "thm1"
        }
        ReproduceId::Thm2ThreeComp => {
            labeled_gluing(SchemaKind::ThreeComp, 3, false, &mut c)?;
            "thm2-3comp"
        }
        ReproduceId::Thm2FourComp => {
            labeled_gluing(SchemaKind::FourComp, 4, true, &mut c)?;
            "thm2-4comp"
        }
        ReproduceId::Thm3 => {
            let cover = large_angle_cover(50.0, 0.99, &[1, 1, 2, 1], 7).context("stage lift")?;
            c.add(
                "all dihedral angles above pi/7",
                cover.min_dihedral > PI / 7.0,
                format!("min {:.6} vs {:.6}", cover.min_dihedral, PI / 7.0),
            );
            c.add(
                "every meridian maps nontrivially",
                cover.meridian_images.iter().all(|&x| x != 0),
                format!("images {:?}", cover.meridian_images),
            );
            c.add(
                "lifted angles above 2pi",
                cover.lifted.all_above_two_pi,
                format!("min lifted angle {:.6}", cover.lifted.min_angle),
            );
            let p = hyperideal_schonhardt(&flexible_for_ratio(50.0)?, 0.99)?;
            let f = truncated_flex_analysis(&truncate(&p)?, 1e-9).context("stage analyze")?;
            c.add("base piece flexible", f.flexible, format!("kernel {}", f.kernel_dim));
            "thm3"
        }
        ReproduceId::Thm4 => {
            let r = collision_search(0.05, [0.8, 1.2], [0.8, 1.2], 1e-8).context("stage collide")?;
            c.add(
                "distinct families",
                r.first.family != r.second.family,
                format!("families {} and {}", r.first.family, r.second.family),
            );
            c.add("equal cone angles", r.angle_residual < 1e-8, format!("residual {:.2e}", r.angle_residual));
            c.add("non-isometric", r.edge_length_gap > 1e-6, format!("edge length gap {:.3e}", r.edge_length_gap));
            "thm4"
        }
        ReproduceId::AnglesIdeal => {
            let a = ideal_twisted_octahedron_angles(1e3).context("stage angles")?;
            let target = [PI / 6.0, PI / 3.0, PI / 3.0, 7.0 * PI / 6.0];
            let err = a.classes.iter().zip(&target).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            c.add("limits at ratio 1e3", err < 1e-2, format!("classes {:.6?}, max error {err:.2e}", a.classes));
            let b = ideal_twisted_octahedron_angles(50.0)?;
            c.add(
                "all classes above pi/7 at ratio 50",
                b.classes.iter().all(|&x| x > PI / 7.0),
                format!("classes {:.6?}", b.classes),
            );
            "angles-ideal"
        }
        ReproduceId::Tube => {
            let r = min_tube_distance(&truncate(&hyperideal()?)?).context("stage tube")?;
            c.add(
                "old-edge distance within bound",
                r.within_bound,
                format!("{:.6} at {:?}, bound {:.6}", r.min_distance, r.pair, r.bound),
            );
            "tube"
        }
        ReproduceId::Cover => {
            let s = prism_meridian_system();
            let all = meridian_cover_search(&s, 7).context("stage cover")?;
            let images = s.images(&[1, 1, 2, 1], 7);
            c.add("assignment (1,1,2,1) found", all.contains(&vec![1, 1, 2, 1]), format!("{} valid", all.len()));
            c.add(
                "images in 1..6",
                images.iter().all(|&x| (1..=6).contains(&x)),
                format!("images {images:?}"),
            );
            "cover"
        }
    };
    let passed = c.0.iter().all(|x| x.passed);
    let mut text = String::new();
    for x in &c.0 {
        let _ = writeln!(text, "{} {}: {}", if x.passed { "PASS" } else { "FAIL" }, x.name, x.detail);
    }
    let _ = writeln!(text, "{name}: {}", if passed { "passed" } else { "failed" });
    let report = Reproduction { id: name.into(), checks: c.0, passed };
    let r = Report::new(&report, text)?;
    Ok(if passed { r } else { Report { code: EXIT_CHECK_FAILED, ..r } })
}

fn flexible_for_ratio(r: f64) -> Result<SchonhardtParams> {
    Ok(flexcone::generators::inscribed_params_for_ratio(r)?)
}
