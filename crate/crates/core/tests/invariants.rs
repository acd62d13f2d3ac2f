use flexcone::deaverage::{deaverage, family_polyhedron};
use flexcone::geom::{lift_klein, segment_distance};
use flexcone::generators::{hyperideal_schonhardt, schonhardt, SchonhardtParams};
use flexcone::hyperideal::{min_tube_distance, truncate, truncated_flex_analysis, truncated_metrics, tube_bound};
use flexcone::io::{parse_polyhedron, parse_truncated, polyhedron_to_json, truncated_to_json};
use flexcone::rigidity::{flex_analysis, DEFAULT_KERNEL_TOL};
use flexcone::{Ambient, Model, Vec3};
use proptest::prelude::*;
use std::f64::consts::PI;

fn klein_point() -> impl Strategy<Value = Vec3> {
    (-0.5f64..0.5, -0.5f64..0.5, -0.5f64..0.5).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn klein_and_euclidean_verdicts_agree(a in 0.5f64..2.0, b in 0.5f64..2.0, twist in 0.3f64..2.8, scale in 0.2f64..0.5) {
        let params = SchonhardtParams::new(a, b, twist).unwrap();
        let e = schonhardt(&params).unwrap();
        let e = e.with_coords(e.coords().iter().map(|c| c * scale / params.circumradius()).collect()).unwrap();
        let k = e.reinterpret(Model::Klein).unwrap();
        let re = flex_analysis(&e, Ambient::Euclidean, DEFAULT_KERNEL_TOL).unwrap();
        let rk = flex_analysis(&k, Ambient::Minkowski, DEFAULT_KERNEL_TOL).unwrap();
        prop_assert_eq!(re.kernel_dim, rk.kernel_dim);
        prop_assert_eq!(re.flexible, rk.flexible);
    }

    #[test]
    fn hyperideal_truncations_have_right_angles(a in 0.8f64..1.5, b in 0.8f64..1.5, s in 0.9f64..0.99) {
        let Ok(src) = hyperideal_schonhardt(&SchonhardtParams::flexible(a, b).unwrap(), s) else {
            return Ok(());
        };
        let t = truncate(&src).unwrap();
        let m = truncated_metrics(&t).unwrap();
        prop_assert!(m.max_new_edge_angle_error < 1e-9);
        prop_assert!(m.max_hexagon_angle_error < 1e-9);
        prop_assert!(m.max_length_discrepancy < 1e-9);
        prop_assert_eq!(t.euler_characteristic(), 2);
        let r = truncated_flex_analysis(&t, DEFAULT_KERNEL_TOL).unwrap();
        prop_assert_eq!(r.kernel_dim, 7);
        prop_assert!(min_tube_distance(&t).unwrap().min_distance <= tube_bound() + 1e-9);
    }

    #[test]
    fn intersecting_segments_have_zero_distance(m in klein_point(), d1 in klein_point(), d2 in klein_point()) {
        prop_assume!(d1.norm() > 0.1 && d2.norm() > 0.1 && d1.cross(&d2).norm() > 0.05);
        for e in [m + d1 * 0.8, m - d1 * 0.6, m + d2 * 0.8, m - d2 * 0.6] {
            prop_assume!(e.norm() < 0.95);
        }
        let ends = |d: Vec3| (lift_klein(&(m + d * 0.8)).unwrap(), lift_klein(&(m - d * 0.6)).unwrap());
        let (a0, a1) = ends(d1);
        let (b0, b1) = ends(d2);
        let d = segment_distance((&a0, &a1), (&b0, &b1)).unwrap();
        prop_assert!(d < 1e-6, "distance {}", d);
    }

    #[test]
    fn polyhedron_files_round_trip(a in 0.5f64..2.0, b in 0.5f64..2.0, twist in 0.2f64..3.0) {
        let p = schonhardt(&SchonhardtParams::new(a, b, twist).unwrap()).unwrap();
        let q = parse_polyhedron(&polyhedron_to_json(&p)).unwrap();
        prop_assert_eq!(q.coords(), p.coords());
        prop_assert_eq!(q.faces(), p.faces());
    }

    #[test]
    fn deaveraged_lengths_are_even(t in -0.03f64..0.03, a in 0.9f64..1.1, b in 0.9f64..1.1) {
        let (p, q) = family_polyhedron(a, b).unwrap();
        let d = deaverage(&p, &q, t).unwrap();
        prop_assert!(d.max_length_difference < 1e-12);
    }
}

#[test]
fn truncation_files_round_trip() {
    let src = hyperideal_schonhardt(&SchonhardtParams::flexible(1.0, 1.0).unwrap(), 0.95).unwrap();
    let t = truncate(&src).unwrap();
    let back = parse_truncated(&truncated_to_json(&t)).unwrap();
    assert_eq!(back.vertices(), t.vertices());
    assert_eq!(back.new_faces(), t.new_faces());
}

#[test]
fn twist_pi_is_convex_and_rigid() {
    let p = schonhardt(&SchonhardtParams::new(1.0, 1.0, PI).unwrap()).unwrap();
    assert!(p.dihedral_angles().unwrap().iter().all(|&a| a < PI));
    assert!(!flex_analysis(&p, Ambient::Euclidean, DEFAULT_KERNEL_TOL).unwrap().flexible);
}
