use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_flexcone"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("flexcone-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn generate(dir: &Path, file: &str, args: &[&str]) -> String {
    let path = dir.join(file);
    let p = path.to_str().unwrap().to_string();
    let mut all = vec!["generate"];
    all.extend_from_slice(args);
    all.extend_from_slice(&["--out", &p]);
    let out = run(&all);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    p
}

#[test]
fn analyze_exit_codes() {
    let dir = scratch("analyze");
    let s = generate(&dir, "s.json", &["schonhardt"]);
    let out = run(&["analyze", &s, "--ambient", "euclidean"]);
    assert_eq!(out.status.code(), Some(10));
    let r = json(&out);
    assert_eq!(r["kernel_dim"], 7);
    assert_eq!(r["flexible"], true);
    let o = generate(&dir, "o.json", &["regular"]);
    let out = run(&["analyze", &o]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["kernel_dim"], 6);
}

#[test]
fn malformed_faces_name_the_face() {
    let dir = scratch("bad");
    let path = dir.join("bad.json");
    std::fs::write(
        &path,
        r#"{"space":"euclidean","vertices":[[0,0,0],[1,0,0],[0,1,0],[0,0,1]],"faces":[[0,2,1],[0,1,3],[1,2],[0,3,2]]}"#,
    )
    .unwrap();
    let out = run(&["analyze", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("face 2"));
    std::fs::write(&path, "{\"space\": \"euclidean\",\n \"vertices\": [[0,0]").unwrap();
    let out = run(&["analyze", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn generated_files_round_trip() {
    let dir = scratch("gen");
    for (i, args) in [
        vec!["schonhardt", "--twist", "1.0"],
        vec!["schonhardt", "--klein-radius", "0.5"],
        vec!["hyperideal"],
        vec!["ideal", "--ratio", "10"],
        vec!["gluck"],
        vec!["antiprism", "--n", "6", "--twisted"],
        vec!["regular", "--space", "hyperboloid", "--radius", "0.6"],
        vec!["concurrent"],
        vec!["random"],
    ]
    .into_iter()
    .enumerate()
    {
        let p = generate(&dir, &format!("p{i}.json"), &args);
        let first = std::fs::read_to_string(&p).unwrap();
        let q = flexcone::io::parse_polyhedron(&first).unwrap();
        let again: Value = serde_json::from_str(&flexcone::io::polyhedron_to_json(&q)).unwrap();
        assert_eq!(again, serde_json::from_str::<Value>(&first).unwrap(), "{args:?}");
    }
}

#[test]
fn seeded_generation_is_deterministic() {
    let a = run(&["generate", "concurrent", "--seed", "5"]);
    let b = run(&["generate", "concurrent", "--seed", "5"]);
    let c = run(&["generate", "concurrent", "--seed", "6"]);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let dir = scratch("bl");
    let p = generate(&dir, "c.json", &["concurrent", "--seed", "5"]);
    assert_eq!(run(&["bl", &p]).status.code(), Some(10));
    let r = generate(&dir, "r.json", &["random", "--seed", "5"]);
    assert_eq!(run(&["bl", &r]).status.code(), Some(0));
}

#[test]
fn truncation_pipeline() {
    let dir = scratch("trunc");
    let h = generate(&dir, "h.json", &["hyperideal"]);
    let t = dir.join("t.json");
    assert!(run(&["truncate", &h, "--out", t.to_str().unwrap()]).status.success());
    let tr = flexcone::io::parse_truncated(&std::fs::read_to_string(&t).unwrap()).unwrap();
    assert_eq!(tr.counts(), (24, 36, 14));
    let m = json(&run(&["metrics", t.to_str().unwrap()]));
    assert!(m["max_new_edge_angle_error"].as_f64().unwrap() < 1e-9);
    let tube = json(&run(&["tube", &h]));
    assert_eq!(tube["within_bound"], true);
}

#[test]
fn glue_and_flexcheck() {
    let dir = scratch("glue");
    let h = generate(&dir, "h.json", &["hyperideal"]);
    let schema = dir.join("schema.json");
    let out = run(&["glue", "--builtin", "three-comp", "--source", &h, "--schema-out", schema.to_str().unwrap()]);
    assert!(out.status.success());
    let m = json(&out);
    assert_eq!(m["components"].as_array().unwrap().len(), 3);
    assert_eq!(m["orientable"], false);
    let again = json(&run(&["glue", "--schema", schema.to_str().unwrap()]));
    assert_eq!(again["components"], m["components"]);
    let out = run(&["flexcheck", "--schema", schema.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["passed"], true);

    let mut file: Value = serde_json::from_str(&std::fs::read_to_string(&schema).unwrap()).unwrap();
    file["pieces"][1]["flex_sign"] = Value::from(1);
    std::fs::write(&schema, file.to_string()).unwrap();
    let out = run(&["flexcheck", "--schema", schema.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn cover_and_lift() {
    let c = json(&run(&["cover", "--n", "7", "--assignment", "1,1,2,1"]));
    assert_eq!(c["checked"]["valid"], true);
    assert!(c["assignments"].as_array().unwrap().contains(&serde_json::json!([1, 1, 2, 1])));
    let l = json(&run(&["lift"]));
    assert_eq!(l["lifted"]["all_above_two_pi"], true);
}

#[test]
fn deaverage_and_collide() {
    let dir = scratch("deav");
    let k = generate(&dir, "k.json", &["schonhardt", "--klein-radius", "0.5"]);
    let d = json(&run(&["deaverage", &k, "--t", "0.01"]));
    assert!(d["max_length_difference"].as_f64().unwrap() < 1e-12);
    assert_eq!(d["congruence"]["congruent"], false);
    let plus = flexcone::io::parse_polyhedron(&d["plus"].to_string()).unwrap();
    assert_eq!(plus.space(), flexcone::Model::Hyperboloid);
    let r = json(&run(&["collide"]));
    assert!(r["angle_residual"].as_f64().unwrap() < 1e-8);
    assert_ne!(r["first"]["family"], r["second"]["family"]);
}

#[test]
fn reproduce_all() {
    for id in ["thm1", "thm2-3comp", "thm2-4comp", "thm3", "thm4", "angles-ideal", "tube", "cover"] {
        let out = run(&["reproduce", id]);
        assert_eq!(out.status.code(), Some(0), "{id}: {}", String::from_utf8_lossy(&out.stdout));
        assert_eq!(json(&out)["passed"], true);
        let text = run(&["reproduce", id, "--text"]);
        assert!(String::from_utf8_lossy(&text.stdout).contains("PASS"));
    }
}

#[test]
fn rejects_bad_flags() {
    assert_eq!(run(&["analyze", "x.json", "--tol", "-1"]).status.code(), Some(2));
    assert!(!run(&["reproduce", "thm9"]).status.success());
    assert!(!run(&["glue"]).status.success());
}
