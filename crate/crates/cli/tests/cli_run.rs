use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};
use wildstokes::liecore::{CartanElement, Root};
use wildstokes::stokescomb::SectorDecomposition;
use wildstokes_cli::{render_stokes_svg, run, ProblemDocument, Task};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wildstokes")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, v: &Value) -> String {
    let p = dir.join(name);
    std::fs::write(&p, v.to_string()).unwrap();
    p.to_str().unwrap().to_string()
}

fn stderr_kind(out: &Output) -> String {
    let v: Value = serde_json::from_slice(&out.stderr).unwrap();
    v["error"]["kind"].as_str().unwrap().to_string()
}

#[test]
fn malformed_json_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, "{ not json").unwrap();
    let out = bin(&["nu", "--input", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v["error"]["exit_code"], 2);
}

#[test]
fn unknown_task_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let doc = json!({"schema_version": "1", "task": "frobnicate", "payload": {}});
    let p = write(dir.path(), "doc.json", &doc);
    let out = bin(&["directions", "--input", &p]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn wrong_schema_version_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let doc = json!({"schema_version": "7", "task": "directions", "payload": {"a0": [[1.0, 0.0], [-1.0, 0.0]]}});
    let p = write(dir.path(), "doc.json", &doc);
    assert_eq!(bin(&["directions", "--input", &p]).status.code(), Some(2));
}

#[test]
fn non_regular_a0_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let a0 = write(dir.path(), "a0.json", &json!([[1.0, 0.0], [1.0, 0.0]]));
    let b = write(dir.path(), "b.json", &json!([[[0.1, 0.0], [0.2, 0.0]], [[0.3, 0.0], [-0.1, 0.0]]]));
    let out = bin(&["nu", "--a0", &a0, "--b", &b]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_kind(&out), "degenerate_input");
}

#[test]
fn tol_rejected_where_meaningless() {
    let out = bin(&["curves", "--tol", "1e-3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn selftest_exits_0() {
    let out = bin(&["selftest"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["task"], "selftest");
}

#[test]
fn output_keys_sorted_and_newline_terminated() {
    let dir = tempfile::tempdir().unwrap();
    let a0 = write(dir.path(), "a0.json", &json!([[1.0, 0.0], [-1.0, 0.0]]));
    let out_path = dir.path().join("out.json");
    let out = bin(&["directions", "--a0", &a0, "--output", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert!(text.ends_with('\n'));
    let v: Value = serde_json::from_str(&text).unwrap();
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["passed", "precision", "result", "schema_version", "seed", "task"]);
}

#[test]
fn gl2_svg_has_two_opposite_rays() {
    let dir = tempfile::tempdir().unwrap();
    let a0 = write(dir.path(), "a0.json", &json!([[1.0, 0.0], [-1.0, 0.0]]));
    let svg = dir.path().join("rays.svg");
    let out = bin(&["directions", "--a0", &a0, "--svg", svg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&svg).unwrap();
    assert_eq!(text.matches("<line ").count(), 2);
    let angles: Vec<f64> = text
        .lines()
        .filter_map(|l| l.split("angle ").nth(1))
        .map(|a| a.trim_end_matches(" -->").parse().unwrap())
        .collect();
    assert_eq!(angles.len(), 2);
    let d = (angles[0] - angles[1]).abs();
    assert!((d - std::f64::consts::PI).abs() < 1e-9, "{angles:?}");
}

#[test]
fn svg_and_json_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a0 = write(dir.path(), "a0.json", &json!([[1.0, 0.0], [0.0, 1.0], [-1.0, -0.5]]));
    let b = write(
        dir.path(),
        "b.json",
        &json!([
            [[0.1, 0.0], [0.2, 0.1], [0.0, -0.3]],
            [[0.3, 0.0], [-0.1, 0.0], [0.1, 0.0]],
            [[-0.2, 0.1], [0.05, 0.0], [0.2, 0.0]]
        ]),
    );
    let mut texts = Vec::new();
    for run in 0..2 {
        let svg = dir.path().join(format!("r{run}.svg"));
        let js = dir.path().join(format!("r{run}.json"));
        let out = bin(&["nu", "--a0", &a0, "--b", &b, "--svg", svg.to_str().unwrap(), "--output", js.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        texts.push((std::fs::read(&svg).unwrap(), std::fs::read(&js).unwrap()));
    }
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn svg_rejects_task_without_directions() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("x.svg");
    let out = bin(&["curves", "--svg", svg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!svg.exists());
}

#[test]
fn empty_direction_list_is_an_error() {
    assert!(render_stokes_svg(&[]).is_err());
    let a = CartanElement::new(vec![num_complex::Complex64::new(2.0, 0.0)]);
    let s = SectorDecomposition::new(&a, 1e-9).unwrap();
    assert!(render_stokes_svg(&s.directions).is_err());
}

#[test]
fn svg_labels_carry_supports() {
    let a = CartanElement::new(vec![num_complex::Complex64::new(1.0, 0.0), num_complex::Complex64::new(-1.0, 0.0)]);
    let s = SectorDecomposition::new(&a, 1e-9).unwrap();
    let svg = render_stokes_svg(&s.directions).unwrap();
    for d in &s.directions {
        let labels: Vec<String> = d.support.iter().map(Root::to_string).collect();
        assert!(svg.contains(&labels.join(" ")));
    }
}

#[test]
fn nu_output_embeds_resolved_precision() {
    let doc = ProblemDocument::new(
        Task::Nu,
        json!({
            "a0": [[1.0, 0.0], [-1.0, 0.0]],
            "b": [[[0.1, 0.0], [0.4, 0.0]], [[-0.2, 0.0], [-0.1, 0.0]]],
            "precision": {"ode_rel_tol": 1e-11}
        }),
        3,
    );
    let out = run(&doc).unwrap();
    let v: Value = serde_json::from_str(&out.json).unwrap();
    assert_eq!(v["precision"]["ode_rel_tol"], 1e-11);
    assert!(v["precision"]["matching_radius"].as_f64().unwrap() > 0.0);
    assert!(v["precision"]["series_order"].as_u64().unwrap() > 0);
    assert_eq!(v["seed"], 3);
}

#[test]
fn payload_flags_override_input_document() {
    let dir = tempfile::tempdir().unwrap();
    let doc = json!({"schema_version": "1", "task": "graphs", "payload": {"enumerate": 3}});
    let p = write(dir.path(), "doc.json", &doc);
    let base: Value = serde_json::from_slice(&bin(&["graphs", "--input", &p]).stdout).unwrap();
    let over: Value = serde_json::from_slice(&bin(&["graphs", "--input", &p, "--enumerate", "4"]).stdout).unwrap();
    assert_ne!(base["result"], over["result"]);
}

#[test]
fn task_mismatch_is_malformed() {
    let dir = tempfile::tempdir().unwrap();
    let doc = json!({"schema_version": "1", "task": "curves", "payload": {}});
    let p = write(dir.path(), "doc.json", &doc);
    assert_eq!(bin(&["graphs", "--input", &p]).status.code(), Some(2));
}
