use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tplroute::format::Layout;
use tplroute_cli::render::MASK_FILLS;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tplroute")).current_dir(dir).args(args).output().unwrap()
}

fn json(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

fn layout(dir: &Path, name: &str) -> Layout {
    Layout::parse(&fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

fn colors(l: &Layout) -> Vec<u8> {
    let mut c: Vec<u8> = l.segments.iter().map(|s| s.color.unwrap()).collect();
    c.sort_unstable();
    c.dedup();
    c
}

const K4: &str = r#"{"kind":"header","layers":1,"sp_w":2,"sp_tp":6}
{"kind":"segment","id":0,"net":0,"layer":0,"x0":0,"y0":0,"x1":10,"y1":0,"hw":1}
{"kind":"segment","id":1,"net":1,"layer":0,"x0":14,"y0":0,"x1":24,"y1":0,"hw":1}
{"kind":"segment","id":2,"net":2,"layer":0,"x0":0,"y0":4,"x1":10,"y1":4,"hw":1}
{"kind":"segment","id":3,"net":3,"layer":0,"x0":14,"y0":4,"x1":24,"y1":4,"hw":1}
"#;

// Three stacked wires, all pairwise closer than sp_tp.
const TRIANGLE: &str = r#"{"kind":"header","layers":1,"sp_w":1,"sp_tp":6}
{"kind":"segment","id":0,"net":0,"layer":0,"x0":0,"y0":0,"x1":20,"y1":0,"hw":1}
{"kind":"segment","id":1,"net":1,"layer":0,"x0":0,"y0":3,"x1":20,"y1":3,"hw":1}
{"kind":"segment","id":2,"net":2,"layer":0,"x0":0,"y0":6,"x1":20,"y1":6,"hw":1}
"#;

const PAIR: &str = r#"{"kind":"header","layers":1,"sp_w":2,"sp_tp":6}
{"kind":"segment","id":0,"net":0,"layer":0,"x0":0,"y0":0,"x1":20,"y1":0,"hw":1}
{"kind":"segment","id":1,"net":1,"layer":0,"x0":0,"y0":4,"x1":20,"y1":4,"hw":1}
"#;

#[test]
fn single_net_wirelength_is_manhattan_distance() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("n.jsonl"),
        r#"{"kind":"header","width":8,"height":8,"layers":["H","V"],"sp_w":2,"hw":1,"sp_tp":6}
{"kind":"net","name":"a","pins":[{"x":1,"y":1,"layer":0},{"x":5,"y":3,"layer":0}]}
"#,
    )
    .unwrap();
    let out = run(d, &["route", "n.jsonl", "--report", "r.json", "--out", "l.jsonl"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(d, "r.json");
    assert_eq!(r["wirelength"], 6);
    assert_eq!(r["routed"], 1);
    assert_eq!(r["conflicts"], 0);
}

#[test]
fn modes_report_the_same_netlist() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(run(d, &["gen", "--seed", "3", "--out", "n.jsonl"]).status.success());
    run(d, &["route", "n.jsonl", "--report", "t.json"]);
    run(d, &["route", "n.jsonl", "--mode", "greedy", "--report", "g.json"]);
    let (t, g) = (json(d, "t.json"), json(d, "g.json"));
    assert_eq!(t["netlist"], g["netlist"]);
    assert_eq!(t["mode"], "triad");
    assert_eq!(g["mode"], "greedy");
}

#[test]
fn triangle_takes_three_masks() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("in.jsonl"), TRIANGLE).unwrap();
    let out = run(d, &["decompose", "in.jsonl", "--out", "o.jsonl", "--report", "r.json"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(d, "r.json");
    assert_eq!(r["conflicts"], 0);
    assert_eq!(r["stitches"], 0);
    assert_eq!(colors(&layout(d, "o.jsonl")).len(), 3);
}

#[test]
fn pair_takes_two_masks() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("in.jsonl"), PAIR).unwrap();
    run(d, &["decompose", "in.jsonl", "--out", "o.jsonl", "--report", "r.json"]);
    assert_eq!(colors(&layout(d, "o.jsonl")).len(), 2);
}

#[test]
fn k4_is_flagged_and_verified() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("in.jsonl"), K4).unwrap();
    let out = run(d, &["verify", "in.jsonl"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("oracle: uncolorable"), "{text}");
    assert!(text.contains("AGREE"), "{text}");
    assert_eq!(run(d, &["decompose", "in.jsonl", "--report", "r.json"]).status.code(), Some(0));
    assert_eq!(run(d, &["decompose", "in.jsonl", "--report", "r.json", "--strict"]).status.code(), Some(1));
    assert!(json(d, "r.json")["conflicts"].as_u64().unwrap() > 0);
}

#[test]
fn render_uses_one_fill_per_mask() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("in.jsonl"), TRIANGLE).unwrap();
    run(d, &["decompose", "in.jsonl", "--out", "o.jsonl"]);
    assert!(run(d, &["render", "o.jsonl", "--svg", "pic"]).status.success());
    let svg = fs::read_to_string(d.join("pic_layer0.svg")).unwrap();
    assert_eq!(svg.matches(r#"class="wire""#).count(), 3);
    for fill in MASK_FILLS {
        assert_eq!(svg.matches(&format!(r#"fill="{fill}""#)).count(), 1);
    }
}

#[test]
fn malformed_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("bad.jsonl"), "not json\n").unwrap();
    for cmd in ["route", "decompose", "verify", "stats"] {
        let out = run(d, &[cmd, "bad.jsonl"]);
        assert_eq!(out.status.code(), Some(2), "{cmd}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
    }
    assert_eq!(run(d, &["route", "missing.jsonl"]).status.code(), Some(2));
}
