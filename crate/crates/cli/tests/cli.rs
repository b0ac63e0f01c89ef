use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use svne::netmodel::parse_substrate;
use svne::simulate::read_decision_log;

fn svne(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_svne")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = "\
seed = 3
[substrate]
nodes = 20
links = 60
[workload]
requests = 6
lifetime_low = 2000
lifetime_high = 3000
size_low = 2
size_high = 3
";

const PATH3: &str = "\
Topology: ( 3 Nodes, 2 Edges )

Nodes: ( 3 ):
0 0.0 0.0 1 1 0 RT_NODE cpu=10.0
1 0.0 0.0 2 2 0 RT_NODE cpu=10.0
2 0.0 0.0 1 1 0 RT_NODE cpu=10.0

Edges: ( 2 ):
0 0 1 0.0 0.0 5.0 0 0 E_RT
1 1 2 0.0 0.0 5.0 0 0 E_RT
";

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn print_config_is_complete_and_reloadable() {
    let o = svne(&["simulate", "--print-config", "--seed", "9"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for section in ["[substrate]", "[workload]", "[solver]", "[swarm]", "[embedding]"] {
        assert!(text.contains(section), "{section} missing");
    }
    assert!(text.contains("seed = 9"));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("all.cfg");
    fs::write(&cfg, &text).unwrap();
    let again = svne(&["simulate", "--print-config", "--config", p(&cfg)]);
    assert_eq!(stdout(&again), text);
}

#[test]
fn bad_inputs_fail_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "[solver]\nmax_steps = 10\nwarp = 9\n").unwrap();
    let o = svne(&["simulate", "--config", p(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error kind=config msg="), "{err}");
    assert!(err.contains("line 3"));

    let o = svne(&["enhance", "--vn", p(&dir.path().join("missing.brite"))]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).starts_with("error kind=io"));

    fs::write(&cfg, "[embedding]\neta = 1\n").unwrap();
    let o = svne(&["simulate", "--config", p(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn gen_substrate_at_full_scale() {
    let dir = tempfile::tempdir().unwrap();
    let o = svne(&["gen-substrate", "--nodes", "100", "--links", "500", "--seed", "7", "--out", p(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let net = parse_substrate(&fs::read_to_string(dir.path().join("substrate.brite")).unwrap()).unwrap();
    assert_eq!((net.node_count(), net.link_count()), (100, 500));
    let manifest = fs::read_to_string(dir.path().join("manifest.cfg")).unwrap();
    assert!(manifest.contains("command = gen-substrate") && manifest.contains("links = 500"));
}

#[test]
fn enhance_path_reports_against_fip() {
    let dir = tempfile::tempdir().unwrap();
    let vn = dir.path().join("path3.brite");
    fs::write(&vn, PATH3).unwrap();
    let o = svne(&["enhance", "--vn", p(&vn), "--alpha", "1", "--out", p(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "objective 60 fip 65");
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("enhanced.json")).unwrap()).unwrap();
    assert_eq!(doc["objective"], 60.0);
    let o = svne(&["enhance", "--vn", p(&vn), "--strategy", "fip", "--out", p(dir.path())]);
    assert_eq!(stdout(&o).trim(), "objective 65 fip 65");
}

#[test]
fn embed_accepts_and_rejects() {
    let dir = tempfile::tempdir().unwrap();
    let vn = dir.path().join("path3.brite");
    fs::write(&vn, PATH3).unwrap();
    let out = dir.path().join("ok");
    let o = svne(&["embed", "--vn", p(&vn), "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("accepted vn 0"));
    let emb: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("embedding.json")).unwrap()).unwrap();
    assert_eq!(emb["node_map"].as_array().unwrap().len(), 4);
    let log = read_decision_log(fs::File::open(out.join("decisions.csv")).unwrap()).unwrap();
    assert_eq!(log[0].outcome, "accepted");

    let huge = dir.path().join("huge.brite");
    fs::write(&huge, PATH3.replace("cpu=10.0", "cpu=1000000.0")).unwrap();
    let o = svne(&["embed", "--vn", p(&huge), "--out", p(&dir.path().join("no"))]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).starts_with("error kind=infeasible"), "{}", stderr(&o));
}

#[test]
fn compare_then_rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("desk.cfg");
    fs::write(&cfg, SMALL).unwrap();
    let first = dir.path().join("first");
    let o = svne(&["compare", "--config", p(&cfg), "--out", p(&first)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let cnd = read_decision_log(fs::File::open(first.join("decisions_cnd.csv")).unwrap()).unwrap();
    let fip = read_decision_log(fs::File::open(first.join("decisions_fip.csv")).unwrap()).unwrap();
    let key = |l: &[svne::simulate::DecisionRecord]| l.iter().map(|r| (r.time, r.vn_id, r.event.clone())).collect::<Vec<_>>();
    assert_eq!(key(&cnd), key(&fip));
    assert_eq!(cnd.iter().filter(|r| r.event == "arrival").count(), 6);

    let second = dir.path().join("second");
    let o = svne(&["rerun", p(&first.join("manifest.cfg")), "--out", p(&second)]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["decisions_cnd.csv", "decisions_fip.csv", "comparison.csv"] {
        assert_eq!(fs::read(first.join(f)).unwrap(), fs::read(second.join(f)).unwrap(), "{f}");
    }
    // A manifest also works as a plain config.
    let third = dir.path().join("third");
    let o = svne(&["simulate", "--config", p(&first.join("manifest.cfg")), "--strategy", "fip", "--out", p(&third)]);
    assert!(o.status.success());
    assert_eq!(fs::read(first.join("decisions_fip.csv")).unwrap(), fs::read(third.join("decisions.csv")).unwrap());
}

#[test]
fn gen_vns_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    assert!(svne(&["gen-vns", "--count", "3", "--seed", "4", "--out", p(&a)]).status.success());
    let b = dir.path().join("b");
    assert!(svne(&["rerun", p(&a.join("manifest.cfg")), "--out", p(&b)]).status.success());
    for i in 0..3 {
        let f = format!("vn_{i:04}.brite");
        assert_eq!(fs::read(a.join(&f)).unwrap(), fs::read(b.join(&f)).unwrap());
    }
}
