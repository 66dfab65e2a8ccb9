use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sfstree::predictor::{Checkpoint, Mlp};

fn sfstree(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sfstree"))
        .current_dir(dir)
        .env_remove("SFSTREE_OUT")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = sfstree(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn tree_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for sub in ["images", "graphs"] {
        let mut names: Vec<_> = fs::read_dir(dir.join(sub)).unwrap().map(|e| e.unwrap().path()).collect();
        names.sort();
        out.extend(names.into_iter().map(|p| (p.display().to_string(), fs::read(&p).unwrap())));
    }
    out.push(("manifest".into(), fs::read(dir.join("manifest.json")).unwrap()));
    out
}

#[test]
fn gen_is_reproducible_and_guards_output() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let stdout = ok(d, &["gen", "--profile", "mini", "--count", "10", "--seed", "7", "--out", "a"]);
    assert!(stdout.contains("manifest"));
    ok(d, &["gen", "--profile", "mini", "--count", "10", "--seed", "7", "--out", "b"]);
    let strip = |v: Vec<(String, Vec<u8>)>| v.into_iter().map(|(_, b)| b).collect::<Vec<_>>();
    assert_eq!(strip(tree_files(&d.join("a"))), strip(tree_files(&d.join("b"))));
    assert!(d.join("a/resolved_config.toml").exists());

    let again = sfstree(d, &["gen", "--profile", "mini", "--count", "10", "--out", "a"]);
    assert!(!again.status.success());
    assert!(stderr(&again).contains("--force"));
    ok(d, &["gen", "--profile", "mini", "--count", "10", "--out", "a", "--force"]);

    let bad = sfstree(d, &["gen", "--profile", "huge"]);
    assert!(!bad.status.success());

    ok(d, &["gen", "--profile", "generalized", "--count", "2", "--out", "g"]);
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(d.join("g/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["geom"]["node_cap"], 384);
}

#[test]
fn train_eval_plot_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(d, &["gen", "--profile", "mini", "--count", "20", "--seed", "3", "--out", "data"]);

    ok(d, &["train", "--data", "data", "--epochs", "0", "--seed", "5", "--out", "t0"]);
    let cp = Checkpoint::load(&d.join("t0/checkpoint.json")).unwrap();
    assert_eq!(cp.mlp().unwrap(), Mlp::new(5));

    for out in ["t1", "t2"] {
        ok(d, &["train", "--data", "data", "--epochs", "2", "--seed", "5", "--mode", "sfs", "--out", out]);
    }
    let h1 = fs::read_to_string(d.join("t1/history.csv")).unwrap();
    assert_eq!(h1, fs::read_to_string(d.join("t2/history.csv")).unwrap());
    assert_eq!(h1.lines().count(), 3);

    let stdout = ok(d, &["eval", "--data", "data", "--checkpoint", "t1/checkpoint.json", "--mode", "sfs", "--out", "e"]);
    let row = stdout.lines().nth(1).unwrap();
    assert!(row.trim_end().ends_with("100.0"), "{row}");
    let report: serde_json::Value = serde_json::from_slice(&fs::read(d.join("e/report.json")).unwrap()).unwrap();
    assert_eq!(report["tree_rate"], 100.0);

    let selfcheck = ok(d, &["eval", "--data", "data", "--self-check", "--out", "s"]);
    assert!(selfcheck.contains("1.000"));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(d.join("s/report.json")).unwrap()).unwrap();
    assert_eq!(report["topo_f1"], 1.0);
    assert!(report["smd"].as_f64().unwrap() <= 1e-12);

    ok(d, &["plot", "--data", "data", "--pred", "e/predictions", "--out", "p"]);
    let svgs: Vec<_> = fs::read_dir(d.join("p")).unwrap().collect();
    assert!(!svgs.is_empty());
    for svg in svgs {
        let text = fs::read_to_string(svg.unwrap().path()).unwrap();
        let mut reader = quick_xml::Reader::from_str(&text);
        loop {
            match reader.read_event() {
                Ok(quick_xml::events::Event::Eof) => break,
                Ok(_) => {}
                Err(e) => panic!("invalid SVG: {e}"),
            }
        }
    }
    let first = fs::read_dir(d.join("e/predictions")).unwrap().next().unwrap().unwrap().path();
    fs::remove_file(first).unwrap();
    let partial = sfstree(d, &["plot", "--data", "data", "--pred", "e/predictions", "--out", "p2"]);
    assert!(!partial.status.success());
    assert!(stderr(&partial).contains("warning"));
}

#[test]
fn eval_refuses_bad_inputs() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(d, &["gen", "--profile", "mini", "--count", "6", "--out", "data"]);
    let mut cp = Checkpoint::new(&Mlp::new(0), &Default::default(), None);
    cp.arch = vec![8, 16, 16, 2];
    fs::write(d.join("cp.json"), serde_json::to_string(&cp).unwrap()).unwrap();
    let out = sfstree(d, &["eval", "--data", "data", "--checkpoint", "cp.json", "--out", "e"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("architecture"));

    fs::write(d.join("data/manifest.json"), "{ not json").unwrap();
    let out = sfstree(d, &["train", "--data", "data", "--out", "t"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("manifest.json"));
}

#[test]
fn project_matrix_and_graph_inputs() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    fs::write(d.join("tri.json"), r#"{"probabilities": [[0, 0.9, 0.8], [0.9, 0, 0.7], [0.8, 0.7, 0]]}"#).unwrap();
    let stdout = ok(d, &["project", "tri.json", "--out", "tri.tree.json"]);
    assert!(stdout.contains("|E-| = 1"));
    let t: serde_json::Value = serde_json::from_slice(&fs::read(d.join("tri.tree.json")).unwrap()).unwrap();
    assert_eq!(t["edges"], serde_json::json!([[0, 1], [0, 2]]));

    // Path probabilities: the thresholded edges already form a tree.
    fs::write(d.join("path.json"), r#"{"probabilities": [[0, 0.9, 0.2], [0.9, 0, 0.8], [0.2, 0.8, 0]]}"#).unwrap();
    let stdout = ok(d, &["project", "path.json", "--out", "path.tree.json"]);
    assert!(stdout.contains("|E+| = 0, |E-| = 0"));

    let cycle = r#"{"canvas": [32, 32], "nodes": [[0, 1, 1], [1, 20, 1], [2, 10, 15], [3, 30, 30]],
        "edges": [[0, 1], [1, 2], [0, 2]]}"#;
    fs::write(d.join("g.json"), cycle).unwrap();
    let stdout = ok(d, &["project", "g.json", "--out", "g.tree.json"]);
    assert!(stdout.contains("|E+| = 1, |E-| = 1"), "{stdout}");
    let g = sfstree::Graph::load(&d.join("g.tree.json")).unwrap();
    assert!(g.is_tree());

    fs::write(d.join("bad.json"), "{\"probabilities\": [[0, 1],").unwrap();
    let out = sfstree(d, &["project", "bad.json"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("line 1 column"));
}
