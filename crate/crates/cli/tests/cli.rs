use std::path::Path;
use std::process::{Command, Output};

fn manifold(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_manifold"))
        .args(args)
        .current_dir(cwd)
        .env_remove("MANIFOLD_OUT")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str =
    "[cci]\niterations = 2\nbranching = 5\n\n[embed]\ndim = 16\n\n[label]\nn_way = 2\nk_shot = 2\n";

#[test]
fn missing_config_exits_1_naming_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = manifold(&["gen-cci", "--config", "nowhere.toml"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nowhere.toml"), "{}", stderr(&o));
}

#[test]
fn unknown_key_exits_1_with_field_path() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "[graph]\nepsilonn = 0.1\n").unwrap();
    let o = manifold(&["build-graph", "--config", "c.toml"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("graph.epsilonn"), "{}", stderr(&o));
}

#[test]
fn runtime_failure_exits_2_with_error_name() {
    let dir = tempfile::tempdir().unwrap();
    let o = manifold(&["embed", "--out", "out"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Io"), "{}", stderr(&o));
}

#[test]
fn rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), SMALL).unwrap();
    let mut reports = Vec::new();
    for out in ["a", "b"] {
        for stage in ["gen-cci", "embed", "align", "build-graph", "label-retrieval"] {
            let o = manifold(&[stage, "--config", "c.toml", "--out", out], dir.path());
            assert!(o.status.success(), "{stage}: {}", stderr(&o));
        }
        let read = |n: &str| std::fs::read(dir.path().join(out).join(n)).unwrap();
        reports.push((read("report.json"), read("report.csv"), read("graph.edges")));
    }
    assert_eq!(reports[0], reports[1]);
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("a/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "label-retrieval");
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    assert!(manifest["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .any(|f| f["file"] == "report.json"));
}

#[test]
fn env_sets_output_dir_and_flag_wins() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), SMALL).unwrap();
    let run = |extra: &[&str]| {
        let mut args = vec!["gen-cci", "--config", "c.toml"];
        args.extend_from_slice(extra);
        Command::new(env!("CARGO_BIN_EXE_manifold"))
            .args(&args)
            .current_dir(dir.path())
            .env("MANIFOLD_OUT", "from_env")
            .output()
            .unwrap()
    };
    assert!(run(&[]).status.success());
    assert!(dir.path().join("from_env/dataset.jsonl").exists());
    assert!(run(&["--out", "from_flag"]).status.success());
    assert!(dir.path().join("from_flag/dataset.jsonl").exists());
}

#[test]
fn report_renders_tables() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), SMALL).unwrap();
    for stage in ["gen-cci", "embed", "align", "build-graph", "label-retrieval"] {
        assert!(manifold(&[stage, "--config", "c.toml"], dir.path())
            .status
            .success());
    }
    let o = manifold(&["report", "out/report.json"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let table = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "method,accuracy,retrievable_points");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("euclidean,") && lines[2].starts_with("geodesic,"));
    let accuracy = lines[1].split(',').nth(1).unwrap();
    assert_eq!(accuracy.split('.').nth(1).unwrap().len(), 4);
    assert_eq!(
        std::fs::read_to_string(dir.path().join("out/report.csv")).unwrap(),
        table
    );

    let empty = manifold(&["report", "--kind", "path"], dir.path());
    assert_eq!(empty.status.code(), Some(0));
    assert_eq!(
        String::from_utf8(empty.stdout).unwrap(),
        "threshold,psi,psi_random,psi_phi\n"
    );

    let bad = manifold(&["report", "out/transform.json"], dir.path());
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr(&bad).contains("SchemaMismatch"));
}
