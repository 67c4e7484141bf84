use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn segcube(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_segcube")).args(args).output().unwrap()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn tabular_run_matches_golden_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = segcube(&[
        "run",
        "--schema",
        path(&fixtures().join("three_rows/schema.csv")),
        "--final-table",
        path(&fixtures().join("three_rows/finalTable.csv")),
        "--minsup",
        "1",
        "--out",
        path(tmp.path()),
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert!(text(&out.stdout).contains("all: 112 cells"));
    let produced = fs::read(tmp.path().join("all/cube.csv")).unwrap();
    assert_eq!(produced, fs::read(fixtures().join("golden/three_rows.cube.csv")).unwrap());
    assert!(tmp.path().join("all/summary.txt").is_file());
}

#[test]
fn bipartite_run_from_config_writes_every_snapshot() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = fixtures().join("bipartite/run.conf");
    let out = segcube(&["run", "--config", path(&conf), "--out", path(tmp.path()), "--jobs", "2"]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    for date in ["2010-12-31", "2012-12-31"] {
        for file in ["edges.csv", "isolated.csv", "nodeUnit.csv", "finalTable.csv", "cube.json", "cube.csv", "summary.txt"] {
            assert!(tmp.path().join(date).join(file).is_file(), "{date}/{file}");
        }
    }
}

#[test]
fn stepwise_commands_agree_with_run() {
    let tmp = tempfile::tempdir().unwrap();
    let b = fixtures().join("bipartite");
    let t = tmp.path();
    let inputs = |extra: &[&str]| {
        let mut v = vec![
            "--schema".to_string(),
            path(&b.join("schema.csv")).into(),
            "--individuals".into(),
            path(&b.join("individuals.csv")).into(),
            "--groups".into(),
            path(&b.join("groups.csv")).into(),
            "--membership".into(),
            path(&b.join("membership.csv")).into(),
            "--snapshot".into(),
            "2010-12-31".into(),
        ];
        v.extend(extra.iter().map(|s| s.to_string()));
        v
    };
    let call = |cmd: &str, args: Vec<String>| {
        let mut all = vec![cmd.to_string()];
        all.extend(args);
        let out = Command::new(env!("CARGO_BIN_EXE_segcube")).args(&all).output().unwrap();
        assert!(out.status.success(), "{cmd}: {}", text(&out.stderr));
    };
    call("project", inputs(&["--out", path(&t.join("p"))]));
    call(
        "cluster",
        vec![
            "--edges".into(),
            path(&t.join("p/edges.csv")).into(),
            "--isolated".into(),
            path(&t.join("p/isolated.csv")).into(),
            "--clustering".into(),
            "cc".into(),
            "--out".into(),
            path(&t.join("nodeUnit.csv")).into(),
        ],
    );
    call("table", inputs(&["--node-units", path(&t.join("nodeUnit.csv")), "--out", path(&t.join("finalTable.csv"))]));
    call(
        "cube",
        vec![
            "--schema".into(),
            path(&b.join("schema.csv")).into(),
            "--final-table".into(),
            path(&t.join("finalTable.csv")).into(),
            "--minsup".into(),
            "2".into(),
            "--out".into(),
            path(&t.join("c")).into(),
        ],
    );
    let run = segcube(&["run", "--config", path(&b.join("run.conf")), "--out", path(&t.join("r"))]);
    assert!(run.status.success());
    for f in ["edges.csv", "isolated.csv"] {
        assert_eq!(fs::read(t.join("p").join(f)).unwrap(), fs::read(t.join("r/2010-12-31").join(f)).unwrap());
    }
    assert_eq!(fs::read(t.join("nodeUnit.csv")).unwrap(), fs::read(t.join("r/2010-12-31/nodeUnit.csv")).unwrap());
    assert_eq!(fs::read(t.join("finalTable.csv")).unwrap(), fs::read(t.join("r/2010-12-31/finalTable.csv")).unwrap());
    assert_eq!(fs::read(t.join("c/cube.csv")).unwrap(), fs::read(t.join("r/2010-12-31/cube.csv")).unwrap());
}

#[test]
fn ingest_errors_name_file_and_line() {
    let tmp = tempfile::tempdir().unwrap();
    let schema = tmp.path().join("schema.csv");
    fs::copy(fixtures().join("three_rows/schema.csv"), &schema).unwrap();
    let table = tmp.path().join("finalTable.csv");
    fs::write(&table, "gender,age,birthplace,residence,sector,unitID\nM,15-38,foreign,north,education,1\nF,*,south,south,x,2\n").unwrap();
    let out = segcube(&["cube", "--schema", path(&schema), "--final-table", path(&table), "--out", path(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
    let err = text(&out.stderr);
    assert!(err.starts_with("error: "), "{err}");
    assert!(err.contains("finalTable.csv") && err.contains("line 3"), "{err}");
}

#[test]
fn inconsistent_flags_are_configuration_errors() {
    let out = segcube(&[
        "run",
        "--schema",
        path(&fixtures().join("three_rows/schema.csv")),
        "--final-table",
        path(&fixtures().join("three_rows/finalTable.csv")),
        "--clustering",
        "threshold",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("error:"));
}

#[test]
fn printed_config_can_be_fed_back() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = fixtures().join("bipartite/run.conf");
    let first = segcube(&["run", "--config", path(&conf), "--minsup", "3", "--print-config"]);
    assert!(first.status.success());
    let saved = tmp.path().join("saved.conf");
    fs::write(&saved, &first.stdout).unwrap();
    let second = segcube(&["run", "--config", path(&saved), "--print-config"]);
    assert_eq!(text(&first.stdout), text(&second.stdout));
    assert!(text(&first.stdout).contains("minsup=3\n"));
}

#[test]
fn export_renders_each_format() {
    let cube = fixtures().join("golden/tabular.cube.json");
    let csv = segcube(&["export", "--cube", path(&cube), "--format", "csv"]);
    assert_eq!(csv.stdout, fs::read(fixtures().join("golden/tabular.cube.csv")).unwrap());
    let json = segcube(&["export", "--cube", path(&cube), "--format", "json"]);
    assert_eq!(json.stdout, fs::read(&cube).unwrap());
    let summary = segcube(&["export", "--cube", path(&cube), "--format", "summary", "--index", "G"]);
    assert!(summary.status.success());
    assert!(text(&summary.stdout).contains("index G"));

    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, "{\"formatVersion\": 7}").unwrap();
    let out = segcube(&["export", "--cube", path(&bad), "--format", "csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_reports_pass_and_fail() {
    let ok = segcube(&["check", "--fixtures", path(&fixtures())]);
    assert!(ok.status.success(), "{}", text(&ok.stdout));
    assert!(text(&ok.stdout).lines().all(|l| l.starts_with("PASS")));

    let tmp = tempfile::tempdir().unwrap();
    let json = fs::read_to_string(fixtures().join("golden/three_rows.cube.json")).unwrap();
    fs::write(tmp.path().join("bad.json"), json.replacen("\"M\": 1,", "\"M\": 9,", 1)).unwrap();
    let bad = segcube(&["check", "--fixtures", path(tmp.path())]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(text(&bad.stdout).contains("FAIL"));

    let missing = segcube(&["check", "--fixtures", path(&tmp.path().join("none"))]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn failing_snapshot_exits_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let node_units = tmp.path().join("nodeUnit.csv");
    let text_in = fs::read_to_string(fixtures().join("unipartite/nodeUnit.csv")).unwrap();
    let mut lines: Vec<&str> = text_in.lines().collect();
    lines.truncate(lines.len() / 2);
    fs::write(&node_units, lines.join("\n") + "\n").unwrap();
    let out = segcube(&[
        "run",
        "--config",
        path(&fixtures().join("unipartite/run.conf")),
        "--node-units",
        path(&node_units),
        "--out",
        path(&tmp.path().join("out")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("error: snapshot"));
}
