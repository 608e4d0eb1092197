use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gtwalk(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gtwalk"))
        .args(args)
        .current_dir(dir)
        .env_remove("GTWALK_THREADS")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("exp.toml");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const MINIMAL: &str = r#"
kind = "walk"
manifold = "sphere(2)"
alpha = 0.1
n_paths = 50
seed = 3
"#;

#[test]
fn minimal_config_runs_and_writes_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), MINIMAL);
    let o = gtwalk(&["run", &cfg, "--out", "out"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("PASS walk"));
    for f in ["walk.json", "walk.csv", "manifest.json"] {
        assert!(tmp.path().join("out").join(f).is_file(), "{f}");
    }
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("out/walk.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 3);
    assert_eq!(report["estimate"]["n"], 50);
}

#[test]
fn unknown_manifold_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &MINIMAL.replace("sphere(2)", "torus(2)"));
    let o = gtwalk(&["run", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    let msg = stderr(&o);
    assert!(msg.contains("manifold") && msg.contains("torus"), "{msg}");
}

#[test]
fn alpha_out_of_range_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &MINIMAL.replace("alpha = 0.1", "alpha = 2.0"));
    let o = gtwalk(&["run", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("alpha"), "{}", stderr(&o));
}

#[test]
fn zero_paths_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &MINIMAL.replace("n_paths = 50", "n_paths = 0"));
    let o = gtwalk(&["run", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("n_paths"), "{}", stderr(&o));
}

#[test]
fn unknown_key_names_its_path() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &format!("[[experiment]]\n{}\nalhpa = 0.2\n", MINIMAL));
    let o = gtwalk(&["run", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("experiment[0]"), "{}", stderr(&o));
}

#[test]
fn verify_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = gtwalk(&["verify", "feller", "--out", "v"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("PASS feller-zero"));

    let cfg = write_config(tmp.path(), "kind = \"feller-test\"\nb = \"zero\"\nexpect = \"explodes\"\n");
    let o = gtwalk(&["run", &cfg, "--out", "f"], tmp.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("FAIL"));

    let o = gtwalk(&["verify", "nonsense"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(gtwalk(&["frobnicate"], tmp.path()).status.code(), Some(1));
    assert_eq!(gtwalk(&["--help"], tmp.path()).status.code(), Some(0));
    let o = gtwalk(&["list-models"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("flow-sphere"));
}

fn without_runtime(text: &str) -> String {
    text.lines()
        .filter(|l| !l.contains("runtime_ms") && !l.contains("wall_time_ms"))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn reruns_are_byte_identical_apart_from_timing() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"
[[experiment]]
id = "c"
kind = "couple"
manifold = "sphere(2)"
alpha = 0.1
d0 = 1.0
n_paths = 100
seed = 9
"#;
    let cfg = write_config(tmp.path(), text);
    for (out, threads) in [("a", "1"), ("b", "3")] {
        let o = gtwalk(&["--threads", threads, "run", &cfg, "--out", out], tmp.path());
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let a = fs::read_to_string(tmp.path().join("a/c.json")).unwrap();
    let b = fs::read_to_string(tmp.path().join("b/c.json")).unwrap();
    assert_eq!(without_runtime(&a), without_runtime(&b));
    let ma = fs::read_to_string(tmp.path().join("a/manifest.json")).unwrap();
    let mb = fs::read_to_string(tmp.path().join("b/manifest.json")).unwrap();
    assert_eq!(without_runtime(&ma), without_runtime(&mb));
}

#[test]
fn thread_count_comes_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_gtwalk"))
        .args(["verify", "feller", "--out", "v"])
        .current_dir(tmp.path())
        .env("GTWALK_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("threads"), "{}", stderr(&o));

    let o = Command::new(env!("CARGO_BIN_EXE_gtwalk"))
        .args(["verify", "feller", "--out", "v"])
        .current_dir(tmp.path())
        .env("GTWALK_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn dump_paths_and_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &MINIMAL.replace("sphere(2)", "euclidean(2)"));
    let o = gtwalk(&["dump-paths", &cfg, "--count", "2", "--out", "d"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let path = tmp.path().join("d/walk/path_00001.csv");
    let csv = fs::read_to_string(&path).unwrap();
    assert!(csv.starts_with("n,t,coord_0,coord_1\n"), "{csv}");
    assert_eq!(csv.lines().count(), 1 + 1 + 100);

    let o = gtwalk(&["columns", path.to_str().unwrap(), "--cols", "t,coord_1"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("# t coord_1"));
    assert_eq!(lines.next().unwrap().split(' ').count(), 2);

    let o = gtwalk(&["columns", path.to_str().unwrap(), "--cols", "nope"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn couple_subcommand_dumps_pairs() {
    let tmp = tempfile::tempdir().unwrap();
    let o = gtwalk(
        &["couple", "--samples", "20", "--alpha", "0.1", "--dump", "1", "--seed", "4", "--out", "c"],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(tmp.path().join("c/couple/pair_00000.csv")).unwrap();
    assert!(csv.starts_with("n,t,x1_0,x1_1,x2_0,x2_1,dist,lambda_star,coupled\n"), "{csv}");
}
