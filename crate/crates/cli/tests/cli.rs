//! End-to-end runs of the `loopmetric` binary: exit codes, artifacts,
//! cache behaviour and determinism.

use std::path::Path;
use std::process::{Command, Output};

fn loopmetric(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_loopmetric")).args(args).current_dir(dir).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

fn read(dir: &Path, path: &str) -> Vec<u8> {
    std::fs::read(dir.join(path)).unwrap_or_else(|e| panic!("{path}: {e}"))
}

const TWO_LOOP: &str = "seed = 5\n[graph]\nkind = \"bouquet\"\nloops = 2\n[cutoffs]\nk = 2\ndepth = 7\nk_max = 4\n\
                        [samples]\nelements = 3\n";

#[test]
fn help_and_version_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = loopmetric(dir.path(), &["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("converge"));
    assert_eq!(loopmetric(dir.path(), &["--version"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(loopmetric(dir.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(loopmetric(dir.path(), &["wick", "build", "--threads", "many"]).status.code(), Some(1));
}

#[test]
fn unknown_config_field_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.toml", "[graph]\nkind = \"bouquet\"\nloops = 1\n[cutoffs]\ndepht = 4\n");
    let o = loopmetric(dir.path(), &["wick", "build", "--config", "bad.toml"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("depht"), "{}", stderr(&o));
}

#[test]
fn missing_graph_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "empty.toml", "seed = 1\n");
    let o = loopmetric(dir.path(), &["loops", "enumerate", "--config", "empty.toml"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn insufficient_depth_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "shallow.toml", "[graph]\nkind = \"bouquet\"\nloops = 1\n[cutoffs]\nk = 4\ndepth = 5\n");
    let o = loopmetric(dir.path(), &["wick", "build", "--config", "shallow.toml", "--no-cache"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn non_simple_graph_warns_but_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a2.toml", "[graph]\nkind = \"dynkin_a\"\nn = 2\nq = \"exp(i*pi/3)\"\n");
    let o = loopmetric(dir.path(), &["graph", "validate", "--config", "a2.toml", "--out", "v"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("warning"), "{}", stderr(&o));
    let csv = String::from_utf8(read(dir.path(), "v/simplicity.csv")).unwrap();
    assert!(csv.lines().count() >= 3);
    let manifest = String::from_utf8(read(dir.path(), "v/MANIFEST.toml")).unwrap();
    assert!(manifest.contains("command = \"graph validate\""), "{manifest}");
}

#[test]
fn non_convergence_exits_two_with_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "tight.toml",
        "[graph]\nkind = \"bouquet\"\nloops = 1\n[cutoffs]\nk_max = 2\ndepth = 6\n[tolerances]\nrelative = 1e-12\n\
         [elements]\ndegrees = [1]\n",
    );
    let o = loopmetric(dir.path(), &["lip", "compute", "--config", "tight.toml", "--out", "t", "--no-cache"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(dir.path().join("t/lip.csv").exists());
    let manifest = String::from_utf8(read(dir.path(), "t/MANIFEST.toml")).unwrap();
    assert!(manifest.contains("non-convergence"));
}

#[test]
fn loops_enumerate_counts_catalan() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "ainf.toml", "[graph]\nkind = \"a_infinity\"\ncutoff = 8\n[cutoffs]\ndepth = 8\n");
    let o = loopmetric(dir.path(), &["loops", "enumerate", "--config", "ainf.toml", "--out", "l"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8(read(dir.path(), "l/loop_counts.csv")).unwrap();
    let counts: Vec<String> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().to_string()).collect();
    assert_eq!(counts, ["1", "0", "1", "0", "2", "0", "5", "0", "14"]);
    assert!(dir.path().join("l/loop_counts.svg").exists());
}

#[test]
fn warm_cache_reproduces_cold_run() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "two.toml", TWO_LOOP);
    let args = |out: &'static str| ["haagerup", "sweep", "--config", "two.toml", "--out", out, "--cache", "c"];
    let cold = loopmetric(dir.path(), &args("cold"));
    assert_eq!(cold.status.code(), Some(0), "{}", stderr(&cold));
    let warm = loopmetric(dir.path(), &args("warm"));
    assert_eq!(warm.status.code(), Some(0), "{}", stderr(&warm));
    for f in ["haagerup.csv", "haagerup.json", "haagerup.svg"] {
        assert_eq!(read(dir.path(), &format!("cold/{f}")), read(dir.path(), &format!("warm/{f}")), "{f}");
    }
    let manifest = String::from_utf8(read(dir.path(), "warm/MANIFEST.toml")).unwrap();
    assert!(manifest.contains("hit"), "{manifest}");

    // Corrupt every entry: the run warns, recomputes and matches.
    for e in std::fs::read_dir(dir.path().join("c")).unwrap() {
        std::fs::write(e.unwrap().path(), "LMC1\ngarbage\n{").unwrap();
    }
    let again = loopmetric(dir.path(), &args("again"));
    assert_eq!(again.status.code(), Some(0), "{}", stderr(&again));
    assert!(stderr(&again).contains("recomputing"), "{}", stderr(&again));
    assert_eq!(read(dir.path(), "cold/haagerup.csv"), read(dir.path(), "again/haagerup.csv"));
}

#[test]
fn seed_override_changes_samples_and_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "two.toml", TWO_LOOP);
    let run = |seed: &str, out: &str| {
        let o = loopmetric(dir.path(), &["haagerup", "sweep", "--config", "two.toml", "--seed", seed, "--out", out, "--no-cache"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    };
    run("5", "a");
    run("6", "b");
    assert_ne!(read(dir.path(), "a/haagerup.csv"), read(dir.path(), "b/haagerup.csv"));
    let manifest = String::from_utf8(read(dir.path(), "b/MANIFEST.toml")).unwrap();
    assert!(manifest.contains("seed = 6"), "{manifest}");
}

#[test]
fn manifest_lists_artifact_hashes() {
    let dir = tempfile::tempdir().unwrap();
    let o = loopmetric(dir.path(), &["tlj", "check", "--out", "p"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let manifest: toml::Value = toml::from_str(&String::from_utf8(read(dir.path(), "p/MANIFEST.toml")).unwrap()).unwrap();
    let artifacts = manifest["artifacts"].as_table().unwrap();
    assert!(artifacts.contains_key("tlj.json"));
    for (name, hash) in artifacts {
        assert_eq!(hash.as_str().unwrap().len(), 64, "{name}");
    }
    assert_eq!(manifest["status"].as_str(), Some("ok"));
}

#[test]
fn small_convergence_run_writes_table_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "fam.toml",
        "seed = 1\n[family]\nkind = \"dynkin_a\"\nmembers = [5, 7]\ncutoff = 8\n[cutoffs]\nk = 2\ndepth = 5\n[samples]\ncloud = 4\n",
    );
    let o = loopmetric(dir.path(), &["converge", "run", "--config", "fam.toml", "--out", "f", "--no-cache"]);
    assert!(matches!(o.status.code(), Some(0)), "{}", stderr(&o));
    let csv = String::from_utf8(read(dir.path(), "f/converge.csv")).unwrap();
    assert!(csv.starts_with("n,K,"), "{csv}");
    assert_eq!(csv.lines().count(), 3);
    assert!(String::from_utf8(read(dir.path(), "f/converge.svg")).unwrap().contains("<polyline"));
}
