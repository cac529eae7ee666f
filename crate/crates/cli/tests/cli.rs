use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use forage_core::population::simulate;
use forage_core::runlog::RunLog;
use forage_core::RunConfig;
use tempfile::TempDir;

fn forage(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_forage"))
        .args(args)
        .env_remove("FORAGE_OUT")
        .output()
        .expect("binary runs")
}

fn small_config() -> RunConfig {
    RunConfig {
        initial_nodes: 500,
        attachment: 3,
        bootstrap_docs: 400,
        background_docs: 100,
        clusters: 10,
        virtual_days: 2,
        ..RunConfig::default()
    }
}

fn write_config(dir: &Path, cfg: &RunConfig) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, cfg.to_text()).unwrap();
    path
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn generate_run_and_analyze() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), &small_config());
    let out = tmp.path().join("out");
    let args = ["--config", cfg.to_str().unwrap(), "--seed", "5", "--out", out.to_str().unwrap()];

    let g = forage(&[&["generate"], &args[..]].concat());
    assert!(g.status.success(), "{}", stderr(&g));
    let dir = out.join("seed-5");
    for f in ["environment.snap", "classifier.snap", "edges.txt", "nodes.txt", "generated.toml"] {
        assert!(dir.join(f).is_file(), "{f}");
    }
    let snapshot = fs::read(dir.join("environment.snap")).unwrap();

    let r = forage(&[&["run"], &args[..]].concat());
    assert_eq!(r.status.code(), Some(0), "{}", stderr(&r));
    assert_eq!(fs::read(dir.join("environment.snap")).unwrap(), snapshot);
    let stamp = fs::read_to_string(dir.join("config.toml")).unwrap();
    assert!(stamp.starts_with(&format!("# forage {}\n", env!("CARGO_PKG_VERSION"))));
    let recorded = RunConfig::load(&dir.join("config.toml")).unwrap();
    assert_eq!(recorded.seed, 5);

    let m = forage(&["metrics", dir.join("runlog.txt").to_str().unwrap()]);
    assert!(m.status.success(), "{}", stderr(&m));
    for f in ["ratios.csv", "compartment.csv", "twostep.csv", "population.csv"] {
        let text = fs::read_to_string(dir.join(f)).unwrap();
        assert!(text.lines().count() > 1, "{f}");
    }
    let first = fs::read(dir.join("twostep.csv")).unwrap();
    assert!(forage(&["metrics", dir.join("runlog.txt").to_str().unwrap()]).status.success());
    assert_eq!(fs::read(dir.join("twostep.csv")).unwrap(), first);
}

#[test]
fn run_matches_the_library_and_repeats_exactly() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), &small_config());
    let mut logs = Vec::new();
    for name in ["a", "b"] {
        let out = tmp.path().join(name);
        let r = forage(&["run", "--config", cfg.to_str().unwrap(), "--seed", "9", "--out", out.to_str().unwrap()]);
        assert!(r.status.success(), "{}", stderr(&r));
        logs.push(fs::read_to_string(out.join("seed-9/runlog.txt")).unwrap());
    }
    assert_eq!(logs[0], logs[1]);
    let expected = simulate(&RunConfig { seed: 9, ..small_config() }).unwrap().sim.into_log().to_text();
    assert_eq!(logs[0], expected);
}

#[test]
fn seed_sweep_and_environment_override() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), &RunConfig { virtual_days: 1, ..small_config() });
    let out = tmp.path().join("sweep");
    let r = Command::new(env!("CARGO_BIN_EXE_forage"))
        .args(["run", "--config", cfg.to_str().unwrap(), "--seeds", "3..4"])
        .env("FORAGE_OUT", &out)
        .output()
        .unwrap();
    assert!(r.status.success(), "{}", stderr(&r));
    assert!(out.join("seed-3/runlog.txt").is_file());
    assert!(out.join("seed-4/runlog.txt").is_file());
}

#[test]
fn default_classifier_has_fifty_classes() {
    let tmp = TempDir::new().unwrap();
    let g = forage(&["generate", "--out", tmp.path().to_str().unwrap()]);
    assert!(g.status.success(), "{}", stderr(&g));
    let snap = fs::read_to_string(tmp.path().join("seed-42/classifier.snap")).unwrap();
    let classifier = forage_core::textmodel::Classifier::read_snapshot(snap.as_bytes()).unwrap();
    assert_eq!(classifier.k(), 50);
}

#[test]
fn invalid_gamma_names_the_field() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "gamma = 1.5\n").unwrap();
    let r = forage(&["run", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert!(!r.status.success());
    assert_ne!(r.status.code(), Some(3));
    assert!(stderr(&r).contains("gamma"), "{}", stderr(&r));
}

#[test]
fn extinction_has_its_own_exit_code() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), &RunConfig { virtual_days: 14, ..small_config() });
    let r = forage(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--cost-scale",
        "10",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(3), "{}", stderr(&r));
    let log = RunLog::read_from(fs::read_to_string(tmp.path().join("seed-42/runlog.txt")).unwrap().as_bytes()).unwrap();
    assert_eq!(log.status(), Some(forage_core::runlog::RunStatus::Extinct));
}

#[test]
fn empty_log_gives_header_only_tables() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("runlog.txt");
    fs::write(&path, RunLog::new(1, 0, 1440).to_text()).unwrap();
    let m = forage(&["metrics", path.to_str().unwrap(), "--which", "all"]);
    assert!(m.status.success(), "{}", stderr(&m));
    for f in ["ratios.csv", "compartment.csv", "twostep.csv", "population.csv"] {
        let text = fs::read_to_string(tmp.path().join(f)).unwrap();
        assert_eq!(text.lines().count(), 1, "{f}: {text}");
    }
}

#[test]
fn single_table_selection() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("runlog.txt");
    fs::write(&path, RunLog::new(1, 0, 1440).to_text()).unwrap();
    let out = tmp.path().join("tables");
    let m = forage(&["metrics", path.to_str().unwrap(), "--which", "ratios", "--out", out.to_str().unwrap()]);
    assert!(m.status.success(), "{}", stderr(&m));
    let names: Vec<_> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names, ["ratios.csv"]);
}

#[test]
fn corrupt_log_reports_the_record() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("runlog.txt");
    let mut text = RunLog::new(1, 0, 1440).to_text();
    text.push_str("P 10 0 2 100\nV 11 0 5\n");
    fs::write(&path, text).unwrap();
    let m = forage(&["metrics", path.to_str().unwrap()]);
    assert!(!m.status.success());
    assert!(stderr(&m).contains("record 2"), "{}", stderr(&m));
}
