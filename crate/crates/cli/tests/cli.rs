use std::path::Path;
use std::process::{Command, Output};

fn robustmsc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_robustmsc")).args(args).output().unwrap()
}

fn gen(dir: &Path) {
    let out = robustmsc(&["gen-synthetic", "--out", dir.to_str().unwrap(), "--seed", "4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn generate_then_classify() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    gen(&data);
    for f in ["manifest.txt", "labels.txt", "intrusive.txt", "view_0.edges", "view_4.edges"] {
        assert!(data.join(f).exists(), "missing {f}");
    }
    assert_eq!(std::fs::read_to_string(data.join("intrusive.txt")).unwrap(), "3\n4\n");
    let results = dir.path().join("results");
    let out = robustmsc(&[
        "classify",
        "--manifest",
        data.join("manifest.txt").to_str().unwrap(),
        "--labels",
        data.join("labels.txt").to_str().unwrap(),
        "--methods",
        "eql,tss",
        "--repeats",
        "1",
        "--hyper-c",
        "0.1",
        "--hyper-c0",
        "1",
        "--output-dir",
        results.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("eql") && stdout.contains("tss"));
    for f in ["results.csv", "summary.csv", "weights.csv", "config.txt"] {
        assert!(results.join(f).exists(), "missing {f}");
    }
    let config = std::fs::read_to_string(results.join("config.txt")).unwrap();
    assert!(config.contains("repeats = 1"), "{config}");
}

#[test]
fn set_overrides_and_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    gen(&data);
    let results = dir.path().join("out");
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        format!(
            "manifest = {}\nlabels = {}\nmethods = eql\nrepeats = 3\noutput_dir = {}\n",
            data.join("manifest.txt").display(),
            data.join("labels.txt").display(),
            results.display()
        ),
    )
    .unwrap();
    let out = robustmsc(&["classify", "--config", cfg.to_str().unwrap(), "--set", "repeats=1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = std::fs::read_to_string(results.join("results.csv")).unwrap();
    assert_eq!(rows.lines().count(), 2);
}

#[test]
fn bad_input_fails_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "repeats = lots\n").unwrap();
    let out = robustmsc(&["classify", "--config", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let out = robustmsc(&["classify", "--set", "repeats"]);
    assert!(!out.status.success());
    let out = robustmsc(&["classify", "--manifest", dir.path().join("nope.txt").to_str().unwrap()]);
    assert!(!out.status.success());
    let out = robustmsc(&["label-sweep", "--set", "fractions="]);
    assert!(!out.status.success());
}
