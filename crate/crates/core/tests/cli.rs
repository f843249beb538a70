use std::process::Command;

fn netbandit() -> Command {
    Command::new(env!("CARGO_BIN_EXE_netbandit"))
}

#[test]
fn presets_lists_every_preset() {
    let out = netbandit().arg("presets").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in netbandit::environment::PRESET_NAMES {
        assert!(text.contains(name), "missing {name}");
    }
}

#[test]
fn run_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let status = netbandit()
        .args([
            "run",
            "--policy",
            "netlinucb",
            "--topology",
            "2x2",
            "--nodes",
            "4",
        ])
        .args(["--horizon", "25", "--seed-list", "3,5", "--dump-weights"])
        .arg("--output-dir")
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let traces = dir.path().join("traces");
    assert!(traces.join("trace_netlinucb_2x2_n4_seed5.csv").exists());
    assert!(dir
        .path()
        .join("weights_netlinucb_2x2_n4_seed3.csv")
        .exists());

    let out = netbandit().arg("report").arg(&traces).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("netlinucb,2x2_n4,2,"));
}

#[test]
fn output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let status = netbandit()
        .args([
            "run",
            "--policy",
            "disjoint",
            "--nodes",
            "2",
            "--horizon",
            "5",
            "--seed-list",
            "0",
        ])
        .env("NETBANDIT_OUTPUT_DIR", dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    assert!(dir.path().join("summary.csv").exists());
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "policy = \"shared\"\nhorizon = 400\nseeds = [1]\n\n[instance]\npreset = \"large_gap\"\nn_nodes = 3\n",
    )
    .unwrap();
    let status = netbandit()
        .args(["run", "--horizon", "10"])
        .arg("--config")
        .arg(&cfg)
        .arg("--output-dir")
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let row: Vec<&str> = summary.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&row[..4], &["shared", "full", "3", "10"]);
}

#[test]
fn failing_cell_sets_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = netbandit()
        .args([
            "sweep",
            "--policies",
            "disjoint",
            "--topologies",
            "full,5x5",
        ])
        .args(["--nodes", "4", "--horizon", "5", "--seed-list", "0"])
        .arg("--output-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
}

#[test]
fn invalid_config_names_the_field() {
    let out = netbandit()
        .args([
            "run",
            "--horizon",
            "0",
            "--output-dir",
            "/nonexistent/never",
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("horizon"));
}
