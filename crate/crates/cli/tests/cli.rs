use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn buslane(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_buslane")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn run_writes_a_row_per_step_and_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = buslane(
            &["run", "--scenario", "pi", "--horizon", "0.5", "--seed", "3", "--out-dir", out.to_str().unwrap()],
            dir.path(),
        );
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for file in ["timeseries.csv", "summary.csv", "manifest.json"] {
        assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{file}");
    }
    let ts = fs::read_to_string(a.join("timeseries.csv")).unwrap();
    assert_eq!(ts.lines().count(), 301);
    assert!(ts.starts_with(
        "step,time_hr,n_pv,n_e,n_s,n_p_V,n_p_B,c,o_b,v_V,v_p,v_b,beta_s,beta_V,beta_B,phi_V,phi_B,M,A,pht,wt\n"
    ));
}

#[test]
fn config_file_and_no_abandonment_flag() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("demand.csv"), "time_hr,q_pv,q_rs,q_b\n0,50000,9000,20000\n0.2,60000,12000,25000\n")
        .unwrap();
    fs::write(
        dir.path().join("cfg.toml"),
        "name = \"from-file\"\nhorizon_hr = 0.3\n[demand]\nkind = \"file\"\npath = \"demand.csv\"\n[output]\ndir = \"res\"\n",
    )
    .unwrap();
    let o = buslane(&["run", "--config", "cfg.toml", "--no-abandonment"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("res/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["name"], "from-file");
    assert_eq!(manifest["abandonment"], false);
    assert_eq!(manifest["steps"], 180);
}

#[test]
fn sweep_writes_one_best_row_per_demand_pair() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("sweep.toml"),
        "[sweep]\nq_pv = [50000.0, 60000.0]\nq_b = [20000.0]\nv_targets = [16.0, 17.0]\n",
    )
    .unwrap();
    let o = buslane(&["sweep", "--config", "sweep.toml", "--out-dir", "grid"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("grid/sweep.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("q_pv,q_b,v_target,pht,wt,best"));
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 4);
    for pair in rows.chunks(2) {
        assert_eq!(pair.iter().filter(|r| r[5] == "1").count(), 1);
    }
    assert!(dir.path().join("grid/sweep_manifest.json").is_file());
}

#[test]
fn steady_and_calibrate_print_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = buslane(&["calibrate-buses"], dir.path());
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["bus_speed"].as_f64().unwrap() - 19.0).abs() <= 0.01);

    let o = buslane(&["steady", "--scenario", "no_pool"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["state"]["n_p_b"], 0.0);
}

#[test]
fn exit_codes_separate_config_simulation_and_io_failures() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&buslane(&["run", "--scenario", "nope"], dir.path())), 1);
    fs::write(dir.path().join("bad.toml"), "[model.mfd]\nalpha = 1.3\n").unwrap();
    let o = buslane(&["run", "--config", "bad.toml"], dir.path());
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha"));
    assert_eq!(code(&buslane(&["run", "--config", "missing.toml"], dir.path())), 1);
    assert_eq!(code(&buslane(&["run", "--unknown-flag"], dir.path())), 1);

    fs::write(
        dir.path().join("jam.toml"),
        "[demand]\nkind = \"constant\"\ndemand = { q_pv = 1e7, q_rs = 0.0, q_b = 0.0 }\n",
    )
    .unwrap();
    assert_eq!(code(&buslane(&["run", "--config", "jam.toml"], dir.path())), 2);

    fs::write(dir.path().join("blocker"), "").unwrap();
    let o = buslane(&["run", "--horizon", "0.01", "--out-dir", "blocker/sub"], dir.path());
    assert_eq!(code(&o), 3);
}
