use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fricest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fricest"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn simulate_reference(out: &Path, extra: &[&str]) {
    let mut args = vec!["simulate", "--paper-like", "--out", path(out)];
    args.extend_from_slice(extra);
    let o = fricest(&args);
    assert!(o.status.success(), "{}", stderr(&o));
}

fn rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn simulate_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let extra = ["--seed", "5", "--set", "noise_force_std=0.02", "--trials", "2"];
    simulate_reference(&a, &extra);
    simulate_reference(&b, &extra);
    for name in ["trial_0_force.csv", "trial_1_vel.csv", "trial_0_events.csv", "trial_1_truth.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    assert_ne!(
        fs::read(a.join("trial_0_force.csv")).unwrap(),
        fs::read(a.join("trial_1_force.csv")).unwrap()
    );
    let force = fs::read_to_string(a.join("trial_0_force.csv")).unwrap();
    assert!(force.starts_with("t,fx,fy,fn,tau\n"));
    assert_eq!(force.lines().count(), 10_001);
}

#[test]
fn rerunning_the_manifest_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    simulate_reference(&out, &["--seed", "11", "--set", "noise_vel_std=1e-4"]);
    let before = fs::read(out.join("trial_vel.csv")).unwrap();
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("trial_manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 11);
    let argv: Vec<String> = manifest["argv"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    fs::remove_file(out.join("trial_vel.csv")).unwrap();
    let args: Vec<&str> = argv[1..].iter().map(String::as_str).collect();
    assert!(fricest(&args).status.success());
    assert_eq!(fs::read(out.join("trial_vel.csv")).unwrap(), before);
}

#[test]
fn simulate_usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.toml");
    let o = fricest(&["simulate", "--scenario", path(&missing), "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(path(&missing)), "{}", stderr(&o));

    let o = fricest(&["simulate", "--paper-like", "--set", "noise_fore_std=0.1", "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("noise_fore_std"));

    let o = fricest(&["simulate", "--paper-like", "--set", "dt_sim=-1", "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("dt_sim"));

    let scenario = dir.path().join("bad.toml");
    fs::write(&scenario, "[config]\nsed = 1\n[[segment]]\nduration = 1.0\ntruth = { mu_s = 0.6, mu_c = 0.4, r = 0.01 }\nfn = 2.0\n").unwrap();
    let o = fricest(&["simulate", "--scenario", path(&scenario), "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sed"), "{}", stderr(&o));

    assert_eq!(fricest(&["simulate", "--out", path(dir.path())]).status.code(), Some(2));
}

#[test]
fn estimate_and_report_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    let est = dir.path().join("est");
    simulate_reference(
        &sim,
        &[
            "--trials",
            "2",
            "--set",
            "noise_force_std=0.005",
            "--set",
            "random_transients={rate_hz=2.0, transient={amplitude=2.5, rise_time=0.005, decay_time=0.015, tangential_dip=0.6}}",
        ],
    );
    let force_before = fs::read(sim.join("trial_0_force.csv")).unwrap();
    let t0 = sim.join("trial_0");
    let t1 = sim.join("trial_1");
    for flag in [None, Some("--no-heuristic")] {
        let mut args = vec!["estimate", "--trace", path(&t0), path(&t1), "--label", "plastic", "--out", path(&est)];
        args.extend(flag);
        let o = fricest(&args);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(fs::read(sim.join("trial_0_force.csv")).unwrap(), force_before);

    let with = fs::read_to_string(est.join("trial_0_heuristic_estimates.csv")).unwrap();
    let without = fs::read_to_string(est.join("trial_0_no_heuristic_estimates.csv")).unwrap();
    assert!(with.starts_with(
        "t,mu_c,mu_s,r,gamma_t,gamma_tau,updated_mu_c,updated_r,halted,in_contact,err_mu_c,err_mu_s,err_r\n"
    ));
    let halted = |csv: &str| rows(csv).iter().filter(|r| r[8] == 1.0).count();
    assert!(halted(&with) > 0);
    assert_eq!(halted(&without), 0);

    let report = dir.path().join("report.csv");
    let glob = format!("{}/*_estimates.csv", path(&est));
    let o = fricest(&["report", "--runs", &glob, "--out", path(&report)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&report).unwrap();
    let conditions: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(conditions, ["plastic no heuristics", "plastic with heuristics"]);
    let table = fs::read_to_string(report.with_extension("txt")).unwrap();
    assert_eq!(table.lines().count(), 4);
    assert!(dir.path().join("report_manifest.json").exists());
}

#[test]
fn estimate_without_truth_has_no_error_columns() {
    let dir = tempfile::tempdir().unwrap();
    simulate_reference(dir.path(), &[]);
    fs::remove_file(dir.path().join("trial_truth.csv")).unwrap();
    let params = dir.path().join("params.toml");
    fs::write(&params, "lambda = 0.95\nn_b = 8\n").unwrap();
    let prefix = dir.path().join("trial");
    let o = fricest(&["estimate", "--trace", path(&prefix), "--params", path(&params), "--out", path(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("trial_heuristic_estimates.csv")).unwrap();
    assert!(csv.starts_with("t,mu_c,mu_s,r,gamma_t,gamma_tau,updated_mu_c,updated_r,halted,in_contact\n"));
}

#[test]
fn estimate_errors() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("trial");
    let o = fricest(&["estimate", "--trace", path(&prefix), "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("trial_force.csv"));

    fs::write(dir.path().join("trial_force.csv"), "t,fx,fy,tau\n0,1,0,0\n").unwrap();
    fs::write(dir.path().join("trial_vel.csv"), "t,vx,vy,omega\n0,0.01,0,0\n").unwrap();
    let o = fricest(&["estimate", "--trace", path(&prefix), "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("fn"), "{}", stderr(&o));

    let params = dir.path().join("params.toml");
    fs::write(&params, "lamda = 0.9\n").unwrap();
    let o = fricest(&["estimate", "--trace", path(&prefix), "--params", path(&params), "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("lamda"), "{}", stderr(&o));
}

#[test]
fn report_needs_matches() {
    let dir = tempfile::tempdir().unwrap();
    let glob = format!("{}/*_estimates.csv", path(dir.path()));
    let o = fricest(&["report", "--runs", &glob, "--out", path(&dir.path().join("r.csv"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn limit_surface_sweeps() {
    let dir = tempfile::tempdir().unwrap();
    let disc = dir.path().join("disc.csv");
    let o = fricest(&["limit-surface", "--dist", "uniform:0.015", "--out", path(&disc)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&disc).unwrap();
    assert!(text.starts_with("gamma_t,gamma_tau,ft_over_mufn,tau_over_mufnr\n"));
    let sweep = rows(&text);
    assert_eq!(sweep.len(), 33);
    assert_eq!(sweep[0][0], 1.0);
    assert!((sweep[0][2] - 1.0).abs() < 1e-12);

    let rim = dir.path().join("rim.csv");
    let o = fricest(&["limit-surface", "--dist", "rim:0.01", "--n-dirs", "9", "--out", path(&rim)]);
    assert!(o.status.success());
    let last = *rows(&fs::read_to_string(&rim).unwrap()).last().unwrap().first().unwrap();
    assert_eq!(last, 0.0);
    let sweep = rows(&fs::read_to_string(&rim).unwrap());
    assert!((sweep[8][3] - 1.0).abs() < 1e-12);

    let grid = dir.path().join("grid.csv");
    fs::write(&grid, "x,y,weight\n0.005,0,1\n-0.005,0,1\n0,0.005,1\n0,-0.005,1\n").unwrap();
    let o = fricest(&["limit-surface", "--dist", &format!("grid:{}", path(&grid)), "--out", path(&dir.path().join("g.csv"))]);
    assert!(o.status.success(), "{}", stderr(&o));

    let o = fricest(&["limit-surface", "--dist", "square:1", "--out", path(&dir.path().join("x.csv"))]);
    assert_eq!(o.status.code(), Some(2));
    let o = fricest(&["limit-surface", "--dist", "uniform:-1", "--out", path(&dir.path().join("x.csv"))]);
    assert_eq!(o.status.code(), Some(2));
}
