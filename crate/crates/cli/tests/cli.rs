use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn qfluid(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qfluid"));
    cmd.args(args).env_remove("QFLUID_OUT");
    if let Some(dir) = env_out {
        cmd.env("QFLUID_OUT", dir);
    }
    cmd.output().expect("binary runs")
}

fn final_line(out: &Output) -> Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().expect("stderr is not empty");
    serde_json::from_str(line).expect("final stderr line is JSON")
}

fn write_config(dir: &Path, name: &str, cfg: &Value) -> String {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

fn base(mode: &str, out: &str) -> Value {
    json!({
        "mode": mode,
        "grid": {"dim": 1, "n": 32},
        "params": {"lambda": 1.0, "mu": 0.5, "hbar": 1.0, "nu": 0.1},
        "solver": {"dt": 0.001, "t_end": 0.1, "scheme": "rk4", "report_every": 10},
        "initial_data": {"recipe": "uniform"},
        "output_dir": out
    })
}

fn column(csv_text: &str, name: &str) -> Vec<Option<f64>> {
    let mut rows = csv_text.lines();
    let header: Vec<&str> = rows.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap();
    rows.map(|r| {
        let f = r.split(',').nth(k).unwrap();
        (!f.is_empty()).then(|| f.parse().unwrap())
    })
    .collect()
}

#[test]
fn equilibrium_run_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "equilibrium.json", &base("aug_nslk", "eq"));
    let out = qfluid(&["run", "--config", &cfg], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(final_line(&out)["status"], "ok");

    let run_dir = dir.path().join("eq");
    let reports = fs::read_to_string(run_dir.join("reports.csv")).unwrap();
    assert!(reports.starts_with(
        "time,mass,E,D,BDE,BDD,Ereg,Dreg,BDEreg,augE,augD,relE_inst,relE_total,b,ck_gap,bohm_ratio\n"
    ));
    let mass: Vec<f64> = column(&reports, "mass").into_iter().map(Option::unwrap).collect();
    assert_eq!(mass.len(), 11);
    assert!(mass.iter().all(|m| (m - mass[0]).abs() <= 1e-12 * mass[0]));
    for name in ["D", "BDD", "augD"] {
        assert!(column(&reports, name).into_iter().all(|v| v.unwrap().abs() <= 1e-10));
    }
    assert!(column(&reports, "relE_total").iter().all(Option::is_none));

    let run_json: Value = serde_json::from_str(&fs::read_to_string(run_dir.join("run.json")).unwrap()).unwrap();
    assert_eq!(run_json["status"], "ok");
    assert_eq!(run_json["config"], base("aug_nslk", "eq"));

    let rep = qfluid(&["report", run_dir.to_str().unwrap()], None);
    assert!(rep.status.success());
    let text = String::from_utf8_lossy(&rep.stdout);
    assert!(text.contains("augD"), "{text}");
    let plot = fs::read_to_string(run_dir.join("plotdata_D.csv")).unwrap();
    assert!(plot.starts_with("time,value\n"));
    assert_eq!(plot.lines().count(), 12);
}

#[test]
fn report_of_empty_dir_is_missing_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = qfluid(&["report", dir.path().to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    let last = final_line(&out);
    assert_eq!(last["status"], "config_error");
    assert!(last["reason"].as_str().unwrap().contains("missing data"));
}

#[test]
fn damping_run_decays_like_the_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base("reg_nslk", "damp");
    cfg["params"] = json!({"lambda": 1.0, "mu": 0.5, "hbar": 1.0});
    cfg["solver"] = json!({"dt": 0.001, "t_end": 1.0, "scheme": "rk4", "report_every": 100});
    cfg["initial_data"] = json!({"recipe": "uniform", "velocity": [0.3]});
    let path = write_config(dir.path(), "damping.json", &cfg);
    let out = qfluid(&["run", "--config", &path], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let reports = fs::read_to_string(dir.path().join("damp/reports.csv")).unwrap();
    // at ρ ≡ 1 the energy is 2π(|u|²/2 − λ)
    let e = column(&reports, "E").last().unwrap().unwrap();
    let speed = (2.0 * (e / (2.0 * std::f64::consts::PI) + 1.0)).sqrt();
    assert!((speed - 0.3 * (-0.5f64).exp()).abs() < 1e-8, "{speed}");
}

#[test]
fn negative_lambda_prime_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base("aug_nslk", "bad");
    cfg["params"]["lambda"] = json!(0.01);
    cfg["params"]["mu"] = json!(1.0);
    let path = write_config(dir.path(), "bad.json", &cfg);
    let out = qfluid(&["run", "--config", &path], None);
    assert_eq!(out.status.code(), Some(2));
    let last = final_line(&out);
    assert_eq!(last["status"], "config_error");
    assert!(last["reason"].as_str().unwrap().contains("lambda'"), "{last}");
    assert!(!dir.path().join("bad").exists());
}

#[test]
fn unknown_keys_and_wrong_subcommand_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base("aug_nslk", "x");
    cfg["solver"]["step"] = json!(1);
    let path = write_config(dir.path(), "typo.json", &cfg);
    assert_eq!(qfluid(&["run", "--config", &path], None).status.code(), Some(2));

    let path = write_config(dir.path(), "mode.json", &base("aug_nslk", "x"));
    let out = qfluid(&["certify", "--config", &path], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(final_line(&out)["reason"].as_str().unwrap().contains("does not run mode aug_nslk"));

    assert_eq!(qfluid(&["frobnicate"], None).status.code(), Some(2));
}

#[test]
fn blowup_exits_with_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base("reg_nslk", "blow");
    cfg["params"] = json!({"lambda": 1.0, "mu": 0.0, "hbar": 1.0});
    cfg["solver"] = json!({"dt": 1e-10, "t_end": 1e-9, "scheme": "rk4"});
    cfg["initial_data"] = json!({"recipe": "uniform", "velocity": [2e8]});
    let path = write_config(dir.path(), "blow.json", &cfg);
    let out = qfluid(&["run", "--config", &path], None);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(final_line(&out)["status"], "numerical_failure");
    let run_dir = dir.path().join("blow");
    assert!(run_dir.join("reports.csv").is_file());
    assert!(run_dir.join("snapshots/t_000000.qfld").is_file());
    let run_json: Value = serde_json::from_str(&fs::read_to_string(run_dir.join("run.json")).unwrap()).unwrap();
    assert_eq!(run_json["status"], "numerical_failure");
}

#[test]
fn output_env_var_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "eq.json", &base("aug_nslk", "ignored"));
    let target = dir.path().join("elsewhere");
    let out = qfluid(&["run", "--config", &path], Some(&target));
    assert!(out.status.success());
    assert!(target.join("reports.csv").is_file());
    assert!(!dir.path().join("ignored").exists());
}

#[test]
fn identical_configs_give_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base("aug_nslk", "a");
    cfg["grid"] = json!({"dim": 2, "n": 16});
    cfg["initial_data"] = json!({"recipe": "random", "amplitude": 0.2, "velocity_amplitude": 0.1});
    cfg["seed"] = json!(42);
    cfg["solver"]["t_end"] = json!(0.02);
    let a = write_config(dir.path(), "a.json", &cfg);
    cfg["output_dir"] = json!("b");
    let b = write_config(dir.path(), "b.json", &cfg);
    assert!(qfluid(&["run", "--config", &a], None).status.success());
    assert!(qfluid(&["run", "--config", &b], None).status.success());
    let ra = fs::read(dir.path().join("a/reports.csv")).unwrap();
    let rb = fs::read(dir.path().join("b/reports.csv")).unwrap();
    assert_eq!(ra, rb);
}

#[test]
fn snapshot_restart_continues_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base("reg_nslk", "first");
    cfg["params"] = json!({"lambda": 1.0, "mu": 0.2, "hbar": 1.0, "nu": 0.05});
    cfg["initial_data"] = json!({"recipe": "cosine", "amplitude": 0.2, "velocity_amplitude": 0.1});
    cfg["solver"] = json!({"dt": 0.001, "t_end": 0.02, "scheme": "rk4", "snapshot_every": 10});
    let first = write_config(dir.path(), "first.json", &cfg);
    assert!(qfluid(&["run", "--config", &first], None).status.success());
    let snap = dir.path().join("first/snapshots/t_000020.qfld");
    assert!(snap.is_file());

    cfg["output_dir"] = json!("second");
    cfg["initial_data"] = json!({"snapshot": "first/snapshots/t_000020.qfld"});
    let second = write_config(dir.path(), "second.json", &cfg);
    let out = qfluid(&["run", "--config", &second], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let reports = fs::read_to_string(dir.path().join("second/reports.csv")).unwrap();
    let times: Vec<f64> = column(&reports, "time").into_iter().map(Option::unwrap).collect();
    assert!((times[0] - 0.02).abs() < 1e-15);
    assert!((times.last().unwrap() - 0.04).abs() < 1e-12);
}

#[test]
fn wave_run_conserves_mass() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base("sl", "wave");
    cfg["params"] = json!({"lambda": 1.0, "mu": 0.0, "hbar": 1.0});
    cfg["initial_data"] = json!({"recipe": "gaussian", "peak": 1.0, "width": 0.8});
    cfg["grid"] = json!({"dim": 1, "n": 64});
    let path = write_config(dir.path(), "sl.json", &cfg);
    let out = qfluid(&["run", "--config", &path], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let reports = fs::read_to_string(dir.path().join("wave/reports.csv")).unwrap();
    let mass: Vec<f64> = column(&reports, "mass").into_iter().map(Option::unwrap).collect();
    assert!(mass.iter().all(|m| (m - mass[0]).abs() <= 1e-10 * mass[0]));
    let head = fs::read(dir.path().join("wave/snapshots/t_000000.qfld")).unwrap();
    assert!(head.starts_with(b"QFLD1 dim=1 n=64 comps=2\n"));
}

#[test]
fn oracle_compare_reports_small_discrepancy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "mode": "oracle_compare",
        "grid": {"dim": 1, "n": 256},
        "params": {"lambda": 1.0, "mu": 0.5, "hbar": 1.0},
        "solver": {"dt": 2.5e-4, "t_end": 0.5, "scheme": "rk4", "report_every": 200},
        "initial_data": {"recipe": "phase_wave", "amplitude": 0.2, "phase_amplitude": 0.3},
        "output_dir": "madelung"
    });
    let path = write_config(dir.path(), "madelung.json", &cfg);
    let out = qfluid(&["oracle-compare", "--config", &path], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let value: f64 = stdout.trim().rsplit(' ').next().unwrap().parse().unwrap();
    assert!(value <= 1e-4, "{stdout}");
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("madelung/oracle.json")).unwrap()).unwrap();
    assert_eq!(summary["l1_density"].as_f64().unwrap(), value);
}

#[test]
fn certify_writes_a_passing_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base("certify", "cert");
    cfg["grid"] = json!({"dim": 1, "n": 64});
    cfg["initial_data"] = json!({"recipe": "cosine", "amplitude": 0.2, "velocity_amplitude": 0.1});
    cfg["reference"] = json!({"name": "traveling_wave", "amplitude": 0.1, "wavenumber": 1, "speed": 1.0, "axis": 0});
    cfg["solver"]["t_end"] = json!(0.5);
    let path = write_config(dir.path(), "cert.json", &cfg);
    let out = qfluid(&["certify", "--config", &path], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let cert: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("cert/certificate.json")).unwrap()).unwrap();
    for key in ["C_used", "c_struct", "tol_cert", "times", "lhs", "rhs", "margin", "verdict"] {
        assert!(cert.get(key).is_some(), "missing {key}");
    }
    assert_eq!(cert["verdict"], true);
    let rep = qfluid(&["report", dir.path().join("cert").to_str().unwrap()], None);
    assert!(String::from_utf8_lossy(&rep.stdout).contains("certificate pass"));
}

#[test]
fn sweep_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base("sweep", "sweep");
    cfg["params"] = json!({"lambda": 1.0, "mu": 0.5, "hbar": 1.0});
    cfg["grid"] = json!({"dim": 1, "n": 32});
    cfg["initial_data"] = json!({"recipe": "phase_wave", "amplitude": 0.2, "phase_amplitude": 0.3});
    cfg["reference"] = json!({"name": "zero"});
    cfg["nu_list"] = json!([0.1, 0.05]);
    let path = write_config(dir.path(), "sweep.json", &cfg);
    let out = qfluid(&["sweep", "--config", &path], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(dir.path().join("sweep/sweep.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("nu,relE_ref,relE_oracle,verdict"));
    assert_eq!(lines.count(), 2);
}
