use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const QUICK: &str = r#"{
    "matsubara_terms": 1,
    "depth": 2,
    "amplitude": 10.0,
    "t_max": 1.0,
    "samples": 11,
    "check_convergence": false,
    "amplitude_axis": {"min": 10.0, "max": 20.0, "count": 2},
    "frequency_axis": {"min": 4.0, "max": 8.0, "count": 2},
    "lambda_axis": [0.5, 1.0],
    "gamma_axis": [0.5, 1.0],
    "q_theta": 9,
    "q_phi": 8,
    "random_states": 50,
    "floquet_detuning": 2.0
}"#;

fn heomsync(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heomsync"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn setup(config: &str) -> (TempDir, String) {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("run.json");
    fs::write(&path, config).unwrap();
    (dir, path.to_str().unwrap().to_string())
}

fn table(path: &Path) -> (String, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines
        .map(|l| {
            l.split(',')
                .map(|f| match f {
                    "true" => 1.0,
                    "false" => 0.0,
                    x => x.parse().unwrap(),
                })
                .collect()
        })
        .collect();
    (header, rows)
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn simulate_writes_time_series() {
    let (dir, cfg) = setup(QUICK);
    let o = heomsync(dir.path(), &["simulate", "--config", &cfg]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = table(&dir.path().join("timeseries.csv"));
    assert_eq!(header, "t,mx,my,mz,p,re_c,im_c,s_max,phi_star,trace_dev");
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[0][..4], [0.0, 1.0, 0.0, 0.0]);
    assert!(rows.iter().all(|r| r[9] < 1e-8));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("simulate.json")).unwrap()).unwrap();
    assert!(summary["window"]["value"].as_f64().unwrap() > 0.0);
    assert!(dir.path().join("config.json").exists());
}

#[test]
fn larmor_precession_without_bath_or_drive() {
    let (dir, cfg) = setup(r#"{"lambda": 0.0, "amplitude": 0.0, "drive_frequency": 1.0, "t_max": 10.0,
        "samples": 101, "matsubara_terms": 1, "depth": 2, "check_convergence": false}"#);
    let o = heomsync(dir.path(), &["simulate", "--config", &cfg]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (_, rows) = table(&dir.path().join("timeseries.csv"));
    for r in rows {
        assert!((r[1] - r[0].cos()).abs() < 1e-6, "t = {}: {}", r[0], r[1]);
    }
}

#[test]
fn configuration_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let bad = [
        r#"{"t_max": 0}"#,
        r#"{"not_a_key": 1}"#,
        r#"{"samples": 1"#,
        r#"{"lambda_axis": []}"#,
    ];
    for (i, text) in bad.iter().enumerate() {
        let path = dir.path().join(format!("bad{i}.json"));
        fs::write(&path, text).unwrap();
        let o = heomsync(dir.path(), &["simulate", "--config", path.to_str().unwrap()]);
        assert_eq!(code(&o), 2, "{text}");
    }
    assert_eq!(code(&heomsync(dir.path(), &["simulate", "--config", "/nonexistent/cfg.json"])), 2);
    assert_eq!(code(&heomsync(dir.path(), &["simulate", "--set", "depth"])), 2);
    assert_eq!(code(&heomsync(dir.path(), &["simulate", "--set", "t_max=-1"])), 2);
    assert_eq!(code(&heomsync(dir.path(), &["no-such-command"])), 2);
}

#[test]
fn unconverged_truncation_needs_force() {
    let (dir, cfg) = setup(QUICK);
    let args = ["simulate", "--config", &cfg, "--set", "check_convergence=true", "--set", "depth=1", "--set", "max_depth=1", "--set", "matsubara_terms=0"];
    let o = heomsync(dir.path(), &args);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("--force"));
    let mut forced = args.to_vec();
    forced.push("--force");
    assert_eq!(code(&heomsync(dir.path(), &forced)), 0);
}

#[test]
fn validation_report_and_fault_injection() {
    let (dir, cfg) = setup(QUICK);
    let o = heomsync(dir.path(), &["validate", "--config", &cfg, "--set", "fault_c0_scale=1.1"]);
    assert_eq!(code(&o), 4);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("validation.json")).unwrap()).unwrap();
    let oracle = |name: &str| {
        report["oracles"].as_array().unwrap().iter().find(|o| o["name"] == name).unwrap().clone()
    };
    assert_eq!(oracle("expansion_vs_quadrature")["status"], "fail");
    assert_eq!(oracle("fourier_quadrature")["status"], "pass");
    assert_eq!(report["passed"], false);

    let o = heomsync(dir.path(), &["validate", "--config", &cfg, "--set", "lambda=0"]);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("validation.json")).unwrap()).unwrap();
    let dephasing = report["oracles"].as_array().unwrap().iter().find(|o| o["name"] == "dephasing_integral").unwrap();
    assert_eq!(dephasing["status"], "not applicable");
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn default_validation_passes() {
    let dir = TempDir::new().unwrap();
    let o = heomsync(dir.path(), &["validate"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn drive_sweep_outputs_and_determinism() {
    let (dir, cfg) = setup(QUICK);
    let o = heomsync(dir.path(), &["sweep-drive", "--config", &cfg, "--workers", "1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let first = fs::read(dir.path().join("sweep_drive.csv")).unwrap();
    let (header, rows) = table(&dir.path().join("sweep_drive.csv"));
    assert_eq!(header, "axis1,axis2,value,converged");
    assert_eq!(rows.iter().map(|r| (r[0], r[1])).collect::<Vec<_>>(), [(10.0, 4.0), (10.0, 8.0), (20.0, 4.0), (20.0, 8.0)]);
    assert!(rows.iter().all(|r| r[2] > 0.0 && r[2] <= 0.125 && r[3] == 0.0));

    let (header, lines) = table(&dir.path().join("rrc_lines.csv"));
    assert_eq!(header, "k,z_k,omega_rrc,Omega");
    assert_eq!(lines.len(), 6);
    assert!(lines.iter().all(|l| (l[2] * l[1] - l[3]).abs() < 1e-12));

    for workers in ["1", "2"] {
        let again = TempDir::new().unwrap();
        let o = heomsync(again.path(), &["sweep-drive", "--config", &cfg, "--workers", workers]);
        assert_eq!(code(&o), 0);
        assert_eq!(fs::read(again.path().join("sweep_drive.csv")).unwrap(), first, "workers = {workers}");
    }
}

#[test]
fn bath_sweep_flags_failed_cells() {
    // γ = 2πT puts the Drude pole on the first Matsubara frequency
    let (dir, cfg) = setup(QUICK);
    let o = heomsync(dir.path(), &["sweep-bath", "--config", &cfg, "--set", "gamma_axis=[0.5, 3.141592653589793]"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("failed"));
    let text = fs::read_to_string(dir.path().join("sweep_bath.csv")).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().nth(2).unwrap().ends_with("NaN,false"), "{text}");
}

#[test]
fn identical_trajectories_are_bitwise_equal() {
    let (dir, cfg) = setup(QUICK);
    let o = heomsync(dir.path(), &["trajectories", "--config", &cfg, "--set", r#"initial_states=[[0.6, 0, 0.8], [0.6, 0, 0.8], "plus_y"]"#]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let read = |i: usize| fs::read(dir.path().join(format!("trajectory_{i}.csv"))).unwrap();
    assert_eq!(read(0), read(1));
    assert_ne!(read(0), read(2));
    let (_, a) = table(&dir.path().join("trajectory_0.csv"));
    let (_, c) = table(&dir.path().join("trajectory_2.csv"));
    assert_eq!(a.iter().map(|r| r[0]).collect::<Vec<_>>(), c.iter().map(|r| r[0]).collect::<Vec<_>>());
}

#[test]
fn q_snapshots_and_argmax() {
    let (dir, cfg) = setup(QUICK);
    let o = heomsync(dir.path(), &["qsnapshot", "--config", &cfg]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (header, q0) = table(&dir.path().join("q_snapshot_0.csv"));
    assert_eq!(header, "theta,phi,q");
    assert_eq!(q0.len(), 72);
    for r in &q0 {
        let want = (1.0 + r[0].sin() * r[1].cos()) / (4.0 * std::f64::consts::PI);
        assert!((r[2] - want).abs() < 1e-10);
    }
    assert!(dir.path().join("q_snapshot_2.csv").exists());
    let (header, argmax) = table(&dir.path().join("q_argmax.csv"));
    assert_eq!(header, "t,theta,phi");
    assert_eq!(argmax.len(), 11);
    let o = heomsync(dir.path(), &["qsnapshot", "--config", &cfg, "--set", "snapshot_times=[2.0]"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn floquet_and_fourier_tables() {
    let dir = TempDir::new().unwrap();
    let o = heomsync(dir.path(), &["floquet", "--set", "frequency_axis=[20, 24.94983463893742, 30]"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = table(&dir.path().join("floquet.csv"));
    assert_eq!(header, "omega,lower,upper,splitting,degenerate");
    assert_eq!(rows[1][4], 1.0);
    assert_eq!(rows[0][4], 0.0);

    let o = heomsync(dir.path(), &["fourier"]);
    assert_eq!(code(&o), 0);
    let (header, rows) = table(&dir.path().join("fourier.csv"));
    assert_eq!(header, "n,re_00,im_00,re_01,im_01,re_10,im_10,re_11,im_11,oracle_error");
    assert_eq!(rows.len(), 15);
    assert!(rows.iter().all(|r| r[9] < 1e-8));
}
