use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_microlocal")).args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn figure1_writes_both_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["figure1"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).starts_with("PASS figure1"));
    let text = std::fs::read_to_string(dir.path().join("figure1_characteristic.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("operator,x1,theta,dtheta_dt,dx1_dt"));
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), 5);
        let x1: f64 = f[1].parse().unwrap();
        if f[0] == "tricomi" {
            assert!(x1 <= 0.0);
        }
        if f[0] == "keldysh" && x1 == 0.0 {
            let th: f64 = f[2].parse().unwrap();
            assert!(th == 0.0 || (th - std::f64::consts::PI).abs() < 1e-15);
            assert_eq!(f[4].parse::<f64>().unwrap(), 0.0);
        }
        // 17 significant digits in scientific notation.
        assert_eq!(f[1].split('e').next().unwrap().trim_start_matches('-').len(), 18, "{}", f[1]);
    }
    assert!(dir.path().join("figure1_field.csv").exists());
}

#[test]
fn manifest_echoes_config_and_version() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["airy-moments", "--set", "k_max=4"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("5/5 ratios within tolerance"));
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "airy-moments");
    assert_eq!(m["config"]["k_max"], "4");
    assert_eq!(m["library_version"], "0.1.0");
    assert_eq!(m["checks"][0]["pass"], true);
    let csv = std::fs::read_to_string(dir.path().join("derivative_growth.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
    assert!(csv.starts_with("k,Dk_u0,ratio,factorial_ratio\n"));
}

#[test]
fn deterministic_runs_are_byte_identical() {
    for cmd in ["figure1", "weights-verify"] {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let extra = ["--deterministic", "--set", "n_x1=21"];
        let args: Vec<&str> = if cmd == "figure1" { [&[cmd][..], &extra].concat() } else { vec![cmd, "--deterministic"] };
        assert_eq!(run(&args, a.path()).status.code(), Some(0));
        assert_eq!(run(&args, b.path()).status.code(), Some(0));
        assert_eq!(read_dir_sorted(a.path()), read_dir_sorted(b.path()), "{cmd}");
    }
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.cfg");
    std::fs::write(&empty, "# nothing here\n\n").unwrap();
    let cases: Vec<Vec<String>> = vec![
        vec!["figure1".into(), "--config".into(), empty.display().to_string()],
        vec!["figure1".into(), "--set".into(), "nope=1".into()],
        vec!["figure1".into(), "--set".into(), "n_x1=many".into()],
        vec!["figure1".into(), "--set".into(), "n_x1".into()],
        vec!["figure2".into()],
        vec!["airy-moments".into(), "--config".into(), dir.path().join("missing.cfg").display().to_string()],
    ];
    for args in cases {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let o = run(&args, &dir.path().join("out"));
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn config_file_then_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# figure grid\nn_x1 = 5\nx1_min=-1\nx1_max=1\n").unwrap();
    let out = dir.path().join("out");
    let o = run(&["figure1", "--config", cfg.to_str().unwrap(), "--set", "n_theta=4"], &out);
    assert_eq!(o.status.code(), Some(0));
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config"]["n_x1"], "5");
    assert_eq!(m["config"]["n_theta"], "4");
    let field = std::fs::read_to_string(out.join("figure1_field.csv")).unwrap();
    assert_eq!(field.lines().count(), 1 + 2 * 5 * 4);
}

#[test]
fn failing_check_exits_one_and_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["fbi-roundtrip", "--set", "x_half=2", "--set", "n_y=3", "--set", "y_min=-1", "--set", "y_max=1", "--set", "dump_grid=0"];
    let o = run(&args, dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("FAIL fbi_left_inverse"), "{}", stdout(&o));
    assert!(String::from_utf8_lossy(&o.stderr).contains("first failing check: fbi_left_inverse"));
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["checks"][0]["pass"], false);
}

#[test]
fn wfa_report_has_the_documented_shape() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["wfa-scan", "--set", "function=step", "--set", "n_x=3", "--set", "x_min=-0.5", "--set", "x_max=0.5"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let r: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("wfa_report.json")).unwrap()).unwrap();
    let rows = r.as_array().unwrap();
    assert_eq!(rows.len(), 6);
    for row in rows {
        let keys: Vec<&str> = row.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(keys.len(), 5);
        for k in ["x0", "omega", "verdict", "rate", "r2"] {
            assert!(keys.contains(&k));
        }
        let inside = row["verdict"] == "InWFa";
        assert_eq!(inside, row["x0"].as_f64().unwrap() == 0.0);
    }
    let o = run(&["wfa-scan", "--set", "function=sawtooth"], &dir.path().join("bad"));
    assert_eq!(o.status.code(), Some(1));
}
