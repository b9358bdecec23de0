use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sdmi(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sdmi")).args(args).current_dir(cwd).output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn builtin_example_1_passes_with_csv_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = sdmi(&["run", "--scenario", "example-1", "--out", "out"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("out/trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,x_1,x_2,x_3,speed,V,W,lyap_composite");
    assert_eq!(lines.count(), 3001);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    assert_eq!(report["decay"]["pass"], true);
    assert_eq!(report["pass"], true);
}

#[test]
fn refinement_table_has_one_row_per_consecutive_pair() {
    let dir = tempfile::tempdir().unwrap();
    let o = sdmi(&["run", "--scenario", "example-2", "--h", "0.1", "--refine", "4", "--out", "out"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = fs::read_to_string(dir.path().join("out/convergence.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 3);
    let composite: Vec<f64> = fs::read_to_string(dir.path().join("out/trajectory_3.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(composite.windows(2).all(|w| w[1] <= w[0] + 5.0 * 0.0125));
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = sdmi(&["run", "--scenario", "lure-relay", "--seed", "7", "--out", out], dir.path());
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let a = fs::read(dir.path().join("a/trajectory.csv")).unwrap();
    let b = fs::read(dir.path().join("b/trajectory.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn inadmissible_sweeping_start_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.toml",
        r#"
[scenario]
kind = "sweeping"
x0 = [3.0]
horizon = 1.0

[sweeping]
set = "box"
lo = [-1.0]
hi = [1.0]
"#,
    );
    let o = sdmi(&["run", &cfg, "--out", "out"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("inadmissible"), "{}", stderr(&o));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn stationary_sweeping_run_has_constant_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.toml",
        r#"
[scenario]
kind = "sweeping"
x0 = [0.25, -0.5]
horizon = 1.0

[solver]
h = 0.1

[sweeping]
set = "ball"
center = [0.0, 0.0]
radius = 2.0
"#,
    );
    let o = sdmi(&["run", &cfg, "--out", "out"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("out/trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 11);
    assert!(csv.lines().skip(1).all(|l| l.split(',').skip(1).collect::<Vec<_>>() == ["0.25", "-0.5", "0"]));
}

#[test]
fn schema_violations_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", "[scenario]\nkind = \"builtin-example-2\"\n[solver]\nstep = 0.1\n");
    let o = sdmi(&["run", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("step"), "{}", stderr(&o));

    let cfg = write_config(dir.path(), "bad2.toml", "[scenario]\nkind = \"builtin-example-2\"\n[solver]\nh = 0.5\n");
    let o = sdmi(&["run", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("solver.h"), "{}", stderr(&o));

    let o = sdmi(&["run", "--scenario", "nope"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn leaving_the_lyapunov_domain_is_a_criterion_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "e2.toml",
        r#"
[scenario]
kind = "builtin-example-2"
x0 = [2.0, 0.9]

[example2]
alpha = 1.0
beta = 5.0
gamma = 1.0
"#,
    );
    let o = sdmi(&["run", &cfg, "--out", "out"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("out/trajectory.csv")).unwrap();
    assert!(csv.lines().any(|l| l.ends_with(",inf,0,NaN")));
    assert!(csv.lines().last().unwrap().ends_with(",NaN"));
}

#[test]
fn blow_up_is_a_solver_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "g.toml",
        r#"
[scenario]
kind = "generic"
x0 = [1.0]
horizon = 1.0

[solver]
h = 0.01
allow_large_step = true

[generic]
f_matrix = [[1e200]]
operator = "sign"
"#,
    );
    let o = sdmi(&["run", &cfg, "--out", "out"], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn lure_config_reports_assumptions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "l.toml",
        r#"
[scenario]
kind = "lure"
x0 = [1.5, -0.5]
horizon = 2.0

[solver]
h = 0.01

[lure]
g_matrix = [[-1.0, 0.5], [-0.5, -1.0]]
b = [[1.0], [0.0]]
c = [[1.0, 0.0]]
d = [[1.0]]
feedback = "sign"
gain = 1.0
"#,
    );
    let o = sdmi(&["run", &cfg, "--out", "out"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    let checks = report["assumptions"].as_array().unwrap();
    assert_eq!(checks.len(), 7);
    assert!(checks.iter().all(|c| c["ok"] == true), "{checks:?}");
}

#[test]
fn no_temporaries_are_left_behind() {
    let dir = tempfile::tempdir().unwrap();
    let o = sdmi(&["run", "--scenario", "sweeping-static", "--out", "out"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let names: Vec<String> = fs::read_dir(dir.path().join("out"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(names.iter().all(|n| !n.starts_with('.')), "{names:?}");
}

#[test]
fn dis_report_for_two_intervals() {
    let dir = tempfile::tempdir().unwrap();
    let o = sdmi(&["dis", "--a", "0:1", "--b", "0.5:2"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["hausdorff"], 1.0);
    let lb = r["dis_lower_bound"].as_f64().unwrap();
    assert!((0.9..=1.0 + 1e-9).contains(&lb));
}

#[test]
fn shipped_configs_run_cleanly() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let dir = tempfile::tempdir().unwrap();
    let mut seen = 0;
    for entry in fs::read_dir(configs).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let o = sdmi(&["run", path.to_str().unwrap(), "--out", "out"], dir.path());
            assert_eq!(o.status.code(), Some(0), "{}: {}", path.display(), stderr(&o));
            seen += 1;
        }
    }
    assert!(seen >= 3);
}

#[test]
fn list_names_every_builtin() {
    let dir = tempfile::tempdir().unwrap();
    let o = sdmi(&["list"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let out = String::from_utf8(o.stdout).unwrap();
    for name in sdmi::scenarios::BUILTIN_NAMES {
        assert!(out.contains(name), "{out}");
    }
}
