//! End-to-end checks of the `blowup-lab` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use blowup_lab::runner::to_json;
use blowup_lab::RunSummary;

const DIRICHLET: &str = r#"kind = "dirichlet_source"
p = 2.0
n_dim = 1
radius = 1.5
num_cells = 100
amplitude = 1.0
shape = 1
"#;

fn lab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blowup-lab"))
        .args(args)
        .current_dir(dir)
        .env_remove("BLOWUP_LAB_OUT")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn first_line(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn run_writes_all_outputs_with_stable_headers() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "d.toml", DIRICHLET);
    let out = tmp.path().join("out");
    let res = lab(&["run", &cfg, "--out", out.to_str().unwrap(), "--quiet"], tmp.path());
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    for f in ["trace.csv", "summary.json", "profile_final.csv", "rate_fit.svg", "profile.svg"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    assert_eq!(first_line(&out.join("trace.csv")), "t,dt,u_center,u_boundary,u_max,argmax_r");
    assert_eq!(first_line(&out.join("profile_final.csv")), "r,u");
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(!trace.contains('\r'));
    // the initial row: t = 0, dt = 0, u(0) = 1, u(R) = 0
    assert_eq!(trace.lines().nth(1).unwrap(), "0,0,1,0,1,0");

    let json = fs::read_to_string(out.join("summary.json")).unwrap();
    let summary: RunSummary = serde_json::from_str(&json).unwrap();
    assert!(summary.blew_up);
    assert!(summary.t_hat.is_some());
    // lossless round trip
    assert_eq!(to_json(&summary).unwrap(), json);
}

#[test]
fn identical_configs_give_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "d.toml", DIRICHLET);
    for dir in ["a", "b"] {
        let res = lab(&["run", &cfg, "--out", dir, "--quiet"], tmp.path());
        assert!(res.status.success());
    }
    for f in ["trace.csv", "summary.json", "profile_final.csv", "rate_fit.svg", "profile.svg"] {
        let a = fs::read(tmp.path().join("a").join(f)).unwrap();
        let b = fs::read(tmp.path().join("b").join(f)).unwrap();
        assert!(a == b, "{f} differs");
    }
}

#[test]
fn sublinear_exponent_is_rejected_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.toml", &DIRICHLET.replace("p = 2.0", "p = 0.5"));
    let res = lab(&["run", &cfg, "--out", "out"], tmp.path());
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("p > 1"));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn invalid_initial_data_names_the_condition_and_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let text =
        DIRICHLET.replace("radius = 1.5", "radius = 1.0").replace("amplitude = 1.0", "amplitude = 2.0");
    let cfg = write_config(tmp.path(), "bad.toml", &text);
    let res = lab(&["run", &cfg, "--out", "out"], tmp.path());
    assert_eq!(res.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&res.stderr);
    assert!(stderr.contains("Δu_0+e^{u_0^p} >= 0 violated at r="), "{stderr}");
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn environment_sets_the_output_root() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "d.toml", &format!("{DIRICHLET}out_dir = \"from_config\"\n"));
    let res = Command::new(env!("CARGO_BIN_EXE_blowup-lab"))
        .args(["run", &cfg, "--quiet"])
        .current_dir(tmp.path())
        .env("BLOWUP_LAB_OUT", "from_env")
        .output()
        .unwrap();
    assert!(res.status.success());
    assert!(tmp.path().join("from_env/summary.json").is_file());
    assert!(!tmp.path().join("from_config").exists());

    let res = lab(&["run", &cfg, "--quiet"], tmp.path());
    assert!(res.status.success());
    assert!(tmp.path().join("from_config/summary.json").is_file());
}

#[test]
fn sweep_without_axes_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "d.toml", DIRICHLET);
    let res = lab(&["sweep", &cfg, "--out", "out"], tmp.path());
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("use run_experiment"));
}

#[test]
fn sweep_writes_rows_and_convergence_and_keeps_going_after_failures() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!("{DIRICHLET}sweep_num_cells = [50, 100]\nsweep_amplitude = [1.0, 2.0]\n");
    let cfg = write_config(tmp.path(), "s.toml", &text);
    let res = lab(&["sweep", &cfg, "--out", "out", "--jobs", "2", "--quiet"], tmp.path());
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let out = tmp.path().join("out");
    let sweep = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let rows: Vec<&str> = sweep.lines().collect();
    assert_eq!(rows.len(), 5);
    assert!(rows[0].starts_with("index,dir,kind,p,num_cells,amplitude,status"));
    // amplitude 2 on R = 1.5 violates the sign condition near the boundary
    let failed: Vec<&&str> = rows[1..].iter().filter(|r| r.contains(",failed,")).collect();
    assert_eq!(failed.len(), 2);
    assert!(out.join("run_000/summary.json").is_file());
    assert!(!out.join("run_001").exists());

    let conv = fs::read_to_string(out.join("convergence.csv")).unwrap();
    let lines: Vec<&str> = conv.lines().collect();
    assert_eq!(lines[0], "p,amplitude,num_cells,t_hat,delta_t_hat");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("2,1,50,0.2"));
}
