use std::path::Path;
use std::process::{Command, Output};

fn infotl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_infotl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn gaussian_csv_on_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "g.cfg", "n_grid = 10, 100\n");
    let out = stdout(&infotl(&["gaussian", "--config", &cfg, "--trials", "500", "--seed", "3"]));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("experiment,grid_key,grid_value"));
    assert!(lines[1].starts_with("gaussian,n,10,"));
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "g.cfg", "experiment = gaussian\nn_grid = 10\n");
    let run = |seed: &str, name: &str| {
        let out = dir.path().join(name);
        let o = infotl(&["gaussian", "--config", &cfg, "--trials", "300", "--seed", seed, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(out).unwrap()
    };
    assert_eq!(run("9", "a.csv"), run("9", "b.csv"));
    assert_ne!(run("9", "a.csv"), run("10", "c.csv"));
}

#[test]
fn summary_goes_to_stderr_when_csv_is_on_stdout() {
    let o = infotl(&["gaussian", "--preset", "desk", "--trials", "200", "--summary"]);
    let csv = stdout(&o);
    assert_eq!(csv.lines().count(), 5);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("total"), "{err}");
    assert!(err.contains("gaussian-closed-form"), "{err}");
}

#[test]
fn bound_eval_prints_and_writes() {
    let dir = tempfile::tempdir().unwrap();
    let parts = write(dir.path(), "p.txt", "theorem = gaussian-closed-form\nn = 10\nvariance = 1\nkl = 0.5\n");
    let text = stdout(&infotl(&["bound-eval", &parts]));
    assert!(text.contains("total               1.504"), "{text}");

    let out = dir.path().join("r.csv");
    stdout(&infotl(&["bound-eval", &parts, "--out", out.to_str().unwrap()]));
    let csv = std::fs::read_to_string(out).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.lines().next().unwrap().contains("total"));
}

#[test]
fn bound_eval_delta_flag_overrides_file() {
    let dir = tempfile::tempdir().unwrap();
    let parts = write(
        dir.path(),
        "p.txt",
        "theorem = excess-risk\ngen_bound = 0\nr2 = 1\nalpha = 0.5\nbeta = 0.5\nn = 100\ndelta = 0.5\n",
    );
    let text = stdout(&infotl(&["bound-eval", &parts, "--delta", "0.05"]));
    assert!(text.contains("concentration term  0.2716"), "{text}");
}

#[test]
fn config_errors_exit_nonzero_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.cfg", "n_grid = 10\nbogus = 1\n");
    let o = infotl(&["gaussian", "--config", &cfg]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 2"), "{err}");

    let cfg = write(dir.path(), "other.cfg", "experiment = logistic\n");
    let o = infotl(&["gaussian", "--config", &cfg]);
    assert!(!o.status.success());

    let o = infotl(&["gaussian", "--config", "/nonexistent/x.cfg"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/x.cfg"));
}

#[test]
fn invalid_flag_values_are_rejected() {
    assert!(!infotl(&["gaussian", "--trials", "0"]).status.success());
    assert!(!infotl(&["gaussian", "--delta", "1.5"]).status.success());
    assert!(!infotl(&["gaussian", "--preset", "huge"]).status.success());
}

#[test]
fn noisy_gd_exports_trace_and_trials() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "n.cfg", "n = 50\nt_grid = 3, 6\nmc_samples = 2000\ngrid_resolution = 8\n");
    let trace = dir.path().join("trace.csv");
    let trials_dir = dir.path().join("trials");
    let csv = stdout(&infotl(&[
        "noisy-gd",
        "--config",
        &cfg,
        "--trials",
        "20",
        "--trace",
        trace.to_str().unwrap(),
        "--trials-out",
        trials_dir.to_str().unwrap(),
    ]));
    assert_eq!(csv.lines().count(), 3);
    let t = std::fs::read_to_string(&trace).unwrap();
    assert!(t.starts_with("iter,"), "{t}");
    // Header plus W(0)..W(6).
    assert_eq!(t.lines().count(), 8);
    let files: Vec<_> = std::fs::read_dir(&trials_dir).unwrap().collect();
    assert_eq!(files.len(), 1);
}

#[test]
fn trace_is_only_for_noisy_gd() {
    let o = infotl(&["gaussian", "--trace", "/tmp/x.csv"]);
    assert!(!o.status.success());
}
