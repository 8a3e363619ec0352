// End-to-end runs of the `lpshrink` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lpshrink(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lpshrink"))
        .args(args)
        .env_remove("LP_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_identity(dir: &Path) -> String {
    let p = dir.join("identity.csv");
    fs::write(&p, "tau,weight\n1,1\n").unwrap();
    p.display().to_string()
}

#[test]
fn help_lists_subcommands() {
    let o = lpshrink(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for sub in ["solve-m", "density", "simulate", "shrink", "verify", "measure-distance", "rate", "losses"] {
        assert!(text.contains(sub), "{sub} missing from help");
    }
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(lpshrink(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(lpshrink(&["solve-m", "--z", "0+1i", "--nope"]).status.code(), Some(1));
    assert_eq!(lpshrink(&["solve-m", "--z", "0-1i"]).status.code(), Some(1));
    let o = lpshrink(&["solve-m", "--z", "one"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn solve_m_identity() {
    let dir = tempfile::tempdir().unwrap();
    let psm = write_identity(dir.path());
    let o = lpshrink(&["solve-m", "--z", "0+1i", "--phi", "0.5", "--psm", &psm]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["m"]["re"].as_f64().unwrap() - 0.1932).abs() < 1e-3);
    assert!((v["m"]["im"].as_f64().unwrap() - 0.7909).abs() < 1e-3);
    // resolved options are echoed
    assert!(String::from_utf8_lossy(&o.stderr).contains("z = 0+1i"));
}

#[test]
fn numeric_failure_exits_two() {
    // a tolerance below machine precision cannot be met
    let o = lpshrink(&["solve-m", "--z", "1+1e-9i", "--tol", "1e-30"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error[numeric]"));
}

#[test]
fn density_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.csv");
    let o = lpshrink(&["density", "--emin", "0", "--emax", "3", "--points", "31", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("E,w,hilbert_w,w_S\n"));
    assert_eq!(csv.lines().count(), 32);
    let side: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.with_extension("json")).unwrap()).unwrap();
    assert_eq!(side["edges"].as_array().unwrap().len(), 1);
    assert!((side["atom_at_zero"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn simulate_then_shrink() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("sim");
    let o = lpshrink(&["simulate", "--n", "200", "--seed", "4", "--out", run.to_str().unwrap(), "--eigensystem"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(run.join("eigensystem.lpeig").exists());
    let spectrum = run.join("spectrum.csv");
    assert_eq!(fs::read_to_string(&spectrum).unwrap().lines().count(), 101);

    let out = dir.path().join("shrunk.csv");
    let o = lpshrink(&["shrink", "--spectrum", spectrum.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert!(summary["clamped_count"].as_u64().is_some());
    let shrunk = fs::read_to_string(&out).unwrap();
    assert!(shrunk.starts_with("lambda,delta\n"));
    for line in shrunk.lines().skip(1) {
        let d: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((d - 1.0).abs() < 0.1, "{line}");
    }
}

#[test]
fn verify_and_measure_distance_csv() {
    let o = lpshrink(&["verify", "--law", "bottom-trace", "--n", "32,64", "--reps", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("n,seed,residual,psi_or_bound\n"));
    assert_eq!(text.lines().count(), 5);

    let o = lpshrink(&["measure-distance", "--which", "nu", "--n", "32,64", "--reps", "2", "--grid", "50"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("n,seed,distance\n"));
}

#[test]
fn rate_is_deterministic_and_config_equivalent() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    let args = |out: &Path| {
        vec![
            "rate".to_string(),
            "--law".into(),
            "top-trace".into(),
            "--n".into(),
            "32,64,128".into(),
            "--reps".into(),
            "4".into(),
            "--seed".into(),
            "17".into(),
            "--out".into(),
            out.display().to_string(),
        ]
    };
    for out in [&a, &b] {
        let argv = args(out);
        let o = lpshrink(&argv.iter().map(String::as_str).collect::<Vec<_>>());
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let ra = fs::read(a.join("results.csv")).unwrap();
    assert_eq!(ra, fs::read(b.join("results.csv")).unwrap());

    let cfg = dir.path().join("rate.conf");
    fs::write(&cfg, "# same run\nlaw = top-trace\nn = 32,64,128\nreps = 4\nseed = 17\nout = ignored\n").unwrap();
    let o = lpshrink(&["rate", "--config", cfg.to_str().unwrap(), "--out", c.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(ra, fs::read(c.join("results.csv")).unwrap());
    for f in ["config.json", "summary.json", "manifest.json"] {
        assert!(c.join(f).exists(), "{f}");
    }
}

#[test]
fn seed_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed_env: Option<&str>, out: &str| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_lpshrink"));
        cmd.args(["simulate", "--n", "40", "--out", out]).env_remove("LP_SEED");
        if let Some(s) = seed_env {
            cmd.env("LP_SEED", s);
        }
        assert!(cmd.output().unwrap().status.success());
        fs::read(Path::new(out).join("spectrum.csv")).unwrap()
    };
    let d = |n: &str| dir.path().join(n).display().to_string();
    let env5 = run(Some("5"), &d("e5"));
    let o = lpshrink(&["simulate", "--n", "40", "--seed", "5", "--out", &d("f5")]);
    assert!(o.status.success());
    assert_eq!(env5, fs::read(dir.path().join("f5/spectrum.csv")).unwrap());
    assert_ne!(env5, run(None, &d("none")));
}

#[test]
fn unknown_config_key_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    fs::write(&cfg, "reps = 3\n").unwrap();
    let o = lpshrink(&["solve-m", "--z", "0+1i", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown key"));
}

#[test]
fn losses_run_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("losses");
    let o = lpshrink(&["losses", "--n", "40,80", "--reps", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("results.csv")).unwrap();
    assert!(csv.starts_with("n,seed,estimator,mv_loss\n"));
    assert_eq!(csv.lines().count(), 1 + 2 * 2 * 4);
}
