use std::path::Path;
use std::process::{Command, Output};

fn ri2d(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ri2d"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn value_after(text: &str, key: &str) -> f64 {
    let rest = &text[text.find(key).unwrap_or_else(|| panic!("`{key}` missing in {text}")) + key.len()..];
    rest.split_whitespace().next().unwrap().trim_end_matches(',').parse().unwrap()
}

#[test]
fn capacity_of_two_points_is_half_the_kernel() {
    let dir = tempfile::tempdir().unwrap();
    let o = ri2d(dir.path(), &["capacity", "--set", "0,0;5,0"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    let cap = value_after(&s, "cap = ");
    let half = value_after(&s, "a(x)/2 = ");
    assert!((cap - half).abs() < 1e-9, "{s}");
    let csv = std::fs::read_to_string(dir.path().join("capacity/capacity.csv")).unwrap();
    assert!(csv.starts_with("# schema=capacity/1\npoints,capacity"));
}

#[test]
fn potential_check_reports_a_small_residual() {
    let dir = tempfile::tempdir().unwrap();
    let o = ri2d(dir.path(), &["potential", "--radius", "256", "--check"]);
    assert_eq!(o.status.code(), Some(0));
    let r = value_after(&stdout(&o), "harmonicity residual ");
    assert!(r <= 1e-10);
    assert!(dir.path().join("potential/manifest.json").exists());
    assert!(dir.path().join("potential/timing.json").exists());
}

#[test]
fn usage_and_config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(ri2d(dir.path(), &["no-such-command"]).status.code(), Some(2));
    assert_eq!(ri2d(dir.path(), &["capacity", "--set", "0,0;5"]).status.code(), Some(2));
    assert_eq!(ri2d(dir.path(), &["capacity"]).status.code(), Some(2));
    assert_eq!(ri2d(dir.path(), &["verify", "--only", "AC99"]).status.code(), Some(2));
    assert_eq!(ri2d(dir.path(), &["reversibility", "--c", "0.5"]).status.code(), Some(2));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# vacancy run\nseed = 11\nvacant-prob.samples = 2000\nx = 3,4\n").unwrap();
    let c = cfg.to_str().unwrap();
    let o = ri2d(dir.path(), &["--config", c, "vacant-prob", "--x", "1,0"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("vacant-prob/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 11);
    assert_eq!(manifest["params"]["samples"], 2000);
    assert_eq!(manifest["params"]["x"], "1,0");
}

#[test]
fn same_seed_gives_identical_outputs_across_worker_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["vacant-prob", "--x", "3,4", "--samples", "4000", "--seed", "5"];
    let mut one = vec!["--workers", "1"];
    one.extend(args);
    let mut two = vec!["--workers", "2"];
    two.extend(args);
    assert_eq!(ri2d(a.path(), &one).status.code(), Some(0));
    assert_eq!(ri2d(b.path(), &two).status.code(), Some(0));
    for f in ["vacant_prob.csv", "manifest.json"] {
        let x = std::fs::read(a.path().join("vacant-prob").join(f)).unwrap();
        let y = std::fs::read(b.path().join("vacant-prob").join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
}

#[test]
fn kernel_rows_sum_to_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = ri2d(dir.path(), &["kernel", "--radius", "6", "--inner", "2", "--starts", "4,0;0,5"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    for line in s.lines().filter(|l| l.starts_with("start")) {
        assert!((value_after(line, "row sum ") - 1.0).abs() < 1e-12, "{line}");
    }
}

#[test]
fn verify_quick_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = ri2d(dir.path(), &["verify", "--quick"]);
    let s = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{s}{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(s.lines().filter(|l| l.starts_with("PASS ") || l.starts_with("FAIL ")).count(), 13, "{s}");
    let csv = std::fs::read_to_string(dir.path().join("verify/verify.csv")).unwrap();
    assert!(csv.starts_with("# schema=verify/1\nid,pass,declared,detail"));
}
