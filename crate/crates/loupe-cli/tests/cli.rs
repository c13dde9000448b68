use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn loupe(args: &[&str], cache: Option<&Path>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_loupe"));
    c.args(args).env_remove("LOUPE_CACHE_DIR");
    if let Some(dir) = cache {
        c.env("LOUPE_CACHE_DIR", dir);
    }
    c.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const CAPACITY: [&str; 6] = ["capacity", "--set", "disk(0,0,0.5)", "--n", "512", "--launch"];

#[test]
fn verify_kernels_passes() {
    let o = loupe(&["verify", "kernels"], None);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).lines().filter(|l| l.starts_with("PASS")).count() >= 5);
}

#[test]
fn missing_seed_and_bad_literals_exit_two() {
    let o = loupe(&["lambda-star", "--v1", "circle(0,0,1)", "--v2", "circle(0,0,15.154)"], None);
    assert_eq!(o.status.code(), Some(2));
    let o = loupe(&["capacity", "--set", "blob(1)", "--seed", "1"], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numeric_contract_failures_exit_three() {
    let o = loupe(&["sle", "modulus", "--kappa", "2", "--t", "0.1", "--dt", "1e-3", "--domain", "disk(0,0,0.3)", "--seed", "1"], None);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn lambda_star_example_is_near_minus_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let csv = dir.path().join("r.csv");
    let svg = dir.path().join("r.svg");
    let o = loupe(
        &["lambda-star", "--v1", "circle(0,0,1)", "--v2", "circle(0,0,15.154)", "--seed", "7", "--out", out.to_str().unwrap(), "--csv", csv.to_str().unwrap(), "--svg", svg.to_str().unwrap()],
        None,
    );
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let value = v["payload"]["value"].as_f64().unwrap();
    assert!((value + 1.0).abs() < 0.03, "{value}");
    assert!(fs::read_to_string(&csv).unwrap().starts_with("log_inv_r,mass,stderr,renormalized"));
    assert!(fs::read_to_string(&svg).unwrap().contains("<polyline"));
}

#[test]
fn config_file_merges_with_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# capacity of a disk\ncommand = capacity\nset = disk(0,0,0.5)\nn = 512\nlaunch = 1\nseed = 4\n").unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    assert_eq!(loupe(&["capacity", "--config", cfg.to_str().unwrap(), "--out", a.to_str().unwrap()], None).status.code(), Some(0));
    assert_eq!(loupe(&["capacity", "--config", cfg.to_str().unwrap(), "--seed", "5", "--out", b.to_str().unwrap()], None).status.code(), Some(0));
    let (a, b): (serde_json::Value, serde_json::Value) = (serde_json::from_str(&fs::read_to_string(a).unwrap()).unwrap(), serde_json::from_str(&fs::read_to_string(b).unwrap()).unwrap());
    assert_eq!(a["config"]["seed"], "4");
    assert_eq!(b["config"]["seed"], "5");
    assert_ne!(a["config_hash"], b["config_hash"]);
    let o = loupe(&["harmonic", "--config", cfg.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2), "a config for another command is rejected");
}

#[test]
fn identical_configs_give_identical_json() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for p in [&a, &b] {
        let mut args = CAPACITY.to_vec();
        args.extend(["1", "--seed", "9", "--out", p.to_str().unwrap()]);
        assert_eq!(loupe(&args, None).status.code(), Some(0));
    }
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
}

#[test]
fn cache_hits_only_on_identical_configs() {
    let cache = tempfile::tempdir().unwrap();
    let run = |seed: &str, n: &str| {
        let mut args = CAPACITY.to_vec();
        args[4] = n;
        args.extend(["1", "--seed", seed]);
        stdout(&loupe(&args, Some(cache.path())))
    };
    assert!(!run("1", "512").contains("cached"));
    assert!(run("1", "512").contains("cached"));
    assert!(!run("2", "512").contains("cached"), "seed change misses");
    assert!(!run("1", "1024").contains("cached"), "budget change misses");
    assert_eq!(fs::read_dir(cache.path()).unwrap().count(), 3);
}

#[test]
fn corrupt_cache_records_are_skipped() {
    let cache = tempfile::tempdir().unwrap();
    let mut args = CAPACITY.to_vec();
    args.extend(["1", "--seed", "3"]);
    assert_eq!(loupe(&args, Some(cache.path())).status.code(), Some(0));
    let entry = fs::read_dir(cache.path()).unwrap().next().unwrap().unwrap().path();
    fs::write(&entry, "garbage").unwrap();
    let o = loupe(&args, Some(cache.path()));
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("corrupt"));
    assert!(!stdout(&o).contains("cached"));
}

#[test]
fn sle_sample_writes_a_trace_table() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("trace.csv");
    let o = loupe(&["sle", "sample", "--kappa", "2", "--t", "0.05", "--dt", "1e-3", "--stride", "20", "--seed", "3", "--csv", csv.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(csv).unwrap();
    assert!(text.starts_with("t,re,im\n"));
    assert!(text.lines().count() > 100);
}

#[test]
fn sle_density_reports_a_mean_near_one_half() {
    let o = loupe(&["sle", "density", "--kappa", "2", "--domain", "disk(0,0,2)", "--w", "2,0", "--t", "0.01", "--dt", "1e-3", "--n", "32", "--seed", "3"], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    let mean: f64 = s.split("mean density at t = ").nth(1).unwrap().split(": ").nth(1).unwrap().split(' ').next().unwrap().parse().unwrap();
    assert!((mean - 0.5).abs() < 0.02, "{s}");
}
