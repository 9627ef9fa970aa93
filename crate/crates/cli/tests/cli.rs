use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn hmf(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hmf"));
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("HMF_THREADS", t),
        None => cmd.env_remove("HMF_THREADS"),
    };
    cmd.output().expect("binary runs")
}

fn small_config(dir: &Path, extra: &str) -> PathBuf {
    let text = format!(
        r#"{{
  "n_max": 2, "xi_max": 12.0, "n_xi": 193,
  "kernel": {{"M": 1, "p": [0.5]}},
  "profile": {{"kind": "maxwellian", "T": 1.0}},
  "perturbation": {{"mode": 1, "envelope": "algebraic", "s_tail": 7.0, "amplitude": 1.0}},
  "epsilon": 0.05, "dt": 0.05, "t_final": 4.0{extra}
}}"#
    );
    let path = dir.join("config.json");
    fs::write(&path, text).unwrap();
    path
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn run_sim_is_byte_identical_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let oa = hmf(&["run-sim", cfg.to_str().unwrap(), "--out", a.to_str().unwrap()], Some("1"));
    let ob = hmf(&["run-sim", cfg.to_str().unwrap(), "--out", b.to_str().unwrap()], Some("4"));
    assert_eq!(code(&oa), 0, "{}", String::from_utf8_lossy(&oa.stderr));
    assert_eq!(code(&ob), 0);
    let (fa, fb) = (files(&a), files(&b));
    assert!(fa.iter().any(|(n, _)| n == "timeseries.csv"));
    assert_eq!(fa, fb);

    let ts = String::from_utf8(fs::read(a.join("timeseries.csv")).unwrap()).unwrap();
    assert_eq!(ts.lines().next().unwrap(), "t,re_zeta1,im_zeta1,abs_zeta1,mass_re,mass_im,l2_full,h_smin4,h_s");
    let snap = String::from_utf8(fs::read(a.join("g_final.csv")).unwrap()).unwrap();
    let mut lines = snap.lines();
    assert_eq!(lines.next().unwrap(), "n,xi,re,im");
    let re = lines.next().unwrap().split(',').nth(2).unwrap();
    // 17 significant digits.
    assert_eq!(re.split('e').next().unwrap().trim_start_matches('-').replace('.', "").len(), 17);
}

#[test]
fn scatter_writes_limit_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "");
    let out = tmp.path().join("s");
    let o = hmf(&["scatter", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["g_inf.csv", "eta_inf.csv", "rates.json"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let eta = fs::read_to_string(out.join("eta_inf.csv")).unwrap();
    assert_eq!(eta.lines().next().unwrap(), "v,eta");
    let rates: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("rates.json")).unwrap()).unwrap();
    assert!(rates["fits"].is_array());
}

#[test]
fn scatter_needs_every_step() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), r#", "record_every": 5"#);
    let o = hmf(&["scatter", cfg.to_str().unwrap(), "--out", tmp.path().join("s").to_str().unwrap()], None);
    assert_eq!(code(&o), 2);
}

#[test]
fn penrose_check_json_shape() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "");
    let o = hmf(&["penrose-check", cfg.to_str().unwrap(), "--out", tmp.path().join("p").to_str().unwrap()], None);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let entry = &v.as_array().unwrap()[0];
    let mut keys: Vec<&str> = entry.as_object().unwrap().keys().map(|k| k.as_str()).collect();
    keys.sort();
    assert_eq!(keys, ["kappa_est", "min_abs", "n", "stable", "tau_scan", "winding"]);
    assert_eq!(entry["winding"], 0);
    assert_eq!(entry["tau_scan"][0].as_array().unwrap().len(), 3);
}

#[test]
fn volterra_bench_csv_header() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), r#", "volterra": {"gammas": [2.0], "T": [10.0, 20.0], "dt": 0.05}"#);
    let out = tmp.path().join("v");
    let o = hmf(&["volterra-bench", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("ratios.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "gamma,T,ratio");
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn schema_and_usage_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), r#", "stray": 1"#);
    let o = hmf(&["run-sim", cfg.to_str().unwrap(), "--out", tmp.path().join("x").to_str().unwrap()], None);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("stray"));

    let o = hmf(&["preset", "no-such-preset", "--out", tmp.path().to_str().unwrap()], None);
    assert_eq!(code(&o), 2);
    assert_eq!(code(&hmf(&["frobnicate"], None)), 2);
    assert_eq!(code(&hmf(&["run-sim", tmp.path().join("missing.json").to_str().unwrap()], None)), 2);
}

#[test]
fn small_window_is_an_invariant_violation() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "");
    let text = fs::read_to_string(&cfg).unwrap().replace(r#""t_final": 4.0"#, r#""t_final": 40.0"#);
    fs::write(&cfg, text).unwrap();
    let o = hmf(&["run-sim", cfg.to_str().unwrap(), "--out", tmp.path().join("x").to_str().unwrap()], None);
    assert_eq!(code(&o), 3);
    let msg = String::from_utf8_lossy(&o.stderr);
    assert!(msg.contains("xi_max >= n_max*t_final + 4*dxi"), "{msg}");
}
