use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sectors(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sectors"))
        .args(args)
        .current_dir(dir)
        .env_remove("SECTORS_CACHE_DIR")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn write_cfg(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, format!("schema = 1\n{body}")).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn config_errors_exit_2() {
    let d = tempfile::tempdir().unwrap();
    let bad = [
        "x = 10\n",
        "x = 100000\nlambdas = 0.3\nks = 10\n",
        "x = 100000\ncolour = blue\n",
        "x = 100000\nx = 200000\n",
        "x = 100000\ntol.delta = -1\n",
        "x = 100000\nworkers = 0\n",
        "x = 100000\nmethod = magic\n",
        "x = 100000 junk\n",
    ];
    for (i, body) in bad.iter().enumerate() {
        let cfg = write_cfg(d.path(), &format!("bad{i}.cfg"), body);
        let o = sectors(d.path(), &["scan", "-c", &cfg]);
        assert_eq!(code(&o), 2, "{body:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let p = d.path().join("noschema.cfg");
    fs::write(&p, "x = 100000\n").unwrap();
    assert_eq!(code(&sectors(d.path(), &["scan", "-c", p.to_str().unwrap()])), 2);
    assert_eq!(code(&sectors(d.path(), &["scan", "--set", "x=10"])), 2);
    assert_eq!(code(&sectors(d.path(), &["frobnicate"])), 2);
    // scan without any λ or K
    assert_eq!(code(&sectors(d.path(), &["scan", "--set", "x=100000"])), 2);
}

#[test]
fn scan_is_deterministic_and_k_list_matches() {
    let d = tempfile::tempdir().unwrap();
    let lambdas = "0.2,0.3,0.4,0.55,0.6,0.7,0.8,0.9,1.05,1.1,1.2,1.3,1.4";
    let cfg = write_cfg(d.path(), "a.cfg", &format!("x = 100000\nlambdas = {lambdas}\noutput = out1\n"));
    let o = sectors(d.path(), &["scan", "-c", &cfg]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let cfg2 = write_cfg(d.path(), "b.cfg", &format!("x = 100000\nlambdas = {lambdas}\noutput = out2\n"));
    assert_eq!(code(&sectors(d.path(), &["scan", "-c", &cfg2, "--set", "workers=3"])), 0);

    let csv1 = fs::read(d.path().join("out1/scan.csv")).unwrap();
    let csv2 = fs::read(d.path().join("out2/scan.csv")).unwrap();
    assert_eq!(csv1, csv2);
    let text = String::from_utf8(csv1).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "lambda,K,var,var_tail,mean,ratio_emp,ratio_asym,pred_rmt,pred_refined");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 13);
    let ls: Vec<f64> = rows.iter().map(|r| r.split(',').next().unwrap().parse().unwrap()).collect();
    assert!(ls.windows(2).all(|w| w[0] < w[1]));

    // JSON differs only in the output path of the config snapshot
    let j1 = fs::read_to_string(d.path().join("out1/scan.json")).unwrap();
    let j2 = fs::read_to_string(d.path().join("out2/scan.json")).unwrap();
    assert_eq!(j1.replace("out1", "out2"), j2.replace("\"workers\": 3", "\"workers\": 1"));
    assert!(d.path().join("out1/scan.timing.json").exists());

    // rerun into the same directory: byte-identical
    assert_eq!(code(&sectors(d.path(), &["scan", "-c", &cfg])), 0);
    assert_eq!(fs::read_to_string(d.path().join("out1/scan.json")).unwrap(), j1);

    // the same points given as K
    let ks: Vec<String> = ls.iter().map(|&l| (1e5f64.powf(l)).round().to_string()).collect();
    let ks = ks.iter().map(|k| k.parse::<f64>().unwrap().max(2.0).to_string()).collect::<Vec<_>>().join(",");
    let cfg3 = write_cfg(d.path(), "c.cfg", &format!("x = 100000\nks = {ks}\noutput = out3\n"));
    assert_eq!(code(&sectors(d.path(), &["scan", "-c", &cfg3])), 0);
    let csv3 = fs::read(d.path().join("out3/scan.csv")).unwrap();
    assert_eq!(text.as_bytes(), &csv3[..]);

    // plot data with SVG
    let rec = d.path().join("out1/scan.json");
    let o = sectors(d.path(), &["plotdata", "--record", rec.to_str().unwrap(), "--svg"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let plot = fs::read_to_string(d.path().join("out1/plot.csv")).unwrap();
    assert!(plot.starts_with("series,lambda,ratio\n"));
    assert_eq!(plot.lines().filter(|l| l.starts_with("empirical,")).count(), 13);
    assert!(plot.lines().any(|l| l.starts_with("rmt,")) && plot.lines().any(|l| l.starts_with("refined,")));
    let svg = fs::read_to_string(d.path().join("out1/plot.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    assert!(svg.trim_end().ends_with("</svg>"));
}

#[test]
fn point_in_theorem_regime() {
    let d = tempfile::tempdir().unwrap();
    let o = sectors(d.path(), &["point", "--set", "x=1000000", "--lambda", "1.2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(d.path().join("sectors-out/point.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    let k: f64 = row[1].parse().unwrap();
    let var: f64 = row[2].parse().unwrap();
    let mean: f64 = row[4].parse().unwrap();
    let ratio: f64 = row[5].parse().unwrap();
    let pred: f64 = row[8].parse().unwrap();
    assert!((ratio / pred - 1.0).abs() < 0.1, "ratio {ratio} pred {pred}");
    assert!((ratio - var / (mean * 1e6f64.ln())).abs() < 1e-9 * ratio);
    assert!(k > 1e7 && mean > 0.0);
}

#[test]
fn point_at_bifurcation_refused() {
    let d = tempfile::tempdir().unwrap();
    let o = sectors(d.path(), &["point", "--set", "x=100000", "--lambda", "0.5"]);
    assert_eq!(code(&o), 2);
    let o = sectors(d.path(), &["point", "--set", "x=100000", "--lambda", "0.99"]);
    assert_eq!(code(&o), 2);
    let o = sectors(d.path(), &["point", "--set", "x=100000", "--set", "force=true", "--lambda", "0.99"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn missing_cache_without_build_is_resource_error() {
    let d = tempfile::tempdir().unwrap();
    let o = sectors(d.path(), &["point", "--set", "x=100000", "--set", "build_cache=false", "--lambda", "0.3"]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(code(&sectors(d.path(), &["sieve", "--set", "x=100000"])), 0);
    let o = sectors(d.path(), &["point", "--set", "x=100000", "--set", "build_cache=false", "--lambda", "0.3"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    // a cache for a larger X serves a smaller one
    let o = sectors(d.path(), &["point", "--set", "x=50000", "--set", "build_cache=false", "--lambda", "0.3"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn env_var_overrides_cache_dir() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_cfg(d.path(), "a.cfg", "x = 20000\ncache = from-config\n");
    let o = Command::new(env!("CARGO_BIN_EXE_sectors"))
        .args(["sieve", "-c", &cfg])
        .current_dir(d.path())
        .env("SECTORS_CACHE_DIR", d.path().join("from-env"))
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(!d.path().join("from-config").exists());
    let files: Vec<_> = fs::read_dir(d.path().join("from-env")).unwrap().collect();
    assert_eq!(files.len(), 1);
}

#[test]
fn corrupt_cache_is_resource_error() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&sectors(d.path(), &["sieve", "--set", "x=20000"])), 0);
    for e in fs::read_dir(d.path().join("sectors-cache")).unwrap() {
        fs::write(e.unwrap().path(), b"garbage").unwrap();
    }
    let o = sectors(d.path(), &["point", "--set", "x=20000", "--lambda", "0.3"]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn constants_and_verify() {
    let d = tempfile::tempdir().unwrap();
    for w in ["indicator", "bump"] {
        let o = sectors(d.path(), &["constants", "--set", &format!("window={w}")]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let out = String::from_utf8(o.stdout).unwrap();
        assert!(out.contains("identities ok"));
        let csv = fs::read_to_string(d.path().join("sectors-out/constants.csv")).unwrap();
        assert!(csv.starts_with("name,value,error_bound,provenance\n"));
    }
    let o = sectors(d.path(), &["verify"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.path().join("sectors-out/verify.json")).unwrap()).unwrap();
    let checks = report["checks"].as_array().unwrap();
    assert!(checks.len() >= 17);
    assert!(checks.iter().all(|c| c["passed"] == true));
    // an impossible tolerance fails with exit 3
    let o = sectors(d.path(), &["verify", "--set", "tol.delta=1e-12"]);
    assert_eq!(code(&o), 3);
}
