use std::path::Path;
use std::process::{Command, Output};

fn hermanlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hermanlab")).current_dir(dir).args(args).output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn cfrac_expand_prints_convergents() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&hermanlab(dir.path(), &["cfrac", "expand", "--theta", "[0;3,(1,2)]", "--depth", "5"]));
    assert_eq!(v["partial_quotients"], serde_json::json!([3, 1, 2, 1, 2]));
    assert_eq!(v["q"], serde_json::json!([1, 3, 4, 11, 15, 41]));
}

#[test]
fn malformed_theta_exits_2_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["trace", "--map", "preset:fig1-f22", "--theta", "[0;1,x]", "--out", "c.csv"][..],
        &["trace", "--map", "blaschke:2:0.6", "--theta", "0.25", "--out", "c.csv"],
        &["tune", "--d0", "2", "--dinf", "2", "--theta", "nope"],
        &["render", "--map", "blaschke:2:0.6", "--theta", "golden", "--res", "8", "--out", "f.gif"],
        &["pipeline", "--preset", "fig1-f32", "--out", "run", "--print-config", "--config", "x.json"],
    ] {
        let out = hermanlab(dir.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let mut cfg: serde_json::Value =
        json(&hermanlab(dir.path(), &["pipeline", "--preset", "fig1-f22", "--print-config"]));
    cfg["theta"] = "[0;1,1,x]".into();
    std::fs::write(dir.path().join("bad.json"), cfg.to_string()).unwrap();
    let out = hermanlab(dir.path(), &["pipeline", "--config", "bad.json", "--out", "run"]);
    assert_eq!(out.status.code(), Some(2));
    let left: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(left, vec![std::ffi::OsString::from("bad.json")]);
}

#[test]
fn printed_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let first = hermanlab(dir.path(), &["pipeline", "--preset", "fig1-f32", "--print-config"]);
    std::fs::write(dir.path().join("run.json"), &first.stdout).unwrap();
    let second = hermanlab(dir.path(), &["pipeline", "--config", "run.json", "--print-config"]);
    assert!(second.status.success());
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn trace_geometry_dims_render_porosity() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let t = json(&hermanlab(d, &["trace", "--map", "tuned:2:2", "--theta", "golden", "--depth", "21", "--out", "c.csv"]));
    assert_eq!(t["points"], 17711);
    let g = json(&hermanlab(
        d,
        &["geometry", "--curve", "c.csv", "--theta", "golden", "--criticality", "2,2", "--report", "g.json"],
    ));
    assert!((g["angle"]["angle"].as_f64().unwrap() - std::f64::consts::PI).abs() < 0.0175);
    assert!(d.join("g.json").exists());
    let dims = json(&hermanlab(d, &["dims", "--points", "c.csv"]));
    assert!((dims["dimension"].as_f64().unwrap() - 1.0).abs() < 0.02);
    let r = json(&hermanlab(
        d,
        &[
            "render", "--map", "tuned:2:2", "--theta", "golden", "--window=-2,-2,2,2", "--res", "64", "--maxiter",
            "200", "--overlay", "c.csv", "--preimages", "1", "--out", "f.ppm", "--grid", "g.bin",
        ],
    ));
    assert_eq!(r["width"], 64);
    let ppm = std::fs::read(d.join("f.ppm")).unwrap();
    assert!(ppm.starts_with(b"P6\n64 64\n255\n"));
    assert_eq!(ppm.len(), 13 + 64 * 64 * 3);
    let p = json(&hermanlab(d, &["porosity", "--grid", "g.bin", "--center", "0", "--curve", "c.csv", "--radii", "1,0.5"]));
    assert_eq!(p["ratios"].as_array().unwrap().len(), 2);
}

#[test]
fn renorm_commands() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let r = json(&hermanlab(d, &["renorm", "ratios", "--map", "rotation", "--theta", "silver", "--depth", "8", "--out", "r.csv"]));
    assert_eq!(r["levels"], 9);
    let csv = std::fs::read_to_string(d.join("r.csv")).unwrap();
    assert!(csv.starts_with("n,re,im,abs,ratio_product\n"));
    let p = json(&hermanlab(d, &["renorm", "pairs", "--map", "tuned:2:2", "--theta", "silver", "--from", "2", "--to", "5"]));
    for row in p["pairs"].as_array().unwrap() {
        assert_eq!(row["chi"], 2);
    }
}
