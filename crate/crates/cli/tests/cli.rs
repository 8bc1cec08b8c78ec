use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn sigpath(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sigpath")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn two_segments_have_unit_area() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "s.csv", "t,x,y\n0,0,0\n1,1,0\n2,1,1\n");
    let v = json(&sigpath(&["sig", "--depth", "3", &f]));
    assert_eq!(v["coefficients"]["1,2"], 1.0);
    assert_eq!(v["coefficients"]["2,1"], 0.0);
    assert_eq!(v["coefficients"]["1,1"], 0.5);
    assert_eq!(v["d"], 2);
}

#[test]
fn unit_square_log_signature() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "sq.csv", "t,x,y\n0,0,0\n1,1,0\n2,1,1\n3,0,1\n4,0,0\n");
    let v = json(&sigpath(&["logsig", "--depth", "2", &f]));
    let area = v["coordinates"]["[1,2]"].as_f64().unwrap();
    assert!((area - 1.0).abs() < 1e-12, "{area}");
    assert!(v["coordinates"]["1"].as_f64().unwrap().abs() < 1e-12);
}

#[test]
fn signature_output_parses_back() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "s.csv", "t,x\n0,0\n0.5,2\n1,-1\n");
    let out = dir.path().join("sig.json");
    let run = sigpath(&["sig", "--depth", "4", "--transform", "time", &f, "-o", out.to_str().unwrap()]);
    assert!(run.status.success() && run.stdout.is_empty());
    let t: sigpath::TruncatedTensor = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(t.dim(), 2);
    assert_eq!(t.depth(), 4);
    let s = sigpath::streams::read_csv_file(&f).unwrap().transform(sigpath::Transform::Time).signature(4);
    assert_eq!(t.levels(), s.levels());
}

#[test]
fn no_arguments_is_a_usage_error() {
    assert_eq!(sigpath(&[]).status.code(), Some(2));
    assert_eq!(sigpath(&["sig"]).status.code(), Some(2));
    assert_eq!(sigpath(&["sig", "--depth", "2", "--transform", "sideways", "x.csv"]).status.code(), Some(2));
}

#[test]
fn bad_input_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "bad.csv", "t,x\n0,0\n0,1\n");
    let out = sigpath(&["sig", "--depth", "2", &f]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    let f = write(dir.path(), "nan.csv", "t,x\n0,0\n1,abc\n");
    assert_eq!(sigpath(&["sig", "--depth", "2", &f]).status.code(), Some(3));
    assert_eq!(sigpath(&["sig", "--depth", "2", "/no/such/file.csv"]).status.code(), Some(3));
}

#[test]
fn development_of_a_stream() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "s.csv", "t,x,y\n0,0,0\n1,0.3,-0.2\n2,1,0.5\n");
    let p = write(
        dir.path(),
        "p.json",
        r#"{"u":2,"generators":[[[[0,0],[1,0]],[[1,0],[0,0]]],[[[0,0],[0,-1]],[[0,1],[0,0]]]]}"#,
    );
    let v = json(&sigpath(&["develop", "--policy", &p, &f]));
    assert!(v["unitarity_defect"].as_f64().unwrap() < 1e-12);
    assert_eq!(v["psi"].as_array().unwrap().len(), 2);
}

#[test]
fn log_ode_tracks_the_exact_solution() {
    let dir = tempfile::tempdir().unwrap();
    let rows: String = (0..=64)
        .map(|i| {
            let t = i as f64 / 64.0;
            format!("{t},{},{}\n", (3.0 * t).sin(), t * t)
        })
        .collect();
    let f = write(dir.path(), "drv.csv", &format!("t,x,y\n{rows}"));
    let sys = write(dir.path(), "sys.json", r#"{"m":2,"d":2,"matrices":[[[0,-1],[1,0]],[[0.5,0],[0,-0.3]]]}"#);
    let v = json(&sigpath(&["logode", "--depth", "3", "--steps", "8", "--system", &sys, "--y0", "1,-0.5", &f]));
    let last = v["states"].as_array().unwrap().last().unwrap().as_array().unwrap().clone();
    let exact = v["exact_final"].as_array().unwrap();
    for (a, b) in last.iter().zip(exact) {
        assert!((a.as_f64().unwrap() - b.as_f64().unwrap()).abs() < 1e-3);
    }
}

#[test]
fn expected_signature_at_the_centre() {
    let v = json(&sigpath(&["expsig", "--domain", "disk:1.0", "--h", "0.05", "--depth", "3"]));
    assert!((v["values"]["1,1"].as_f64().unwrap() - 0.25).abs() < 1e-3);
    assert!(v["values"]["1,2,2"].as_f64().unwrap().abs() < 1e-10);
    assert!(v["radius"].is_array());
}

#[test]
fn monte_carlo_is_reproducible() {
    let args = ["expsig-mc", "--paths", "300", "--dt", "0.001", "--seed", "7", "--depth", "2"];
    let a = sigpath(&args);
    let b = sigpath(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    let (m, s) = (v["mean"]["1,1"].as_f64().unwrap(), v["stderr"]["1,1"].as_f64().unwrap());
    assert!((m - 0.25).abs() < 5.0 * s + 0.01, "{m} ± {s}");
    assert_eq!(sigpath(&["expsig-mc", "--paths", "10", "--dt", "0.01"]).status.code(), Some(2));
}

#[test]
fn fit_and_score_on_synthetic_data() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train");
    let test = dir.path().join("test");
    for (d, seed) in [(&train, "1"), (&test, "2")] {
        json(&sigpath(&["gen-synth", "--streams", "200", "--steps", "30", "--seed", seed, "--out", d.to_str().unwrap()]));
    }
    let model = dir.path().join("model.json");
    let p = |d: &Path, f: &str| d.join(f).to_str().unwrap().to_string();
    for method in ["ridge", "lasso"] {
        let fit = sigpath(&[
            "fit",
            "--depth",
            "2",
            "--method",
            method,
            "--lambda",
            "0.001",
            &p(&train, "manifest.csv"),
            &p(&train, "labels.csv"),
            "-o",
            model.to_str().unwrap(),
        ]);
        assert!(fit.status.success(), "{}", String::from_utf8_lossy(&fit.stderr));
        let first = sigpath(&["score", model.to_str().unwrap(), &p(&test, "manifest.csv"), &p(&test, "labels.csv")]);
        let report = json(&first);
        assert!(report["accuracy"].as_f64().unwrap() > 0.8, "{method}: {report}");
        assert!(report["auc"].as_f64().unwrap() > 0.85);
        let again = sigpath(&["score", model.to_str().unwrap(), &p(&test, "manifest.csv"), &p(&test, "labels.csv")]);
        assert_eq!(first.stdout, again.stdout);
    }
}

#[test]
fn synthetic_generation_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        json(&sigpath(&["gen-synth", "--streams", "6", "--steps", "10", "--seed", "4", "--out", d.to_str().unwrap()]));
    }
    for f in ["stream_0003.csv", "labels.csv", "manifest.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn p_variation_estimates() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.csv", "t,x\n0,0\n1,1\n2,0\n");
    let b = write(dir.path(), "b.csv", "t,x\n0,0\n1,0.5\n2,0\n");
    let v = json(&sigpath(&["dpdist", "--p", "2", "--levels", "4", &a, &b]));
    let est: Vec<f64> = v["estimates"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!(est.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    assert!(est.last().unwrap() > &0.0);
}
