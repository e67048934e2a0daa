use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use swaptest_core::experiment::ExperimentConfig;
use swaptest_core::model::auc;

fn swaptest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swaptest")).args(args).output().expect("binary runs")
}

fn ok_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("one JSON line on stdout")
}

fn error_json(out: &Output) -> Value {
    assert!(!out.status.success());
    let line = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(line.trim()).unwrap_or_else(|_| panic!("stderr is not JSON: {line}"))
}

fn small_config(dir: &Path) -> std::path::PathBuf {
    let mut cfg = ExperimentConfig { output_dir: "out".into(), seed: 5, ..Default::default() };
    // Strong disease effects so a few epochs give correctly classified swap references.
    cfg.phantom.subjects_per_class = 16;
    cfg.phantom.atrophy_factor = [0.5, 0.7];
    cfg.phantom.ventricle_enlargement = [1.3, 1.6];
    cfg.train.epochs = 15;
    cfg.explain.n_references = 2;
    cfg.axioms.n_images = 3;
    cfg.axioms.n_perturbations = 2;
    let path = dir.join("experiment.json");
    std::fs::write(&path, serde_json::to_vec_pretty(&cfg).unwrap()).unwrap();
    path
}

#[test]
fn default_config_round_trips() {
    let v = ok_json(&swaptest(&["default-config"]));
    let cfg: ExperimentConfig = serde_json::from_value(v).unwrap();
    assert_eq!(cfg, ExperimentConfig::default());
}

#[test]
fn usage_errors_are_machine_readable() {
    let out = swaptest(&["explain", "--config", "x.json", "--scan", "a", "--method", "saliency"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"], "usage");
}

#[test]
fn missing_config_is_an_io_error() {
    let out = swaptest(&["generate", "--config", "/nonexistent/experiment.json"]);
    assert_eq!(out.status.code(), Some(1));
    let e = error_json(&out);
    assert_eq!(e["error"], "io");
    assert!(e["message"].as_str().unwrap().contains("/nonexistent/experiment.json"));
}

#[test]
fn full_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let config = config.to_str().unwrap();
    let out = dir.path().join("out");

    let g = ok_json(&swaptest(&["generate", "--config", config]));
    let manifest = std::fs::read(out.join("manifest.json")).unwrap();
    let m: Value = serde_json::from_slice(&manifest).unwrap();
    let scans = m["scans"].as_array().unwrap();
    assert_eq!(g["scans"].as_u64().unwrap() as usize, scans.len());
    for s in scans {
        let v = std::fs::read(out.join(s["volume"].as_str().unwrap())).unwrap();
        assert_eq!(&v[..8], b"VVOL0001");
    }
    ok_json(&swaptest(&["generate", "--config", config]));
    assert_eq!(std::fs::read(out.join("manifest.json")).unwrap(), manifest, "re-run must be byte-identical");

    let t = ok_json(&swaptest(&["train", "--config", config]));
    assert_eq!(&std::fs::read(out.join("model.vckpt")).unwrap()[..8], b"VCKPT001");
    assert!(t["temperature"].as_f64().unwrap() > 0.0);
    let scores = std::fs::read_to_string(out.join("test_scores.csv")).unwrap();
    let (mut p, mut pos) = (Vec::new(), Vec::new());
    for line in scores.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        pos.push(f[1] == "AD");
        p.push(f[2].parse::<f64>().unwrap());
    }
    assert_eq!(auc(&p, &pos).unwrap(), t["test_auc"].as_f64().unwrap());
    let epochs = std::fs::read_to_string(out.join("train_loss.csv")).unwrap();
    assert_eq!(epochs.lines().count(), 16);

    let test_scan = scans.iter().find(|s| s["split"] == "test").unwrap()["id"].as_str().unwrap().to_string();
    for (method, extra) in [("swap", None), ("occlusion", Some("--reversed"))] {
        let mut args = vec!["explain", "--config", config, "--scan", &test_scan, "--method", method, "--plane", "coronal", "--slices", "7"];
        args.extend(extra);
        let e = ok_json(&swaptest(&args));
        let hm = std::fs::read(e["heatmap"].as_str().unwrap()).unwrap();
        assert_eq!(&hm[..8], b"VHMP0001");
        let ppm = std::fs::read(e["montage"].as_str().unwrap()).unwrap();
        // 7 coronal slices of a 32^3 volume: 5 columns by 2 rows of 32 x 32 tiles.
        let header = b"P6\n160 64\n255\n";
        assert_eq!(&ppm[..header.len()], header);
        assert_eq!(ppm.len(), header.len() + 3 * 160 * 64);
    }

    let missing = swaptest(&["explain", "--config", config, "--scan", "nope"]);
    assert_eq!(error_json(&missing)["error"], "invalid_argument");

    let a = ok_json(&swaptest(&["axioms", "--config", config]));
    let csv = std::fs::read_to_string(out.join("axioms.csv")).unwrap();
    assert!(csv.starts_with("image,scan_id,method,metric,value\n"));
    for method in a["methods"].as_array().unwrap() {
        let name = method["method"].as_str().unwrap();
        let values: Vec<f64> = csv
            .lines()
            .filter(|l| l.contains(&format!(",{name},continuity,")))
            .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
            .collect();
        assert_eq!(values.len(), 3);
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        assert_eq!(mean, method["continuity_mean"].as_f64().unwrap());
    }
    assert!(csv.contains(",swap,") && csv.contains(",occlusion,"));
    ok_json(&swaptest(&["axioms", "--config", config]));
    assert_eq!(std::fs::read_to_string(out.join("axioms.csv")).unwrap(), csv);
}
