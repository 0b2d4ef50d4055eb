use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qbvine::model::{QbVineModel, SavedModel};
use serde_json::Value;
use tempfile::TempDir;

const QUICK: &str = r#"
n_perms = 3
cv_folds = 3
energy_samples = 40
rho_grid = { start = 0.5, stop = 0.95, count = 6 }
bandwidth_grid = { start = 0.3, stop = 1.0, count = 3, log = true }
"#;

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        let ws = Self { dir: TempDir::new().unwrap() };
        fs::write(ws.path("quick.toml"), QUICK).unwrap();
        ws
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write_csv(&self, name: &str, header: &str, rows: &[Vec<f64>]) -> PathBuf {
        let mut text = format!("{header}\n");
        for r in rows {
            let cells: Vec<String> = r.iter().map(|v| v.to_string()).collect();
            text += &cells.join(",");
            text.push('\n');
        }
        let p = self.path(name);
        fs::write(&p, text).unwrap();
        p
    }

    fn run(&self, out: &str, args: &[&str]) -> Output {
        let config = self.path("quick.toml");
        Command::new(env!("CARGO_BIN_EXE_qbvine"))
            .arg("--config")
            .arg(&config)
            .arg("--out")
            .arg(self.path(out))
            .args(args)
            .output()
            .unwrap()
    }

    fn json(&self, out: &str, file: &str) -> Value {
        serde_json::from_str(&fs::read_to_string(self.path(out).join(file)).unwrap()).unwrap()
    }
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn correlated(n: usize) -> Vec<Vec<f64>> {
    // deterministic quasi-random pairs with positive dependence
    (0..n)
        .map(|i| {
            let a = ((i as f64 + 0.5) / n as f64 - 0.5) * 4.0;
            let b = ((i * 7919 % n) as f64 / n as f64 - 0.5) * 2.0;
            vec![a, 0.7 * a + b]
        })
        .collect()
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn fit_writes_model_report_and_manifest() {
    let ws = Workspace::new();
    let data = ws.write_csv("toy.csv", "a,b", &correlated(60));
    let o = ws.run("fit", &["--seed", "3", "fit", "--data", arg(&data)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let report = ws.json("fit", "fit_report.json");
    assert_eq!(report["columns"], serde_json::json!(["a", "b"]));
    assert_eq!(report["rho"].as_array().unwrap().len(), 2);
    assert_eq!(report["n_obs"], 60);

    let manifest = ws.json("fit", "manifest.json");
    assert_eq!(manifest["command"], "fit");
    assert_eq!(manifest["seed"], 3);
    assert_eq!(manifest["library_version"], qbvine::VERSION);
    let outputs = manifest["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 2);
    assert!(outputs.iter().all(|o| o["sha256"].as_str().unwrap().len() == 64));
    assert_eq!(manifest["inputs"][0]["path"].as_str().unwrap(), arg(&data));

    match SavedModel::load(ws.path("fit").join("model.json")).unwrap() {
        SavedModel::Joint(m) => assert_eq!(m.dimension(), 2),
        SavedModel::Conditional(_) => panic!("expected a joint model"),
    }
}

#[test]
fn same_seed_gives_identical_outputs() {
    let ws = Workspace::new();
    let data = ws.write_csv("toy.csv", "a,b", &correlated(50));
    for out in ["one", "two"] {
        assert_eq!(code(&ws.run(out, &["--seed", "11", "fit", "--data", arg(&data)])), 0);
    }
    for file in ["fit_report.json", "model.json"] {
        let a = fs::read(ws.path("one").join(file)).unwrap();
        let b = fs::read(ws.path("two").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs");
    }
    let hashes = |out: &str| {
        let manifest = ws.json(out, "manifest.json");
        manifest["outputs"].as_array().unwrap().iter().map(|o| o["sha256"].clone()).collect::<Vec<_>>()
    };
    assert_eq!(hashes("one"), hashes("two"));
}

#[test]
fn density_and_sample_use_the_saved_model() {
    let ws = Workspace::new();
    let data = ws.write_csv("toy.csv", "a,b", &correlated(60));
    assert_eq!(code(&ws.run("fit", &["fit", "--data", arg(&data)])), 0);
    let model_path = ws.path("fit").join("model.json");

    let o = ws.run("dens", &["density", "--model", arg(&model_path), "--data", arg(&data)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let model = QbVineModel::load(&model_path).unwrap();
    let values = qbvine::data::load_csv(&data, true, b',').unwrap();
    let expected = model.lps(values.values()).unwrap().mean;
    let summary = ws.json("dens", "density_summary.json");
    assert!((summary["lps"]["mean"].as_f64().unwrap() - expected).abs() < 1e-12);
    let column = qbvine::data::load_csv(ws.path("dens").join("log_density.csv"), true, b',').unwrap();
    assert_eq!(column.n_rows(), 60);

    let o = ws.run("samp", &["--seed", "5", "sample", "--model", arg(&model_path), "--count", "25"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let samples = qbvine::data::load_csv(ws.path("samp").join("samples.csv"), true, b',').unwrap();
    assert_eq!((samples.n_rows(), samples.n_cols()), (25, 2));
    assert_eq!(samples.column_names(), ["x1", "x2"]);
    assert!(samples.values().iter().all(|v| v.is_finite()));
}

#[test]
fn conditional_workflows() {
    let ws = Workspace::new();
    let rows: Vec<Vec<f64>> = correlated(80)
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let label = if r[0] + 0.3 * ((i % 5) as f64 - 2.0) > 0.0 { 1.0 } else { 0.0 };
            vec![r[0], r[1], label]
        })
        .collect();
    let data = ws.write_csv("labelled.csv", "x,z,y", &rows);

    let o = ws.run("cls", &["fit-conditional", "--data", arg(&data), "--target", "y", "--task", "classification"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = ws.json("cls", "fit_report.json");
    assert_eq!(report["target"], "y");
    assert_eq!(report["features"], serde_json::json!(["x", "z"]));
    let q = report["negative_fraction"].as_f64().unwrap();
    assert!(q > 0.0 && q < 1.0);

    let model = ws.path("cls").join("model.json");
    let o = ws.run("pred", &["predict", "--model", arg(&model), "--data", arg(&data), "--target", "3"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary = ws.json("pred", "predict_summary.json");
    assert_eq!(summary["task"], "classification");
    assert!(summary["accuracy"].as_f64().unwrap() > 0.8);
    let preds = qbvine::data::load_csv(ws.path("pred").join("predictions.csv"), true, b',').unwrap();
    assert_eq!(preds.column_names(), ["prob_positive", "label", "degenerate"]);

    let o = ws.run("reg", &["fit-conditional", "--data", arg(&data), "--target", "z", "--task", "regression"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let features = ws.write_csv("features.csv", "x,z,y", &rows);
    let o = ws.run(
        "regpred",
        &["predict", "--model", arg(&ws.path("reg").join("model.json")), "--data", arg(&features), "--target", "z"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary = ws.json("regpred", "predict_summary.json");
    assert_eq!(summary["task"], "regression");
    assert!(summary["conditional_lps"]["mean"].as_f64().unwrap().is_finite());
    assert!(matches!(SavedModel::load(ws.path("reg").join("model.json")).unwrap(), SavedModel::Conditional(_)));
}

#[test]
fn bench_writes_tables() {
    let ws = Workspace::new();
    let o = ws.run("bench", &["--seed", "2", "bench-gmm", "--dims", "2", "--n", "60", "--seeds", "2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(ws.path("bench").join("bench.csv")).unwrap();
    let mut lines = table.lines();
    assert!(lines.next().unwrap().starts_with("d,n,replicates,qbvine"));
    assert!(lines.next().unwrap().starts_with("2,60,2,"));
    let runs = ws.json("bench", "bench.json")["runs"].as_array().unwrap().len();
    assert_eq!(runs, 2);
}

#[test]
fn exit_codes() {
    let ws = Workspace::new();
    let good = ws.write_csv("toy.csv", "a,b", &correlated(40));

    assert_eq!(code(&ws.run("x", &["frobnicate"])), 2);
    assert_eq!(code(&ws.run("x", &["--threads", "0", "fit", "--data", arg(&good)])), 2);
    assert_eq!(code(&ws.run("x", &["fit"])), 2);

    fs::write(ws.path("bad.toml"), "cv_folds = 0\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_qbvine"))
        .args(["--config", arg(&ws.path("bad.toml")), "--out", arg(&ws.path("x")), "fit", "--data", arg(&good)])
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("cv_folds"));

    fs::write(ws.path("typo.toml"), "n_permz = 3\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_qbvine"))
        .args(["--config", arg(&ws.path("typo.toml")), "--out", arg(&ws.path("x")), "fit", "--data", arg(&good)])
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("n_permz"));

    assert_eq!(code(&ws.run("x", &["fit", "--data", arg(&ws.path("missing.csv"))])), 3);
    let constant = ws.write_csv("constant.csv", "a,b", &(0..20).map(|i| vec![1.0, i as f64]).collect::<Vec<_>>());
    let o = ws.run("x", &["fit", "--data", arg(&constant)]);
    assert_eq!(code(&o), 3);
    let record: Value = serde_json::from_str(String::from_utf8_lossy(&o.stderr).trim()).unwrap();
    assert_eq!(record["error"], "data");
    assert_eq!(record["exit_code"], 3);

    fs::write(ws.path("text.csv"), "a,b\n1,2\n3,abc\n").unwrap();
    assert_eq!(code(&ws.run("x", &["fit", "--data", arg(&ws.path("text.csv"))])), 3);

    let o = ws.run("x", &["predict", "--model", arg(&ws.path("missing.json")), "--data", arg(&good)]);
    assert_eq!(code(&o), 3);
}

#[test]
fn numerical_failures_map_to_their_own_code() {
    let e = qbvine_cli::CliError::from(qbvine::Error::NoConvergence { iterations: 200, residual: 1e-3 });
    assert_eq!(e.exit_code(), 4);
    assert!(e.record().contains("\"numerical\""));
    let e = qbvine_cli::CliError::from(qbvine::Error::Degenerate("x".into()));
    assert_eq!(e.exit_code(), 3);
}
