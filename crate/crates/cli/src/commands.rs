use std::fs;
use std::path::Path;

use ndarray::{Array2, Axis};
use qbvine::data::{load_csv, write_csv, Dataset};
use qbvine::model::{ConditionalModel, QbVineConfig, QbVineModel, SavedModel, Task};
use qbvine::scoring::{log_predictive_report, ScoreReport};
use serde::Serialize;

use crate::args::{Command, DataArgs, GlobalArgs, TaskArg};
use crate::bench;
use crate::error::{CliError, CliResult};
use crate::manifest::{Recorder, RunManifest};

pub const MODEL_FILE: &str = "model.json";
pub const REPORT_FILE: &str = "fit_report.json";

/// Mean score with a band of two standard errors over rows.
#[derive(Debug, Clone, Serialize)]
pub struct ScoreSummary {
    pub n_rows: usize,
    pub mean: f64,
    pub std_error: f64,
    pub lower: f64,
    pub upper: f64,
}

impl From<&ScoreReport> for ScoreSummary {
    fn from(r: &ScoreReport) -> Self {
        let se = r.std_error();
        Self { n_rows: r.n_points, mean: r.mean, std_error: se, lower: r.mean - 2.0 * se, upper: r.mean + 2.0 * se }
    }
}

pub fn load_config(global: &GlobalArgs) -> CliResult<QbVineConfig> {
    let mut config = match &global.config {
        None => QbVineConfig::default(),
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
            match path.extension().and_then(|e| e.to_str()) {
                Some("toml") => toml::from_str(&text)
                    .map_err(|e| CliError::usage(format!("{}: {}", path.display(), e.message())))?,
                Some("json") => serde_json::from_str(&text)
                    .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?,
                _ => return Err(CliError::usage(format!("{}: config must be .toml or .json", path.display()))),
            }
        }
    };
    if let Some(seed) = global.seed {
        config.seed = seed;
    }
    config.validate().map_err(|e| CliError::usage(e.to_string()))?;
    Ok(config)
}

fn load_data(args: &DataArgs) -> CliResult<Dataset> {
    if !args.delimiter.is_ascii() {
        return Err(CliError::usage(format!("delimiter {:?} is not a single byte", args.delimiter)));
    }
    Ok(load_csv(&args.data, !args.no_header, args.delimiter as u8)?)
}

/// Resolves a header name or 1-based column index.
fn resolve_column(ds: &Dataset, target: &str) -> CliResult<usize> {
    if let Some(j) = ds.column_names().iter().position(|c| c == target) {
        return Ok(j);
    }
    match target.parse::<usize>() {
        Ok(j) if (1..=ds.n_cols()).contains(&j) => Ok(j - 1),
        _ => Err(CliError::usage(format!("no column `{target}` among {} columns", ds.n_cols()))),
    }
}

fn split_target(ds: &Dataset, target: usize) -> (Array2<f64>, Vec<f64>, Vec<String>) {
    let keep: Vec<usize> = (0..ds.n_cols()).filter(|&j| j != target).collect();
    let x = ds.values().select(Axis(1), &keep);
    let y = ds.column(target).to_vec();
    let names = keep.iter().map(|&j| ds.column_names()[j].clone()).collect();
    (x, y, names)
}

fn write_column(rec: &mut Recorder, name: &str, header: &[&str], columns: &[Vec<f64>]) -> CliResult<()> {
    let n = columns.first().map_or(0, Vec::len);
    let values = Array2::from_shape_fn((n, columns.len()), |(i, j)| columns[j][i]);
    let path = rec.output_path(name);
    let header: Vec<String> = header.iter().map(|h| h.to_string()).collect();
    write_csv(&path, &header, values.view())?;
    rec.record_output(&path)
}

fn config_value(config: &QbVineConfig) -> serde_json::Value {
    serde_json::to_value(config).expect("config serializes")
}

fn save_model(rec: &mut Recorder, json: &str) -> CliResult<()> {
    rec.write_text(MODEL_FILE, json).map(|_| ())
}

pub fn run(command: &Command, global: &GlobalArgs) -> CliResult<RunManifest> {
    fs::create_dir_all(&global.out).map_err(|e| CliError::usage(format!("{}: {e}", global.out.display())))?;
    match command {
        Command::Fit { data } => fit(data, global),
        Command::Density { model, data } => density(model, data, global),
        Command::Sample { model, count } => sample(model, *count, global),
        Command::Predict { model, data, target } => predict(model, data, target.as_deref(), global),
        Command::FitConditional { data, target, task } => fit_conditional(data, target, *task, global),
        Command::BenchGmm { dims, sizes, seeds, train_fraction } => {
            let config = load_config(global)?;
            bench::run(dims, sizes, *seeds, *train_fraction, &config, global)
        }
    }
}

#[derive(Serialize)]
struct JointReport<'a> {
    columns: &'a [String],
    #[serde(flatten)]
    report: &'a qbvine::model::FitReport,
}

fn fit(data: &DataArgs, global: &GlobalArgs) -> CliResult<RunManifest> {
    let config = load_config(global)?;
    let mut rec = Recorder::new("fit", &global.out, config.seed, config_value(&config));
    rec.input(&data.data)?;
    let ds = load_data(data)?;
    rec.stage("load");
    let model = QbVineModel::fit(ds.values().view(), &config)?;
    rec.stage("fit");
    save_model(&mut rec, &model.to_json()?)?;
    rec.write_json(REPORT_FILE, &JointReport { columns: ds.column_names(), report: model.report() })?;
    rec.stage("write");
    rec.finish()
}

fn density(model_path: &Path, data: &DataArgs, global: &GlobalArgs) -> CliResult<RunManifest> {
    let model = match SavedModel::load(model_path)? {
        SavedModel::Joint(m) => m,
        SavedModel::Conditional(_) => {
            return Err(CliError::usage("density needs a joint model; use `predict` for conditional models"))
        }
    };
    let mut rec = Recorder::new("density", &global.out, model.config().seed, config_value(model.config()));
    rec.input(model_path)?;
    rec.input(&data.data)?;
    let ds = load_data(data)?;
    rec.stage("load");
    let log_densities = model.log_density_rows(ds.values().view())?;
    let report = log_predictive_report(&log_densities)?;
    rec.stage("evaluate");
    write_column(&mut rec, "log_density.csv", &["log_density"], &[log_densities])?;
    #[derive(Serialize)]
    struct Summary {
        lps: ScoreSummary,
    }
    rec.write_json("density_summary.json", &Summary { lps: ScoreSummary::from(&report) })?;
    rec.stage("write");
    rec.finish()
}

fn sample(model_path: &Path, count: usize, global: &GlobalArgs) -> CliResult<RunManifest> {
    let model = match SavedModel::load(model_path)? {
        SavedModel::Joint(m) => m,
        SavedModel::Conditional(_) => return Err(CliError::usage("sample needs a joint model")),
    };
    let seed = global.seed.unwrap_or(model.config().seed);
    let mut rec = Recorder::new("sample", &global.out, seed, config_value(model.config()));
    rec.input(model_path)?;
    rec.stage("load");
    let draws = model.sample(count, seed)?;
    rec.stage("sample");
    let header: Vec<String> = (1..=model.dimension()).map(|j| format!("x{j}")).collect();
    let path = rec.output_path("samples.csv");
    write_csv(&path, &header, draws.view())?;
    rec.record_output(&path)?;
    rec.stage("write");
    rec.finish()
}

fn predict(model_path: &Path, data: &DataArgs, target: Option<&str>, global: &GlobalArgs) -> CliResult<RunManifest> {
    let model = match SavedModel::load(model_path)? {
        SavedModel::Conditional(m) => m,
        SavedModel::Joint(_) => {
            return Err(CliError::usage("predict needs a conditional model; use `density` for joint models"))
        }
    };
    let mut rec = Recorder::new("predict", &global.out, model.joint().config().seed, config_value(model.joint().config()));
    rec.input(model_path)?;
    rec.input(&data.data)?;
    let ds = load_data(data)?;
    let (x, y) = match target {
        Some(t) => {
            let (x, y, _) = split_target(&ds, resolve_column(&ds, t)?);
            (x, Some(y))
        }
        None => (ds.values().to_owned(), None),
    };
    if x.ncols() != model.n_features() {
        return Err(CliError::data(format!(
            "model expects {} feature columns, data has {}",
            model.n_features(),
            x.ncols()
        )));
    }
    rec.stage("load");

    #[derive(Serialize, Default)]
    struct Summary {
        task: &'static str,
        n_rows: usize,
        #[serde(skip_serializing_if = "Option::is_none")]
        accuracy: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        conditional_lps: Option<ScoreSummary>,
    }
    let mut summary = Summary { n_rows: x.nrows(), ..Summary::default() };
    match model.task() {
        Task::Classification => {
            summary.task = "classification";
            let preds = x
                .rows()
                .into_iter()
                .map(|r| model.predict_class(&r.to_vec()))
                .collect::<qbvine::Result<Vec<_>>>()?;
            rec.stage("predict");
            if let Some(y) = &y {
                if let Some(bad) = y.iter().find(|v| **v != 0.0 && **v != 1.0) {
                    return Err(CliError::data(format!("class labels must be 0 or 1, found {bad}")));
                }
                let hits = preds.iter().zip(y).filter(|(p, &l)| f64::from(p.label) == l).count();
                summary.accuracy = Some(hits as f64 / y.len() as f64);
            }
            let columns = [
                preds.iter().map(|p| p.prob_positive).collect(),
                preds.iter().map(|p| f64::from(p.label)).collect(),
                preds.iter().map(|p| f64::from(u8::from(p.degenerate))).collect(),
            ];
            write_column(&mut rec, "predictions.csv", &["prob_positive", "label", "degenerate"], &columns)?;
        }
        Task::Regression => {
            summary.task = "regression";
            let y = y.ok_or_else(|| CliError::usage("regression predictions need --target for the observed values"))?;
            let scores = model.conditional_log_density_rows(x.view(), &y)?;
            rec.stage("predict");
            summary.conditional_lps = Some(ScoreSummary::from(&log_predictive_report(&scores)?));
            write_column(&mut rec, "predictions.csv", &["conditional_log_density"], &[scores])?;
        }
    }
    rec.write_json("predict_summary.json", &summary)?;
    rec.stage("write");
    rec.finish()
}

fn fit_conditional(data: &DataArgs, target: &str, task: TaskArg, global: &GlobalArgs) -> CliResult<RunManifest> {
    let config = load_config(global)?;
    let mut rec = Recorder::new("fit-conditional", &global.out, config.seed, config_value(&config));
    rec.input(&data.data)?;
    let ds = load_data(data)?;
    let target_col = resolve_column(&ds, target)?;
    let (x, y, features) = split_target(&ds, target_col);
    rec.stage("load");
    let task = match task {
        TaskArg::Regression => Task::Regression,
        TaskArg::Classification => Task::Classification,
    };
    let model = ConditionalModel::fit(x.view(), &y, task, &config)?;
    rec.stage("fit");
    save_model(&mut rec, &model.to_json()?)?;

    #[derive(Serialize)]
    struct Report<'a> {
        task: Task,
        target: &'a str,
        features: &'a [String],
        negative_fraction: Option<f64>,
        joint: &'a qbvine::model::FitReport,
        feature_model: &'a qbvine::model::FitReport,
    }
    rec.write_json(
        REPORT_FILE,
        &Report {
            task,
            target: &ds.column_names()[target_col],
            features: &features,
            negative_fraction: model.q(),
            joint: model.joint().report(),
            feature_model: model.features().report(),
        },
    )?;
    rec.stage("write");
    rec.finish()
}
