use std::fmt::Write as _;

use qbvine::data::{gmm_generate, split, GmmSpec};
use qbvine::model::{DiagonalGaussian, QbVineConfig, QbVineModel};
use qbvine::rng::derive_seed;
use serde::Serialize;

use crate::args::GlobalArgs;
use crate::error::{CliError, CliResult};
use crate::manifest::{Recorder, RunManifest};

/// Test-set log predictive scores of one replicate.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRun {
    pub d: usize,
    pub n: usize,
    pub replicate: usize,
    pub seed: u64,
    pub qbvine: f64,
    pub indep_baseline: f64,
    pub gaussian_baseline: f64,
    pub oracle: f64,
}

/// Mean and two standard errors across replicates.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Band {
    pub mean: f64,
    pub two_se: f64,
}

impl Band {
    fn of(values: &[f64]) -> Self {
        let k = values.len() as f64;
        let mean = values.iter().sum::<f64>() / k;
        let two_se = if values.len() < 2 {
            f64::NAN
        } else {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
            2.0 * (var / k).sqrt()
        };
        Self { mean, two_se }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub d: usize,
    pub n: usize,
    pub replicates: usize,
    pub qbvine: Band,
    pub indep_baseline: Band,
    pub gaussian_baseline: Band,
    pub oracle: Band,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchResults {
    pub train_fraction: f64,
    pub rows: Vec<BenchRow>,
    pub runs: Vec<BenchRun>,
}

fn mean_neg(values: impl Iterator<Item = f64>) -> f64 {
    let (mut total, mut count) = (0.0, 0usize);
    for v in values {
        total -= v;
        count += 1;
    }
    total / count as f64
}

/// Generates, splits, fits and scores one replicate.
pub fn run_one(d: usize, n: usize, replicate: usize, train_fraction: f64, config: &QbVineConfig) -> CliResult<BenchRun> {
    let seed = derive_seed(config.seed, &[d as u64, n as u64, replicate as u64]);
    let spec = GmmSpec::random(d, seed)?;
    let (data, oracle) = gmm_generate(&spec, n, seed)?;
    let parts = split(&data, train_fraction, seed)?;
    let (train, test) = (parts.train.values(), parts.test.values());
    let model = QbVineModel::fit(train.view(), &QbVineConfig { seed, ..config.clone() })?;
    let gaussian = DiagonalGaussian::fit(train.view())?;
    let rows: Vec<Vec<f64>> = test.rows().into_iter().map(|r| r.to_vec()).collect();
    let qbvine = mean_neg(model.log_density_rows(test.view())?.into_iter());
    let indep = rows.iter().map(|r| model.independent_log_density(r)).collect::<qbvine::Result<Vec<f64>>>()?;
    Ok(BenchRun {
        d,
        n,
        replicate,
        seed,
        qbvine,
        indep_baseline: mean_neg(indep.into_iter()),
        gaussian_baseline: mean_neg(rows.iter().map(|r| gaussian.log_density(r))),
        oracle: mean_neg(rows.iter().map(|r| oracle.log_density(r))),
    })
}

pub fn summarize(runs: &[BenchRun]) -> Vec<BenchRow> {
    let mut keys: Vec<(usize, usize)> = runs.iter().map(|r| (r.d, r.n)).collect();
    keys.dedup();
    keys.into_iter()
        .map(|(d, n)| {
            let group: Vec<&BenchRun> = runs.iter().filter(|r| r.d == d && r.n == n).collect();
            let col = |f: fn(&BenchRun) -> f64| Band::of(&group.iter().map(|r| f(r)).collect::<Vec<_>>());
            BenchRow {
                d,
                n,
                replicates: group.len(),
                qbvine: col(|r| r.qbvine),
                indep_baseline: col(|r| r.indep_baseline),
                gaussian_baseline: col(|r| r.gaussian_baseline),
                oracle: col(|r| r.oracle),
            }
        })
        .collect()
}

pub fn table_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(
        "d,n,replicates,qbvine,qbvine_2se,indep_baseline,indep_baseline_2se,gaussian_baseline,gaussian_baseline_2se,oracle,oracle_2se\n",
    );
    for r in rows {
        let _ = write!(out, "{},{},{}", r.d, r.n, r.replicates);
        for b in [r.qbvine, r.indep_baseline, r.gaussian_baseline, r.oracle] {
            let _ = write!(out, ",{},{}", b.mean, b.two_se);
        }
        out.push('\n');
    }
    out
}

pub fn runs_csv(runs: &[BenchRun]) -> String {
    let mut out = String::from("d,n,replicate,seed,qbvine,indep_baseline,gaussian_baseline,oracle\n");
    for r in runs {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.d, r.n, r.replicate, r.seed, r.qbvine, r.indep_baseline, r.gaussian_baseline, r.oracle
        );
    }
    out
}

pub fn run(
    dims: &[usize],
    sizes: &[usize],
    seeds: usize,
    train_fraction: f64,
    config: &QbVineConfig,
    global: &GlobalArgs,
) -> CliResult<RunManifest> {
    if dims.is_empty() || sizes.is_empty() || seeds == 0 {
        return Err(CliError::usage("bench-gmm needs at least one dimension, size and seed"));
    }
    let mut rec = Recorder::new("bench-gmm", &global.out, config.seed, serde_json::to_value(config).expect("config"));
    let mut runs = Vec::new();
    for &d in dims {
        for &n in sizes {
            for s in 0..seeds {
                runs.push(run_one(d, n, s, train_fraction, config)?);
                rec.stage(&format!("d={d} n={n} replicate={s}"));
            }
        }
    }
    let rows = summarize(&runs);
    rec.write_text("bench.csv", &table_csv(&rows))?;
    rec.write_text("bench_runs.csv", &runs_csv(&runs))?;
    rec.write_json("bench.json", &BenchResults { train_fraction, rows, runs })?;
    rec.finish()
}
