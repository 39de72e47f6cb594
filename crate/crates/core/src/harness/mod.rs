//! Multi-seed experiment orchestration and aggregation.

pub mod config;
pub mod report;

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::benchmarks;
use crate::engine::{
    run_pcts_on, run_random_search_on, run_wait_and_act_on, Algorithm, Recommender, RunConfig, RunTrace,
};
use crate::error::{Error, Result};
use crate::mfpoo::run_mfpoo_on;

pub use config::{parse_config, resolve, Checkpoints, ExperimentSpec, Overrides};
pub use report::{CurvePoint, SummaryRow, TraceRow};

#[derive(Clone, Debug)]
pub struct SuiteResult {
    /// `(seed, trace)` sorted by seed.
    pub traces: Vec<(u64, RunTrace)>,
    pub summary: SummaryRow,
    pub curve: Vec<CurvePoint>,
}

/// Median with the midpoint convention for even counts. Panics on empty input.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

pub fn population_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
}

pub fn summarize(algorithm: Algorithm, template: &RunConfig, traces: &[RunTrace]) -> SummaryRow {
    let finals: Vec<f64> = traces.iter().map(RunTrace::final_value).collect();
    let heights: Vec<f64> = traces.iter().map(|t| t.tree_height as f64).collect();
    let nodes: Vec<f64> = traces.iter().map(|t| t.node_count as f64).collect();
    SummaryRow {
        algorithm: algorithm.to_string(),
        benchmark: template.benchmark.clone(),
        delay: template.delay.to_string(),
        seeds: traces.len(),
        max_final_value: finals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        median_final_value: median(&finals),
        std_final_value: population_std(&finals),
        median_tree_height: median(&heights),
        median_node_count: median(&nodes),
    }
}

/// `(round, cumulative_cost, simple_regret)` view shared by in-memory and
/// parsed traces.
pub trait RegretPoint {
    fn round(&self) -> u64;
    fn cost(&self) -> f64;
    fn regret(&self) -> f64;
}

impl RegretPoint for crate::engine::RoundRecord {
    fn round(&self) -> u64 {
        self.round
    }
    fn cost(&self) -> f64 {
        self.cumulative_cost
    }
    fn regret(&self) -> f64 {
        self.simple_regret
    }
}

impl RegretPoint for TraceRow {
    fn round(&self) -> u64 {
        self.round
    }
    fn cost(&self) -> f64 {
        self.cumulative_cost
    }
    fn regret(&self) -> f64 {
        self.simple_regret
    }
}

/// Regret of the last record at or before each checkpoint; `initial` before
/// the first record.
pub fn sample_regret<P: RegretPoint>(records: &[P], checkpoints: &Checkpoints, initial: f64) -> Vec<f64> {
    let last_before = |ok: &dyn Fn(&P) -> bool| {
        let n = records.partition_point(|r| ok(r));
        if n == 0 {
            initial
        } else {
            records[n - 1].regret()
        }
    };
    match checkpoints {
        Checkpoints::Rounds(cs) => cs.iter().map(|&c| last_before(&|r: &P| r.round() <= c)).collect(),
        Checkpoints::Cost(cs) => cs.iter().map(|&c| last_before(&|r: &P| r.cost() <= c)).collect(),
    }
}

/// Median and envelope of per-seed regret samples at each checkpoint.
pub fn regret_curve<P: RegretPoint>(runs: &[(&[P], f64)], checkpoints: &Checkpoints) -> Vec<CurvePoint> {
    let samples: Vec<Vec<f64>> = runs
        .iter()
        .map(|(records, initial)| sample_regret(records, checkpoints, *initial))
        .collect();
    checkpoints
        .values()
        .into_iter()
        .enumerate()
        .map(|(k, checkpoint)| {
            let at: Vec<f64> = samples.iter().map(|s| s[k]).collect();
            CurvePoint {
                checkpoint,
                median_regret: median(&at),
                min_regret: at.iter().copied().fold(f64::INFINITY, f64::min),
                max_regret: at.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect()
}

/// Runs one seed of the experiment's algorithm. MFPOO reports its selected
/// instance.
pub fn run_one(spec: &ExperimentSpec, seed: u64) -> Result<RunTrace> {
    let bench = benchmarks::by_name(&spec.template.benchmark)?;
    let config = RunConfig {
        seed,
        ..spec.template.clone()
    };
    let result = match spec.algorithm {
        Algorithm::Pcts => run_pcts_on(bench, config),
        Algorithm::WaitAndAct => run_wait_and_act_on(bench, config),
        Algorithm::Random => run_random_search_on(bench, config),
        Algorithm::Mfpoo => run_mfpoo_on(&bench, &config, &spec.mfpoo).map(|o| o.best_trace().clone()),
    };
    result.map_err(|e| Error::Seeded {
        seed,
        source: Box::new(e),
    })
}

pub fn run_suite(spec: &ExperimentSpec) -> Result<SuiteResult> {
    spec.validate()?;
    let mut seeds = spec.seeds.clone();
    seeds.sort_unstable();
    seeds.dedup();
    let run = |&seed: &u64| run_one(spec, seed).map(|t| (seed, t));
    let traces: Vec<(u64, RunTrace)> = if spec.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(spec.jobs)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", spec.jobs)))?;
        pool.install(|| seeds.par_iter().map(run).collect::<Result<_>>())?
    } else {
        seeds.iter().map(run).collect::<Result<_>>()?
    };
    let plain: Vec<RunTrace> = traces.iter().map(|(_, t)| t.clone()).collect();
    let summary = summarize(spec.algorithm, &spec.template, &plain);
    let initial = Recommender::new(&benchmarks::by_name(&spec.template.benchmark)?)
        .current()
        .regret;
    let runs: Vec<(&[crate::engine::RoundRecord], f64)> =
        plain.iter().map(|t| (t.records.as_slice(), initial)).collect();
    let curve = regret_curve(&runs, &spec.checkpoints);
    Ok(SuiteResult {
        traces,
        summary,
        curve,
    })
}

pub fn trace_file_name(seed: u64) -> String {
    format!("trace_seed_{seed}.csv")
}

/// Writes `trace_seed_<seed>.csv` per seed plus `summary.csv` and
/// `curve.csv`; returns the written paths in that order.
pub fn write_outputs(result: &SuiteResult, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    for (seed, trace) in &result.traces {
        let path = dir.join(trace_file_name(*seed));
        report::emit_trace_csv(trace, &path)?;
        written.push(path);
    }
    let summary = dir.join("summary.csv");
    report::emit_summary_csv(std::slice::from_ref(&result.summary), &summary)?;
    written.push(summary);
    let curve = dir.join("curve.csv");
    report::emit_curve_csv(&result.curve, &curve)?;
    written.push(curve);
    Ok(written)
}
