//! Experiment configuration: presets, config files (TOML or JSON) and flag
//! overrides, resolved into one [`ExperimentSpec`].
//!
//! Precedence, lowest first: built-in defaults, preset, file, flags, and
//! `PCTS_OUT_DIR` for the output directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::benchmarks::{self, Benchmark};
use crate::engine::{Algorithm, Budget, RunConfig};
use crate::error::{Error, Result};
use crate::mfpoo::MfpooOptions;
use crate::policy::{PolicyKind, PolicyParams};
use crate::sim::{CostModel, DelayModel, FidelityModel, NoiseKind};

pub const OUT_DIR_ENV: &str = "PCTS_OUT_DIR";

const DEFAULT_ROUNDS: u64 = 300;
const DEFAULT_CHECKPOINTS: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Checkpoints {
    Rounds(Vec<u64>),
    Cost(Vec<f64>),
}

impl Checkpoints {
    pub fn len(&self) -> usize {
        match self {
            Checkpoints::Rounds(v) => v.len(),
            Checkpoints::Cost(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            Checkpoints::Rounds(v) => v.iter().map(|&r| r as f64).collect(),
            Checkpoints::Cost(v) => v.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let increasing = match self {
            Checkpoints::Rounds(v) => v.windows(2).all(|w| w[0] < w[1]),
            Checkpoints::Cost(v) => v.windows(2).all(|w| w[0] < w[1]) && v.iter().all(|c| c.is_finite()),
        };
        if increasing {
            Ok(())
        } else {
            Err(Error::UnsortedCheckpoints)
        }
    }

    /// Evenly spaced grid ending at the budget.
    pub fn evenly_spaced(budget: &Budget, count: usize) -> Self {
        match *budget {
            Budget::Rounds(t) => {
                let mut v: Vec<u64> = (1..=count as u64).map(|k| t * k / count as u64).filter(|&r| r > 0).collect();
                v.dedup();
                Checkpoints::Rounds(v)
            }
            Budget::Cost(c) => Checkpoints::Cost((1..=count).map(|k| c * k as f64 / count as f64).collect()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub template: RunConfig,
    pub algorithm: Algorithm,
    pub seeds: Vec<u64>,
    pub checkpoints: Checkpoints,
    pub out_dir: Option<PathBuf>,
    pub mfpoo: MfpooOptions,
    /// Worker threads for independent seeds; 1 runs them in order.
    pub jobs: usize,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::EmptySeeds);
        }
        self.checkpoints.validate()?;
        self.template.validate()?;
        if self.algorithm == Algorithm::Mfpoo && !(self.mfpoo.rho_max > 0.0 && self.mfpoo.rho_max < 1.0) {
            return Err(Error::RhoOutOfRange(self.mfpoo.rho_max));
        }
        if self.algorithm == Algorithm::WaitAndAct && matches!(self.template.delay, DelayModel::Geometric(_)) {
            return Err(Error::NonConstantDelay(self.template.delay.to_string()));
        }
        Ok(())
    }
}

/// Every user-settable knob, all optional. Field names double as config-file
/// keys; flags map onto the same names.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub preset: Option<String>,
    pub benchmark: Option<String>,
    pub algo: Option<String>,
    pub policy: Option<String>,
    pub sigma2: Option<f64>,
    /// Noise std assumed by ucb1-sigma; defaults to `sqrt(sigma2)`.
    pub sigma: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
    pub nu1: Option<f64>,
    pub rho: Option<f64>,
    pub nu_max: Option<f64>,
    pub rho_max: Option<f64>,
    pub include_rho_max: Option<bool>,
    pub delay: Option<String>,
    pub noise: Option<String>,
    pub fidelity: Option<String>,
    pub zeta0: Option<f64>,
    pub cost_model: Option<String>,
    pub budget_cost: Option<f64>,
    pub budget_rounds: Option<u64>,
    pub seeds: Option<Vec<u64>>,
    pub checkpoints: Option<Vec<f64>>,
    /// `rounds` (default) or `cost`.
    pub checkpoint_axis: Option<String>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
}

macro_rules! layer {
    ($dst:ident, $src:ident; $($f:ident),*) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl Overrides {
    /// Fields set in `other` replace those in `self`.
    pub fn merge(mut self, other: &Overrides) -> Overrides {
        layer!(self, other; preset, benchmark, algo, policy, sigma2, sigma, b, c, nu1, rho, nu_max,
            rho_max, include_rho_max, delay, noise, fidelity, zeta0, cost_model, budget_cost,
            budget_rounds, seeds, checkpoints, checkpoint_axis, out, jobs);
        self
    }
}

/// Reproduction settings for one benchmark.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Preset {
    pub benchmark: &'static str,
    pub delay: DelayModel,
    pub rounds: u64,
    pub nu1: f64,
    pub rho: f64,
    pub b: f64,
}

// smoothness and range proxies chosen on held-out seeds, per benchmark
const TUNED: [(&str, f64, f64, f64); 6] = [
    ("hartmann3", 0.1, 0.95, 0.05),
    ("hartmann6", 1.0, 0.7, 0.05),
    ("currin", 1.0, 0.95, 0.2),
    ("borehole", 10.0, 0.85, 1.0),
    ("branin", 0.3, 0.85, 0.2),
    ("schwefel", 100.0, 0.3, 10.0),
];

// geometric-delay runs are shorter; these replace the rows above for `-geo`
const TUNED_GEO: [(&str, f64, f64, f64); 1] = [("branin", 0.1, 0.7, 1.0)];

/// `<benchmark>-paper`: constant delay 4, 300 rounds. `<benchmark>-geo`:
/// geometric delay with mean 10, 190 rounds. Both use the benchmark's noise
/// level and fidelity on.
pub fn preset(name: &str) -> Result<Preset> {
    let unknown = || Error::UnknownPreset(name.to_string());
    let (bench, kind) = name.rsplit_once('-').ok_or_else(unknown)?;
    let canonical = benchmarks::by_name(bench).map_err(|_| unknown())?.name;
    let geo = if kind == "geo" { &TUNED_GEO[..] } else { &[] };
    let &(benchmark, nu1, rho, b) = geo
        .iter()
        .chain(TUNED.iter())
        .find(|t| t.0 == canonical)
        .ok_or_else(unknown)?;
    let (delay, rounds) = match kind {
        "paper" => (DelayModel::Constant(4), 300),
        "geo" => (DelayModel::Geometric(10.0), 190),
        _ => return Err(unknown()),
    };
    Ok(Preset {
        benchmark,
        delay,
        rounds,
        nu1,
        rho,
        b,
    })
}

pub fn preset_names() -> Vec<String> {
    benchmarks::NAMES
        .iter()
        .flat_map(|b| [format!("{b}-paper"), format!("{b}-geo")])
        .collect()
}

/// Reads a config file. `.json` files are JSON; anything else is TOML. Keys
/// may sit at top level or under `[experiment]` / `[run]` sections.
pub fn read_config_file(path: &Path) -> Result<Overrides> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    parse_config_text(&text, is_json).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn parse_config_text(text: &str, json: bool) -> Result<Overrides> {
    let value: serde_json::Value = if json {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?
    } else {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        serde_json::to_value(table).map_err(|e| Error::Config(e.to_string()))?
    };
    let serde_json::Value::Object(mut top) = value else {
        return Err(Error::Config("config must be a table of keys".into()));
    };
    let mut flat = serde_json::Map::new();
    for section in ["experiment", "run"] {
        match top.remove(section) {
            Some(serde_json::Value::Object(inner)) => flat.extend(inner),
            Some(_) => return Err(Error::Config(format!("`{section}` must be a section"))),
            None => {}
        }
    }
    for (k, v) in top {
        flat.insert(k, v);
    }
    serde_json::from_value(serde_json::Value::Object(flat)).map_err(|e| Error::Config(e.to_string()))
}

fn parse_fidelity(s: &str) -> Result<bool> {
    match s.to_ascii_lowercase().as_str() {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("fidelity must be on or off, got `{s}`"))),
    }
}

/// Resolves overrides using the process environment for `PCTS_OUT_DIR`.
pub fn parse_config(overrides: &Overrides) -> Result<ExperimentSpec> {
    resolve(overrides, std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
}

/// Resolves overrides into a validated spec; `env_out` replaces `out`.
pub fn resolve(overrides: &Overrides, env_out: Option<PathBuf>) -> Result<ExperimentSpec> {
    let preset = overrides.preset.as_deref().map(preset).transpose()?;
    let bench_name = overrides
        .benchmark
        .clone()
        .or_else(|| preset.map(|p| p.benchmark.to_string()))
        .ok_or_else(|| Error::Config("no benchmark given (use --benchmark or --preset)".into()))?;
    let bench: Benchmark = benchmarks::by_name(&bench_name)?;

    let sigma2 = overrides.sigma2.unwrap_or(bench.default_sigma2);
    let kind: PolicyKind = match &overrides.policy {
        Some(p) => p.parse()?,
        None => PolicyKind::Ucbv,
    };
    let policy = PolicyParams {
        kind,
        sigma: Some(overrides.sigma.unwrap_or(sigma2.sqrt())),
        b: Some(overrides.b.or(preset.map(|p| p.b)).unwrap_or(bench.default_range)),
        c: overrides.c.unwrap_or(1.0),
    };

    let delay = match &overrides.delay {
        Some(d) => d.parse()?,
        None => preset.map_or(DelayModel::None, |p| p.delay),
    };
    let fidelity_on = match &overrides.fidelity {
        Some(f) => parse_fidelity(f)?,
        None => true,
    };
    let fidelity = FidelityModel {
        zeta0: overrides.zeta0.unwrap_or(FidelityModel::default().zeta0),
        enabled: fidelity_on,
    };
    let noise: NoiseKind = overrides.noise.as_deref().map(str::parse).transpose()?.unwrap_or_default();
    let cost_model: CostModel = overrides
        .cost_model
        .as_deref()
        .map(str::parse)
        .transpose()?
        .unwrap_or(CostModel::BenchmarkCost);

    let budget = match (overrides.budget_cost, overrides.budget_rounds) {
        (Some(_), Some(_)) => {
            return Err(Error::Config("set either budget_cost or budget_rounds, not both".into()))
        }
        (Some(c), None) => Budget::Cost(c),
        (None, Some(t)) => Budget::Rounds(t),
        (None, None) => Budget::Rounds(preset.map_or(DEFAULT_ROUNDS, |p| p.rounds)),
    };

    let algorithm: Algorithm = match &overrides.algo {
        Some(a) => a.parse()?,
        None => Algorithm::Pcts,
    };
    let template = RunConfig {
        benchmark: bench.name.clone(),
        policy,
        nu1: overrides.nu1.or(preset.map(|p| p.nu1)).unwrap_or(1.0),
        rho: overrides.rho.or(preset.map(|p| p.rho)).unwrap_or(0.5),
        delay,
        noise_sigma2: sigma2,
        noise,
        fidelity,
        cost_model,
        budget,
        seed: 0,
    };

    let checkpoints = match (&overrides.checkpoints, overrides.checkpoint_axis.as_deref()) {
        (None, _) => Checkpoints::evenly_spaced(&budget, DEFAULT_CHECKPOINTS),
        (Some(v), None | Some("rounds")) => Checkpoints::Rounds(
            v.iter()
                .map(|&x| {
                    if x >= 0.0 && x.fract() == 0.0 {
                        Ok(x as u64)
                    } else {
                        Err(Error::Config(format!("round checkpoint must be a natural number, got {x}")))
                    }
                })
                .collect::<Result<_>>()?,
        ),
        (Some(v), Some("cost")) => Checkpoints::Cost(v.clone()),
        (Some(_), Some(other)) => {
            return Err(Error::Config(format!("checkpoint_axis must be rounds or cost, got `{other}`")))
        }
    };

    let spec = ExperimentSpec {
        template,
        algorithm,
        seeds: overrides.seeds.clone().unwrap_or_else(|| vec![0]),
        checkpoints,
        out_dir: env_out.or_else(|| overrides.out.clone()),
        mfpoo: MfpooOptions {
            nu_max: overrides.nu_max.unwrap_or(1.0),
            rho_max: overrides.rho_max.unwrap_or(0.95),
            include_rho_max: overrides.include_rho_max.unwrap_or(false),
        },
        jobs: overrides.jobs.unwrap_or(1).max(1),
    };
    spec.validate()?;
    Ok(spec)
}

/// `1,2,5` or `0..10` (half-open) or a mix: `0..3,7`.
pub fn parse_seed_list(s: &str) -> Result<Vec<u64>> {
    let bad = || Error::Config(format!("invalid seed list `{s}`"));
    let mut seeds = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let (a, b): (u64, u64) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
            seeds.extend(a..b);
        } else {
            seeds.push(part.parse().map_err(|_| bad())?);
        }
    }
    Ok(seeds)
}

pub fn parse_number_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse().map_err(|_| Error::Config(format!("invalid number `{p}` in `{s}`"))))
        .collect()
}
