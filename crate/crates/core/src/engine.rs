//! The main search loop: optimistic descent, delayed credit, expansion.
//!
//! [`PctsSearch`] owns one run. Bounds and `b_min` are recomputed for the
//! whole tree each round because the `ln t` term moves every node at once.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::benchmarks::{self, Benchmark};
use crate::error::{Error, Result};
use crate::policy::{apply_fidelity_bias, confidence_bound, PolicyParams};
use crate::sim::{CostModel, DelayModel, EnvConfig, FidelityModel, NoiseKind, QueryRecord, SimEnvironment};
use crate::tree::{sample_point, NodeId, NodeLabel, PartitionTree};

/// Stream tag mixed into the run seed for the simulator's generator, so that
/// noise and delays never share draws with tie-breaking and point sampling.
const ENV_STREAM: u64 = 0x5eed_0e17;

/// SplitMix64 finalizer over `master` offset by `stream`.
pub fn mix_seed(master: u64, stream: u64) -> u64 {
    let mut z = master.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    /// Total evaluation cost Λ.
    Cost(f64),
    /// Number of selection rounds T.
    Rounds(u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Pcts,
    Mfpoo,
    WaitAndAct,
    Random,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Pcts => "pcts",
            Algorithm::Mfpoo => "mfpoo",
            Algorithm::WaitAndAct => "wait_and_act",
            Algorithm::Random => "random",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "pcts" => Ok(Algorithm::Pcts),
            "mfpoo" => Ok(Algorithm::Mfpoo),
            "wait_and_act" | "wait" => Ok(Algorithm::WaitAndAct),
            "random" | "random_search" => Ok(Algorithm::Random),
            _ => Err(Error::Config(format!("unknown algorithm `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub benchmark: String,
    pub policy: PolicyParams,
    pub nu1: f64,
    pub rho: f64,
    pub delay: DelayModel,
    pub noise_sigma2: f64,
    #[serde(default)]
    pub noise: NoiseKind,
    pub fidelity: FidelityModel,
    pub cost_model: CostModel,
    pub budget: Budget,
    pub seed: u64,
}

impl RunConfig {
    /// Noiseless, undelayed, full-fidelity UCB1 run with `rounds` rounds.
    pub fn new(benchmark: impl Into<String>, rounds: u64) -> Self {
        Self {
            benchmark: benchmark.into(),
            policy: PolicyParams::ucb1(),
            nu1: 1.0,
            rho: 0.5,
            delay: DelayModel::None,
            noise_sigma2: 0.0,
            noise: NoiseKind::Gaussian,
            fidelity: FidelityModel::disabled(),
            cost_model: CostModel::BenchmarkCost,
            budget: Budget::Rounds(rounds),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::RhoOutOfRange(self.rho));
        }
        if !(self.nu1.is_finite() && self.nu1 > 0.0) {
            return Err(Error::InvalidParameter(format!("nu1 must be positive, got {}", self.nu1)));
        }
        if !(self.noise_sigma2.is_finite() && self.noise_sigma2 >= 0.0) {
            return Err(Error::InvalidParameter(format!("sigma2 must be >= 0, got {}", self.noise_sigma2)));
        }
        if !(self.fidelity.zeta0.is_finite() && self.fidelity.zeta0 >= 0.0) {
            return Err(Error::InvalidParameter(format!("zeta0 must be >= 0, got {}", self.fidelity.zeta0)));
        }
        if let Budget::Cost(c) = self.budget {
            if !(c.is_finite() && c >= 0.0) {
                return Err(Error::InvalidParameter(format!("cost budget must be >= 0, got {c}")));
            }
        }
        self.policy.validate()?;
        self.delay.validate()?;
        self.cost_model.validate()
    }

    fn env_config(&self, benchmark: &Benchmark) -> EnvConfig {
        EnvConfig {
            delay: self.delay,
            fidelity: effective_fidelity(&self.fidelity, benchmark),
            cost_model: self.cost_model,
            noise_sigma: self.noise_sigma2.sqrt(),
            noise: self.noise,
        }
    }
}

fn effective_fidelity(fidelity: &FidelityModel, benchmark: &Benchmark) -> FidelityModel {
    if benchmark.multi_fidelity {
        *fidelity
    } else {
        FidelityModel { enabled: false, ..*fidelity }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u64,
    pub cumulative_cost: f64,
    pub selected: NodeLabel,
    pub point: Vec<f64>,
    pub fidelity: f64,
    pub feedbacks_received: usize,
    /// Largest observed (noisy) feedback so far; `None` before the first
    /// arrival.
    pub best_value: Option<f64>,
    pub simple_regret: f64,
    pub tree_height: u32,
    pub node_count: usize,
}

impl RoundRecord {
    pub fn depth(&self) -> u32 {
        self.selected.depth
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub point: Vec<f64>,
    pub observed_value: Option<f64>,
    /// Noiseless full-fidelity value at `point`.
    pub true_value: f64,
    pub regret: f64,
    /// No feedback had arrived; `point` is the domain center.
    pub no_data: bool,
}

/// Running argmax of observed feedback. Ties keep the earlier point.
#[derive(Clone, Debug)]
pub struct Recommender {
    current: Recommendation,
}

impl Recommender {
    pub fn new(benchmark: &Benchmark) -> Self {
        let point = benchmark.domain.center();
        let true_value = benchmark.value(&point).unwrap_or(f64::NAN);
        Self {
            current: Recommendation {
                point,
                observed_value: None,
                true_value,
                regret: benchmark.f_star - true_value,
                no_data: true,
            },
        }
    }

    /// Returns true when `point` becomes the new recommendation.
    pub fn observe(&mut self, benchmark: &Benchmark, point: &[f64], value: f64) -> bool {
        if self.current.observed_value.is_some_and(|best| value <= best) || value.is_nan() {
            return false;
        }
        let true_value = benchmark.value(point).unwrap_or(f64::NAN);
        self.current = Recommendation {
            point: point.to_vec(),
            observed_value: Some(value),
            true_value,
            regret: benchmark.f_star - true_value,
            no_data: false,
        };
        true
    }

    pub fn current(&self) -> &Recommendation {
        &self.current
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub algorithm: Algorithm,
    pub config: RunConfig,
    pub records: Vec<RoundRecord>,
    pub recommendation: Recommendation,
    /// Simple regret of the domain center, before any feedback.
    pub initial_regret: f64,
    pub tree_height: u32,
    pub node_count: usize,
    pub total_cost: f64,
    /// Feedback still in flight when the budget ran out, absorbed into the
    /// tree statistics only.
    pub drained_feedbacks: usize,
    /// The cost budget could not pay for a single query.
    pub budget_exhausted_before_first_query: bool,
}

impl RunTrace {
    pub fn rounds(&self) -> usize {
        self.records.len()
    }

    pub fn final_value(&self) -> f64 {
        self.recommendation.true_value
    }

    pub fn final_regret(&self) -> f64 {
        self.recommendation.regret
    }
}

struct Planned {
    path: Vec<NodeId>,
    depth: u32,
    z: f64,
    cost: f64,
}

/// One search run, advanced a round at a time.
pub struct PctsSearch {
    benchmark: Benchmark,
    config: RunConfig,
    fidelity: FidelityModel,
    tree: PartitionTree,
    env: SimEnvironment<ChaCha8Rng>,
    rng: ChaCha8Rng,
    recommender: Recommender,
    records: Vec<RoundRecord>,
    round: u64,
    exhausted_at_start: bool,
    done: bool,
}

impl PctsSearch {
    pub fn new(benchmark: Benchmark, config: RunConfig) -> Result<Self> {
        config.validate()?;
        let env = SimEnvironment::new(
            config.env_config(&benchmark),
            ChaCha8Rng::seed_from_u64(mix_seed(config.seed, ENV_STREAM)),
        )?;
        Ok(Self {
            fidelity: effective_fidelity(&config.fidelity, &benchmark),
            tree: PartitionTree::new(benchmark.domain.clone()),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            recommender: Recommender::new(&benchmark),
            records: Vec::new(),
            round: 0,
            exhausted_at_start: false,
            done: false,
            env,
            benchmark,
            config,
        })
    }

    pub fn from_config(config: RunConfig) -> Result<Self> {
        Self::new(benchmarks::by_name(&config.benchmark)?, config)
    }

    pub fn tree(&self) -> &PartitionTree {
        &self.tree
    }

    pub fn env(&self) -> &SimEnvironment<ChaCha8Rng> {
        &self.env
    }

    pub fn benchmark(&self) -> &Benchmark {
        &self.benchmark
    }

    pub fn records(&self) -> &[RoundRecord] {
        &self.records
    }

    /// Rounds elapsed so far (the last record's round).
    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn recommend(&self) -> &Recommendation {
        self.recommender.current()
    }

    pub fn fidelity_for_depth(&self, depth: u32) -> f64 {
        self.fidelity.fidelity_for_depth(self.config.nu1, self.config.rho, depth)
    }

    fn refresh_bounds(&mut self, t: u64) {
        let policy = self.config.policy;
        let (nu1, rho) = (self.config.nu1, self.config.rho);
        let fidelity = self.fidelity;
        self.tree.backup_bmin(
            |node| {
                let bound = confidence_bound(&policy, &node.stats, t).expect("validated policy, t >= 1");
                if fidelity.enabled {
                    let z = fidelity.fidelity_for_depth(nu1, rho, node.depth());
                    apply_fidelity_bias(bound, fidelity.bias(z))
                } else {
                    bound
                }
            },
            nu1,
            rho,
        );
    }

    fn plan(&mut self, t: u64) -> Planned {
        self.refresh_bounds(t);
        let path = self.tree.select_optimistic_path(&mut self.rng);
        let leaf = *path.last().expect("path holds the root");
        let depth = self.tree.node(leaf).depth();
        let z = self.fidelity_for_depth(depth);
        let cost = self.env.step_cost(&self.benchmark, depth, z);
        Planned { path, depth, z, cost }
    }

    fn affordable(&self, cost: f64) -> bool {
        match self.config.budget {
            Budget::Cost(limit) => self.env.cumulative_cost() + cost <= limit,
            Budget::Rounds(_) => true,
        }
    }

    fn stop(&mut self) -> bool {
        if self.records.is_empty() && matches!(self.config.budget, Budget::Cost(_)) {
            self.exhausted_at_start = true;
        }
        self.done = true;
        false
    }

    fn absorb(&mut self, feedbacks: &[QueryRecord]) {
        for fb in feedbacks {
            self.tree.credit_feedback(&fb.path, fb.value);
            self.recommender.observe(&self.benchmark, &fb.point, fb.value);
        }
    }

    /// Issues the planned query at `round`, expands the leaf, and returns
    /// the sampled point.
    fn issue(&mut self, planned: &Planned, round: u64) -> Result<Vec<f64>> {
        let leaf = *planned.path.last().expect("path holds the root");
        let point = sample_point(self.tree.node(leaf), &mut self.rng);
        self.tree.credit_invocation(&planned.path);
        self.env
            .invoke(&self.benchmark, point.clone(), planned.z, round, planned.depth, planned.path.clone())?;
        Ok(point)
    }

    fn record(&mut self, round: u64, planned: &Planned, point: Vec<f64>, feedbacks: usize) {
        let leaf = *planned.path.last().expect("path holds the root");
        let (tree_height, node_count) = self.tree.statistics();
        let rec = self.recommender.current();
        self.records.push(RoundRecord {
            round,
            cumulative_cost: self.env.cumulative_cost(),
            selected: self.tree.node(leaf).label,
            point,
            fidelity: planned.z,
            feedbacks_received: feedbacks,
            best_value: rec.observed_value,
            simple_regret: rec.regret,
            tree_height,
            node_count,
        });
    }

    /// One delayed-feedback round. Returns false once the budget is spent.
    pub fn step(&mut self) -> Result<bool> {
        if self.done {
            return Ok(false);
        }
        if let Budget::Rounds(limit) = self.config.budget {
            if self.round >= limit {
                return Ok(self.stop());
            }
        }
        let t = self.round + 1;
        let planned = self.plan(t);
        if !self.affordable(planned.cost) {
            return Ok(self.stop());
        }
        let point = self.issue(&planned, t)?;
        let arrived = self.env.collect(t);
        self.absorb(&arrived);
        self.tree.expand(*planned.path.last().expect("path holds the root"))?;
        self.round = t;
        self.record(t, &planned, point, arrived.len());
        Ok(true)
    }

    /// One wait-and-act decision: collect everything due, act, then idle for
    /// `period` rounds. The log term counts decisions, not idle rounds.
    fn wait_step(&mut self, period: u64) -> Result<bool> {
        if self.done {
            return Ok(false);
        }
        let decisions = self.records.len() as u64;
        let t = 1 + decisions * period;
        if let Budget::Rounds(limit) = self.config.budget {
            if t > limit {
                return Ok(self.stop());
            }
        }
        let arrived = self.env.collect(t);
        self.absorb(&arrived);
        let planned = self.plan(decisions + 1);
        if !self.affordable(planned.cost) {
            return Ok(self.stop());
        }
        let point = self.issue(&planned, t)?;
        self.tree.expand(*planned.path.last().expect("path holds the root"))?;
        self.round = t;
        self.record(t, &planned, point, arrived.len());
        Ok(true)
    }

    /// Drains in-flight feedback into the tree statistics and closes the run.
    /// Late feedback does not move the recommendation.
    pub fn finish(mut self, algorithm: Algorithm) -> RunTrace {
        let late = self.env.drain();
        for fb in &late {
            self.tree.credit_feedback(&fb.path, fb.value);
        }
        let (tree_height, node_count) = self.tree.statistics();
        RunTrace {
            algorithm,
            initial_regret: Recommender::new(&self.benchmark).current().regret,
            recommendation: self.recommender.current().clone(),
            records: self.records,
            tree_height,
            node_count,
            total_cost: self.env.cumulative_cost(),
            drained_feedbacks: late.len(),
            budget_exhausted_before_first_query: self.exhausted_at_start,
            config: self.config,
        }
    }

    /// Like [`finish`](Self::finish) but keeps the search for inspection.
    pub fn drain_stats(&mut self) -> usize {
        let late = self.env.drain();
        for fb in &late {
            self.tree.credit_feedback(&fb.path, fb.value);
        }
        late.len()
    }
}

pub fn run_pcts_on(benchmark: Benchmark, config: RunConfig) -> Result<RunTrace> {
    let mut search = PctsSearch::new(benchmark, config)?;
    while search.step()? {}
    Ok(search.finish(Algorithm::Pcts))
}

pub fn run_pcts(config: &RunConfig) -> Result<RunTrace> {
    run_pcts_on(benchmarks::by_name(&config.benchmark)?, config.clone())
}

/// Baseline that acts only when all outstanding feedback is in: one decision
/// every `τ` rounds under a constant delay `τ` (zero delay acts every round).
pub fn run_wait_and_act_on(benchmark: Benchmark, config: RunConfig) -> Result<RunTrace> {
    let period = match config.delay {
        DelayModel::Constant(tau) => tau.max(1),
        DelayModel::None => 1,
        other => return Err(Error::NonConstantDelay(other.to_string())),
    };
    let mut search = PctsSearch::new(benchmark, config)?;
    while search.wait_step(period)? {}
    Ok(search.finish(Algorithm::WaitAndAct))
}

pub fn run_wait_and_act(config: &RunConfig) -> Result<RunTrace> {
    run_wait_and_act_on(benchmarks::by_name(&config.benchmark)?, config.clone())
}

/// Uniform sampling of the whole domain at full fidelity, one query per
/// round, through the same delayed noisy oracle.
pub fn run_random_search_on(benchmark: Benchmark, config: RunConfig) -> Result<RunTrace> {
    config.validate()?;
    let mut env = SimEnvironment::new(
        EnvConfig {
            fidelity: FidelityModel::disabled(),
            ..config.env_config(&benchmark)
        },
        ChaCha8Rng::seed_from_u64(mix_seed(config.seed, ENV_STREAM)),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut recommender = Recommender::new(&benchmark);
    let mut records = Vec::new();
    let mut exhausted = false;
    let root = PartitionTree::new(benchmark.domain.clone()).node(PartitionTree::ROOT).label;
    let mut t = 0;
    loop {
        let cost = env.step_cost(&benchmark, 0, 1.0);
        let go = match config.budget {
            Budget::Rounds(limit) => t < limit,
            Budget::Cost(limit) => {
                let ok = env.cumulative_cost() + cost <= limit;
                exhausted = !ok && records.is_empty();
                ok
            }
        };
        if !go {
            break;
        }
        t += 1;
        let point = benchmark.domain.sample(&mut rng);
        env.invoke(&benchmark, point.clone(), 1.0, t, 0, Vec::new())?;
        let arrived = env.collect(t);
        for fb in &arrived {
            recommender.observe(&benchmark, &fb.point, fb.value);
        }
        let rec = recommender.current();
        records.push(RoundRecord {
            round: t,
            cumulative_cost: env.cumulative_cost(),
            selected: root,
            point,
            fidelity: 1.0,
            feedbacks_received: arrived.len(),
            best_value: rec.observed_value,
            simple_regret: rec.regret,
            tree_height: 0,
            node_count: 1,
        });
    }
    let drained = env.drain().len();
    Ok(RunTrace {
        algorithm: Algorithm::Random,
        initial_regret: Recommender::new(&benchmark).current().regret,
        recommendation: recommender.current().clone(),
        records,
        tree_height: 0,
        node_count: 1,
        total_cost: env.cumulative_cost(),
        drained_feedbacks: drained,
        budget_exhausted_before_first_query: exhausted,
        config,
    })
}

pub fn run_random_search(config: &RunConfig) -> Result<RunTrace> {
    run_random_search_on(benchmarks::by_name(&config.benchmark)?, config.clone())
}
