//! Discrete-event oracle: noisy multi-fidelity evaluations whose feedback
//! arrives after a random number of rounds, plus the cost ledger.
//!
//! Time is measured in selection rounds. A query issued at round `s` with
//! delay `τ` is returned by the first `collect(t)` with `t ≥ s + τ`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Geometric, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::benchmarks::Benchmark;
use crate::error::{Error, Result};
use crate::tree::NodeId;

/// Upper limit on [`horizon_exact`]; reached only when the cost series
/// converges below the budget.
pub const MAX_HORIZON: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DelayModel {
    None,
    Constant(u64),
    /// Geometric on `{1, 2, …}` with the given mean.
    Geometric(f64),
}

impl DelayModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DelayModel::Geometric(mean) if !(mean.is_finite() && mean >= 1.0) => Err(
                Error::InvalidParameter(format!("geometric delay mean must be >= 1, got {mean}")),
            ),
            _ => Ok(()),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            DelayModel::None => 0.0,
            DelayModel::Constant(tau) => tau as f64,
            DelayModel::Geometric(mean) => mean,
        }
    }
}

impl fmt::Display for DelayModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DelayModel::None => write!(f, "none"),
            DelayModel::Constant(tau) => write!(f, "const:{tau}"),
            DelayModel::Geometric(mean) => write!(f, "geo:{mean}"),
        }
    }
}

impl FromStr for DelayModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("invalid delay `{s}` (expected none, const:N or geo:MEAN)"));
        let model = match s.split_once(':') {
            None if s == "none" => DelayModel::None,
            Some(("const", n)) => DelayModel::Constant(n.trim().parse().map_err(|_| bad())?),
            Some(("geo", m)) => DelayModel::Geometric(m.trim().parse().map_err(|_| bad())?),
            _ => return Err(bad()),
        };
        model.validate()?;
        Ok(model)
    }
}

pub fn sample_delay<R: Rng + ?Sized>(model: &DelayModel, rng: &mut R) -> u64 {
    match *model {
        DelayModel::None => 0,
        DelayModel::Constant(tau) => tau,
        DelayModel::Geometric(mean) => {
            let geo = Geometric::new(1.0 / mean).expect("validated mean >= 1");
            // rand_distr counts failures before the first success
            geo.sample(rng) + 1
        }
    }
}

/// Zero-mean noise families, all scaled to the configured variance.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    #[default]
    Gaussian,
    Laplace,
    Uniform,
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" | "normal" => Ok(NoiseKind::Gaussian),
            "laplace" => Ok(NoiseKind::Laplace),
            "uniform" => Ok(NoiseKind::Uniform),
            _ => Err(Error::Config(format!("unknown noise kind `{s}`"))),
        }
    }
}

pub fn sample_noise<R: Rng + ?Sized>(kind: NoiseKind, sigma: f64, rng: &mut R) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    match kind {
        NoiseKind::Gaussian => {
            let n: f64 = StandardNormal.sample(rng);
            sigma * n
        }
        NoiseKind::Laplace => {
            // variance 2·scale²
            let scale = sigma / std::f64::consts::SQRT_2;
            let u: f64 = rng.random::<f64>() - 0.5;
            -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
        }
        NoiseKind::Uniform => {
            // variance half_width²/3
            let half_width = sigma * 3f64.sqrt();
            rng.random_range(-half_width..=half_width)
        }
    }
}

/// Linear bias model `ζ(z) = zeta0·(1 − z)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityModel {
    pub zeta0: f64,
    pub enabled: bool,
}

impl Default for FidelityModel {
    fn default() -> Self {
        Self {
            zeta0: 0.1,
            enabled: true,
        }
    }
}

impl FidelityModel {
    pub fn disabled() -> Self {
        Self {
            zeta0: 0.1,
            enabled: false,
        }
    }

    pub fn bias(&self, z: f64) -> f64 {
        if self.enabled {
            self.zeta0 * (1.0 - z)
        } else {
            0.0
        }
    }

    /// `z_h = ζ⁻¹(nu1·rho^h)`, clamped to `[0, 1]`. Disabled models and a
    /// zero bias scale always query at full fidelity.
    pub fn fidelity_for_depth(&self, nu1: f64, rho: f64, depth: u32) -> f64 {
        if !self.enabled || self.zeta0 <= 0.0 {
            return 1.0;
        }
        (1.0 - nu1 * rho.powi(depth as i32) / self.zeta0).clamp(0.0, 1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostModel {
    /// The benchmark's own `λ(z)`.
    BenchmarkCost,
    LinearGrowth(f64),
    ConstantCost(f64),
    PolyDecay(f64),
    ExpDecay(f64),
}

impl fmt::Display for CostModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostModel::BenchmarkCost => write!(f, "benchmark"),
            CostModel::LinearGrowth(b) => write!(f, "linear:{b}"),
            CostModel::ConstantCost(b) => write!(f, "constant:{b}"),
            CostModel::PolyDecay(b) => write!(f, "poly:{b}"),
            CostModel::ExpDecay(b) => write!(f, "exp:{b}"),
        }
    }
}

impl FromStr for CostModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("invalid cost model `{s}`"));
        let model = match s.split_once(':') {
            None if s == "benchmark" => CostModel::BenchmarkCost,
            Some((kind, beta)) => {
                let beta: f64 = beta.trim().parse().map_err(|_| bad())?;
                match kind {
                    "linear" => CostModel::LinearGrowth(beta),
                    "constant" => CostModel::ConstantCost(beta),
                    "poly" => CostModel::PolyDecay(beta),
                    "exp" => CostModel::ExpDecay(beta),
                    _ => return Err(bad()),
                }
            }
            None => return Err(bad()),
        };
        model.validate()?;
        Ok(model)
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            CostModel::BenchmarkCost => true,
            CostModel::LinearGrowth(b) | CostModel::ConstantCost(b) => b.is_finite() && b > 0.0,
            CostModel::PolyDecay(b) => b.is_finite() && b > 0.0 && b != 1.0,
            CostModel::ExpDecay(b) => b > 0.0 && b <= 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidCostModel(format!("parameter out of range in {self}")))
        }
    }

    /// Uncapped per-step cost of step `h ≥ 1` for the abstract variants.
    /// `BenchmarkCost` has no depth law and returns `None`.
    pub fn raw_step_cost(&self, h: u64) -> Option<f64> {
        let h = h as f64;
        match *self {
            CostModel::BenchmarkCost => None,
            CostModel::LinearGrowth(b) => Some(b * h),
            CostModel::ConstantCost(b) => Some(b),
            CostModel::PolyDecay(b) => Some(h.powf(-b)),
            CostModel::ExpDecay(b) => Some(b.powf(-h)),
        }
    }

    /// Per-step cost at step (or depth) `h`, capped at `lambda1`; the
    /// benchmark variant uses `lambda1` as its constant stand-in.
    pub fn capped_step_cost(&self, h: u64, lambda1: f64) -> f64 {
        self.raw_step_cost(h.max(1)).map_or(lambda1, |c| c.min(lambda1))
    }
}

fn check_budget(budget: f64, lambda1: f64) -> Result<()> {
    if !(lambda1.is_finite() && lambda1 > 0.0) {
        return Err(Error::InvalidParameter(format!("lambda(1) must be positive, got {lambda1}")));
    }
    if !(budget.is_finite() && budget >= lambda1) {
        return Err(Error::InvalidParameter(format!(
            "budget {budget} must be at least lambda(1) = {lambda1}"
        )));
    }
    Ok(())
}

/// Closed-form iteration count for a cost budget under each abstract cost
/// law (linear, constant, polynomial and exponential decay).
pub fn horizon_lower_bound(model: &CostModel, budget: f64, lambda1: f64) -> Result<f64> {
    model.validate()?;
    check_budget(budget, lambda1)?;
    let slack = 2.0 * budget - lambda1;
    let bound = match *model {
        CostModel::BenchmarkCost => {
            return Err(Error::InvalidCostModel("no closed-form horizon for the benchmark cost".into()))
        }
        CostModel::LinearGrowth(b) => (2.0 * slack / b).sqrt(),
        CostModel::ConstantCost(b) => slack / b,
        CostModel::PolyDecay(b) => {
            let base = 1.0 + (1.0 - b) * slack;
            if base <= 0.0 {
                // convergent series already covers the budget
                f64::INFINITY
            } else {
                base.powf(1.0 / (1.0 - b))
            }
        }
        CostModel::ExpDecay(1.0) => slack,
        CostModel::ExpDecay(b) => (1.0 + (1.0 - b) * slack).ln() / (1.0 / b).ln(),
    };
    Ok(bound)
}

/// Largest `H` with `Σ_{h=1..H} min(λ(h), λ1) ≤ budget`, saturating at
/// [`MAX_HORIZON`].
pub fn horizon_exact(model: &CostModel, budget: f64, lambda1: f64) -> Result<u64> {
    model.validate()?;
    if !(lambda1.is_finite() && lambda1 > 0.0) {
        return Err(Error::InvalidParameter(format!("lambda(1) must be positive, got {lambda1}")));
    }
    let mut spent = 0.0;
    for h in 1..=MAX_HORIZON {
        spent += model.capped_step_cost(h, lambda1);
        if spent > budget {
            return Ok(h - 1);
        }
    }
    Ok(MAX_HORIZON)
}

/// One oracle query, carrying its (still hidden) feedback.
#[derive(Clone, Debug, PartialEq)]
pub struct QueryRecord {
    pub id: u64,
    pub origin_round: u64,
    pub path: Vec<NodeId>,
    pub point: Vec<f64>,
    pub fidelity: f64,
    pub value: f64,
    pub arrival_round: u64,
}

// min-heap on (arrival_round, id)
#[derive(Debug)]
struct Pending(QueryRecord);

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        (other.0.arrival_round, other.0.id).cmp(&(self.0.arrival_round, self.0.id))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub delay: DelayModel,
    pub fidelity: FidelityModel,
    pub cost_model: CostModel,
    pub noise_sigma: f64,
    pub noise: NoiseKind,
}

pub struct SimEnvironment<R> {
    config: EnvConfig,
    pending: BinaryHeap<Pending>,
    cumulative_cost: f64,
    next_id: u64,
    rng: R,
}

impl<R: Rng> SimEnvironment<R> {
    pub fn new(config: EnvConfig, rng: R) -> Result<Self> {
        config.delay.validate()?;
        config.cost_model.validate()?;
        if !(config.noise_sigma.is_finite() && config.noise_sigma >= 0.0) {
            return Err(Error::InvalidParameter(format!("noise sigma must be >= 0, got {}", config.noise_sigma)));
        }
        Ok(Self {
            config,
            pending: BinaryHeap::new(),
            cumulative_cost: 0.0,
            next_id: 0,
            rng,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn cumulative_cost(&self) -> f64 {
        self.cumulative_cost
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    pub fn pending(&self) -> impl Iterator<Item = &QueryRecord> {
        self.pending.iter().map(|p| &p.0)
    }

    /// Cost of one query at fidelity `z` issued from a leaf at `depth`.
    pub fn step_cost(&self, benchmark: &Benchmark, depth: u32, z: f64) -> f64 {
        match self.config.cost_model {
            CostModel::BenchmarkCost => benchmark.cost(z),
            model => model.capped_step_cost(depth as u64, benchmark.full_cost()),
        }
    }

    /// Evaluates `f_z(point) + ε`, schedules its arrival and charges the cost.
    /// The delay is drawn before the value, independently of it.
    #[allow(clippy::too_many_arguments)]
    pub fn invoke(
        &mut self,
        benchmark: &Benchmark,
        point: Vec<f64>,
        z: f64,
        round: u64,
        depth: u32,
        path: Vec<NodeId>,
    ) -> Result<u64> {
        let exact = benchmark.evaluate(&point, z)?;
        let delay = sample_delay(&self.config.delay, &mut self.rng);
        let noise = sample_noise(self.config.noise, self.config.noise_sigma, &mut self.rng);
        let cost = self.step_cost(benchmark, depth, z);
        self.cumulative_cost += cost;
        let id = self.next_id;
        self.next_id += 1;
        self.pending.push(Pending(QueryRecord {
            id,
            origin_round: round,
            path,
            point,
            fidelity: z,
            value: exact + noise,
            arrival_round: round + delay,
        }));
        Ok(id)
    }

    /// Removes and returns every record due by round `t`, in arrival then id
    /// order.
    pub fn collect(&mut self, t: u64) -> Vec<QueryRecord> {
        let mut out = Vec::new();
        while self.pending.peek().is_some_and(|p| p.0.arrival_round <= t) {
            out.push(self.pending.pop().expect("peeked").0);
        }
        out
    }

    pub fn drain(&mut self) -> Vec<QueryRecord> {
        self.collect(u64::MAX)
    }
}
