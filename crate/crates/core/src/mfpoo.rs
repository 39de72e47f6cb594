//! Unknown smoothness: run one search per `rho` on a geometric grid below
//! `rho_max`, all with `nu1 = nu_max`, and keep the best recommendation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benchmarks::{self, Benchmark};
use crate::engine::{mix_seed, run_pcts_on, Algorithm, Budget, RunConfig, RunTrace};
use crate::error::{Error, Result};
use crate::sim::{horizon_exact, CostModel};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MfpooOptions {
    pub nu_max: f64,
    pub rho_max: f64,
    /// Also run an instance at `rho_max` itself when the grid lacks it.
    pub include_rho_max: bool,
}

impl Default for MfpooOptions {
    fn default() -> Self {
        Self {
            nu_max: 1.0,
            rho_max: 0.95,
            include_rho_max: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MfpooPlan {
    pub nu_max: f64,
    pub rho_max: f64,
    /// Number of grid instances (before any appended `rho_max`).
    pub n: usize,
    pub rho_grid: Vec<f64>,
    pub instance_budget: Budget,
    pub horizon_estimate: u64,
}

impl MfpooPlan {
    pub fn instances(&self) -> usize {
        self.rho_grid.len()
    }
}

/// `N = max(1, ⌈(½·ln 2 / ln(1/rho_max))·ln(T/ln T)⌉)`; horizons of at most
/// one step leave nothing to split.
pub fn instance_count(rho_max: f64, horizon: u64) -> usize {
    if horizon <= 1 {
        return 1;
    }
    let t = horizon as f64;
    let n = (0.5 * std::f64::consts::LN_2 / (1.0 / rho_max).ln()) * (t / t.ln()).ln();
    (n.ceil() as usize).max(1)
}

/// `rho_i = rho_max^(2N/(i+1))` for `i = 1..=N`, ascending.
pub fn rho_grid(rho_max: f64, n: usize, include_rho_max: bool) -> Vec<f64> {
    let mut grid: Vec<f64> = (1..=n)
        .map(|i| rho_max.powf(2.0 * n as f64 / (i as f64 + 1.0)))
        .collect();
    if include_rho_max && grid.last() != Some(&rho_max) {
        grid.push(rho_max);
    }
    grid
}

fn check_rho_max(rho_max: f64) -> Result<()> {
    if rho_max > 0.0 && rho_max < 1.0 {
        Ok(())
    } else {
        Err(Error::RhoOutOfRange(rho_max))
    }
}

/// Plan for a cost budget. The horizon estimate uses the whole budget and
/// each instance receives an equal share.
pub fn plan_instances(
    options: &MfpooOptions,
    budget: f64,
    cost_model: &CostModel,
    lambda1: f64,
) -> Result<MfpooPlan> {
    check_rho_max(options.rho_max)?;
    if budget.partial_cmp(&lambda1) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::InvalidParameter(format!(
            "budget {budget} must exceed lambda(1) = {lambda1}"
        )));
    }
    let horizon = horizon_exact(cost_model, budget, lambda1)?;
    Ok(build_plan(options, horizon, |n| Budget::Cost(budget / n as f64)))
}

/// Plan for a round budget: the horizon is the round count itself.
pub fn plan_instances_for_rounds(options: &MfpooOptions, rounds: u64) -> Result<MfpooPlan> {
    check_rho_max(options.rho_max)?;
    Ok(build_plan(options, rounds, |n| Budget::Rounds(rounds / n as u64)))
}

fn build_plan(options: &MfpooOptions, horizon: u64, split: impl Fn(usize) -> Budget) -> MfpooPlan {
    let n = instance_count(options.rho_max, horizon);
    let rho_grid = rho_grid(options.rho_max, n, options.include_rho_max);
    MfpooPlan {
        nu_max: options.nu_max,
        rho_max: options.rho_max,
        n,
        instance_budget: split(rho_grid.len()),
        rho_grid,
        horizon_estimate: horizon,
    }
}

/// Seed of the `index`-th instance (1-based).
pub fn instance_seed(master: u64, index: usize) -> u64 {
    mix_seed(master, index as u64)
}

#[derive(Clone, Debug)]
pub struct MfpooOutcome {
    pub plan: MfpooPlan,
    /// Index into `traces` of the selected instance.
    pub best: usize,
    pub traces: Vec<RunTrace>,
}

impl MfpooOutcome {
    pub fn best_trace(&self) -> &RunTrace {
        &self.traces[self.best]
    }
}

pub fn plan_for(benchmark: &Benchmark, base: &RunConfig, options: &MfpooOptions) -> Result<MfpooPlan> {
    match base.budget {
        Budget::Cost(c) => plan_instances(options, c, &base.cost_model, benchmark.full_cost()),
        Budget::Rounds(t) => plan_instances_for_rounds(options, t),
    }
}

/// Instance configurations in grid order. `base.rho`, `base.nu1` and
/// `base.budget` are replaced per instance.
pub fn instance_configs(base: &RunConfig, plan: &MfpooPlan) -> Vec<RunConfig> {
    plan.rho_grid
        .iter()
        .enumerate()
        .map(|(i, &rho)| RunConfig {
            rho,
            nu1: plan.nu_max,
            budget: plan.instance_budget,
            seed: instance_seed(base.seed, i + 1),
            ..base.clone()
        })
        .collect()
}

pub fn run_mfpoo_on(benchmark: &Benchmark, base: &RunConfig, options: &MfpooOptions) -> Result<MfpooOutcome> {
    let plan = plan_for(benchmark, base, options)?;
    let traces = instance_configs(base, &plan)
        .into_par_iter()
        .map(|cfg| {
            run_pcts_on(benchmark.clone(), cfg).map(|mut t| {
                t.algorithm = Algorithm::Mfpoo;
                t
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = select_best(&traces);
    Ok(MfpooOutcome { plan, best, traces })
}

pub fn run_mfpoo(base: &RunConfig, options: &MfpooOptions) -> Result<MfpooOutcome> {
    run_mfpoo_on(&benchmarks::by_name(&base.benchmark)?, base, options)
}

/// Highest observed recommendation value; instances without feedback rank
/// last and ties keep the lower index.
pub fn select_best(traces: &[RunTrace]) -> usize {
    let key = |t: &RunTrace| t.recommendation.observed_value.unwrap_or(f64::NEG_INFINITY);
    let mut best = 0;
    for (i, t) in traces.iter().enumerate().skip(1) {
        if key(t) > key(&traces[best]) {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn three_point_grid() {
        let g = rho_grid(0.95, 3, false);
        assert_relative_eq!(g[0], 0.857375, epsilon = 1e-12);
        assert_relative_eq!(g[1], 0.9025, epsilon = 1e-12);
        assert_relative_eq!(g[2], 0.925_945_462_8, epsilon = 1e-10);
    }

    #[test]
    fn single_instance_grid_is_rho_max() {
        assert_eq!(rho_grid(0.95, 1, false), vec![0.95]);
        assert_eq!(rho_grid(0.95, 1, true), vec![0.95]);
    }

    #[test]
    fn appended_rho_max() {
        let g = rho_grid(0.9, 4, true);
        assert_eq!(g.len(), 5);
        assert_eq!(*g.last().unwrap(), 0.9);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn instance_count_formula() {
        assert_eq!(instance_count(0.95, 0), 1);
        assert_eq!(instance_count(0.95, 1), 1);
        let t = 300f64;
        let expected = (0.5 * 2f64.ln() / (1.0f64 / 0.95).ln() * (t / t.ln()).ln()).ceil() as usize;
        assert_eq!(instance_count(0.95, 300), expected);
        assert_eq!(instance_count(0.1, 3), 1);
    }

    #[test]
    fn plan_rejects_singular_rho_max() {
        let opts = MfpooOptions { rho_max: 1.0, ..Default::default() };
        assert!(matches!(
            plan_instances(&opts, 100.0, &CostModel::ConstantCost(1.0), 1.0),
            Err(Error::RhoOutOfRange(_))
        ));
        assert!(plan_instances(&MfpooOptions::default(), 1.0, &CostModel::ConstantCost(1.0), 1.0).is_err());
    }

    #[test]
    fn plan_splits_budget_evenly() {
        let plan = plan_instances(&MfpooOptions::default(), 500.0, &CostModel::ConstantCost(1.0), 1.0).unwrap();
        assert_eq!(plan.horizon_estimate, 500);
        assert_eq!(plan.n, instance_count(0.95, 500));
        assert_eq!(plan.instance_budget, Budget::Cost(500.0 / plan.n as f64));
    }

    #[test]
    fn instance_seeds_are_distinct() {
        let seeds: Vec<u64> = (1..=20).map(|i| instance_seed(5, i)).collect();
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), seeds.len());
    }
}
