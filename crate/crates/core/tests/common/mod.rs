//! Property checks shared by the property suite and the acceptance run.
//!
//! Every check drives a deterministic proptest runner so failures reproduce.

#![allow(dead_code)]

use std::collections::HashMap;

use proptest::prelude::*;
use proptest::sample::select;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pcts::benchmarks;
use pcts::engine::{PctsSearch, RoundRecord};
use pcts::harness::report::{emit_trace_csv, read_trace_csv, TraceRow};
use pcts::harness::{regret_curve, Checkpoints};
use pcts::mfpoo::rho_grid;
use pcts::policy::{confidence_bound, empirical_mean, empirical_variance, PolicyParams};
use pcts::sim::{sample_delay, CostModel, DelayModel, FidelityModel};
use pcts::tree::{HyperBox, NodeId, NodeLabel, NodeStats, PartitionTree};
use pcts::{run_pcts, Budget, RunConfig};

pub const CASES: u32 = 1000;

pub type Check = fn() -> Result<(), String>;

/// Name and body of every randomized invariant.
pub const SUITE: &[(&str, Check)] = &[
    ("partition validity", partition_validity),
    ("child layout and split rule", child_layout),
    ("b_min recursion bounds", bmin_recursion),
    ("b_min monotone coupling", bmin_monotone_coupling),
    ("bound nondecreasing in t", bound_monotone_in_t),
    ("bonus strictly decreasing in s", bonus_decreasing_in_s),
    ("ucbv zero-variance reduction", ucbv_zero_variance),
    ("variance two-pass oracle", variance_oracle),
    ("invoked = observed + pending", stats_conservation),
    ("ancestor counting after drain", ancestor_counting),
    ("per-round growth and running max", engine_round_invariants),
    ("cost budget discipline", budget_discipline),
    ("per-step cost cap", cost_cap),
    ("geometric delay mean within 5%", geometric_delay_mean),
    ("mfpoo grid law", grid_law),
    ("csv determinism and round-trip", csv_round_trip),
];

pub fn run_check<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

// ---------------------------------------------------------------- trees

#[derive(Clone, Debug)]
pub struct TreeCase {
    pub bounds: Vec<(f64, f64)>,
    pub picks: Vec<usize>,
    pub unit_points: Vec<Vec<f64>>,
}

pub fn tree_case() -> impl Strategy<Value = TreeCase> {
    (1usize..=4).prop_flat_map(|dim| {
        (
            prop::collection::vec((-10.0f64..10.0, 0.1f64..20.0).prop_map(|(lo, w)| (lo, lo + w)), dim),
            prop::collection::vec(any::<usize>(), 0..40),
            prop::collection::vec(prop::collection::vec(0.0f64..1.0, dim), 1..20),
        )
            .prop_map(|(bounds, picks, unit_points)| TreeCase {
                bounds,
                picks,
                unit_points,
            })
    })
}

pub fn grow(case: &TreeCase) -> PartitionTree {
    let mut tree = PartitionTree::new(HyperBox::new(case.bounds.clone()).unwrap());
    for &p in &case.picks {
        let leaves: Vec<NodeId> = tree.leaves().collect();
        tree.expand(leaves[p % leaves.len()]).unwrap();
    }
    tree
}

fn strictly_inside(b: &HyperBox, x: &[f64]) -> bool {
    x.iter()
        .zip(b.bounds())
        .all(|(&v, &(lo, hi))| v > lo && v < hi)
}

fn on_boundary(b: &HyperBox, x: &[f64]) -> bool {
    b.contains(x) && !strictly_inside(b, x)
}

pub fn partition_validity() -> Result<(), String> {
    run_check(CASES, tree_case(), |case| {
        let tree = grow(&case);
        let leaves: Vec<NodeId> = tree.leaves().collect();
        for u in &case.unit_points {
            let x: Vec<f64> = u
                .iter()
                .zip(&case.bounds)
                .map(|(&u, &(lo, hi))| lo + (hi - lo) * u)
                .collect();
            if leaves.iter().any(|&l| on_boundary(&tree.node(l).region, &x)) {
                continue;
            }
            let inside = leaves
                .iter()
                .filter(|&&l| strictly_inside(&tree.node(l).region, &x))
                .count();
            prop_assert_eq!(inside, 1, "point {:?}", x);
            let found = tree.locate(&x).unwrap();
            prop_assert!(tree.node(found).region.contains(&x));
        }
        Ok(())
    })
}

pub fn child_layout() -> Result<(), String> {
    run_check(CASES, tree_case(), |case| {
        let tree = grow(&case);
        let widths: Vec<f64> = case.bounds.iter().map(|(lo, hi)| hi - lo).collect();
        for (_, node) in tree.nodes() {
            let Some([a, b]) = node.children else { continue };
            let (a, b) = (tree.node(a), tree.node(b));
            prop_assert_eq!(a.label.depth, node.label.depth + 1);
            prop_assert_eq!(b.label.depth, node.label.depth + 1);
            prop_assert_eq!(a.label.index, 2 * node.label.index - 1);
            prop_assert_eq!(b.label.index, 2 * node.label.index);

            let rel: Vec<f64> = (0..widths.len()).map(|d| node.region.width(d) / widths[d]).collect();
            let mut split = 0;
            for d in 1..rel.len() {
                if rel[d] > rel[split] {
                    split = d;
                }
            }
            for d in 0..widths.len() {
                let (plo, phi) = node.region.bounds()[d];
                let (alo, ahi) = a.region.bounds()[d];
                let (blo, bhi) = b.region.bounds()[d];
                if d == split {
                    let mid = 0.5 * (plo + phi);
                    prop_assert_eq!((alo, ahi, blo, bhi), (plo, mid, mid, phi));
                } else {
                    prop_assert_eq!((alo, ahi), (plo, phi));
                    prop_assert_eq!((blo, bhi), (plo, phi));
                }
            }
        }
        Ok(())
    })
}

#[derive(Clone, Debug)]
pub struct BminCase {
    pub tree: TreeCase,
    pub bounds: Vec<Option<f64>>,
    pub nu1: f64,
    pub rho: f64,
    pub bump_leaf: usize,
    pub bump: Option<f64>,
}

fn bmin_case() -> impl Strategy<Value = BminCase> {
    (
        tree_case(),
        prop::collection::vec(prop::option::weighted(0.8, -5.0f64..5.0), 81),
        0.0f64..2.0,
        0.05f64..0.95,
        any::<usize>(),
        prop::option::weighted(0.8, 0.0f64..3.0),
    )
        .prop_map(|(tree, bounds, nu1, rho, bump_leaf, bump)| BminCase {
            tree,
            bounds,
            nu1,
            rho,
            bump_leaf,
            bump,
        })
}

fn bound_table(tree: &PartitionTree, bounds: &[Option<f64>]) -> HashMap<NodeLabel, f64> {
    tree.nodes()
        .map(|(id, n)| (n.label, bounds[id.0].unwrap_or(f64::INFINITY)))
        .collect()
}

/// Recursive reference for `b_min`, independent of the tree's bottom-up pass.
fn reference_bmin(tree: &PartitionTree, id: NodeId, table: &HashMap<NodeLabel, f64>, nu1: f64, rho: f64) -> f64 {
    let node = tree.node(id);
    let own = table[&node.label] + nu1 * rho.powi(node.label.depth as i32);
    match node.children {
        None => own,
        Some([a, b]) => {
            let best = reference_bmin(tree, a, table, nu1, rho).max(reference_bmin(tree, b, table, nu1, rho));
            own.min(best)
        }
    }
}

pub fn bmin_recursion() -> Result<(), String> {
    run_check(CASES, bmin_case(), |case| {
        let mut tree = grow(&case.tree);
        let table = bound_table(&tree, &case.bounds);
        tree.backup_bmin(|n| table[&n.label], case.nu1, case.rho);
        for (id, node) in tree.nodes() {
            prop_assert_eq!(node.b_value, table[&node.label]);
            let own = node.b_value + case.nu1 * case.rho.powi(node.label.depth as i32);
            prop_assert!(node.b_min <= own);
            if let Some([a, b]) = node.children {
                prop_assert!(node.b_min <= tree.node(a).b_min.max(tree.node(b).b_min));
            }
            let expected = reference_bmin(&tree, id, &table, case.nu1, case.rho);
            prop_assert_eq!(node.b_min, expected);
        }
        Ok(())
    })
}

pub fn bmin_monotone_coupling() -> Result<(), String> {
    run_check(CASES, bmin_case(), |case| {
        let mut tree = grow(&case.tree);
        let mut table = bound_table(&tree, &case.bounds);
        tree.backup_bmin(|n| table[&n.label], case.nu1, case.rho);
        let before: Vec<f64> = tree.nodes().map(|(_, n)| n.b_min).collect();

        let leaves: Vec<NodeId> = tree.leaves().collect();
        let leaf = tree.node(leaves[case.bump_leaf % leaves.len()]).label;
        let raised = table[&leaf] + case.bump.unwrap_or(f64::INFINITY);
        table.insert(leaf, raised);
        tree.backup_bmin(|n| table[&n.label], case.nu1, case.rho);
        for ((_, n), old) in tree.nodes().zip(before) {
            prop_assert!(n.b_min >= old, "{:?}: {} < {}", n.label, n.b_min, old);
        }
        Ok(())
    })
}

// ------------------------------------------------------------- policies

fn policy_strategy() -> impl Strategy<Value = PolicyParams> {
    (0usize..3, 0.01f64..3.0, 0.01f64..20.0, 0.1f64..3.0).prop_map(|(k, sigma, b, c)| match k {
        0 => PolicyParams::ucb1(),
        1 => PolicyParams::ucb1_sigma(sigma),
        _ => PolicyParams { c, ..PolicyParams::ucbv(b) },
    })
}

pub fn bound_monotone_in_t() -> Result<(), String> {
    let strategy = (
        prop::collection::vec(-5.0f64..5.0, 1..50),
        policy_strategy(),
        1u64..1_000_000,
        0u64..1_000_000,
    );
    run_check(CASES, strategy, |(obs, policy, t, dt)| {
        let stats = NodeStats::from_observations(&obs);
        let early = confidence_bound(&policy, &stats, t).unwrap();
        let late = confidence_bound(&policy, &stats, t + dt).unwrap();
        prop_assert!(early <= late, "{} > {}", early, late);
        Ok(())
    })
}

fn synthetic_stats(s: u64, mean: f64, var: f64) -> NodeStats {
    let n = s as f64;
    NodeStats {
        invoked: s,
        observed: s,
        sum: n * mean,
        sum_sq: n * (var + mean * mean),
    }
}

pub fn bonus_decreasing_in_s() -> Result<(), String> {
    let strategy = (
        -5.0f64..5.0,
        0.0f64..4.0,
        1u64..1000,
        1u64..1000,
        2u64..1_000_000,
        policy_strategy(),
    );
    run_check(CASES, strategy, |(mean, var, s, ds, t, policy)| {
        let bonus = |s: u64| {
            let stats = synthetic_stats(s, mean, var);
            confidence_bound(&policy, &stats, t).unwrap() - empirical_mean(&stats).unwrap()
        };
        let (small, large) = (bonus(s), bonus(s + ds));
        prop_assert!(small > large, "{:?}: s={} bonus {} vs {}", policy.kind, s, small, large);
        Ok(())
    })
}

pub fn ucbv_zero_variance() -> Result<(), String> {
    let strategy = (-40i32..40, 1u64..1000, 0.1f64..10.0, 0.1f64..3.0, 1u64..1_000_000);
    run_check(CASES, strategy, |(k, s, b, c, t)| {
        let v = k as f64 / 8.0;
        let stats = NodeStats::from_observations(&vec![v; s as usize]);
        prop_assert_eq!(empirical_variance(&stats).unwrap(), 0.0);
        let policy = PolicyParams { c, ..PolicyParams::ucbv(b) };
        let got = confidence_bound(&policy, &stats, t).unwrap();
        let expected = v + c * 3.0 * b * (t as f64).ln() / s as f64;
        prop_assert_eq!(got, expected);
        Ok(())
    })
}

pub fn variance_oracle() -> Result<(), String> {
    run_check(CASES, prop::collection::vec(-100.0f64..100.0, 1..200), |obs| {
        let stats = NodeStats::from_observations(&obs);
        let n = obs.len() as f64;
        let mean = obs.iter().sum::<f64>() / n;
        let reference = obs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let got = empirical_variance(&stats).unwrap();
        if reference == 0.0 {
            prop_assert!(got.abs() < 1e-12);
        } else {
            prop_assert!(((got - reference) / reference).abs() <= 1e-10, "{} vs {}", got, reference);
        }
        Ok(())
    })
}

// ---------------------------------------------------------------- runs

pub fn delay_strategy() -> impl Strategy<Value = DelayModel> {
    prop_oneof![
        Just(DelayModel::None),
        (0u64..8).prop_map(DelayModel::Constant),
        (1.0f64..6.0).prop_map(DelayModel::Geometric),
    ]
}

pub const CHEAP_BENCHMARKS: [&str; 3] = ["hartmann3", "branin", "currin"];

pub fn run_config(max_rounds: u64) -> impl Strategy<Value = RunConfig> {
    (
        (select(CHEAP_BENCHMARKS.to_vec()), 0..=max_rounds, delay_strategy(), 0.0f64..0.1),
        (any::<bool>(), 0usize..3, any::<u64>(), 0.05f64..0.95, 0.05f64..2.0),
    )
        .prop_map(|((bench, rounds, delay, sigma2), (fid, policy, seed, rho, nu1))| RunConfig {
            policy: match policy {
                0 => PolicyParams::ucb1(),
                1 => PolicyParams::ucb1_sigma(sigma2.sqrt().max(0.01)),
                _ => PolicyParams::ucbv(5.0),
            },
            nu1,
            rho,
            delay,
            noise_sigma2: sigma2,
            fidelity: if fid { FidelityModel::default() } else { FidelityModel::disabled() },
            seed,
            ..RunConfig::new(bench, rounds)
        })
}

pub fn stats_conservation() -> Result<(), String> {
    run_check(CASES, run_config(30), |cfg| {
        let mut search = PctsSearch::from_config(cfg).unwrap();
        while search.step().unwrap() {
            let tree = search.tree();
            let root = &tree.node(PartitionTree::ROOT).stats;
            prop_assert_eq!(root.invoked, search.round());
            prop_assert_eq!(root.missing() as usize, search.env().pending_len());
            for (id, node) in tree.nodes() {
                let pending = search.env().pending().filter(|q| q.path.contains(&id)).count() as u64;
                prop_assert!(node.stats.observed <= node.stats.invoked);
                prop_assert_eq!(node.stats.invoked, node.stats.observed + pending);
            }
        }
        Ok(())
    })
}

fn is_descendant(child: NodeLabel, ancestor: NodeLabel) -> bool {
    child.depth >= ancestor.depth && ((child.index - 1) >> (child.depth - ancestor.depth)) + 1 == ancestor.index
}

pub fn ancestor_counting() -> Result<(), String> {
    run_check(CASES, run_config(30), |cfg| {
        let mut search = PctsSearch::from_config(cfg).unwrap();
        while search.step().unwrap() {}
        search.drain_stats();
        let records = search.records();
        let tree = search.tree();
        prop_assert_eq!(search.env().pending_len(), 0);
        for (_, node) in tree.nodes() {
            let own = records.iter().filter(|r| r.selected == node.label).count() as u64;
            let below = records.iter().filter(|r| is_descendant(r.selected, node.label)).count() as u64;
            prop_assert_eq!(node.stats.observed, node.stats.invoked);
            prop_assert_eq!(node.stats.observed, below);
            let children: u64 = node
                .children
                .map_or(0, |[a, b]| tree.node(a).stats.invoked + tree.node(b).stats.invoked);
            prop_assert_eq!(node.stats.invoked, children + own);
        }
        Ok(())
    })
}

pub fn engine_round_invariants() -> Result<(), String> {
    run_check(CASES, run_config(40), |cfg| {
        let rounds = match cfg.budget {
            Budget::Rounds(r) => r as usize,
            Budget::Cost(_) => unreachable!(),
        };
        let trace = run_pcts(&cfg).unwrap();
        prop_assert_eq!(trace.records.len(), rounds);
        let mut height = 0;
        let mut best: Option<f64> = None;
        for (k, r) in trace.records.iter().enumerate() {
            prop_assert_eq!(r.round, k as u64 + 1);
            prop_assert_eq!(r.node_count, 3 + 2 * k);
            prop_assert!(r.tree_height >= height);
            height = r.tree_height;
            if let Some(prev) = best {
                prop_assert!(r.best_value.is_some_and(|v| v >= prev));
            }
            best = r.best_value;
        }
        Ok(())
    })
}

pub fn cost_model_strategy() -> impl Strategy<Value = CostModel> {
    prop_oneof![
        Just(CostModel::BenchmarkCost),
        (0.01f64..2.0).prop_map(CostModel::LinearGrowth),
        (0.01f64..2.0).prop_map(CostModel::ConstantCost),
        (0.1f64..0.9).prop_map(CostModel::PolyDecay),
        (0.1f64..1.0).prop_map(CostModel::ExpDecay),
    ]
}

pub fn budget_discipline() -> Result<(), String> {
    let strategy = (run_config(0), cost_model_strategy(), 0.0f64..5.0);
    run_check(CASES, strategy, |(cfg, cost_model, limit)| {
        let cfg = RunConfig {
            cost_model,
            budget: Budget::Cost(limit),
            ..cfg
        };
        let trace = run_pcts(&cfg).unwrap();
        prop_assert!(trace.total_cost <= limit);
        let mut prev = 0.0;
        for r in &trace.records {
            prop_assert!(r.cumulative_cost >= prev);
            prev = r.cumulative_cost;
        }
        // stopping means the next step was unaffordable
        let lambda1 = benchmarks::by_name(&cfg.benchmark).unwrap().full_cost();
        prop_assert!(trace.total_cost + lambda1 > limit);
        prop_assert_eq!(trace.budget_exhausted_before_first_query, trace.records.is_empty());
        Ok(())
    })
}

pub fn cost_cap() -> Result<(), String> {
    let strategy = (cost_model_strategy(), 0u64..200, 0.01f64..10.0);
    run_check(CASES, strategy, |(model, h, lambda1)| {
        let c = model.capped_step_cost(h, lambda1);
        prop_assert!(c > 0.0 && c <= lambda1, "{} at h={} cap {}", c, h, lambda1);
        Ok(())
    })
}

pub fn geometric_delay_mean() -> Result<(), String> {
    const DRAWS: usize = 20_000;
    run_check(CASES, (1.0f64..50.0, any::<u64>()), |(mean, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = DelayModel::Geometric(mean);
        let mut total = 0u64;
        for _ in 0..DRAWS {
            let d = sample_delay(&model, &mut rng);
            prop_assert!(d >= 1);
            total += d;
        }
        let empirical = total as f64 / DRAWS as f64;
        prop_assert!((empirical - mean).abs() <= 0.05 * mean, "{} vs {}", empirical, mean);
        Ok(())
    })
}

pub fn grid_law() -> Result<(), String> {
    run_check(CASES, (0.01f64..0.999, 1usize..60, any::<bool>()), |(rho_max, n, include)| {
        let grid = rho_grid(rho_max, n, include);
        prop_assert!(grid.len() == n || (include && grid.len() == n + 1));
        for (k, &rho) in grid.iter().take(n).enumerate() {
            let i = (k + 1) as f64;
            prop_assert!(rho > 0.0 && rho < 1.0);
            let back = rho.powf((i + 1.0) / (2.0 * n as f64));
            prop_assert!((back - rho_max).abs() <= 1e-12, "{} vs {}", back, rho_max);
        }
        prop_assert!(grid.windows(2).all(|w| w[0] < w[1]));
        Ok(())
    })
}

pub fn csv_round_trip() -> Result<(), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let strategy = (run_config(25), prop::collection::vec(0u64..30, 1..6));
    run_check(CASES, strategy, |(cfg, mut checkpoints)| {
        checkpoints.sort_unstable();
        checkpoints.dedup();
        let first = run_pcts(&cfg).unwrap();
        let second = run_pcts(&cfg).unwrap();
        prop_assert_eq!(&first, &second);

        let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
        emit_trace_csv(&first, &a).unwrap();
        emit_trace_csv(&second, &b).unwrap();
        let bytes = std::fs::read(&a).unwrap();
        prop_assert_eq!(&bytes, &std::fs::read(&b).unwrap());
        prop_assert_eq!(bytes.iter().filter(|&&c| c == b'\n').count(), first.records.len() + 1);

        let parsed = read_trace_csv(&a).unwrap();
        let direct: Vec<TraceRow> = first.records.iter().map(TraceRow::from).collect();
        prop_assert_eq!(&parsed, &direct);

        let cps = Checkpoints::Rounds(checkpoints);
        let from_file = regret_curve(&[(parsed.as_slice(), first.initial_regret)], &cps);
        let in_memory = regret_curve::<RoundRecord>(&[(first.records.as_slice(), first.initial_regret)], &cps);
        prop_assert_eq!(from_file, in_memory);
        Ok(())
    })
}
