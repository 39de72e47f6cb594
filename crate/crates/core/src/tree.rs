//! Binary hierarchical partition of a box domain.
//!
//! Nodes live in an arena and are addressed by [`NodeId`]. Children are always
//! pushed after their parent, so iterating ids in reverse visits every child
//! before its parent; [`PartitionTree::backup_bmin`] relies on that ordering.
//!
//! Scores (`b_value`, `b_min`) are extended reals carried in `f64`, with
//! `f64::INFINITY` standing for +∞. IEEE arithmetic already gives the
//! required semantics: `∞ + x = ∞` and `min(∞, x) = x`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box, one closed interval per dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperBox {
    bounds: Vec<(f64, f64)>,
}

impl HyperBox {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidParameter("box needs at least one dimension".into()));
        }
        for (d, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidParameter(format!(
                    "dimension {d}: invalid interval [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { bounds })
    }

    pub fn unit(dim: usize) -> Self {
        Self {
            bounds: vec![(0.0, 1.0); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn lower(&self, d: usize) -> f64 {
        self.bounds[d].0
    }

    pub fn upper(&self, d: usize) -> f64 {
        self.bounds[d].1
    }

    pub fn width(&self, d: usize) -> f64 {
        self.bounds[d].1 - self.bounds[d].0
    }

    pub fn center(&self) -> Vec<f64> {
        self.bounds.iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(&self.bounds)
                .all(|(&v, &(lo, hi))| v >= lo && v <= hi)
    }

    /// Closed halves along dimension `d`, lower half first.
    pub fn bisect(&self, d: usize) -> (HyperBox, HyperBox) {
        let (lo, hi) = self.bounds[d];
        let mid = 0.5 * (lo + hi);
        let mut left = self.clone();
        let mut right = self.clone();
        left.bounds[d].1 = mid;
        right.bounds[d].0 = mid;
        (left, right)
    }

    /// Uniform point, one independent draw per coordinate.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.bounds
            .iter()
            .map(|&(lo, hi)| {
                let u: f64 = rng.random();
                // keep the result inside the closed interval under rounding
                (lo + (hi - lo) * u).clamp(lo, hi)
            })
            .collect()
    }
}

/// Delayed per-node statistics.
///
/// `invoked` counts queries whose path contains the node (T), `observed`
/// counts feedbacks received for them (S); `missing()` is G = T − S.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NodeStats {
    pub invoked: u64,
    pub observed: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl NodeStats {
    pub fn missing(&self) -> u64 {
        self.invoked - self.observed
    }

    pub fn record_invocation(&mut self) {
        self.invoked += 1;
    }

    pub fn record_feedback(&mut self, value: f64) {
        debug_assert!(self.observed < self.invoked, "feedback without invocation");
        self.observed += 1;
        self.sum += value;
        self.sum_sq += value * value;
    }

    /// Builds stats for a fully observed stream; handy for callers that
    /// have no tree.
    pub fn from_observations(values: &[f64]) -> Self {
        let mut stats = NodeStats::default();
        for &v in values {
            stats.record_invocation();
            stats.record_feedback(v);
        }
        stats
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub usize);

/// `(h, l)` label of a node: depth and 1-based index within the depth.
///
/// The index saturates past depth 127; it is informational only and the
/// tree never uses it for addressing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NodeLabel {
    pub depth: u32,
    pub index: u128,
}

#[derive(Clone, Debug)]
pub struct PartitionNode {
    pub label: NodeLabel,
    pub region: HyperBox,
    pub parent: Option<NodeId>,
    pub children: Option<[NodeId; 2]>,
    pub stats: NodeStats,
    pub b_value: f64,
    pub b_min: f64,
}

impl PartitionNode {
    pub fn depth(&self) -> u32 {
        self.label.depth
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }
}

#[derive(Clone, Debug)]
pub struct PartitionTree {
    domain: HyperBox,
    nodes: Vec<PartitionNode>,
    height: u32,
}

impl PartitionTree {
    pub fn new(domain: HyperBox) -> Self {
        let root = PartitionNode {
            label: NodeLabel { depth: 0, index: 1 },
            region: domain.clone(),
            parent: None,
            children: None,
            stats: NodeStats::default(),
            b_value: f64::INFINITY,
            b_min: f64::INFINITY,
        };
        Self {
            domain,
            nodes: vec![root],
            height: 0,
        }
    }

    pub const ROOT: NodeId = NodeId(0);

    pub fn domain(&self) -> &HyperBox {
        &self.domain
    }

    pub fn node(&self, id: NodeId) -> &PartitionNode {
        &self.nodes[id.0]
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &PartitionNode)> {
        self.nodes.iter().enumerate().map(|(i, n)| (NodeId(i), n))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leaves(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes().filter(|(_, n)| n.is_leaf()).map(|(id, _)| id)
    }

    /// `(height, node_count)`; the root alone is `(0, 1)`.
    pub fn statistics(&self) -> (u32, usize) {
        (self.height, self.nodes.len())
    }

    /// Dimension along which `region` is split: largest side relative to the
    /// domain's side, lowest index on ties. Degenerate domain sides never win.
    pub fn split_dimension(&self, region: &HyperBox) -> usize {
        let mut best = 0;
        let mut best_len = f64::NEG_INFINITY;
        for d in 0..region.dim() {
            let full = self.domain.width(d);
            let len = if full > 0.0 { region.width(d) / full } else { 0.0 };
            if len > best_len {
                best = d;
                best_len = len;
            }
        }
        best
    }

    pub fn expand(&mut self, leaf: NodeId) -> Result<(NodeId, NodeId)> {
        let node = &self.nodes[leaf.0];
        if !node.is_leaf() {
            return Err(Error::NotALeaf(leaf.0));
        }
        let d = self.split_dimension(&node.region);
        let (lo, hi) = node.region.bisect(d);
        let depth = node.label.depth + 1;
        let index = node.label.index;
        let first = index.saturating_mul(2).saturating_sub(1);
        let second = index.saturating_mul(2);

        let mut push = |region, index| {
            let id = NodeId(self.nodes.len());
            self.nodes.push(PartitionNode {
                label: NodeLabel { depth, index },
                region,
                parent: Some(leaf),
                children: None,
                stats: NodeStats::default(),
                b_value: f64::INFINITY,
                b_min: f64::INFINITY,
            });
            id
        };
        let a = push(lo, first);
        let b = push(hi, second);
        self.nodes[leaf.0].children = Some([a, b]);
        self.height = self.height.max(depth);
        Ok((a, b))
    }

    /// Root-to-node path, root first.
    pub fn path_to(&self, id: NodeId) -> Vec<NodeId> {
        let mut path = vec![id];
        let mut cur = id;
        while let Some(p) = self.nodes[cur.0].parent {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    pub fn credit_invocation(&mut self, path: &[NodeId]) {
        for id in path {
            self.nodes[id.0].stats.record_invocation();
        }
    }

    pub fn credit_feedback(&mut self, path: &[NodeId], value: f64) {
        for id in path {
            self.nodes[id.0].stats.record_feedback(value);
        }
    }

    /// Recomputes every node's `b_value` and `b_min` bottom-up:
    /// `b_min = min(b_value + nu1·rho^h, max over children of b_min)`,
    /// with leaves taking just the first term.
    pub fn backup_bmin<F>(&mut self, mut bound_of: F, nu1: f64, rho: f64)
    where
        F: FnMut(&PartitionNode) -> f64,
    {
        for i in (0..self.nodes.len()).rev() {
            let b_value = bound_of(&self.nodes[i]);
            let node = &self.nodes[i];
            let own = b_value + nu1 * rho.powi(node.label.depth as i32);
            let b_min = match node.children {
                None => own,
                Some([a, b]) => own.min(self.nodes[a.0].b_min.max(self.nodes[b.0].b_min)),
            };
            let node = &mut self.nodes[i];
            node.b_value = b_value;
            node.b_min = b_min;
        }
    }

    /// Descends from the root towards the child with the larger `b_min`.
    /// Exact ties (including two +∞ children) consume one `random_bool(0.5)`
    /// draw from `rng`; no other draws are made.
    pub fn select_optimistic_path<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<NodeId> {
        let mut path = vec![Self::ROOT];
        let mut cur = Self::ROOT;
        while let Some([a, b]) = self.nodes[cur.0].children {
            let (ba, bb) = (self.nodes[a.0].b_min, self.nodes[b.0].b_min);
            cur = if ba > bb {
                a
            } else if bb > ba {
                b
            } else if rng.random_bool(0.5) {
                a
            } else {
                b
            };
            path.push(cur);
        }
        path
    }

    /// Leaf whose box contains `x`, walking from the root. Points on a shared
    /// face go to the lower child.
    pub fn locate(&self, x: &[f64]) -> Option<NodeId> {
        if !self.domain.contains(x) {
            return None;
        }
        let mut cur = Self::ROOT;
        while let Some([a, b]) = self.nodes[cur.0].children {
            cur = if self.nodes[a.0].region.contains(x) { a } else { b };
        }
        Some(cur)
    }
}

pub fn sample_point<R: Rng + ?Sized>(node: &PartitionNode, rng: &mut R) -> Vec<f64> {
    node.region.sample(rng)
}
