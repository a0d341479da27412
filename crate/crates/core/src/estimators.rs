//! Per-level winning statistics for single trees and ensembles.
//!
//! Ensemble levels are keyed by distance from each tree's alignment depth.
//! Per-tree fractions are summed as 64.64 fixed-point integers so that the
//! averages do not depend on the order in which trees are merged.

use std::{collections::BTreeMap, fmt::Write as _};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{
    generators::{EnsembleSpec, GeneratedTree},
    semantics::{propagate_states, StateAssignment, WinningRule},
    Error, ReplyTree, Result,
};

pub const DEFAULT_MIN_TREES: usize = 10;

pub const CSV_HEADER: &str = "distance_from_max,n_trees,n_nodes,p_win,p_leaf,p_win_no_leaves,mean_in_degree";

/// Raw counts for one level of one tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeLevelStats {
    pub level: usize,
    pub nodes: usize,
    pub winners: usize,
    pub leaves: usize,
    pub in_degree_sum: usize,
}

impl TreeLevelStats {
    pub fn p_win(&self) -> f64 {
        self.winners as f64 / self.nodes as f64
    }

    pub fn p_leaf(&self) -> f64 {
        self.leaves as f64 / self.nodes as f64
    }

    /// `(p̂ − p̂(0)) / (1 − p̂(0))`: the winner fraction among non-leaves.
    /// Undefined on all-leaf levels.
    pub fn p_win_no_leaves(&self) -> Option<f64> {
        (self.leaves < self.nodes)
            .then(|| (self.winners - self.leaves) as f64 / (self.nodes - self.leaves) as f64)
    }

    pub fn mean_in_degree(&self) -> f64 {
        self.in_degree_sum as f64 / self.nodes as f64
    }

    /// Mean in-degree over the non-leaf nodes of the level.
    pub fn mean_in_degree_non_leaf(&self) -> Option<f64> {
        (self.leaves < self.nodes).then(|| self.in_degree_sum as f64 / (self.nodes - self.leaves) as f64)
    }

    /// `Σ s / Σ s²`, i.e. `(W − L) / (W + L)`.
    pub fn signed_mean(&self) -> f64 {
        (2.0 * self.winners as f64 - self.nodes as f64) / self.nodes as f64
    }
}

/// Per-level counts for `tree` under `states`, indexed by level.
///
/// Leaves always win, so `winners ≥ leaves` on every level.
pub fn tree_level_stats(tree: &ReplyTree, states: &StateAssignment) -> Result<Vec<TreeLevelStats>> {
    if states.states.len() != tree.len() {
        return Err(Error::StateMismatch { states: states.states.len(), nodes: tree.len() });
    }
    Ok((0..=tree.depth())
        .map(|h| {
            let range = tree.level_range(h);
            let mut s = TreeLevelStats { level: h, nodes: range.len(), winners: 0, leaves: 0, in_degree_sum: 0 };
            for i in range {
                let node = tree.node(i);
                let win = states.is_winning(i);
                s.winners += win as usize;
                s.in_degree_sum += node.in_degree();
                if node.is_leaf() {
                    debug_assert!(win, "leaf {} lost", node.id);
                    s.leaves += 1;
                }
            }
            s
        })
        .collect())
}

/// Per-tree inputs of the leaf-removed approximation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeObservables {
    pub alignment_depth: usize,
    /// Support fraction of the tree's edges; `None` for root-only trees.
    pub q_hat: Option<f64>,
    pub levels: Vec<TreeLevelStats>,
}

impl TreeObservables {
    pub fn new(tree: &ReplyTree, alignment_depth: usize, states: &StateAssignment) -> Result<Self> {
        Ok(Self { alignment_depth, q_hat: tree.estimate_q().ok(), levels: tree_level_stats(tree, states)? })
    }

    /// Level stats at distance `d` from the alignment depth, if that level has nodes.
    pub fn at_distance(&self, d: usize) -> Option<&TreeLevelStats> {
        self.alignment_depth.checked_sub(d).and_then(|h| self.levels.get(h))
    }
}

/// Ensemble averages at one alignment key.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    pub distance_from_max: usize,
    pub n_trees: usize,
    pub n_nodes: usize,
    pub p_win: f64,
    pub p_leaf: f64,
    pub p_win_no_leaves: Option<f64>,
    pub mean_in_degree: f64,
    pub signed_mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub levels: Vec<LevelStats>,
    pub rule: WinningRule,
    /// Generator parameters or corpus description.
    pub source: serde_json::Value,
    pub min_tree_threshold: usize,
}

impl EnsembleStats {
    pub fn level(&self, d: usize) -> Option<&LevelStats> {
        self.levels.iter().find(|l| l.distance_from_max == d)
    }

    pub fn to_csv(&self, signed_mean: bool) -> String {
        let mut out = String::from(CSV_HEADER);
        if signed_mean {
            out.push_str(",signed_mean");
        }
        out.push('\n');
        for l in &self.levels {
            let nl = l.p_win_no_leaves.map(|x| x.to_string()).unwrap_or_default();
            let _ = write!(
                out,
                "{},{},{},{},{},{},{}",
                l.distance_from_max, l.n_trees, l.n_nodes, l.p_win, l.p_leaf, nl, l.mean_in_degree
            );
            if signed_mean {
                let _ = write!(out, ",{}", l.signed_mean);
            }
            out.push('\n');
        }
        out
    }
}

const ONE: u128 = 1 << 64;

/// `num / den` rounded down to 64 fractional bits.
fn fixed(num: usize, den: usize) -> u128 {
    ((num as u128) << 64) / den as u128
}

fn unfix(sum: u128, n: usize) -> f64 {
    // Split to keep precision for large sums.
    let whole = (sum / ONE) as f64;
    let frac = (sum % ONE) as f64 / ONE as f64;
    (whole + frac) / n as f64
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct KeySums {
    trees: usize,
    nodes: usize,
    win: u128,
    leaf: u128,
    no_leaf_trees: usize,
    no_leaf: u128,
    in_degree: u128,
    signed: u128,
}

/// Running sums per alignment key; merging is associative and commutative.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EnsembleAccumulator {
    keys: BTreeMap<usize, KeySums>,
    trees: usize,
}

impl EnsembleAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn trees(&self) -> usize {
        self.trees
    }

    /// Adds one tree's per-level counts, aligned at `alignment_depth`.
    pub fn add(&mut self, levels: &[TreeLevelStats], alignment_depth: usize) {
        self.trees += 1;
        for l in levels.iter().filter(|l| l.nodes > 0 && l.level <= alignment_depth) {
            let e = self.keys.entry(alignment_depth - l.level).or_default();
            e.trees += 1;
            e.nodes += l.nodes;
            e.win += fixed(l.winners, l.nodes);
            e.leaf += fixed(l.leaves, l.nodes);
            e.in_degree += fixed(l.in_degree_sum, l.nodes);
            // (W − L)/n + 1 = 2W/n keeps the sum unsigned.
            e.signed += fixed(2 * l.winners, l.nodes);
            if l.leaves < l.nodes {
                e.no_leaf_trees += 1;
                e.no_leaf += fixed(l.winners - l.leaves, l.nodes - l.leaves);
            }
        }
    }

    pub fn add_tree(&mut self, tree: &ReplyTree, states: &StateAssignment, alignment_depth: usize) -> Result<()> {
        self.add(&tree_level_stats(tree, states)?, alignment_depth);
        Ok(())
    }

    pub fn merge(mut self, other: Self) -> Self {
        self.trees += other.trees;
        for (d, o) in other.keys {
            let e = self.keys.entry(d).or_default();
            e.trees += o.trees;
            e.nodes += o.nodes;
            e.win += o.win;
            e.leaf += o.leaf;
            e.no_leaf_trees += o.no_leaf_trees;
            e.no_leaf += o.no_leaf;
            e.in_degree += o.in_degree;
            e.signed += o.signed;
        }
        self
    }

    pub fn finish(&self, rule: WinningRule, source: serde_json::Value, min_trees: usize) -> Result<EnsembleStats> {
        if self.trees == 0 {
            return Err(Error::EmptyEnsemble);
        }
        let levels = self
            .keys
            .iter()
            .filter(|(_, s)| s.trees >= min_trees.max(1))
            .map(|(&d, s)| LevelStats {
                distance_from_max: d,
                n_trees: s.trees,
                n_nodes: s.nodes,
                p_win: unfix(s.win, s.trees),
                p_leaf: unfix(s.leaf, s.trees),
                p_win_no_leaves: (s.no_leaf_trees > 0).then(|| unfix(s.no_leaf, s.no_leaf_trees)),
                mean_in_degree: unfix(s.in_degree, s.trees),
                signed_mean: unfix(s.signed, s.trees) - 1.0,
            })
            .collect();
        Ok(EnsembleStats { levels, rule, source, min_tree_threshold: min_trees })
    }
}

/// Ensemble statistics with every tree aligned at its own depth.
pub fn aggregate<'a>(
    trees: impl IntoIterator<Item = &'a ReplyTree>,
    rule: WinningRule,
    min_trees: usize,
    source: serde_json::Value,
) -> Result<EnsembleStats> {
    aggregate_aligned(trees.into_iter().map(|t| (t, t.depth())), rule, min_trees, source)
}

/// Ensemble statistics with explicit alignment depths.
pub fn aggregate_aligned<'a>(
    trees: impl IntoIterator<Item = (&'a ReplyTree, usize)>,
    rule: WinningRule,
    min_trees: usize,
    source: serde_json::Value,
) -> Result<EnsembleStats> {
    let mut acc = EnsembleAccumulator::new();
    for (tree, depth) in trees {
        let states = propagate_states(tree, rule)?;
        acc.add_tree(tree, &states, depth)?;
    }
    acc.finish(rule, source, min_trees)
}

fn evaluate(spec: &EnsembleSpec, rule: WinningRule, t: usize) -> Result<(GeneratedTree, StateAssignment)> {
    let g = spec.tree(t)?;
    let s = propagate_states(&g.tree, rule)?;
    Ok((g, s))
}

/// Generates and evaluates the ensemble on the current rayon pool.
///
/// The result is identical for any pool size.
pub fn simulate(spec: &EnsembleSpec, rule: WinningRule, min_trees: usize) -> Result<EnsembleStats> {
    spec.validate()?;
    rule.validate()?;
    let acc = (0..spec.trees)
        .into_par_iter()
        .try_fold(EnsembleAccumulator::new, |mut acc, t| {
            let (g, s) = evaluate(spec, rule, t)?;
            acc.add_tree(&g.tree, &s, g.alignment_depth)?;
            Ok::<_, Error>(acc)
        })
        .try_reduce(EnsembleAccumulator::new, |a, b| Ok(a.merge(b)))?;
    acc.finish(rule, serde_json::to_value(spec)?, min_trees)
}

/// Per-tree observables of a generated ensemble, in tree order.
pub fn simulate_observables(spec: &EnsembleSpec, rule: WinningRule) -> Result<Vec<TreeObservables>> {
    spec.validate()?;
    rule.validate()?;
    (0..spec.trees)
        .into_par_iter()
        .map(|t| {
            let (g, s) = evaluate(spec, rule, t)?;
            TreeObservables::new(&g.tree, g.alignment_depth, &s)
        })
        .collect()
}

/// Ensemble statistics from precomputed observables.
pub fn aggregate_observables(
    obs: &[TreeObservables],
    rule: WinningRule,
    min_trees: usize,
    source: serde_json::Value,
) -> Result<EnsembleStats> {
    let mut acc = EnsembleAccumulator::new();
    for o in obs {
        acc.add(&o.levels, o.alignment_depth);
    }
    acc.finish(rule, source, min_trees)
}
