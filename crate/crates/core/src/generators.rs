//! Seeded random reply trees.
//!
//! Every tree draws its shape and its edge signs from two separate ChaCha8
//! streams keyed by the same per-tree seed, so changing `q` relabels edges
//! without moving them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{
    degree::DegreeModel,
    error::check_probability,
    tree::{NodeRecord, Polarity},
    Error, ReplyTree, Result,
};

const TOPOLOGY_STREAM: u64 = 0;
const SIGN_STREAM: u64 = 1;

/// Regeneration budget when full depth is required.
pub const MAX_ATTEMPTS: u32 = 10_000;
/// Refuse to materialise homogeneous trees larger than this.
pub const MAX_NODES: usize = 5_000_000;

/// SplitMix64 finaliser; decorrelates consecutive seeds.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Sub-seed of tree `t` under `master`.
pub fn tree_seed(master: u64, t: u64) -> u64 {
    splitmix64(splitmix64(master) ^ t.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

fn rngs(seed: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut topo = ChaCha8Rng::seed_from_u64(seed);
    topo.set_stream(TOPOLOGY_STREAM);
    let mut signs = ChaCha8Rng::seed_from_u64(seed);
    signs.set_stream(SIGN_STREAM);
    (topo, signs)
}

fn polarity<R: Rng>(rng: &mut R, q: f64) -> Polarity {
    if rng.gen::<f64>() < q {
        Polarity::Support
    } else {
        Polarity::Attack
    }
}

fn node_id(i: usize) -> String {
    format!("n{i}")
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedTree {
    pub tree: ReplyTree,
    /// Depth used to align this tree's levels in an ensemble: the nominal
    /// depth for homogeneous trees, the realised depth otherwise.
    pub alignment_depth: usize,
    /// The root drew no replies.
    pub degenerate: bool,
    /// Number of draws it took (1 unless full depth was required).
    pub attempts: u32,
}

/// Breadth-first tree whose nodes at levels `< depth` draw their child count
/// from `model`; nodes at `depth` are leaves.
pub fn generate_homogeneous(depth: usize, model: &DegreeModel, q: f64, seed: u64) -> Result<GeneratedTree> {
    if depth < 1 {
        return Err(Error::InvalidParameter("homogeneous depth must be at least 1".into()));
    }
    model.validate()?;
    check_probability("q", q)?;
    let (mut topo, mut signs) = rngs(seed);

    let mut records = vec![NodeRecord::root(node_id(0))];
    let mut frontier = vec![0usize];
    for _ in 0..depth {
        let mut next = Vec::new();
        for &parent in &frontier {
            let k = model.sample(&mut topo);
            if records.len() + k > MAX_NODES {
                return Err(Error::InvalidParameter(format!(
                    "homogeneous tree exceeds {MAX_NODES} nodes"
                )));
            }
            for _ in 0..k {
                let id = records.len();
                records.push(NodeRecord::reply(node_id(id), node_id(parent), polarity(&mut signs, q)));
                next.push(id);
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    let degenerate = records.len() == 1;
    Ok(GeneratedTree {
        tree: ReplyTree::build(&records)?,
        alignment_depth: depth,
        degenerate,
        attempts: 1,
    })
}

/// Preferential-attachment tree with `nodes` nodes. A new node picks its
/// parent with probability proportional to total degree (replies received
/// plus the one reply it made; 1 for the root).
pub fn generate_preferential(nodes: usize, q: f64, seed: u64) -> Result<GeneratedTree> {
    if nodes < 2 {
        return Err(Error::InvalidParameter("preferential attachment needs at least 2 nodes".into()));
    }
    check_probability("q", q)?;
    let (mut topo, mut signs) = rngs(seed);

    let mut records = Vec::with_capacity(nodes);
    records.push(NodeRecord::root(node_id(0)));
    records.push(NodeRecord::reply(node_id(1), node_id(0), polarity(&mut signs, q)));
    // Each node appears once per unit of degree.
    let mut endpoints = Vec::with_capacity(2 * nodes);
    endpoints.extend([0usize, 1]);
    for i in 2..nodes {
        let target = endpoints[topo.gen_range(0..endpoints.len())];
        records.push(NodeRecord::reply(node_id(i), node_id(target), polarity(&mut signs, q)));
        endpoints.extend([target, i]);
    }
    let tree = ReplyTree::build(&records)?;
    Ok(GeneratedTree { alignment_depth: tree.depth(), tree, degenerate: false, attempts: 1 })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GeneratorKind {
    Homogeneous { depth: usize, model: DegreeModel },
    PreferentialAttachment { nodes: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub generator: GeneratorKind,
    pub trees: usize,
    pub q: f64,
    pub seed: u64,
    /// Redraw homogeneous trees until they reach their nominal depth.
    #[serde(default)]
    pub require_full_depth: bool,
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trees < 1 {
            return Err(Error::InvalidParameter("ensemble needs at least one tree".into()));
        }
        check_probability("q", self.q)?;
        match &self.generator {
            GeneratorKind::Homogeneous { depth, model } => {
                if *depth < 1 {
                    return Err(Error::InvalidParameter("homogeneous depth must be at least 1".into()));
                }
                model.validate()
            }
            GeneratorKind::PreferentialAttachment { nodes } if *nodes < 2 => Err(Error::InvalidParameter(
                "preferential attachment needs at least 2 nodes".into(),
            )),
            GeneratorKind::PreferentialAttachment { .. } => Ok(()),
        }
    }

    /// Tree `t` of the ensemble; a pure function of `(self, t)`.
    pub fn tree(&self, t: usize) -> Result<GeneratedTree> {
        let seed = tree_seed(self.seed, t as u64);
        match &self.generator {
            GeneratorKind::PreferentialAttachment { nodes } => generate_preferential(*nodes, self.q, seed),
            GeneratorKind::Homogeneous { depth, model } => {
                if !self.require_full_depth {
                    return generate_homogeneous(*depth, model, self.q, seed);
                }
                for attempt in 0..MAX_ATTEMPTS {
                    let mut g = generate_homogeneous(*depth, model, self.q, tree_seed(seed, attempt as u64))?;
                    if g.tree.depth() == *depth {
                        g.attempts = attempt + 1;
                        return Ok(g);
                    }
                }
                Err(Error::DepthUnreachable { depth: *depth, attempts: MAX_ATTEMPTS })
            }
        }
    }
}

/// Lazily generates the trees of `spec` in index order.
pub fn generate_ensemble(spec: &EnsembleSpec) -> Result<impl Iterator<Item = Result<GeneratedTree>> + '_> {
    spec.validate()?;
    Ok((0..spec.trees).map(move |t| spec.tree(t)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forced_two_children() {
        let m = DegreeModel::empirical([(2, 1.0)]).unwrap();
        let g = generate_homogeneous(1, &m, 1.0, 42).unwrap();
        assert_eq!(g.tree.len(), 3);
        assert_eq!(g.tree.depth(), 1);
        assert!(g.tree.nodes()[1..].iter().all(|n| n.polarity == Some(Polarity::Support)));
        assert!(!g.degenerate);
    }

    #[test]
    fn forced_leaf_root_is_degenerate() {
        let m = DegreeModel::empirical([(0, 1.0)]).unwrap();
        let g = generate_homogeneous(2, &m, 0.3, 9).unwrap();
        assert_eq!(g.tree.len(), 1);
        assert!(g.degenerate);
        assert_eq!(g.alignment_depth, 2);
    }

    #[test]
    fn homogeneous_truncates_at_depth() {
        let m = DegreeModel::poisson(3.0).unwrap();
        for seed in 0..20 {
            let g = generate_homogeneous(4, &m, 0.5, seed).unwrap();
            assert!(g.tree.depth() <= 4);
            if g.tree.depth() == 4 {
                assert!(g.tree.level_nodes(4).iter().all(|n| n.is_leaf()));
            }
        }
    }

    #[test]
    fn preferential_base_case() {
        for seed in 0..5 {
            let g = generate_preferential(2, 0.5, seed).unwrap();
            assert_eq!(g.tree.len(), 2);
            assert_eq!(g.tree.depth(), 1);
        }
    }

    #[test]
    fn preferential_size_and_edges() {
        let g = generate_preferential(50, 0.5, 7).unwrap();
        assert_eq!(g.tree.len(), 50);
        assert_eq!(g.tree.edge_count(), 49);
        assert_eq!(g.alignment_depth, g.tree.depth());
    }

    fn shape(t: &ReplyTree) -> Vec<(String, Option<usize>)> {
        t.nodes().iter().map(|n| (n.id.clone(), n.parent)).collect()
    }

    #[test]
    fn topology_does_not_depend_on_q() {
        let a = generate_preferential(50, 0.5, 123).unwrap();
        let b = generate_preferential(50, 0.9, 123).unwrap();
        assert_eq!(shape(&a.tree), shape(&b.tree));
        let m = DegreeModel::poisson(2.0).unwrap();
        let a = generate_homogeneous(6, &m, 0.1, 5).unwrap();
        let b = generate_homogeneous(6, &m, 0.9, 5).unwrap();
        assert_eq!(shape(&a.tree), shape(&b.tree));
        assert_ne!(a.tree.support_counts(), b.tree.support_counts());
    }

    #[test]
    fn invalid_inputs() {
        let m = DegreeModel::poisson(2.0).unwrap();
        assert!(generate_homogeneous(0, &m, 0.5, 1).is_err());
        assert!(matches!(generate_homogeneous(3, &m, 1.5, 1), Err(Error::InvalidProbability { .. })));
        assert!(generate_preferential(1, 0.5, 1).is_err());
    }

    #[test]
    fn ensemble_is_reproducible() {
        let spec = EnsembleSpec {
            generator: GeneratorKind::PreferentialAttachment { nodes: 30 },
            trees: 3,
            q: 0.4,
            seed: 99,
            require_full_depth: false,
        };
        let a: Vec<_> = generate_ensemble(&spec).unwrap().map(|g| g.unwrap().tree).collect();
        let b: Vec<_> = generate_ensemble(&spec).unwrap().map(|g| g.unwrap().tree).collect();
        assert_eq!(a, b);
        assert_ne!(a[0], a[1]);
        assert_eq!(spec.tree(2).unwrap().tree, a[2]);
    }

    #[test]
    fn full_depth_requirement() {
        let spec = EnsembleSpec {
            generator: GeneratorKind::Homogeneous { depth: 8, model: DegreeModel::poisson(1.2).unwrap() },
            trees: 20,
            q: 0.5,
            seed: 4,
            require_full_depth: true,
        };
        let mut retried = false;
        for g in generate_ensemble(&spec).unwrap() {
            let g = g.unwrap();
            assert_eq!(g.tree.depth(), 8);
            retried |= g.attempts > 1;
        }
        assert!(retried);

        let spec = EnsembleSpec {
            generator: GeneratorKind::Homogeneous { depth: 3, model: DegreeModel::empirical([(0, 1.0)]).unwrap() },
            ..spec
        };
        assert!(matches!(spec.tree(0), Err(Error::DepthUnreachable { depth: 3, .. })));
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = EnsembleSpec {
            generator: GeneratorKind::Homogeneous { depth: 8, model: DegreeModel::poisson(2.0).unwrap() },
            trees: 1000,
            q: 0.5,
            seed: 7,
            require_full_depth: false,
        };
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<EnsembleSpec>(&text).unwrap(), spec);
    }

    #[test]
    fn tree_seeds_differ() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|t| tree_seed(7, t)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(tree_seed(7, 0), tree_seed(8, 0));
    }
}
