//! Reply trees as bipolar argumentation frameworks.
//!
//! Every non-root node replies to exactly one parent and either supports or
//! attacks it. Levels, in-degrees and the depth are derived on construction
//! and never read from input documents.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Support,
    Attack,
}

impl Polarity {
    /// Entry of the sign matrix for an edge with this polarity.
    pub fn sign(self) -> i8 {
        match self {
            Polarity::Support => 1,
            Polarity::Attack => -1,
        }
    }
}

/// One node of the on-disk tree format.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: String,
    #[serde(default)]
    pub parent: Option<String>,
    #[serde(default)]
    pub polarity: Option<Polarity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub deleted: bool,
}

impl NodeRecord {
    pub fn root(id: impl Into<String>) -> Self {
        Self { id: id.into(), parent: None, polarity: None, text: None, deleted: false }
    }

    pub fn reply(id: impl Into<String>, parent: impl Into<String>, polarity: Polarity) -> Self {
        Self {
            id: id.into(),
            parent: Some(parent.into()),
            polarity: Some(polarity),
            text: None,
            deleted: false,
        }
    }
}

/// `{"nodes": [...]}` document. Unknown fields are ignored.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeDocument {
    pub nodes: Vec<NodeRecord>,
}

impl TreeDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArgumentNode {
    pub id: String,
    pub parent: Option<usize>,
    pub polarity: Option<Polarity>,
    pub level: usize,
    pub children: Vec<usize>,
}

impl ArgumentNode {
    pub fn in_degree(&self) -> usize {
        self.children.len()
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn is_root(&self) -> bool {
        self.parent.is_none()
    }
}

/// A level together with its distance from the deepest level of the tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LevelIndex {
    pub level: usize,
    pub distance: usize,
}

impl LevelIndex {
    pub fn new(level: usize, depth: usize) -> Option<Self> {
        (level <= depth).then(|| Self { level, distance: depth - level })
    }
}

/// Validated, immutable reply tree.
///
/// Nodes are stored sorted by `(level, id)`, so the root is index 0, the
/// nodes of each level are contiguous, and the layout does not depend on the
/// order of the input records.
#[derive(Clone, Debug)]
pub struct ReplyTree {
    nodes: Vec<ArgumentNode>,
    index: HashMap<String, usize>,
    level_starts: Vec<usize>,
}

impl PartialEq for ReplyTree {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes
    }
}

impl Eq for ReplyTree {}

impl ReplyTree {
    /// Validates `records` and builds the tree.
    pub fn build(records: &[NodeRecord]) -> Result<Self> {
        let mut by_id: HashMap<&str, usize> = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if by_id.insert(r.id.as_str(), i).is_some() {
                return Err(Error::DuplicateId(r.id.clone()));
            }
        }

        let mut roots: Vec<&str> = records
            .iter()
            .filter(|r| r.parent.is_none())
            .map(|r| r.id.as_str())
            .collect();
        roots.sort_unstable();
        let root = match roots.as_slice() {
            [] => return Err(Error::NoRoot),
            [single] => by_id[single],
            many => return Err(Error::MultipleRoots(many.iter().map(|s| s.to_string()).collect())),
        };

        // Visit in id order so the reported error is independent of input order.
        let mut order: Vec<usize> = (0..records.len()).collect();
        order.sort_unstable_by(|&a, &b| records[a].id.cmp(&records[b].id));
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); records.len()];
        for &i in &order {
            let r = &records[i];
            match (&r.parent, r.polarity) {
                (None, Some(_)) => return Err(Error::PolarityOnRoot(r.id.clone())),
                (None, None) => {}
                (Some(_), None) => return Err(Error::MissingPolarity(r.id.clone())),
                (Some(p), Some(_)) => match by_id.get(p.as_str()) {
                    Some(&pi) => children[pi].push(i),
                    None => {
                        return Err(Error::OrphanParent { id: r.id.clone(), parent: p.clone() })
                    }
                },
            }
        }

        let mut level = vec![usize::MAX; records.len()];
        level[root] = 0;
        let mut queue = VecDeque::from([root]);
        let mut reached = 1;
        while let Some(v) = queue.pop_front() {
            for &c in &children[v] {
                level[c] = level[v] + 1;
                reached += 1;
                queue.push_back(c);
            }
        }
        if reached < records.len() {
            let mut stuck: Vec<String> = (0..records.len())
                .filter(|&i| level[i] == usize::MAX)
                .map(|i| records[i].id.clone())
                .collect();
            stuck.sort_unstable();
            return Err(Error::CycleDetected(stuck));
        }

        order.sort_by(|&a, &b| level[a].cmp(&level[b]).then_with(|| records[a].id.cmp(&records[b].id)));
        let mut new_index = vec![0usize; records.len()];
        for (new, &old) in order.iter().enumerate() {
            new_index[old] = new;
        }

        let mut nodes: Vec<ArgumentNode> = order
            .iter()
            .map(|&old| {
                let r = &records[old];
                ArgumentNode {
                    id: r.id.clone(),
                    parent: r.parent.as_ref().map(|p| new_index[by_id[p.as_str()]]),
                    polarity: r.polarity,
                    level: level[old],
                    children: Vec::new(),
                }
            })
            .collect();
        for i in 1..nodes.len() {
            let p = nodes[i].parent.expect("non-root has a parent");
            nodes[p].children.push(i);
        }

        let depth = nodes.last().map_or(0, |n| n.level);
        let mut level_starts = vec![0usize; depth + 2];
        for n in &nodes {
            level_starts[n.level + 1] += 1;
        }
        for h in 1..level_starts.len() {
            level_starts[h] += level_starts[h - 1];
        }
        let index = nodes.iter().enumerate().map(|(i, n)| (n.id.clone(), i)).collect();

        Ok(Self { nodes, index, level_starts })
    }

    pub fn from_document(doc: &TreeDocument) -> Result<Self> {
        Self::build(&doc.nodes)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_document(&TreeDocument::from_json(text)?)
    }

    /// Structure-only export; text and flags are not retained by the tree.
    pub fn to_document(&self) -> TreeDocument {
        TreeDocument {
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeRecord {
                    id: n.id.clone(),
                    parent: n.parent.map(|p| self.nodes[p].id.clone()),
                    polarity: n.polarity,
                    text: None,
                    deleted: false,
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Maximum level `N`.
    pub fn depth(&self) -> usize {
        self.level_starts.len() - 2
    }

    pub fn root(&self) -> &ArgumentNode {
        &self.nodes[0]
    }

    pub fn nodes(&self) -> &[ArgumentNode] {
        &self.nodes
    }

    pub fn node(&self, index: usize) -> &ArgumentNode {
        &self.nodes[index]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn get(&self, id: &str) -> Option<&ArgumentNode> {
        self.index_of(id).map(|i| &self.nodes[i])
    }

    /// Node indices at level `h`, empty past the depth.
    pub fn level_range(&self, h: usize) -> std::ops::Range<usize> {
        if h > self.depth() {
            return 0..0;
        }
        self.level_starts[h]..self.level_starts[h + 1]
    }

    pub fn level_nodes(&self, h: usize) -> &[ArgumentNode] {
        &self.nodes[self.level_range(h)]
    }

    /// `n_h` for `h = 0..=N`.
    pub fn level_sizes(&self) -> Vec<usize> {
        self.level_starts.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn level_index(&self, h: usize) -> Option<LevelIndex> {
        LevelIndex::new(h, self.depth())
    }

    pub fn leaves(&self) -> impl Iterator<Item = &ArgumentNode> {
        self.nodes.iter().filter(|n| n.is_leaf())
    }

    /// Fraction of leaves at each level; the entry for `N` is always 1.
    pub fn leaf_fraction_per_level(&self) -> Vec<f64> {
        (0..=self.depth())
            .map(|h| {
                let level = self.level_nodes(h);
                level.iter().filter(|n| n.is_leaf()).count() as f64 / level.len() as f64
            })
            .collect()
    }

    /// `(supporting edges, all edges)`.
    pub fn support_counts(&self) -> (usize, usize) {
        let supports = self
            .nodes
            .iter()
            .filter(|n| n.polarity == Some(Polarity::Support))
            .count();
        (supports, self.edge_count())
    }

    /// Fraction of supporting edges `q̂`.
    pub fn estimate_q(&self) -> Result<f64> {
        match self.support_counts() {
            (_, 0) => Err(Error::NoEdges),
            (s, e) => Ok(s as f64 / e as f64),
        }
    }
}
