//! Winning and losing arguments.
//!
//! Two independent routes are provided for grounded semantics on reply
//! trees: reduce the bipolar framework to a plain attack graph and run the
//! iterative grounded-extension algorithm, or propagate `±1` states from the
//! deepest level upwards through the sign matrix. The two agree except
//! where a support reply targets an attacking argument (see
//! [`propagate_states`]). The relaxed rules
//! (leaf exception, majority, weighted majority) only exist as propagation
//! rules.

use std::{
    collections::{BTreeMap, BTreeSet, HashMap},
    fmt,
    str::FromStr,
};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::{tree::Polarity, Error, ReplyTree, Result};

/// Largest framework accepted by [`enumerate_complete_extensions`].
pub const ORACLE_LIMIT: usize = 20;

/// Weighted sums with `|sum| <= TIE_TOLERANCE` count as ties.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// An abstract argumentation framework `⟨A, R⟩`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackGraph {
    arguments: BTreeSet<String>,
    attacks: BTreeSet<(String, String)>,
}

impl AttackGraph {
    pub fn new<A, S>(arguments: A, attacks: impl IntoIterator<Item = (S, S)>) -> Result<Self>
    where
        A: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let arguments: BTreeSet<String> = arguments.into_iter().map(Into::into).collect();
        let mut set = BTreeSet::new();
        for (a, b) in attacks {
            let (a, b) = (a.into(), b.into());
            for x in [&a, &b] {
                if !arguments.contains(x) {
                    return Err(Error::UnknownArgument(x.clone()));
                }
            }
            set.insert((a, b));
        }
        Ok(Self { arguments, attacks: set })
    }

    pub fn arguments(&self) -> &BTreeSet<String> {
        &self.arguments
    }

    pub fn attacks(&self) -> &BTreeSet<(String, String)> {
        &self.attacks
    }

    /// Dense indexing: argument names in sorted order plus attacker lists.
    fn indexed(&self) -> (Vec<&str>, Vec<Vec<usize>>, Vec<Vec<usize>>) {
        let names: Vec<&str> = self.arguments.iter().map(String::as_str).collect();
        let pos: HashMap<&str, usize> = names.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let mut attackers = vec![Vec::new(); names.len()];
        let mut targets = vec![Vec::new(); names.len()];
        for (a, b) in &self.attacks {
            let (a, b) = (pos[a.as_str()], pos[b.as_str()]);
            attackers[b].push(a);
            targets[a].push(b);
        }
        (names, attackers, targets)
    }

    pub fn is_acyclic(&self) -> bool {
        let (names, attackers, targets) = self.indexed();
        let mut pending: Vec<usize> = attackers.iter().map(Vec::len).collect();
        let mut ready: Vec<usize> = (0..names.len()).filter(|&i| pending[i] == 0).collect();
        let mut seen = 0;
        while let Some(v) = ready.pop() {
            seen += 1;
            for &t in &targets[v] {
                pending[t] -= 1;
                if pending[t] == 0 {
                    ready.push(t);
                }
            }
        }
        seen == names.len()
    }
}

/// Folds supports into attacks: `(a, b)` is an attack iff `a` support-defeats
/// `b` (a support path from `a` reaches an attacker of `b`) or `a` indirectly
/// defeats `b` (`a` attacks some `c` with a support path from `c` to `b`).
/// Support paths may be empty, so direct attacks are kept.
pub fn reduce_baf_to_af(tree: &ReplyTree) -> AttackGraph {
    let nodes = tree.nodes();
    let mut attacks = BTreeSet::new();
    for (x, node) in nodes.iter().enumerate() {
        if node.polarity != Some(Polarity::Attack) {
            continue;
        }
        let y = node.parent.expect("attacking node has a parent");

        // Everything that reaches x through supports support-defeats y.
        let mut stack = vec![x];
        while let Some(a) = stack.pop() {
            attacks.insert((nodes[a].id.clone(), nodes[y].id.clone()));
            stack.extend(
                nodes[a]
                    .children
                    .iter()
                    .copied()
                    .filter(|&c| nodes[c].polarity == Some(Polarity::Support)),
            );
        }

        // x indirectly defeats everything y reaches through supports.
        let mut b = y;
        while nodes[b].polarity == Some(Polarity::Support) {
            b = nodes[b].parent.expect("supporting node has a parent");
            attacks.insert((node.id.clone(), nodes[b].id.clone()));
        }
    }
    AttackGraph {
        arguments: nodes.iter().map(|n| n.id.clone()).collect(),
        attacks,
    }
}

/// Grounded extension by repeatedly accepting unattacked arguments and
/// discarding the arguments they attack.
pub fn grounded_extension(graph: &AttackGraph) -> Result<BTreeSet<String>> {
    if !graph.is_acyclic() {
        return Err(Error::NotAcyclic);
    }
    let (names, attackers, _) = graph.indexed();
    let mut alive = vec![true; names.len()];
    loop {
        let accepted: Vec<usize> = (0..names.len())
            .filter(|&a| alive[a] && attackers[a].iter().all(|&b| !alive[b]))
            .collect();
        if accepted.len() == alive.iter().filter(|&&x| x).count() {
            break;
        }
        let mut is_in = vec![false; names.len()];
        for &a in &accepted {
            is_in[a] = true;
        }
        let rejected: Vec<usize> = (0..names.len())
            .filter(|&a| alive[a] && attackers[a].iter().any(|&b| is_in[b]))
            .collect();
        // Acyclic graphs always have an unattacked argument that attacks something
        // still alive, unless everything left is accepted.
        debug_assert!(!rejected.is_empty());
        for a in rejected {
            alive[a] = false;
        }
    }
    Ok(names
        .iter()
        .zip(&alive)
        .filter(|(_, &keep)| keep)
        .map(|(n, _)| n.to_string())
        .collect())
}

/// All complete extensions by exhaustive subset enumeration.
///
/// This is a test oracle for small frameworks; on acyclic inputs it returns a
/// single extension that coincides with [`grounded_extension`]. Results are
/// ordered by size, then lexicographically.
pub fn enumerate_complete_extensions(graph: &AttackGraph) -> Result<Vec<BTreeSet<String>>> {
    let n = graph.arguments.len();
    if n > ORACLE_LIMIT {
        return Err(Error::TooLarge { size: n, limit: ORACLE_LIMIT });
    }
    let (names, attackers, targets) = graph.indexed();
    let mask_of = |list: &Vec<usize>| list.iter().fold(0u32, |m, &i| m | (1 << i));
    let attacked_by: Vec<u32> = attackers.iter().map(mask_of).collect();
    let attacks_of: Vec<u32> = targets.iter().map(mask_of).collect();

    let mut out = Vec::new();
    for set in 0u32..(1u32 << n) {
        let hit = attacks_of
            .iter()
            .enumerate()
            .filter(|(i, _)| set & (1 << i) != 0)
            .fold(0u32, |m, (_, &a)| m | a);
        if hit & set != 0 {
            continue;
        }
        let defended = (0..n)
            .filter(|&a| attacked_by[a] & !hit == 0)
            .fold(0u32, |m, a| m | (1 << a));
        if defended == set {
            out.push(set);
        }
    }
    let mut sets: Vec<BTreeSet<String>> = out
        .into_iter()
        .map(|s| (0..n).filter(|i| s & (1 << i) != 0).map(|i| names[i].to_string()).collect())
        .collect();
    sets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    Ok(sets)
}

/// Sparse view of `J`, where `J[i][j]` is `+1` if `i` supports `j`, `-1` if
/// `i` attacks `j`, and 0 otherwise. In a reply tree the only nonzero entry of
/// row `i` is at its parent.
#[derive(Clone, Copy, Debug)]
pub struct SignMatrix<'t> {
    tree: &'t ReplyTree,
}

impl<'t> SignMatrix<'t> {
    pub fn new(tree: &'t ReplyTree) -> Self {
        Self { tree }
    }

    pub fn get(&self, i: usize, j: usize) -> i8 {
        let n = self.tree.node(i);
        match (n.parent, n.polarity) {
            (Some(p), Some(pol)) if p == j => pol.sign(),
            _ => 0,
        }
    }

    /// Nonzero entries of column `j`: `(replier, J[replier][j])`.
    pub fn repliers(&self, j: usize) -> impl Iterator<Item = (usize, i8)> + 't {
        let tree = self.tree;
        tree.node(j)
            .children
            .iter()
            .map(move |&c| (c, tree.node(c).polarity.expect("reply has a polarity").sign()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum State {
    Win,
    Lose,
}

impl State {
    pub fn value(self) -> i8 {
        match self {
            State::Win => 1,
            State::Lose => -1,
        }
    }

    fn from_sign(positive: bool) -> Self {
        if positive {
            State::Win
        } else {
            State::Lose
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum WinningRule {
    #[default]
    Grounded,
    /// Leaf repliers are ignored unless every replier is a leaf.
    LeavesOnlyException,
    /// Sign of the sum of `J·s` over repliers; ties lose.
    Majority,
    /// Majority with each replier weighted by `(k+1)^(s·beta)`; ties lose.
    GeneralizedMajority { beta: f64 },
}

impl WinningRule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            WinningRule::GeneralizedMajority { beta } if !(beta.is_finite() && beta >= 0.0) => {
                Err(Error::InvalidParameter(format!("beta must be finite and >= 0, got {beta}")))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            WinningRule::Grounded => "grounded",
            WinningRule::LeavesOnlyException => "leaves-exception",
            WinningRule::Majority => "majority",
            WinningRule::GeneralizedMajority { .. } => "gen-majority",
        }
    }
}

impl fmt::Display for WinningRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WinningRule::GeneralizedMajority { beta } => write!(f, "gen-majority(beta={beta})"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for WinningRule {
    type Err = Error;

    /// Accepts `grounded`, `leaves-exception`, `majority`, `gen-majority`
    /// (beta 1) and `gen-majority:<beta>`.
    fn from_str(s: &str) -> Result<Self> {
        let rule = match s {
            "grounded" => WinningRule::Grounded,
            "leaves-exception" => WinningRule::LeavesOnlyException,
            "majority" => WinningRule::Majority,
            "gen-majority" => WinningRule::GeneralizedMajority { beta: 1.0 },
            other => match other.strip_prefix("gen-majority:") {
                Some(b) => WinningRule::GeneralizedMajority {
                    beta: b.parse().map_err(|_| {
                        Error::InvalidParameter(format!("cannot parse beta `{b}`"))
                    })?,
                },
                None => return Err(Error::InvalidParameter(format!("unknown rule `{other}`"))),
            },
        };
        rule.validate()?;
        Ok(rule)
    }
}

/// Total `±1` labelling of a tree, indexed like [`ReplyTree::nodes`].
#[derive(Clone, Debug, PartialEq)]
pub struct StateAssignment {
    pub rule: WinningRule,
    pub states: Vec<State>,
}

/// JSON form: `{"rule": str, "states": {id: 1 | -1}}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateDocument {
    pub rule: String,
    pub states: BTreeMap<String, i8>,
}

impl StateAssignment {
    pub fn state(&self, index: usize) -> State {
        self.states[index]
    }

    pub fn is_winning(&self, index: usize) -> bool {
        self.states[index] == State::Win
    }

    /// Sorted ids of winning nodes.
    pub fn winners(&self, tree: &ReplyTree) -> Vec<String> {
        let mut w: Vec<String> = tree
            .nodes()
            .iter()
            .zip(&self.states)
            .filter(|(_, &s)| s == State::Win)
            .map(|(n, _)| n.id.clone())
            .collect();
        w.sort();
        w
    }

    pub fn to_document(&self, tree: &ReplyTree) -> StateDocument {
        StateDocument {
            rule: self.rule.to_string(),
            states: tree
                .nodes()
                .iter()
                .zip(&self.states)
                .map(|(n, s)| (n.id.clone(), s.value()))
                .collect(),
        }
    }
}

/// Assigns states from the deepest level up. Leaves always win; interior
/// nodes follow `rule`.
///
/// Under [`WinningRule::Grounded`] the winners equal the grounded extension
/// of [`reduce_baf_to_af`] whenever no support reply targets an attacking
/// argument. Otherwise they can differ: a winning supporter of a losing
/// attacker still support-defeats the attacker's target in the reduced
/// graph, whereas here the target only sees the attacker's state.
pub fn propagate_states(tree: &ReplyTree, rule: WinningRule) -> Result<StateAssignment> {
    rule.validate()?;
    let j = SignMatrix::new(tree);
    let mut states = vec![State::Win; tree.len()];
    // Children sit at higher indices than their parent, so a reverse sweep
    // sees every replier before its target.
    for i in (0..tree.len()).rev() {
        let node = tree.node(i);
        if node.is_leaf() {
            continue;
        }
        let signed = |(c, sign): (usize, i8)| sign * states[c].value();
        states[i] = match rule {
            WinningRule::Grounded => State::from_sign(j.repliers(i).map(signed).min() == Some(1)),
            WinningRule::LeavesOnlyException => {
                let inner: Vec<i8> = j
                    .repliers(i)
                    .filter(|&(c, _)| !tree.node(c).is_leaf())
                    .map(signed)
                    .collect();
                let m = if inner.is_empty() {
                    j.repliers(i).map(signed).min()
                } else {
                    inner.into_iter().min()
                };
                State::from_sign(m == Some(1))
            }
            WinningRule::Majority => {
                State::from_sign(j.repliers(i).map(|r| signed(r) as i64).sum::<i64>() > 0)
            }
            WinningRule::GeneralizedMajority { beta } => {
                State::from_sign(weighted_majority(tree, &j, &states, i, beta))
            }
        };
    }
    Ok(StateAssignment { rule, states })
}

/// `true` iff `Σ J·s·(k+1)^(s·beta)` over the repliers of `i` is strictly
/// positive. Integer `beta` is evaluated exactly.
fn weighted_majority(tree: &ReplyTree, j: &SignMatrix<'_>, states: &[State], i: usize, beta: f64) -> bool {
    if beta.fract() == 0.0 && beta <= 64.0 {
        let e = beta as u32;
        let mut sum = BigRational::zero();
        for (c, sign) in j.repliers(i) {
            let base = BigInt::from(tree.node(c).in_degree() + 1).pow(e);
            let weight = match states[c] {
                State::Win => BigRational::from_integer(base),
                State::Lose => BigRational::new(BigInt::one(), base),
            };
            let term = weight * BigInt::from(sign * states[c].value());
            sum += term;
        }
        sum.is_positive()
    } else {
        let sum: f64 = j
            .repliers(i)
            .map(|(c, sign)| {
                let s = states[c].value() as f64;
                sign as f64 * s * ((tree.node(c).in_degree() + 1) as f64).powf(s * beta)
            })
            .sum();
        sum > TIE_TOLERANCE
    }
}
