use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::{error::check_probability, Result};

use super::LevelProbabilityProfile;

/// Regime tolerance for exactly known `q`.
pub const ANALYTIC_REGIME_TOLERANCE: f64 = 1e-9;
/// Spread below which a profile counts as constant under its deepest level.
pub const FLAT_PROFILE_TOLERANCE: f64 = 1e-9;

/// Half-width of a 95% binomial interval for `q̂` estimated from `edges` edges.
pub fn estimated_regime_tolerance(q_hat: f64, edges: usize) -> f64 {
    if edges == 0 {
        return 0.5;
    }
    1.96 * (q_hat * (1.0 - q_hat) / edges as f64).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Oscillatory,
    Flat,
    MonotoneDecay,
}

impl Regime {
    pub fn of(q: f64, epsilon: f64) -> Self {
        if (q - 0.5).abs() <= epsilon {
            Regime::Flat
        } else if q < 0.5 {
            Regime::Oscillatory
        } else {
            Regime::MonotoneDecay
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StructureHint {
    Homogeneous,
    ScaleFree,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderedLevel {
    pub level: usize,
    pub distance_from_max: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub q: f64,
    pub epsilon: f64,
    pub regime: Regime,
    pub depth: usize,
    /// Levels to read, first to last.
    pub recommended_order: Vec<usize>,
    /// The same order with distances and probabilities attached.
    pub levels: Vec<OrderedLevel>,
    /// The profile was identically 1, so no ordering is informative.
    #[serde(default)]
    pub degenerate: bool,
}

fn parity_order(depth: usize) -> Vec<usize> {
    let even = (0..=depth).step_by(2);
    let odd = (1..=depth).step_by(2);
    even.chain(odd).map(|d| depth - d).collect()
}

fn flat_order(depth: usize) -> Vec<usize> {
    std::iter::once(depth).chain(0..depth).collect()
}

fn deepest_first(depth: usize) -> Vec<usize> {
    (0..=depth).rev().collect()
}

fn annotate(order: &[usize], depth: usize, p: impl Fn(usize) -> Option<f64>) -> Vec<OrderedLevel> {
    order
        .iter()
        .map(|&level| OrderedLevel { level, distance_from_max: depth - level, p: p(level) })
        .collect()
}

/// Regime of `q` and the matching level reading order for a tree of `depth`.
pub fn classify_regime(q: f64, epsilon: f64, depth: usize) -> Result<RegimeReport> {
    check_probability("q", q)?;
    let regime = Regime::of(q, epsilon);
    let order = match regime {
        Regime::Oscillatory => parity_order(depth),
        Regime::Flat => flat_order(depth),
        Regime::MonotoneDecay => deepest_first(depth),
    };
    Ok(RegimeReport {
        q,
        epsilon,
        regime,
        depth,
        levels: annotate(&order, depth, |_| None),
        recommended_order: order,
        degenerate: false,
    })
}

/// Reading order for an observed or computed profile.
///
/// Flat profiles (or homogeneous structure with `q̂` near ½) read the deepest
/// level and then the rest by index. Scale-free structure or `q̂ > 0.4` reads
/// levels by decreasing winning probability, deeper first on ties.
/// Homogeneous structure with lower `q̂` reads even distances from the
/// deepest level before odd ones. Only levels present in the profile are
/// ordered.
pub fn recommend_sampling(
    profile: &LevelProbabilityProfile,
    q_hat: f64,
    hint: StructureHint,
    epsilon: f64,
) -> Result<RegimeReport> {
    check_probability("q_hat", q_hat)?;
    let depth = profile.depth;
    let present = |levels: Vec<usize>| -> Vec<usize> {
        levels.into_iter().filter(|&l| profile.get(l).is_some()).collect()
    };
    let near_half = (q_hat - 0.5).abs() <= epsilon;
    let order = if is_constant_below_max(profile, FLAT_PROFILE_TOLERANCE)
        || (hint == StructureHint::Homogeneous && near_half)
    {
        present(flat_order(depth))
    } else if hint == StructureHint::ScaleFree || q_hat > 0.4 {
        let mut pts = profile.points.clone();
        pts.sort_by(|a, b| b.p.partial_cmp(&a.p).unwrap_or(Ordering::Equal).then(b.level.cmp(&a.level)));
        pts.into_iter().map(|p| p.level).collect()
    } else {
        present(parity_order(depth))
    };
    Ok(RegimeReport {
        q: q_hat,
        epsilon,
        regime: Regime::of(q_hat, epsilon),
        depth,
        levels: annotate(&order, depth, |l| profile.get(l)),
        recommended_order: order,
        degenerate: profile.is_constant_one(),
    })
}

/// All values strictly above the deepest present level agree within `tol`.
pub fn is_constant_below_max(profile: &LevelProbabilityProfile, tol: f64) -> bool {
    let below: Vec<f64> = profile.points.iter().filter(|p| p.level < profile.depth).map(|p| p.p).collect();
    match below.first() {
        Some(&first) => below.iter().all(|&x| (x - first).abs() <= tol),
        None => true,
    }
}

/// `p_h − p_{h+1}` is nonzero at every level, negative at `h = N−1`, and
/// changes sign from each level to the next.
pub fn alternates_by_parity(profile: &LevelProbabilityProfile) -> bool {
    let d = profile.level_differences();
    if d.len() != profile.depth || d.is_empty() {
        return false;
    }
    let last_negative = d.last().is_some_and(|(_, x)| *x < 0.0);
    last_negative && d.iter().all(|(_, x)| *x != 0.0) && d.windows(2).all(|w| w[0].1 * w[1].1 < 0.0)
}

/// `p_h < p_{h+1}` for every `h < N`.
pub fn strictly_increasing(profile: &LevelProbabilityProfile) -> bool {
    let d = profile.level_differences();
    d.len() == profile.depth && d.iter().all(|(_, x)| *x < 0.0)
}
