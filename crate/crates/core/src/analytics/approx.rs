use std::collections::BTreeMap;

use crate::{error::check_probability, estimators::TreeObservables, Error, Result};

use super::{clamp_probability, LevelPoint, LevelProbabilityProfile, ProfileVariant};

/// Per-tree approximation of the leaf-removed winning probability,
/// averaged over trees at each alignment key.
///
/// Each tree runs the recursion
/// `r_h = [q(p̂0 + (1−p̂0) r_{h+1}) + (1−q)(1−p̂0)(1−r_{h+1})]^{k̂_h}`, with
/// `p̂0` the observed leaf fraction at `h+1` and `k̂_h` the mean in-degree of
/// the non-leaf nodes at `h`, from its own deepest level up. `q` is the
/// tree's own support fraction unless given. Keys supported by fewer than
/// `min_trees` trees are dropped.
pub fn approx_no_leaves(
    observables: &[TreeObservables],
    q: Option<f64>,
    min_trees: usize,
) -> Result<LevelProbabilityProfile> {
    if let Some(q) = q {
        check_probability("q", q)?;
    }
    let mut sums: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for obs in observables {
        let Some(q) = q.or(obs.q_hat) else { continue };
        let levels = &obs.levels;
        let Some(depth) = levels.len().checked_sub(1) else { continue };
        let mut r: Option<f64> = None;
        for h in (0..depth).rev() {
            let next_leaf = levels[h + 1].p_leaf();
            let Some(k) = levels[h].mean_in_degree_non_leaf() else {
                r = None;
                continue;
            };
            let rn = r.unwrap_or(0.0);
            let rho = q * (next_leaf + (1.0 - next_leaf) * rn) + (1.0 - q) * (1.0 - next_leaf) * (1.0 - rn);
            let value = clamp_probability(rho).powf(k);
            r = Some(value);
            if let Some(d) = obs.alignment_depth.checked_sub(h) {
                let e = sums.entry(d).or_insert((0.0, 0));
                e.0 += value;
                e.1 += 1;
            }
        }
    }
    let kept: Vec<(usize, f64)> = sums
        .into_iter()
        .filter(|(_, (_, n))| *n >= min_trees.max(1))
        .map(|(d, (s, n))| (d, s / n as f64))
        .collect();
    let Some(depth) = kept.iter().map(|(d, _)| *d).max() else {
        return Err(Error::InsufficientLevels(format!(
            "no alignment key has {min_trees} trees with non-leaf nodes"
        )));
    };
    let mut points: Vec<LevelPoint> = kept.into_iter().map(|(d, p)| LevelPoint { level: depth - d, p }).collect();
    points.sort_by_key(|p| p.level);
    Ok(LevelProbabilityProfile { variant: ProfileVariant::LeafRemovedApprox, depth, points, truncation_terms: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::TreeLevelStats;

    /// A tree described level by level as (nodes, leaves, in-degree sum).
    fn obs(levels: &[(usize, usize, usize)], q_hat: f64) -> TreeObservables {
        TreeObservables {
            alignment_depth: levels.len() - 1,
            q_hat: Some(q_hat),
            levels: levels
                .iter()
                .enumerate()
                .map(|(level, &(nodes, leaves, k))| TreeLevelStats {
                    level,
                    nodes,
                    winners: leaves,
                    leaves,
                    in_degree_sum: k,
                })
                .collect(),
        }
    }

    #[test]
    fn half_support_reduces_to_power_of_half() {
        // Binary tree of depth 3: k̂ = 2 on every interior level.
        let t = obs(&[(1, 0, 2), (2, 0, 4), (4, 0, 8), (8, 8, 0)], 0.5);
        let p = approx_no_leaves(&[t], None, 1).unwrap();
        assert_eq!(p.depth, 3);
        for h in 0..3 {
            assert!((p.get(h).unwrap() - 0.25).abs() < 1e-15);
        }
        assert_eq!(p.get(3), None);
    }

    #[test]
    fn single_reply_levels_give_one_half() {
        let t = obs(&[(1, 0, 1), (1, 0, 1), (1, 1, 0)], 0.3);
        let p = approx_no_leaves(&[t], Some(0.5), 1).unwrap();
        assert!(p.points.iter().all(|x| (x.p - 0.5).abs() < 1e-15));
    }

    #[test]
    fn exact_on_chains() {
        // A chain under q: r_{N-1} = q, r_h = q r + (1−q)(1−r).
        let q = 0.2;
        let t = obs(&[(1, 0, 1), (1, 0, 1), (1, 0, 1), (1, 1, 0)], q);
        let p = approx_no_leaves(&[t], None, 1).unwrap();
        let r2 = q;
        let r1 = q * r2 + (1.0 - q) * (1.0 - r2);
        let r0 = q * r1 + (1.0 - q) * (1.0 - r1);
        assert!((p.get(2).unwrap() - r2).abs() < 1e-15);
        assert!((p.get(1).unwrap() - r1).abs() < 1e-15);
        assert!((p.get(0).unwrap() - r0).abs() < 1e-15);
    }

    #[test]
    fn threshold() {
        let t = obs(&[(1, 0, 1), (1, 1, 0)], 0.5);
        assert!(matches!(approx_no_leaves(&[t.clone()], None, 2), Err(Error::InsufficientLevels(_))));
        assert!(approx_no_leaves(&[t.clone(), t], None, 2).is_ok());
    }
}
