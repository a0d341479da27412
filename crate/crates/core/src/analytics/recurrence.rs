use crate::{degree::DegreeModel, error::check_probability, Error, Result};

use super::{clamp_probability, LevelPoint, LevelProbabilityProfile, ProfileVariant};

/// Probability that one reply leaves its target winnable: it supports and
/// wins, or attacks and loses.
fn bracket(q: f64, p_next: f64) -> f64 {
    q * p_next + (1.0 - q) * (1.0 - p_next)
}

fn check_depth(depth: usize) -> Result<()> {
    if depth < 1 {
        return Err(Error::InvalidParameter("depth must be at least 1".into()));
    }
    Ok(())
}

/// `p_h = Σ_k ρ_h^k p(k)` with `ρ_h = q p_{h+1} + (1−q)(1−p_{h+1})`, from
/// `p_N = 1` down to the root.
pub fn solve_recurrence(model: &DegreeModel, depth: usize, q: f64) -> Result<LevelProbabilityProfile> {
    check_depth(depth)?;
    check_probability("q", q)?;
    model.validate()?;
    let mut p = vec![1.0; depth + 1];
    let mut terms = 0;
    for h in (0..depth).rev() {
        let s = model.pgf(bracket(q, p[h + 1]));
        terms = terms.max(s.terms);
        p[h] = clamp_probability(s.value);
    }
    Ok(LevelProbabilityProfile {
        variant: ProfileVariant::Full,
        depth,
        points: p.into_iter().enumerate().map(|(level, p)| LevelPoint { level, p }).collect(),
        truncation_terms: Some(terms),
    })
}

/// Poisson special case `p_h = exp(−λ(1 − ρ_h))`.
pub fn poisson_closed_form(lambda: f64, depth: usize, q: f64) -> Result<LevelProbabilityProfile> {
    check_depth(depth)?;
    check_probability("q", q)?;
    DegreeModel::poisson(lambda)?;
    let mut p = vec![1.0; depth + 1];
    for h in (0..depth).rev() {
        p[h] = clamp_probability((-lambda * (1.0 - bracket(q, p[h + 1]))).exp());
    }
    Ok(LevelProbabilityProfile {
        variant: ProfileVariant::Full,
        depth,
        points: p.into_iter().enumerate().map(|(level, p)| LevelPoint { level, p }).collect(),
        truncation_terms: None,
    })
}

/// Reply distribution per level for the leaf-removed recurrence.
#[derive(Clone, Copy, Debug)]
pub enum LeafStructure<'a> {
    /// `p(k|h) = p(k)` below `depth`, leaves at `depth`.
    Homogeneous { model: &'a DegreeModel, depth: usize },
    /// One distribution per level `0..N`; level `N` is all leaves.
    PerLevel(&'a [DegreeModel]),
}

/// Winning probability of non-leaf nodes per level.
///
/// With `p0 = p(0|h+1)` and `r = p^nl_{h+1}`, a reply is favourable with
/// probability `ρ = q(p0 + (1−p0)r) + (1−q)(1−p0)(1−r)`, and
/// `p^nl_h = Σ_{k≥1} ρ^k p(k|h) / (1 − p(0|h))`. Levels made only of leaves
/// (always `N`) have no value.
pub fn solve_recurrence_no_leaves(structure: LeafStructure<'_>, q: f64) -> Result<LevelProbabilityProfile> {
    check_probability("q", q)?;
    let (depth, models): (usize, Vec<&DegreeModel>) = match structure {
        LeafStructure::Homogeneous { model, depth } => {
            check_depth(depth)?;
            (depth, vec![model; depth])
        }
        LeafStructure::PerLevel(levels) => {
            if levels.is_empty() {
                return Err(Error::MissingLeafProfile("no per-level distributions supplied".into()));
            }
            (levels.len(), levels.iter().collect())
        }
    };
    for m in &models {
        m.validate()?;
    }

    let leaf = |h: usize| if h >= depth { 1.0 } else { models[h].leaf_probability() };
    let mut r = vec![None; depth + 1];
    let mut terms = 0;
    for h in (0..depth).rev() {
        let p0 = leaf(h);
        if p0 >= 1.0 {
            continue;
        }
        let next_leaf = leaf(h + 1);
        // An undefined r only occurs with next_leaf = 1, where it has no weight.
        let rn = r[h + 1].unwrap_or(0.0);
        let rho = q * (next_leaf + (1.0 - next_leaf) * rn) + (1.0 - q) * (1.0 - next_leaf) * (1.0 - rn);
        let s = models[h].pgf(clamp_probability(rho));
        terms = terms.max(s.terms);
        r[h] = Some(clamp_probability((s.value - p0) / (1.0 - p0)));
    }
    Ok(LevelProbabilityProfile {
        variant: ProfileVariant::LeafRemoved,
        depth,
        points: r
            .into_iter()
            .enumerate()
            .filter_map(|(level, p)| p.map(|p| LevelPoint { level, p }))
            .collect(),
        truncation_terms: Some(terms),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn values(p: &LevelProbabilityProfile) -> Vec<f64> {
        p.points.iter().map(|x| x.p).collect()
    }

    #[test]
    fn flat_regime_is_inverse_e() {
        let m = DegreeModel::poisson(2.0).unwrap();
        let p = solve_recurrence(&m, 8, 0.5).unwrap();
        for h in 0..8 {
            assert!((p.get(h).unwrap() - (-1.0f64).exp()).abs() < 1e-12);
        }
        assert_eq!(p.get(8), Some(1.0));
        assert!(p.truncation_terms.unwrap() > 10);
    }

    #[test]
    fn all_support_is_one() {
        for m in [
            DegreeModel::poisson(2.0).unwrap(),
            DegreeModel::power_law(2.5, 1).unwrap(),
            DegreeModel::empirical([(0, 0.3), (2, 0.7)]).unwrap(),
        ] {
            let p = solve_recurrence(&m, 6, 1.0).unwrap();
            assert!(values(&p).iter().all(|&x| (x - 1.0).abs() < 1e-12), "{m:?}");
        }
    }

    #[test]
    fn all_attack_last_interior_level_is_leaf_probability() {
        let m = DegreeModel::poisson(2.0).unwrap();
        let p = solve_recurrence(&m, 8, 0.0).unwrap();
        assert!((p.get(7).unwrap() - (-2.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn closed_form_matches_series() {
        for lambda in [0.5, 1.0, 2.0, 4.0] {
            for i in 0..=10 {
                let q = i as f64 / 10.0;
                let m = DegreeModel::poisson(lambda).unwrap();
                let a = solve_recurrence(&m, 8, q).unwrap();
                let b = poisson_closed_form(lambda, 8, q).unwrap();
                for (x, y) in values(&a).iter().zip(values(&b)) {
                    assert!((x - y).abs() < 1e-9, "lambda={lambda} q={q}");
                }
            }
        }
    }

    #[test]
    fn bad_inputs() {
        let m = DegreeModel::poisson(2.0).unwrap();
        assert!(matches!(solve_recurrence(&m, 8, 1.5), Err(Error::InvalidProbability { .. })));
        assert!(solve_recurrence(&m, 0, 0.5).is_err());
        assert!(matches!(
            solve_recurrence_no_leaves(LeafStructure::PerLevel(&[]), 0.5),
            Err(Error::MissingLeafProfile(_))
        ));
    }

    #[test]
    fn leaf_removed_recovers_full_profile() {
        for lambda in [0.5, 2.0, 4.0] {
            for q in [0.0, 0.1, 0.5, 0.9] {
                let m = DegreeModel::poisson(lambda).unwrap();
                let full = solve_recurrence(&m, 8, q).unwrap();
                let nl = solve_recurrence_no_leaves(LeafStructure::Homogeneous { model: &m, depth: 8 }, q).unwrap();
                let p0 = m.leaf_probability();
                assert_eq!(nl.get(8), None);
                for h in 0..8 {
                    let back = nl.get(h).unwrap() * (1.0 - p0) + p0;
                    assert!((back - full.get(h).unwrap()).abs() < 1e-12, "lambda={lambda} q={q} h={h}");
                }
            }
        }
    }

    #[test]
    fn leaf_removed_all_support() {
        let m = DegreeModel::poisson(1.5).unwrap();
        let nl = solve_recurrence_no_leaves(LeafStructure::Homogeneous { model: &m, depth: 5 }, 1.0).unwrap();
        assert_eq!(nl.points.len(), 5);
        assert!(values(&nl).iter().all(|&x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn leaf_removed_last_interior_level() {
        // Children of level N−1 are leaves; a node with k ≥ 1 replies wins
        // iff all are supports: Σ_{k≥1} q^k p(k) / (1 − p(0)).
        let m = DegreeModel::empirical([(0, 0.5), (1, 0.25), (2, 0.25)]).unwrap();
        let nl = solve_recurrence_no_leaves(LeafStructure::Homogeneous { model: &m, depth: 3 }, 0.3).unwrap();
        let want = (0.25 * 0.3 + 0.25 * 0.09) / 0.5;
        assert!((nl.get(2).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn per_level_structure_with_all_leaf_level() {
        let levels = [
            DegreeModel::empirical([(2, 1.0)]).unwrap(),
            DegreeModel::empirical([(0, 1.0)]).unwrap(),
            DegreeModel::empirical([(1, 1.0)]).unwrap(),
        ];
        let nl = solve_recurrence_no_leaves(LeafStructure::PerLevel(&levels), 0.2).unwrap();
        assert_eq!(nl.get(1), None);
        assert_eq!(nl.get(3), None);
        // Level 2: one supporting leaf reply. Level 0: two leaf replies.
        assert!((nl.get(2).unwrap() - 0.2).abs() < 1e-15);
        assert!((nl.get(0).unwrap() - 0.04).abs() < 1e-15);
    }
}
