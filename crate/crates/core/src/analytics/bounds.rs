use serde::{Deserialize, Serialize};

use crate::{error::check_probability, Error, Result};

use super::{clamp_probability, LevelPoint, LevelProbabilityProfile, ProfileVariant};

/// Iterates of the upper-bound map `x ↦ p0 + [qx + (1−q)(1−x)](1−p0)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CobwebTrace {
    pub leaf_probability: f64,
    pub q: f64,
    /// `(p_{h+1}, p_h)` pairs from the deepest level upward; the first input is 1.
    pub steps: Vec<(f64, f64)>,
}

impl CobwebTrace {
    /// Polyline alternating between the map and the diagonal, starting on
    /// the diagonal at `(1, 1)`.
    pub fn staircase(&self) -> Vec<(f64, f64)> {
        let mut pts = Vec::with_capacity(2 * self.steps.len() + 1);
        if let Some(&(x0, _)) = self.steps.first() {
            pts.push((x0, x0));
        }
        for &(x, y) in &self.steps {
            pts.push((x, y));
            pts.push((y, y));
        }
        pts
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,x,y\n");
        for (i, (x, y)) in self.steps.iter().enumerate() {
            out.push_str(&format!("{i},{x},{y}\n"));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundProfiles {
    pub upper: LevelProbabilityProfile,
    pub lower: LevelProbabilityProfile,
    pub trace: CobwebTrace,
}

/// Upper bound `p_h^max` from the affine map above, and the constant lower
/// bound `p(0)`; both equal 1 at level `depth`.
pub fn bound_profiles(p0: f64, depth: usize, q: f64) -> Result<BoundProfiles> {
    check_probability("p0", p0)?;
    check_probability("q", q)?;
    if p0 >= 1.0 {
        return Err(Error::InvalidProbability { name: "p0", value: p0 });
    }
    if depth < 1 {
        return Err(Error::InvalidParameter("depth must be at least 1".into()));
    }
    let mut upper = vec![1.0; depth + 1];
    let mut steps = Vec::with_capacity(depth);
    for h in (0..depth).rev() {
        let x = upper[h + 1];
        let y = clamp_probability(p0 + (q * x + (1.0 - q) * (1.0 - x)) * (1.0 - p0));
        upper[h] = y;
        steps.push((x, y));
    }
    let lower = (0..=depth).map(|h| if h == depth { 1.0 } else { p0 });
    Ok(BoundProfiles {
        upper: LevelProbabilityProfile {
            variant: ProfileVariant::UpperBound,
            depth,
            points: upper.into_iter().enumerate().map(|(level, p)| LevelPoint { level, p }).collect(),
            truncation_terms: None,
        },
        lower: LevelProbabilityProfile {
            variant: ProfileVariant::LowerBound,
            depth,
            points: lower.enumerate().map(|(level, p)| LevelPoint { level, p }).collect(),
            truncation_terms: None,
        },
        trace: CobwebTrace { leaf_probability: p0, q, steps },
    })
}
