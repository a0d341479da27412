//! Level-wise winning probabilities: recurrences, bounds, regimes and
//! sampling orders.

mod approx;
mod bounds;
mod recurrence;
mod regime;

pub use approx::approx_no_leaves;
pub use bounds::{bound_profiles, BoundProfiles, CobwebTrace};
pub use recurrence::{poisson_closed_form, solve_recurrence, solve_recurrence_no_leaves, LeafStructure};
pub use regime::{
    alternates_by_parity, classify_regime, estimated_regime_tolerance, is_constant_below_max, recommend_sampling,
    strictly_increasing, OrderedLevel, Regime, RegimeReport, StructureHint, ANALYTIC_REGIME_TOLERANCE,
    FLAT_PROFILE_TOLERANCE,
};

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::estimators::EnsembleStats;

/// Largest amount by which arithmetic may overshoot `[0, 1]` before clamping.
pub const CLAMP_SLACK: f64 = 1e-12;

pub const PROFILE_CSV_HEADER: &str = "variant,level,distance_from_max,p";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileVariant {
    Full,
    LeafRemoved,
    UpperBound,
    LowerBound,
    LeafRemovedApprox,
    Estimated,
    EstimatedLeafRemoved,
}

impl ProfileVariant {
    pub fn name(self) -> &'static str {
        match self {
            ProfileVariant::Full => "full",
            ProfileVariant::LeafRemoved => "leaf-removed",
            ProfileVariant::UpperBound => "upper-bound",
            ProfileVariant::LowerBound => "lower-bound",
            ProfileVariant::LeafRemovedApprox => "leaf-removed-approx",
            ProfileVariant::Estimated => "estimated",
            ProfileVariant::EstimatedLeafRemoved => "estimated-leaf-removed",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelPoint {
    pub level: usize,
    pub p: f64,
}

/// Winning probability per level `h = 0..=depth`. Levels where the quantity
/// is undefined are omitted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelProbabilityProfile {
    pub variant: ProfileVariant,
    pub depth: usize,
    /// Sorted by level.
    pub points: Vec<LevelPoint>,
    /// Largest number of series terms used at any level, for truncated series.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation_terms: Option<usize>,
}

impl LevelProbabilityProfile {
    pub fn get(&self, level: usize) -> Option<f64> {
        self.points.iter().find(|p| p.level == level).map(|p| p.p)
    }

    pub fn levels(&self) -> impl Iterator<Item = usize> + '_ {
        self.points.iter().map(|p| p.level)
    }

    /// `p_h − p_{h+1}` for each `h` where both levels are present.
    pub fn level_differences(&self) -> Vec<(usize, f64)> {
        self.points
            .windows(2)
            .filter(|w| w[1].level == w[0].level + 1)
            .map(|w| (w[0].level, w[0].p - w[1].p))
            .collect()
    }

    /// Largest `|p_h − p_{h+1}|`.
    pub fn amplitude(&self) -> f64 {
        self.level_differences().iter().map(|(_, d)| d.abs()).fold(0.0, f64::max)
    }

    /// `true` when every value is 1.
    pub fn is_constant_one(&self) -> bool {
        self.points.iter().all(|p| p.p == 1.0)
    }

    /// Profile of ensemble estimates: key `d` maps to level `max_d − d`.
    pub fn from_ensemble(stats: &EnsembleStats, leaf_removed: bool) -> Self {
        let depth = stats.levels.iter().map(|l| l.distance_from_max).max().unwrap_or(0);
        let mut points: Vec<LevelPoint> = stats
            .levels
            .iter()
            .filter_map(|l| {
                let p = if leaf_removed { l.p_win_no_leaves? } else { l.p_win };
                Some(LevelPoint { level: depth - l.distance_from_max, p })
            })
            .collect();
        points.sort_by_key(|p| p.level);
        let variant = if leaf_removed { ProfileVariant::EstimatedLeafRemoved } else { ProfileVariant::Estimated };
        Self { variant, depth, points, truncation_terms: None }
    }

    /// CSV rows without the header.
    pub fn csv_rows(&self) -> String {
        let mut out = String::new();
        for p in &self.points {
            let _ = writeln!(out, "{},{},{},{}", self.variant.name(), p.level, self.depth - p.level, p.p);
        }
        out
    }

    pub fn to_csv(&self) -> String {
        format!("{PROFILE_CSV_HEADER}\n{}", self.csv_rows())
    }
}

/// Clamps to `[0, 1]`, asserting the overshoot is rounding noise.
pub(crate) fn clamp_probability(p: f64) -> f64 {
    debug_assert!(
        (-CLAMP_SLACK..=1.0 + CLAMP_SLACK).contains(&p),
        "probability {p} is outside [0, 1] beyond rounding"
    );
    assert!(!p.is_nan(), "probability is NaN");
    p.clamp(0.0, 1.0)
}
