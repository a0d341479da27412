//! In-degree distributions `p(k)`.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{zeta::hurwitz_zeta, Error, Result};

/// Poisson series stop once a geometric bound on the remaining terms drops
/// below this. The recurrence amplifies truncation error by up to `λ` per
/// level, so this sits at the limit of double precision.
pub const POISSON_TAIL: f64 = 1e-16;
/// Power-law series stop once `ρ^K · P(k ≥ K)` drops below this.
pub const POWER_LAW_TAIL: f64 = 1e-13;
/// Hard cap on generating-function terms.
pub const MAX_TERMS: usize = 2_000_000;
/// Sequential power-law inversion switches to bisection after this many steps.
const SEQUENTIAL_STEPS: u64 = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum DegreeModel {
    Poisson { lambda: f64 },
    /// `p(k) = k^{-α} / ζ(α, k_min)` for `k ≥ k_min`.
    PowerLaw { alpha: f64, k_min: u64 },
    /// Probability of each child count; must sum to 1.
    Empirical {
        #[serde(with = "count_keys")]
        probabilities: BTreeMap<usize, f64>,
    },
}

/// JSON object keys are strings; tagged enums cannot coerce them to integers.
mod count_keys {
    use std::collections::BTreeMap;

    use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(map: &BTreeMap<usize, f64>, s: S) -> Result<S::Ok, S::Error> {
        map.iter().map(|(k, v)| (k.to_string(), *v)).collect::<BTreeMap<_, _>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<usize, f64>, D::Error> {
        BTreeMap::<String, f64>::deserialize(d)?
            .into_iter()
            .map(|(k, v)| k.parse().map(|k| (k, v)).map_err(|_| D::Error::custom(format!("bad count `{k}`"))))
            .collect()
    }
}

/// Value of a truncated series together with the number of terms used.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesSum {
    pub value: f64,
    pub terms: usize,
}

impl DegreeModel {
    pub fn poisson(lambda: f64) -> Result<Self> {
        let m = DegreeModel::Poisson { lambda };
        m.validate()?;
        Ok(m)
    }

    pub fn power_law(alpha: f64, k_min: u64) -> Result<Self> {
        let m = DegreeModel::PowerLaw { alpha, k_min };
        m.validate()?;
        Ok(m)
    }

    pub fn empirical(probabilities: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let m = DegreeModel::Empirical { probabilities: probabilities.into_iter().collect() };
        m.validate()?;
        Ok(m)
    }

    /// Builds an empirical model from raw child counts.
    pub fn from_counts(counts: &[usize]) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidModel("no counts to build a histogram from".into()));
        }
        let mut hist = BTreeMap::new();
        for &k in counts {
            *hist.entry(k).or_insert(0usize) += 1;
        }
        let n = counts.len() as f64;
        Self::empirical(hist.into_iter().map(|(k, c)| (k, c as f64 / n)))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DegreeModel::Poisson { lambda } => {
                if !(lambda.is_finite() && *lambda > 0.0 && *lambda < 700.0) {
                    return Err(Error::InvalidModel(format!("poisson rate must lie in (0, 700), got {lambda}")));
                }
            }
            DegreeModel::PowerLaw { alpha, k_min } => {
                if !(alpha.is_finite() && *alpha > 1.0) {
                    return Err(Error::InvalidModel(format!("power-law exponent must exceed 1, got {alpha}")));
                }
                if *k_min < 1 {
                    return Err(Error::InvalidModel("power-law k_min must be at least 1".into()));
                }
            }
            DegreeModel::Empirical { probabilities } => {
                if probabilities.is_empty() {
                    return Err(Error::InvalidModel("empty histogram".into()));
                }
                if let Some((k, p)) = probabilities.iter().find(|(_, p)| !(p.is_finite() && **p >= 0.0)) {
                    return Err(Error::InvalidModel(format!("p({k}) = {p} is not a probability")));
                }
                let total: f64 = probabilities.values().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidModel(format!("histogram sums to {total}, not 1")));
                }
            }
        }
        Ok(())
    }

    pub fn pmf(&self, k: usize) -> f64 {
        match self {
            DegreeModel::Poisson { lambda } => {
                // Log space keeps large k finite.
                let lk = k as f64 * lambda.ln() - lambda - ln_factorial(k);
                lk.exp()
            }
            DegreeModel::PowerLaw { alpha, k_min } => {
                if (k as u64) < *k_min {
                    0.0
                } else {
                    (k as f64).powf(-alpha) / hurwitz_zeta(*alpha, *k_min as f64)
                }
            }
            DegreeModel::Empirical { probabilities } => probabilities.get(&k).copied().unwrap_or(0.0),
        }
    }

    /// `p(0)`, the probability that a node receives no replies.
    pub fn leaf_probability(&self) -> f64 {
        self.pmf(0)
    }

    pub fn mean(&self) -> f64 {
        match self {
            DegreeModel::Poisson { lambda } => *lambda,
            DegreeModel::PowerLaw { alpha, k_min } => {
                if *alpha <= 2.0 {
                    f64::INFINITY
                } else {
                    let a = *k_min as f64;
                    hurwitz_zeta(alpha - 1.0, a) / hurwitz_zeta(*alpha, a)
                }
            }
            DegreeModel::Empirical { probabilities } => {
                probabilities.iter().map(|(&k, p)| k as f64 * p).sum()
            }
        }
    }

    /// Probability generating function `G(ρ) = Σ_k ρ^k p(k)` for `ρ ∈ [0, 1]`.
    pub fn pgf(&self, rho: f64) -> SeriesSum {
        debug_assert!((0.0..=1.0).contains(&rho));
        match self {
            DegreeModel::Poisson { lambda } => {
                let mut term = (-lambda).exp();
                let mut value = 0.0;
                let mut k = 0usize;
                loop {
                    value += term;
                    k += 1;
                    // Remaining terms shrink at least geometrically with ratio x.
                    let x = lambda * rho / k as f64;
                    if (x < 1.0 && term * x / (1.0 - x) < POISSON_TAIL) || (term == 0.0 && x < 1.0) || k >= MAX_TERMS {
                        break;
                    }
                    term *= x;
                }
                SeriesSum { value, terms: k }
            }
            DegreeModel::PowerLaw { alpha, k_min } => {
                if rho >= 1.0 {
                    return SeriesSum { value: 1.0, terms: 0 };
                }
                let a = *k_min as f64;
                let z = hurwitz_zeta(*alpha, a);
                let mut value = 0.0;
                let mut rk = rho.powf(a);
                let mut k = *k_min;
                let mut terms = 0usize;
                loop {
                    if rk == 0.0 {
                        break;
                    }
                    value += rk * (k as f64).powf(-alpha) / z;
                    k += 1;
                    terms += 1;
                    rk *= rho;
                    if terms.is_multiple_of(64) && rk * hurwitz_zeta(*alpha, k as f64) / z < POWER_LAW_TAIL {
                        break;
                    }
                    if terms >= MAX_TERMS {
                        break;
                    }
                }
                SeriesSum { value, terms }
            }
            DegreeModel::Empirical { probabilities } => SeriesSum {
                value: probabilities.iter().map(|(&k, p)| p * rho.powi(k as i32)).sum(),
                terms: probabilities.len(),
            },
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match self {
            DegreeModel::Poisson { lambda } => {
                let u: f64 = rng.gen();
                let mut pk = (-lambda).exp();
                let mut cdf = pk;
                let mut k = 0usize;
                // Past the cap the remaining mass is below double precision.
                while cdf < u && k < 10 * (*lambda as usize + 10) {
                    k += 1;
                    pk *= lambda / k as f64;
                    cdf += pk;
                }
                k
            }
            DegreeModel::PowerLaw { alpha, k_min } => sample_power_law(*alpha, *k_min, rng) as usize,
            DegreeModel::Empirical { probabilities } => {
                let u: f64 = rng.gen();
                let mut cdf = 0.0;
                for (&k, p) in probabilities {
                    cdf += p;
                    if u < cdf {
                        return k;
                    }
                }
                *probabilities.keys().next_back().expect("validated histogram is non-empty")
            }
        }
    }
}

/// Inverse-CDF draw from the discrete power law.
///
/// Walks the pmf for the bulk of the mass and falls back to bisection on
/// the Hurwitz-zeta survival function deep in the tail.
pub fn sample_power_law<R: Rng + ?Sized>(alpha: f64, k_min: u64, rng: &mut R) -> u64 {
    let z = hurwitz_zeta(alpha, k_min as f64);
    // Survival target: return the smallest k with P(K > k) < v.
    let v: f64 = 1.0 - rng.gen::<f64>();
    let mut survival = 1.0;
    let mut k = k_min;
    for _ in 0..SEQUENTIAL_STEPS {
        survival -= (k as f64).powf(-alpha) / z;
        if survival < v {
            return k;
        }
        k += 1;
    }
    // P(K > k) = ζ(α, k + 1) / ζ(α, k_min) is decreasing in k.
    let tail = |k: u64| hurwitz_zeta(alpha, (k + 1) as f64) / z;
    let mut lo = k;
    let mut hi = k.saturating_mul(2);
    while tail(hi) >= v {
        lo = hi;
        if hi >= u64::MAX / 2 {
            return hi;
        }
        hi *= 2;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if tail(mid) < v {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn ln_factorial(k: usize) -> f64 {
    (1..=k).map(|i| (i as f64).ln()).sum()
}
