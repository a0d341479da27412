//! Discrete power-law tail fit: maximum likelihood exponent for each lower
//! cutoff, cutoff chosen by the Kolmogorov–Smirnov distance.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{zeta::hurwitz_zeta, Error, Result};

pub const MIN_SAMPLES: usize = 50;
pub const MIN_TAIL: usize = 25;
/// Search interval for the exponent.
pub const ALPHA_RANGE: (f64, f64) = (1.0 + 1e-6, 20.0);
const ALPHA_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub alpha: f64,
    pub k_min: u64,
    pub ks_distance: f64,
    pub n_tail: usize,
}

/// Sorted `(value, count)` pairs with a suffix view for tails.
struct Histogram {
    values: Vec<u64>,
    counts: Vec<usize>,
}

impl Histogram {
    fn new(samples: &[u64]) -> Self {
        let mut map = BTreeMap::new();
        for &k in samples.iter().filter(|&&k| k >= 1) {
            *map.entry(k).or_insert(0usize) += 1;
        }
        let (values, counts) = map.into_iter().unzip();
        Self { values, counts }
    }

    fn tail(&self, k_min: u64) -> (&[u64], &[usize]) {
        let i = self.values.partition_point(|&v| v < k_min);
        (&self.values[i..], &self.counts[i..])
    }
}

fn log_likelihood(alpha: f64, k_min: u64, n: usize, sum_ln: f64) -> f64 {
    -alpha * sum_ln - n as f64 * hurwitz_zeta(alpha, k_min as f64).ln()
}

fn mle_tail(values: &[u64], counts: &[usize], k_min: u64) -> f64 {
    let n: usize = counts.iter().sum();
    let sum_ln: f64 = values.iter().zip(counts).map(|(&v, &c)| c as f64 * (v as f64).ln()).sum();
    // The log-likelihood is concave in alpha.
    let f = |a: f64| log_likelihood(a, k_min, n, sum_ln);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = ALPHA_RANGE;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > ALPHA_TOL {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    (lo + hi) / 2.0
}

fn ks_tail(values: &[u64], counts: &[usize], alpha: f64, k_min: u64) -> f64 {
    let n: usize = counts.iter().sum();
    let z = hurwitz_zeta(alpha, k_min as f64);
    let model_cdf = |k: u64| 1.0 - hurwitz_zeta(alpha, (k + 1) as f64) / z;
    let mut seen = 0usize;
    let mut d: f64 = 0.0;
    for (i, (&v, &c)) in values.iter().zip(counts).enumerate() {
        // Just below v the empirical CDF still holds its previous value.
        if v > k_min {
            let before = seen as f64 / n as f64;
            d = d.max((model_cdf(v - 1) - before).abs());
        }
        seen += c;
        let emp = seen as f64 / n as f64;
        d = d.max((model_cdf(v) - emp).abs());
        // Between this value and the next the empirical CDF is flat while
        // the model keeps rising; the largest gap is just before the next.
        if let Some(&next) = values.get(i + 1) {
            if next > v + 1 {
                d = d.max((model_cdf(next - 1) - emp).abs());
            }
        }
    }
    d
}

/// Maximum-likelihood exponent of the samples `≥ k_min`.
pub fn mle_alpha(samples: &[u64], k_min: u64) -> Result<f64> {
    if k_min < 1 {
        return Err(Error::InvalidParameter("k_min must be at least 1".into()));
    }
    let h = Histogram::new(samples);
    let (v, c) = h.tail(k_min);
    if v.is_empty() {
        return Err(Error::InsufficientTail { min_tail: 1 });
    }
    Ok(mle_tail(v, c, k_min))
}

/// KS distance between the empirical and model CDFs over samples `≥ k_min`.
pub fn ks_distance(samples: &[u64], alpha: f64, k_min: u64) -> Result<f64> {
    let h = Histogram::new(samples);
    let (v, c) = h.tail(k_min);
    if v.is_empty() {
        return Err(Error::InsufficientTail { min_tail: 1 });
    }
    Ok(ks_tail(v, c, alpha, k_min))
}

/// Fits `p(k) ∝ k^{−α}` for `k ≥ k_min`, scanning every observed value with
/// at least [`MIN_TAIL`] samples at or above it as a cutoff and keeping the
/// one with the smallest KS distance (the smaller cutoff on ties). Zeros
/// are ignored.
pub fn fit_power_law(samples: &[u64]) -> Result<PowerLawFit> {
    let h = Histogram::new(samples);
    let total: usize = h.counts.iter().sum();
    if total < MIN_SAMPLES {
        return Err(Error::InsufficientSamples { needed: MIN_SAMPLES, got: total });
    }
    let mut remaining = total;
    let mut candidates = Vec::new();
    for (i, &v) in h.values.iter().enumerate() {
        if remaining < MIN_TAIL {
            break;
        }
        candidates.push((v, remaining));
        remaining -= h.counts[i];
    }
    if candidates.is_empty() {
        return Err(Error::InsufficientTail { min_tail: MIN_TAIL });
    }
    let fits: Vec<PowerLawFit> = candidates
        .par_iter()
        .map(|&(k_min, n_tail)| {
            let (v, c) = h.tail(k_min);
            let alpha = mle_tail(v, c, k_min);
            PowerLawFit { alpha, k_min, ks_distance: ks_tail(v, c, alpha, k_min), n_tail }
        })
        .collect();
    Ok(fits
        .into_iter()
        .reduce(|best, f| if f.ks_distance < best.ks_distance { f } else { best })
        .expect("at least one candidate"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degree::sample_power_law;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn draws(alpha: f64, k_min: u64, n: usize, seed: u64) -> Vec<u64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| sample_power_law(alpha, k_min, &mut rng)).collect()
    }

    #[test]
    fn mle_matches_brute_force_grid() {
        let s = draws(2.5, 1, 2000, 1);
        let a = mle_alpha(&s, 1).unwrap();
        let n = s.len();
        let sum_ln: f64 = s.iter().map(|&k| (k as f64).ln()).sum();
        let grid_best = (0..=4000)
            .map(|i| 1.5 + i as f64 * 0.0005)
            .max_by(|x, y| log_likelihood(*x, 1, n, sum_ln).total_cmp(&log_likelihood(*y, 1, n, sum_ln)))
            .unwrap();
        assert!((a - grid_best).abs() < 1e-3, "{a} vs {grid_best}");
    }

    #[test]
    fn recovers_exponent_with_unit_cutoff() {
        let fit = fit_power_law(&draws(2.5, 1, 20_000, 2)).unwrap();
        assert!((fit.alpha - 2.5).abs() < 0.1, "{fit:?}");
        assert!(fit.k_min <= 3);
        assert!((0.0..=1.0).contains(&fit.ks_distance));
    }

    #[test]
    fn zeros_are_ignored() {
        let mut s = draws(2.5, 1, 500, 3);
        let base = fit_power_law(&s).unwrap();
        s.extend(std::iter::repeat(0).take(400));
        assert_eq!(fit_power_law(&s).unwrap(), base);
    }

    #[test]
    fn duplication_leaves_the_estimate_unchanged() {
        let s = draws(3.05, 17, 3000, 4);
        let doubled: Vec<u64> = s.iter().chain(&s).copied().collect();
        for k_min in [1, 17, 25] {
            assert_eq!(mle_alpha(&s, k_min).unwrap(), mle_alpha(&doubled, k_min).unwrap());
            let a = mle_alpha(&s, k_min).unwrap();
            assert_eq!(ks_distance(&s, a, k_min).unwrap(), ks_distance(&doubled, a, k_min).unwrap());
        }
    }

    #[test]
    fn sample_requirements() {
        assert!(matches!(fit_power_law(&[1; 49]), Err(Error::InsufficientSamples { needed: 50, got: 49 })));
        assert!(fit_power_law(&[0; 100]).is_err());
        assert!(mle_alpha(&[1, 2], 0).is_err());
        assert!(matches!(mle_alpha(&[1, 2], 5), Err(Error::InsufficientTail { .. })));
    }

    #[test]
    fn ks_of_exact_model_is_small() {
        // Counts proportional to the pmf give a near-zero distance.
        let (alpha, k_min) = (2.0, 1u64);
        let z = hurwitz_zeta(alpha, 1.0);
        let mut s = Vec::new();
        for k in 1..=2000u64 {
            let c = (1e6 * (k as f64).powf(-alpha) / z).round() as usize;
            s.extend(std::iter::repeat(k).take(c));
        }
        let d = ks_distance(&s, alpha, k_min).unwrap();
        assert!(d < 1e-3, "{d}");
    }

    #[test]
    fn geometric_fits_worse() {
        let pl = fit_power_law(&draws(2.5, 1, 5000, 6)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let geo: Vec<u64> = (0..5000)
            .map(|_| {
                let mut k = 1;
                while rng.gen::<f64>() < 0.5 {
                    k += 1;
                }
                k
            })
            .collect();
        let g = fit_power_law(&geo).unwrap();
        assert!(pl.ks_distance < g.ks_distance, "{pl:?} vs {g:?}");
    }
}
