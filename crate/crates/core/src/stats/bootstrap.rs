use rand::Rng;

use super::{mean, percentile, sample_variance};
use crate::error::{degenerate, param, Result};

/// Percentile bootstrap interval (2.5 / 97.5) of `statistic` over
/// resamples with replacement.
pub fn bootstrap_ci<R, F>(
    values: &[f64],
    statistic: F,
    iters: usize,
    rng: &mut R,
) -> Result<(f64, f64)>
where
    R: Rng + ?Sized,
    F: Fn(&[f64]) -> f64,
{
    let n = values.len();
    if n < 2 {
        return Err(param("bootstrap needs at least 2 values"));
    }
    if iters < 100 {
        return Err(param(format!(
            "bootstrap needs at least 100 iterations, got {iters}"
        )));
    }
    let mut sample = vec![0.0; n];
    let mut stats: Vec<f64> = (0..iters)
        .map(|_| {
            for slot in sample.iter_mut() {
                *slot = values[rng.random_range(0..n)];
            }
            statistic(&sample)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    Ok((percentile(&stats, 2.5), percentile(&stats, 97.5)))
}

/// Paired effect size: mean over sample standard deviation of differences.
pub fn cohens_dz(differences: &[f64]) -> Result<f64> {
    if differences.len() < 2 {
        return Err(param("Cohen's d_z needs at least 2 differences"));
    }
    let sd = sample_variance(differences).sqrt();
    let scale = differences.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    if sd <= 1e-12 * scale || !sd.is_finite() {
        return Err(degenerate("differences have zero standard deviation"));
    }
    Ok(mean(differences) / sd)
}
