//! Two-way fixed effects by alternating within-group demeaning, and the
//! source-clustered mean test.

use serde::{Deserialize, Serialize};

use super::regression::{assemble, cr1_factor, dense_ids, Estimator, SeKind};
use super::{mean, RegressionResult};
use crate::error::{param, Error, Result};

/// One panel row. `group_a` and `group_b` are the two fixed-effect
/// dimensions; `cluster` drives the robust standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PanelObservation {
    pub y: f64,
    pub x: f64,
    pub group_a: usize,
    pub group_b: usize,
    pub cluster: usize,
}

/// `x` and `y` with both fixed-effect dimensions partialled out.
#[derive(Debug, Clone, PartialEq)]
pub struct Residualized {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub sweeps: usize,
    pub groups_a: usize,
    pub groups_b: usize,
}

const TOLERANCE: f64 = 1e-10;
const MAX_SWEEPS: usize = 100;

fn demean_by(
    values: &mut [f64],
    groups: &[usize],
    count: usize,
    sums: &mut Vec<f64>,
    sizes: &[f64],
) -> f64 {
    sums.clear();
    sums.resize(count, 0.0);
    for (v, &g) in values.iter().zip(groups) {
        sums[g] += v;
    }
    let mut largest = 0.0f64;
    for (v, &g) in values.iter_mut().zip(groups) {
        let shift = sums[g] / sizes[g];
        largest = largest.max(shift.abs());
        *v -= shift;
    }
    largest
}

/// Alternates group-a and group-b demeaning of `x` and `y` until the
/// largest adjustment in a sweep falls below 1e-10, or 100 sweeps.
pub fn residualize(observations: &[PanelObservation]) -> Result<Residualized> {
    if observations.is_empty() {
        return Err(param("empty panel"));
    }
    let (a_ids, groups_a) = dense_ids(&observations.iter().map(|o| o.group_a).collect::<Vec<_>>());
    let (b_ids, groups_b) = dense_ids(&observations.iter().map(|o| o.group_b).collect::<Vec<_>>());
    let sizes = |ids: &[usize], count: usize| {
        let mut s = vec![0.0; count];
        for &g in ids {
            s[g] += 1.0;
        }
        s
    };
    let a_sizes = sizes(&a_ids, groups_a);
    let b_sizes = sizes(&b_ids, groups_b);
    let mut x: Vec<f64> = observations.iter().map(|o| o.x).collect();
    let mut y: Vec<f64> = observations.iter().map(|o| o.y).collect();
    let mut sums = Vec::new();
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        let mut change = 0.0f64;
        for values in [&mut x, &mut y] {
            change = change.max(demean_by(values, &a_ids, groups_a, &mut sums, &a_sizes));
            change = change.max(demean_by(values, &b_ids, groups_b, &mut sums, &b_sizes));
        }
        if change < TOLERANCE {
            break;
        }
    }
    Ok(Residualized {
        x,
        y,
        sweeps,
        groups_a,
        groups_b,
    })
}

/// Slope of `y` on `x` with group-a and group-b fixed effects absorbed.
///
/// Standard errors are CR1 cluster-robust on `cluster`; fixed effects
/// nested within clusters are left out of the small-sample parameter
/// count. Intervals use `t(n − 1 − (G_a − 1) − (G_b − 1))`.
pub fn two_way_fe(observations: &[PanelObservation]) -> Result<RegressionResult> {
    let res = residualize(observations)?;
    if res.groups_a < 2 || res.groups_b < 2 {
        return Err(param(
            "two-way fixed effects need at least 2 groups per dimension",
        ));
    }
    let n = observations.len();
    let raw_x: Vec<f64> = observations.iter().map(|o| o.x).collect();
    let raw_mean = mean(&raw_x);
    let raw_ss: f64 = raw_x.iter().map(|v| (v - raw_mean).powi(2)).sum();
    let sxx: f64 = res.x.iter().map(|v| v * v).sum();
    if sxx <= 1e-12 * raw_ss.max(f64::MIN_POSITIVE) || sxx == 0.0 {
        return Err(Error::NoIdentification(
            "regressor has no variation left after absorbing fixed effects".into(),
        ));
    }
    let sxy: f64 = res.x.iter().zip(&res.y).map(|(a, b)| a * b).sum();
    let beta = sxy / sxx;
    let resid: Vec<f64> = res
        .x
        .iter()
        .zip(&res.y)
        .map(|(a, b)| b - beta * a)
        .collect();
    let rss: f64 = resid.iter().map(|e| e * e).sum();
    let syy: f64 = res.y.iter().map(|v| v * v).sum();

    let (cluster_ids, clusters) =
        dense_ids(&observations.iter().map(|o| o.cluster).collect::<Vec<_>>());
    if clusters < 2 {
        return Err(param("cluster-robust errors need at least 2 clusters"));
    }
    let mut scores = vec![0.0; clusters];
    for ((&c, xv), e) in cluster_ids.iter().zip(&res.x).zip(&resid) {
        scores[c] += xv * e;
    }
    let meat: f64 = scores.iter().map(|s| s * s).sum();

    let nested = |group: fn(&PanelObservation) -> usize| {
        let mut owner = std::collections::BTreeMap::new();
        observations
            .iter()
            .all(|o| *owner.entry(group(o)).or_insert(o.cluster) == o.cluster)
    };
    let mut k = 1;
    if !nested(|o| o.group_a) {
        k += res.groups_a - 1;
    }
    if !nested(|o| o.group_b) {
        k += res.groups_b - 1;
    }
    let df = n as f64 - 1.0 - (res.groups_a - 1) as f64 - (res.groups_b - 1) as f64;
    if df <= 0.0 || n <= k {
        return Err(param("panel has no residual degrees of freedom"));
    }
    let variance = cr1_factor(clusters, n, k) * meat / (sxx * sxx);
    Ok(assemble(
        Estimator::TwoWayFe,
        vec![beta],
        vec![variance.sqrt()],
        SeKind::ClusterCr1,
        df,
        if syy > 0.0 { 1.0 - rss / syy } else { 1.0 },
        super::regression::gaussian_aic(n, rss, 1),
        rss,
        n,
        Some(clusters),
    ))
}

/// Residualizes both variables, sorts by residual `x`, and returns the
/// per-bin means of `bins` equal-count bins (earlier bins take the
/// remainder).
pub fn quantile_bin_partial(
    observations: &[PanelObservation],
    bins: usize,
) -> Result<Vec<(f64, f64)>> {
    let n = observations.len();
    if bins == 0 || bins > n {
        return Err(param(format!("bins must be in 1..={n}, got {bins}")));
    }
    let res = residualize(observations)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| res.x[a].total_cmp(&res.x[b]));
    let (base, extra) = (n / bins, n % bins);
    let mut out = Vec::with_capacity(bins);
    let mut start = 0;
    for b in 0..bins {
        let size = base + usize::from(b < extra);
        let chunk = &order[start..start + size];
        let mx = chunk.iter().map(|&i| res.x[i]).sum::<f64>() / size as f64;
        let my = chunk.iter().map(|&i| res.y[i]).sum::<f64>() / size as f64;
        out.push((mx, my));
        start += size;
    }
    Ok(out)
}

/// Intercept-only regression with CR1 errors clustered on `cluster` and
/// intervals from `t(G − 1)`.
pub fn clustered_mean_test(values: &[f64], cluster: &[usize]) -> Result<RegressionResult> {
    let n = values.len();
    if cluster.len() != n {
        return Err(param("cluster ids must match the values"));
    }
    let (ids, clusters) = dense_ids(cluster);
    if clusters < 2 {
        return Err(param("clustered mean test needs at least 2 clusters"));
    }
    let m = mean(values);
    let mut scores = vec![0.0; clusters];
    for (&c, v) in ids.iter().zip(values) {
        scores[c] += v - m;
    }
    let meat: f64 = scores.iter().map(|s| s * s).sum();
    let nf = n as f64;
    let variance = cr1_factor(clusters, n, 1) * meat / (nf * nf);
    let rss: f64 = values.iter().map(|v| (v - m).powi(2)).sum();
    Ok(assemble(
        Estimator::ClusteredMean,
        vec![m],
        vec![variance.sqrt()],
        SeKind::ClusterCr1,
        (clusters - 1) as f64,
        0.0,
        super::regression::gaussian_aic(n, rss, 1),
        rss,
        n,
        Some(clusters),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;
    use rand::Rng;

    /// Balanced-ish panel with `ga × gb` cells, planted effects and optional
    /// noise. Clusters follow group_a.
    fn panel(ga: usize, gb: usize, beta: f64, noise: f64, seed: u64) -> Vec<PanelObservation> {
        let mut rng = derive_stream(seed, &[1]);
        let alpha: Vec<f64> = (0..ga).map(|_| rng.random_range(-3.0..3.0)).collect();
        let gamma: Vec<f64> = (0..gb).map(|_| rng.random_range(-3.0..3.0)).collect();
        let mut out = Vec::new();
        for a in 0..ga {
            for b in 0..gb {
                if rng.random::<f64>() < 0.2 {
                    continue;
                }
                let x = 0.5 * alpha[a] + rng.random_range(0.0..1.0);
                let e = noise * (rng.random::<f64>() - 0.5);
                out.push(PanelObservation {
                    y: beta * x + alpha[a] + gamma[b] + e,
                    x,
                    group_a: a,
                    group_b: b,
                    cluster: a,
                });
            }
        }
        out
    }

    #[test]
    fn recovers_noiseless_slope() {
        let obs = panel(30, 12, -5.8, 0.0, 3);
        let fit = two_way_fe(&obs).unwrap();
        assert!(
            (fit.coefficients[0] + 5.8).abs() < 1e-8,
            "{}",
            fit.coefficients[0]
        );
        assert!(fit.se[0] < 1e-6);
    }

    #[test]
    fn fixed_effect_absorption_is_exact() {
        let obs = panel(15, 8, 1.3, 2.0, 4);
        let base = two_way_fe(&obs).unwrap().coefficients[0];
        let shifted: Vec<_> = obs
            .iter()
            .map(|o| PanelObservation {
                y: o.y + 10.0 * o.group_a as f64 - 7.0 * (o.group_b as f64).sin(),
                ..*o
            })
            .collect();
        let moved = two_way_fe(&shifted).unwrap().coefficients[0];
        assert!((base - moved).abs() < 1e-8);
    }

    #[test]
    fn group_constant_regressor_is_not_identified() {
        let obs: Vec<_> = (0..40)
            .map(|i| PanelObservation {
                y: i as f64,
                x: (i % 4) as f64,
                group_a: i % 4,
                group_b: i % 5,
                cluster: i % 4,
            })
            .collect();
        assert!(matches!(two_way_fe(&obs), Err(Error::NoIdentification(_))));
    }

    #[test]
    fn needs_two_groups() {
        let obs: Vec<_> = (0..10)
            .map(|i| PanelObservation {
                y: i as f64,
                x: (i * i) as f64,
                group_a: 0,
                group_b: i % 2,
                cluster: i % 3,
            })
            .collect();
        assert!(two_way_fe(&obs).is_err());
    }

    #[test]
    fn binning_preserves_exact_line() {
        let obs = panel(20, 10, -5.8, 0.0, 5);
        let n = obs.len();
        let points = quantile_bin_partial(&obs, 25).unwrap();
        assert_eq!(points.len(), 25);
        for (x, y) in &points {
            assert!((y + 5.8 * x).abs() < 1e-8);
        }
        let singles = quantile_bin_partial(&obs, n).unwrap();
        let res = residualize(&obs).unwrap();
        let mut xs = res.x.clone();
        xs.sort_by(f64::total_cmp);
        assert!(singles.iter().zip(&xs).all(|(p, x)| p.0 == *x));
        assert!(quantile_bin_partial(&obs, n + 1).is_err());
        assert!(quantile_bin_partial(&obs, 0).is_err());
    }

    #[test]
    fn unbinned_slope_equals_fe_slope() {
        let obs = panel(25, 10, 2.0, 3.0, 6);
        let fit = two_way_fe(&obs).unwrap();
        let res = residualize(&obs).unwrap();
        let ols = crate::stats::ols(&res.y, std::slice::from_ref(&res.x), None).unwrap();
        assert!((ols.coefficients[1] - fit.coefficients[0]).abs() < 1e-10);
    }

    #[test]
    fn clustered_mean_examples() {
        let fit = clustered_mean_test(&[0.026; 12], &[0, 0, 1, 1, 2, 2, 3, 3, 4, 4, 5, 5]).unwrap();
        assert!((fit.coefficients[0] - 0.026).abs() < 1e-15);
        assert!(fit.se[0] < 1e-15);

        let fit = clustered_mean_test(&[1.0, 1.0, -1.0, -1.0], &[0, 0, 1, 1]).unwrap();
        assert_eq!(fit.coefficients[0], 0.0);
        assert_eq!(fit.n_clusters, Some(2));
        assert_eq!(fit.df, 1.0);

        assert!(clustered_mean_test(&[1.0, 2.0], &[3, 3]).is_err());
    }
}
