use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{median_in_place, percentile, t_crit, t_two_sided};
use crate::error::{degenerate, param, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Ols,
    OlsQuadratic,
    TheilSen,
    TwoWayFe,
    ClusteredMean,
}

/// How the reported standard errors were computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeKind {
    Plain,
    /// Liang–Zeger sandwich with the CR1 small-sample factor.
    ClusterCr1,
    Bootstrap,
}

/// Coefficients with uncertainty and fit statistics. Coefficient 0 is the
/// intercept for OLS and Theil–Sen; two-way FE reports the slope only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub estimator: Estimator,
    pub coefficients: Vec<f64>,
    pub se: Vec<f64>,
    pub se_kind: SeKind,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub p_values: Vec<f64>,
    pub r_squared: f64,
    /// `n ln(RSS/n) + 2 (params + 1)`; only differences are meaningful.
    pub aic: f64,
    pub rss: f64,
    pub n_obs: usize,
    pub n_clusters: Option<usize>,
    pub df: f64,
}

impl RegressionResult {
    /// The last coefficient, which is the slope for every single-regressor fit.
    pub fn slope(&self) -> f64 {
        *self.coefficients.last().expect("at least one coefficient")
    }

    pub fn slope_ci(&self) -> (f64, f64) {
        (*self.ci_low.last().unwrap(), *self.ci_high.last().unwrap())
    }

    pub fn ci_excludes_zero(&self, index: usize) -> bool {
        self.ci_low[index] > 0.0 || self.ci_high[index] < 0.0
    }
}

pub(crate) fn gaussian_aic(n: usize, rss: f64, params: usize) -> f64 {
    let n = n as f64;
    n * (rss / n).ln() + 2.0 * (params as f64 + 1.0)
}

/// Dense-id relabelling of arbitrary cluster labels; returns (ids, count).
pub(crate) fn dense_ids(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map = std::collections::BTreeMap::new();
    let ids = labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect();
    (ids, map.len())
}

/// Least squares with an intercept. `features` holds one column per
/// regressor. With `cluster` ids the standard errors are CR1
/// cluster-robust; intervals use `t(n − params)` either way.
pub fn ols(
    y: &[f64],
    features: &[Vec<f64>],
    cluster: Option<&[usize]>,
) -> Result<RegressionResult> {
    let n = y.len();
    let params = features.len() + 1;
    if features.iter().any(|c| c.len() != n) {
        return Err(param("feature columns must match the response length"));
    }
    if n <= params {
        return Err(param(format!(
            "need more than {params} observations, got {n}"
        )));
    }
    let x = DMatrix::from_fn(
        n,
        params,
        |i, j| if j == 0 { 1.0 } else { features[j - 1][i] },
    );
    let yv = DVector::from_column_slice(y);

    let qr = x.clone().qr();
    let r = qr.r();
    let scale = (0..params).map(|j| x.column(j).norm()).fold(0.0, f64::max);
    if (0..params).any(|j| r[(j, j)].abs() <= 1e-10 * scale.max(1.0)) {
        return Err(Error::SingularDesign(
            "design matrix is rank deficient".into(),
        ));
    }
    let r_inv = r
        .try_inverse()
        .ok_or_else(|| Error::SingularDesign("triangular factor not invertible".into()))?;
    let beta = &r_inv * (qr.q().transpose() * &yv);
    let bread = &r_inv * r_inv.transpose();
    let resid = &yv - &x * &beta;
    let rss = resid.norm_squared();
    let ybar = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    let df = (n - params) as f64;

    let (cov, se_kind, n_clusters) = match cluster {
        None => (bread * (rss / df), SeKind::Plain, None),
        Some(labels) => {
            if labels.len() != n {
                return Err(param("cluster ids must match the response length"));
            }
            let (ids, g) = dense_ids(labels);
            if g < 2 {
                return Err(param("cluster-robust errors need at least 2 clusters"));
            }
            let mut scores = DMatrix::<f64>::zeros(g, params);
            for (i, &c) in ids.iter().enumerate() {
                for j in 0..params {
                    scores[(c, j)] += x[(i, j)] * resid[i];
                }
            }
            let meat = scores.transpose() * &scores;
            let factor = cr1_factor(g, n, params);
            (&bread * meat * &bread * factor, SeKind::ClusterCr1, Some(g))
        }
    };

    let coefficients: Vec<f64> = beta.iter().copied().collect();
    let se: Vec<f64> = (0..params).map(|j| cov[(j, j)].max(0.0).sqrt()).collect();
    let estimator = if features.len() == 2 {
        Estimator::OlsQuadratic
    } else {
        Estimator::Ols
    };
    Ok(assemble(
        estimator,
        coefficients,
        se,
        se_kind,
        df,
        if tss > 0.0 { 1.0 - rss / tss } else { 1.0 },
        gaussian_aic(n, rss, params),
        rss,
        n,
        n_clusters,
    ))
}

/// `G/(G−1) · (n−1)/(n−k)`.
pub(crate) fn cr1_factor(clusters: usize, n: usize, params: usize) -> f64 {
    let g = clusters as f64;
    g / (g - 1.0) * (n as f64 - 1.0) / (n as f64 - params as f64)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn assemble(
    estimator: Estimator,
    coefficients: Vec<f64>,
    se: Vec<f64>,
    se_kind: SeKind,
    df: f64,
    r_squared: f64,
    aic: f64,
    rss: f64,
    n_obs: usize,
    n_clusters: Option<usize>,
) -> RegressionResult {
    let crit = t_crit(df);
    let t_stats: Vec<f64> = coefficients.iter().zip(&se).map(|(b, s)| b / s).collect();
    RegressionResult {
        estimator,
        ci_low: coefficients
            .iter()
            .zip(&se)
            .map(|(b, s)| b - crit * s)
            .collect(),
        ci_high: coefficients
            .iter()
            .zip(&se)
            .map(|(b, s)| b + crit * s)
            .collect(),
        p_values: t_stats.iter().map(|&t| t_two_sided(t, df)).collect(),
        t_stats,
        coefficients,
        se,
        se_kind,
        r_squared,
        aic,
        rss,
        n_obs,
        n_clusters,
        df,
    }
}

fn theil_sen_point(x: &[f64], y: &[f64], slopes: &mut Vec<f64>) -> Option<(f64, f64)> {
    slopes.clear();
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            if x[i] != x[j] {
                slopes.push((y[j] - y[i]) / (x[j] - x[i]));
            }
        }
    }
    if slopes.is_empty() {
        return None;
    }
    let slope = median_in_place(slopes);
    let mut offsets: Vec<f64> = x.iter().zip(y).map(|(a, b)| b - slope * a).collect();
    Some((median_in_place(&mut offsets), slope))
}

/// Theil–Sen line: slope is the median pairwise slope over pairs with
/// distinct `x`, intercept the median of `y − slope·x`. Intervals are
/// percentile bootstrap over resampled observations.
pub fn theil_sen<R: Rng + ?Sized>(
    x: &[f64],
    y: &[f64],
    bootstrap_iters: usize,
    rng: &mut R,
) -> Result<RegressionResult> {
    let n = x.len();
    if n != y.len() {
        return Err(param("x and y must have equal length"));
    }
    if n < 2 {
        return Err(param("Theil–Sen needs at least 2 observations"));
    }
    let mut scratch = Vec::with_capacity(n * (n - 1) / 2);
    let (intercept, slope) =
        theil_sen_point(x, y, &mut scratch).ok_or_else(|| degenerate("all x values identical"))?;

    let mut boot_intercepts = Vec::with_capacity(bootstrap_iters);
    let mut boot_slopes = Vec::with_capacity(bootstrap_iters);
    let (mut bx, mut by) = (vec![0.0; n], vec![0.0; n]);
    while boot_slopes.len() < bootstrap_iters {
        for i in 0..n {
            let k = rng.random_range(0..n);
            bx[i] = x[k];
            by[i] = y[k];
        }
        if let Some((b0, b1)) = theil_sen_point(&bx, &by, &mut scratch) {
            boot_intercepts.push(b0);
            boot_slopes.push(b1);
        }
    }

    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let ybar = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    let coefficients = vec![intercept, slope];
    let mut ci_low = coefficients.clone();
    let mut ci_high = coefficients.clone();
    let mut se = vec![0.0; 2];
    for (k, boot) in [&mut boot_intercepts, &mut boot_slopes]
        .into_iter()
        .enumerate()
    {
        if boot.is_empty() {
            continue;
        }
        se[k] = if boot.len() > 1 {
            super::sample_variance(boot).sqrt()
        } else {
            0.0
        };
        boot.sort_by(f64::total_cmp);
        ci_low[k] = percentile(boot, 2.5).min(coefficients[k]);
        ci_high[k] = percentile(boot, 97.5).max(coefficients[k]);
    }
    let t_stats: Vec<f64> = coefficients.iter().zip(&se).map(|(b, s)| b / s).collect();
    let df = n as f64 - 2.0;
    Ok(RegressionResult {
        estimator: Estimator::TheilSen,
        p_values: if df > 0.0 {
            t_stats.iter().map(|&t| t_two_sided(t, df)).collect()
        } else {
            vec![f64::NAN; 2]
        },
        t_stats,
        coefficients,
        se,
        se_kind: SeKind::Bootstrap,
        ci_low,
        ci_high,
        r_squared: if tss > 0.0 { 1.0 - rss / tss } else { 1.0 },
        aic: gaussian_aic(n, rss, 2),
        rss,
        n_obs: n,
        n_clusters: None,
        df,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn exact_line() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v + 2.0).collect();
        let fit = ols(&y, &[x], None).unwrap();
        assert!((fit.coefficients[0] - 2.0).abs() < 1e-10);
        assert!((fit.coefficients[1] - 3.0).abs() < 1e-10);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(fit.estimator, Estimator::Ols);
    }

    #[test]
    fn quadratic_beats_linear_on_parabola() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 / 4.0).collect();
        let y: Vec<f64> = x.iter().map(|v| v * v).collect();
        let lin = ols(&y, std::slice::from_ref(&x), None).unwrap();
        let quad = ols(&y, &[x.clone(), x.iter().map(|v| v * v).collect()], None).unwrap();
        assert_eq!(quad.estimator, Estimator::OlsQuadratic);
        assert!(quad.aic < lin.aic);
    }

    #[test]
    fn singular_design() {
        let x = vec![1.0, 2.0, 3.0, 4.0];
        let y = vec![1.0, 0.0, 1.0, 0.0];
        let err = ols(&y, &[x.clone(), x.iter().map(|v| 2.0 * v).collect()], None);
        assert!(matches!(err, Err(Error::SingularDesign(_))));
        let err = ols(&y, &[vec![5.0; 4]], None);
        assert!(matches!(err, Err(Error::SingularDesign(_))));
    }

    #[test]
    fn textbook_standard_errors() {
        // x = 1..5, y = [2, 4, 5, 4, 5]: slope 0.6, intercept 2.2,
        // RSS = 2.4, SE(slope) = √(0.8/10).
        let x = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let y = vec![2.0, 4.0, 5.0, 4.0, 5.0];
        let fit = ols(&y, &[x], None).unwrap();
        assert!((fit.coefficients[1] - 0.6).abs() < 1e-12);
        assert!((fit.coefficients[0] - 2.2).abs() < 1e-12);
        assert!((fit.rss - 2.4).abs() < 1e-12);
        assert!((fit.se[1] - 0.08f64.sqrt()).abs() < 1e-12);
        assert!((fit.aic - (5.0 * (2.4f64 / 5.0).ln() + 6.0)).abs() < 1e-12);
    }

    #[test]
    fn singleton_clusters_match_scaled_hc_errors() {
        // With one observation per cluster the CR1 meat is the HC0 meat.
        let x = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let y = vec![1.5, 1.9, 3.7, 3.6, 5.9, 5.2];
        let ids: Vec<usize> = (0..6).collect();
        let plain = ols(&y, std::slice::from_ref(&x), None).unwrap();
        let clustered = ols(&y, std::slice::from_ref(&x), Some(&ids)).unwrap();
        assert_eq!(clustered.se_kind, SeKind::ClusterCr1);
        assert_eq!(clustered.n_clusters, Some(6));
        assert_eq!(clustered.coefficients, plain.coefficients);
        // HC0 by hand for the slope: Σ (x−x̄)² e² / (Σ (x−x̄)²)².
        let xbar = 3.5;
        let sxx: f64 = x.iter().map(|v| (v - xbar).powi(2)).sum();
        let e: Vec<f64> = x
            .iter()
            .zip(&y)
            .map(|(a, b)| b - plain.coefficients[0] - plain.coefficients[1] * a)
            .collect();
        let hc0: f64 = x
            .iter()
            .zip(&e)
            .map(|(a, r)| (a - xbar).powi(2) * r * r)
            .sum::<f64>()
            / (sxx * sxx);
        let factor = 6.0 / 5.0 * 5.0 / 4.0;
        assert!((clustered.se[1] - (hc0 * factor).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn planted_slope_coverage() {
        // Monte-Carlo: β = −28.9, σ = 2, n = 500.
        let noise = Normal::new(0.0, 2.0).unwrap();
        let mut covered = 0;
        for rep in 0..100u64 {
            let mut rng = derive_stream(rep, &[77]);
            let x: Vec<f64> = (0..500).map(|_| rng.random_range(0.3..0.8)).collect();
            let y: Vec<f64> = x
                .iter()
                .map(|v| 40.0 - 28.9 * v + noise.sample(&mut rng))
                .collect();
            let fit = ols(&y, &[x], None).unwrap();
            if fit.ci_low[1] <= -28.9 && -28.9 <= fit.ci_high[1] {
                covered += 1;
            }
        }
        assert!(covered >= 90, "coverage {covered}/100");
    }

    #[test]
    fn theil_sen_examples() {
        let mut rng = derive_stream(0, &[0]);
        let x: Vec<f64> = (0..20).map(f64::from).collect();
        let mut y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let fit = theil_sen(&x, &y, 200, &mut rng).unwrap();
        assert!((fit.coefficients[1] - 2.0).abs() < 1e-12);
        assert!((fit.coefficients[0] - 1.0).abs() < 1e-12);
        y[7] = 500.0;
        let fit = theil_sen(&x, &y, 200, &mut rng).unwrap();
        assert!((fit.slope() - 2.0).abs() < 0.01);

        let fit = theil_sen(&[0.0, 1.0, 2.0], &[0.0, 1.0, 4.0], 100, &mut rng).unwrap();
        assert_eq!(fit.slope(), 2.0);
        assert!(fit.ci_low[1] <= 2.0 && 2.0 <= fit.ci_high[1]);

        assert!(matches!(
            theil_sen(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0], 100, &mut rng),
            Err(Error::Degenerate(_))
        ));
    }
}
