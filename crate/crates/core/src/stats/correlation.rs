use serde::{Deserialize, Serialize};

use super::{t_two_sided, z_two_sided};
use crate::error::{degenerate, param, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationMethod {
    Pearson,
    Spearman,
    Kendall,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub estimate: f64,
    pub p_value: f64,
    pub n: usize,
    pub method: CorrelationMethod,
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(param(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(param(format!(
            "need at least 3 observations, got {}",
            x.len()
        )));
    }
    Ok(x.len())
}

fn product_moment(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(degenerate("zero variance"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Pearson product-moment correlation; p-value from the t transform on
/// `n - 2` degrees of freedom.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<CorrelationResult> {
    let n = check_pair(x, y)?;
    let r = product_moment(x, y)?;
    let df = (n - 2) as f64;
    let t = r * (df / (1.0 - r * r)).sqrt();
    Ok(CorrelationResult {
        estimate: r,
        p_value: t_two_sided(t, df),
        n,
        method: CorrelationMethod::Pearson,
    })
}

/// Mid-ranks (1-based, ties averaged).
pub(crate) fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation; p-value from the normal approximation
/// `z = ρ √(n − 1)`.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<CorrelationResult> {
    let n = check_pair(x, y)?;
    let rho = product_moment(&midranks(x), &midranks(y))?;
    Ok(CorrelationResult {
        estimate: rho,
        p_value: z_two_sided(rho * ((n - 1) as f64).sqrt()),
        n,
        method: CorrelationMethod::Spearman,
    })
}

/// Sizes of runs of equal values.
fn tie_groups(values: &[f64]) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted
        .chunk_by(|a, b| a == b)
        .map(|c| c.len() as f64)
        .filter(|&t| t > 1.0)
        .collect()
}

/// Kendall tau-b with tie correction; p-value from the normal
/// approximation with the tie-adjusted variance of `C − D`.
pub fn kendall(x: &[f64], y: &[f64]) -> Result<CorrelationResult> {
    let n = check_pair(x, y)?;
    let (mut concordant, mut discordant) = (0i64, 0i64);
    let (mut tied_x, mut tied_y) = (0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let dx = x[i].total_cmp(&x[j]) as i64;
            let dy = y[i].total_cmp(&y[j]) as i64;
            match (dx, dy) {
                (0, 0) => {
                    tied_x += 1;
                    tied_y += 1;
                }
                (0, _) => tied_x += 1,
                (_, 0) => tied_y += 1,
                _ if dx == dy => concordant += 1,
                _ => discordant += 1,
            }
        }
    }
    let pairs = (n * (n - 1) / 2) as i64;
    let denom = (((pairs - tied_x) * (pairs - tied_y)) as f64).sqrt();
    if denom == 0.0 {
        return Err(degenerate("all values tied"));
    }
    let s = (concordant - discordant) as f64;
    let tau = (s / denom).clamp(-1.0, 1.0);

    let nf = n as f64;
    let tx = tie_groups(x);
    let ty = tie_groups(y);
    let sum = |ts: &[f64], f: fn(f64) -> f64| ts.iter().map(|&t| f(t)).sum::<f64>();
    let v0 = nf * (nf - 1.0) * (2.0 * nf + 5.0);
    let vt = sum(&tx, |t| t * (t - 1.0) * (2.0 * t + 5.0));
    let vu = sum(&ty, |t| t * (t - 1.0) * (2.0 * t + 5.0));
    let v1 = sum(&tx, |t| t * (t - 1.0)) * sum(&ty, |t| t * (t - 1.0)) / (2.0 * nf * (nf - 1.0));
    let v2 = sum(&tx, |t| t * (t - 1.0) * (t - 2.0)) * sum(&ty, |t| t * (t - 1.0) * (t - 2.0))
        / (9.0 * nf * (nf - 1.0) * (nf - 2.0));
    let var_s = (v0 - vt - vu) / 18.0 + v1 + v2;
    Ok(CorrelationResult {
        estimate: tau,
        p_value: z_two_sided(s / var_s.sqrt()),
        n,
        method: CorrelationMethod::Kendall,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pearson_examples() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let r = pearson(&x, &y).unwrap();
        assert!((r.estimate - 1.0).abs() < 1e-12);
        assert!(r.p_value < 1e-6);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &neg).unwrap().estimate + 1.0).abs() < 1e-12);
        let r = pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((r.estimate - 0.8).abs() < 1e-12);
        // t = 0.8 √(2 / 0.36) = 1.8856 on 2 df.
        assert!((r.p_value - 0.2).abs() < 1e-9);
    }

    #[test]
    fn pearson_errors() {
        assert!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(pearson(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn rank_examples() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let up: Vec<f64> = x.iter().map(|v: &f64| v.exp()).collect();
        let down: Vec<f64> = x.iter().map(|v| -v * v * v).collect();
        assert!((spearman(&x, &up).unwrap().estimate - 1.0).abs() < 1e-12);
        assert!((kendall(&x, &up).unwrap().estimate - 1.0).abs() < 1e-12);
        assert!((spearman(&x, &down).unwrap().estimate + 1.0).abs() < 1e-12);
        assert!((kendall(&x, &down).unwrap().estimate + 1.0).abs() < 1e-12);
        let tau = kendall(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap();
        assert!((tau.estimate - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn ties() {
        assert_eq!(
            midranks(&[10.0, 20.0, 10.0, 30.0]),
            vec![1.5, 3.0, 1.5, 4.0]
        );
        assert!(kendall(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(spearman(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]).is_err());
        // tau-b: x = [1,1,2,3], y = [1,2,2,3]: C = 4, D = 0, ties 1 in each.
        let tau = kendall(&[1.0, 1.0, 2.0, 3.0], &[1.0, 2.0, 2.0, 3.0]).unwrap();
        assert!((tau.estimate - 4.0 / 5.0).abs() < 1e-12);
    }

    #[test]
    fn kendall_matches_reference_p() {
        // No ties, n = 10, S = 29: var = 10·9·25/18 = 125, z = 29/√125.
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y = [0.0, 2.0, 1.0, 3.0, 5.0, 4.0, 7.0, 6.0, 9.0, 8.0];
        let tau = kendall(&x, &y).unwrap();
        let c = 45 - 4;
        let s = (c - 4) as f64;
        assert!((tau.estimate - s / 45.0).abs() < 1e-12);
        let expected = z_two_sided(s / 125f64.sqrt());
        assert!((tau.p_value - expected).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn rank_correlations_ignore_monotone_transforms(
            pts in proptest::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 4..40)
        ) {
            let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
            let xt: Vec<f64> = x.iter().map(|v| (v / 10.0).exp()).collect();
            let yt: Vec<f64> = y.iter().map(|v| v * v * v + 3.0 * v).collect();
            if let (Ok(a), Ok(b)) = (spearman(&x, &y), spearman(&xt, &yt)) {
                prop_assert!((a.estimate - b.estimate).abs() < 1e-9);
                prop_assert!(a.estimate.abs() <= 1.0);
            }
            if let (Ok(a), Ok(b)) = (kendall(&x, &y), kendall(&xt, &yt)) {
                prop_assert!((a.estimate - b.estimate).abs() < 1e-12);
                prop_assert!((0.0..=1.0).contains(&a.p_value));
            }
        }
    }
}
