//! Statistics used by the experiments: correlations, linear and robust
//! regression, two-way fixed effects with cluster-robust errors, bootstrap
//! intervals and effect sizes.

mod bootstrap;
mod correlation;
mod panel;
mod regression;

pub use bootstrap::{bootstrap_ci, cohens_dz};
pub use correlation::{kendall, pearson, spearman, CorrelationMethod, CorrelationResult};
pub use panel::{
    clustered_mean_test, quantile_bin_partial, residualize, two_way_fe, PanelObservation,
    Residualized,
};
pub use regression::{ols, theil_sen, Estimator, RegressionResult, SeKind};

use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

/// p-values below this are reported as a bound, not a number.
pub const P_FLOOR: f64 = 1e-15;

/// Human-readable p-value, `"< 1e-15"` under the floor.
pub fn format_p(p: f64) -> String {
    if p < P_FLOOR {
        "< 1e-15".to_string()
    } else {
        format!("{p:.3e}")
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample variance with `n - 1` in the denominator.
pub fn sample_variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() as f64 - 1.0)
}

/// Linear-interpolation percentile (`q` in `[0, 100]`) of sorted data.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty data");
    let pos = (q / 100.0).clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Median, averaging the two middle values for even lengths. Reorders
/// `values`.
pub fn median_in_place(values: &mut [f64]) -> f64 {
    let n = values.len();
    assert!(n > 0, "median of empty data");
    let mid = n / 2;
    let (_, &mut upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    if n % 2 == 1 {
        upper
    } else {
        let lower = values[..mid]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// Two-sided p-value of a t statistic.
pub(crate) fn t_two_sided(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if !t.is_finite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * dist.cdf(-t.abs())).min(1.0)
}

/// Two-sided p-value of a standard normal statistic.
pub(crate) fn z_two_sided(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    (2.0 * Normal::standard().cdf(-z.abs())).min(1.0)
}

/// Upper 97.5% quantile of Student-t.
pub(crate) fn t_crit(df: f64) -> f64 {
    // statrs' inverse CDF does not converge for very large df.
    if df > 1e6 {
        return Normal::standard().inverse_cdf(0.975);
    }
    StudentsT::new(0.0, 1.0, df)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975)
}
