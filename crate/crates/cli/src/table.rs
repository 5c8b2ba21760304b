//! Headline statistics printed after a run.

use semwalk_core::exp::{Summary, SweepReport};
use semwalk_core::stats::{format_p, RegressionResult};

fn interval(fit: &RegressionResult, i: usize) -> String {
    format!(
        "{:.4} [{:.4}, {:.4}]",
        fit.coefficients[i], fit.ci_low[i], fit.ci_high[i]
    )
}

pub fn print_summary(summary: &Summary) {
    println!("{:<34} value", "statistic");
    let row = |name: &str, value: String| println!("{name:<34} {value}");
    if let Some(r) = &summary.exp1 {
        row(
            "exp1 spearman rho(p, Q)",
            format!(
                "{:.3} (p {})",
                r.spearman.estimate,
                format_p(r.spearman.p_value)
            ),
        );
        row(
            "exp1 kendall tau(p, Q)",
            format!(
                "{:.3} (p {})",
                r.kendall.estimate,
                format_p(r.kendall.p_value)
            ),
        );
        row(
            "exp1 AIC linear / quadratic",
            format!("{:.1} / {:.1}", r.linear.aic, r.quadratic.aic),
        );
    }
    if let Some(r) = &summary.exp2 {
        row(
            "exp2 pearson r(Q, B)",
            format!(
                "{:.3} (p {})",
                r.pearson.estimate,
                format_p(r.pearson.p_value)
            ),
        );
        row(
            "exp2 spearman rho(Q, B)",
            format!("{:.3}", r.spearman.estimate),
        );
        row("exp2 OLS slope", interval(&r.linear, 1));
        row("exp2 Theil-Sen slope", interval(&r.theil_sen, 1));
        row(
            "exp2 AIC linear / quadratic",
            format!("{:.1} / {:.1}", r.linear.aic, r.quadratic.aic),
        );
    }
    if let Some(r) = &summary.exp3 {
        let fe = &r.fixed_effects;
        row("exp3 FE slope gain ~ overlap", interval(fe, 0));
        row(
            "exp3 exposures / pairs",
            format!("{} / {}", r.exposures_count, r.ordered_pairs),
        );
        row(
            "exp3 fewer concepts per +0.10",
            format!("{:.2}", r.fewer_concepts_per_tenth_overlap),
        );
        if !r.inspiration {
            row("exp3 inspiration", "disabled".into());
        }
    }
    if let Some(r) = &summary.exp4 {
        let d = &r.difference;
        row("exp4 delta (triad - control)", interval(d, 0));
        row(
            "exp4 clustered t",
            format!(
                "{:.1} (p {}, {} clusters)",
                d.t_stats[0],
                format_p(d.p_values[0]),
                d.n_clusters.unwrap_or(0)
            ),
        );
        row("exp4 cohen d_z", format!("{:.2}", r.cohens_dz));
        row(
            "exp4 mean R triad / control",
            format!("{:.4} / {:.4}", r.triad.mean, r.control.mean),
        );
    }
}

pub fn print_sweep(report: &SweepReport) {
    let cell = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
    println!(
        "{:>4} {:>5} {:>3} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}",
        "T", "n", "k", "seed", "rho", "r", "beta", "delta", "t"
    );
    for c in &report.cells {
        println!(
            "{:>4} {:>5} {:>3} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}",
            c.walk_length,
            c.n,
            c.k,
            c.seed,
            cell(c.rho),
            cell(c.r),
            cell(c.beta),
            cell(c.delta),
            cell(c.t)
        );
    }
    println!("signs consistent: {}", report.signs_consistent);
}
