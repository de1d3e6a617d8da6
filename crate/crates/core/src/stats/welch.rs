use super::distributions::{t_quantile, t_two_sided_p};
use super::{check_pair, mean, variance, TestKind, TestOutcome};
use crate::error::Result;

/// Welch's two-sided t-test.
///
/// `T_BF = (x̄1 - x̄2) / sqrt(s1²/N1 + s2²/N2)` with `N - 1` variances and the
/// Welch–Satterthwaite degrees of freedom
/// `η = (s1²/N1 + s2²/N2)² / (s1⁴/(N1²(N1-1)) + s2⁴/(N2²(N2-1)))`.
///
/// The null is rejected when `|T_BF|` exceeds the `1 - α/2` quantile of
/// `t(η)`, computed equivalently as two-sided `p < α`. When both variances
/// are zero the outcome is flagged `degenerate`: equal means pass with
/// `p = 1`, different means are rejected.
pub fn welch_test(x1: &[f64], x2: &[f64], alpha: f64) -> Result<TestOutcome> {
    check_pair(x1, x2, alpha)?;
    let (n1, n2) = (x1.len() as f64, x2.len() as f64);
    let (m1, m2) = (mean(x1), mean(x2));
    let (v1, v2) = (variance(x1), variance(x2));
    let (a, b) = (v1 / n1, v2 / n2);
    let se2 = a + b;

    if se2 == 0.0 {
        let differ = m1 != m2;
        return Ok(TestOutcome {
            kind: TestKind::Welch,
            statistic: if differ { (m1 - m2).signum() * f64::INFINITY } else { 0.0 },
            df: None,
            p_value: if differ { f64::MIN_POSITIVE } else { 1.0 },
            reject: differ,
            alpha,
            degenerate: true,
        });
    }

    let statistic = (m1 - m2) / se2.sqrt();
    let df = se2 * se2 / (a * a / (n1 - 1.0) + b * b / (n2 - 1.0));
    let p_value = t_two_sided_p(statistic, df).max(f64::MIN_POSITIVE);
    Ok(TestOutcome {
        kind: TestKind::Welch,
        statistic,
        df: Some(df),
        p_value,
        reject: p_value < alpha,
        alpha,
        degenerate: false,
    })
}

/// Two-sided critical value `t(1 - α/2, η)`.
pub fn welch_critical_value(alpha: f64, df: f64) -> f64 {
    t_quantile(1.0 - alpha / 2.0, df)
}
