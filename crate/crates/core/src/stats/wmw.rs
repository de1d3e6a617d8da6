use super::distributions::normal_two_sided_p;
use super::{check_pair, TestKind, TestOutcome};
use crate::error::{Error, Result};

/// Rank-sum statistics of a pair of samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WmwStatistics {
    /// `U1 = N1 N2 + N1 (N1 + 1) / 2 - R1`, with `R1` the rank sum of the first sample.
    pub u1: f64,
    /// `U2 = N1 N2 - U1`.
    pub u2: f64,
    /// `min(U1, U2)`.
    pub u: f64,
    /// `(U - N1 N2 / 2) / sqrt(N1 N2 (N1 + N2 + 1) / 12)`; never positive.
    pub z: f64,
    /// Same standardisation applied to `U1`; changes sign when the samples swap.
    pub z_u1: f64,
}

/// Midranks (1-based) of the pooled values; tied values share their mean rank.
pub(crate) fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j (0-based) share rank mean of (i+1)..=j
        let rank = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        i = j;
    }
    ranks
}

pub fn wmw_statistics(x1: &[f64], x2: &[f64]) -> WmwStatistics {
    let (n1, n2) = (x1.len() as f64, x2.len() as f64);
    let pooled: Vec<f64> = x1.iter().chain(x2).copied().collect();
    let ranks = midranks(&pooled);
    let r1: f64 = ranks[..x1.len()].iter().sum();
    let u1 = n1 * n2 + n1 * (n1 + 1.0) / 2.0 - r1;
    let u2 = n1 * n2 - u1;
    let u = u1.min(u2);
    let mean = n1 * n2 / 2.0;
    let sd = (n1 * n2 * (n1 + n2 + 1.0) / 12.0).sqrt();
    WmwStatistics {
        u1,
        u2,
        u,
        z: (u - mean) / sd,
        z_u1: (u1 - mean) / sd,
    }
}

/// Two-sided Wilcoxon-Mann-Whitney test with the normal approximation.
///
/// Ties get midranks; the variance is the untied `N1 N2 (N1 + N2 + 1) / 12`.
/// Rejects when `|Z|` exceeds the `1 - α/2` normal quantile (two-sided `p < α`).
pub fn wmw_test(x1: &[f64], x2: &[f64], alpha: f64) -> Result<TestOutcome> {
    check_pair(x1, x2, alpha)?;
    let st = wmw_statistics(x1, x2);
    let p_value = normal_two_sided_p(st.z).max(f64::MIN_POSITIVE);
    Ok(TestOutcome {
        kind: TestKind::Wmw,
        statistic: st.z,
        df: None,
        p_value,
        reject: p_value < alpha,
        alpha,
        degenerate: false,
    })
}

/// Largest pooled size accepted by [`wmw_exact_p_value`].
pub const EXACT_MAX_POOLED: usize = 100;

/// Exact two-sided permutation p-value of the rank-sum statistic.
///
/// Counts, over all `C(N1 + N2, N1)` equally likely assignments of the pooled
/// midranks to the first sample, those whose rank sum lies at least as far
/// from its null mean as the observed one. Uses a subset-sum recurrence on
/// doubled midranks, so ties are handled exactly.
pub fn wmw_exact_p_value(x1: &[f64], x2: &[f64]) -> Result<f64> {
    check_pair(x1, x2, 0.5)?;
    let n = x1.len() + x2.len();
    if n > EXACT_MAX_POOLED {
        return Err(Error::Parameter(format!(
            "exact rank-sum distribution limited to {EXACT_MAX_POOLED} pooled values, got {n}"
        )));
    }
    let pooled: Vec<f64> = x1.iter().chain(x2).copied().collect();
    let doubled: Vec<usize> = midranks(&pooled).iter().map(|r| (2.0 * r).round() as usize).collect();
    let k = x1.len();
    let max_sum: usize = doubled.iter().sum();

    // counts[j][s]: subsets of size j with doubled rank sum s
    let mut counts = vec![vec![0u128; max_sum + 1]; k + 1];
    counts[0][0] = 1;
    for &r in &doubled {
        for j in (1..=k).rev() {
            let (lower, upper) = counts.split_at_mut(j);
            let (src, dst) = (&lower[j - 1], &mut upper[0]);
            for s in (r..=max_sum).rev() {
                dst[s] += src[s - r];
            }
        }
    }

    let centre = (k * (n + 1)) as i64; // doubled null mean of the rank sum
    let observed: i64 = doubled[..k].iter().sum::<usize>() as i64;
    let dev = (observed - centre).abs();
    let (mut extreme, mut total) = (0u128, 0u128);
    for (s, &c) in counts[k].iter().enumerate() {
        total += c;
        if (s as i64 - centre).abs() >= dev {
            extreme += c;
        }
    }
    Ok(extreme as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn midranks_with_ties() {
        assert_eq!(midranks(&[1.0, 2.0, 2.0, 4.0, 5.0]), vec![1.0, 2.5, 2.5, 4.0, 5.0]);
        assert_eq!(midranks(&[3.0, 1.0, 3.0, 3.0]), vec![3.0, 1.0, 3.0, 3.0]);
    }

    #[test]
    fn separated_samples() {
        let st = wmw_statistics(&[0.1, 0.2, 0.3], &[0.7, 0.8, 0.9, 1.0]);
        assert_eq!(st.u, 0.0);
        assert_eq!(st.u1 + st.u2, 12.0);
    }

    #[test]
    fn reference_small_case() {
        // SciPy mannwhitneyu(method="asymptotic", use_continuity=False) p = 0.3864762307712327,
        // and method="exact" p = 0.4857142857142857.
        let a = [0.1, 0.4, 0.35, 0.8];
        let b = [0.2, 0.9, 0.7, 0.65];
        let o = wmw_test(&a, &b, 0.05).unwrap();
        assert_abs_diff_eq!(o.p_value, 0.3864762307712327, epsilon = 1e-12);
        assert_abs_diff_eq!(wmw_exact_p_value(&a, &b).unwrap(), 0.4857142857142857, epsilon = 1e-15);
        assert_eq!(wmw_statistics(&a, &b).u, 5.0);
    }

    #[test]
    fn exact_p_extremes() {
        // complete separation of 4 vs 4: 2 of 70 splits are as extreme
        let p = wmw_exact_p_value(&[1.0, 2.0, 3.0, 4.0], &[5.0, 6.0, 7.0, 8.0]).unwrap();
        assert_abs_diff_eq!(p, 2.0 / 70.0, epsilon = 1e-15);
        assert_eq!(wmw_exact_p_value(&[1.0, 1.0], &[1.0, 1.0]).unwrap(), 1.0);
    }

    proptest! {
        #[test]
        fn u_identity(x1 in prop::collection::vec(0.0f64..1.0, 2..20), x2 in prop::collection::vec(0.0f64..1.0, 2..20)) {
            let st = wmw_statistics(&x1, &x2);
            let n = (x1.len() * x2.len()) as f64;
            prop_assert!((st.u1 + st.u2 - n).abs() < 1e-9);
            prop_assert!(st.z <= 0.0);
        }

        #[test]
        fn swap_symmetry(x1 in prop::collection::vec(0.0f64..1.0, 8), x2 in prop::collection::vec(0.0f64..1.0, 8)) {
            let ab = wmw_statistics(&x1, &x2);
            let ba = wmw_statistics(&x2, &x1);
            prop_assert!((ab.z_u1 + ba.z_u1).abs() < 1e-12);
            prop_assert!((ab.z - ba.z).abs() < 1e-12);
        }

        #[test]
        fn u_invariant_under_monotone_transform(x1 in prop::collection::vec(0.0f64..1.0, 2..12), x2 in prop::collection::vec(0.0f64..1.0, 2..12)) {
            let f = |v: &f64| (3.0 * v).exp() - 1.0;
            let t1: Vec<f64> = x1.iter().map(f).collect();
            let t2: Vec<f64> = x2.iter().map(f).collect();
            prop_assert_eq!(wmw_statistics(&x1, &x2).u, wmw_statistics(&t1, &t2).u);
        }
    }
}
