use rand::Rng;

use super::{check_pair, TestKind, TestOutcome};
use crate::error::{Error, Result};
use crate::rng;

/// Relative slack when comparing resampled statistics to the observed one, so
/// that splits equal to the observed split up to summation order count as
/// "at least as extreme".
const TIE_SLACK: f64 = 1e-10;

/// Monte Carlo permutation test on `s = |mean(X1) - mean(X2)|`.
///
/// Draws `permutations` random re-splits of the pooled values into sizes
/// `N1 : N2` and returns `p = (1 + #{s_i >= s_0}) / (M + 1)`. The test rejects
/// (fails) when `p <= α`.
pub fn permutation_test(x1: &[f64], x2: &[f64], alpha: f64, permutations: usize, seed: u64) -> Result<TestOutcome> {
    permutation_test_with_rng(x1, x2, alpha, permutations, &mut rng::stream(seed, 0))
}

pub fn permutation_test_with_rng<R: Rng + ?Sized>(
    x1: &[f64],
    x2: &[f64],
    alpha: f64,
    permutations: usize,
    rng: &mut R,
) -> Result<TestOutcome> {
    check_pair(x1, x2, alpha)?;
    if permutations < 99 {
        return Err(Error::Parameter(format!(
            "permutation count must be >= 99, got {permutations}"
        )));
    }
    let mut pooled: Vec<f64> = x1.iter().chain(x2).copied().collect();
    let (k, n) = (x1.len(), pooled.len());
    let total: f64 = pooled.iter().sum();
    let (nk, nr) = (k as f64, (n - k) as f64);
    let split_stat = |head: f64| (head / nk - (total - head) / nr).abs();

    let observed = split_stat(x1.iter().sum());
    let threshold = observed * (1.0 - TIE_SLACK);
    let mut at_least = 0usize;
    for _ in 0..permutations {
        // partial Fisher-Yates: the first k slots become a uniform k-subset
        for i in 0..k {
            let j = rng.random_range(i..n);
            pooled.swap(i, j);
        }
        let head: f64 = pooled[..k].iter().sum();
        if split_stat(head) >= threshold {
            at_least += 1;
        }
    }
    let p_value = (1 + at_least) as f64 / (permutations + 1) as f64;
    Ok(TestOutcome {
        kind: TestKind::Permutation,
        statistic: observed,
        df: None,
        p_value,
        reject: p_value <= alpha,
        alpha,
        degenerate: false,
    })
}
