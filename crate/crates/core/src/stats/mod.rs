//! Two-sample hypothesis tests and the resampling classifier built on them.
//!
//! A scan's patch probabilities are compared against pooled reference
//! populations of cancerous (C) and non-cancerous (NC) patches. Three tests
//! are available: Welch's unequal-variance t-test, the Wilcoxon-Mann-Whitney
//! rank-sum test with normal approximation, and a Monte Carlo permutation test
//! on the absolute difference of means. All are two-sided, and "reject" means
//! the null hypothesis of a common distribution (or mean) is rejected at `α`.

mod classify;
pub mod distributions;
mod permutation;
mod welch;
mod wmw;

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

pub use classify::{
    holdout_experiment, passes_with_overhead, post_hoc_verify, post_hoc_verify_with, stat_classify,
    stat_classify_with, Classification, PostHocReport, PostHocTally, TestTally,
};
pub use permutation::{permutation_test, permutation_test_with_rng};
pub use welch::{welch_critical_value, welch_test};
pub use wmw::{wmw_exact_p_value, wmw_statistics, wmw_test, WmwStatistics, EXACT_MAX_POOLED};
pub(crate) use wmw::midranks;

use crate::diagnosis::Diagnosis;
use crate::error::{Error, Result};

/// A finite-valued sample of at least two observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample(Vec<f64>);

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Parameter(format!(
                "a sample needs at least 2 values, got {}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Parameter(format!("sample value {v} is not finite")));
        }
        Ok(Sample(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Sample {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Pooled patch probabilities of one ground-truth class.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    label: Diagnosis,
    values: Vec<f64>,
    cutoff: Option<f64>,
}

impl Population {
    pub fn new(label: Diagnosis, values: Vec<f64>) -> Result<Self> {
        if label == Diagnosis::IHC {
            return Err(Error::Parameter("population label must be C or NC".into()));
        }
        if values.is_empty() {
            return Err(Error::Parameter("population is empty".into()));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Parameter(format!(
                "population value {v} is not a probability"
            )));
        }
        Ok(Population {
            label,
            values,
            cutoff: None,
        })
    }

    pub fn label(&self) -> Diagnosis {
        self.label
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Quantile value the population was truncated at, if any.
    pub fn cutoff(&self) -> Option<f64> {
        self.cutoff
    }

    pub fn is_truncated(&self) -> bool {
        self.cutoff.is_some()
    }
}

/// Empirical `q`-quantile with linear interpolation between order statistics:
/// for sorted `x[0..n]` and `h = (n - 1) q`, the value is
/// `x[⌊h⌋] + (h - ⌊h⌋) (x[⌊h⌋ + 1] - x[⌊h⌋])`.
pub fn empirical_quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Parameter("quantile of an empty set".into()));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Parameter(format!("quantile level must be in [0, 1], got {q}")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted_quantile(&sorted, q))
}

fn sorted_quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Keeps the values at or above the empirical `q`-quantile, in their original
/// order, and returns them with the cutoff.
pub fn truncate_values(values: &[f64], q: f64) -> Result<(Vec<f64>, f64)> {
    if !(0.0..1.0).contains(&q) {
        return Err(Error::Parameter(format!("cut-off quantile must be in [0, 1), got {q}")));
    }
    let cutoff = empirical_quantile(values, q)?;
    let kept: Vec<f64> = values.iter().copied().filter(|v| *v >= cutoff).collect();
    if kept.is_empty() {
        return Err(Error::Parameter(format!(
            "truncation at q = {q} left no values"
        )));
    }
    Ok((kept, cutoff))
}

/// Drops the common low-probability tail: keeps values `>= ` the `q`-quantile.
pub fn truncate_above_quantile(pop: &Population, q: f64) -> Result<Population> {
    let (values, cutoff) = truncate_values(&pop.values, q)?;
    Ok(Population {
        label: pop.label,
        values,
        cutoff: Some(cutoff),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TestKind {
    Welch,
    Wmw,
    Permutation,
}

impl TestKind {
    pub const ALL: [TestKind; 3] = [TestKind::Welch, TestKind::Wmw, TestKind::Permutation];

    pub fn name(self) -> &'static str {
        match self {
            TestKind::Welch => "welch",
            TestKind::Wmw => "wmw",
            TestKind::Permutation => "perm",
        }
    }
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "welch" => Ok(TestKind::Welch),
            "wmw" => Ok(TestKind::Wmw),
            "perm" | "permutation" => Ok(TestKind::Permutation),
            _ => Err(Error::Parameter(format!("unknown test kind {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestOutcome {
    pub kind: TestKind,
    /// `T_BF` for Welch, `Z` for WMW, `|mean(X1) - mean(X2)|` for permutation.
    pub statistic: f64,
    /// Welch–Satterthwaite degrees of freedom (Welch only).
    pub df: Option<f64>,
    pub p_value: f64,
    pub reject: bool,
    pub alpha: f64,
    /// Set when both samples have zero variance and the usual statistic is undefined.
    pub degenerate: bool,
}

impl TestOutcome {
    /// The test did not reject the common-population hypothesis.
    pub fn passed(&self) -> bool {
        !self.reject
    }
}

pub(crate) fn check_pair(x1: &[f64], x2: &[f64], alpha: f64) -> Result<()> {
    if x1.len() < 2 || x2.len() < 2 {
        return Err(Error::Parameter(format!(
            "two-sample tests need at least 2 values per sample, got {} and {}",
            x1.len(),
            x2.len()
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Parameter(format!("alpha must be in (0, 1), got {alpha}")));
    }
    Ok(())
}

pub(crate) fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance (denominator `n - 1`), two-pass.
pub(crate) fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64
}

/// Runs one two-sample test. `rng` is only consumed by the permutation test.
pub(crate) fn run_test<R: rand::Rng + ?Sized>(
    kind: TestKind,
    x1: &[f64],
    x2: &[f64],
    alpha: f64,
    permutations: usize,
    rng: &mut R,
) -> Result<TestOutcome> {
    match kind {
        TestKind::Welch => welch_test(x1, x2, alpha),
        TestKind::Wmw => wmw_test(x1, x2, alpha),
        TestKind::Permutation => permutation_test_with_rng(x1, x2, alpha, permutations, rng),
    }
}

/// Parameters of the resampling classifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatParams {
    /// Cut-off quantile applied to populations and to the scan sample.
    pub q: f64,
    /// Size `s` of each drawn sample.
    pub sample_size: usize,
    /// Number of draws `n` per classification.
    pub draws: usize,
    /// Required overhead `r` of passed over failed tests, as a fraction of `n`.
    pub overhead: f64,
    pub alpha: f64,
    /// Monte Carlo permutations `M` for the permutation test.
    pub permutations: usize,
    pub seed: u64,
}

impl Default for StatParams {
    fn default() -> Self {
        StatParams {
            q: 0.5,
            sample_size: 20,
            draws: 1000,
            overhead: 0.05,
            alpha: 0.05,
            permutations: 999,
            seed: 0,
        }
    }
}

impl StatParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Parameter(m));
        if !(self.q > 0.0 && self.q < 1.0) {
            return bad(format!("q must be in (0, 1), got {}", self.q));
        }
        if self.sample_size < 2 {
            return bad(format!("sample size must be >= 2, got {}", self.sample_size));
        }
        if self.draws < 1 {
            return bad("number of draws must be >= 1".into());
        }
        if !(0.0..1.0).contains(&self.overhead) {
            return bad(format!("overhead r must be in [0, 1), got {}", self.overhead));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must be in (0, 1), got {}", self.alpha));
        }
        if self.permutations < 99 {
            return bad(format!("permutation count must be >= 99, got {}", self.permutations));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_interpolates() {
        assert_eq!(empirical_quantile(&[0.4, 0.1, 0.3, 0.2], 0.5).unwrap(), 0.25);
        assert_eq!(empirical_quantile(&[3.0], 0.9).unwrap(), 3.0);
        assert_eq!(empirical_quantile(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.25).unwrap(), 2.0);
    }

    #[test]
    fn truncation_examples() {
        let pop = Population::new(Diagnosis::C, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let t = truncate_above_quantile(&pop, 0.5).unwrap();
        assert_eq!(t.values(), &[0.3, 0.4]);
        assert_eq!(t.cutoff(), Some(0.25));

        let t0 = truncate_above_quantile(&pop, 0.0).unwrap();
        assert_eq!(t0.values(), pop.values());
        // any q > 0 moves the interpolated cutoff above the minimum
        let tiny = truncate_above_quantile(&pop, 1e-12).unwrap();
        assert_eq!(tiny.values(), &[0.2, 0.3, 0.4]);
    }

    #[test]
    fn truncation_keeps_about_half() {
        let values: Vec<f64> = (0..10_001).map(|i| (i as f64 * 0.618_033_988_7).fract()).collect();
        let pop = Population::new(Diagnosis::NC, values).unwrap();
        let t = truncate_above_quantile(&pop, 0.5).unwrap();
        assert_eq!(t.len(), 5001);
        assert!(t.values().iter().all(|v| *v >= t.cutoff().unwrap()));
    }

    #[test]
    fn truncation_rejects_bad_q() {
        let pop = Population::new(Diagnosis::C, vec![0.1, 0.2]).unwrap();
        assert!(truncate_above_quantile(&pop, 1.0).is_err());
        assert!(truncate_above_quantile(&pop, -0.1).is_err());
    }

    #[test]
    fn population_validation() {
        assert!(Population::new(Diagnosis::IHC, vec![0.5]).is_err());
        assert!(Population::new(Diagnosis::C, vec![]).is_err());
        assert!(Population::new(Diagnosis::C, vec![1.5]).is_err());
    }

    #[test]
    fn sample_validation() {
        assert!(Sample::new(vec![1.0]).is_err());
        assert!(Sample::new(vec![1.0, f64::INFINITY]).is_err());
        assert_eq!(Sample::new(vec![1.0, 2.0]).unwrap().len(), 2);
    }

    #[test]
    fn params_validation() {
        assert!(StatParams::default().validate().is_ok());
        for p in [
            StatParams { q: 1.0, ..Default::default() },
            StatParams { sample_size: 1, ..Default::default() },
            StatParams { draws: 0, ..Default::default() },
            StatParams { overhead: 1.0, ..Default::default() },
            StatParams { alpha: 0.0, ..Default::default() },
            StatParams { permutations: 98, ..Default::default() },
        ] {
            assert!(p.validate().is_err(), "{p:?}");
        }
    }

    #[test]
    fn test_kind_names() {
        for k in TestKind::ALL {
            assert_eq!(k.name().parse::<TestKind>().unwrap(), k);
        }
        assert!("anova".parse::<TestKind>().is_err());
    }
}
