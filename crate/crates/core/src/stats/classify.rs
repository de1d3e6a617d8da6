//! Resampling classifier: decides whether a scan's patch probabilities look
//! like the cancerous population, the non-cancerous one, or neither.
//!
//! Each of the `n` iterations draws, without replacement, `s` values from the
//! truncated C population, the truncated NC population and the truncated scan
//! sample, then tests the scan draw against both population draws. Iteration
//! `i` uses its own random stream `(seed, i)`, so the outcome does not depend
//! on how iterations are scheduled.

use rand::seq::index;
use rand::Rng;

use super::{run_test, truncate_above_quantile, truncate_values, Population, Sample, StatParams, TestKind};
use crate::diagnosis::Diagnosis;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::rng;

/// Passed / failed counts of one side of the classifier.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TestTally {
    pub passed: usize,
    pub failed: usize,
}

impl TestTally {
    pub fn total(&self) -> usize {
        self.passed + self.failed
    }
}

/// The population-match predicate: passes must outnumber failures by at
/// least `r · n`.
pub fn passes_with_overhead(passed: usize, failed: usize, r: f64, n: usize) -> bool {
    passed as f64 - failed as f64 >= r * n as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub diagnosis: Diagnosis,
    /// Scan draw against C population draws.
    pub c: TestTally,
    /// Scan draw against NC population draws.
    pub nc: TestTally,
}

fn check_populations(pop_c: &Population, pop_nc: &Population, s: usize) -> Result<()> {
    for (pop, want) in [(pop_c, Diagnosis::C), (pop_nc, Diagnosis::NC)] {
        if pop.label() != want {
            return Err(Error::Parameter(format!(
                "expected a {want} population, got {}",
                pop.label()
            )));
        }
        if !pop.is_truncated() {
            return Err(Error::Parameter(format!(
                "the {want} population must be truncated at q before classification"
            )));
        }
        if pop.len() < s {
            return Err(Error::Parameter(format!(
                "the {want} population has {} values, fewer than the sample size {s}",
                pop.len()
            )));
        }
    }
    Ok(())
}

fn draw<R: Rng + ?Sized>(rng: &mut R, values: &[f64], s: usize, out: &mut Vec<f64>) {
    out.clear();
    out.extend(index::sample(rng, values.len(), s).iter().map(|i| values[i]));
}

pub fn stat_classify(
    x: &Sample,
    pop_c: &Population,
    pop_nc: &Population,
    params: &StatParams,
    kind: TestKind,
) -> Result<Classification> {
    stat_classify_with(x, pop_c, pop_nc, params, kind, Exec::default())
}

/// Classifies `x` against pre-truncated populations.
///
/// `x` is truncated at its own `q`-quantile first; fewer than `s` remaining
/// values is a parameter error. Returns C or NC when exactly one of the two
/// population matches holds, IHC otherwise.
pub fn stat_classify_with(
    x: &Sample,
    pop_c: &Population,
    pop_nc: &Population,
    params: &StatParams,
    kind: TestKind,
    exec: Exec,
) -> Result<Classification> {
    params.validate()?;
    let s = params.sample_size;
    check_populations(pop_c, pop_nc, s)?;
    let (xt, _) = truncate_values(x, params.q)?;
    if xt.len() < s {
        return Err(Error::Parameter(format!(
            "scan sample keeps {} values after truncation at q = {}, fewer than s = {s}",
            xt.len(),
            params.q
        )));
    }

    let outcomes = exec.try_map_range(params.draws, |i| -> Result<(bool, bool)> {
        let mut rng = rng::stream(params.seed, i as u64);
        let (mut c, mut nc, mut xs) = (Vec::with_capacity(s), Vec::with_capacity(s), Vec::with_capacity(s));
        draw(&mut rng, pop_c.values(), s, &mut c);
        draw(&mut rng, pop_nc.values(), s, &mut nc);
        draw(&mut rng, &xt, s, &mut xs);
        let vs_c = run_test(kind, &c, &xs, params.alpha, params.permutations, &mut rng)?;
        let vs_nc = run_test(kind, &nc, &xs, params.alpha, params.permutations, &mut rng)?;
        Ok((vs_c.passed(), vs_nc.passed()))
    })?;

    let (mut c, mut nc) = (TestTally::default(), TestTally::default());
    for (pc, pnc) in outcomes {
        if pc { c.passed += 1 } else { c.failed += 1 }
        if pnc { nc.passed += 1 } else { nc.failed += 1 }
    }
    let d_c = passes_with_overhead(c.passed, c.failed, params.overhead, params.draws);
    let d_nc = passes_with_overhead(nc.passed, nc.failed, params.overhead, params.draws);
    let diagnosis = match (d_c, d_nc) {
        (true, false) => Diagnosis::C,
        (false, true) => Diagnosis::NC,
        _ => Diagnosis::IHC,
    };
    Ok(Classification { diagnosis, c, nc })
}

/// Outcome counts of one verification run.
///
/// Type-I: the scan was left undecided (IHC). Type-II: it was given the
/// opposite class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PostHocTally {
    pub c_total: usize,
    pub c_type1: usize,
    pub c_type2: usize,
    pub nc_total: usize,
    pub nc_type1: usize,
    pub nc_type2: usize,
}

impl PostHocTally {
    pub fn c_correct(&self) -> usize {
        self.c_total - self.c_type1 - self.c_type2
    }

    pub fn nc_correct(&self) -> usize {
        self.nc_total - self.nc_type1 - self.nc_type2
    }

    fn record(&mut self, truth: Diagnosis, got: Diagnosis) {
        let (total, t1, t2) = match truth {
            Diagnosis::C => (&mut self.c_total, &mut self.c_type1, &mut self.c_type2),
            _ => (&mut self.nc_total, &mut self.nc_type1, &mut self.nc_type2),
        };
        *total += 1;
        if got == Diagnosis::IHC {
            *t1 += 1;
        } else if got != truth {
            *t2 += 1;
        }
    }
}

/// Per-repetition tallies and their means, in the column order
/// C type-I, C type-II, NC type-I, NC type-II.
#[derive(Debug, Clone, PartialEq)]
pub struct PostHocReport {
    pub per_rep: Vec<PostHocTally>,
    pub mean: [f64; 4],
}

impl PostHocReport {
    fn from_reps(per_rep: Vec<PostHocTally>) -> Self {
        let k = per_rep.len().max(1) as f64;
        let mut mean = [0.0; 4];
        for t in &per_rep {
            for (m, v) in mean.iter_mut().zip([t.c_type1, t.c_type2, t.nc_type1, t.nc_type2]) {
                *m += v as f64 / k;
            }
        }
        PostHocReport { per_rep, mean }
    }

    pub fn total_type2(&self) -> usize {
        self.per_rep.iter().map(|t| t.c_type2 + t.nc_type2).sum()
    }
}

fn check_truth(d: Diagnosis) -> Result<()> {
    if d == Diagnosis::IHC {
        return Err(Error::Parameter("verification scans need a C or NC ground truth".into()));
    }
    Ok(())
}

fn verify_once(
    scans: &[(Sample, Diagnosis)],
    pop_c: &Population,
    pop_nc: &Population,
    params: &StatParams,
    kind: TestKind,
    seed: u64,
    exec: Exec,
) -> Result<PostHocTally> {
    let got = exec.try_map_range(scans.len(), |j| {
        let p = StatParams { seed: rng::derive_seed(seed, j as u64), ..*params };
        stat_classify_with(&scans[j].0, pop_c, pop_nc, &p, kind, Exec::Sequential).map(|c| c.diagnosis)
    })?;
    let mut tally = PostHocTally::default();
    for ((_, truth), d) in scans.iter().zip(got) {
        tally.record(*truth, d);
    }
    Ok(tally)
}

pub fn post_hoc_verify(
    scans: &[(Sample, Diagnosis)],
    pop_c: &Population,
    pop_nc: &Population,
    params: &StatParams,
    kind: TestKind,
    repetitions: usize,
) -> Result<PostHocReport> {
    post_hoc_verify_with(scans, pop_c, pop_nc, params, kind, repetitions, Exec::default())
}

/// Classifies every held-out scan against fixed populations, `repetitions`
/// times with distinct derived seeds, and tallies disagreements with the
/// ground truth.
pub fn post_hoc_verify_with(
    scans: &[(Sample, Diagnosis)],
    pop_c: &Population,
    pop_nc: &Population,
    params: &StatParams,
    kind: TestKind,
    repetitions: usize,
    exec: Exec,
) -> Result<PostHocReport> {
    if repetitions == 0 {
        return Err(Error::Parameter("at least one repetition is required".into()));
    }
    for (_, d) in scans {
        check_truth(*d)?;
    }
    let per_rep = (0..repetitions)
        .map(|k| verify_once(scans, pop_c, pop_nc, params, kind, rng::derive_seed(params.seed, k as u64), exec))
        .collect::<Result<Vec<_>>>()?;
    Ok(PostHocReport::from_reps(per_rep))
}

/// Whole hold-out experiment over labelled scans.
///
/// For every repetition the scans of each class are shuffled and split, with
/// `train_fraction` of them pooled into that class's population (truncated at
/// `q`) and the rest classified against those populations.
pub fn holdout_experiment(
    scans: &[(Vec<f64>, Diagnosis)],
    train_fraction: f64,
    params: &StatParams,
    kind: TestKind,
    repetitions: usize,
    exec: Exec,
) -> Result<PostHocReport> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Parameter(format!(
            "train fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    if repetitions == 0 {
        return Err(Error::Parameter("at least one repetition is required".into()));
    }
    for (_, d) in scans {
        check_truth(*d)?;
    }
    let by_class = |d: Diagnosis| -> Vec<usize> { (0..scans.len()).filter(|&i| scans[i].1 == d).collect() };
    let (c_idx, nc_idx) = (by_class(Diagnosis::C), by_class(Diagnosis::NC));

    let mut per_rep = Vec::with_capacity(repetitions);
    for k in 0..repetitions {
        let rep_seed = rng::derive_seed(params.seed, k as u64);
        let mut split_rng = rng::stream(rep_seed, u64::MAX);
        let mut test = Vec::new();
        let mut pops = Vec::with_capacity(2);
        for (label, idx) in [(Diagnosis::C, &c_idx), (Diagnosis::NC, &nc_idx)] {
            let n_train = ((idx.len() as f64) * train_fraction).round() as usize;
            if n_train == 0 || n_train == idx.len() {
                return Err(Error::Parameter(format!(
                    "{} {label} scans cannot be split into non-empty train and test parts",
                    idx.len()
                )));
            }
            let order = index::sample(&mut split_rng, idx.len(), idx.len()).into_vec();
            let pooled: Vec<f64> = order[..n_train].iter().flat_map(|&o| scans[idx[o]].0.iter().copied()).collect();
            pops.push(truncate_above_quantile(&Population::new(label, pooled)?, params.q)?);
            for &o in &order[n_train..] {
                test.push((Sample::new(scans[idx[o]].0.clone())?, label));
            }
        }
        per_rep.push(verify_once(&test, &pops[0], &pops[1], params, kind, rep_seed, exec)?);
    }
    Ok(PostHocReport::from_reps(per_rep))
}
