//! Scan-level abstaining diagnosis from the cancer-tissue percentage.
//!
//! A scan is called non-cancerous when `p_c <= T_L`, cancerous when
//! `p_c >= T_U`, and left undecided (`IHC`, i.e. refer for further
//! examination) in between.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::ScanRecord;
use crate::error::{Error, Result};
use crate::exec::Exec;

/// Scan-level outcome. The derived order `NC < IHC < C` is the ordinal scale
/// used for monotonicity checks and rank correlations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Diagnosis {
    NC,
    IHC,
    C,
}

impl Diagnosis {
    pub fn code(self) -> &'static str {
        match self {
            Diagnosis::NC => "NC",
            Diagnosis::IHC => "IHC",
            Diagnosis::C => "C",
        }
    }

    /// Ordinal encoding `NC = 0`, `IHC = 1`, `C = 2`.
    pub fn ordinal(self) -> f64 {
        match self {
            Diagnosis::NC => 0.0,
            Diagnosis::IHC => 1.0,
            Diagnosis::C => 2.0,
        }
    }

    pub fn is_decided(self) -> bool {
        self != Diagnosis::IHC
    }

    /// The other definite class; `IHC` maps to itself.
    pub fn opposite(self) -> Diagnosis {
        match self {
            Diagnosis::NC => Diagnosis::C,
            Diagnosis::C => Diagnosis::NC,
            Diagnosis::IHC => Diagnosis::IHC,
        }
    }
}

impl fmt::Display for Diagnosis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Diagnosis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "NC" => Ok(Diagnosis::NC),
            // "IHS" appears as a variant spelling of the uncertain outcome.
            "IHC" | "IHS" => Ok(Diagnosis::IHC),
            "C" => Ok(Diagnosis::C),
            _ => Err(Error::Schema(format!("unknown diagnosis {s:?}"))),
        }
    }
}

/// Lower and upper percentage thresholds, `0 <= lower < upper <= 100`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdRule {
    lower: f64,
    upper: f64,
}

impl ThresholdRule {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && 0.0 <= lower && lower < upper && upper <= 100.0) {
            return Err(Error::Parameter(format!(
                "threshold rule needs 0 <= T_L < T_U <= 100, got ({lower}, {upper})"
            )));
        }
        Ok(ThresholdRule { lower, upper })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn decide(&self, cancer_pct: f64) -> Diagnosis {
        if cancer_pct <= self.lower {
            Diagnosis::NC
        } else if cancer_pct >= self.upper {
            Diagnosis::C
        } else {
            Diagnosis::IHC
        }
    }
}

pub fn decide(cancer_pct: f64, rule: &ThresholdRule) -> Diagnosis {
    rule.decide(cancer_pct)
}

/// Accuracy on decided scans and the share of scans decided, both in percent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    /// `None` when no scan was decided.
    pub accuracy: Option<f64>,
    pub coverage: f64,
    pub decided: usize,
    pub correct: usize,
    pub total: usize,
}

pub fn evaluate(records: &[ScanRecord], rule: &ThresholdRule) -> Result<Evaluation> {
    if records.is_empty() {
        return Err(Error::Parameter("cannot evaluate an empty record list".into()));
    }
    let (mut decided, mut correct) = (0usize, 0usize);
    for r in records {
        let truth = r.truth().ok_or_else(|| {
            Error::Parameter(format!("scan {:?} has no ground-truth diagnosis", r.scan_id))
        })?;
        let d = rule.decide(r.cancer_pct());
        if d.is_decided() {
            decided += 1;
            if d == truth {
                correct += 1;
            }
        }
    }
    let total = records.len();
    Ok(Evaluation {
        accuracy: (decided > 0).then(|| 100.0 * correct as f64 / decided as f64),
        coverage: 100.0 * decided as f64 / total as f64,
        decided,
        correct,
        total,
    })
}

/// Accuracy and coverage over a grid of threshold pairs.
///
/// Rows follow `lower`, columns follow `upper`. A `None` in `coverage` marks a
/// cell with `T_L >= T_U`; a `None` in `accuracy` marks such a cell or one where
/// no scan was decided.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub accuracy: Vec<Vec<Option<f64>>>,
    pub coverage: Vec<Vec<Option<f64>>>,
}

impl SweepResult {
    pub fn get(&self, row: usize, col: usize) -> Option<(Option<f64>, f64)> {
        self.coverage[row][col].map(|cov| (self.accuracy[row][col], cov))
    }
}

fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Parameter(format!("{name} grid is empty")));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Parameter(format!("{name} grid must be strictly ascending")));
    }
    Ok(())
}

pub fn sweep(records: &[ScanRecord], lower: &[f64], upper: &[f64]) -> Result<SweepResult> {
    sweep_with(records, lower, upper, Exec::default())
}

pub fn sweep_with(
    records: &[ScanRecord],
    lower: &[f64],
    upper: &[f64],
    exec: Exec,
) -> Result<SweepResult> {
    check_grid("T_L", lower)?;
    check_grid("T_U", upper)?;
    if records.is_empty() {
        return Err(Error::Parameter("cannot sweep an empty record list".into()));
    }
    let rows = exec.try_map_range(lower.len(), |i| {
        upper
            .iter()
            .map(|&tu| {
                if lower[i] >= tu {
                    return Ok(None);
                }
                let rule = ThresholdRule::new(lower[i], tu)?;
                evaluate(records, &rule).map(Some)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let accuracy = rows
        .iter()
        .map(|r| r.iter().map(|e| e.and_then(|e| e.accuracy)).collect())
        .collect();
    let coverage = rows
        .iter()
        .map(|r| r.iter().map(|e| e.map(|e| e.coverage)).collect())
        .collect();
    Ok(SweepResult {
        lower: lower.to_vec(),
        upper: upper.to_vec(),
        accuracy,
        coverage,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rule() -> ThresholdRule {
        ThresholdRule::new(0.5, 7.0).unwrap()
    }

    fn rec(p: f64, t: Diagnosis) -> ScanRecord {
        ScanRecord::new("s", p, Some(t)).unwrap()
    }

    #[test]
    fn decide_examples() {
        assert_eq!(decide(13.35, &rule()), Diagnosis::C);
        assert_eq!(decide(0.0, &rule()), Diagnosis::NC);
        assert_eq!(decide(5.87, &rule()), Diagnosis::IHC);
        // boundaries are inclusive on both decided sides
        assert_eq!(decide(0.5, &rule()), Diagnosis::NC);
        assert_eq!(decide(7.0, &rule()), Diagnosis::C);
    }

    #[test]
    fn invalid_rules() {
        assert!(ThresholdRule::new(7.0, 0.5).is_err());
        assert!(ThresholdRule::new(1.0, 1.0).is_err());
        assert!(ThresholdRule::new(-1.0, 1.0).is_err());
        assert!(ThresholdRule::new(1.0, 101.0).is_err());
    }

    #[test]
    fn evaluate_examples() {
        let all = vec![rec(0.1, Diagnosis::NC), rec(50.0, Diagnosis::C)];
        let e = evaluate(&all, &rule()).unwrap();
        assert_eq!((e.accuracy, e.coverage), (Some(100.0), 100.0));

        let wide = ThresholdRule::new(0.0, 100.0).unwrap();
        let e = evaluate(&[rec(3.0, Diagnosis::C)], &wide).unwrap();
        assert_eq!((e.accuracy, e.coverage), (None, 0.0));

        let four = vec![
            rec(0.1, Diagnosis::NC),
            rec(10.0, Diagnosis::C),
            rec(3.0, Diagnosis::C),
            rec(3.0, Diagnosis::NC),
        ];
        let e = evaluate(&four, &rule()).unwrap();
        assert_eq!((e.accuracy, e.coverage), (Some(100.0), 50.0));
    }

    #[test]
    fn evaluate_errors() {
        assert!(evaluate(&[], &rule()).is_err());
        let unknown = ScanRecord::new("x", 1.0, None).unwrap();
        assert!(evaluate(&[unknown], &rule()).is_err());
    }

    #[test]
    fn single_cell_sweep_matches_evaluate() {
        let recs = vec![rec(0.2, Diagnosis::NC), rec(4.0, Diagnosis::C), rec(9.0, Diagnosis::NC)];
        let s = sweep(&recs, &[0.5], &[7.0]).unwrap();
        let e = evaluate(&recs, &rule()).unwrap();
        assert_eq!(s.get(0, 0), Some((e.accuracy, e.coverage)));
    }

    #[test]
    fn sweep_marks_inadmissible_cells() {
        let recs = vec![rec(0.2, Diagnosis::NC)];
        let s = sweep(&recs, &[1.0, 5.0], &[2.0, 5.0]).unwrap();
        assert!(s.coverage[0][0].is_some());
        assert!(s.coverage[1][0].is_none());
        assert!(s.coverage[1][1].is_none());
        assert!(sweep(&recs, &[2.0, 1.0], &[5.0]).is_err());
    }

    #[test]
    fn sweep_paths_agree() {
        let recs: Vec<_> = (0..50)
            .map(|i| rec(i as f64 * 0.37, if i % 3 == 0 { Diagnosis::C } else { Diagnosis::NC }))
            .collect();
        let grid: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let a = sweep_with(&recs, &grid, &grid, Exec::Sequential).unwrap();
        let b = sweep_with(&recs, &grid, &grid, Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn decide_monotone(a in 0.0f64..100.0, b in 0.0f64..100.0, tl in 0.0f64..50.0, width in 0.01f64..50.0) {
            let r = ThresholdRule::new(tl, tl + width).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(r.decide(lo) <= r.decide(hi));
        }

        #[test]
        fn widening_band_never_adds_decisions(p in 0.0f64..100.0, tl in 1.0f64..40.0, w in 0.1f64..40.0, dl in 0.0f64..1.0, du in 0.0f64..10.0) {
            let narrow = ThresholdRule::new(tl, tl + w).unwrap();
            let wide = ThresholdRule::new(tl - dl, tl + w + du).unwrap();
            if wide.decide(p).is_decided() {
                prop_assert!(narrow.decide(p).is_decided());
            }
        }

        #[test]
        fn accuracy_permutation_invariant(ps in prop::collection::vec((0.0f64..20.0, any::<bool>()), 1..40), seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let recs: Vec<_> = ps.iter().map(|(p, c)| rec(*p, if *c { Diagnosis::C } else { Diagnosis::NC })).collect();
            let mut shuffled = recs.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(evaluate(&recs, &rule()).unwrap(), evaluate(&shuffled, &rule()).unwrap());
        }
    }
}
