//! Confusion matrices, accuracy, average accuracy and rank agreement between raters.

use crate::diagnosis::Diagnosis;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::stats::midranks;

/// Square count matrix with ground truth on rows and predictions on columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
    names: Vec<String>,
}

impl ConfusionMatrix {
    pub fn new(counts: Vec<Vec<u64>>, names: Vec<String>) -> Result<Self> {
        let m = counts.len();
        if m == 0 || counts.iter().any(|r| r.len() != m) {
            return Err(Error::Shape("confusion matrix must be square and non-empty".into()));
        }
        if !names.is_empty() && names.len() != m {
            return Err(Error::Shape(format!("{} class names for {m} classes", names.len())));
        }
        Ok(ConfusionMatrix { counts, names })
    }

    /// Unnamed matrix; classes are referred to by their 1-based index.
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        ConfusionMatrix::new(counts, Vec::new())
    }

    pub fn size(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Number of items whose true class is `i` (0-based).
    pub fn support(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }
}

/// Counts `(truth, prediction)` pairs. Labels are 1-based in `1..=m`.
pub fn confusion(preds: &[usize], truths: &[usize], m: usize) -> Result<ConfusionMatrix> {
    if preds.len() != truths.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} ground-truth labels",
            preds.len(),
            truths.len()
        )));
    }
    if preds.is_empty() {
        return Err(Error::Parameter("confusion matrix of an empty label list".into()));
    }
    if m == 0 {
        return Err(Error::Parameter("number of classes must be positive".into()));
    }
    let mut counts = vec![vec![0u64; m]; m];
    for (&p, &t) in preds.iter().zip(truths) {
        if !(1..=m).contains(&p) || !(1..=m).contains(&t) {
            return Err(Error::Parameter(format!("label out of range 1..={m}: truth {t}, prediction {p}")));
        }
        counts[t - 1][p - 1] += 1;
    }
    ConfusionMatrix::from_counts(counts)
}

fn nonempty(cm: &ConfusionMatrix) -> Result<u64> {
    match cm.total() {
        0 => Err(Error::Parameter("confusion matrix has no entries".into())),
        n => Ok(n),
    }
}

/// Percentage of items on the diagonal.
pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    let total = nonempty(cm)?;
    let trace: u64 = (0..cm.size()).map(|i| cm.counts[i][i]).sum();
    Ok(100.0 * trace as f64 / total as f64)
}

/// Mean per-class true-positive rate, in percent.
///
/// Classes without any true item have no defined rate and are left out of
/// the mean.
pub fn av_acc(cm: &ConfusionMatrix) -> Result<f64> {
    nonempty(cm)?;
    let rates: Vec<f64> = (0..cm.size())
        .filter(|&i| cm.support(i) > 0)
        .map(|i| cm.counts[i][i] as f64 / cm.support(i) as f64)
        .collect();
    Ok(100.0 * rates.iter().sum::<f64>() / rates.len() as f64)
}

/// Spearman's rank correlation with ties handled by midranks, i.e. the
/// Pearson correlation of the two midrank vectors.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!("vectors of length {} and {}", x.len(), y.len())));
    }
    if x.len() < 3 {
        return Err(Error::Parameter(format!("rank correlation needs at least 3 pairs, got {}", x.len())));
    }
    let (rx, ry) = (midranks(x), midranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Undefined("rank correlation of a constant vector".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Diagnoses given by several raters (columns) to the same scans (rows).
#[derive(Debug, Clone, PartialEq)]
pub struct RaterTable {
    pub wsi_ids: Vec<String>,
    pub raters: Vec<String>,
    /// Row-major: `responses[row][rater]`.
    pub responses: Vec<Vec<Diagnosis>>,
    /// Optional per-scan cancer-tissue percentage column.
    pub cancer_pct: Option<Vec<f64>>,
}

impl RaterTable {
    pub fn new(
        wsi_ids: Vec<String>,
        raters: Vec<String>,
        responses: Vec<Vec<Diagnosis>>,
        cancer_pct: Option<Vec<f64>>,
    ) -> Result<Self> {
        if responses.len() != wsi_ids.len() {
            return Err(Error::Shape(format!("{} ids for {} rows", wsi_ids.len(), responses.len())));
        }
        if let Some(r) = responses.iter().position(|r| r.len() != raters.len()) {
            return Err(Error::Shape(format!(
                "row {} has {} responses for {} raters",
                r + 1,
                responses[r].len(),
                raters.len()
            )));
        }
        if cancer_pct.as_ref().is_some_and(|p| p.len() != wsi_ids.len()) {
            return Err(Error::Shape("cancer_pct column length differs from the row count".into()));
        }
        Ok(RaterTable { wsi_ids, raters, responses, cancer_pct })
    }

    pub fn rows(&self) -> usize {
        self.responses.len()
    }

    /// Ordinal codes (NC = 0, IHC = 1, C = 2) of one rater's column.
    pub fn column(&self, rater: usize) -> Vec<f64> {
        self.responses.iter().map(|r| r[rater].ordinal()).collect()
    }

    pub fn rater_index(&self, name: &str) -> Option<usize> {
        self.raters.iter().position(|r| r == name)
    }
}

/// Symmetric matrix of pairwise rank correlations between raters.
#[derive(Debug, Clone, PartialEq)]
pub struct AgreementMatrix {
    pub names: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl AgreementMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == a)?;
        let j = self.names.iter().position(|n| n == b)?;
        Some(self.values[i][j])
    }
}

pub fn agreement_matrix(table: &RaterTable) -> Result<AgreementMatrix> {
    agreement_matrix_with(table, Exec::default())
}

pub fn agreement_matrix_with(table: &RaterTable, exec: Exec) -> Result<AgreementMatrix> {
    let k = table.raters.len();
    let columns: Vec<Vec<f64>> = (0..k).map(|j| table.column(j)).collect();
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
    let coeffs = exec.try_map_range(pairs.len(), |p| {
        let (i, j) = pairs[p];
        spearman(&columns[i], &columns[j]).map_err(|e| match e {
            Error::Undefined(m) => Error::Undefined(format!("{} vs {}: {m}", table.raters[i], table.raters[j])),
            e => e,
        })
    })?;
    let mut values = vec![vec![1.0; k]; k];
    for (&(i, j), c) in pairs.iter().zip(coeffs) {
        values[i][j] = c;
        values[j][i] = c;
    }
    Ok(AgreementMatrix { names: table.raters.clone(), values })
}
