//! Classification metrics: accuracy, balanced accuracy, rank-based AUROC
//! (one-vs-rest, support weighted) and average precision.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a == 0 {
        return Err(Error::invalid("y_true", "empty input"));
    }
    if a != b {
        return Err(Error::DimensionMismatch { expected: a, actual: b });
    }
    Ok(())
}

pub fn accuracy(y_true: &[usize], y_pred: &[usize]) -> Result<f64> {
    check_lengths(y_true.len(), y_pred.len())?;
    let hits = y_true.iter().zip(y_pred).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / y_true.len() as f64)
}

/// Mean per-class recall over the classes present in `y_true`.
pub fn balanced_accuracy(y_true: &[usize], y_pred: &[usize]) -> Result<f64> {
    check_lengths(y_true.len(), y_pred.len())?;
    let classes = y_true.iter().max().map_or(0, |m| m + 1);
    let mut support = vec![0usize; classes];
    let mut hits = vec![0usize; classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        support[t] += 1;
        if t == p {
            hits[t] += 1;
        }
    }
    let recalls: Vec<f64> = support
        .iter()
        .zip(&hits)
        .filter(|(s, _)| **s > 0)
        .map(|(&s, &h)| h as f64 / s as f64)
        .collect();
    Ok(recalls.iter().sum::<f64>() / recalls.len() as f64)
}

/// Average ranks (1-based) with ties sharing their mid-rank.
fn midranks(scores: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let r = 0.5 * ((i + 1) as f64 + (j + 1) as f64);
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Binary AUROC from the Mann-Whitney statistic with mid-rank ties.
/// Returns 0.5 when either class is absent.
pub fn binary_auroc(y_true: &[bool], scores: &[f64]) -> Result<f64> {
    check_lengths(y_true.len(), scores.len())?;
    let pos = y_true.iter().filter(|&&y| y).count();
    let neg = y_true.len() - pos;
    if pos == 0 || neg == 0 {
        return Ok(0.5);
    }
    let ranks = midranks(scores);
    let rank_sum: f64 = ranks.iter().zip(y_true).filter(|(_, &y)| y).map(|(r, _)| r).sum();
    let u = rank_sum - (pos * (pos + 1)) as f64 / 2.0;
    Ok(u / (pos * neg) as f64)
}

fn one_vs_rest(y_true: &[usize], scores: &[Vec<f64>]) -> Result<Vec<(usize, f64)>> {
    check_lengths(y_true.len(), scores.len())?;
    let classes = scores[0].len();
    if scores.iter().any(|r| r.len() != classes) {
        return Err(Error::invalid("scores", "ragged score matrix"));
    }
    if scores.iter().flatten().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("score"));
    }
    if let Some(&bad) = y_true.iter().find(|&&y| y >= classes) {
        return Err(Error::invalid("y_true", format!("label {bad} has no score column")));
    }
    (0..classes)
        .map(|c| {
            let y: Vec<bool> = y_true.iter().map(|&t| t == c).collect();
            let s: Vec<f64> = scores.iter().map(|r| r[c]).collect();
            let support = y.iter().filter(|&&b| b).count();
            Ok((support, binary_auroc(&y, &s)?))
        })
        .collect()
}

/// One-vs-rest AUROC averaged with weights equal to class support.
pub fn weighted_auroc(y_true: &[usize], scores: &[Vec<f64>]) -> Result<f64> {
    let per_class = one_vs_rest(y_true, scores)?;
    let n = y_true.len() as f64;
    Ok(per_class.iter().map(|(s, a)| *s as f64 / n * a).sum())
}

/// Unweighted mean of one-vs-rest AUROCs over all score columns.
pub fn macro_auroc(y_true: &[usize], scores: &[Vec<f64>]) -> Result<f64> {
    let per_class = one_vs_rest(y_true, scores)?;
    Ok(per_class.iter().map(|(_, a)| a).sum::<f64>() / per_class.len() as f64)
}

/// `sum_k (R_k - R_{k-1}) P_k` over distinct score thresholds, highest
/// first. Tied scores enter together, so all-equal scores give the
/// prevalence.
pub fn average_precision(y_true: &[bool], scores: &[f64]) -> Result<f64> {
    check_lengths(y_true.len(), scores.len())?;
    let positives = y_true.iter().filter(|&&y| y).count();
    if positives == 0 {
        return Err(Error::invalid("y_true", "average precision needs a positive"));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("score"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if y_true[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let recall = tp as f64 / positives as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Ok(ap)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub balanced_accuracy: f64,
    pub weighted_auroc: f64,
    /// Binary AUROC of class 1 for two classes, macro one-vs-rest otherwise.
    pub auroc: f64,
    /// AP of class 1 for two classes, macro over classes with positives
    /// otherwise.
    pub average_precision: f64,
}

impl ClassificationMetrics {
    pub const NAMES: [&'static str; 5] = [
        "accuracy",
        "balanced_accuracy",
        "weighted_auroc",
        "auroc",
        "average_precision",
    ];

    pub fn values(&self) -> [f64; 5] {
        [
            self.accuracy,
            self.balanced_accuracy,
            self.weighted_auroc,
            self.auroc,
            self.average_precision,
        ]
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        Self::NAMES.iter().position(|n| *n == name).map(|i| self.values()[i])
    }

    pub fn from_values(v: [f64; 5]) -> Self {
        Self {
            accuracy: v[0],
            balanced_accuracy: v[1],
            weighted_auroc: v[2],
            auroc: v[3],
            average_precision: v[4],
        }
    }

    /// All five metrics from class probabilities; predictions are the argmax
    /// with ties going to the lower class.
    pub fn compute(y_true: &[usize], probs: &[Vec<f64>]) -> Result<Self> {
        check_lengths(y_true.len(), probs.len())?;
        let y_pred: Vec<usize> = probs.iter().map(|p| argmax(p)).collect();
        let classes = probs[0].len();
        let (auroc, average_precision) = if classes == 2 {
            let y: Vec<bool> = y_true.iter().map(|&t| t == 1).collect();
            let s: Vec<f64> = probs.iter().map(|p| p[1]).collect();
            let ap = if y.iter().any(|&b| b) { average_precision(&y, &s)? } else { 0.0 };
            (binary_auroc(&y, &s)?, ap)
        } else {
            let mut aps = Vec::new();
            for c in 0..classes {
                let y: Vec<bool> = y_true.iter().map(|&t| t == c).collect();
                if y.iter().any(|&b| b) {
                    let s: Vec<f64> = probs.iter().map(|p| p[c]).collect();
                    aps.push(average_precision(&y, &s)?);
                }
            }
            (macro_auroc(y_true, probs)?, aps.iter().sum::<f64>() / aps.len() as f64)
        };
        Ok(Self {
            accuracy: accuracy(y_true, &y_pred)?,
            balanced_accuracy: balanced_accuracy(y_true, &y_pred)?,
            weighted_auroc: weighted_auroc(y_true, probs)?,
            auroc,
            average_precision,
        })
    }
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Metric used to pick hyperparameters and early-stopping snapshots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionMetric {
    BalancedAccuracy,
    AveragePrecision,
}

impl SelectionMetric {
    /// Balanced accuracy for multi-class tasks, average precision for binary.
    pub fn for_classes(num_classes: usize) -> Self {
        if num_classes == 2 {
            SelectionMetric::AveragePrecision
        } else {
            SelectionMetric::BalancedAccuracy
        }
    }

    pub fn score(self, y_true: &[usize], probs: &[Vec<f64>]) -> Result<f64> {
        match self {
            SelectionMetric::BalancedAccuracy => {
                let y_pred: Vec<usize> = probs.iter().map(|p| argmax(p)).collect();
                balanced_accuracy(y_true, &y_pred)
            }
            SelectionMetric::AveragePrecision => {
                let y: Vec<bool> = y_true.iter().map(|&t| t == 1).collect();
                let s: Vec<f64> = probs.iter().map(|p| p[1]).collect();
                if y.iter().any(|&b| b) {
                    average_precision(&y, &s)
                } else {
                    Ok(0.0)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bac_examples() {
        assert_eq!(balanced_accuracy(&[0, 1, 2], &[0, 1, 2]).unwrap(), 1.0);
        assert_eq!(balanced_accuracy(&[0, 0, 1, 1], &[0, 0, 0, 0]).unwrap(), 0.5);
        let v = balanced_accuracy(&[0, 0, 1, 1, 1], &[0, 1, 1, 1, 0]).unwrap();
        assert!((v - 7.0 / 12.0).abs() < 1e-15);
        assert!(balanced_accuracy(&[], &[]).is_err());
        assert!(balanced_accuracy(&[0], &[0, 1]).is_err());
        // class 1 absent from y_true is excluded
        assert_eq!(balanced_accuracy(&[0, 2], &[0, 1]).unwrap(), 0.5);
    }

    #[test]
    fn auroc_examples() {
        let y = [0, 0, 1, 1];
        let perfect = vec![vec![0.9, 0.1], vec![0.8, 0.2], vec![0.3, 0.7], vec![0.1, 0.9]];
        assert_eq!(weighted_auroc(&y, &perfect).unwrap(), 1.0);
        let constant = vec![vec![0.5, 0.5]; 4];
        assert_eq!(weighted_auroc(&y, &constant).unwrap(), 0.5);
        assert_eq!(binary_auroc(&[true, true], &[0.1, 0.2]).unwrap(), 0.5);
    }

    #[test]
    fn ap_examples() {
        assert_eq!(average_precision(&[true, false, true, false], &[0.9, 0.1, 0.8, 0.2]).unwrap(), 1.0);
        let v = average_precision(&[false, false, false, true], &[0.9, 0.8, 0.7, 0.1]).unwrap();
        assert!((v - 0.25).abs() < 1e-15);
        let v = average_precision(&[true, false, false, true, false], &[0.5; 5]).unwrap();
        assert!((v - 0.4).abs() < 1e-15);
        assert!(average_precision(&[false, false], &[0.1, 0.2]).is_err());
    }

    #[test]
    fn compute_all_on_perfect_multiclass() {
        let y = [0, 1, 2, 2];
        let p = vec![
            vec![0.8, 0.1, 0.1],
            vec![0.1, 0.8, 0.1],
            vec![0.1, 0.1, 0.8],
            vec![0.2, 0.1, 0.7],
        ];
        let m = ClassificationMetrics::compute(&y, &p).unwrap();
        assert_eq!(m.values(), [1.0; 5]);
        assert_eq!(m.get("auroc"), Some(1.0));
        assert_eq!(m.get("nope"), None);
    }

    #[test]
    fn selection_metric_by_class_count() {
        assert_eq!(SelectionMetric::for_classes(2), SelectionMetric::AveragePrecision);
        assert_eq!(SelectionMetric::for_classes(5), SelectionMetric::BalancedAccuracy);
    }
}
