//! External validation indices comparing a predicted partition to ground
//! truth: adjusted Rand index, normalized mutual information and V-measure.
//!
//! Entropies use natural logarithms.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Co-occurrence counts between predicted (rows) and true (columns) labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    counts: Vec<Vec<u64>>,
    row_sums: Vec<u64>,
    col_sums: Vec<u64>,
    total: u64,
}

fn dense_labels(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut ids = BTreeMap::new();
    let mapped = labels
        .iter()
        .map(|l| {
            let next = ids.len();
            *ids.entry(*l).or_insert(next)
        })
        .collect();
    (mapped, ids.len())
}

impl ContingencyTable {
    pub fn new(pred: &[usize], truth: &[usize]) -> Result<Self> {
        if pred.len() != truth.len() {
            return Err(Error::LabelLengthMismatch {
                predicted: pred.len(),
                truth: truth.len(),
            });
        }
        if pred.is_empty() {
            return Err(Error::EmptyInput);
        }
        let (p, rows) = dense_labels(pred);
        let (t, cols) = dense_labels(truth);
        let mut counts = vec![vec![0u64; cols]; rows];
        for (&i, &j) in p.iter().zip(&t) {
            counts[i][j] += 1;
        }
        let row_sums = counts.iter().map(|r| r.iter().sum()).collect();
        let col_sums = (0..cols).map(|j| counts.iter().map(|r| r[j]).sum()).collect();
        Ok(Self {
            counts,
            row_sums,
            col_sums,
            total: pred.len() as u64,
        })
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn row_sums(&self) -> &[u64] {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &[u64] {
        &self.col_sums
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Whether the two labelings are the same partition up to renaming.
    pub fn is_matching(&self) -> bool {
        self.counts.len() == self.col_sums.len()
            && self.counts.iter().all(|row| row.iter().filter(|&&c| c > 0).count() == 1)
    }

    fn entropy(marginal: &[u64], n: f64) -> f64 {
        marginal
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.ln()
            })
            .sum()
    }

    /// `(H(pred), H(truth), I(pred; truth))`.
    fn information(&self) -> (f64, f64, f64) {
        let n = self.total as f64;
        let h_pred = Self::entropy(&self.row_sums, n);
        let h_truth = Self::entropy(&self.col_sums, n);
        let mut mi = 0.0;
        for (i, row) in self.counts.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                if c > 0 {
                    let c = c as f64;
                    let expected = self.row_sums[i] as f64 * self.col_sums[j] as f64;
                    mi += c / n * (c * n / expected).ln();
                }
            }
        }
        (h_pred, h_truth, mi.max(0.0))
    }
}

fn comb2(x: u64) -> f64 {
    let x = x as f64;
    x * (x - 1.0) / 2.0
}

pub fn adjusted_rand(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() == truth.len() && pred.len() < 2 {
        return Err(Error::TooFewLabels {
            required: 2,
            found: pred.len(),
        });
    }
    let table = ContingencyTable::new(pred, truth)?;
    let index: f64 = table.counts.iter().flatten().map(|&c| comb2(c)).sum();
    let sum_pred: f64 = table.row_sums.iter().map(|&c| comb2(c)).sum();
    let sum_truth: f64 = table.col_sums.iter().map(|&c| comb2(c)).sum();
    let pairs = comb2(table.total);
    let expected = sum_pred * sum_truth / pairs;
    let max_index = 0.5 * (sum_pred + sum_truth);
    if max_index == expected {
        // Both partitions are all-singletons or both are one block.
        return Ok(1.0);
    }
    Ok((index - expected) / (max_index - expected))
}

/// Mutual information normalized by the geometric mean of the entropies.
pub fn nmi(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    if table.is_matching() {
        return Ok(1.0);
    }
    let (h_pred, h_truth, mi) = table.information();
    if h_pred == 0.0 || h_truth == 0.0 {
        return Ok(if h_pred == 0.0 && h_truth == 0.0 { 1.0 } else { 0.0 });
    }
    Ok((mi / (h_pred * h_truth).sqrt()).clamp(0.0, 1.0))
}

/// Homogeneity, completeness and their harmonic mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VMeasure {
    pub homogeneity: f64,
    pub completeness: f64,
    pub v_measure: f64,
}

pub fn v_measure_parts(pred: &[usize], truth: &[usize]) -> Result<VMeasure> {
    let table = ContingencyTable::new(pred, truth)?;
    if table.is_matching() {
        return Ok(VMeasure {
            homogeneity: 1.0,
            completeness: 1.0,
            v_measure: 1.0,
        });
    }
    let (h_pred, h_truth, mi) = table.information();
    // H(truth | pred) = H(truth) - I and H(pred | truth) = H(pred) - I.
    let homogeneity = if h_truth == 0.0 { 1.0 } else { (mi / h_truth).clamp(0.0, 1.0) };
    let completeness = if h_pred == 0.0 { 1.0 } else { (mi / h_pred).clamp(0.0, 1.0) };
    let v_measure = if homogeneity + completeness == 0.0 {
        0.0
    } else {
        2.0 * homogeneity * completeness / (homogeneity + completeness)
    };
    Ok(VMeasure {
        homogeneity,
        completeness,
        v_measure,
    })
}

pub fn v_measure(pred: &[usize], truth: &[usize]) -> Result<f64> {
    v_measure_parts(pred, truth).map(|v| v.v_measure)
}

/// All three indices at once.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Scores {
    pub ari: f64,
    pub nmi: f64,
    pub v_measure: f64,
}

pub fn score(pred: &[usize], truth: &[usize]) -> Result<Scores> {
    Ok(Scores {
        ari: adjusted_rand(pred, truth)?,
        nmi: nmi(pred, truth)?,
        v_measure: v_measure(pred, truth)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identical_partitions_score_one() {
        let labels = [0, 0, 1, 1, 2, 2, 2];
        assert_eq!(adjusted_rand(&labels, &labels).unwrap(), 1.0);
        assert_eq!(nmi(&labels, &labels).unwrap(), 1.0);
        assert_eq!(v_measure(&labels, &labels).unwrap(), 1.0);
    }

    #[test]
    fn single_cluster_against_balanced_truth() {
        let pred = [0; 9];
        let truth = [0, 0, 0, 1, 1, 1, 2, 2, 2];
        assert_eq!(adjusted_rand(&pred, &truth).unwrap(), 0.0);
        assert_eq!(nmi(&pred, &truth).unwrap(), 0.0);
        assert_eq!(v_measure(&pred, &truth).unwrap(), 0.0);
    }

    #[test]
    fn crossed_partitions_have_negative_ari() {
        assert_relative_eq!(adjusted_rand(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap(), -0.5, epsilon = 1e-15);
    }

    #[test]
    fn renamed_labels_do_not_matter() {
        assert_eq!(nmi(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap(), 1.0);
        assert_eq!(adjusted_rand(&[0, 0, 1, 1], &[5, 5, 3, 3]).unwrap(), 1.0);
        assert_eq!(v_measure(&[2, 2, 9, 9], &[0, 0, 1, 1]).unwrap(), 1.0);
    }

    #[test]
    fn split_clusters_are_homogeneous_but_incomplete() {
        // Each true cluster of 4 split into two pure halves.
        let truth = [0, 0, 0, 0, 1, 1, 1, 1];
        let pred = [0, 0, 1, 1, 2, 2, 3, 3];
        let parts = v_measure_parts(&pred, &truth).unwrap();
        assert_eq!(parts.homogeneity, 1.0);
        // H(truth) = ln 2, H(pred) = ln 4, I = ln 2 -> c = 1/2, v = 2/3.
        assert_relative_eq!(parts.completeness, 0.5, epsilon = 1e-12);
        assert_relative_eq!(parts.v_measure, 2.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(
            v_measure(&pred, &truth).unwrap(),
            v_measure(&truth, &pred).unwrap(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn errors() {
        assert!(matches!(adjusted_rand(&[0, 1], &[0]), Err(Error::LabelLengthMismatch { .. })));
        assert!(matches!(adjusted_rand(&[0], &[0]), Err(Error::TooFewLabels { .. })));
        assert_eq!(nmi(&[], &[]), Err(Error::EmptyInput));
        assert!(v_measure(&[0, 1, 2], &[0, 1]).is_err());
    }

    #[test]
    fn contingency_marginals() {
        let t = ContingencyTable::new(&[0, 0, 1, 2], &[1, 1, 1, 0]).unwrap();
        assert_eq!(t.total(), 4);
        assert_eq!(t.row_sums(), &[2, 1, 1]);
        assert_eq!(t.col_sums(), &[3, 1]);
        assert_eq!(t.row_sums().iter().sum::<u64>(), 4);
    }
}
