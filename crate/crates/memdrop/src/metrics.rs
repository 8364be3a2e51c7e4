//! Redundancy and retrieval metrics: Pearson correlation across stored key
//! rows, and micro-averaged entity F1 for retrieval evaluations.

use std::collections::HashSet;

use log::warn;

use crate::error::{Error, Result};

/// Pairwise Pearson correlation between rows, treating the coordinates of
/// each row as the samples. Needs at least two rows of at least two
/// coordinates. The diagonal is exactly 1; rows with zero variance correlate
/// 0 with everything (warned once per call); entries are clamped to [-1, 1].
pub fn pearson_matrix(rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "correlation needs at least two rows".into(),
        ));
    }
    let d = rows[0].len();
    if d < 2 {
        return Err(Error::InvalidArgument(
            "correlation needs at least two coordinates per row".into(),
        ));
    }
    for row in rows {
        if row.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: row.len(),
            });
        }
        if row.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite row entry".into()));
        }
    }
    let centered: Vec<Vec<f64>> = rows
        .iter()
        .map(|row| {
            let mean = row.iter().sum::<f64>() / d as f64;
            row.iter().map(|x| x - mean).collect()
        })
        .collect();
    let sq_norm: Vec<f64> = centered
        .iter()
        .map(|row| row.iter().map(|x| x * x).sum())
        .collect();
    let constant = sq_norm.iter().filter(|s| **s == 0.0).count();
    if constant > 0 {
        warn!("{constant} constant row(s) in correlation input, treated as correlation 0");
    }
    let mut matrix = vec![vec![0.0; n]; n];
    for i in 0..n {
        matrix[i][i] = 1.0;
        for j in (i + 1)..n {
            let cov: f64 = centered[i]
                .iter()
                .zip(&centered[j])
                .map(|(a, b)| a * b)
                .sum();
            let denom = (sq_norm[i] * sq_norm[j]).sqrt();
            let r = if denom > 0.0 {
                (cov / denom).clamp(-1.0, 1.0)
            } else {
                0.0
            };
            matrix[i][j] = r;
            matrix[j][i] = r;
        }
    }
    Ok(matrix)
}

/// Mean absolute off-diagonal correlation: one scalar for how redundant a
/// set of key rows is. Invariant under row permutation.
pub fn aggregated_correlation(rows: &[Vec<f64>]) -> Result<f64> {
    let m = pearson_matrix(rows)?;
    let n = m.len();
    let mut total = 0.0;
    for (i, row) in m.iter().enumerate() {
        for (j, r) in row.iter().enumerate() {
            if i != j {
                total += r.abs();
            }
        }
    }
    Ok(total / (n * (n - 1)) as f64)
}

/// Precision, recall, and F1 over entity sets plus the raw counts behind
/// them. Every 0/0 ratio is defined as 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct F1Report {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positive: usize,
    pub false_positive: usize,
    pub false_negative: usize,
}

impl F1Report {
    fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        F1Report {
            precision,
            recall,
            f1,
            true_positive: tp,
            false_positive: fp,
            false_negative: fn_,
        }
    }
}

/// Set-based entity F1 for a single case.
pub fn entity_f1(predicted: &HashSet<String>, gold: &HashSet<String>) -> F1Report {
    let tp = predicted.intersection(gold).count();
    F1Report::from_counts(tp, predicted.len() - tp, gold.len() - tp)
}

/// Micro-averaged entity F1: counts are pooled over all cases before the
/// ratios are taken, so larger cases weigh more.
pub fn corpus_entity_f1(cases: &[(HashSet<String>, HashSet<String>)]) -> F1Report {
    let mut tp = 0;
    let mut fp = 0;
    let mut fn_ = 0;
    for (predicted, gold) in cases {
        let hit = predicted.intersection(gold).count();
        tp += hit;
        fp += predicted.len() - hit;
        fn_ += gold.len() - hit;
    }
    F1Report::from_counts(tp, fp, fn_)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn set(items: &[&str]) -> HashSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn identical_rows_correlate_fully() {
        let rows = vec![vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]];
        let m = pearson_matrix(&rows).unwrap();
        assert_abs_diff_eq!(m[0][1], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(aggregated_correlation(&rows).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn reversed_rows_correlate_negatively() {
        let rows = vec![vec![1.0, 2.0, 3.0], vec![3.0, 2.0, 1.0]];
        let m = pearson_matrix(&rows).unwrap();
        assert_abs_diff_eq!(m[0][1], -1.0, epsilon = 1e-12);
        // Aggregation takes absolute values.
        assert_abs_diff_eq!(aggregated_correlation(&rows).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn hand_computed_pair() {
        // deviations (-1.5,-0.5,0.5,1.5) vs (-1.5,0.5,-0.5,1.5): r = 4/5
        let rows = vec![vec![1.0, 2.0, 3.0, 4.0], vec![1.0, 3.0, 2.0, 4.0]];
        let m = pearson_matrix(&rows).unwrap();
        assert_abs_diff_eq!(m[0][1], 0.8, epsilon = 1e-12);
    }

    #[test]
    fn constant_rows_correlate_zero() {
        let rows = vec![vec![2.0, 2.0, 2.0], vec![1.0, 2.0, 3.0]];
        let m = pearson_matrix(&rows).unwrap();
        assert_eq!(m[0][1], 0.0);
        assert_eq!(m[0][0], 1.0);
    }

    #[test]
    fn correlation_rejects_degenerate_shapes() {
        assert!(pearson_matrix(&[vec![1.0, 2.0]]).is_err());
        assert!(pearson_matrix(&[vec![1.0], vec![2.0]]).is_err());
        assert!(pearson_matrix(&[vec![1.0, 2.0], vec![1.0]]).is_err());
    }

    #[test]
    fn entity_f1_half_overlap() {
        let r = entity_f1(&set(&["a", "b"]), &set(&["b", "c"]));
        assert_abs_diff_eq!(r.precision, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.recall, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.f1, 0.5, epsilon = 1e-12);
        assert_eq!(
            (r.true_positive, r.false_positive, r.false_negative),
            (1, 1, 1)
        );
    }

    #[test]
    fn entity_f1_empty_sets_are_zero() {
        let r = entity_f1(&set(&[]), &set(&[]));
        assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn corpus_f1_pools_counts() {
        let cases = vec![
            (set(&["a"]), set(&["a"])),
            (set(&["b"]), set(&["c"])),
            (set(&["d", "e"]), set(&["d"])),
        ];
        let r = corpus_entity_f1(&cases);
        // pooled tp=2, fp=2, fn=1
        assert_eq!(
            (r.true_positive, r.false_positive, r.false_negative),
            (2, 2, 1)
        );
        assert_abs_diff_eq!(r.precision, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.recall, 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.f1, 4.0 / 7.0, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn correlation_entries_stay_bounded(
            rows in prop::collection::vec(
                prop::collection::vec(-100.0..100.0f64, 4),
                2..6,
            )
        ) {
            let m = pearson_matrix(&rows).unwrap();
            for (i, row) in m.iter().enumerate() {
                prop_assert_eq!(row.len(), rows.len());
                prop_assert_eq!(m[i][i], 1.0);
                for (j, r) in row.iter().enumerate() {
                    prop_assert!((-1.0..=1.0).contains(r));
                    prop_assert_eq!(m[j][i], *r);
                }
            }
        }

        #[test]
        fn aggregation_is_permutation_invariant(
            rows in prop::collection::vec(
                prop::collection::vec(-10.0..10.0f64, 5),
                2..6,
            ),
            swap_a in 0usize..6,
            swap_b in 0usize..6,
        ) {
            let a = aggregated_correlation(&rows).unwrap();
            let mut permuted = rows.clone();
            permuted.swap(swap_a % rows.len(), swap_b % rows.len());
            let b = aggregated_correlation(&permuted).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn f1_swap_exchanges_precision_and_recall(
            pred in prop::collection::hash_set("[a-e]", 0..5),
            gold in prop::collection::hash_set("[a-e]", 0..5),
        ) {
            let forward = entity_f1(&pred, &gold);
            let backward = entity_f1(&gold, &pred);
            prop_assert!((forward.precision - backward.recall).abs() < 1e-15);
            prop_assert!((forward.recall - backward.precision).abs() < 1e-15);
            prop_assert!((forward.f1 - backward.f1).abs() < 1e-15);
            prop_assert!((0.0..=1.0).contains(&forward.f1));
        }
    }
}
