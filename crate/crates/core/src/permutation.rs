//! Matching estimated populations to reference populations.
//!
//! Population labels from a fit are arbitrary. Comparisons against a known
//! truth go through the column permutation minimizing total absolute error,
//! found with the Hungarian algorithm.

use crate::matrix::Matrix;

/// Minimum-cost assignment for a square cost matrix. Returns `assign` with
/// row `r` matched to column `assign[r]`.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    assert!(cost.iter().all(|r| r.len() == n), "cost matrix must be square");
    // potentials over 1-based rows/columns, column 0 is a sentinel
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut col0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col0] = true;
            let r0 = owner[col0];
            let mut delta = f64::INFINITY;
            let mut col1 = 0;
            for col in 1..=n {
                if used[col] {
                    continue;
                }
                let cur = cost[r0 - 1][col - 1] - u[r0] - v[col];
                if cur < minv[col] {
                    minv[col] = cur;
                    way[col] = col0;
                }
                if minv[col] < delta {
                    delta = minv[col];
                    col1 = col;
                }
            }
            for col in 0..=n {
                if used[col] {
                    u[owner[col]] += delta;
                    v[col] -= delta;
                } else {
                    minv[col] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let col1 = way[col0];
            owner[col0] = owner[col1];
            col0 = col1;
            if col0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for col in 1..=n {
        if owner[col] > 0 {
            assign[owner[col] - 1] = col - 1;
        }
    }
    assign
}

/// Permutation `perm` such that `estimate.permute_cols(perm)` best matches
/// `truth` column by column (sum of absolute differences).
pub fn align_columns(estimate: &Matrix, truth: &Matrix) -> Vec<usize> {
    assert_eq!(estimate.rows(), truth.rows());
    assert_eq!(estimate.cols(), truth.cols());
    let k = truth.cols();
    let cost: Vec<Vec<f64>> = (0..k)
        .map(|t| {
            (0..k)
                .map(|e| {
                    (0..truth.rows())
                        .map(|r| (truth.get(r, t) - estimate.get(r, e)).abs())
                        .sum()
                })
                .collect()
        })
        .collect();
    hungarian(&cost)
}

pub fn mean_abs_error(a: &Matrix, b: &Matrix) -> f64 {
    assert_eq!(a.as_slice().len(), b.as_slice().len());
    let total: f64 = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).abs())
        .sum();
    total / a.as_slice().len() as f64
}
