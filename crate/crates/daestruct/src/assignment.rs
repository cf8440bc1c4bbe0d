//! Highest-value transversal via maximum-weight perfect matching.
//!
//! The assignment problem is solved with the potentials-based Hungarian
//! (Kuhn–Munkres) algorithm in O(n³). Absent cells of the signature matrix
//! are non-edges, never large negative weights, so an infeasible pattern is
//! detected by a failed augmentation rather than by a value threshold.

use crate::error::{Error, Result};
use crate::sigma::{SignatureMatrix, Transversal};

/// Deterministic operation counter for the matching solver: one unit per
/// examined cell during edge relaxation and per scanned column during the
/// minimum-slack search.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct MatchingStats {
    pub ops: u64,
}

/// Finds a transversal maximizing the sum of its sigma entries.
///
/// Deterministic: rows are inserted in increasing order and slack ties are
/// broken toward the lowest column index. Errors with
/// [`Error::StructurallySingular`] when no perfect matching exists.
pub fn find_hvt(sigma: &SignatureMatrix) -> Result<Transversal> {
    find_hvt_with_stats(sigma).map(|(t, _)| t)
}

/// As [`find_hvt`], also returning the operation counter.
pub fn find_hvt_with_stats(sigma: &SignatureMatrix) -> Result<(Transversal, MatchingStats)> {
    let n = sigma.n();
    let rows = sigma.rows_adjacency();

    // Minimization on cost = -sigma; row/column potentials u, v.
    let mut u = vec![0i64; n];
    let mut v = vec![0i64; n];
    // Matched row per column; index n is a virtual column holding the row
    // currently being inserted.
    let mut col_row: Vec<Option<usize>> = vec![None; n + 1];
    let mut ops = 0u64;

    for start in 0..n {
        col_row[n] = Some(start);
        let mut j0 = n;
        let mut min_slack: Vec<Option<i64>> = vec![None; n];
        let mut prev_col = vec![n; n];
        let mut used = vec![false; n + 1];

        loop {
            used[j0] = true;
            let i0 = col_row[j0].expect("used column is matched");

            for &(j, s) in &rows[i0] {
                if used[j] {
                    continue;
                }
                ops += 1;
                let slack = -s - u[i0] - v[j];
                if min_slack[j].is_none_or(|m| slack < m) {
                    min_slack[j] = Some(slack);
                    prev_col[j] = j0;
                }
            }

            let mut best: Option<(i64, usize)> = None;
            for (j, slack) in min_slack.iter().enumerate() {
                if used[j] {
                    continue;
                }
                ops += 1;
                if let Some(m) = *slack {
                    if best.is_none_or(|(bm, _)| m < bm) {
                        best = Some((m, j));
                    }
                }
            }
            // No reachable unmatched column: the rows visited so far form a
            // deficient set, so no transversal exists.
            let Some((delta, j1)) = best else {
                return Err(Error::StructurallySingular);
            };

            for j in 0..=n {
                if used[j] {
                    if let Some(r) = col_row[j] {
                        u[r] += delta;
                    }
                    if j < n {
                        v[j] -= delta;
                    }
                } else if let Some(m) = min_slack[j] {
                    min_slack[j] = Some(m - delta);
                }
            }

            j0 = j1;
            if col_row[j0].is_none() {
                break;
            }
        }

        // Augment along the recorded path back to the virtual column.
        loop {
            let j1 = prev_col[j0];
            col_row[j0] = col_row[j1];
            j0 = j1;
            if j0 == n {
                break;
            }
        }
    }

    let mut match_cols = vec![usize::MAX; n];
    for (j, r) in col_row.iter().take(n).enumerate() {
        match_cols[r.expect("perfect matching")] = j;
    }
    let t = Transversal::from_cols_unchecked(match_cols);
    debug_assert!(Transversal::new(sigma, t.as_cols().to_vec()).is_ok());
    Ok((t, MatchingStats { ops }))
}

/// Sum of the sigma entries on the transversal.
pub fn transversal_value(sigma: &SignatureMatrix, t: &Transversal) -> i64 {
    t.cells()
        .iter()
        .map(|&(i, j)| {
            sigma
                .get(i, j)
                .expect("transversal cell must be finite in its matrix")
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigma::test_fixtures::{e1, e6};

    #[test]
    fn hvt_of_e1() {
        let sigma = e1();
        let t = find_hvt(&sigma).unwrap();
        assert_eq!(t.as_cols(), &[0, 2, 1]);
        assert_eq!(transversal_value(&sigma, &t), 2);
    }

    #[test]
    fn hvt_of_e6_is_union_of_block_stars() {
        let sigma = e6();
        let t = find_hvt(&sigma).unwrap();
        assert_eq!(t.as_cols(), &[0, 2, 1, 3, 5, 4]);
        assert_eq!(transversal_value(&sigma, &t), 4);
    }

    #[test]
    fn empty_column_is_singular() {
        let sigma = SignatureMatrix::from_entries(2, [(0, 0, 0), (1, 0, 0)]).unwrap();
        assert_eq!(find_hvt(&sigma), Err(Error::StructurallySingular));
    }

    #[test]
    fn blocked_pattern_is_singular() {
        // Every column has an entry but rows {0, 1} only reach column 0.
        let sigma =
            SignatureMatrix::from_entries(3, [(0, 0, 1), (1, 0, 5), (2, 0, 0), (2, 1, 0), (2, 2, 0)])
                .unwrap();
        assert_eq!(find_hvt(&sigma), Err(Error::StructurallySingular));
    }

    #[test]
    fn value_of_suboptimal_transversal() {
        let sigma = e1();
        let t = Transversal::new(&sigma, vec![2, 1, 0]).unwrap();
        assert_eq!(transversal_value(&sigma, &t), 1);
    }

    #[test]
    fn all_zero_transversal_has_value_zero() {
        let sigma = SignatureMatrix::from_entries(2, [(0, 1, 0), (1, 0, 0)]).unwrap();
        let t = find_hvt(&sigma).unwrap();
        assert_eq!(transversal_value(&sigma, &t), 0);
        assert_eq!(t.as_cols(), &[1, 0]);
    }

    #[test]
    fn negative_weights_are_handled() {
        let sigma =
            SignatureMatrix::from_entries(2, [(0, 0, -1), (0, 1, -3), (1, 0, -3), (1, 1, -2)])
                .unwrap();
        let t = find_hvt(&sigma).unwrap();
        assert_eq!(transversal_value(&sigma, &t), -3);
        assert_eq!(t.as_cols(), &[0, 1]);
    }
}
