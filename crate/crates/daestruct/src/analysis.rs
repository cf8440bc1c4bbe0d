//! Downstream structural results: structural index, Jacobian sparsity
//! pattern, differentiation schedule, and the assembled analysis report.

use serde::Serialize;

use crate::assignment;
use crate::block_solver::{self, BlockSolveStats};
use crate::btf::{self, BlockStructure};
use crate::error::Result;
use crate::fixed_point;
use crate::sigma::{Offsets, SignatureMatrix};

/// Solver selection for [`analyze`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// One fixed-point solve over the whole matrix.
    Global,
    /// Fine block-triangular form, then block-wise solving.
    Block,
    /// Block-wise whenever the fine form has more than one block.
    Auto,
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "global" => Ok(Method::Global),
            "block" => Ok(Method::Block),
            "auto" => Ok(Method::Auto),
            other => Err(format!("unknown method `{other}` (expected global|block|auto)")),
        }
    }
}

/// One candidate nonzero of the system Jacobian: the entry is the partial of
/// equation `row` with respect to the derivative of variable `col` of the
/// given `order` (= d_col − c_row = σ at the cell).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct JacobianCell {
    pub row: usize,
    pub col: usize,
    pub order: i64,
}

/// How to rewrite the system: differentiate equation i
/// `equation_diff_counts[i]` times; `variable_highest_orders[j]` is the
/// highest derivative of x_j appearing afterwards.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Schedule {
    pub equation_diff_counts: Vec<i64>,
    pub variable_highest_orders: Vec<i64>,
}

/// Full structural-analysis result.
///
/// `numeric_jacobian_checked` is always false: the analysis is purely
/// structural, and patterns whose system Jacobian is identically singular at
/// every point are not detected (see the README's limitations section).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AnalysisReport {
    pub n: usize,
    pub method: String,
    pub offsets: Offsets,
    pub structural_index: i64,
    pub hvt: Vec<(usize, usize)>,
    pub hvt_value: i64,
    pub jacobian_pattern: Vec<JacobianCell>,
    pub schedule: Schedule,
    pub stats: Vec<BlockSolveStats>,
    pub block_structure: Option<BlockStructure>,
    pub numeric_jacobian_checked: bool,
}

/// Structural index: `max_i c_i`, plus one if some variable offset is zero.
pub fn structural_index(off: &Offsets) -> i64 {
    let max_c = off.c().iter().copied().max().unwrap_or(0);
    let penalty = if off.d().contains(&0) { 1 } else { 0 };
    max_c + penalty
}

/// Candidate nonzeros of the system Jacobian: the finite cells where
/// `d_j − c_i = σ_ij`, in row-major order.
pub fn jacobian_pattern(sigma: &SignatureMatrix, off: &Offsets) -> Vec<(usize, usize)> {
    assert_eq!(off.len(), sigma.n(), "offsets must match the matrix size");
    sigma
        .entries()
        .filter(|&(i, j, s)| off.d()[j] - off.c()[i] == s)
        .map(|(i, j, _)| (i, j))
        .collect()
}

/// Runs the whole pipeline on a signature matrix and assembles the report.
pub fn analyze(sigma: &SignatureMatrix, method: Method) -> Result<AnalysisReport> {
    let n = sigma.n();

    let (offsets, stats, hvt, block_structure, method_used) = match method {
        Method::Global => {
            let outcome = fixed_point::solve_detailed(sigma, None)?;
            let stats = vec![BlockSolveStats {
                size: n,
                param: Vec::new(),
                stats: outcome.stats,
            }];
            (outcome.offsets, stats, outcome.hvt, None, "global")
        }
        Method::Block | Method::Auto => {
            let bs = btf::fine_btf(sigma)?;
            if method == Method::Auto && bs.num_blocks() == 1 {
                let outcome = fixed_point::solve_detailed(sigma, None)?;
                let stats = vec![BlockSolveStats {
                    size: n,
                    param: Vec::new(),
                    stats: outcome.stats,
                }];
                (outcome.offsets, stats, outcome.hvt, None, "global")
            } else {
                let outcome = block_solver::block_solve_detailed(sigma, &bs)?;
                (
                    outcome.offsets,
                    outcome.per_block,
                    outcome.hvt,
                    Some(bs),
                    "block",
                )
            }
        }
    };

    let hvt_value = assignment::transversal_value(sigma, &hvt);
    let pattern = jacobian_pattern(sigma, &offsets);
    debug_assert!(hvt
        .cells()
        .iter()
        .all(|cell| pattern.binary_search(cell).is_ok()));

    let jacobian_cells = pattern
        .iter()
        .map(|&(row, col)| JacobianCell {
            row,
            col,
            order: offsets.d()[col] - offsets.c()[row],
        })
        .collect();

    Ok(AnalysisReport {
        n,
        method: method_used.to_string(),
        structural_index: structural_index(&offsets),
        hvt: hvt.cells(),
        hvt_value,
        jacobian_pattern: jacobian_cells,
        schedule: Schedule {
            equation_diff_counts: offsets.c().to_vec(),
            variable_highest_orders: offsets.d().to_vec(),
        },
        offsets,
        stats,
        block_structure,
        numeric_jacobian_checked: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigma::test_fixtures::{e1, e6};

    #[test]
    fn structural_index_values() {
        let off = Offsets::new(vec![0, 0, 1], vec![2, 1, 0]).unwrap();
        assert_eq!(structural_index(&off), 2);
        let off6 = Offsets::new(vec![0, 0, 1, 1, 2, 3], vec![2, 1, 0, 3, 3, 2]).unwrap();
        assert_eq!(structural_index(&off6), 4);
        let ode = Offsets::new(vec![0, 0, 0], vec![1, 1, 1]).unwrap();
        assert_eq!(structural_index(&ode), 0);
    }

    #[test]
    fn jacobian_pattern_of_e1_drops_one_cell() {
        let sigma = e1();
        let off = Offsets::new(vec![0, 0, 1], vec![2, 1, 0]).unwrap();
        assert_eq!(
            jacobian_pattern(&sigma, &off),
            vec![(0, 0), (0, 2), (1, 1), (1, 2), (2, 1)]
        );
    }

    #[test]
    fn jacobian_pattern_diagonal_and_shift_invariance() {
        let sigma = SignatureMatrix::from_entries(3, (0..3).map(|i| (i, i, 0))).unwrap();
        let off = Offsets::new(vec![0; 3], vec![0; 3]).unwrap();
        assert_eq!(jacobian_pattern(&sigma, &off), vec![(0, 0), (1, 1), (2, 2)]);

        let sigma1 = e1();
        let base = Offsets::new(vec![0, 0, 1], vec![2, 1, 0]).unwrap();
        let shifted = Offsets::new(vec![1, 1, 2], vec![3, 2, 1]).unwrap();
        assert_eq!(
            jacobian_pattern(&sigma1, &base),
            jacobian_pattern(&sigma1, &shifted)
        );
    }

    #[test]
    fn analyze_e1_global() {
        let report = analyze(&e1(), Method::Global).unwrap();
        assert_eq!(report.offsets.c(), &[0, 0, 1]);
        assert_eq!(report.offsets.d(), &[2, 1, 0]);
        assert_eq!(report.structural_index, 2);
        assert_eq!(report.hvt_value, 2);
        assert_eq!(report.method, "global");
        assert!(report.block_structure.is_none());
        assert_eq!(report.schedule.equation_diff_counts, vec![0, 0, 1]);
        assert!(!report.numeric_jacobian_checked);
    }

    #[test]
    fn analyze_e6_auto_uses_blocks() {
        let report = analyze(&e6(), Method::Auto).unwrap();
        assert_eq!(report.method, "block");
        assert_eq!(report.offsets.c(), &[0, 0, 1, 1, 2, 3]);
        assert_eq!(report.structural_index, 4);
        let bs = report.block_structure.as_ref().unwrap();
        assert_eq!(bs.block_sizes(), &[3, 3]);
        assert_eq!(report.stats.len(), 2);
    }

    #[test]
    fn analyze_methods_agree_on_e6() {
        let sigma = e6();
        let global = analyze(&sigma, Method::Global).unwrap();
        let block = analyze(&sigma, Method::Block).unwrap();
        assert_eq!(global.offsets, block.offsets);
        assert_eq!(global.structural_index, block.structural_index);
        assert_eq!(global.jacobian_pattern, block.jacobian_pattern);
        assert_eq!(global.hvt_value, block.hvt_value);
    }

    #[test]
    fn analyze_auto_on_irreducible_matrix_is_global() {
        let report = analyze(&e1(), Method::Auto).unwrap();
        assert_eq!(report.method, "global");
    }

    #[test]
    fn report_serializes_with_stable_fields() {
        let report = analyze(&e1(), Method::Global).unwrap();
        let json = serde_json::to_value(&report).unwrap();
        for key in [
            "n",
            "method",
            "offsets",
            "structural_index",
            "hvt",
            "hvt_value",
            "jacobian_pattern",
            "schedule",
            "stats",
            "block_structure",
            "numeric_jacobian_checked",
        ] {
            assert!(json.get(key).is_some(), "missing report field {key}");
        }
        assert_eq!(json["offsets"]["c"], serde_json::json!([0, 0, 1]));
    }
}
