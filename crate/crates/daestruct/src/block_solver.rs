//! Block-wise smallest-offset computation over a block upper-triangular form.
//!
//! Diagonal blocks are processed top to bottom. After block k is solved, its
//! equation offsets are added to the rows of every coupling slice in block
//! row k (`row_add`); the parameter for block i is then the columnwise
//! maximum over the stacked, updated couplings above it, clamped at zero
//! (`col_max`, `e_max`). Each diagonal block is solved by the parameterized
//! fixed-point iteration, and the assembled result equals the whole-matrix
//! smallest pair exactly.

use crate::btf::{self, BlockStructure};
use crate::error::{Error, Result};
use crate::fixed_point::{solve_detailed, SolveStats};
use crate::sigma::{Offsets, ParamVector, SignatureMatrix, SigmaSlice, Transversal};

/// Per-block record of one block solve: the block size, the parameter vector
/// it was solved under, and the iteration counters.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct BlockSolveStats {
    pub size: usize,
    pub param: Vec<i64>,
    pub stats: SolveStats,
}

/// Adds `q_i` to every finite entry of row i; absent entries stay absent.
pub fn row_add(block: &SigmaSlice, q: &[i64]) -> Result<SigmaSlice> {
    if q.len() != block.rows() {
        return Err(Error::DimensionMismatch {
            expected: block.rows(),
            actual: q.len(),
        });
    }
    let mut out = SigmaSlice::new(block.rows(), block.cols());
    for (i, j, s) in block.entries() {
        out.set(i, j, s + q[i])?;
    }
    Ok(out)
}

/// Columnwise maximum over finite entries; None marks a column with no
/// finite entry (−∞).
pub fn col_max(block: &SigmaSlice) -> Vec<Option<i64>> {
    let mut out: Vec<Option<i64>> = vec![None; block.cols()];
    for (_, j, s) in block.entries() {
        if out[j].is_none_or(|cur| s > cur) {
            out[j] = Some(s);
        }
    }
    out
}

/// Componentwise maximum where −∞ markers lose to any integer.
pub fn e_max(a: &[Option<i64>], b: &[i64]) -> Result<Vec<i64>> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(a.iter()
        .zip(b)
        .map(|(x, &y)| match x {
            Some(v) => (*v).max(y),
            None => y,
        })
        .collect())
}

pub(crate) struct BlockOutcome {
    pub offsets: Offsets,
    pub per_block: Vec<BlockSolveStats>,
    /// Union of the per-block transversals, lifted to original indices.
    pub hvt: Transversal,
}

/// Smallest dual-optimal pair computed block by block; the result is in
/// original (unpermuted) index order and equals the whole-matrix solve
/// exactly.
pub fn block_smallest_offsets(
    sigma: &SignatureMatrix,
    bs: &BlockStructure,
) -> Result<(Offsets, Vec<BlockSolveStats>)> {
    block_solve_detailed(sigma, bs).map(|o| (o.offsets, o.per_block))
}

pub(crate) fn block_solve_detailed(
    sigma: &SignatureMatrix,
    bs: &BlockStructure,
) -> Result<BlockOutcome> {
    let n = sigma.n();
    if !btf::validate_btf(sigma, bs, btf::BtfMode::Coarse) {
        return Err(Error::InvalidBlockStructure(
            "structure does not fit the matrix (shape or block matching fails)".into(),
        ));
    }
    let blocks = bs.num_blocks();

    // Working copies of the coupling slices; the input matrix is never
    // mutated. couplings[k][i] holds rows of block k, columns of block i.
    let mut couplings: Vec<Vec<SigmaSlice>> = Vec::with_capacity(blocks);
    for k in 0..blocks {
        let mut row = Vec::with_capacity(blocks.saturating_sub(k + 1));
        for i in (k + 1)..blocks {
            row.push(btf::extract_coupling(sigma, bs, k, i)?);
        }
        couplings.push(row);
    }

    let mut c_permuted: Vec<i64> = Vec::with_capacity(n);
    let mut d_permuted: Vec<i64> = Vec::with_capacity(n);
    let mut hvt_permuted: Vec<usize> = Vec::with_capacity(n);
    let mut per_block = Vec::with_capacity(blocks);

    for i in 0..blocks {
        let diag = btf::extract_block(sigma, bs, i)?;
        let size = diag.n();

        let p = if i == 0 {
            vec![0i64; size]
        } else {
            let stacked: Vec<&SigmaSlice> =
                (0..i).map(|k| &couplings[k][i - k - 1]).collect();
            let stack = SigmaSlice::vstack(&stacked)?;
            e_max(&col_max(&stack), &vec![0i64; size])?
        };
        let param = ParamVector::new(p.clone())?;

        let outcome = solve_detailed(&diag, Some(&param))?;
        let (c_i, d_i) = outcome.offsets.clone().into_parts();
        debug_assert!(d_i.iter().zip(&p).all(|(d, p)| d >= p));

        // Each coupling row-block is updated exactly once, as soon as its
        // block's c is known, so later stacks see cumulative updates.
        for slice in couplings[i].iter_mut() {
            *slice = row_add(slice, &c_i)?;
        }

        let base = c_permuted.len();
        for r in 0..size {
            hvt_permuted.push(base + outcome.hvt.col_of(r));
        }
        c_permuted.extend(c_i);
        d_permuted.extend(d_i);
        per_block.push(BlockSolveStats {
            size,
            param: p,
            stats: outcome.stats,
        });
    }

    // Map everything back through the permutations to original order.
    let mut c = vec![0i64; n];
    let mut d = vec![0i64; n];
    let mut hvt_cols = vec![0usize; n];
    for pos in 0..n {
        c[bs.row_perm()[pos]] = c_permuted[pos];
        d[bs.col_perm()[pos]] = d_permuted[pos];
        hvt_cols[bs.row_perm()[pos]] = bs.col_perm()[hvt_permuted[pos]];
    }
    let hvt = Transversal::new(sigma, hvt_cols)?;

    Ok(BlockOutcome {
        offsets: Offsets::new(c, d)?,
        per_block,
        hvt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixed_point::smallest_offsets;
    use crate::sigma::test_fixtures::{e1, e6};

    #[test]
    fn row_add_on_e6_coupling() {
        let sigma = e6();
        let bs = btf::fine_btf(&sigma).unwrap();
        let coupling = btf::extract_coupling(&sigma, &bs, 0, 1).unwrap();
        let updated = row_add(&coupling, &[0, 0, 1]).unwrap();
        assert_eq!(updated.entries().collect::<Vec<_>>(), vec![(2, 2, 2)]);
    }

    #[test]
    fn row_add_zero_is_identity() {
        let slice = SigmaSlice::from_entries(2, 3, [(0, 1, 4), (1, 2, -1)]).unwrap();
        assert_eq!(row_add(&slice, &[0, 0]).unwrap(), slice);
        let empty = SigmaSlice::new(2, 3);
        assert_eq!(row_add(&empty, &[5, 7]).unwrap(), empty);
    }

    #[test]
    fn col_max_handles_missing_columns() {
        let slice = SigmaSlice::from_entries(3, 3, [(2, 2, 2)]).unwrap();
        assert_eq!(col_max(&slice), vec![None, None, Some(2)]);
        let one_per_col =
            SigmaSlice::from_entries(3, 3, [(0, 0, 1), (1, 1, 4), (2, 2, 0)]).unwrap();
        assert_eq!(col_max(&one_per_col), vec![Some(1), Some(4), Some(0)]);
    }

    #[test]
    fn col_max_over_stacked_slices() {
        let a = SigmaSlice::from_entries(1, 2, [(0, 0, 1)]).unwrap();
        let b = SigmaSlice::from_entries(1, 2, [(0, 0, 3), (0, 1, -2)]).unwrap();
        let stack = SigmaSlice::vstack(&[&a, &b]).unwrap();
        assert_eq!(col_max(&stack), vec![Some(3), Some(-2)]);
    }

    #[test]
    fn e_max_clamps_minus_infinity() {
        assert_eq!(
            e_max(&[None, None, Some(2)], &[0, 0, 0]).unwrap(),
            vec![0, 0, 2]
        );
        assert_eq!(e_max(&[Some(1), Some(2)], &[2, 1]).unwrap(), vec![2, 2]);
        assert_eq!(e_max(&[None, None], &[0, 0]).unwrap(), vec![0, 0]);
    }

    #[test]
    fn block_solve_on_e6_matches_global() {
        let sigma = e6();
        let bs = btf::fine_btf(&sigma).unwrap();
        let (off, per_block) = block_smallest_offsets(&sigma, &bs).unwrap();
        assert_eq!(off.c(), &[0, 0, 1, 1, 2, 3]);
        assert_eq!(off.d(), &[2, 1, 0, 3, 3, 2]);
        assert_eq!(per_block.len(), 2);
        assert_eq!(per_block[0].param, vec![0, 0, 0]);
        assert_eq!(per_block[1].param, vec![0, 0, 2]);

        let (global, _) = smallest_offsets(&sigma).unwrap();
        assert_eq!(off, global);
    }

    #[test]
    fn single_block_degenerates_to_plain_solve() {
        let sigma = e1();
        let bs = btf::fine_btf(&sigma).unwrap();
        let (off, per_block) = block_smallest_offsets(&sigma, &bs).unwrap();
        let (global, _) = smallest_offsets(&sigma).unwrap();
        assert_eq!(off, global);
        assert_eq!(per_block.len(), 1);
        assert_eq!(per_block[0].param, vec![0, 0, 0]);
    }

    #[test]
    fn uncoupled_blocks_solve_independently() {
        // Two copies of e1 with no coupling at all.
        let mut entries: Vec<(usize, usize, i64)> = Vec::new();
        for (i, j, s) in e1().entries() {
            entries.push((i, j, s));
            entries.push((i + 3, j + 3, s));
        }
        let sigma = SignatureMatrix::from_entries(6, entries).unwrap();
        let bs = btf::fine_btf(&sigma).unwrap();
        let (off, per_block) = block_smallest_offsets(&sigma, &bs).unwrap();
        assert_eq!(off.c(), &[0, 0, 1, 0, 0, 1]);
        assert_eq!(off.d(), &[2, 1, 0, 2, 1, 0]);
        assert!(per_block.iter().all(|b| b.param == vec![0, 0, 0]));

        let (global, _) = smallest_offsets(&sigma).unwrap();
        assert_eq!(off, global);
    }

    #[test]
    fn mismatched_structure_is_rejected() {
        let sigma = e6();
        let ident: Vec<usize> = (0..6).collect();
        let bad = BlockStructure::new(ident.clone(), ident, vec![2, 4]).unwrap();
        assert_eq!(
            block_smallest_offsets(&sigma, &bad),
            Err(Error::InvalidBlockStructure(
                "structure does not fit the matrix (shape or block matching fails)".into()
            ))
        );
    }
}
