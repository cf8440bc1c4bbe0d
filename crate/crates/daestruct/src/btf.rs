//! Fine block upper-triangular forms of signature matrices.
//!
//! A block structure is a pair of permutations plus diagonal block sizes such
//! that, after permuting, every finite entry lies in a diagonal block or
//! strictly above the block diagonal, and each diagonal block is square and
//! structurally nonsingular. The fine form additionally makes every diagonal
//! block irreducible (its matched column digraph is strongly connected).
//!
//! Construction is the standard route: any perfect matching of the sparsity
//! pattern, strongly connected components of the column digraph, and a
//! topological order of the condensation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sigma::{SignatureMatrix, SigmaSlice};

/// Row/column permutations plus diagonal block sizes. `row_perm[k]` is the
/// original row placed at permuted position `k` (likewise for columns).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawBlockStructure")]
pub struct BlockStructure {
    row_perm: Vec<usize>,
    col_perm: Vec<usize>,
    block_sizes: Vec<usize>,
}

#[derive(Deserialize)]
struct RawBlockStructure {
    row_perm: Vec<usize>,
    col_perm: Vec<usize>,
    block_sizes: Vec<usize>,
}

impl TryFrom<RawBlockStructure> for BlockStructure {
    type Error = Error;

    fn try_from(raw: RawBlockStructure) -> Result<Self> {
        BlockStructure::new(raw.row_perm, raw.col_perm, raw.block_sizes)
    }
}

impl BlockStructure {
    /// Validates that both permutations cover `0..n` and the block sizes are
    /// positive and sum to n. Compatibility with a particular matrix is
    /// checked separately by [`validate_btf`].
    pub fn new(
        row_perm: Vec<usize>,
        col_perm: Vec<usize>,
        block_sizes: Vec<usize>,
    ) -> Result<Self> {
        let n = row_perm.len();
        if col_perm.len() != n {
            return Err(Error::InvalidBlockStructure(format!(
                "row_perm has length {n} but col_perm has length {}",
                col_perm.len()
            )));
        }
        for (name, perm) in [("row_perm", &row_perm), ("col_perm", &col_perm)] {
            let mut seen = vec![false; n];
            for &x in perm {
                if x >= n || seen[x] {
                    return Err(Error::InvalidBlockStructure(format!(
                        "{name} is not a permutation of 0..{n}"
                    )));
                }
                seen[x] = true;
            }
        }
        if block_sizes.contains(&0) {
            return Err(Error::InvalidBlockStructure(
                "block sizes must be positive".into(),
            ));
        }
        if block_sizes.iter().sum::<usize>() != n {
            return Err(Error::InvalidBlockStructure(format!(
                "block sizes sum to {} but n = {n}",
                block_sizes.iter().sum::<usize>()
            )));
        }
        Ok(BlockStructure {
            row_perm,
            col_perm,
            block_sizes,
        })
    }

    pub fn n(&self) -> usize {
        self.row_perm.len()
    }

    pub fn num_blocks(&self) -> usize {
        self.block_sizes.len()
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn row_perm(&self) -> &[usize] {
        &self.row_perm
    }

    pub fn col_perm(&self) -> &[usize] {
        &self.col_perm
    }

    /// Permuted-position range of block `b`.
    pub fn block_range(&self, b: usize) -> Result<std::ops::Range<usize>> {
        if b >= self.block_sizes.len() {
            return Err(Error::IndexOutOfRange {
                index: b,
                size: self.block_sizes.len(),
            });
        }
        let start: usize = self.block_sizes[..b].iter().sum();
        Ok(start..start + self.block_sizes[b])
    }

    /// Block index of each permuted position.
    fn block_of_position(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.n());
        for (b, &size) in self.block_sizes.iter().enumerate() {
            out.extend(std::iter::repeat_n(b, size));
        }
        out
    }
}

/// Validation strictness for [`validate_btf`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BtfMode {
    /// Shape and per-block nonsingularity only; reducible diagonal blocks
    /// are accepted. Sufficient for the block offset solver.
    Coarse,
    /// Additionally requires every diagonal block to be irreducible.
    Fine,
}

/// Computes the fine block upper-triangular form.
///
/// Deterministic: strongly connected components are laid out in topological
/// order of the condensation, ties broken by smallest original column index,
/// and rows/columns inside each block are sorted by original index.
pub fn fine_btf(sigma: &SignatureMatrix) -> Result<BlockStructure> {
    let n = sigma.n();
    let cols_of_row: Vec<Vec<usize>> = sigma
        .rows_adjacency()
        .into_iter()
        .map(|row| row.into_iter().map(|(j, _)| j).collect())
        .collect();

    let col_row = perfect_matching(&cols_of_row, n).ok_or(Error::StructurallySingular)?;

    // Column digraph: j -> j' when the row matched to j has an entry in j'.
    let mut adj = vec![Vec::new(); n];
    for (j, edges) in adj.iter_mut().enumerate() {
        let r = col_row[j];
        for &j2 in &cols_of_row[r] {
            if j2 != j {
                edges.push(j2);
            }
        }
    }

    let comps = tarjan_scc(&adj);
    let order = condensation_topo_order(&adj, &comps, n);

    let mut row_perm = Vec::with_capacity(n);
    let mut col_perm = Vec::with_capacity(n);
    let mut block_sizes = Vec::with_capacity(order.len());
    for comp_id in order {
        let mut cols = comps[comp_id].clone();
        cols.sort_unstable();
        let mut rows: Vec<usize> = cols.iter().map(|&j| col_row[j]).collect();
        rows.sort_unstable();
        block_sizes.push(cols.len());
        row_perm.extend(rows);
        col_perm.extend(cols);
    }

    let bs = BlockStructure::new(row_perm, col_perm, block_sizes)?;
    debug_assert!(validate_btf(sigma, &bs, BtfMode::Fine));
    Ok(bs)
}

/// Checks all block-structure invariants of `bs` against `sigma`.
pub fn validate_btf(sigma: &SignatureMatrix, bs: &BlockStructure, mode: BtfMode) -> bool {
    let n = sigma.n();
    if bs.n() != n {
        return false;
    }
    let mut pos_of_row = vec![0; n];
    let mut pos_of_col = vec![0; n];
    for (pos, &orig) in bs.row_perm.iter().enumerate() {
        pos_of_row[orig] = pos;
    }
    for (pos, &orig) in bs.col_perm.iter().enumerate() {
        pos_of_col[orig] = pos;
    }
    let block_of = bs.block_of_position();

    // No finite entry below the block diagonal.
    for (i, j, _) in sigma.entries() {
        if block_of[pos_of_row[i]] > block_of[pos_of_col[j]] {
            return false;
        }
    }

    for b in 0..bs.num_blocks() {
        let range = bs.block_range(b).expect("block index in range");
        let size = range.len();
        let local_adj: Vec<Vec<usize>> = range
            .clone()
            .map(|pos| {
                let orig_row = bs.row_perm[pos];
                sigma
                    .row(orig_row)
                    .map(|(j, _)| pos_of_col[j])
                    .filter(|&p| range.contains(&p))
                    .map(|p| p - range.start)
                    .collect()
            })
            .collect();

        let Some(col_row) = perfect_matching(&local_adj, size) else {
            return false;
        };
        if mode == BtfMode::Fine && size > 1 {
            let mut adj = vec![Vec::new(); size];
            for (j, edges) in adj.iter_mut().enumerate() {
                let r = col_row[j];
                for &j2 in &local_adj[r] {
                    if j2 != j {
                        edges.push(j2);
                    }
                }
            }
            if tarjan_scc(&adj).len() != 1 {
                return false;
            }
        }
    }
    true
}

/// Diagonal block `b` as a standalone matrix in local indices.
pub fn extract_block(
    sigma: &SignatureMatrix,
    bs: &BlockStructure,
    b: usize,
) -> Result<SignatureMatrix> {
    let range = bs.block_range(b)?;
    let mut m = SignatureMatrix::new(range.len());
    for (lr, pos_r) in range.clone().enumerate() {
        let orig_row = bs.row_perm[pos_r];
        for (lc, pos_c) in range.clone().enumerate() {
            if let Some(s) = sigma.get(orig_row, bs.col_perm[pos_c]) {
                m.set(lr, lc, s)?;
            }
        }
    }
    Ok(m)
}

/// Coupling slice above the diagonal: rows of block `k`, columns of block
/// `b`, with `k < b`.
pub fn extract_coupling(
    sigma: &SignatureMatrix,
    bs: &BlockStructure,
    k: usize,
    b: usize,
) -> Result<SigmaSlice> {
    if k >= b {
        return Err(Error::IndexOutOfRange {
            index: k,
            size: b,
        });
    }
    let row_range = bs.block_range(k)?;
    let col_range = bs.block_range(b)?;
    let mut slice = SigmaSlice::new(row_range.len(), col_range.len());
    for (lr, pos_r) in row_range.clone().enumerate() {
        let orig_row = bs.row_perm[pos_r];
        for (lc, pos_c) in col_range.clone().enumerate() {
            if let Some(s) = sigma.get(orig_row, bs.col_perm[pos_c]) {
                slice.set(lr, lc, s)?;
            }
        }
    }
    Ok(slice)
}

/// Kuhn's augmenting-path maximum matching; returns the matched row per
/// column, or None if the matching is not perfect.
fn perfect_matching(cols_of_row: &[Vec<usize>], n_cols: usize) -> Option<Vec<usize>> {
    let n_rows = cols_of_row.len();
    let mut col_row: Vec<Option<usize>> = vec![None; n_cols];

    fn try_augment(
        r: usize,
        cols_of_row: &[Vec<usize>],
        visited: &mut [bool],
        col_row: &mut [Option<usize>],
    ) -> bool {
        for &c in &cols_of_row[r] {
            if visited[c] {
                continue;
            }
            visited[c] = true;
            match col_row[c] {
                None => {
                    col_row[c] = Some(r);
                    return true;
                }
                Some(other) => {
                    if try_augment(other, cols_of_row, visited, col_row) {
                        col_row[c] = Some(r);
                        return true;
                    }
                }
            }
        }
        false
    }

    let mut matched = 0;
    for r in 0..n_rows {
        let mut visited = vec![false; n_cols];
        if try_augment(r, cols_of_row, &mut visited, &mut col_row) {
            matched += 1;
        }
    }
    if matched == n_cols && n_rows == n_cols {
        Some(col_row.into_iter().map(|r| r.unwrap()).collect())
    } else {
        None
    }
}

/// Iterative single-pass Tarjan; components are emitted in reverse
/// topological order of the condensation.
fn tarjan_scc(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    const UNSET: usize = usize::MAX;
    let mut index = vec![UNSET; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut counter = 0usize;
    let mut dfs: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNSET {
            continue;
        }
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        dfs.push((root, 0));

        while let Some(&(v, next)) = dfs.last() {
            if next < adj[v].len() {
                dfs.last_mut().unwrap().1 += 1;
                let w = adj[v][next];
                if index[w] == UNSET {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    dfs.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                dfs.pop();
                if let Some(&(parent, _)) = dfs.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack nonempty");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comps.push(comp);
                }
            }
        }
    }
    comps
}

/// Topological order of the condensation (sources first), ties broken by the
/// smallest original column index inside each component.
fn condensation_topo_order(adj: &[Vec<usize>], comps: &[Vec<usize>], n: usize) -> Vec<usize> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    let ncomp = comps.len();
    let mut comp_of = vec![0usize; n];
    for (cid, comp) in comps.iter().enumerate() {
        for &v in comp {
            comp_of[v] = cid;
        }
    }
    let mut dag = vec![Vec::new(); ncomp];
    let mut indeg = vec![0usize; ncomp];
    for (u, edges) in adj.iter().enumerate() {
        for &w in edges {
            let (cu, cw) = (comp_of[u], comp_of[w]);
            if cu != cw {
                dag[cu].push(cw);
            }
        }
    }
    for edges in &mut dag {
        edges.sort_unstable();
        edges.dedup();
        for &w in edges.iter() {
            indeg[w] += 1;
        }
    }

    let min_col: Vec<usize> = comps
        .iter()
        .map(|c| *c.iter().min().expect("components are nonempty"))
        .collect();
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> = (0..ncomp)
        .filter(|&c| indeg[c] == 0)
        .map(|c| Reverse((min_col[c], c)))
        .collect();

    let mut order = Vec::with_capacity(ncomp);
    while let Some(Reverse((_, c))) = heap.pop() {
        order.push(c);
        for &w in &dag[c] {
            indeg[w] -= 1;
            if indeg[w] == 0 {
                heap.push(Reverse((min_col[w], w)));
            }
        }
    }
    debug_assert_eq!(order.len(), ncomp);
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigma::test_fixtures::{e1, e6};

    #[test]
    fn e6_is_already_in_btf_order() {
        let bs = fine_btf(&e6()).unwrap();
        assert_eq!(bs.block_sizes(), &[3, 3]);
        assert_eq!(bs.row_perm(), &[0, 1, 2, 3, 4, 5]);
        assert_eq!(bs.col_perm(), &[0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn e1_is_a_single_irreducible_block() {
        let bs = fine_btf(&e1()).unwrap();
        assert_eq!(bs.block_sizes(), &[3]);
    }

    #[test]
    fn shuffled_e6_recovers_two_blocks() {
        let (shuffled, _, _) = crate::oracle::shuffle_sigma(&e6(), 42);
        let bs = fine_btf(&shuffled).unwrap();
        assert_eq!(bs.block_sizes(), &[3, 3]);
        assert!(validate_btf(&shuffled, &bs, BtfMode::Fine));
    }

    #[test]
    fn singular_matrix_has_no_btf() {
        let sigma = SignatureMatrix::from_entries(2, [(0, 0, 0), (1, 0, 0)]).unwrap();
        assert_eq!(fine_btf(&sigma), Err(Error::StructurallySingular));
    }

    #[test]
    fn validate_modes_on_e6() {
        let sigma = e6();
        let ident: Vec<usize> = (0..6).collect();
        let two = BlockStructure::new(ident.clone(), ident.clone(), vec![3, 3]).unwrap();
        assert!(validate_btf(&sigma, &two, BtfMode::Fine));
        assert!(validate_btf(&sigma, &two, BtfMode::Coarse));

        // One coarse block: valid shape, but reducible.
        let one = BlockStructure::new(ident.clone(), ident.clone(), vec![6]).unwrap();
        assert!(validate_btf(&sigma, &one, BtfMode::Coarse));
        assert!(!validate_btf(&sigma, &one, BtfMode::Fine));

        // Splitting at 2 strands a finite entry below the diagonal.
        let bad = BlockStructure::new(ident.clone(), ident, vec![2, 4]).unwrap();
        assert!(!validate_btf(&sigma, &bad, BtfMode::Coarse));
    }

    #[test]
    fn extract_block_and_coupling_on_e6() {
        let sigma = e6();
        let bs = fine_btf(&sigma).unwrap();
        assert_eq!(extract_block(&sigma, &bs, 0).unwrap(), e1());

        let second = extract_block(&sigma, &bs, 1).unwrap();
        assert_eq!(second, e1()); // same pattern, shifted

        let coupling = extract_coupling(&sigma, &bs, 0, 1).unwrap();
        let entries: Vec<_> = coupling.entries().collect();
        assert_eq!(entries, vec![(2, 2, 1)]);
    }

    #[test]
    fn extract_coupling_rejects_bad_order() {
        let sigma = e6();
        let bs = fine_btf(&sigma).unwrap();
        assert!(extract_coupling(&sigma, &bs, 1, 1).is_err());
        assert!(extract_coupling(&sigma, &bs, 1, 0).is_err());
    }

    #[test]
    fn structure_json_round_trip() {
        let bs = fine_btf(&e6()).unwrap();
        let json = serde_json::to_string(&bs).unwrap();
        let back: BlockStructure = serde_json::from_str(&json).unwrap();
        assert_eq!(back, bs);
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }

    #[test]
    fn structure_deserialization_validates() {
        let bad = r#"{"row_perm":[0,0],"col_perm":[0,1],"block_sizes":[2]}"#;
        assert!(serde_json::from_str::<BlockStructure>(bad).is_err());
    }
}
