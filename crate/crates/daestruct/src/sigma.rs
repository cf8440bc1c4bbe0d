//! Signature matrices and the elementary offset mappings.
//!
//! A signature matrix Σ records, for each equation `i` and variable `j`, the
//! highest derivative order σ_ij of `x_j` occurring in `f_i`, with −∞ where
//! the variable does not occur. −∞ is represented structurally: absent cells
//! are simply not stored, so no sentinel value ever takes part in arithmetic.
//!
//! All arithmetic in this module is exact 64-bit integer arithmetic; overflow
//! aborts (overflow checks are enabled in every build profile).

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Sparse n×n integer matrix; absent cells mean −∞.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignatureMatrix {
    n: usize,
    entries: BTreeMap<(usize, usize), i64>,
}

impl SignatureMatrix {
    /// Empty n×n matrix (all cells −∞). `n` must be positive.
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "signature matrix size must be positive");
        SignatureMatrix {
            n,
            entries: BTreeMap::new(),
        }
    }

    /// Builds from `(row, col, sigma)` triples. Rejects duplicate cells and
    /// out-of-range indices.
    pub fn from_entries<I>(n: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, i64)>,
    {
        let mut m = SignatureMatrix::new(n);
        for (i, j, sigma) in entries {
            m.check_index(i)?;
            m.check_index(j)?;
            if m.entries.insert((i, j), sigma).is_some() {
                return Err(Error::DuplicateEntry { row: i, col: j });
            }
        }
        Ok(m)
    }

    fn check_index(&self, idx: usize) -> Result<()> {
        if idx >= self.n {
            Err(Error::IndexOutOfRange {
                index: idx,
                size: self.n,
            })
        } else {
            Ok(())
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_entries(&self) -> usize {
        self.entries.len()
    }

    /// σ_ij, or None for −∞.
    pub fn get(&self, i: usize, j: usize) -> Option<i64> {
        self.entries.get(&(i, j)).copied()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.entries.contains_key(&(i, j))
    }

    /// Sets σ_ij, overwriting any previous value.
    pub fn set(&mut self, i: usize, j: usize, sigma: i64) -> Result<()> {
        self.check_index(i)?;
        self.check_index(j)?;
        self.entries.insert((i, j), sigma);
        Ok(())
    }

    /// Finite cells in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, i64)> + '_ {
        self.entries.iter().map(|(&(i, j), &s)| (i, j, s))
    }

    /// Finite cells of row `i` in column order.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, i64)> + '_ {
        self.entries
            .range((i, 0)..=(i, self.n - 1))
            .map(|(&(_, j), &s)| (j, s))
    }

    /// Per-row adjacency `(col, sigma)` lists; the workhorse layout for the
    /// matching and fixed-point solvers.
    pub fn rows_adjacency(&self) -> Vec<Vec<(usize, i64)>> {
        let mut rows = vec![Vec::new(); self.n];
        for (&(i, j), &s) in &self.entries {
            rows[i].push((j, s));
        }
        rows
    }

    pub fn max_sigma(&self) -> Option<i64> {
        self.entries.values().copied().max()
    }

    pub fn min_sigma(&self) -> Option<i64> {
        self.entries.values().copied().min()
    }

    /// The matrix with rows and columns reordered: cell `(r, c)` of the
    /// result is cell `(row_perm[r], col_perm[c])` of `self`.
    pub fn permuted(&self, row_perm: &[usize], col_perm: &[usize]) -> Result<Self> {
        if row_perm.len() != self.n || col_perm.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: row_perm.len().min(col_perm.len()),
            });
        }
        let mut pos_of_row = vec![usize::MAX; self.n];
        let mut pos_of_col = vec![usize::MAX; self.n];
        for (pos, &orig) in row_perm.iter().enumerate() {
            pos_of_row[orig] = pos;
        }
        for (pos, &orig) in col_perm.iter().enumerate() {
            pos_of_col[orig] = pos;
        }
        let mut m = SignatureMatrix::new(self.n);
        for (i, j, s) in self.entries() {
            m.entries.insert((pos_of_row[i], pos_of_col[j]), s);
        }
        Ok(m)
    }
}

/// Rectangular slice of a signature matrix, used for the coupling blocks of a
/// block-triangular form. Same sparse representation as [`SignatureMatrix`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SigmaSlice {
    rows: usize,
    cols: usize,
    entries: BTreeMap<(usize, usize), i64>,
}

impl SigmaSlice {
    pub fn new(rows: usize, cols: usize) -> Self {
        SigmaSlice {
            rows,
            cols,
            entries: BTreeMap::new(),
        }
    }

    pub fn from_entries<I>(rows: usize, cols: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, i64)>,
    {
        let mut slice = SigmaSlice::new(rows, cols);
        for (i, j, sigma) in entries {
            slice.set(i, j, sigma)?;
        }
        Ok(slice)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> Option<i64> {
        self.entries.get(&(i, j)).copied()
    }

    pub fn set(&mut self, i: usize, j: usize, sigma: i64) -> Result<()> {
        if i >= self.rows {
            return Err(Error::IndexOutOfRange {
                index: i,
                size: self.rows,
            });
        }
        if j >= self.cols {
            return Err(Error::IndexOutOfRange {
                index: j,
                size: self.cols,
            });
        }
        self.entries.insert((i, j), sigma);
        Ok(())
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, i64)> + '_ {
        self.entries.iter().map(|(&(i, j), &s)| (i, j, s))
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Stacks slices vertically. All slices must share the column count.
    pub fn vstack(slices: &[&SigmaSlice]) -> Result<SigmaSlice> {
        let cols = slices.first().map_or(0, |s| s.cols);
        for s in slices {
            if s.cols != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    actual: s.cols,
                });
            }
        }
        let rows = slices.iter().map(|s| s.rows).sum();
        let mut out = SigmaSlice::new(rows, cols);
        let mut base = 0;
        for s in slices {
            for (i, j, v) in s.entries() {
                out.entries.insert((base + i, j), v);
            }
            base += s.rows;
        }
        Ok(out)
    }
}

/// A set of n finite cells, one per row and one per column: `col_of(i)` is the
/// column matched to row `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transversal {
    cols: Vec<usize>,
}

impl Transversal {
    /// Validates that `cols` is a permutation and every matched cell is
    /// finite in `sigma`.
    pub fn new(sigma: &SignatureMatrix, cols: Vec<usize>) -> Result<Self> {
        let n = sigma.n();
        if cols.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: cols.len(),
            });
        }
        let mut seen = vec![false; n];
        for (i, &j) in cols.iter().enumerate() {
            if j >= n {
                return Err(Error::IndexOutOfRange { index: j, size: n });
            }
            if seen[j] {
                return Err(Error::InvalidTransversal(format!(
                    "column {j} matched twice"
                )));
            }
            seen[j] = true;
            if !sigma.contains(i, j) {
                return Err(Error::InvalidTransversal(format!(
                    "cell ({i}, {j}) is not finite"
                )));
            }
        }
        Ok(Transversal { cols })
    }

    pub(crate) fn from_cols_unchecked(cols: Vec<usize>) -> Self {
        Transversal { cols }
    }

    pub fn len(&self) -> usize {
        self.cols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cols.is_empty()
    }

    pub fn col_of(&self, row: usize) -> usize {
        self.cols[row]
    }

    /// The matched cells `(row, col)` in row order.
    pub fn cells(&self) -> Vec<(usize, usize)> {
        self.cols.iter().copied().enumerate().collect()
    }

    pub fn as_cols(&self) -> &[usize] {
        &self.cols
    }
}

/// The offset pair: `c_i` counts how many times equation `i` is
/// differentiated, `d_j` is the resulting highest derivative order of `x_j`.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Offsets {
    c: Vec<i64>,
    d: Vec<i64>,
}

impl Offsets {
    /// Requires `c ≥ 0` componentwise and equal lengths. Dual feasibility is
    /// a property relative to a matrix; check it with [`is_dual_feasible`].
    pub fn new(c: Vec<i64>, d: Vec<i64>) -> Result<Self> {
        if c.len() != d.len() {
            return Err(Error::DimensionMismatch {
                expected: c.len(),
                actual: d.len(),
            });
        }
        if let Some(i) = c.iter().position(|&x| x < 0) {
            return Err(Error::NegativeOffset(i));
        }
        Ok(Offsets { c, d })
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    pub fn c(&self) -> &[i64] {
        &self.c
    }

    pub fn d(&self) -> &[i64] {
        &self.d
    }

    pub fn into_parts(self) -> (Vec<i64>, Vec<i64>) {
        (self.c, self.d)
    }
}

/// Nonnegative lower bounds on the variable offsets d.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamVector {
    p: Vec<i64>,
}

impl ParamVector {
    pub fn new(p: Vec<i64>) -> Result<Self> {
        if let Some(i) = p.iter().position(|&x| x < 0) {
            return Err(Error::NegativeParameter(i));
        }
        Ok(ParamVector { p })
    }

    pub fn zeros(n: usize) -> Self {
        ParamVector { p: vec![0; n] }
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.p
    }
}

/// The variable-offset mapping: `d_j = max_i (σ_ij + c_i)` over the finite
/// cells of column j. Errors with [`Error::EmptyColumn`] if some column has
/// no finite entry (a structurally singular pattern).
pub fn map_d(sigma: &SignatureMatrix, c: &[i64]) -> Result<Vec<i64>> {
    let n = sigma.n();
    if c.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: c.len(),
        });
    }
    let mut d: Vec<Option<i64>> = vec![None; n];
    for (i, j, s) in sigma.entries() {
        let v = s + c[i];
        if d[j].is_none_or(|cur| v > cur) {
            d[j] = Some(v);
        }
    }
    d.into_iter()
        .enumerate()
        .map(|(j, v)| v.ok_or(Error::EmptyColumn(j)))
        .collect()
}

/// The equation-offset mapping along a transversal: `c_i = d_j − σ_ij` for
/// `(i, j)` matched. May return negative components; clamping is the
/// caller's step.
pub fn map_c(sigma: &SignatureMatrix, t: &Transversal, d: &[i64]) -> Result<Vec<i64>> {
    let n = sigma.n();
    if d.len() != n || t.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: d.len().min(t.len()),
        });
    }
    (0..n)
        .map(|i| {
            let j = t.col_of(i);
            let s = sigma
                .get(i, j)
                .ok_or_else(|| Error::InvalidTransversal(format!("cell ({i}, {j}) not finite")))?;
            Ok(d[j] - s)
        })
        .collect()
}

/// The composed mapping `phi = map_c ∘ map_d` whose least nonnegative fixed
/// point is the smallest equation offset vector.
pub fn phi(sigma: &SignatureMatrix, t: &Transversal, c: &[i64]) -> Result<Vec<i64>> {
    let d = map_d(sigma, c)?;
    map_c(sigma, t, &d)
}

/// Dual feasibility: `c ≥ 0` and `d_j − c_i ≥ σ_ij` on every finite cell.
pub fn is_dual_feasible(sigma: &SignatureMatrix, off: &Offsets) -> bool {
    if off.len() != sigma.n() {
        return false;
    }
    if off.c().iter().any(|&x| x < 0) {
        return false;
    }
    sigma
        .entries()
        .all(|(i, j, s)| off.d()[j] - off.c()[i] >= s)
}

/// Tightness on a transversal: `d_j − c_i = σ_ij` on every matched cell.
pub fn is_tight_on(sigma: &SignatureMatrix, t: &Transversal, off: &Offsets) -> bool {
    if off.len() != sigma.n() || t.len() != sigma.n() {
        return false;
    }
    (0..sigma.n()).all(|i| {
        let j = t.col_of(i);
        match sigma.get(i, j) {
            Some(s) => off.d()[j] - off.c()[i] == s,
            None => false,
        }
    })
}

#[cfg(test)]
pub(crate) mod test_fixtures {
    use super::*;

    /// The 3×3 example pattern: x1'' + x3, x2' + x3, x1² + x2².
    pub fn e1() -> SignatureMatrix {
        SignatureMatrix::from_entries(
            3,
            [(0, 0, 2), (0, 2, 0), (1, 1, 1), (1, 2, 0), (2, 0, 0), (2, 1, 0)],
        )
        .unwrap()
    }

    /// The highest-value transversal of `e1`.
    pub fn e1_hvt() -> Transversal {
        Transversal::new(&e1(), vec![0, 2, 1]).unwrap()
    }

    /// The 6×6 two-block pattern: `e1` twice on the diagonal plus one
    /// coupling entry at (2, 5).
    pub fn e6() -> SignatureMatrix {
        SignatureMatrix::from_entries(
            6,
            [
                (0, 0, 2),
                (0, 2, 0),
                (1, 1, 1),
                (1, 2, 0),
                (2, 0, 0),
                (2, 1, 0),
                (2, 5, 1),
                (3, 3, 2),
                (3, 5, 0),
                (4, 4, 1),
                (4, 5, 0),
                (5, 3, 0),
                (5, 4, 0),
            ],
        )
        .unwrap()
    }
}
