//! Brute-force references and seeded instance generators for the test suite.
//!
//! The references here are deliberately independent of the production
//! solvers: transversals are found by enumerating permutations and the
//! smallest dual-optimal pair by enumerating candidate offset vectors over an
//! integer box.
//!
//! # Generator reproducibility
//!
//! All randomness comes from `ChaCha8Rng` seeded with the 64-bit `seed` via
//! `seed_from_u64`. Draws happen in a documented, fixed order so any
//! implementation of the same scheme reproduces instances from `(spec, seed)`
//! alone:
//!
//! 1. flat matrices: a Fisher–Yates shuffle of `0..n` (one `gen_range(0..=i)`
//!    per step, `i` descending from `n−1` to `1`) giving the planted
//!    transversal, then one `gen_range(min..=max)` per planted cell in row
//!    order, then a row-major scan of the remaining cells drawing
//!    `gen_bool(density)` and, when it hits, `gen_range(min..=max)`;
//! 2. block matrices: per block (in order) one `gen_range` per diagonal cell,
//!    one per cycle cell `(i, (i+1) mod r)` when `r > 1`, then the row-major
//!    within-block fill as above; finally a row-major scan of all cells
//!    strictly above the diagonal blocks with the same `gen_bool`/`gen_range`
//!    pattern.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::btf::BlockStructure;
use crate::error::{Error, Result};
use crate::sigma::{map_d, Offsets, SignatureMatrix, Transversal};

/// Size cap for permutation enumeration (n! candidates).
pub const MAX_BRUTE_HVT: usize = 8;
/// Size cap for offset-box enumeration ((n·max σ + 1)^n candidates).
pub const MAX_BRUTE_DUAL: usize = 5;

/// Exhaustive highest-value transversal: tries all n! permutations.
pub fn brute_hvt(sigma: &SignatureMatrix) -> Result<(Transversal, i64)> {
    let all = all_hvts(sigma)?;
    let best = all.into_iter().next().ok_or(Error::StructurallySingular)?;
    let value = crate::assignment::transversal_value(sigma, &best);
    Ok((best, value))
}

/// All highest-value transversals, in lexicographic order of their column
/// vectors. Empty result means the pattern is structurally singular.
pub fn all_hvts(sigma: &SignatureMatrix) -> Result<Vec<Transversal>> {
    let n = sigma.n();
    if n > MAX_BRUTE_HVT {
        return Err(Error::TooLarge {
            n,
            limit: MAX_BRUTE_HVT,
        });
    }
    let mut best_value: Option<i64> = None;
    let mut best: Vec<Vec<usize>> = Vec::new();
    let mut cols: Vec<usize> = Vec::with_capacity(n);
    let mut used = vec![false; n];

    fn rec(
        sigma: &SignatureMatrix,
        cols: &mut Vec<usize>,
        used: &mut Vec<bool>,
        value: i64,
        best_value: &mut Option<i64>,
        best: &mut Vec<Vec<usize>>,
    ) {
        let i = cols.len();
        if i == sigma.n() {
            match *best_value {
                Some(bv) if value < bv => {}
                Some(bv) if value == bv => best.push(cols.clone()),
                _ => {
                    *best_value = Some(value);
                    best.clear();
                    best.push(cols.clone());
                }
            }
            return;
        }
        for j in 0..sigma.n() {
            if used[j] {
                continue;
            }
            if let Some(s) = sigma.get(i, j) {
                used[j] = true;
                cols.push(j);
                rec(sigma, cols, used, value + s, best_value, best);
                cols.pop();
                used[j] = false;
            }
        }
    }

    rec(sigma, &mut cols, &mut used, 0, &mut best_value, &mut best);
    Ok(best
        .into_iter()
        .map(Transversal::from_cols_unchecked)
        .collect())
}

/// Exhaustive smallest dual-optimal pair.
///
/// Candidate c vectors are enumerated over the box `[0, B]^n` with
/// `B = n · spread`, where `spread = max(0, max σ) − min(0, min σ)`
/// (`n · max σ` for the usual nonnegative matrices). The bound is valid
/// because each component of the smallest c is a sum of at most n sigma
/// differences along alternating matched cells; the assertion that the
/// minimizer stays strictly inside a positive box double-checks it on every
/// call. For each candidate, d is forced to `map_d(c)` (feasibility is then
/// automatic) and optimality is the value identity `Σd − Σc = ‖T‖`.
pub fn brute_smallest_dual(sigma: &SignatureMatrix) -> Result<Offsets> {
    let n = sigma.n();
    if n > MAX_BRUTE_DUAL {
        return Err(Error::TooLarge {
            n,
            limit: MAX_BRUTE_DUAL,
        });
    }
    let (_, hvt_value) = brute_hvt(sigma)?;

    let max_s = sigma.max_sigma().unwrap_or(0).max(0);
    let min_s = sigma.min_sigma().unwrap_or(0).min(0);
    let bound = (n as i64) * (max_s - min_s);

    let rows = sigma.rows_adjacency();
    let mut c = vec![0i64; n];
    let mut d = vec![i64::MIN; n];
    let mut best: Option<Vec<i64>> = None;

    'outer: loop {
        // d = map_d(c), dense inline for speed; every column is covered
        // because a transversal exists.
        d.fill(i64::MIN);
        let mut sum_d = 0i64;
        for (i, row) in rows.iter().enumerate() {
            for &(j, s) in row {
                let v = s + c[i];
                if v > d[j] {
                    d[j] = v;
                }
            }
        }
        for &v in &d {
            sum_d += v;
        }
        let sum_c: i64 = c.iter().sum();
        if sum_d - sum_c == hvt_value {
            match &mut best {
                None => best = Some(c.clone()),
                Some(b) => {
                    for (bi, &ci) in b.iter_mut().zip(&c) {
                        if ci < *bi {
                            *bi = ci;
                        }
                    }
                }
            }
        }
        // Odometer step over [0, bound]^n.
        for slot in c.iter_mut() {
            if *slot < bound {
                *slot += 1;
                continue 'outer;
            }
            *slot = 0;
        }
        break;
    }

    let best_c = best.ok_or(Error::StructurallySingular)?;
    // The componentwise minimum of the optimal set must itself be optimal
    // (existence and uniqueness of the smallest pair), and must sit strictly
    // inside the box when the box is nondegenerate.
    let best_d = map_d(sigma, &best_c)?;
    let value: i64 = best_d.iter().sum::<i64>() - best_c.iter().sum::<i64>();
    assert_eq!(
        value, hvt_value,
        "componentwise minimum of dual-optimal c vectors is not optimal"
    );
    if bound > 0 {
        assert!(
            best_c.iter().all(|&x| x < bound),
            "enumeration box too small: minimizer touched the boundary"
        );
    }
    Offsets::new(best_c, best_d)
}

/// Instance-generator parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub shape: GenShape,
    /// Probability of each optional (off-transversal / coupling) cell.
    pub density: f64,
    pub sigma_min: i64,
    pub sigma_max: i64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenShape {
    Flat { n: usize },
    Blocks { blocks: usize, block_size: usize },
}

impl GenSpec {
    pub fn flat(n: usize, density: f64, sigma_range: (i64, i64), seed: u64) -> Self {
        GenSpec {
            shape: GenShape::Flat { n },
            density,
            sigma_min: sigma_range.0,
            sigma_max: sigma_range.1,
            seed,
        }
    }

    pub fn blocks(
        blocks: usize,
        block_size: usize,
        density: f64,
        sigma_range: (i64, i64),
        seed: u64,
    ) -> Self {
        GenSpec {
            shape: GenShape::Blocks { blocks, block_size },
            density,
            sigma_min: sigma_range.0,
            sigma_max: sigma_range.1,
            seed,
        }
    }

    pub fn n(&self) -> usize {
        match self.shape {
            GenShape::Flat { n } => n,
            GenShape::Blocks { blocks, block_size } => blocks * block_size,
        }
    }

    fn validate(&self) {
        assert!((0.0..=1.0).contains(&self.density), "density must be in [0, 1]");
        assert!(self.sigma_min <= self.sigma_max, "empty sigma range");
        assert!(self.n() > 0, "generated size must be positive");
    }
}

/// Random structurally nonsingular matrix with a planted transversal.
pub fn gen_sigma(spec: &GenSpec) -> SignatureMatrix {
    spec.validate();
    let n = spec.n();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        perm.swap(i, j);
    }

    let mut m = SignatureMatrix::new(n);
    for (i, &j) in perm.iter().enumerate() {
        let s = rng.gen_range(spec.sigma_min..=spec.sigma_max);
        m.set(i, j, s).unwrap();
    }
    for (i, &planted) in perm.iter().enumerate() {
        for j in 0..n {
            if j == planted {
                continue;
            }
            if rng.gen_bool(spec.density) {
                let s = rng.gen_range(spec.sigma_min..=spec.sigma_max);
                m.set(i, j, s).unwrap();
            }
        }
    }
    m
}

/// Random block upper-triangular matrix: irreducible diagonal blocks (an
/// identity transversal plus a full cycle) and coupling entries only strictly
/// above the diagonal blocks. The returned structure has identity
/// permutations and uniform block sizes.
pub fn gen_block_sigma(spec: &GenSpec) -> (SignatureMatrix, BlockStructure) {
    spec.validate();
    let GenShape::Blocks { blocks, block_size } = spec.shape else {
        panic!("gen_block_sigma requires a block-shaped GenSpec");
    };
    let n = spec.n();
    let r = block_size;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut m = SignatureMatrix::new(n);

    for b in 0..blocks {
        let base = b * r;
        for i in 0..r {
            let s = rng.gen_range(spec.sigma_min..=spec.sigma_max);
            m.set(base + i, base + i, s).unwrap();
        }
        if r > 1 {
            for i in 0..r {
                let j = (i + 1) % r;
                let s = rng.gen_range(spec.sigma_min..=spec.sigma_max);
                m.set(base + i, base + j, s).unwrap();
            }
        }
        for i in 0..r {
            for j in 0..r {
                if j == i || (r > 1 && j == (i + 1) % r) {
                    continue;
                }
                if rng.gen_bool(spec.density) {
                    let s = rng.gen_range(spec.sigma_min..=spec.sigma_max);
                    m.set(base + i, base + j, s).unwrap();
                }
            }
        }
    }

    for bi in 0..blocks {
        for bj in (bi + 1)..blocks {
            for i in 0..r {
                for j in 0..r {
                    if rng.gen_bool(spec.density) {
                        let s = rng.gen_range(spec.sigma_min..=spec.sigma_max);
                        m.set(bi * r + i, bj * r + j, s).unwrap();
                    }
                }
            }
        }
    }

    let bs = BlockStructure::new(
        (0..n).collect(),
        (0..n).collect(),
        vec![r; blocks],
    )
    .expect("identity block structure is valid");
    (m, bs)
}

/// Applies a seeded random row and column shuffle; returns the shuffled
/// matrix together with the permutations used (position → original index).
pub fn shuffle_sigma(
    sigma: &SignatureMatrix,
    seed: u64,
) -> (SignatureMatrix, Vec<usize>, Vec<usize>) {
    let n = sigma.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut row_perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        row_perm.swap(i, j);
    }
    let mut col_perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        col_perm.swap(i, j);
    }
    let shuffled = sigma
        .permuted(&row_perm, &col_perm)
        .expect("permutation lengths match");
    (shuffled, row_perm, col_perm)
}
