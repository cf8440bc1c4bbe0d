//! Fixed-point iteration for the smallest dual-optimal offset pair.
//!
//! Starting from c = 0 (or, with a parameter vector p, from the clamped
//! start max{map_c(p), 0}), the composed mapping phi = map_c ∘ map_d is
//! iterated until the equation offsets stop changing. With a highest-value
//! transversal the iterates increase monotonically toward the unique
//! smallest pair, and the number of phi applications is at most
//! ‖c*‖₁ − ‖start‖₁ + 1.

use crate::assignment;
use crate::error::{Error, Result};
use crate::sigma::{map_c, map_d, Offsets, ParamVector, SignatureMatrix, Transversal};

/// Iteration counters for one solve.
///
/// `phi_applications` counts full map_d-then-map_c passes, the unit of the
/// a-priori `bound`; `matching_ops` counts assignment-solver work (zero when
/// the caller supplied the transversal).
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct SolveStats {
    pub phi_applications: u64,
    pub converged: bool,
    pub bound: u64,
    pub matching_ops: u64,
}

/// The iterate trajectory of one solve: the starting vector and every phi
/// output, the last of which is the fixed point (repeated once as the
/// convergence check).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveTrace {
    pub initial_c: Vec<i64>,
    pub iterates: Vec<Vec<i64>>,
}

pub(crate) struct SolveOutcome {
    pub offsets: Offsets,
    pub stats: SolveStats,
    pub trace: SolveTrace,
    pub hvt: Transversal,
}

/// Smallest offsets of a structurally nonsingular matrix.
pub fn smallest_offsets(sigma: &SignatureMatrix) -> Result<(Offsets, SolveStats)> {
    solve_detailed(sigma, None).map(|o| (o.offsets, o.stats))
}

/// Smallest offsets subject to the componentwise lower bound `d ⪰ p`.
pub fn smallest_offsets_with_param(
    sigma: &SignatureMatrix,
    p: &ParamVector,
) -> Result<(Offsets, SolveStats)> {
    solve_detailed(sigma, Some(p)).map(|o| (o.offsets, o.stats))
}

/// As [`smallest_offsets_with_param`], also returning the iterate trajectory.
pub fn smallest_offsets_with_param_traced(
    sigma: &SignatureMatrix,
    p: &ParamVector,
) -> Result<(Offsets, SolveStats, SolveTrace)> {
    solve_detailed(sigma, Some(p)).map(|o| (o.offsets, o.stats, o.trace))
}

/// Runs the iteration with a caller-chosen transversal instead of computing
/// one. The result is independent of which highest-value transversal is
/// used; if `t` is not highest-value the iteration cannot converge and
/// [`Error::NotHighestValue`] is returned once the worst-case bound is
/// exceeded.
pub fn smallest_offsets_with_transversal(
    sigma: &SignatureMatrix,
    t: &Transversal,
) -> Result<(Offsets, SolveStats)> {
    let start = vec![0i64; sigma.n()];
    iterate_from(sigma, t, start, 0).map(|(offsets, stats, _)| (offsets, stats))
}

/// True iff `off` is exactly the smallest dual-optimal pair of `sigma`
/// (dual-feasible, tight on a highest-value transversal, a fixed point of
/// phi, and componentwise minimal). Implemented as equality with the solver
/// result; false for structurally singular matrices.
pub fn verify_smallest(sigma: &SignatureMatrix, off: &Offsets) -> bool {
    match smallest_offsets(sigma) {
        Ok((best, _)) => best == *off,
        Err(_) => false,
    }
}

pub(crate) fn solve_detailed(
    sigma: &SignatureMatrix,
    p: Option<&ParamVector>,
) -> Result<SolveOutcome> {
    let n = sigma.n();
    let (t, mstats) = assignment::find_hvt_with_stats(sigma)?;
    let start = match p {
        None => vec![0i64; n],
        Some(p) => {
            if p.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: p.len(),
                });
            }
            // The parameter is used in place of d once, then clamped at zero.
            map_c(sigma, &t, p.as_slice())?
                .into_iter()
                .map(|x| x.max(0))
                .collect()
        }
    };
    let (offsets, stats, trace) = iterate_from(sigma, &t, start, mstats.ops)?;
    Ok(SolveOutcome {
        offsets,
        stats,
        trace,
        hvt: t,
    })
}

fn iterate_from(
    sigma: &SignatureMatrix,
    t: &Transversal,
    start: Vec<i64>,
    matching_ops: u64,
) -> Result<(Offsets, SolveStats, SolveTrace)> {
    // With a highest-value transversal the iteration takes at most
    // ‖c*‖₁ + 1 applications and each component of c* is bounded by
    // n · (sigma spread); exceeding that proves t is not highest-value.
    let n = sigma.n();
    let spread = (sigma.max_sigma().unwrap_or(0).max(0)
        - sigma.min_sigma().unwrap_or(0).min(0)) as u64;
    let guard = (n as u64) * (n as u64) * spread + 2;

    let mut prev = start.clone();
    let mut iterates = Vec::new();
    let mut phi_applications = 0u64;

    let mut c = apply_phi(sigma, t, &prev)?;
    phi_applications += 1;
    iterates.push(c.clone());

    while c != prev {
        if phi_applications > guard {
            return Err(Error::NotHighestValue);
        }
        prev = c;
        c = apply_phi(sigma, t, &prev)?;
        phi_applications += 1;
        iterates.push(c.clone());
        debug_assert!(
            c.iter().all(|&x| x >= 0),
            "iterates from a clamped start stay nonnegative"
        );
    }

    // Recompute d at the fixed point rather than reusing loop state.
    let d = map_d(sigma, &c)?;
    let norm1 = |v: &[i64]| v.iter().map(|&x| x.max(0) as u64).sum::<u64>();
    let bound = norm1(&c) - norm1(&start) + 1;
    let stats = SolveStats {
        phi_applications,
        converged: true,
        bound,
        matching_ops,
    };
    let trace = SolveTrace {
        initial_c: start,
        iterates,
    };
    Ok((Offsets::new(c, d)?, stats, trace))
}

fn apply_phi(sigma: &SignatureMatrix, t: &Transversal, c: &[i64]) -> Result<Vec<i64>> {
    let d = map_d(sigma, c)?;
    map_c(sigma, t, &d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigma::test_fixtures::{e1, e1_hvt, e6};

    #[test]
    fn smallest_offsets_of_e1() {
        let (off, stats) = smallest_offsets(&e1()).unwrap();
        assert_eq!(off.c(), &[0, 0, 1]);
        assert_eq!(off.d(), &[2, 1, 0]);
        assert_eq!(stats.phi_applications, 2);
        assert!(stats.converged);
        assert!(stats.phi_applications <= stats.bound);
    }

    #[test]
    fn smallest_offsets_of_e6() {
        let (off, _) = smallest_offsets(&e6()).unwrap();
        assert_eq!(off.c(), &[0, 0, 1, 1, 2, 3]);
        assert_eq!(off.d(), &[2, 1, 0, 3, 3, 2]);
    }

    #[test]
    fn diagonal_is_immediately_tight() {
        let sigma =
            SignatureMatrix::from_entries(4, (0..4).map(|i| (i, i, 0))).unwrap();
        let (off, stats) = smallest_offsets(&sigma).unwrap();
        assert_eq!(off.c(), &[0, 0, 0, 0]);
        assert_eq!(off.d(), &[0, 0, 0, 0]);
        assert_eq!(stats.phi_applications, 1);
        assert_eq!(stats.bound, 1);
    }

    #[test]
    fn singular_input_is_reported() {
        let sigma = SignatureMatrix::from_entries(2, [(0, 0, 0), (1, 0, 0)]).unwrap();
        assert_eq!(smallest_offsets(&sigma), Err(Error::StructurallySingular));
    }

    #[test]
    fn param_solve_matches_worked_example() {
        // Same pattern as e1; lower bound p = (0, 0, 2) pulls everything up.
        let sigma = e1();
        let p = ParamVector::new(vec![0, 0, 2]).unwrap();
        let (off, stats, trace) = smallest_offsets_with_param_traced(&sigma, &p).unwrap();
        assert_eq!(off.c(), &[1, 2, 3]);
        assert_eq!(off.d(), &[3, 3, 2]);
        assert_eq!(trace.initial_c, vec![0, 2, 0]);
        assert_eq!(trace.iterates[0], vec![0, 2, 3]);
        assert_eq!(trace.iterates[1], vec![1, 2, 3]);
        assert_eq!(stats.phi_applications, 3);
        // ‖c*‖₁ − ‖start‖₁ + 1 = 6 − 2 + 1
        assert_eq!(stats.bound, 5);
    }

    #[test]
    fn zero_param_reduces_to_plain_solve() {
        let sigma = e1();
        let p = ParamVector::zeros(3);
        let (off, _) = smallest_offsets_with_param(&sigma, &p).unwrap();
        let (plain, _) = smallest_offsets(&sigma).unwrap();
        assert_eq!(off, plain);
    }

    #[test]
    fn param_on_single_cell_pulls_c_up() {
        let sigma = SignatureMatrix::from_entries(1, [(0, 0, 0)]).unwrap();
        let p = ParamVector::new(vec![7]).unwrap();
        let (off, _) = smallest_offsets_with_param(&sigma, &p).unwrap();
        // Tightness on the transversal forces c = d − σ = 7.
        assert_eq!(off.c(), &[7]);
        assert_eq!(off.d(), &[7]);
    }

    #[test]
    fn explicit_transversal_gives_same_result() {
        let sigma = e1();
        let (expected, _) = smallest_offsets(&sigma).unwrap();
        let (off, stats) = smallest_offsets_with_transversal(&sigma, &e1_hvt()).unwrap();
        assert_eq!(off, expected);
        assert_eq!(stats.matching_ops, 0);
    }

    #[test]
    fn non_hvt_transversal_is_detected() {
        let sigma = e1();
        let t = Transversal::new(&sigma, vec![2, 1, 0]).unwrap(); // value 1 < 2
        assert_eq!(
            smallest_offsets_with_transversal(&sigma, &t),
            Err(Error::NotHighestValue)
        );
    }

    #[test]
    fn verify_smallest_accepts_only_the_minimum() {
        let sigma = e1();
        let best = Offsets::new(vec![0, 0, 1], vec![2, 1, 0]).unwrap();
        assert!(verify_smallest(&sigma, &best));
        // A uniform shift is feasible, tight and a fixed point, but not minimal.
        let shifted = Offsets::new(vec![1, 1, 2], vec![3, 2, 1]).unwrap();
        assert!(!verify_smallest(&sigma, &shifted));
        // Not tight at (2, 1).
        let loose = Offsets::new(vec![0, 0, 0], vec![2, 1, 0]).unwrap();
        assert!(!verify_smallest(&sigma, &loose));
    }

    #[test]
    fn oracle_agreement_small_sweep() {
        use crate::oracle::{brute_smallest_dual, gen_sigma, GenSpec};
        for seed in 0..60u64 {
            let n = 1 + (seed as usize) % 5;
            let density = [0.0, 0.3, 0.7][(seed as usize) % 3];
            let spec = GenSpec::flat(n, density, (0, 3), seed);
            let sigma = gen_sigma(&spec);
            let (off, stats) = smallest_offsets(&sigma).unwrap();
            let expected = brute_smallest_dual(&sigma).unwrap();
            assert_eq!(off, expected, "seed {seed}");
            assert!(stats.phi_applications <= stats.bound, "seed {seed}");
        }
    }
}
