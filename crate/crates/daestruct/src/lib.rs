//! Structural analysis of differential-algebraic equation systems.
//!
//! The pipeline implemented here is the Σ-method: build the signature matrix
//! of a square DAE system, find a highest-value transversal by solving an
//! assignment problem, obtain the unique smallest offset pair (c, d) by
//! fixed-point iteration on exact integers, and derive the structural index,
//! the system Jacobian sparsity pattern and the differentiation schedule.
//! Large systems with block upper-triangular structure can be solved block
//! by block, propagating coupling constraints as parameter vectors; the
//! result is identical to the whole-matrix solve.
//!
//! Entry points:
//!
//! - [`dae::parse_dae`] / [`dae::signature_of`]: text front end
//! - [`sigfile`]: JSON interchange for matrices and block structures
//! - [`analysis::analyze`]: the full pipeline in one call
//! - [`fixed_point`], [`block_solver`], [`btf`], [`assignment`]: the
//!   individual stages
//! - [`oracle`]: brute-force references and seeded instance generators
//!
//! Everything is exact 64-bit integer arithmetic; overflow checks stay on in
//! release builds. The analysis is purely structural: it never evaluates the
//! Jacobian numerically, so systems whose Jacobian is identically singular
//! despite a nonsingular pattern are not detected.

pub mod analysis;
pub mod assignment;
pub mod block_solver;
pub mod btf;
pub mod dae;
pub mod error;
pub mod fixed_point;
pub mod oracle;
pub mod sigfile;
pub mod sigma;

pub use analysis::{analyze, AnalysisReport, Method};
pub use assignment::{find_hvt, transversal_value};
pub use block_solver::block_smallest_offsets;
pub use btf::{fine_btf, validate_btf, BlockStructure, BtfMode};
pub use error::{Error, Result};
pub use fixed_point::{smallest_offsets, smallest_offsets_with_param, SolveStats};
pub use sigma::{Offsets, ParamVector, SignatureMatrix, SigmaSlice, Transversal};
