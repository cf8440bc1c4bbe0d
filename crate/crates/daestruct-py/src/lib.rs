//! Python bindings: the main types and operations of the structural-analysis
//! core, importable as `daestruct_py`.

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use daestruct::analysis::{analyze, Method};
use daestruct::dae::{parse_dae, signature_of};
use daestruct::sigfile;
use daestruct::{block_solver, btf, fixed_point, Error, ParamVector};

create_exception!(
    daestruct_py,
    StructurallySingularError,
    PyValueError,
    "The sparsity pattern admits no transversal."
);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::StructurallySingular | Error::EmptyColumn(_) => {
            StructurallySingularError::new_err(e.to_string())
        }
        other => PyValueError::new_err(other.to_string()),
    }
}

/// Sparse signature matrix; absent cells mean minus infinity.
#[pyclass(name = "SignatureMatrix", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySignatureMatrix {
    inner: daestruct::SignatureMatrix,
}

#[pymethods]
impl PySignatureMatrix {
    #[new]
    fn new(n: usize, entries: Vec<(usize, usize, i64)>) -> PyResult<Self> {
        if n == 0 {
            return Err(PyValueError::new_err("size must be positive"));
        }
        let inner = daestruct::SignatureMatrix::from_entries(n, entries).map_err(to_py)?;
        Ok(PySignatureMatrix { inner })
    }

    /// Parses the DAE text language and extracts the signature matrix.
    #[staticmethod]
    fn from_dae(text: &str) -> PyResult<Self> {
        let sys = parse_dae(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PySignatureMatrix {
            inner: signature_of(&sys),
        })
    }

    /// Reads the JSON signature-file format.
    #[staticmethod]
    fn from_sigfile(text: &str) -> PyResult<Self> {
        let inner =
            sigfile::read_sigfile(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PySignatureMatrix { inner })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    /// Finite cells as (row, col, sigma) triples in row-major order.
    fn entries(&self) -> Vec<(usize, usize, i64)> {
        self.inner.entries().collect()
    }

    /// Canonical JSON signature-file text.
    fn to_sigfile(&self) -> String {
        sigfile::write_sigfile(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "SignatureMatrix(n={}, entries={})",
            self.inner.n(),
            self.inner.num_entries()
        )
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }
}

/// Row/column permutations plus diagonal block sizes.
#[pyclass(name = "BlockStructure", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyBlockStructure {
    inner: btf::BlockStructure,
}

#[pymethods]
impl PyBlockStructure {
    #[new]
    fn new(row_perm: Vec<usize>, col_perm: Vec<usize>, block_sizes: Vec<usize>) -> PyResult<Self> {
        let inner = btf::BlockStructure::new(row_perm, col_perm, block_sizes).map_err(to_py)?;
        Ok(PyBlockStructure { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = sigfile::read_block_structure(text)
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PyBlockStructure { inner })
    }

    #[getter]
    fn row_perm(&self) -> Vec<usize> {
        self.inner.row_perm().to_vec()
    }

    #[getter]
    fn col_perm(&self) -> Vec<usize> {
        self.inner.col_perm().to_vec()
    }

    #[getter]
    fn block_sizes(&self) -> Vec<usize> {
        self.inner.block_sizes().to_vec()
    }

    fn to_json(&self) -> String {
        sigfile::write_block_structure(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("BlockStructure(block_sizes={:?})", self.inner.block_sizes())
    }
}

/// Iteration counters of one fixed-point solve.
#[pyclass(name = "SolveStats", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySolveStats {
    #[pyo3(get)]
    phi_applications: u64,
    #[pyo3(get)]
    converged: bool,
    #[pyo3(get)]
    bound: u64,
    #[pyo3(get)]
    matching_ops: u64,
}

impl From<fixed_point::SolveStats> for PySolveStats {
    fn from(s: fixed_point::SolveStats) -> Self {
        PySolveStats {
            phi_applications: s.phi_applications,
            converged: s.converged,
            bound: s.bound,
            matching_ops: s.matching_ops,
        }
    }
}

#[pymethods]
impl PySolveStats {
    fn __repr__(&self) -> String {
        format!(
            "SolveStats(phi_applications={}, bound={}, matching_ops={})",
            self.phi_applications, self.bound, self.matching_ops
        )
    }
}

/// One block's share of a block-wise solve.
#[pyclass(name = "BlockSolveStats", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyBlockSolveStats {
    #[pyo3(get)]
    size: usize,
    #[pyo3(get)]
    param: Vec<i64>,
    #[pyo3(get)]
    stats: PySolveStats,
}

/// Highest-value transversal: returns (cells, value) with cells as
/// (row, col) pairs in row order.
#[pyfunction]
fn find_hvt(sigma: &PySignatureMatrix) -> PyResult<(Vec<(usize, usize)>, i64)> {
    let t = daestruct::find_hvt(&sigma.inner).map_err(to_py)?;
    let value = daestruct::transversal_value(&sigma.inner, &t);
    Ok((t.cells(), value))
}

/// Smallest offsets: returns (c, d, stats).
#[pyfunction]
fn smallest_offsets(sigma: &PySignatureMatrix) -> PyResult<(Vec<i64>, Vec<i64>, PySolveStats)> {
    let (off, stats) = fixed_point::smallest_offsets(&sigma.inner).map_err(to_py)?;
    let (c, d) = off.into_parts();
    Ok((c, d, stats.into()))
}

/// Smallest offsets subject to the lower bound d >= p.
#[pyfunction]
fn smallest_offsets_with_param(
    sigma: &PySignatureMatrix,
    p: Vec<i64>,
) -> PyResult<(Vec<i64>, Vec<i64>, PySolveStats)> {
    let p = ParamVector::new(p).map_err(to_py)?;
    let (off, stats) =
        fixed_point::smallest_offsets_with_param(&sigma.inner, &p).map_err(to_py)?;
    let (c, d) = off.into_parts();
    Ok((c, d, stats.into()))
}

/// True iff (c, d) is exactly the smallest dual-optimal pair of the matrix.
#[pyfunction]
fn verify_smallest(sigma: &PySignatureMatrix, c: Vec<i64>, d: Vec<i64>) -> PyResult<bool> {
    match daestruct::Offsets::new(c, d) {
        Ok(off) => Ok(fixed_point::verify_smallest(&sigma.inner, &off)),
        Err(_) => Ok(false),
    }
}

/// Fine block upper-triangular structure.
#[pyfunction]
fn fine_btf(sigma: &PySignatureMatrix) -> PyResult<PyBlockStructure> {
    let inner = btf::fine_btf(&sigma.inner).map_err(to_py)?;
    Ok(PyBlockStructure { inner })
}

/// Checks a block structure against a matrix; `fine=True` additionally
/// requires irreducible diagonal blocks.
#[pyfunction]
#[pyo3(signature = (sigma, bs, fine = true))]
fn validate_btf(sigma: &PySignatureMatrix, bs: &PyBlockStructure, fine: bool) -> bool {
    let mode = if fine {
        btf::BtfMode::Fine
    } else {
        btf::BtfMode::Coarse
    };
    btf::validate_btf(&sigma.inner, &bs.inner, mode)
}

/// Block-wise smallest offsets: returns (c, d, per_block_stats) in original
/// index order; identical to `smallest_offsets`.
#[pyfunction]
fn block_smallest_offsets(
    sigma: &PySignatureMatrix,
    bs: &PyBlockStructure,
) -> PyResult<(Vec<i64>, Vec<i64>, Vec<PyBlockSolveStats>)> {
    let (off, per_block) =
        block_solver::block_smallest_offsets(&sigma.inner, &bs.inner).map_err(to_py)?;
    let (c, d) = off.into_parts();
    let per_block = per_block
        .into_iter()
        .map(|b| PyBlockSolveStats {
            size: b.size,
            param: b.param,
            stats: b.stats.into(),
        })
        .collect();
    Ok((c, d, per_block))
}

/// Structural index of an offset pair.
#[pyfunction]
fn structural_index(c: Vec<i64>, d: Vec<i64>) -> PyResult<i64> {
    let off = daestruct::Offsets::new(c, d).map_err(to_py)?;
    Ok(daestruct::analysis::structural_index(&off))
}

/// Jacobian sparsity pattern: cells (i, j) where d_j - c_i equals sigma_ij.
#[pyfunction]
fn jacobian_pattern(
    sigma: &PySignatureMatrix,
    c: Vec<i64>,
    d: Vec<i64>,
) -> PyResult<Vec<(usize, usize)>> {
    if c.len() != sigma.inner.n() || d.len() != sigma.inner.n() {
        return Err(PyValueError::new_err("offset length must equal n"));
    }
    let off = daestruct::Offsets::new(c, d).map_err(to_py)?;
    Ok(daestruct::analysis::jacobian_pattern(&sigma.inner, &off))
}

/// Runs the full analysis and returns the report as a JSON string
/// (method: "global" | "block" | "auto").
#[pyfunction]
#[pyo3(signature = (sigma, method = "auto"))]
fn analyze_json(sigma: &PySignatureMatrix, method: &str) -> PyResult<String> {
    let method: Method = method.parse().map_err(PyValueError::new_err)?;
    let report = analyze(&sigma.inner, method).map_err(to_py)?;
    Ok(serde_json::to_string(&report).expect("report serializes"))
}

#[pymodule]
fn daestruct_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySignatureMatrix>()?;
    m.add_class::<PyBlockStructure>()?;
    m.add_class::<PySolveStats>()?;
    m.add_class::<PyBlockSolveStats>()?;
    m.add(
        "StructurallySingularError",
        m.py().get_type::<StructurallySingularError>(),
    )?;
    m.add_function(wrap_pyfunction!(find_hvt, m)?)?;
    m.add_function(wrap_pyfunction!(smallest_offsets, m)?)?;
    m.add_function(wrap_pyfunction!(smallest_offsets_with_param, m)?)?;
    m.add_function(wrap_pyfunction!(verify_smallest, m)?)?;
    m.add_function(wrap_pyfunction!(fine_btf, m)?)?;
    m.add_function(wrap_pyfunction!(validate_btf, m)?)?;
    m.add_function(wrap_pyfunction!(block_smallest_offsets, m)?)?;
    m.add_function(wrap_pyfunction!(structural_index, m)?)?;
    m.add_function(wrap_pyfunction!(jacobian_pattern, m)?)?;
    m.add_function(wrap_pyfunction!(analyze_json, m)?)?;
    Ok(())
}
