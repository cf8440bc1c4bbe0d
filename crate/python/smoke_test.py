#!/usr/bin/env python3
"""Smoke test for the daestruct_py extension module.

Build the module first, then run this script from anywhere:

    cargo build -p daestruct-py
    python3 python/smoke_test.py

The script locates the built cdylib under target/, stages it under an
importable name in a temporary directory, and exercises the main types and
operations end to end.
"""

import json
import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def stage_module() -> None:
    candidates = [
        REPO / "target" / profile / name
        for profile in ("debug", "release")
        for name in ("libdaestruct_py.so", "libdaestruct_py.dylib", "daestruct_py.dll")
    ]
    built = next((p for p in candidates if p.exists()), None)
    if built is None:
        sys.exit("daestruct_py cdylib not found; run `cargo build -p daestruct-py` first")
    stage = Path(tempfile.mkdtemp(prefix="daestruct_py_"))
    suffix = ".pyd" if built.suffix == ".dll" else ".so"
    shutil.copy2(built, stage / f"daestruct_py{suffix}")
    sys.path.insert(0, str(stage))


stage_module()

import daestruct_py as ds  # noqa: E402


def check(label: str, cond: bool) -> None:
    if not cond:
        sys.exit(f"FAIL: {label}")
    print(f"ok: {label}")


# Text front end and plain solve.
ex1 = (REPO / "data" / "ex1.dae").read_text()
sigma = ds.SignatureMatrix.from_dae(ex1)
check("parsed system is 3x3", sigma.n == 3)
check(
    "signature entries",
    sigma.entries() == [(0, 0, 2), (0, 2, 0), (1, 1, 1), (1, 2, 0), (2, 0, 0), (2, 1, 0)],
)

cells, value = ds.find_hvt(sigma)
check("hvt cells", cells == [(0, 0), (1, 2), (2, 1)])
check("hvt value", value == 2)

c, d, stats = ds.smallest_offsets(sigma)
check("smallest offsets", (c, d) == ([0, 0, 1], [2, 1, 0]))
check("iteration counter within bound", stats.phi_applications <= stats.bound == 2)
check("structural index", ds.structural_index(c, d) == 2)
check("verify_smallest accepts", ds.verify_smallest(sigma, c, d))
check("verify_smallest rejects shift", not ds.verify_smallest(sigma, [1, 1, 2], [3, 2, 1]))
check(
    "jacobian pattern drops one cell",
    ds.jacobian_pattern(sigma, c, d) == [(0, 0), (0, 2), (1, 1), (1, 2), (2, 1)],
)

# Parameterized solve on the same pattern.
c2, d2, _ = ds.smallest_offsets_with_param(sigma, [0, 0, 2])
check("parameterized solve", (c2, d2) == ([1, 2, 3], [3, 3, 2]))

# Block-triangular pipeline on the six-equation system.
ex6 = ds.SignatureMatrix.from_sigfile((REPO / "data" / "ex6.sig").read_text())
bs = ds.fine_btf(ex6)
check("two diagonal blocks", bs.block_sizes == [3, 3])
check("structure validates as fine", ds.validate_btf(ex6, bs, fine=True))

cb, db, per_block = ds.block_smallest_offsets(ex6, bs)
cg, dg, _ = ds.smallest_offsets(ex6)
check("block equals global", (cb, db) == (cg, dg) == ([0, 0, 1, 1, 2, 3], [2, 1, 0, 3, 3, 2]))
check("propagated parameter", per_block[1].param == [0, 0, 2])

# Round trips.
again = ds.SignatureMatrix.from_sigfile(ex6.to_sigfile())
check("sigfile round trip", again == ex6)
bs2 = ds.BlockStructure.from_json(bs.to_json())
check("block structure round trip", bs2.to_json() == bs.to_json())

# Full report as JSON.
report = json.loads(ds.analyze_json(ex6, method="auto"))
check("report method", report["method"] == "block")
check("report index", report["structural_index"] == 4)
check("report offsets", report["offsets"]["c"] == [0, 0, 1, 1, 2, 3])

# Error paths.
singular = ds.SignatureMatrix(2, [(0, 0, 0), (1, 0, 0)])
try:
    ds.smallest_offsets(singular)
    sys.exit("FAIL: singular matrix must raise")
except ds.StructurallySingularError:
    print("ok: singular matrix raises StructurallySingularError")

try:
    ds.SignatureMatrix(2, [(0, 0, 1), (0, 0, 2)])
    sys.exit("FAIL: duplicate entry must raise")
except ValueError:
    print("ok: duplicate entry raises ValueError")

print("smoke test passed")
