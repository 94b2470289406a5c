"""Cross-backend parity: the compiled and pure-Python kernels must agree
bit for bit — integer outputs exactly, float outputs as identical bytes —
because all randomness is drawn before the kernels run."""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from dictlab import _backend
from dictlab import _kernels_py

cython = pytest.importorskip(
    "dictlab._kernels", reason="compiled backend not built"
)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def test_backend_selected_and_reports():
    assert _backend.BACKEND in ("cython", "python")


def test_wht_int64_parity(rng):
    for n in (0, 1, 4, 10):
        table = rng.integers(-5, 6, size=1 << n).astype(np.int64)
        a = table.copy()
        b = table.copy()
        out_c = cython.wht_int64(a)
        out_p = _kernels_py.wht_int64(b)
        assert np.array_equal(out_c, out_p)
        assert out_c.dtype == np.int64


def test_wht_float64_bit_identical(rng):
    for n in (1, 6, 12):
        table = rng.standard_normal(1 << n)
        a = table.copy()
        b = table.copy()
        out_c = cython.wht_float64(a)
        out_p = _kernels_py.wht_float64(b)
        assert out_c.tobytes() == out_p.tobytes()


def test_wht_rejects_non_power_of_two():
    bad = np.zeros(3, dtype=np.int64)
    with pytest.raises(ValueError):
        cython.wht_int64(bad)
    with pytest.raises(ValueError):
        _kernels_py.wht_int64(bad.copy())


def test_sample_atoms_parity(rng):
    hi = rng.integers(0, 2**63, size=(500, 4), dtype=np.uint64) * 2
    lo = rng.integers(0, 2**63, size=(500, 4), dtype=np.uint64) * 2 + 1
    thr_hi = np.sort(rng.integers(0, 2**63, size=14, dtype=np.uint64) * 2)
    thr_lo = rng.integers(0, 2**63, size=14, dtype=np.uint64)
    out_c = cython.sample_atoms(hi, lo, thr_hi, thr_lo)
    out_p = _kernels_py.sample_atoms(hi, lo, thr_hi, thr_lo)
    assert np.array_equal(out_c, out_p)
    assert out_c.dtype == np.uint8


def test_sample_atoms_threshold_edges():
    # u == threshold counts as "at or above": atom index increments
    hi = np.array([[5]], dtype=np.uint64)
    lo = np.array([[7]], dtype=np.uint64)
    thr_hi = np.array([5, 5, 6], dtype=np.uint64)
    thr_lo = np.array([7, 8, 0], dtype=np.uint64)
    for impl in (cython, _kernels_py):
        out = impl.sample_atoms(hi, lo, thr_hi, thr_lo)
        assert out[0, 0] == 1  # >= (5,7) yes; >= (5,8) no; >= (6,0) no


def test_patterns_from_atoms_parity(rng):
    k = 7
    atom_bits = rng.integers(0, 1 << k, size=15, dtype=np.uint64)
    atoms = rng.integers(0, 15, size=(1000, 5), dtype=np.uint8)
    ftable = rng.choice(np.array([-1, 1], dtype=np.int8), size=1 << 5)
    out_c = cython.patterns_from_atoms(atoms, atom_bits, ftable, k)
    out_p = _kernels_py.patterns_from_atoms(atoms, atom_bits, ftable, k)
    assert np.array_equal(out_c, out_p)


def test_accept_count_parity(rng):
    patterns = rng.integers(0, 128, size=5000, dtype=np.uint32)
    member = rng.integers(0, 2, size=128, dtype=np.uint8)
    assert cython.accept_count(patterns, member) == _kernels_py.accept_count(
        patterns, member
    )


def test_eval_terms_batch_bit_identical(rng):
    points = rng.standard_normal((400, 9))
    masks = np.sort(rng.choice(1 << 9, size=40, replace=False)).astype(np.int64)
    coefs = rng.standard_normal(40)
    out_c = cython.eval_terms_batch(points, masks, coefs)
    out_p = _kernels_py.eval_terms_batch(points, masks, coefs)
    assert out_c.tobytes() == out_p.tobytes()


def test_backend_env_override_selects_python():
    code = (
        "import os; os.environ['DICTLAB_BACKEND']='python'; "
        "from dictlab import _backend; print(_backend.BACKEND)"
    )
    out = subprocess.run(
        [sys.executable, "-c", code], capture_output=True, text=True, check=True
    )
    assert out.stdout.strip() == "python"


def test_monte_carlo_run_identical_across_backends(tmp_path):
    """End-to-end: the same seeded test run gives byte-identical JSON under
    either backend, because kernels see identical pre-drawn randomness."""
    outputs = []
    for backend in ("cython", "python"):
        env = dict(os.environ, DICTLAB_BACKEND=backend)
        p = subprocess.run(
            [
                sys.executable,
                "-m",
                "dictlab.cli",
                "test",
                "run",
                "--fn",
                "builtin:random:5",
                "--n",
                "7",
                "--trials",
                "20000",
                "--seed",
                "99",
            ],
            capture_output=True,
            text=True,
            env=env,
            check=True,
        )
        outputs.append(p.stdout)
    assert outputs[0] == outputs[1]
    assert json.loads(outputs[0])["trials"] == 20000
