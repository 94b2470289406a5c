"""Kernel backend selection.

Two interchangeable kernel implementations exist: the compiled extension
``dictlab._kernels`` (Cython) and the pure-numpy ``dictlab._kernels_py``.
They produce bit-identical outputs; the compiled one is simply faster on the
tight per-trial loops. Selection order:

1. the ``DICTLAB_BACKEND`` environment variable (``cython``, ``python`` or
   ``auto``), if set;
2. otherwise the compiled extension when importable, else the numpy fallback.
"""

from __future__ import annotations

import os

_requested = os.environ.get("DICTLAB_BACKEND", "auto").strip().lower() or "auto"

if _requested == "cython":
    from dictlab import _kernels as _impl

    BACKEND = "cython"
elif _requested in ("python", "numpy"):
    from dictlab import _kernels_py as _impl

    BACKEND = "python"
elif _requested == "auto":
    try:
        from dictlab import _kernels as _impl

        BACKEND = "cython"
    except ImportError:
        from dictlab import _kernels_py as _impl

        BACKEND = "python"
else:
    raise RuntimeError(
        f"DICTLAB_BACKEND={_requested!r} not recognized; "
        "use 'cython', 'python' or 'auto'"
    )

wht_int64 = _impl.wht_int64
wht_float64 = _impl.wht_float64
sample_atoms = _impl.sample_atoms
patterns_from_atoms = _impl.patterns_from_atoms
accept_count = _impl.accept_count
eval_terms_batch = _impl.eval_terms_batch

__all__ = [
    "BACKEND",
    "wht_int64",
    "wht_float64",
    "sample_atoms",
    "patterns_from_atoms",
    "accept_count",
    "eval_terms_batch",
]
