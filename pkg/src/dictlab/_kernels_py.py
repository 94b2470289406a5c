"""Pure-numpy compute kernels.

This module is the fallback twin of the compiled extension ``dictlab._kernels``;
both expose the same functions with identical semantics and — by construction —
bit-identical outputs, because every function either works in integers or
performs the same floating-point operations per output element in the same
order. Backend selection happens in :mod:`dictlab._backend`.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "wht_int64",
    "wht_float64",
    "sample_atoms",
    "patterns_from_atoms",
    "accept_count",
    "eval_terms_batch",
]


def _butterfly(a: np.ndarray) -> np.ndarray:
    """In-place Walsh–Hadamard butterfly, O(n·2^n); returns ``a``."""
    size = a.shape[0]
    if size & (size - 1):
        raise ValueError("table length must be a power of two")
    h = 1
    while h < size:
        view = a.reshape(-1, 2, h)
        top = view[:, 0, :].copy()
        bot = view[:, 1, :]
        view[:, 0, :] = top + bot
        view[:, 1, :] = top - bot
        h *= 2
    return a


def wht_int64(a: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh–Hadamard transform of an int64 table, in place.

    Output entry T equals sum_x a[x]*chi_T(x); with |a[x]| <= 1 and table
    length <= 2^24 all intermediates fit comfortably in int64.
    """
    if a.dtype != np.int64 or a.ndim != 1:
        raise TypeError("expected a 1-d int64 array")
    return _butterfly(a)


def wht_float64(a: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh–Hadamard transform of a float64 table, in place."""
    if a.dtype != np.float64 or a.ndim != 1:
        raise TypeError("expected a 1-d float64 array")
    return _butterfly(a)


def sample_atoms(
    hi: np.ndarray, lo: np.ndarray, thr_hi: np.ndarray, thr_lo: np.ndarray
) -> np.ndarray:
    """Map pre-drawn uniform 128-bit integers to atom indices.

    ``hi``/``lo`` hold the high and low 64-bit halves of u ~ Uniform[0, 2^128);
    ``thr_hi``/``thr_lo`` hold the 128-bit cumulative-mass thresholds of the
    first K-1 atoms. The selected atom index equals #{i : threshold_i <= u},
    so each atom i is hit with probability (T_i - T_{i-1}) / 2^128.
    """
    atoms = np.zeros(hi.shape, dtype=np.uint8)
    for thi, tlo in zip(thr_hi, thr_lo):
        ge = (hi > thi) | ((hi == thi) & (lo >= tlo))
        atoms += ge
    return atoms


def patterns_from_atoms(
    atoms: np.ndarray, atom_bits: np.ndarray, ftable: np.ndarray, k: int
) -> np.ndarray:
    """Evaluate f at the k query points of each atom sequence.

    ``atoms`` has shape (T, n): row t lists the atoms drawn at the n
    coordinate positions. Query point i collects bit i of every atom
    (little-endian across positions j), giving an index into ``ftable``
    (values in {-1,+1}); output bit i of pattern t is 0 for +1 and 1 for -1.
    """
    rows, n = atoms.shape
    bits = atom_bits[atoms]  # (T, n) uint64 atom strings
    pow2 = (np.int64(1) << np.arange(n, dtype=np.int64))
    patterns = np.zeros(rows, dtype=np.uint32)
    for i in range(k):
        taken = ((bits >> np.uint64(i)) & np.uint64(1)).astype(np.int64)
        idx = taken @ pow2
        sign = ftable[idx]
        bit = ((1 - sign.astype(np.int32)) >> 1).astype(np.uint32)
        patterns |= bit << np.uint32(i)
    return patterns


def accept_count(patterns: np.ndarray, member: np.ndarray) -> int:
    """Count patterns accepted by a 2^k membership table (entries 0/1)."""
    return int(member[patterns].astype(np.int64).sum())


def eval_terms_batch(
    points: np.ndarray, masks: np.ndarray, coefs: np.ndarray
) -> np.ndarray:
    """Evaluate a multilinear polynomial at a batch of real points.

    ``points`` has shape (T, n); ``masks``/``coefs`` list the monomials:
    output[t] = sum_m coefs[m] * prod_{j in masks[m]} points[t, j], with the
    product taken over bits of the mask in ascending order and the sum over
    monomials in ascending index order (fixed so both backends agree bitwise).
    """
    rows = points.shape[0]
    out = np.zeros(rows, dtype=np.float64)
    for mask, coef in zip(masks, coefs):
        prod = np.ones(rows, dtype=np.float64)
        m = int(mask)
        j = 0
        while m:
            if m & 1:
                prod = prod * points[:, j]
            m >>= 1
            j += 1
        out += coef * prod
    return out
