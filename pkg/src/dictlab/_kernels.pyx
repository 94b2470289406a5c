# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled compute kernels.

Twin of :mod:`dictlab._kernels_py`: same functions, same semantics, and
bit-identical outputs (integer arithmetic, or identical per-element
floating-point operation order). See that module for full docstrings.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

__all__ = [
    "wht_int64",
    "wht_float64",
    "sample_atoms",
    "patterns_from_atoms",
    "accept_count",
    "eval_terms_batch",
]


def wht_int64(cnp.int64_t[::1] a):
    """Unnormalized Walsh–Hadamard transform of an int64 table, in place."""
    cdef Py_ssize_t size = a.shape[0]
    if size & (size - 1):
        raise ValueError("table length must be a power of two")
    cdef Py_ssize_t h = 1, i, j
    cdef cnp.int64_t x, y
    with nogil:
        while h < size:
            i = 0
            while i < size:
                for j in range(i, i + h):
                    x = a[j]
                    y = a[j + h]
                    a[j] = x + y
                    a[j + h] = x - y
                i += 2 * h
            h *= 2
    return np.asarray(a)


def wht_float64(cnp.float64_t[::1] a):
    """Unnormalized Walsh–Hadamard transform of a float64 table, in place."""
    cdef Py_ssize_t size = a.shape[0]
    if size & (size - 1):
        raise ValueError("table length must be a power of two")
    cdef Py_ssize_t h = 1, i, j
    cdef cnp.float64_t x, y
    with nogil:
        while h < size:
            i = 0
            while i < size:
                for j in range(i, i + h):
                    x = a[j]
                    y = a[j + h]
                    a[j] = x + y
                    a[j + h] = x - y
                i += 2 * h
            h *= 2
    return np.asarray(a)


def sample_atoms(const cnp.uint64_t[:, ::1] hi, const cnp.uint64_t[:, ::1] lo,
                 const cnp.uint64_t[::1] thr_hi, const cnp.uint64_t[::1] thr_lo):
    """Map pre-drawn uniform 128-bit integers to atom indices."""
    cdef Py_ssize_t rows = hi.shape[0]
    cdef Py_ssize_t cols = hi.shape[1]
    cdef Py_ssize_t nthr = thr_hi.shape[0]
    out_arr = np.zeros((rows, cols), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] out = out_arr
    cdef Py_ssize_t t, j, i
    cdef cnp.uint64_t uh, ul
    cdef cnp.uint8_t count
    with nogil:
        for t in range(rows):
            for j in range(cols):
                uh = hi[t, j]
                ul = lo[t, j]
                count = 0
                for i in range(nthr):
                    if uh > thr_hi[i] or (uh == thr_hi[i] and ul >= thr_lo[i]):
                        count += 1
                out[t, j] = count
    return out_arr


def patterns_from_atoms(const cnp.uint8_t[:, ::1] atoms, const cnp.uint64_t[::1] atom_bits,
                        const cnp.int8_t[::1] ftable, int k):
    """Evaluate f at the k query points of each atom sequence."""
    cdef Py_ssize_t rows = atoms.shape[0]
    cdef Py_ssize_t n = atoms.shape[1]
    out_arr = np.zeros(rows, dtype=np.uint32)
    cdef cnp.uint32_t[::1] out = out_arr
    cdef Py_ssize_t t, j
    cdef int i
    cdef cnp.uint64_t bits_j
    cdef Py_ssize_t idx
    cdef cnp.uint32_t pattern
    cdef cnp.int8_t sign
    with nogil:
        for t in range(rows):
            pattern = 0
            for i in range(k):
                idx = 0
                for j in range(n):
                    bits_j = atom_bits[atoms[t, j]]
                    if (bits_j >> i) & 1:
                        idx |= (<Py_ssize_t> 1) << j
                sign = ftable[idx]
                if sign < 0:
                    pattern |= (<cnp.uint32_t> 1) << i
            out[t] = pattern
    return out_arr


def accept_count(const cnp.uint32_t[::1] patterns, const cnp.uint8_t[::1] member):
    """Count patterns accepted by a 2^k membership table (entries 0/1)."""
    cdef Py_ssize_t rows = patterns.shape[0]
    cdef long long total = 0
    cdef Py_ssize_t t
    with nogil:
        for t in range(rows):
            total += member[patterns[t]]
    return int(total)


def eval_terms_batch(const cnp.float64_t[:, ::1] points, const cnp.int64_t[::1] masks,
                     const cnp.float64_t[::1] coefs):
    """Evaluate a multilinear polynomial at a batch of real points.

    The bit positions of each mask are flattened once up front, so the hot
    loop multiplies straight through an index list. The floating-point
    order (ascending bits within a term, ascending terms) matches the
    fallback implementation exactly.
    """
    cdef Py_ssize_t rows = points.shape[0]
    cdef Py_ssize_t nterms = masks.shape[0]
    cdef Py_ssize_t t, m
    cdef cnp.int64_t mask
    cdef Py_ssize_t j, p, total
    # flatten the set bits of every mask into one index array plus offsets
    offsets_arr = np.zeros(nterms + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] offsets = offsets_arr
    total = 0
    for m in range(nterms):
        offsets[m] = total
        mask = masks[m]
        while mask:
            mask &= mask - 1
            total += 1
    offsets[nterms] = total
    bits_arr = np.empty(max(total, 1), dtype=np.int64)
    cdef cnp.int64_t[::1] bits = bits_arr
    for m in range(nterms):
        mask = masks[m]
        j = 0
        p = offsets[m]
        while mask:
            if mask & 1:
                bits[p] = j
                p += 1
            mask >>= 1
            j += 1
    out_arr = np.zeros(rows, dtype=np.float64)
    cdef cnp.float64_t[::1] out = out_arr
    cdef cnp.float64_t acc, prod
    with nogil:
        for t in range(rows):
            acc = 0.0
            for m in range(nterms):
                prod = 1.0
                for p in range(offsets[m], offsets[m + 1]):
                    prod = prod * points[t, bits[p]]
                acc = acc + coefs[m] * prod
            out[t] = acc
    return out_arr
