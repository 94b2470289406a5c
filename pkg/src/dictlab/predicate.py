"""The Hadamard predicate H_k and the accepting predicate P_k.

For k = 2^m - 1 (m > 2), coordinates are indexed by a fixed enumeration
w_1..w_k of the nonzero vectors of F_2^m: w_i is the integer i written in
binary. For each nonzero a in F_2^m, the codeword h_a has bit i-1 equal to
the mod-2 dot product a . w_i; H_k is the set of these k strings. Together
with the all-zero string they form a linear code in which every nonzero
codeword has Hamming weight (k+1)/2.

P_k adds the k weight-one strings e_i, giving 2k+1 accepting strings in
total — exactly the strings at Hamming distance at most 1 from 0^k together
with the nonzero codewords.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from dictlab import _backend

__all__ = [
    "GF2Vector",
    "Predicate",
    "PredicateFourier",
    "build_hadamard",
    "build_Pk",
    "membership",
    "fourier_of_predicate",
    "m_from_k",
]

_K_FOURIER_MAX = 20


def m_from_k(k: int) -> int:
    """Recover m from k = 2^m - 1, requiring m > 2."""
    m = (k + 1).bit_length() - 1
    if k < 7 or (1 << m) - 1 != k:
        raise ValueError(f"k={k} is not of the form 2^m - 1 with m > 2")
    return m


@dataclass(frozen=True)
class GF2Vector:
    """A vector in F_2^m stored as an m-bit integer."""

    m: int
    bits: int

    def __post_init__(self):
        if self.m <= 2:
            raise ValueError("dimension m must exceed 2")
        if not 0 <= self.bits < (1 << self.m):
            raise ValueError(f"bits out of range for F_2^{self.m}")

    def dot(self, other: "GF2Vector") -> int:
        """Mod-2 dot product, in {0, 1}."""
        if self.m != other.m:
            raise ValueError("dimension mismatch")
        return int(np.bitwise_count(np.uint64(self.bits & other.bits))) & 1

    def __xor__(self, other: "GF2Vector") -> "GF2Vector":
        if self.m != other.m:
            raise ValueError("dimension mismatch")
        return GF2Vector(self.m, self.bits ^ other.bits)


def build_hadamard(m: int) -> tuple[int, ...]:
    """The k = 2^m - 1 codewords h_a as k-bit integers, a = 1..k in order.

    Bit i-1 of h_a is a . w_i with w_i = i; the strings are pairwise distinct
    and each has Hamming weight (k+1)/2 = 2^{m-1}.
    """
    if m <= 2:
        raise ValueError("m must exceed 2 so that no e_i lands in H_k")
    k = (1 << m) - 1
    out = []
    for a in range(1, k + 1):
        h = 0
        for i in range(1, k + 1):
            if int(np.bitwise_count(np.uint64(a & i))) & 1:
                h |= 1 << (i - 1)
        out.append(h)
    if len(set(out)) != k:
        raise AssertionError("codewords must be pairwise distinct")
    return tuple(out)


@dataclass(frozen=True)
class Predicate:
    """The accepting predicate on k-bit strings, with labeled structure."""

    k: int
    m: int
    accepting: np.ndarray  # uint8 membership table of length 2^k
    hadamard: tuple[int, ...]  # h_1..h_k
    unit_strings: tuple[int, ...]  # e_1..e_k

    def __post_init__(self):
        accepting = np.ascontiguousarray(self.accepting, dtype=np.uint8)
        if accepting.shape != (1 << self.k,):
            raise ValueError(f"membership table must have length 2^{self.k}")
        object.__setattr__(self, "accepting", accepting)
        accepting.setflags(write=False)

    @property
    def size(self) -> int:
        """Number of accepting strings (2k+1)."""
        return int(self.accepting.astype(np.int64).sum())

    @property
    def accepted_strings(self) -> tuple[int, ...]:
        return tuple(int(z) for z in np.nonzero(self.accepting)[0])


def build_Pk(m: int) -> Predicate:
    """Accepting set H_k ∪ {e_1..e_k} ∪ {0^k}; exactly 2k+1 strings."""
    hadamard = build_hadamard(m)
    k = (1 << m) - 1
    units = tuple(1 << (i - 1) for i in range(1, k + 1))
    table = np.zeros(1 << k, dtype=np.uint8)
    table[0] = 1
    for z in hadamard:
        table[z] = 1
    for z in units:
        table[z] = 1
    pred = Predicate(k=k, m=m, accepting=table, hadamard=hadamard, unit_strings=units)
    if pred.size != 2 * k + 1:
        raise AssertionError("accepting set must have exactly 2k+1 strings")
    return pred


def membership(pred: Predicate, z: int) -> bool:
    """Table lookup: is the k-bit string z accepted?"""
    if not 0 <= z < (1 << pred.k):
        raise ValueError(f"z must be a {pred.k}-bit string")
    return bool(pred.accepting[z])


@dataclass(frozen=True)
class PredicateFourier:
    """Exact Fourier coefficients of the 0/1 predicate, denominator 2^k."""

    k: int
    num: np.ndarray  # int64; coefficient of chi_S is num[S] / 2^k

    def __post_init__(self):
        num = np.ascontiguousarray(self.num, dtype=np.int64)
        if num.shape != (1 << self.k,):
            raise ValueError(f"coefficient table must have length 2^{self.k}")
        object.__setattr__(self, "num", num)
        num.setflags(write=False)

    def coeff(self, mask: int) -> Fraction:
        return Fraction(int(self.num[mask]), 1 << self.k)

    @property
    def coeffs_float(self) -> np.ndarray:
        return self.num.astype(np.float64) / float(1 << self.k)

    def parseval(self) -> tuple[Fraction, Fraction]:
        """(sum of squared coefficients, |accepting|/2^k) — equal by Parseval."""
        total = sum(int(v) * int(v) for v in self.num)
        return Fraction(total, 1 << (2 * self.k)), Fraction(int(self.num[0]), 1 << self.k)


def fourier_of_predicate(pred: Predicate) -> PredicateFourier:
    """P_hat(S) = 2^{-k} sum_z P(z) chi_S(z), computed exactly over all 2^k z."""
    if pred.k > _K_FOURIER_MAX:
        raise ValueError(f"exact predicate transform capped at k <= {_K_FOURIER_MAX}")
    num = pred.accepting.astype(np.int64)
    _backend.wht_int64(num)
    return PredicateFourier(k=pred.k, num=num)
