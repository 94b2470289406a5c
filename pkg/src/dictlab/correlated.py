"""Efron-Stein decompositions and Markov operators on finite product spaces.

A :class:`FiniteProductSpace` is a product of finitely many finite
probability spaces. The Efron-Stein decomposition writes any table
g = sum_S g_S where g_S depends only on the coordinates in S and every
component integrates to zero against any conditioning that misses part of S;
it is computed by inclusion-exclusion over conditional means,
g_S = sum_{T subset S} (-1)^{|S minus T|} E[g | x_T].

A :class:`MarkovOperator` is the conditional expectation of a correlated
pair (X, Y): (Ug)(x) = E[g(Y) | X = x], applied per coordinate on product
spaces. The module verifies the two structural facts used downstream: U
commutes with the Efron-Stein decomposition, and ||U(g_S)||_2 <=
rho^{|S|} ||g_S||_2 where rho bounds every coordinate's correlation.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from dictlab.distribution import TestDistribution, _projections

__all__ = [
    "TABLE_CAP",
    "FiniteProductSpace",
    "EfronSteinDecomposition",
    "MarkovOperator",
    "efron_stein",
    "markov_apply",
    "verify_commutation",
    "verify_contraction",
]

TABLE_CAP = 1 << 20  # largest |Omega|^n value table the module will build


@dataclass(frozen=True)
class FiniteProductSpace:
    """Product of n finite probability spaces given by marginal vectors."""

    probs: tuple[np.ndarray, ...]

    def __post_init__(self):
        frozen = []
        for p in self.probs:
            arr = np.ascontiguousarray(p, dtype=np.float64)
            if arr.ndim != 1 or arr.size < 1:
                raise ValueError("each marginal must be a nonempty vector")
            if np.any(arr < 0) or abs(arr.sum() - 1.0) > 1e-12:
                raise ValueError("each marginal must be a probability vector")
            arr.setflags(write=False)
            frozen.append(arr)
        object.__setattr__(self, "probs", tuple(frozen))
        if self.table_size > TABLE_CAP:
            raise ValueError(
                f"value tables of size {self.table_size} exceed the cap {TABLE_CAP}"
            )

    @property
    def n(self) -> int:
        return len(self.probs)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(p.size for p in self.probs)

    @property
    def table_size(self) -> int:
        size = 1
        for p in self.probs:
            size *= p.size
        return size

    @staticmethod
    def power(prob: np.ndarray, n: int) -> "FiniteProductSpace":
        return FiniteProductSpace(tuple(prob for _ in range(n)))

    def weight_table(self) -> np.ndarray:
        """The full product measure as an n-dimensional table."""
        w = np.array(1.0)
        for p in self.probs:
            w = np.multiply.outer(w, p)
        return w.reshape(self.shape)

    def norm2(self, table: np.ndarray) -> float:
        """L2 norm under the product measure."""
        return float(np.sqrt(np.sum(self.weight_table() * np.asarray(table) ** 2)))

    def validate_table(self, table: np.ndarray) -> np.ndarray:
        arr = np.ascontiguousarray(table, dtype=np.float64)
        if arr.shape != self.shape:
            raise ValueError(f"table shape {arr.shape} != space shape {self.shape}")
        return arr


def _conditional_mean(space: FiniteProductSpace, table: np.ndarray, mask: int) -> np.ndarray:
    """E[g | x_T] for T given as a bitmask, broadcast back to full shape."""
    out = table
    for axis in range(space.n):
        if not (mask >> axis) & 1:
            p = space.probs[axis]
            moved = np.tensordot(out, p, axes=([axis], [0]))
            out = np.expand_dims(moved, axis)
    return np.broadcast_to(out, space.shape)


@dataclass(frozen=True)
class EfronSteinDecomposition:
    """Components g_S indexed by subset bitmask over the n coordinates."""

    space: FiniteProductSpace
    components: tuple[np.ndarray, ...]

    def component(self, mask: int) -> np.ndarray:
        return self.components[mask]

    def reconstruct(self) -> np.ndarray:
        total = np.zeros(self.space.shape)
        for comp in self.components:
            total = total + comp
        return total

    def norms(self) -> dict[int, float]:
        return {mask: self.space.norm2(c) for mask, c in enumerate(self.components)}

    # -- invariant measurements (all should be ~0) --------------------------
    def reconstruction_deviation(self, table: np.ndarray) -> float:
        return float(np.max(np.abs(self.reconstruct() - table)))

    def locality_deviation(self) -> float:
        """Max over S of how much g_S varies along coordinates outside S."""
        worst = 0.0
        for mask, comp in enumerate(self.components):
            for axis in range(self.space.n):
                if not (mask >> axis) & 1:
                    spread = comp.max(axis=axis) - comp.min(axis=axis)
                    worst = max(worst, float(np.max(np.abs(spread))))
        return worst

    def conditional_mean_deviation(self) -> float:
        """Max |E[g_S | x_B = a]| over S, B not containing S, fixings a."""
        worst = 0.0
        for mask, comp in enumerate(self.components):
            if mask == 0:
                continue
            for b in range(1 << self.space.n):
                if b & mask == mask:  # B contains S: conditional need not vanish
                    continue
                cm = _conditional_mean(self.space, comp, b)
                worst = max(worst, float(np.max(np.abs(cm))))
        return worst


def efron_stein(table: np.ndarray, space: FiniteProductSpace) -> EfronSteinDecomposition:
    """Inclusion-exclusion decomposition g_S = sum_{T<=S} (-1)^{|S\\T|} E[g|x_T]."""
    arr = space.validate_table(table)
    n = space.n
    cond = [_conditional_mean(space, arr, mask) for mask in range(1 << n)]
    components = []
    for s_mask in range(1 << n):
        comp = np.zeros(space.shape)
        t_mask = s_mask
        while True:
            sign = -1 if (bin(s_mask ^ t_mask).count("1") & 1) else 1
            comp = comp + sign * cond[t_mask]
            if t_mask == 0:
                break
            t_mask = (t_mask - 1) & s_mask
        components.append(comp)
    return EfronSteinDecomposition(space=space, components=tuple(components))


@dataclass(frozen=True)
class MarkovOperator:
    """Conditional expectation E[g(Y)|X=x] of one correlated coordinate pair."""

    joint: np.ndarray  # (|Omega1|, |Omega2|), entries sum to 1

    def __post_init__(self):
        joint = np.ascontiguousarray(self.joint, dtype=np.float64)
        if joint.ndim != 2:
            raise ValueError("joint table must be 2-d")
        if np.any(joint < 0) or abs(joint.sum() - 1.0) > 1e-12:
            raise ValueError("joint table must be a probability table")
        object.__setattr__(self, "joint", joint)
        joint.setflags(write=False)

    @property
    def marginal_x(self) -> np.ndarray:
        return self.joint.sum(axis=1)

    @property
    def marginal_y(self) -> np.ndarray:
        return self.joint.sum(axis=0)

    def kernel(self) -> np.ndarray:
        """Row-stochastic K[x, y] = Pr[Y = y | X = x]."""
        mx = self.marginal_x
        if np.any(mx == 0):
            raise ValueError("cannot condition on a zero-mass x value")
        return self.joint / mx[:, None]

    def rho(self) -> float:
        """Maximal correlation: second singular value of the normalized joint."""
        mx, my = self.marginal_x, self.marginal_y
        pos = my > 0
        a = self.joint[:, pos] / np.sqrt(np.outer(mx, my[pos]))
        svals = np.linalg.svd(a, compute_uv=False)
        return float(svals[1]) if svals.size > 1 else 0.0

    @staticmethod
    def from_distribution_split(dist: TestDistribution, i: int) -> "MarkovOperator":
        """The (X = coordinate i, Y = projection of the rest) joint of D_{k,eps}."""
        joint_map = _projections(dist, i)
        rights = sorted({r for x in (0, 1) for r in joint_map[x]})
        table = np.zeros((2, len(rights)))
        for x in (0, 1):
            for col, r in enumerate(rights):
                table[x, col] = float(joint_map[x].get(r, Fraction(0)))
        return MarkovOperator(joint=table)

    def x_space(self, n: int) -> FiniteProductSpace:
        return FiniteProductSpace.power(self.marginal_x, n)

    def y_space(self, n: int) -> FiniteProductSpace:
        return FiniteProductSpace.power(self.marginal_y, n)


def markov_apply(op: MarkovOperator, table: np.ndarray) -> np.ndarray:
    """Apply U per coordinate: g on Omega2^n -> Ug on Omega1^n."""
    arr = np.asarray(table, dtype=np.float64)
    kernel = op.kernel()
    out = arr
    for axis in range(arr.ndim):
        moved = np.tensordot(kernel, out, axes=([1], [axis]))
        out = np.moveaxis(moved, 0, axis)
    return out


def verify_commutation(
    op: MarkovOperator, table: np.ndarray, n: int | None = None
) -> float:
    """max_S ||(Ug)_S - U(g_S)||_2 — zero when U commutes with the decomposition."""
    arr = np.asarray(table, dtype=np.float64)
    n = arr.ndim if n is None else n
    space_y = op.y_space(n)
    space_x = op.x_space(n)
    dec_y = efron_stein(arr, space_y)
    dec_x = efron_stein(markov_apply(op, arr), space_x)
    worst = 0.0
    for mask in range(1 << n):
        diff = dec_x.component(mask) - markov_apply(op, dec_y.component(mask))
        worst = max(worst, space_x.norm2(diff))
    return worst


def verify_contraction(
    op: MarkovOperator,
    table: np.ndarray,
    rho: float | None = None,
    slack: float = 1e-10,
) -> tuple[bool, dict[int, tuple[float, float]]]:
    """Check ||U(g_S)||_2 <= rho^{|S|} ||g_S||_2 + slack for every subset S.

    ``rho`` defaults to the operator's own maximal correlation; for
    heterogeneous products pass the max over the coordinates' correlations.
    Returns (all-pass, {mask: (lhs, rhs)}).
    """
    arr = np.asarray(table, dtype=np.float64)
    n = arr.ndim
    rho_val = op.rho() if rho is None else float(rho)
    space_y = op.y_space(n)
    space_x = op.x_space(n)
    dec_y = efron_stein(arr, space_y)
    report: dict[int, tuple[float, float]] = {}
    ok = True
    for mask in range(1 << n):
        comp = dec_y.component(mask)
        lhs = space_x.norm2(markov_apply(op, comp))
        rhs = rho_val ** bin(mask).count("1") * space_y.norm2(comp)
        report[mask] = (lhs, rhs)
        if lhs > rhs + slack:
            ok = False
    return ok, report
