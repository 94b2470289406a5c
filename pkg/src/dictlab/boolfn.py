"""Boolean functions on the hypercube and their Fourier-side machinery.

Conventions, fixed once and used everywhere:

* A function table has length 2^n; index x encodes the input bits
  little-endian. Input bit 0 maps to the real value +1 and bit 1 to -1, so
  the character chi_T(x) is simply the product of the +/-1 values of the
  coordinates in T.
* Coordinates are numbered 1..n in the public API (bit i-1 of an index).
* A function is *folded* when f(-x) = -f(x) for every x, i.e. complementing
  all input bits flips the sign. Folding forces all even-size Fourier
  coefficients (in particular the mean) to zero.

Fourier coefficients of a +/-1 table are exact dyadic rationals; the
:class:`FourierExpansion` carries int64 numerators (denominator 2^n)
alongside the float view so exactness claims can be tested exactly.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from dictlab import _backend

__all__ = [
    "N_MAX",
    "BooleanFunction",
    "FourierExpansion",
    "MultilinearPoly",
    "wht",
    "inverse_wht",
    "influence",
    "degree_influence",
    "is_quasirandom",
    "noise",
    "truncate",
    "high_part",
    "eval_multilinear",
    "eval_multilinear_batch",
    "norm",
    "fold_enforce",
    "is_folded",
    "read_table",
    "write_table",
    "subset_sizes",
]

N_MAX = 24


def _check_n(n: int) -> None:
    if not 1 <= n <= N_MAX:
        raise ValueError(f"coordinate count n={n} outside supported range 1..{N_MAX}")


def subset_sizes(n: int) -> np.ndarray:
    """Popcount of every subset mask 0..2^n-1 (|T| for each table index)."""
    return np.bitwise_count(np.arange(1 << n, dtype=np.uint32)).astype(np.int64)


@dataclass(frozen=True)
class BooleanFunction:
    """A +/-1-valued function given by its full truth table."""

    n: int
    values: np.ndarray  # int8, length 2^n, entries in {-1,+1}
    folded: bool = False

    def __post_init__(self):
        _check_n(self.n)
        values = np.ascontiguousarray(self.values, dtype=np.int8)
        if values.shape != (1 << self.n,):
            raise ValueError(f"value table must have length 2^{self.n}")
        if not np.all(np.abs(values) == 1):
            raise ValueError("every table entry must be exactly -1 or +1")
        object.__setattr__(self, "values", values)
        values.setflags(write=False)
        if self.folded and not is_folded(self):
            raise ValueError("function flagged folded but f(-x) != -f(x) somewhere")

    # -- constructors ------------------------------------------------------
    @staticmethod
    def dictator(n: int, i: int) -> "BooleanFunction":
        """f(x) = x_i (coordinate i in 1..n)."""
        _check_n(n)
        if not 1 <= i <= n:
            raise ValueError(f"coordinate {i} outside 1..{n}")
        x = np.arange(1 << n)
        values = np.where((x >> (i - 1)) & 1, -1, 1).astype(np.int8)
        return BooleanFunction(n, values, folded=True)

    @staticmethod
    def parity(n: int, coords: Iterable[int] | None = None) -> "BooleanFunction":
        """chi_T with T given by 1-based coordinates (default: all of [n])."""
        _check_n(n)
        mask = 0
        for i in [*coords] if coords is not None else range(1, n + 1):
            if not 1 <= i <= n:
                raise ValueError(f"coordinate {i} outside 1..{n}")
            mask |= 1 << (i - 1)
        x = np.arange(1 << n)
        values = np.where(np.bitwise_count(x & mask) & 1, -1, 1).astype(np.int8)
        folded = bool(np.bitwise_count(np.uint32(mask)) & 1)
        return BooleanFunction(n, values, folded=folded)

    @staticmethod
    def majority(n: int) -> "BooleanFunction":
        """Majority of the n input bits (n odd); bit 1 counts toward -1."""
        _check_n(n)
        if n % 2 == 0:
            raise ValueError("majority needs odd n")
        ones = np.bitwise_count(np.arange(1 << n, dtype=np.uint32))
        values = np.where(ones * 2 > n, -1, 1).astype(np.int8)
        return BooleanFunction(n, values, folded=True)

    @staticmethod
    def constant(n: int, value: int = 1) -> "BooleanFunction":
        _check_n(n)
        if value not in (-1, 1):
            raise ValueError("constant value must be -1 or +1")
        return BooleanFunction(n, np.full(1 << n, value, dtype=np.int8))

    @staticmethod
    def tribes(n: int, width: int = 2) -> "BooleanFunction":
        """OR of ANDs over consecutive disjoint blocks of ``width`` bits.

        A tribe fires when all its bits are 1; the output is -1 when some
        tribe fires, else +1. Trailing coordinates (n mod width) are ignored.
        """
        _check_n(n)
        if width < 1:
            raise ValueError("width must be >= 1")
        x = np.arange(1 << n)
        fired = np.zeros(1 << n, dtype=bool)
        for start in range(0, n - width + 1, width):
            block = ((1 << width) - 1) << start
            fired |= (x & block) == block
        return BooleanFunction(n, np.where(fired, -1, 1).astype(np.int8))

    @staticmethod
    def random(n: int, rng: np.random.Generator) -> "BooleanFunction":
        """Uniformly random +/-1 table."""
        _check_n(n)
        bits = rng.integers(0, 2, size=1 << n, dtype=np.int8)
        return BooleanFunction(n, (1 - 2 * bits).astype(np.int8))

    @staticmethod
    def random_folded(n: int, rng: np.random.Generator) -> "BooleanFunction":
        """Uniformly random folded function.

        Representatives are the inputs with bit 0 equal to 0 (the half-cube
        of even indices); their complements get the negated values.
        """
        _check_n(n)
        half = rng.integers(0, 2, size=1 << (n - 1), dtype=np.int8)
        half = (1 - 2 * half).astype(np.int8)
        values = np.empty(1 << n, dtype=np.int8)
        idx = np.arange(1 << n)
        reps = (idx & 1) == 0
        values[reps] = half
        full = (1 << n) - 1
        values[~reps] = -values[(idx ^ full)[~reps]]
        return BooleanFunction(n, values, folded=True)

    # -- basic queries -----------------------------------------------------
    def __call__(self, x: int) -> int:
        return int(self.values[x])


def is_folded(f: BooleanFunction) -> bool:
    """True iff f(-x) = -f(x) for all 2^n inputs."""
    full = (1 << f.n) - 1
    comp = np.arange(1 << f.n) ^ full
    return bool(np.all(f.values[comp] == -f.values))


def fold_enforce(f: BooleanFunction) -> BooleanFunction:
    """Make f folded, keeping its values on the bit-0==0 half-cube.

    Inputs whose first bit (bit 0 of the index) is 0 are the representatives;
    each complementary input gets the negated representative value.
    """
    values = f.values.copy()
    idx = np.arange(1 << f.n)
    full = (1 << f.n) - 1
    odd = (idx & 1) == 1
    values[odd] = -values[(idx ^ full)[odd]]
    return BooleanFunction(f.n, values, folded=True)


@dataclass(frozen=True)
class FourierExpansion:
    """Fourier coefficients f_hat(T), indexed by subset bitmask T.

    ``num`` (when present) holds exact int64 numerators with denominator 2^n,
    so f_hat(T) = num[T] / 2^n exactly; ``coeffs`` is the float64 view.
    """

    n: int
    coeffs: np.ndarray
    num: np.ndarray | None = None

    def __post_init__(self):
        _check_n(self.n)
        coeffs = np.ascontiguousarray(self.coeffs, dtype=np.float64)
        if coeffs.shape != (1 << self.n,):
            raise ValueError(f"coefficient table must have length 2^{self.n}")
        object.__setattr__(self, "coeffs", coeffs)
        coeffs.setflags(write=False)
        if self.num is not None:
            num = np.ascontiguousarray(self.num, dtype=np.int64)
            if num.shape != coeffs.shape:
                raise ValueError("numerator table length mismatch")
            object.__setattr__(self, "num", num)
            num.setflags(write=False)

    @property
    def exact(self) -> bool:
        return self.num is not None

    @property
    def degree(self) -> int:
        """Max |T| with a nonzero coefficient (0 for the zero function)."""
        table = self.num if self.num is not None else self.coeffs
        nz = np.nonzero(table)[0]
        if nz.size == 0:
            return 0
        return int(subset_sizes(self.n)[nz].max())

    def coeff_fraction(self, mask: int) -> Fraction:
        if self.num is None:
            raise ValueError("expansion carries no exact numerators")
        return Fraction(int(self.num[mask]), 1 << self.n)

    def parseval_exact(self) -> tuple[int, int]:
        """(sum of squared numerators, 4^n); equal iff the source was +/-1."""
        if self.num is None:
            raise ValueError("expansion carries no exact numerators")
        total = sum(int(v) * int(v) for v in self.num)
        return total, 1 << (2 * self.n)


def wht(f: BooleanFunction) -> FourierExpansion:
    """Walsh–Hadamard transform: f_hat(T) = 2^{-n} sum_x f(x) chi_T(x)."""
    num = f.values.astype(np.int64)
    _backend.wht_int64(num)
    coeffs = num.astype(np.float64) / float(1 << f.n)
    return FourierExpansion(f.n, coeffs, num=num)


def wht_real(n: int, table: np.ndarray) -> FourierExpansion:
    """Walsh–Hadamard transform of an arbitrary real table (float path)."""
    _check_n(n)
    values = np.ascontiguousarray(table, dtype=np.float64).copy()
    if values.shape != (1 << n,):
        raise ValueError(f"table must have length 2^{n}")
    _backend.wht_float64(values)
    return FourierExpansion(n, values / float(1 << n))


def inverse_wht(expansion: FourierExpansion):
    """Evaluate sum_T f_hat(T) chi_T at every vertex.

    Returns a :class:`BooleanFunction` when the reconstruction is exactly
    +/-1-valued, else the float64 value table. Exact (integer) arithmetic is
    used whenever the expansion carries numerators.
    """
    if expansion.num is not None:
        acc = expansion.num.copy()
        _backend.wht_int64(acc)
        den = 1 << expansion.n
        if np.all(acc % den == 0):
            ints = acc // den
            if np.all(np.abs(ints) == 1):
                return BooleanFunction(expansion.n, ints.astype(np.int8))
            return ints.astype(np.float64)
        return acc.astype(np.float64) / float(den)
    acc = expansion.coeffs.copy()
    _backend.wht_float64(acc)
    if np.all(np.abs(np.abs(acc) - 1.0) < 1e-12):
        return BooleanFunction(expansion.n, np.sign(acc).astype(np.int8))
    return acc


def influence(expansion: FourierExpansion, i: int) -> float:
    """Inf_i(f) = sum over T containing i of f_hat(T)^2 (i in 1..n)."""
    if not 1 <= i <= expansion.n:
        raise IndexError(f"coordinate {i} outside 1..{expansion.n}")
    masks = np.arange(1 << expansion.n)
    sel = (masks >> (i - 1)) & 1 == 1
    return float(np.sum(expansion.coeffs[sel] ** 2))


def degree_influence(expansion: FourierExpansion, i: int, d: int) -> float:
    """Inf_i^{<=d}(f): the influence restricted to |T| <= d."""
    if d < 0:
        raise ValueError("degree bound must be >= 0")
    if not 1 <= i <= expansion.n:
        raise IndexError(f"coordinate {i} outside 1..{expansion.n}")
    masks = np.arange(1 << expansion.n)
    sel = (((masks >> (i - 1)) & 1) == 1) & (subset_sizes(expansion.n) <= d)
    return float(np.sum(expansion.coeffs[sel] ** 2))


def is_quasirandom(expansion: FourierExpansion, d: int, tau: float) -> bool:
    """True iff every degree-d influence is at most tau."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    return max(
        degree_influence(expansion, i, d) for i in range(1, expansion.n + 1)
    ) <= tau


@dataclass(frozen=True)
class MultilinearPoly:
    """A real multilinear polynomial, dense coefficients by subset mask."""

    n: int
    coeffs: np.ndarray
    degree_bound: int | None = None

    def __post_init__(self):
        _check_n(self.n)
        coeffs = np.ascontiguousarray(self.coeffs, dtype=np.float64)
        if coeffs.shape != (1 << self.n,):
            raise ValueError(f"coefficient table must have length 2^{self.n}")
        object.__setattr__(self, "coeffs", coeffs)
        coeffs.setflags(write=False)
        deg = self.degree
        if self.degree_bound is None:
            object.__setattr__(self, "degree_bound", deg)
        elif deg > self.degree_bound:
            raise ValueError(
                f"coefficients have degree {deg} > bound {self.degree_bound}"
            )

    @property
    def degree(self) -> int:
        nz = np.nonzero(self.coeffs)[0]
        if nz.size == 0:
            return 0
        return int(subset_sizes(self.n)[nz].max())

    @staticmethod
    def from_fourier(expansion: FourierExpansion) -> "MultilinearPoly":
        return MultilinearPoly(expansion.n, expansion.coeffs.copy())

    @staticmethod
    def random(
        n: int, degree: int, rng: np.random.Generator, unit_norm: bool = True
    ) -> "MultilinearPoly":
        """Gaussian coefficients on all |T| <= degree; optionally ||P||_2 = 1."""
        _check_n(n)
        sizes = subset_sizes(n)
        coeffs = np.zeros(1 << n)
        sel = sizes <= degree
        coeffs[sel] = rng.standard_normal(int(sel.sum()))
        if unit_norm:
            coeffs /= np.sqrt(np.sum(coeffs**2))
        return MultilinearPoly(n, coeffs, degree_bound=degree)

    def terms(self) -> tuple[np.ndarray, np.ndarray]:
        """(masks, coefficients) of the nonzero monomials, ascending mask."""
        nz = np.nonzero(self.coeffs)[0].astype(np.int64)
        return nz, self.coeffs[nz]


def noise(poly: MultilinearPoly, gamma: float) -> MultilinearPoly:
    """Noise operator: scale each coefficient by (1-gamma)^{|T|}."""
    if not 0 <= gamma <= 1:
        raise ValueError("gamma must lie in [0, 1]")
    sizes = subset_sizes(poly.n)
    return MultilinearPoly(
        poly.n, poly.coeffs * (1.0 - gamma) ** sizes, degree_bound=poly.degree_bound
    )


def truncate(poly: MultilinearPoly, d: int) -> MultilinearPoly:
    """Low part: keep the coefficients with |T| <= d."""
    if d < 0:
        raise ValueError("degree bound must be >= 0")
    keep = subset_sizes(poly.n) <= d
    return MultilinearPoly(poly.n, np.where(keep, poly.coeffs, 0.0))


def high_part(poly: MultilinearPoly, d: int) -> MultilinearPoly:
    """High part: keep the coefficients with |T| > d."""
    if d < 0:
        raise ValueError("degree bound must be >= 0")
    keep = subset_sizes(poly.n) > d
    return MultilinearPoly(poly.n, np.where(keep, poly.coeffs, 0.0))


def eval_multilinear(poly: MultilinearPoly, z: Sequence[float]) -> float:
    """sum_T c_T prod_{i in T} z_i at a single real point."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (poly.n,):
        raise ValueError(f"point must have length {poly.n}")
    masks, coefs = poly.terms()
    return float(_backend.eval_terms_batch(z.reshape(1, -1), masks, coefs)[0])


def eval_multilinear_batch(poly: MultilinearPoly, points: np.ndarray) -> np.ndarray:
    """Evaluate at many points; ``points`` has shape (rows, n)."""
    points = np.ascontiguousarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != poly.n:
        raise ValueError(f"points must have shape (rows, {poly.n})")
    masks, coefs = poly.terms()
    return _backend.eval_terms_batch(points, masks, coefs)


def norm(
    poly: MultilinearPoly,
    p,
    measure: str = "uniform",
    trials: int = 100_000,
    rng: np.random.Generator | None = None,
) -> float:
    """L_p norm E[|P|^p]^{1/p}; p even or infinity.

    ``uniform`` enumerates all 2^n hypercube vertices exactly; ``gaussian``
    is a Monte Carlo estimate over i.i.d. standard normal inputs.
    """
    infinite = p == np.inf or p == "inf"
    if not infinite and (int(p) != p or p < 2 or p % 2 != 0):
        raise ValueError("p must be an even integer >= 2 or infinity")
    if measure == "uniform":
        acc = poly.coeffs.copy()
        _backend.wht_float64(acc)  # values at all vertices
        if infinite:
            return float(np.max(np.abs(acc)))
        return float(np.mean(np.abs(acc) ** p) ** (1.0 / p))
    if measure == "gaussian":
        if infinite:
            raise ValueError("infinity norm unsupported for the Gaussian measure")
        if rng is None:
            raise ValueError("gaussian measure needs an rng")
        pts = rng.standard_normal((trials, poly.n))
        vals = eval_multilinear_batch(poly, pts)
        return float(np.mean(np.abs(vals) ** p) ** (1.0 / p))
    raise ValueError(f"unknown measure {measure!r}")


def read_table(path: str | os.PathLike) -> BooleanFunction:
    """Read the truth-table format: line 1 ``n=<int>``, line 2 2^n of {+,-}."""
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        body = fh.readline().strip()
    if not header.startswith("n="):
        raise ValueError(f"bad header {header!r}; expected n=<int>")
    n = int(header[2:])
    _check_n(n)
    if len(body) != 1 << n:
        raise ValueError(f"expected {1 << n} table characters, got {len(body)}")
    if set(body) - {"+", "-"}:
        raise ValueError("table characters must be '+' or '-'")
    values = np.frombuffer(body.encode("ascii"), dtype=np.uint8)
    table = np.where(values == ord("+"), 1, -1).astype(np.int8)
    f = BooleanFunction(n, table)
    return BooleanFunction(n, table, folded=True) if is_folded(f) else f


def write_table(f: BooleanFunction, path: str | os.PathLike) -> None:
    """Write the truth-table format (round-trips bit-exactly)."""
    chars = np.where(f.values > 0, ord("+"), ord("-")).astype(np.uint8)
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"n={f.n}\n")
        fh.write(chars.tobytes().decode("ascii"))
        fh.write("\n")
