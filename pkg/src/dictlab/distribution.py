"""The almost-pairwise-independent test distribution on P_k's accepting strings.

For 0 < eps <= 1/k^2 and alpha = (k-1)*eps, the distribution D_{k,eps} puts

* mass (1/(1-alpha)) * (1/(k+1) - alpha) on the all-zero string,
* mass (1/(1-alpha)) * (1/(k+1) - eps) on each codeword h_i,
* mass eps/(1-alpha) on each weight-one string e_i.

All masses are exact rationals; the module verifies the moment structure
exactly (uniform marginals, pairwise 0/1 covariance -eps/(2(1-alpha))),
checks support connectivity per coordinate, and computes the correlation
rho of each coordinate-vs-rest split in closed form. Sampling maps uniform
128-bit integers through fixed-point cumulative thresholds, so empirical
frequencies match the exact masses to within 2^-120 per atom.

Note on the minimum atom: eps/(1-alpha) (the almost-independence parameter
``beta``) is the smallest atom mass iff eps <= 1/(k(k+1)); for larger eps —
including the boundary value eps = 1/k^2 — the all-zero atom is strictly
lighter. ``min_mass`` always reports the true minimum.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import sqrt

import numpy as np

from dictlab import _backend
from dictlab.predicate import Predicate, build_Pk, m_from_k

__all__ = [
    "Rational",
    "TestDistribution",
    "MomentReport",
    "build_D",
    "marginal",
    "covariance",
    "connectivity_check",
    "correlation_rho",
    "rho_squared",
    "atom_moments",
    "sample",
    "sample_atoms_batch",
    "moment_report",
    "spawn_streams",
]

Rational = Fraction  # arbitrary-precision, canonical form (den > 0, gcd = 1)


def spawn_streams(seed, count: int) -> list[np.random.Generator]:
    """Deterministic per-stream RNG fan-out from one master seed."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


@dataclass(frozen=True)
class TestDistribution:
    """Exact atom table of D_{k,eps}, atoms in the fixed order [0, h_1..h_k, e_1..e_k]."""

    k: int
    epsilon: Fraction
    predicate: Predicate
    atoms: tuple[tuple[int, Fraction], ...]

    @property
    def alpha(self) -> Fraction:
        return (self.k - 1) * self.epsilon

    @property
    def beta(self) -> Fraction:
        """The almost-independence parameter eps/(1-alpha).

        Equals the minimum atom mass iff eps <= 1/(k(k+1)); see module
        docstring. Exposed separately from :attr:`min_mass` for that reason.
        """
        return self.epsilon / (1 - self.alpha)

    @property
    def min_mass(self) -> Fraction:
        """The true minimum atom mass."""
        return min(mass for _, mass in self.atoms)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(bits for bits, _ in self.atoms)

    @property
    def masses(self) -> tuple[Fraction, ...]:
        return tuple(mass for _, mass in self.atoms)

    def mass_of(self, bits: int) -> Fraction:
        for b, mass in self.atoms:
            if b == bits:
                return mass
        return Fraction(0)

    def thresholds_128(self) -> tuple[np.ndarray, np.ndarray]:
        """Cumulative thresholds floor(cum_i * 2^128) as (hi, lo) uint64 arrays.

        Thresholds cover the first 2k atoms; a uniform u in [0, 2^128) selects
        atom #{i : T_i <= u}, giving per-atom probability error < 2^-128.
        """
        hi, lo = [], []
        cum = Fraction(0)
        for _, mass in self.atoms[:-1]:
            cum += mass
            t = (cum.numerator << 128) // cum.denominator
            hi.append(t >> 64)
            lo.append(t & ((1 << 64) - 1))
        return (
            np.array(hi, dtype=np.uint64),
            np.array(lo, dtype=np.uint64),
        )

    def atom_bits_array(self) -> np.ndarray:
        return np.array(self.support, dtype=np.uint64)


def build_D(k: int, eps) -> TestDistribution:
    """Construct D_{k,eps} with exact rational masses.

    ``eps`` may be a Fraction, an int, or a string like ``"1/49"``; it must
    satisfy 0 < eps <= 1/k^2 and k must be 2^m - 1 with m > 2.
    """
    m = m_from_k(k)
    eps = Fraction(eps)
    if not 0 < eps <= Fraction(1, k * k):
        raise ValueError(f"eps={eps} outside the admissible range (0, 1/{k * k}]")
    pred = build_Pk(m)
    alpha = (k - 1) * eps
    scale = 1 / (1 - alpha)
    mass_zero = scale * (Fraction(1, k + 1) - alpha)
    mass_h = scale * (Fraction(1, k + 1) - eps)
    mass_e = scale * eps
    atoms = [(0, mass_zero)]
    atoms += [(h, mass_h) for h in pred.hadamard]
    atoms += [(e, mass_e) for e in pred.unit_strings]
    if sum(mass for _, mass in atoms) != 1:
        raise AssertionError("atom masses must sum to exactly 1")
    if min(mass for _, mass in atoms) <= 0:
        raise AssertionError("all atom masses must be positive")
    return TestDistribution(k=k, epsilon=eps, predicate=pred, atoms=tuple(atoms))


def marginal(dist: TestDistribution, i: int) -> tuple[Fraction, Fraction]:
    """(Pr[x_i = 0], Pr[x_i = 1]) for coordinate i in 1..k — exactly (1/2, 1/2)."""
    if not 1 <= i <= dist.k:
        raise IndexError(f"coordinate {i} outside 1..{dist.k}")
    p1 = sum(
        (mass for bits, mass in dist.atoms if (bits >> (i - 1)) & 1), Fraction(0)
    )
    return 1 - p1, p1


def covariance(dist: TestDistribution, i: int, j: int, encoding: str = "01") -> Fraction:
    """Exact covariance of coordinates i != j.

    ``01`` treats the bits as 0/1 values; ``pm1`` maps bit b to (-1)^b,
    which multiplies the covariance by 4.
    """
    if i == j:
        raise ValueError("i and j must differ (use the marginal for variance)")
    for c in (i, j):
        if not 1 <= c <= dist.k:
            raise IndexError(f"coordinate {c} outside 1..{dist.k}")
    e_i = marginal(dist, i)[1]
    e_j = marginal(dist, j)[1]
    e_ij = sum(
        (
            mass
            for bits, mass in dist.atoms
            if ((bits >> (i - 1)) & 1) and ((bits >> (j - 1)) & 1)
        ),
        Fraction(0),
    )
    cov01 = e_ij - e_i * e_j
    if encoding == "01":
        return cov01
    if encoding == "pm1":
        return 4 * cov01
    raise ValueError(f"unknown encoding {encoding!r}")


def atom_moments(dist: TestDistribution, coords) -> Fraction:
    """E[prod_{i in A} x_i] in the +/-1 encoding, exact over the 2k+1 atoms.

    ``coords`` is an iterable of 1-based coordinates or a ready bitmask.
    """
    if isinstance(coords, (int, np.integer)):
        mask = int(coords)
        if not 0 <= mask < (1 << dist.k):
            raise ValueError("bitmask out of range")
    else:
        mask = 0
        for i in coords:
            if not 1 <= i <= dist.k:
                raise IndexError(f"coordinate {i} outside 1..{dist.k}")
            mask |= 1 << (i - 1)
    total = Fraction(0)
    for bits, mass in dist.atoms:
        sign = -1 if (int(np.bitwise_count(np.uint64(bits & mask))) & 1) else 1
        total += sign * mass
    return total


def _projections(dist: TestDistribution, i: int) -> dict[int, dict[int, Fraction]]:
    """Joint masses mu[x_i][projection of the other k-1 coordinates]."""
    joint: dict[int, dict[int, Fraction]] = {0: {}, 1: {}}
    low = (1 << (i - 1)) - 1
    for bits, mass in dist.atoms:
        x = (bits >> (i - 1)) & 1
        rest = (bits & low) | ((bits >> i) << (i - 1))
        joint[x][rest] = joint[x].get(rest, Fraction(0)) + mass
    return joint


def connectivity_check(dist: TestDistribution, i: int) -> bool:
    """Is the bipartite support graph of (x_i, rest) connected?

    Vertices are the realized values {0, 1} on the left and the realized
    (k-1)-bit projections on the right; edges are atoms with positive mass.
    """
    if not 1 <= i <= dist.k:
        raise IndexError(f"coordinate {i} outside 1..{dist.k}")
    joint = _projections(dist, i)
    left = [x for x in (0, 1) if joint[x]]
    right = sorted({r for x in left for r in joint[x]})
    if not left:
        return True
    right_index = {r: j for j, r in enumerate(right)}
    seen_left = {left[0]}
    seen_right: set[int] = set()
    frontier_left = [left[0]]
    while frontier_left:
        next_right = []
        for x in frontier_left:
            for r in joint[x]:
                if right_index[r] not in seen_right:
                    seen_right.add(right_index[r])
                    next_right.append(r)
        frontier_left = []
        for r in next_right:
            for x in left:
                if r in joint[x] and x not in seen_left:
                    seen_left.add(x)
                    frontier_left.append(x)
    return len(seen_left) == len(left) and len(seen_right) == len(right)


def rho_squared(dist: TestDistribution, i: int) -> Fraction:
    """Exact rho^2 of the (x_i, rest) split.

    With A[x, y] = mu(x, y)/sqrt(mu1(x) mu2(y)), rho is the second singular
    value of A; since the left alphabet has two symbols, rho^2 equals
    trace(A A^T) - 1 = sum_{x,y} mu(x,y)^2/(mu1(x) mu2(y)) - 1 exactly.
    """
    joint = _projections(dist, i)
    mu1 = {x: sum(joint[x].values(), Fraction(0)) for x in joint}
    mu2: dict[int, Fraction] = {}
    for x in joint:
        for r, mass in joint[x].items():
            mu2[r] = mu2.get(r, Fraction(0)) + mass
    if any(v == 0 for v in mu1.values()):
        raise ValueError("degenerate marginal on the two-point side")
    tr = Fraction(0)
    for x in joint:
        for r, mass in joint[x].items():
            tr += mass * mass / (mu1[x] * mu2[r])
    return tr - 1


def correlation_rho(dist: TestDistribution, i: int) -> float:
    """rho of the (x_i, rest) split as a float (sqrt of the exact rho^2)."""
    return sqrt(float(rho_squared(dist, i)))


@dataclass(frozen=True)
class MomentReport:
    """Exact moments plus per-coordinate correlation and connectivity."""

    k: int
    epsilon: Fraction
    means_pm1: tuple[Fraction, ...]
    cov01: Fraction
    cov_pm1: Fraction
    rho: tuple[float, ...]
    connected: tuple[bool, ...]
    min_mass: Fraction
    total_mass: Fraction


def moment_report(dist: TestDistribution) -> MomentReport:
    k = dist.k
    return MomentReport(
        k=k,
        epsilon=dist.epsilon,
        means_pm1=tuple(atom_moments(dist, [i]) for i in range(1, k + 1)),
        cov01=covariance(dist, 1, 2, "01"),
        cov_pm1=covariance(dist, 1, 2, "pm1"),
        rho=tuple(correlation_rho(dist, i) for i in range(1, k + 1)),
        connected=tuple(connectivity_check(dist, i) for i in range(1, k + 1)),
        min_mass=dist.min_mass,
        total_mass=sum(dist.masses, Fraction(0)),
    )


def sample_atoms_batch(
    dist: TestDistribution, n: int, trials: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw atoms for ``trials`` independent runs of n coordinate positions.

    Returns a (trials, n) uint8 array of atom indices into the fixed atom
    order. Randomness is consumed as two uint64 arrays (high halves first,
    then low halves), making the stream identical across kernel backends.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    thr_hi, thr_lo = dist.thresholds_128()
    hi = rng.integers(0, 1 << 64, size=(trials, n), dtype=np.uint64)
    lo = rng.integers(0, 1 << 64, size=(trials, n), dtype=np.uint64)
    return _backend.sample_atoms(hi, lo, thr_hi, thr_lo)


def sample(dist: TestDistribution, n: int, rng: np.random.Generator) -> np.ndarray:
    """One test draw: the k query strings, each of n bits.

    Entry i of the returned uint64 array is the i-th query string; its bit j
    is bit i of the atom drawn at coordinate position j.
    """
    atoms = sample_atoms_batch(dist, n, 1, rng)[0]
    bits = dist.atom_bits_array()[atoms]  # (n,) uint64 atom strings
    out = np.zeros(dist.k, dtype=np.uint64)
    for j in range(n):
        b = int(bits[j])
        for i in range(dist.k):
            if (b >> i) & 1:
                out[i] |= np.uint64(1 << j)
    return out
