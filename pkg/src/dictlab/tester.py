"""The k-query dictatorship tests, exact acceptance machinery, and schedule.

The basic test T_{k,delta} draws, independently for each of the n coordinate
positions, an accepting string of the predicate according to D_{k,delta},
assembles the k query points, evaluates f at them, and accepts iff the k
outputs (encoded +1 -> bit 0, -1 -> bit 1) form an accepting string. Every
dictator passes with probability exactly 1 because each atom lies in the
accepting set.

Exact acceptance probabilities are computed by streaming enumeration of the
(2k+1)^n atom sequences with exact rational masses; the Fourier route
recombines the same pattern weights through the predicate's exact Fourier
coefficients, so the digit-for-digit agreement of the two routes checks the
whole decomposition sum_S P_hat(S) E_S with E_S = E[prod_{i in S} f(x_i)].

The multi-level test T'_{k,eps} replaces delta by a level eps_j drawn
uniformly from a schedule. The literal schedule shrinks double-exponentially
(eps_{j+1} = err * 2^{-(k^10/(err^3 eps_j))^k}); levels past the first exist
only in log space, so the schedule object keeps exact rationals where
possible, arbitrary-precision log2 values elsewhere, and refuses to
materialize floats when |log2 eps| > 900 (``symbolic_only``). Practical
schedules take an explicit decreasing list of rational levels and are fully
sampleable. Either way, the interval bookkeeping (S_j = s_{j+1}, disjoint
open intervals) and the identity gamma_j * d_{j,1} = 2k log(k/err) are
checkable exactly; the identity is carried symbolically as a rational
coefficient times powers of s_j and L = log(k/err).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

from dictlab import _backend
from dictlab.boolfn import (
    BooleanFunction,
    MultilinearPoly,
    noise,
    truncate,
    wht,
)
from dictlab.distribution import (
    TestDistribution,
    atom_moments,
    build_D,
    correlation_rho,
    sample_atoms_batch,
)
from dictlab.predicate import fourier_of_predicate

__all__ = [
    "Z99",
    "AcceptanceReport",
    "run_T",
    "exact_acceptance",
    "fourier_acceptance",
    "acceptance_with_decomposition",
    "correlation_term",
    "SymCoef",
    "ScheduleLevel",
    "TestSchedule",
    "build_schedule",
    "run_Tprime",
    "soundness_certificate",
    "SoundnessCertificate",
    "lowdeg_gap_diagnostic",
    "LowDegGapReport",
    "wilson_interval",
]

Z99 = 2.5758293035489004  # two-sided 99% normal quantile
ENUM_BUDGET_DEFAULT = 10**8
LOG2_FLOAT_LIMIT = 900  # |log2 x| beyond this: refuse float materialization


def wilson_interval(accepted: int, trials: int, z: float = Z99) -> tuple[float, float]:
    """(center, halfwidth) of the Wilson score interval for a proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    if not 0 <= accepted <= trials:
        raise ValueError("accepted count must lie in 0..trials")
    phat = accepted / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = (z / denom) * math.sqrt(
        phat * (1.0 - phat) / trials + z * z / (4.0 * trials * trials)
    )
    return center, half


@dataclass(frozen=True)
class AcceptanceReport:
    """Acceptance estimate of one test run, with optional exact value."""

    estimate: float
    trials: int
    accepted: int
    ci_center: float
    ci99: float  # halfwidth of the 99% Wilson interval around ci_center
    baseline: Fraction  # (2k+1)/2^k
    exact: Fraction | None = None
    e_s_by_size: dict[int, float] | None = None  # max |E_S| per |S|, when computed

    @property
    def covers_exact(self) -> bool:
        if self.exact is None:
            raise ValueError("report carries no exact value")
        return abs(float(self.exact) - self.ci_center) <= self.ci99


def _as_fraction(value) -> Fraction:
    if isinstance(value, float):
        raise TypeError("pass the level parameter as an exact rational, not a float")
    return Fraction(value)


def _coords_to_mask(k: int, coords) -> int:
    if isinstance(coords, (int, np.integer)):
        mask = int(coords)
        if not 0 <= mask < (1 << k):
            raise ValueError("bitmask out of range")
        return mask
    mask = 0
    for i in coords:
        if not 1 <= i <= k:
            raise IndexError(f"coordinate {i} outside 1..{k}")
        mask |= 1 << (i - 1)
    return mask


def _warn_if_unfolded(f: BooleanFunction) -> None:
    from dictlab.boolfn import is_folded

    if not is_folded(f):
        warnings.warn(
            "function under test is not folded; soundness guarantees assume folding",
            stacklevel=3,
        )


def run_T(
    f: BooleanFunction,
    k: int,
    delta,
    trials: int,
    rng: np.random.Generator,
    batch: int = 1 << 16,
) -> AcceptanceReport:
    """Monte Carlo run of the k-query test at level delta."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    _warn_if_unfolded(f)
    dist = build_D(k, _as_fraction(delta))
    accepted = 0
    member = dist.predicate.accepting
    atom_bits = dist.atom_bits_array()
    done = 0
    while done < trials:
        step = min(batch, trials - done)
        atoms = sample_atoms_batch(dist, f.n, step, rng)
        patterns = _backend.patterns_from_atoms(atoms, atom_bits, f.values, k)
        accepted += _backend.accept_count(patterns, member)
        done += step
    center, half = wilson_interval(accepted, trials)
    return AcceptanceReport(
        estimate=accepted / trials,
        trials=trials,
        accepted=accepted,
        ci_center=center,
        ci99=half,
        baseline=Fraction(2 * k + 1, 1 << k),
    )


# -- exact enumeration ------------------------------------------------------


def _check_budget(k: int, n: int, budget: int) -> None:
    if (2 * k + 1) ** n > budget:
        raise ValueError(
            f"enumeration of {(2 * k + 1) ** n} atom sequences exceeds the "
            f"budget of {budget}"
        )


def _pattern_weights(
    f: BooleanFunction, dist: TestDistribution, budget: int = ENUM_BUDGET_DEFAULT
) -> tuple[list[int], int]:
    """Exact distribution of the k-bit output pattern over all atom sequences.

    Returns (numerators, den): Pr[pattern = b] = numerators[b] / den exactly.
    Sequences are streamed in chunks; masses depend only on the digit
    multiset, so exact integer arithmetic runs once per realized
    (pattern, multiset) pair instead of once per sequence.
    """
    n = f.n
    k = dist.k
    _check_budget(k, n, budget)
    n_atoms = 2 * k + 1
    total = n_atoms**n
    den_atom = math.lcm(*(mass.denominator for mass in dist.masses))
    atom_num = [int(mass * den_atom) for mass in dist.masses]
    den = den_atom**n
    atom_bits = dist.atom_bits_array()
    weights = [0] * (1 << k)
    chunk = 1 << 18
    for start in range(0, total, chunk):
        stop = min(start + chunk, total)
        idx = np.arange(start, stop, dtype=np.int64)
        digits = np.empty((idx.size, n), dtype=np.uint8)
        rem = idx
        for j in range(n):
            digits[:, j] = rem % n_atoms
            rem = rem // n_atoms
        patterns = _backend.patterns_from_atoms(digits, atom_bits, f.values, k)
        key = patterns.astype(np.int64)
        sorted_digits = np.sort(digits, axis=1)
        for j in range(n):
            key = key * n_atoms + sorted_digits[:, j]
        uniq, counts = np.unique(key, return_counts=True)
        for kv, count in zip(uniq.tolist(), counts.tolist()):
            mass_num = 1
            v = kv
            for _ in range(n):
                mass_num *= atom_num[v % n_atoms]
                v //= n_atoms
            weights[v] += count * mass_num
    return weights, den


def _object_butterfly(values: list[int]) -> list[int]:
    """Walsh–Hadamard butterfly over Python integers (exact, any size)."""
    a = list(values)
    size = len(a)
    h = 1
    while h < size:
        for i in range(0, size, 2 * h):
            for j in range(i, i + h):
                x, y = a[j], a[j + h]
                a[j] = x + y
                a[j + h] = x - y
        h *= 2
    return a


def exact_acceptance(
    f: BooleanFunction,
    k: int,
    delta,
    budget: int = ENUM_BUDGET_DEFAULT,
) -> Fraction:
    """Exact acceptance probability by direct membership enumeration."""
    dist = build_D(k, _as_fraction(delta))
    weights, den = _pattern_weights(f, dist, budget)
    member = dist.predicate.accepting
    num = sum(w for b, w in enumerate(weights) if member[b])
    if sum(weights) != den:
        raise AssertionError("pattern weights must sum to exactly 1")
    return Fraction(num, den)


def fourier_acceptance(
    f: BooleanFunction,
    k: int,
    delta,
    budget: int = ENUM_BUDGET_DEFAULT,
) -> Fraction:
    """Exact acceptance via the predicate's Fourier expansion.

    Computes (2k+1)/2^k + sum_{S != empty} P_hat(S) E_S with
    E_S = E[prod_{i in S} f(x_i)], all in exact rational arithmetic; must
    agree digit-for-digit with :func:`exact_acceptance`.
    """
    dist = build_D(k, _as_fraction(delta))
    weights, den = _pattern_weights(f, dist, budget)
    e_nums = _object_butterfly(weights)  # E_S = e_nums[S] / den
    pf = fourier_of_predicate(dist.predicate)
    total = sum(int(pf.num[s]) * e_nums[s] for s in range(1 << k))
    return Fraction(total, den << k)


def acceptance_with_decomposition(
    f: BooleanFunction,
    k: int,
    delta,
    budget: int = ENUM_BUDGET_DEFAULT,
) -> AcceptanceReport:
    """Exact acceptance plus the per-|S| magnitudes of the E_S terms."""
    dist = build_D(k, _as_fraction(delta))
    weights, den = _pattern_weights(f, dist, budget)
    e_nums = _object_butterfly(weights)
    pf = fourier_of_predicate(dist.predicate)
    total = sum(int(pf.num[s]) * e_nums[s] for s in range(1 << k))
    exact = Fraction(total, den << k)
    by_size: dict[int, float] = {}
    for s in range(1, 1 << k):
        size = bin(s).count("1")
        mag = abs(e_nums[s] / den)
        if mag > by_size.get(size, Fraction(0)):
            by_size[size] = mag
    return AcceptanceReport(
        estimate=float(exact),
        trials=0,
        accepted=0,
        ci_center=float(exact),
        ci99=0.0,
        baseline=Fraction(2 * k + 1, 1 << k),
        exact=exact,
        e_s_by_size={size: float(v) for size, v in sorted(by_size.items())},
    )


def correlation_term(
    f: BooleanFunction,
    dist: TestDistribution,
    coords,
    method: str = "exact",
    trials: int = 100_000,
    rng: np.random.Generator | None = None,
    budget: int = ENUM_BUDGET_DEFAULT,
):
    """E_S = E[prod_{i in S} f(x_i)] over the product test distribution.

    ``exact``: direct enumeration (Fraction). ``character``: closed form for
    f = +/- chi_T, namely (+/-1)^{|S|} * atom_moments(D, S)^{|T|} (Fraction).
    ``monte-carlo``: sampled estimate, returns (estimate, sigma).
    """
    mask = _coords_to_mask(dist.k, coords)
    if mask == 0:
        raise ValueError("S must be nonempty")
    if method == "exact":
        weights, den = _pattern_weights(f, dist, budget)
        num = 0
        for b, w in enumerate(weights):
            if w:
                sign = -1 if (bin(b & mask).count("1") & 1) else 1
                num += sign * w
        return Fraction(num, den)
    if method == "character":
        expansion = wht(f)
        nz = np.nonzero(expansion.num)[0]
        if nz.size != 1 or abs(int(expansion.num[nz[0]])) != (1 << f.n):
            raise ValueError("character method requires f = +/- chi_T")
        t_mask = int(nz[0])
        sign = 1 if int(expansion.num[t_mask]) > 0 else -1
        s_size = bin(mask).count("1")
        return Fraction(sign) ** s_size * atom_moments(dist, mask) ** bin(
            t_mask
        ).count("1")
    if method == "monte-carlo":
        if rng is None:
            raise ValueError("monte-carlo method needs an rng")
        atoms = sample_atoms_batch(dist, f.n, trials, rng)
        patterns = _backend.patterns_from_atoms(
            atoms, dist.atom_bits_array(), f.values, dist.k
        )
        signs = 1.0 - 2.0 * (
            np.bitwise_count(patterns & np.uint32(mask)).astype(np.float64) % 2.0
        )
        return float(signs.mean()), float(signs.std(ddof=1) / math.sqrt(trials))
    raise ValueError(f"unknown method {method!r}")


# -- the level schedule ------------------------------------------------------


@dataclass(frozen=True)
class SymCoef:
    """An exact quantity of the form coef * s_j^s_pow * L^L_pow.

    ``s_j`` and ``L = log(k/err)`` stay symbolic, so products and equality
    checks are pure rational arithmetic regardless of how astronomically
    small the level parameters are.
    """

    coef: Fraction
    s_pow: int = 0
    L_pow: int = 0

    def __mul__(self, other: "SymCoef") -> "SymCoef":
        return SymCoef(
            self.coef * other.coef,
            self.s_pow + other.s_pow,
            self.L_pow + other.L_pow,
        )


def _log2_fraction(x: Fraction, prec: int = 128) -> mpmath.mpf:
    with mpmath.workprec(prec):
        return mpmath.log(mpmath.mpf(x.numerator) / mpmath.mpf(x.denominator), 2)


@dataclass(frozen=True)
class ScheduleLevel:
    """One level of the schedule; missing fields were not materializable.

    ``eps`` is the exact rational level parameter when one is representable,
    else None; ``log2_eps`` is an arbitrary-precision log2 when at least the
    logarithm is representable. ``symbolic_only`` levels refuse float
    materialization of eps (|log2 eps| > 900). The interval for level j >= 1
    is (s_j, S_j) with s_j = L / eps_{j-1}^2 and S_j = s_{j+1}; level 0
    carries only its S boundary. ``s_coef`` stores the exact rational
    s_j / L when available, similarly ``S_coef``.
    """

    j: int
    eps: Fraction | None
    log2_eps: mpmath.mpf | None
    symbolic_only: bool
    # exact integer F with log2(eps_j) = log2(err) - F, when the recurrence
    # exponent is integral (level 1 of the exact recurrence)
    shift_int: int | None = None
    alpha: Fraction | None = None
    beta: Fraction | None = None
    log2_beta: mpmath.mpf | None = None
    s_coef: Fraction | None = None
    s_value: float | None = None
    log2_s: mpmath.mpf | None = None
    S_coef: Fraction | None = None
    S_value: float | None = None
    log2_S: mpmath.mpf | None = None
    gamma_sym: SymCoef | None = None
    gamma_value: float | None = None
    log2_gamma: mpmath.mpf | None = None
    d1_sym: SymCoef | None = None
    d1_value: float | None = None
    log2_d1: mpmath.mpf | None = None

    def eps_as_float(self) -> float:
        """Materialize eps as a float; refused for symbolic-only levels."""
        if self.symbolic_only or self.eps is None:
            raise ValueError(
                f"level {self.j} is symbolic-only; eps cannot be materialized"
            )
        return float(self.eps)


@dataclass(frozen=True)
class TestSchedule:
    """Parameter family of the multi-level test.

    ``r_exact`` is (k/err)^2 as an exact rational (an integer for the
    canonical eps values); ``levels`` materializes level 0 plus as many
    further levels as the mode allows. L = log(k/err) uses the natural log.
    """

    k: int
    eps: Fraction
    err: Fraction
    r_exact: Fraction
    mode: str  # "canonical" | "practical"
    levels: tuple[ScheduleLevel, ...]
    L_value: float

    @property
    def r(self) -> int:
        return int(self.r_exact)

    def sampling_levels(self) -> list[ScheduleLevel]:
        """The levels a test run draws from uniformly.

        Practical mode samples levels 1..t (level 0 is the chain anchor),
        or level 0 alone for a single-level schedule. Exact-recurrence mode
        has no sampleable levels beyond 0 (all deeper levels are symbolic).
        """
        if self.mode == "practical":
            if len(self.levels) > 1:
                return [lvl for lvl in self.levels if lvl.j >= 1]
            return [self.levels[0]]
        return []

    def identity_residuals(self) -> list[tuple[int, SymCoef]]:
        """gamma_j * d_{j,1} for every level carrying both symbols.

        Each product must equal 2k * L, i.e. SymCoef(2k, s_pow=0, L_pow=1).
        """
        out = []
        for lvl in self.levels:
            if lvl.gamma_sym is not None and lvl.d1_sym is not None:
                out.append((lvl.j, lvl.gamma_sym * lvl.d1_sym))
        return out

    def identity_check(self) -> bool:
        target = SymCoef(Fraction(2 * self.k), 0, 1)
        return all(prod == target for _, prod in self.identity_residuals())

    def interval_check(self) -> bool:
        """S_j = s_{j+1} for consecutive materialized levels (exact)."""
        for prev, nxt in zip(self.levels, self.levels[1:]):
            if prev.S_coef is not None and nxt.s_coef is not None:
                if prev.S_coef != nxt.s_coef:
                    return False
            elif prev.log2_S is not None and nxt.log2_s is not None:
                if prev.log2_S != nxt.log2_s:
                    return False
        return True

    def d(self, j: int, i: int) -> float | None:
        """d_{j,i} = (d_{j,1})^i when the value is materializable."""
        lvl = self.levels[j]
        if lvl.d1_value is None:
            return None
        return lvl.d1_value**i


def _level_exact(
    j: int,
    eps_j: Fraction,
    eps_prev: Fraction | None,
    k: int,
    err: Fraction,
    L_value: float,
) -> ScheduleLevel:
    """A level whose eps (and predecessor) are exact rationals."""
    alpha = (k - 1) * eps_j
    beta = eps_j / (1 - alpha) if alpha < 1 else None
    log2_eps = _log2_fraction(eps_j)
    symbolic = abs(log2_eps) > LOG2_FLOAT_LIMIT
    fields = dict(
        j=j,
        eps=eps_j,
        log2_eps=log2_eps,
        symbolic_only=symbolic,
        alpha=alpha,
        beta=beta,
        log2_beta=_log2_fraction(beta) if beta is not None else None,
        S_coef=1 / eps_j**2,
        S_value=(
            float(L_value * (1 / eps_j**2))
            if eps_j.denominator.bit_length() < 500
            else None
        ),
    )
    if eps_prev is not None:
        s_coef = 1 / eps_prev**2
        s_value = float(L_value * s_coef)
        gamma_sym = SymCoef(err / k, s_pow=-1, L_pow=0)
        d1_sym = SymCoef(2 * k * k / err, s_pow=1, L_pow=1)
        fields.update(
            s_coef=s_coef,
            s_value=s_value,
            gamma_value=float(err / k) / s_value,
            d1_value=float(2 * k * k / err) * s_value * L_value,
            gamma_sym=gamma_sym,
            d1_sym=d1_sym,
        )
    return ScheduleLevel(**fields)


def build_schedule(
    k: int,
    eps,
    mode: str = "practical",
    practical_eps_list=None,
    depth: int = 2,
) -> TestSchedule:
    """Construct the level schedule.

    ``practical`` mode takes ``practical_eps_list`` = (eps_0, .., eps_t): a
    strictly decreasing chain of exact rationals with eps_0 = eps, every
    entry in (0, 1/k^2]; levels 1..t are sampleable. ``canonical`` mode
    follows the literal recurrence eps_{j+1} = err * 2^{-(k^10/(err^3
    eps_j))^k}; level 1's log2 is exact big-integer arithmetic, level 2's
    log2 needs an arbitrary-precision exponent, and level 3 would need a
    tower (even its log2 is unrepresentable), so depth is capped at 2.
    """
    eps = _as_fraction(eps)
    if not 0 < eps <= Fraction(1, k * k):
        raise ValueError(f"eps={eps} outside the admissible range (0, 1/{k * k}]")
    err = (eps / 5) / (1 << k)
    r_exact = (k / err) ** 2
    L_value = math.log(float(k / err))

    if mode == "practical":
        if practical_eps_list is None:
            practical_eps_list = [eps]
        chain = [_as_fraction(e) for e in practical_eps_list]
        if chain[0] != eps:
            raise ValueError("practical chain must start at the top-level eps")
        for e in chain:
            if not 0 < e <= Fraction(1, k * k):
                raise ValueError(f"level value {e} outside (0, 1/{k * k}]")
        if any(b >= a for a, b in zip(chain, chain[1:])):
            raise ValueError("practical chain must be strictly decreasing")
        levels = [
            _level_exact(j, e, chain[j - 1] if j else None, k, err, L_value)
            for j, e in enumerate(chain)
        ]
        return TestSchedule(
            k=k,
            eps=eps,
            err=err,
            r_exact=r_exact,
            mode="practical",
            levels=tuple(levels),
            L_value=L_value,
        )

    if mode != "canonical":
        raise ValueError(f"unknown mode {mode!r}")
    if depth > 2:
        raise ValueError(
            "canonical levels beyond 2 are tower-exponential; even log2(eps_3) "
            "is not materializable"
        )
    levels = [_level_exact(0, eps, None, k, err, L_value)]
    if depth >= 1:
        # F = (k^10 / (err^3 eps_0))^k is an exact rational (integral for the
        # canonical eps); log2(eps_1) = log2(err) - F.
        f_exact = (Fraction(k) ** 10 / (err**3 * eps)) ** k
        prec = f_exact.numerator.bit_length() + f_exact.denominator.bit_length() + 128
        with mpmath.workprec(prec):
            f_mpf = mpmath.mpf(f_exact.numerator) / mpmath.mpf(f_exact.denominator)
            log2_eps1 = _log2_fraction(err, prec) - f_mpf
            s1_coef = 1 / eps**2
            gamma_sym = SymCoef(err / k, s_pow=-1, L_pow=0)
            d1_sym = SymCoef(2 * k * k / err, s_pow=1, L_pow=1)
            s1_value = float(L_value * s1_coef)
            levels.append(
                ScheduleLevel(
                    j=1,
                    eps=None,
                    log2_eps=log2_eps1,
                    symbolic_only=True,
                    shift_int=(
                        f_exact.numerator if f_exact.denominator == 1 else None
                    ),
                    log2_beta=log2_eps1,  # 1 - (k-1) eps_1 = 1 at any finite precision
                    s_coef=s1_coef,
                    s_value=s1_value,
                    log2_s=_log2_fraction(s1_coef) + mpmath.mpf(math.log2(L_value)),
                    gamma_sym=gamma_sym,
                    gamma_value=float(err / k) / s1_value,
                    d1_sym=d1_sym,
                    d1_value=float(2 * k * k / err) * s1_value * L_value,
                )
            )
    if depth >= 2:
        with mpmath.workprec(2048):
            log2_eps1 = levels[1].log2_eps
            # s_2 = L / eps_1^2  =>  log2 s_2 = log2 L + 2 |log2 eps_1|
            log2_s2 = mpmath.mpf(math.log2(L_value)) - 2 * log2_eps1
            # (k^10/(err^3 eps_1))^k in log2:
            log2_base = _log2_fraction(Fraction(k) ** 10 / err**3, 2048) - log2_eps1
            log2_term = k * log2_base
            term = mpmath.power(2, log2_term)
            log2_eps2 = _log2_fraction(err, 2048) - term
            log2_err_over_k = _log2_fraction(err / k, 2048)
            log2_d1_coef = _log2_fraction(2 * k * k / err, 2048)
            levels.append(
                ScheduleLevel(
                    j=2,
                    eps=None,
                    log2_eps=log2_eps2,
                    symbolic_only=True,
                    log2_beta=log2_eps2,
                    log2_s=log2_s2,
                    gamma_sym=SymCoef(err / k, s_pow=-1, L_pow=0),
                    log2_gamma=log2_err_over_k - log2_s2,
                    d1_sym=SymCoef(2 * k * k / err, s_pow=1, L_pow=1),
                    log2_d1=log2_d1_coef + log2_s2 + mpmath.mpf(math.log2(L_value)),
                )
            )
        # stitch S boundaries: S_j = s_{j+1}
        patched = []
        for idx, lvl in enumerate(levels):
            if idx + 1 < len(levels):
                nxt = levels[idx + 1]
                patched.append(
                    ScheduleLevel(
                        **{
                            **lvl.__dict__,
                            "S_coef": nxt.s_coef,
                            "S_value": nxt.s_value,
                            "log2_S": nxt.log2_s,
                        }
                    )
                )
            else:
                patched.append(lvl)
        levels = patched
    return TestSchedule(
        k=k,
        eps=eps,
        err=err,
        r_exact=r_exact,
        mode="canonical",
        levels=tuple(levels),
        L_value=L_value,
    )


def run_Tprime(
    f: BooleanFunction,
    schedule: TestSchedule,
    trials: int,
    rng: np.random.Generator,
    level0_only: bool = False,
) -> AcceptanceReport:
    """Run the multi-level test: per trial, draw a level uniformly, run one
    basic-test trial at that level's eps.

    Deterministic given the rng: the level assignment for all trials is
    drawn first, then each level's block of trials is run in level order.
    """
    if trials <= 0:
        raise ValueError("trials must be positive")
    if level0_only:
        levels = [schedule.levels[0]]
    else:
        levels = schedule.sampling_levels()
    if not levels:
        raise ValueError(
            "schedule has no sampleable levels (exact-recurrence mode); "
            "restrict to level 0 explicitly"
        )
    if any(lvl.eps is None for lvl in levels):
        raise ValueError("cannot sample a symbolic-only level")
    _warn_if_unfolded(f)
    picks = rng.integers(0, len(levels), size=trials)
    counts = np.bincount(picks, minlength=len(levels))
    accepted = 0
    for lvl, block in zip(levels, counts):
        if block == 0:
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            rep = run_T(f, schedule.k, lvl.eps, int(block), rng)
        accepted += rep.accepted
    center, half = wilson_interval(accepted, trials)
    return AcceptanceReport(
        estimate=accepted / trials,
        trials=trials,
        accepted=accepted,
        ci_center=center,
        ci99=half,
        baseline=Fraction(2 * schedule.k + 1, 1 << schedule.k),
    )


# -- diagnostics -------------------------------------------------------------


@dataclass(frozen=True)
class SoundnessCertificate:
    max_degree_influence: float
    quasirandom: bool
    acceptance: float
    exact: Fraction | None
    baseline: Fraction
    margin: float  # acceptance - (baseline + eps_target)


def soundness_certificate(
    f: BooleanFunction,
    k: int,
    d: int,
    tau: float,
    delta,
    trials: int = 100_000,
    rng: np.random.Generator | None = None,
    budget: int = ENUM_BUDGET_DEFAULT,
) -> SoundnessCertificate:
    """Quasirandomness of f plus its acceptance margin over the soundness target.

    Diagnostic only: the provable (d, tau) pairs are far outside desk scale,
    so the certificate reports margins rather than pass/fail.
    """
    from dictlab.boolfn import degree_influence

    expansion = wht(f)
    max_inf = max(degree_influence(expansion, i, d) for i in range(1, f.n + 1))
    delta = _as_fraction(delta)
    exact: Fraction | None = None
    if (2 * k + 1) ** f.n <= budget:
        exact = exact_acceptance(f, k, delta, budget)
        acceptance = float(exact)
    else:
        if rng is None:
            raise ValueError("instance too large for exact enumeration; need an rng")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            acceptance = run_T(f, k, delta, trials, rng).estimate
    baseline = Fraction(2 * k + 1, 1 << k)
    return SoundnessCertificate(
        max_degree_influence=max_inf,
        quasirandom=max_inf <= tau,
        acceptance=acceptance,
        exact=exact,
        baseline=baseline,
        margin=acceptance - float(baseline) - float(delta),
    )


@dataclass(frozen=True)
class LowDegGapReport:
    gap: float  # |E[prod f] - E[prod (T_{1-gamma} f)^{<= d_i}]|
    lhs: float
    rhs: float
    bound_2err: float  # 2 err + k sqrt(interval mass), reading err1 := err
    bound_1err: float  # err + k sqrt(interval mass) (noise-only step)
    interval_mass: float
    s: float
    S: float
    err: float
    sup_low: float  # realized sup_{|T|<=s} (1-(1-gamma)^{|T|})
    sup_high: float  # realized sup_{|T|>=S} rho^{|T|}


def lowdeg_gap_diagnostic(
    f: BooleanFunction,
    k: int,
    delta,
    gamma: float,
    d_list,
    budget: int = ENUM_BUDGET_DEFAULT,
) -> LowDegGapReport:
    """Gap from replacing f by its noised truncation inside the product.

    Exact enumeration (no sampling) of E[prod_{i<=k} g_i(x_i)] with g_i =
    (T_{1-gamma} f)^{<= d_i}; d_list is padded with its last entry to length
    k. The reported interval uses s = err/(k gamma) (inverting the gamma
    definition) and S = L/delta^2; the bounds quote both readings of the
    proof's err_1 symbol: the nominal err and the realized sups.
    """
    delta = _as_fraction(delta)
    dist = build_D(k, delta)
    n = f.n
    _check_budget(k, n, budget)
    d_list = list(d_list)
    if not d_list:
        raise ValueError("d_list must be nonempty")
    while len(d_list) < k:
        d_list.append(d_list[-1])

    lhs_exact = correlation_term(f, dist, (1 << k) - 1, method="exact", budget=budget)
    lhs = float(lhs_exact)

    expansion = wht(f)
    if gamma == 0 and min(d_list[:k]) >= n:
        rhs = lhs  # both operators are the identity
    else:
        poly = MultilinearPoly.from_fourier(expansion)
        tables = []
        for i in range(k):
            g = truncate(noise(poly, gamma), d_list[i])
            values = g.coeffs.copy()
            _backend.wht_float64(values)  # evaluations on all vertices
            tables.append(values)
        atom_bits = dist.atom_bits_array()
        mass_float = np.array([float(m) for m in dist.masses])
        n_atoms = 2 * k + 1
        total = n_atoms**n
        pow2 = (np.int64(1) << np.arange(n, dtype=np.int64))
        rhs_acc = 0.0
        chunk = 1 << 18
        for start in range(0, total, chunk):
            stop = min(start + chunk, total)
            idx = np.arange(start, stop, dtype=np.int64)
            digits = np.empty((idx.size, n), dtype=np.uint8)
            rem = idx
            for j in range(n):
                digits[:, j] = rem % n_atoms
                rem = rem // n_atoms
            bits = atom_bits[digits]
            mass = mass_float[digits].prod(axis=1)
            prod = np.ones(idx.size)
            for i in range(k):
                vert = ((bits >> np.uint64(i)) & np.uint64(1)).astype(np.int64)
                prod *= tables[i][vert @ pow2]
            rhs_acc += float((mass * prod).sum())
        rhs = rhs_acc

    err = (delta / 5) / (1 << k)
    err_f = float(err)
    l_value = math.log(float(k / err))
    s_boundary = err_f / (k * gamma) if gamma > 0 else math.inf
    big_s = l_value / float(delta) ** 2
    sizes = np.bitwise_count(np.arange(1 << n, dtype=np.uint32)).astype(np.int64)
    coeffs_sq = expansion.coeffs**2
    in_interval = (sizes >= s_boundary) & (sizes <= big_s)
    interval_mass = float(coeffs_sq[in_interval].sum())
    rho = max(correlation_rho(dist, i) for i in range(1, k + 1))
    low_sizes = sizes[sizes <= s_boundary]
    sup_low = float(1.0 - (1.0 - gamma) ** low_sizes.max()) if low_sizes.size else 0.0
    high_sizes = sizes[sizes >= big_s]
    sup_high = float(rho ** high_sizes.min()) if high_sizes.size else 0.0
    return LowDegGapReport(
        gap=abs(lhs - rhs),
        lhs=lhs,
        rhs=rhs,
        bound_2err=2 * err_f + k * math.sqrt(interval_mass),
        bound_1err=err_f + k * math.sqrt(interval_mass),
        interval_mass=interval_mass,
        s=s_boundary,
        S=big_s,
        err=err_f,
        sup_low=sup_low,
        sup_high=sup_high,
    )
