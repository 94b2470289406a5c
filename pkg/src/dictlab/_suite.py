"""Self-verification suite: every structural claim the package relies on.

Each check is a named, independent comparison of a measured quantity
against its expected value or bound, carrying a ``claim`` string that
states the violated property in plain mathematics when it fails. The
``corrupt`` hook perturbs one named check's *expected* value (never the
measurement) and reruns the unchanged comparison logic; the suite proving
it then fails exactly that row shows the checks are not vacuous.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from dictlab.boolfn import BooleanFunction, MultilinearPoly
from dictlab.correlated import (
    MarkovOperator,
    efron_stein,
    verify_commutation,
    verify_contraction,
)
from dictlab.distribution import (
    build_D,
    connectivity_check,
    correlation_rho,
    covariance,
    marginal,
)
from dictlab.gaussian import hypercontractivity_check, make_sqrt, mm_residual
from dictlab.predicate import build_Pk, fourier_of_predicate
from dictlab.tester import exact_acceptance, fourier_acceptance

__all__ = ["CheckResult", "VerificationSuiteResult", "run_suite", "CHECK_NAMES"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    claim: str
    status: str  # "pass" | "fail"
    measured: str
    expected: str
    tolerance: str

    @property
    def ok(self) -> bool:
        return self.status == "pass"


@dataclass(frozen=True)
class VerificationSuiteResult:
    k: int
    eps: Fraction
    seed: int
    corrupt: str | None
    checks: tuple[CheckResult, ...]

    @property
    def all_pass(self) -> bool:
        return all(c.ok for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "eps": {"num": str(self.eps.numerator), "den": str(self.eps.denominator)},
            "seed": self.seed,
            "corrupt": self.corrupt,
            "all_pass": self.all_pass,
            "checks": [
                {
                    "name": c.name,
                    "claim": c.claim,
                    "status": c.status,
                    "measured": c.measured,
                    "expected": c.expected,
                    "tolerance": c.tolerance,
                }
                for c in self.checks
            ],
        }


def _row(name, claim, ok, measured, expected, tolerance="0 (exact)") -> CheckResult:
    return CheckResult(
        name=name,
        claim=claim,
        status="pass" if ok else "fail",
        measured=str(measured),
        expected=str(expected),
        tolerance=str(tolerance),
    )


def _frac(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def run_suite(
    k: int = 7,
    eps=Fraction(1, 49),
    seed: int = 0,
    corrupt: str | None = None,
) -> VerificationSuiteResult:
    """Run all checks in order; ``corrupt`` perturbs one expected value."""
    eps = Fraction(eps)
    if corrupt is not None and corrupt not in CHECK_NAMES:
        raise ValueError(f"unknown check name {corrupt!r}; known: {CHECK_NAMES}")
    rng = np.random.default_rng(seed)
    checks: list[CheckResult] = []
    bad = corrupt  # shorthand

    pred = build_Pk(int(round(math.log2(k + 1))))
    dist = build_D(k, eps)
    alpha = dist.alpha

    # -- predicate ----------------------------------------------------------
    expected_size = 2 * k + 1 + (1 if bad == "predicate-size" else 0)
    checks.append(
        _row(
            "predicate-size",
            "the predicate accepts exactly 2k+1 strings",
            pred.size == expected_size,
            pred.size,
            expected_size,
        )
    )
    pf = fourier_of_predicate(pred)
    mean = pf.coeff(0)
    expected_mean = Fraction(2 * k + 1, 1 << k) + (
        Fraction(1, 1 << 30) if bad == "predicate-mean" else 0
    )
    checks.append(
        _row(
            "predicate-mean",
            "the mean of the predicate indicator is (2k+1)/2^k",
            mean == expected_mean,
            _frac(mean),
            _frac(expected_mean),
        )
    )
    max_abs = max(abs(pf.coeff(s)) for s in range(1 << k))
    # corrupted bound sits below |P_hat(empty)| = (2k+1)/2^k for any k <= 20
    bound = Fraction(1) if bad != "predicate-coeff-range" else Fraction(1, 10**6)
    checks.append(
        _row(
            "predicate-coeff-range",
            "every Fourier coefficient of the indicator has |coeff| <= 1",
            max_abs <= bound,
            _frac(max_abs),
            f"<= {_frac(bound)}",
        )
    )
    # pairwise independence of the linear part (code strings + zero)
    code = [0] + list(pred.hadamard)
    worst = Fraction(0)
    for i in range(k):
        for j in range(i + 1, k):
            m = Fraction(
                sum(
                    (1 if ((b >> i) & 1) == 0 else -1)
                    * (1 if ((b >> j) & 1) == 0 else -1)
                    for b in code
                ),
                len(code),
            )
            worst = max(worst, abs(m))
    expected_worst = Fraction(0) + (
        Fraction(-1, 100) if bad == "predicate-pairwise-independent" else 0
    )
    checks.append(
        _row(
            "predicate-pairwise-independent",
            "uniform on the linear strings plus zero has all pairwise "
            "plus/minus-one moments exactly 0",
            worst <= expected_worst,
            _frac(worst),
            f"<= {_frac(expected_worst)}",
        )
    )

    # -- distribution --------------------------------------------------------
    total = sum(dist.masses)
    expected_total = Fraction(1) + (
        Fraction(1, 10**9) if bad == "distribution-mass-sum" else 0
    )
    checks.append(
        _row(
            "distribution-mass-sum",
            "the atom masses sum to exactly 1",
            total == expected_total,
            _frac(total),
            _frac(expected_total),
        )
    )
    target_marginal = Fraction(1, 2) + (
        Fraction(1, 10**9) if bad == "distribution-marginals" else 0
    )
    margs = [marginal(dist, i) for i in range(1, k + 1)]
    ok = all(p0 == target_marginal and p1 == target_marginal for p0, p1 in margs)
    checks.append(
        _row(
            "distribution-marginals",
            "every coordinate marginal is exactly uniform on {0,1}",
            ok,
            _frac(margs[0][0]),
            _frac(target_marginal),
        )
    )
    cov_target = -eps / (2 * (1 - alpha)) + (
        Fraction(1, 10**6) if bad == "distribution-covariance" else 0
    )
    covs = [
        covariance(dist, i, j, encoding="01")
        for i in range(1, k + 1)
        for j in range(i + 1, k + 1)
    ]
    checks.append(
        _row(
            "distribution-covariance",
            "every pairwise 0/1 covariance equals -eps/(2(1-alpha)) exactly",
            all(c == cov_target for c in covs),
            _frac(covs[0]),
            _frac(cov_target),
        )
    )
    support = dist.support
    expected_support = set(pred.accepted_strings)
    if bad == "distribution-support":
        # the all-ones string has weight k, never an accepted weight
        expected_support = expected_support | {(1 << k) - 1}
    checks.append(
        _row(
            "distribution-support",
            "the distribution support is exactly the accepting set",
            set(support) == expected_support,
            f"{len(set(support))} atoms",
            f"{len(expected_support)} atoms",
        )
    )
    conn = all(connectivity_check(dist, i) for i in range(1, k + 1))
    expected_conn = bad != "distribution-connectivity"
    checks.append(
        _row(
            "distribution-connectivity",
            "for every coordinate the support is connected when split on it",
            conn == expected_conn,
            conn,
            expected_conn,
        )
    )

    # -- correlation bounds --------------------------------------------------
    rhos = [correlation_rho(dist, i) for i in range(1, k + 1)]
    bound_main = 1 - float(eps**2 / (2 * (1 - alpha) ** 2))
    if bad == "correlation-bound":
        bound_main -= 0.01
    checks.append(
        _row(
            "correlation-bound",
            "each coordinate's maximal correlation is at most "
            "1 - eps^2/(2(1-alpha)^2)",
            all(r <= bound_main + 1e-12 for r in rhos),
            f"max rho = {max(rhos)!r}",
            f"<= {bound_main!r}",
            "1e-12",
        )
    )
    a0 = dist.min_mass
    bound_generic = 1 - float(a0) ** 2 / 2
    if bad == "correlation-generic-bound":
        bound_generic = 1 - 0.5  # nonsense bound, must fail
    checks.append(
        _row(
            "correlation-generic-bound",
            "maximal correlation is at most 1 - (min atom)^2/2",
            all(r <= bound_generic + 1e-12 for r in rhos),
            f"max rho = {max(rhos)!r}",
            f"<= {bound_generic!r}",
            "1e-12",
        )
    )

    # -- decomposition / Markov ----------------------------------------------
    op = MarkovOperator.from_distribution_split(dist, 1)
    ny = op.marginal_y.size
    space = op.y_space(2)
    tol_dec = 1e-10 if bad != "efron-stein" else 1e-22
    worst_dec = 0.0
    worst_comm = 0.0
    contraction_ok = True
    worst_margin = -math.inf
    for _ in range(20):
        g = rng.standard_normal((ny, ny))
        dec = efron_stein(g, space)
        worst_dec = max(
            worst_dec,
            dec.reconstruction_deviation(g),
            dec.locality_deviation(),
            dec.conditional_mean_deviation(),
        )
        worst_comm = max(worst_comm, verify_commutation(op, g))
        ok_c, rep = verify_contraction(op, g)
        contraction_ok &= ok_c
        worst_margin = max(
            worst_margin, max(lhs - rhs for lhs, rhs in rep.values())
        )
    checks.append(
        _row(
            "efron-stein",
            "decomposition reconstructs g, components depend only on their "
            "coordinates, and conditional means vanish",
            worst_dec <= tol_dec,
            f"{worst_dec!r}",
            f"<= {tol_dec!r}",
            "1e-10",
        )
    )
    tol_comm = 1e-10 if bad != "markov-commutation" else 1e-22
    checks.append(
        _row(
            "markov-commutation",
            "the Markov operator commutes with the decomposition: "
            "(Ug)_S = U(g_S)",
            worst_comm <= tol_comm,
            f"{worst_comm!r}",
            f"<= {tol_comm!r}",
            "1e-10",
        )
    )
    margin_bound = 0.0 if bad != "markov-contraction" else -1e30
    checks.append(
        _row(
            "markov-contraction",
            "||U(g_S)||_2 <= rho^|S| ||g_S||_2 for every subset S",
            contraction_ok and worst_margin <= margin_bound + 1e-10,
            f"max lhs-rhs = {worst_margin!r}",
            f"<= {margin_bound!r}",
            "1e-10",
        )
    )

    # -- gaussian -------------------------------------------------------------
    worst_res = 0.0
    beta_ok = True
    for kk in (7, 15):
        for d in (0.0, 1e-4, 1e-3, 1e-2, 2 / 43):
            m = make_sqrt(kk, d)
            worst_res = max(worst_res, mm_residual(kk, d))
            beta_ok &= m.beta <= d + 1e-15
    tol_res = 1e-12 if bad != "gaussian-sqrt" else 1e-30
    checks.append(
        _row(
            "gaussian-sqrt",
            "the structured square root satisfies ||M M - Sigma||_F <= 1e-12 "
            "and beta <= delta on the whole grid",
            worst_res <= tol_res and beta_ok,
            f"max residual = {worst_res!r}",
            f"<= {tol_res!r}",
            "1e-12",
        )
    )

    # -- hypercontractivity ----------------------------------------------------
    viol = 0
    for _ in range(10):
        poly = MultilinearPoly.random(8, 3, rng, unit_norm=True)
        rep = hypercontractivity_check(poly, 4, measure="uniform")
        if rep.lhs > rep.rhs + 1e-12:
            viol += 1
    expected_viol = 0 if bad != "hypercontractivity" else -1
    checks.append(
        _row(
            "hypercontractivity",
            "||Q||_4 <= sqrt(3)^degree ||Q||_2 for low-degree multilinear Q",
            viol == expected_viol,
            f"{viol} violations",
            f"{expected_viol} violations",
            "1e-12",
        )
    )

    # -- completeness -----------------------------------------------------------
    n_max = 4 if k <= 7 else 3
    accs = [
        exact_acceptance(BooleanFunction.dictator(n, i), k, eps)
        for n in range(1, n_max + 1)
        for i in range(1, n + 1)
    ]
    expected_acc = Fraction(1) + (Fraction(1, 10**9) if bad == "completeness" else 0)
    checks.append(
        _row(
            "completeness",
            "every dictator is accepted with probability exactly 1",
            all(a == expected_acc for a in accs),
            _frac(min(accs)),
            _frac(expected_acc),
        )
    )

    # -- dual acceptance routes ---------------------------------------------------
    route_ok = True
    worst_pair = ("", "")
    for _ in range(3):
        f = BooleanFunction.random_folded(4, rng)
        a = exact_acceptance(f, k, eps)
        b = fourier_acceptance(f, k, eps)
        if bad == "fourier-route":
            b = b + Fraction(1, 10**12)
        if a != b:
            route_ok = False
            worst_pair = (_frac(a), _frac(b))
    checks.append(
        _row(
            "fourier-route",
            "membership enumeration and the Fourier-side decomposition give "
            "identical exact acceptance",
            route_ok,
            worst_pair[1] or "routes agree",
            worst_pair[0] or "routes agree",
        )
    )

    return VerificationSuiteResult(
        k=k, eps=eps, seed=seed, corrupt=corrupt, checks=tuple(checks)
    )


CHECK_NAMES = (
    "predicate-size",
    "predicate-mean",
    "predicate-coeff-range",
    "predicate-pairwise-independent",
    "distribution-mass-sum",
    "distribution-marginals",
    "distribution-covariance",
    "distribution-support",
    "distribution-connectivity",
    "correlation-bound",
    "correlation-generic-bound",
    "efron-stein",
    "markov-commutation",
    "markov-contraction",
    "gaussian-sqrt",
    "hypercontractivity",
    "completeness",
    "fourier-route",
)
