"""Correlated Gaussian ensembles matching the test distribution's moments.

The target covariance of the k query values in the +/-1 encoding is
Sigma = (1+delta) I - delta J with delta = 2*eps/(1-alpha). Its square root
has the same two-parameter structure M = (1-delta')((1+beta) I - beta J),
where beta is the smaller root of (k + delta*k - delta - 2) beta^2 - 2 beta
+ delta = 0 and 1 - delta' = 1/sqrt(1 + (k-1) beta^2); both facts are
verified numerically on construction (||M M - Sigma||_F <= 1e-12 and
beta <= delta). Sampling multiplies i.i.d. standard normals by M in O(k)
per coordinate using the (aI + bJ) structure.

The module also hosts the empirical lemma checks that live naturally on the
Gaussian side: robustness of low-degree polynomials to resampling noise
(E[(P(x)-P(z))^2] <= 2*delta*degree, with an exact closed-form oracle),
hypercontractivity ||Q||_q <= (sqrt(q-1))^degree ||Q||_2, and the
product-expectation gap between correlated and independent ensembles.

Normal variates come from numpy's Generator (PCG64 + ziggurat): fully
deterministic given the seed, stable across platforms for a fixed numpy
version.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from dictlab.boolfn import MultilinearPoly, eval_multilinear_batch, subset_sizes
from dictlab.distribution import TestDistribution

__all__ = [
    "CovarianceMatrix",
    "SqrtMatrix",
    "GaussianEnsemble",
    "solve_beta",
    "make_sqrt",
    "mm_residual",
    "sample_correlated",
    "gaussian_from_distribution",
    "closed_form_perturbation",
    "perturbation_check",
    "hypercontractivity_check",
    "product_gap_check",
    "PerturbationReport",
    "HypercontractivityReport",
    "ProductGapReport",
]

_RESIDUAL_TOL = 1e-12


@dataclass(frozen=True)
class CovarianceMatrix:
    """Sigma = (1+delta) I - delta J: unit diagonal, off-diagonal -delta."""

    k: int
    delta: float
    delta_exact: Fraction | None = None

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("k must be at least 2")
        if self.delta < 0:
            raise ValueError("delta must be >= 0")
        if self.delta * (self.k - 1) >= 1:
            raise ValueError(
                f"delta={self.delta} is not positive semidefinite for k={self.k}"
            )

    def dense(self) -> np.ndarray:
        return (1 + self.delta) * np.eye(self.k) - self.delta * np.ones(
            (self.k, self.k)
        )


@dataclass(frozen=True)
class SqrtMatrix:
    """M = (1-delta')((1+beta) I - beta J) with M M = Sigma."""

    k: int
    delta: float
    beta: float
    delta_prime: float

    def dense(self) -> np.ndarray:
        return (1 - self.delta_prime) * (
            (1 + self.beta) * np.eye(self.k) - self.beta * np.ones((self.k, self.k))
        )

    def apply(self, y: np.ndarray) -> np.ndarray:
        """M @ y in O(k) per column; y has shape (k,) or (k, n)."""
        s = y.sum(axis=0)
        return (1 - self.delta_prime) * ((1 + self.beta) * y - self.beta * s)


def solve_beta(k: int, delta: float) -> tuple[float, float]:
    """(beta, delta') for the structured square root of Sigma.

    beta is the smaller positive root of (k + delta*k - delta - 2) beta^2 -
    2 beta + delta = 0, computed in the numerically stable q-form
    beta = delta / (1 + sqrt(1 - k' delta)) with k' the leading coefficient;
    this also gives beta <= delta directly. delta' follows from
    1 - delta' = 1/sqrt(1 + (k-1) beta^2).
    """
    if delta < 0:
        raise ValueError("delta must be >= 0")
    kprime = (k - 2) + delta * (k - 1)
    disc = 1.0 - kprime * delta
    if disc < 0:
        raise ValueError(f"delta={delta} outside the admissible range for k={k}")
    beta = delta / (1.0 + math.sqrt(disc))
    delta_prime = 1.0 - 1.0 / math.sqrt(1.0 + (k - 1) * beta * beta)
    return beta, delta_prime


def mm_residual(k: int, delta: float) -> float:
    """Frobenius norm of M M - Sigma for the solved square root."""
    beta, delta_prime = solve_beta(k, delta)
    m = SqrtMatrix(k=k, delta=delta, beta=beta, delta_prime=delta_prime).dense()
    sigma = CovarianceMatrix(k=k, delta=delta).dense()
    return float(np.linalg.norm(m @ m - sigma))


def make_sqrt(k: int, delta: float) -> SqrtMatrix:
    """Solve for M and enforce the construction contracts.

    Raises if beta > delta or if ||M M - Sigma||_F exceeds 1e-12.
    """
    beta, delta_prime = solve_beta(k, delta)
    m = SqrtMatrix(k=k, delta=delta, beta=beta, delta_prime=delta_prime)
    if beta > delta:
        raise AssertionError(f"beta={beta} exceeds delta={delta}")
    residual = float(np.linalg.norm(m.dense() @ m.dense() - CovarianceMatrix(k, delta).dense()))
    if residual > _RESIDUAL_TOL:
        raise AssertionError(f"square-root residual {residual} exceeds {_RESIDUAL_TOL}")
    return m


def gaussian_from_distribution(dist: TestDistribution) -> CovarianceMatrix:
    """Covariance of the +/-1 query values: delta = 2*eps/(1-alpha)."""
    delta_exact = 2 * dist.epsilon / (1 - dist.alpha)
    return CovarianceMatrix(k=dist.k, delta=float(delta_exact), delta_exact=delta_exact)


@dataclass(frozen=True)
class GaussianEnsemble:
    """k jointly sampled real vectors: independent, or correlated via M."""

    k: int
    n: int
    sqrt: SqrtMatrix | None  # None -> independent standard normals

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        y = rng.standard_normal((self.k, self.n))
        if self.sqrt is None:
            return y
        return self.sqrt.apply(y)


def sample_correlated(m: SqrtMatrix, n: int, rng: np.random.Generator) -> np.ndarray:
    """One draw of the k correlated vectors of length n (x = M y)."""
    return GaussianEnsemble(k=m.k, n=n, sqrt=m).draw(rng)


def closed_form_perturbation(poly: MultilinearPoly, delta: float) -> float:
    """Exact E[(P(x) - P(z))^2] for the pairwise-correlated Gaussian pair.

    With E[x_i z_i] = 1 - delta per coordinate, orthogonality of monomials
    gives sum_T c_T^2 * 2 * (1 - (1-delta)^{|T|}).
    """
    sizes = subset_sizes(poly.n)
    return float(
        np.sum(poly.coeffs**2 * 2.0 * (1.0 - (1.0 - delta) ** sizes))
    )


@dataclass(frozen=True)
class PerturbationReport:
    estimate: float
    sigma: float  # standard error of the estimate
    ci99: float
    bound: float  # 2 * delta * degree
    closed_form: float
    trials: int

    @property
    def passes(self) -> bool:
        """One-sided contract: estimate - 3 sigma <= bound."""
        return self.estimate - 3 * self.sigma <= self.bound


def perturbation_check(
    poly: MultilinearPoly,
    delta: float,
    trials: int,
    rng: np.random.Generator,
    batch: int = 65536,
) -> PerturbationReport:
    """Monte Carlo check that low-degree P barely moves under resampling noise.

    Draws standard normal x and w, sets z = (1-delta) x +
    sqrt(1-(1-delta)^2) w (so E[x_i z_i] = 1-delta exactly), and estimates
    E[(P(x)-P(z))^2] against the bound 2*delta*degree.
    """
    if not 0 <= delta <= 1:
        raise ValueError("delta must lie in [0, 1]")
    l2 = float(np.sqrt(np.sum(poly.coeffs**2)))
    if l2 > 1 + 1e-9:
        raise ValueError(f"||P||_2 = {l2} exceeds 1")
    if trials < 2:
        raise ValueError("need at least 2 trials")
    mix = math.sqrt(max(0.0, 1.0 - (1.0 - delta) ** 2))
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < trials:
        step = min(batch, trials - done)
        x = rng.standard_normal((step, poly.n))
        w = rng.standard_normal((step, poly.n))
        z = (1.0 - delta) * x + mix * w
        diff = eval_multilinear_batch(poly, x) - eval_multilinear_batch(poly, z)
        sq = diff * diff
        total += float(sq.sum())
        total_sq += float((sq * sq).sum())
        done += step
    mean = total / trials
    var = max(0.0, total_sq / trials - mean * mean)
    sigma = math.sqrt(var / trials)
    return PerturbationReport(
        estimate=mean,
        sigma=sigma,
        ci99=2.5758293035489004 * sigma,
        bound=2.0 * delta * poly.degree,
        closed_form=closed_form_perturbation(poly, delta),
        trials=trials,
    )


@dataclass(frozen=True)
class HypercontractivityReport:
    lhs: float  # ||Q||_q
    rhs: float  # (sqrt(q-1))^degree * ||Q||_2
    sigma: float  # standard error of lhs^q / q-th-power scale (0 when exact)

    @property
    def passes(self) -> bool:
        return self.lhs <= self.rhs + 3 * self.sigma + 1e-12


def hypercontractivity_check(
    poly: MultilinearPoly,
    q: int,
    measure: str = "uniform",
    trials: int = 200_000,
    rng: np.random.Generator | None = None,
) -> HypercontractivityReport:
    """Compare ||Q||_q with (sqrt(q-1))^degree ||Q||_2.

    ``uniform`` enumerates the hypercube exactly; ``gaussian`` estimates the
    q-norm by Monte Carlo and reports the propagated standard error.
    """
    if q % 2 != 0 or q < 2:
        raise ValueError("q must be an even integer >= 2")
    l2 = float(np.sqrt(np.sum(poly.coeffs**2)))
    rhs = math.sqrt(q - 1) ** poly.degree * l2
    if measure == "uniform":
        from dictlab import _backend

        values = poly.coeffs.copy()
        _backend.wht_float64(values)  # evaluations at all 2^n vertices
        lhs = float(np.mean(np.abs(values) ** q) ** (1.0 / q))
        return HypercontractivityReport(lhs=lhs, rhs=rhs, sigma=0.0)
    if measure == "gaussian":
        if rng is None:
            raise ValueError("gaussian measure needs an rng")
        pts = rng.standard_normal((trials, poly.n))
        powers = np.abs(eval_multilinear_batch(poly, pts)) ** q
        mean = float(powers.mean())
        se_mean = float(powers.std(ddof=1) / math.sqrt(trials))
        lhs = mean ** (1.0 / q)
        # delta method: d/dm m^{1/q} = m^{1/q-1}/q
        sigma = se_mean * lhs / (q * mean) if mean > 0 else 0.0
        return HypercontractivityReport(lhs=lhs, rhs=rhs, sigma=sigma)
    raise ValueError(f"unknown measure {measure!r}")


@dataclass(frozen=True)
class ProductGapReport:
    gap_estimate: float  # |E_G[prod P(g_i)] - E_H[prod P(h_i)]|, paired
    gap_sigma: float
    bound: float  # delta * (2k)^{2 k degree}
    eh_mean: float  # E_H[prod_{i<=t} P(h_i)]
    eh_sigma: float
    expected_eh: float  # (P_hat(empty))^t
    trials: int

    @property
    def passes(self) -> bool:
        return self.gap_estimate - 3 * self.gap_sigma <= self.bound


def product_gap_check(
    poly: MultilinearPoly,
    t: int,
    m: SqrtMatrix,
    trials: int,
    rng: np.random.Generator,
    batch: int = 8192,
) -> ProductGapReport:
    """Gap between correlated and independent product expectations.

    Uses common random numbers: each trial draws one independent ensemble h
    and forms g = M h from the same draw, so the difference
    prod_{i<=t} P(g_i) - prod_{i<=t} P(h_i) is estimated with sharply
    reduced variance. Also reports E_H[prod P(h_i)], whose exact value is
    (P_hat(empty))^t by independence.
    """
    if not 1 <= t <= m.k:
        raise ValueError(f"t must lie in 1..{m.k}")
    l2 = float(np.sqrt(np.sum(poly.coeffs**2)))
    if l2 > 1 + 1e-9:
        raise ValueError(f"||P||_2 = {l2} exceeds 1")
    degree = poly.degree
    log_bound = math.log(2 * m.k) * (2 * m.k * degree)
    bound = m.delta * math.exp(log_bound) if m.delta > 0 else 0.0
    diffs_sum = 0.0
    diffs_sq = 0.0
    eh_sum = 0.0
    eh_sq = 0.0
    done = 0
    while done < trials:
        step = min(batch, trials - done)
        h = rng.standard_normal((step, m.k, poly.n))
        g = np.swapaxes(m.apply(np.swapaxes(h, 0, 1)), 0, 1)
        prod_g = np.ones(step)
        prod_h = np.ones(step)
        for i in range(t):
            prod_g *= eval_multilinear_batch(poly, g[:, i, :])
            prod_h *= eval_multilinear_batch(poly, h[:, i, :])
        d = prod_g - prod_h
        diffs_sum += float(d.sum())
        diffs_sq += float((d * d).sum())
        eh_sum += float(prod_h.sum())
        eh_sq += float((prod_h * prod_h).sum())
        done += step
    mean_d = diffs_sum / trials
    var_d = max(0.0, diffs_sq / trials - mean_d * mean_d)
    mean_h = eh_sum / trials
    var_h = max(0.0, eh_sq / trials - mean_h * mean_h)
    return ProductGapReport(
        gap_estimate=abs(mean_d),
        gap_sigma=math.sqrt(var_d / trials),
        bound=bound,
        eh_mean=mean_h,
        eh_sigma=math.sqrt(var_h / trials),
        expected_eh=float(poly.coeffs[0]) ** t,
        trials=trials,
    )
