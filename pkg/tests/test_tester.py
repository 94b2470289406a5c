"""Test procedure: sampling runs, exact enumeration, schedule, diagnostics."""

import itertools
import math
import warnings
from fractions import Fraction

import numpy as np
import pytest

from dictlab.boolfn import BooleanFunction
from dictlab.distribution import atom_moments, build_D
from dictlab.tester import (
    ENUM_BUDGET_DEFAULT,
    SymCoef,
    acceptance_with_decomposition,
    build_schedule,
    correlation_term,
    exact_acceptance,
    fourier_acceptance,
    lowdeg_gap_diagnostic,
    run_T,
    run_Tprime,
    soundness_certificate,
    wilson_interval,
)

EPS7 = Fraction(1, 49)


@pytest.fixture
def rng():
    return np.random.default_rng(2)


def brute_force_acceptance(f: BooleanFunction, dist) -> Fraction:
    """Independent oracle: enumerate all atom tuples with plain Fractions."""
    k, n = dist.k, f.n
    total = Fraction(0)
    for combo in itertools.product(dist.atoms, repeat=n):
        mass = Fraction(1)
        for _, m in combo:
            mass *= m
        pattern = 0
        for i in range(k):
            x = 0
            for j, (bits, _) in enumerate(combo):
                x |= ((bits >> i) & 1) << j
            if f.values[x] == -1:
                pattern |= 1 << i
        if dist.predicate.accepting[pattern]:
            total += mass
    return total


# -- confidence interval -------------------------------------------------------


def test_wilson_interval_endpoint_property():
    """Both endpoints satisfy the defining equation (p_hat-p)^2 = z^2 p(1-p)/n."""
    z = 2.5758293035489004
    for accepted, trials in [(0, 10), (10, 10), (7, 19), (123456, 654321)]:
        center, half = wilson_interval(accepted, trials)
        p_hat = accepted / trials
        for p in (center - half, center + half):
            assert (p_hat - p) ** 2 == pytest.approx(
                z * z * p * (1 - p) / trials, abs=1e-12
            )
        assert 0 <= center - half and center + half <= 1


def test_wilson_interval_validation():
    with pytest.raises(ValueError):
        wilson_interval(5, 0)
    with pytest.raises(ValueError):
        wilson_interval(11, 10)


# -- sampling runs ---------------------------------------------------------------


def test_run_T_dictator_always_accepts(rng):
    f = BooleanFunction.dictator(6, 3)
    rep = run_T(f, 7, EPS7, trials=5000, rng=rng)
    assert rep.accepted == rep.trials == 5000
    assert rep.estimate == 1.0
    assert rep.baseline == Fraction(15, 128)


def test_run_T_estimate_covers_exact(rng):
    f = BooleanFunction.random_folded(6, rng)
    exact = exact_acceptance(f, 7, EPS7)
    rep = run_T(f, 7, EPS7, trials=40_000, rng=rng)
    assert abs(float(exact) - rep.ci_center) <= rep.ci99


def test_run_T_warns_on_unfolded(rng):
    f = BooleanFunction.constant(4, 1)
    with pytest.warns(UserWarning, match="not folded"):
        run_T(f, 7, EPS7, trials=10, rng=rng)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        run_T(BooleanFunction.dictator(4, 1), 7, EPS7, trials=10, rng=rng)


def test_run_T_rejects_float_delta(rng):
    f = BooleanFunction.dictator(4, 1)
    with pytest.raises(TypeError):
        run_T(f, 7, 1 / 49, trials=10, rng=rng)
    with pytest.raises(ValueError):
        run_T(f, 7, EPS7, trials=0, rng=rng)


# -- exact enumeration -------------------------------------------------------------


def test_exact_acceptance_matches_brute_force(rng):
    dist = build_D(7, EPS7)
    for _ in range(3):
        f = BooleanFunction.random_folded(2, rng)
        assert exact_acceptance(f, 7, EPS7) == brute_force_acceptance(f, dist)


def test_exact_acceptance_dictator_is_one():
    for n in (1, 2, 4):
        for i in range(1, n + 1):
            assert exact_acceptance(BooleanFunction.dictator(n, i), 7, EPS7) == 1


def test_exact_acceptance_constant_function():
    # f = +1 always: the pattern is 0^k, which is accepted
    assert exact_acceptance(BooleanFunction.constant(3, 1), 7, EPS7) == 1
    # f = -1 always: the pattern is 1^k, never accepted
    assert exact_acceptance(BooleanFunction.constant(3, -1), 7, EPS7) == 0


def test_exact_budget_guard():
    f = BooleanFunction.dictator(4, 1)
    with pytest.raises(ValueError):
        exact_acceptance(f, 7, EPS7, budget=100)
    assert ENUM_BUDGET_DEFAULT == 10**8


def test_fourier_route_equals_membership_route(rng):
    for _ in range(5):
        f = BooleanFunction.random_folded(3, rng)
        a = exact_acceptance(f, 7, EPS7)
        b = fourier_acceptance(f, 7, EPS7)
        assert a == b  # identical Fraction, not approximately


def test_fourier_route_parity_n3(rng):
    f = BooleanFunction.parity(3)
    a = exact_acceptance(f, 7, EPS7)
    assert a == fourier_acceptance(f, 7, EPS7)
    assert 0 < a < 1


def test_decomposition_report(rng):
    f = BooleanFunction.random_folded(3, rng)
    rep = acceptance_with_decomposition(f, 7, EPS7)
    assert rep.exact == exact_acceptance(f, 7, EPS7)
    assert rep.ci99 == 0.0
    assert rep.covers_exact
    assert set(rep.e_s_by_size) <= set(range(1, 8))
    assert all(v >= 0 for v in rep.e_s_by_size.values())


def test_covers_exact_requires_exact(rng):
    rep = run_T(BooleanFunction.dictator(3, 1), 7, EPS7, trials=10, rng=rng)
    with pytest.raises(ValueError):
        rep.covers_exact


# -- correlation terms ----------------------------------------------------------


def test_correlation_exact_matches_brute_force(rng):
    dist = build_D(7, EPS7)
    f = BooleanFunction.random_folded(2, rng)
    for coords in [(1,), (2, 5), (1, 3, 7)]:
        mask = 0
        for i in coords:
            mask |= 1 << (i - 1)
        direct = Fraction(0)
        for combo in itertools.product(dist.atoms, repeat=2):
            mass = Fraction(1)
            for _, m in combo:
                mass *= m
            prod = 1
            for i in coords:
                x = 0
                for j, (bits, _) in enumerate(combo):
                    x |= ((bits >> (i - 1)) & 1) << j
                prod *= int(f.values[x])
            direct += mass * prod
        assert correlation_term(f, dist, coords) == direct
        assert correlation_term(f, dist, mask) == direct


def test_correlation_character_closed_form():
    dist = build_D(7, EPS7)
    f = BooleanFunction.parity(3)
    for coords in [(1, 2), (1, 2, 3), (4,)]:
        exact = correlation_term(f, dist, coords, method="exact")
        closed = correlation_term(f, dist, coords, method="character")
        assert exact == closed
    # pair moment of a single character: atom pair moment cubed
    assert correlation_term(f, dist, (1, 2), method="character") == (
        atom_moments(dist, [1, 2]) ** 3
    )


def test_correlation_character_rejects_nonchar(rng):
    dist = build_D(7, EPS7)
    with pytest.raises(ValueError):
        correlation_term(
            BooleanFunction.majority(3), dist, (1,), method="character"
        )


def test_correlation_monte_carlo(rng):
    dist = build_D(7, EPS7)
    f = BooleanFunction.dictator(3, 1)
    exact = correlation_term(f, dist, (1, 2), method="exact")
    est, sigma = correlation_term(
        f, dist, (1, 2), method="monte-carlo", trials=40_000, rng=rng
    )
    assert abs(est - float(exact)) <= 5 * sigma + 1e-9
    with pytest.raises(ValueError):
        correlation_term(f, dist, (1, 2), method="monte-carlo", rng=None)
    with pytest.raises(ValueError):
        correlation_term(f, dist, (1,), method="nope")
    with pytest.raises(ValueError):
        correlation_term(f, dist, 0)


# -- schedule ----------------------------------------------------------------------


def test_schedule_exact_recurrence_k7():
    sched = build_schedule(7, EPS7, mode="canonical")
    assert sched.err == Fraction(1, 31360)
    assert sched.r_exact == Fraction(219520) ** 2
    assert sched.r == 219520**2
    assert sched.mode == "canonical"
    assert len(sched.levels) == 3  # levels 0, 1, 2
    assert sched.identity_check()
    assert sched.interval_check()
    lvl0, lvl1, lvl2 = sched.levels
    assert lvl0.eps == EPS7
    assert not lvl0.symbolic_only
    # level 1: log2(eps_1) = log2(err) - F with F an exact integer
    assert lvl1.symbolic_only
    assert lvl1.shift_int is not None
    assert lvl1.shift_int > 10**160
    with pytest.raises(ValueError):
        lvl1.eps_as_float()
    # the stored high-precision log2 agrees with the integer shift
    import mpmath

    with mpmath.workprec(700):
        expected = mpmath.log(mpmath.mpf(1) / 31360, 2) - mpmath.mpf(lvl1.shift_int)
        rel = abs((lvl1.log2_eps - expected) / expected)
        assert rel < 1e-6
    # level 2 is beyond even integer shifts; only the log2 survives
    assert lvl2.symbolic_only
    assert lvl2.log2_eps is not None
    assert sched.sampling_levels() == []


def test_schedule_depth_cap():
    with pytest.raises(ValueError):
        build_schedule(7, EPS7, mode="canonical", depth=3)


def test_schedule_practical_chain():
    chain = [EPS7, Fraction(1, 100), Fraction(1, 1000)]
    sched = build_schedule(7, EPS7, mode="practical", practical_eps_list=chain)
    assert [lvl.eps for lvl in sched.levels] == chain
    assert sched.identity_check()
    assert sched.interval_check()
    levels = sched.sampling_levels()
    assert [lvl.j for lvl in levels] == [1, 2]
    assert all(not lvl.symbolic_only for lvl in sched.levels)
    # gamma_j * d_{j,1} = 2k L symbolically
    for j, prod in sched.identity_residuals():
        assert prod == SymCoef(Fraction(14), 0, 1)
    # d_{j,i} is the i-th power of d_{j,1}
    assert sched.d(1, 3) == pytest.approx(sched.levels[1].d1_value ** 3)


def test_schedule_practical_validation():
    with pytest.raises(ValueError):
        build_schedule(7, EPS7, practical_eps_list=[Fraction(1, 50)])
    with pytest.raises(ValueError):
        build_schedule(7, EPS7, practical_eps_list=[EPS7, EPS7])
    with pytest.raises(ValueError):
        build_schedule(7, EPS7, practical_eps_list=[EPS7, Fraction(1, 40)])
    with pytest.raises(ValueError):
        build_schedule(7, Fraction(1, 48))
    with pytest.raises(TypeError):
        build_schedule(7, 1 / 49)


def test_schedule_single_level_samples_level0():
    sched = build_schedule(7, EPS7)
    levels = sched.sampling_levels()
    assert len(levels) == 1 and levels[0].j == 0


def test_run_Tprime_dictator(rng):
    chain = [EPS7, Fraction(1, 200)]
    sched = build_schedule(7, EPS7, practical_eps_list=chain)
    f = BooleanFunction.dictator(5, 2)
    rep = run_Tprime(f, sched, trials=4000, rng=rng)
    assert rep.estimate == 1.0
    rep0 = run_Tprime(f, sched, trials=100, rng=rng, level0_only=True)
    assert rep0.accepted == 100


def test_run_Tprime_rejects_symbolic_schedule(rng):
    sched = build_schedule(7, EPS7, mode="canonical")
    f = BooleanFunction.dictator(4, 1)
    with pytest.raises(ValueError):
        run_Tprime(f, sched, trials=10, rng=rng)
    rep = run_Tprime(f, sched, trials=10, rng=rng, level0_only=True)
    assert rep.accepted == 10


# -- diagnostics --------------------------------------------------------------------


def test_soundness_certificate_dictator():
    f = BooleanFunction.dictator(4, 2)
    cert = soundness_certificate(f, 7, d=2, tau=0.5, delta=EPS7)
    assert cert.max_degree_influence == pytest.approx(1.0)
    assert not cert.quasirandom
    assert cert.exact == 1
    assert cert.margin == pytest.approx(1 - 15 / 128 - 1 / 49)


def test_soundness_certificate_needs_rng_when_large():
    f = BooleanFunction.dictator(8, 1)  # 15^8 > default budget
    with pytest.raises(ValueError):
        soundness_certificate(f, 7, d=2, tau=0.5, delta=EPS7)


def test_soundness_certificate_sampled(rng):
    f = BooleanFunction.random_folded(8, rng)
    cert = soundness_certificate(
        f, 7, d=3, tau=0.1, delta=EPS7, trials=20_000, rng=rng
    )
    assert cert.exact is None
    assert 0 <= cert.acceptance <= 1
    assert cert.baseline == Fraction(15, 128)


def test_lowdeg_gap_identity_case(rng):
    f = BooleanFunction.random_folded(3, rng)
    rep = lowdeg_gap_diagnostic(f, 7, EPS7, gamma=0.0, d_list=[3])
    assert rep.gap == 0.0
    assert rep.lhs == rep.rhs
    assert rep.s == math.inf
    assert rep.sup_high >= 0


def test_lowdeg_gap_general(rng):
    f = BooleanFunction.random_folded(3, rng)
    rep = lowdeg_gap_diagnostic(f, 7, EPS7, gamma=0.05, d_list=[2])
    assert rep.gap >= 0
    assert 0 <= rep.interval_mass <= 1 + 1e-12
    assert rep.bound_2err > rep.bound_1err
    assert rep.bound_2err == pytest.approx(rep.err + rep.bound_1err)
    assert rep.S == pytest.approx(math.log(7 * 31360) / float(EPS7) ** 2)
    assert rep.s == pytest.approx((1 / 31360) / (7 * 0.05))


def test_lowdeg_gap_validation(rng):
    f = BooleanFunction.random_folded(2, rng)
    with pytest.raises(ValueError):
        lowdeg_gap_diagnostic(f, 7, EPS7, gamma=0.1, d_list=[])
