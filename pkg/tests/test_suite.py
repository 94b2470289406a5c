"""Self-verification suite: green path, k=15, and fault injection."""

from fractions import Fraction

import json

import pytest

from dictlab._suite import CHECK_NAMES, run_suite


@pytest.fixture(scope="module")
def clean7():
    return run_suite(k=7, eps=Fraction(1, 49), seed=0)


def test_all_checks_pass_k7(clean7):
    assert clean7.all_pass
    assert [c.name for c in clean7.checks] == list(CHECK_NAMES)
    assert all(c.status == "pass" for c in clean7.checks)


def test_check_names_complete():
    assert len(CHECK_NAMES) == 18
    assert len(set(CHECK_NAMES)) == 18
    prefixes = {name.split("-")[0] for name in CHECK_NAMES}
    assert {"predicate", "distribution", "correlation"} <= prefixes


def test_result_serializes(clean7):
    d = clean7.to_dict()
    text = json.dumps(d)  # must be JSON-clean (no Fractions, no numpy scalars)
    assert '"all_pass": true' in text
    assert d["k"] == 7
    assert d["eps"] == {"num": "1", "den": "49"}
    assert len(d["checks"]) == 18


def test_all_checks_pass_k15():
    result = run_suite(k=15, eps=Fraction(1, 225), seed=0)
    assert result.all_pass


def test_unknown_corrupt_rejected():
    with pytest.raises(ValueError):
        run_suite(k=7, eps=Fraction(1, 49), seed=0, corrupt="no-such-check")


@pytest.mark.parametrize("name", CHECK_NAMES)
def test_fault_injection_is_detected(name):
    """Corrupting one expected value fails exactly that check."""
    result = run_suite(k=7, eps=Fraction(1, 49), seed=0, corrupt=name)
    assert not result.all_pass
    failed = [c.name for c in result.checks if not c.ok]
    assert failed == [name]
