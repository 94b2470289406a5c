"""Command-line interface: construction, verification suites, experiments.

All reports are machine readable: JSON objects (or CSV for experiment
tables) with exact rationals serialized as {"num": "<decimal>", "den":
"<decimal>"} and floats as shortest round-trip decimals, so identical
(command, seed) pairs produce byte-identical output. Exit codes: 0 on
success, 1 when a verification check fails, 2 on usage errors. The
default seed comes from the DICTLAB_SEED environment variable.
"""

from __future__ import annotations

import csv
import io
import json
import os
import sys
import warnings
from fractions import Fraction

import click
import mpmath
import numpy as np

from dictlab.boolfn import (
    BooleanFunction,
    MultilinearPoly,
    degree_influence,
    influence,
    is_folded,
    read_table,
    wht,
)
from dictlab.distribution import build_D
from dictlab.gaussian import make_sqrt, mm_residual, perturbation_check, product_gap_check
from dictlab.predicate import build_Pk, fourier_of_predicate, m_from_k
from dictlab.tester import build_schedule, exact_acceptance, run_T
from dictlab._suite import CHECK_NAMES, run_suite

EXACT_AUTO_BUDGET = 10**6


def _default_seed() -> int:
    try:
        return int(os.environ.get("DICTLAB_SEED", "0"))
    except ValueError:
        raise click.UsageError("DICTLAB_SEED must be an integer")


def _parse_fraction(text: str, name: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise click.BadParameter(f"{name} must be a rational like 1/49")


def _rational(x: Fraction) -> dict:
    return {"num": str(x.numerator), "den": str(x.denominator)}


def _emit(obj) -> None:
    click.echo(json.dumps(obj, indent=2))


def _bits_string(bits: int, k: int) -> str:
    return "".join("1" if (bits >> i) & 1 else "0" for i in range(k))


def _parse_fn(spec: str, n: int | None, k: int) -> tuple[BooleanFunction, str]:
    """Resolve a function source: builtin:... or a truth-table file path."""
    if spec.startswith("builtin:"):
        parts = spec.split(":")
        kind = parts[1] if len(parts) > 1 else ""
        if n is None:
            raise click.BadParameter("builtin functions require --n")
        try:
            if kind == "dictator":
                i = int(parts[2]) if len(parts) > 2 else 1
                return BooleanFunction.dictator(n, i), f"dictator:{i}"
            if kind == "parity":
                if len(parts) > 2:
                    coords = tuple(int(c) for c in parts[2].split(","))
                    return BooleanFunction.parity(n, coords), spec[8:]
                return BooleanFunction.parity(n), "parity"
            if kind == "majority":
                if len(parts) > 2:
                    c = int(parts[2])
                    inner = BooleanFunction.majority(c)
                    values = inner.values[
                        np.arange(1 << n, dtype=np.int64) & ((1 << c) - 1)
                    ]
                    return BooleanFunction(n, values), f"majority:{c}"
                return BooleanFunction.majority(n), "majority"
            if kind == "tribes":
                width = int(parts[2]) if len(parts) > 2 else 2
                return BooleanFunction.tribes(n, width), f"tribes:{width}"
            if kind == "random":
                seed = int(parts[2]) if len(parts) > 2 else 0
                return (
                    BooleanFunction.random_folded(n, np.random.default_rng(seed)),
                    f"random:{seed}",
                )
        except (ValueError, IndexError) as exc:
            raise click.BadParameter(f"bad function spec {spec!r}: {exc}")
        raise click.BadParameter(f"unknown builtin {kind!r}")
    try:
        f = read_table(spec)
    except OSError as exc:
        raise click.BadParameter(f"cannot read truth table {spec!r}: {exc}")
    except ValueError as exc:
        raise click.BadParameter(f"bad truth table {spec!r}: {exc}")
    if n is not None and f.n != n:
        raise click.BadParameter(f"table has n={f.n}, but --n {n} was given")
    return f, os.path.basename(spec)


@click.group()
def main() -> None:
    """Exact and statistical checks for a k-query dictatorship test."""


# -- verify -------------------------------------------------------------------


@main.command("verify")
@click.option("--k", default=7, show_default=True, type=int)
@click.option("--eps", default="1/49", show_default=True)
@click.option("--seed", default=None, type=int, help="default: DICTLAB_SEED or 0")
@click.option(
    "--corrupt",
    default=None,
    type=click.Choice(CHECK_NAMES),
    help="perturb the named check's expected value (fault-injection self-test)",
)
def cmd_verify(k: int, eps: str, seed: int | None, corrupt: str | None) -> None:
    """Run the full verification suite; exit 0 iff every check passes."""
    eps_f = _parse_fraction(eps, "--eps")
    seed = _default_seed() if seed is None else seed
    try:
        result = run_suite(k=k, eps=eps_f, seed=seed, corrupt=corrupt)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    _emit(result.to_dict())
    sys.exit(0 if result.all_pass else 1)


# -- test ---------------------------------------------------------------------


@main.group("test")
def cmd_test() -> None:
    """Run the dictatorship test or inspect level schedules."""


@cmd_test.command("run")
@click.option("--fn", required=True, help="builtin:<name>[:args] or a table file")
@click.option("--k", default=7, show_default=True, type=int)
@click.option("--eps", default="1/49", show_default=True)
@click.option("--n", default=None, type=int)
@click.option("--trials", default=100_000, show_default=True, type=int)
@click.option("--seed", default=None, type=int)
@click.option("--exact", is_flag=True, help="also compute the exact acceptance")
def cmd_test_run(fn, k, eps, n, trials, seed, exact) -> None:
    """Monte Carlo acceptance of one function, with optional exact value."""
    eps_f = _parse_fraction(eps, "--eps")
    seed = _default_seed() if seed is None else seed
    f, label = _parse_fn(fn, n, k)
    rng = np.random.default_rng(seed)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            report = run_T(f, k, eps_f, trials, rng)
            exact_val = exact_acceptance(f, k, eps_f) if exact else None
    except ValueError as exc:
        raise click.UsageError(str(exc))
    out = {
        "fn": label,
        "k": k,
        "eps": _rational(eps_f),
        "n": f.n,
        "trials": trials,
        "seed": seed,
        "folded": is_folded(f),
        "estimate": report.estimate,
        "accepted": report.accepted,
        "ci": {
            "center": report.ci_center,
            "halfwidth": report.ci99,
            "level": 0.99,
        },
        "exact": _rational(exact_val) if exact_val is not None else None,
        "baseline": _rational(report.baseline),
        "margin": report.estimate - float(report.baseline),
    }
    _emit(out)


def _mpf_str(x) -> str | None:
    if x is None:
        return None
    return mpmath.nstr(x, 25, max_fixed=30, min_fixed=-30)


@cmd_test.command("schedule")
@click.option("--k", default=7, show_default=True, type=int)
@click.option("--eps", default="1/49", show_default=True)
@click.option(
    "--mode",
    default="canonical",
    show_default=True,
    type=click.Choice(["canonical", "practical"]),
    help="literal double-exponential recurrence, or an explicit level list",
)
@click.option("--levels", default=None, help="comma-separated rationals (practical)")
def cmd_test_schedule(k, eps, mode, levels) -> None:
    """Dump the level schedule with exact and log-space parameters."""
    eps_f = _parse_fraction(eps, "--eps")
    chain = None
    if levels is not None:
        chain = [_parse_fraction(s, "--levels") for s in levels.split(",")]
    try:
        sched = build_schedule(
            k,
            eps_f,
            mode=mode,
            practical_eps_list=chain,
        )
    except ValueError as exc:
        raise click.UsageError(str(exc))
    out = {
        "k": k,
        "eps": _rational(eps_f),
        "err": _rational(sched.err),
        "r": str(sched.r_exact.numerator)
        if sched.r_exact.denominator == 1
        else _rational(sched.r_exact),
        "mode": sched.mode,
        "identity_check": sched.identity_check(),
        "interval_check": sched.interval_check(),
        "levels": [
            {
                "j": lvl.j,
                "eps": _rational(lvl.eps) if lvl.eps is not None else None,
                "log2_eps": _mpf_str(lvl.log2_eps),
                "symbolic_only": lvl.symbolic_only,
                "s": lvl.s_value,
                "log2_s": _mpf_str(lvl.log2_s),
                "S": lvl.S_value,
                "gamma": lvl.gamma_value,
                "log2_gamma": _mpf_str(lvl.log2_gamma),
                "d1": lvl.d1_value,
                "log2_d1": _mpf_str(lvl.log2_d1),
                "beta": _rational(lvl.beta) if lvl.beta is not None else None,
            }
            for lvl in sched.levels
        ],
    }
    _emit(out)


# -- dist ---------------------------------------------------------------------


@main.group("dist")
def cmd_dist() -> None:
    """Inspect or verify the query distribution."""


def _atom_rows(dist) -> list[dict]:
    rows = []
    kinds = (
        [("zero", None)]
        + [("hadamard", i) for i in range(1, dist.k + 1)]
        + [("unit", i) for i in range(1, dist.k + 1)]
    )
    for (kind, index), (bits, mass) in zip(kinds, dist.atoms):
        rows.append(
            {
                "string": _bits_string(bits, dist.k),
                "bits": bits,
                "kind": kind,
                "index": index,
                "mass": _rational(mass),
            }
        )
    return rows


@cmd_dist.command("dump")
@click.option("--k", default=7, show_default=True, type=int)
@click.option("--eps", default="1/49", show_default=True)
def cmd_dist_dump(k, eps) -> None:
    """Atom table with exact masses."""
    eps_f = _parse_fraction(eps, "--eps")
    try:
        dist = build_D(k, eps_f)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    _emit(
        {
            "k": k,
            "eps": _rational(eps_f),
            "alpha": _rational(dist.alpha),
            "beta": _rational(dist.beta),
            "min_mass": _rational(dist.min_mass),
            "atoms": _atom_rows(dist),
        }
    )


@cmd_dist.command("verify")
@click.option("--k", default=7, show_default=True, type=int)
@click.option("--eps", default="1/49", show_default=True)
@click.option("--seed", default=None, type=int)
def cmd_dist_verify(k, eps, seed) -> None:
    """Distribution and correlation checks only; exit 0 iff all pass."""
    eps_f = _parse_fraction(eps, "--eps")
    seed = _default_seed() if seed is None else seed
    try:
        result = run_suite(k=k, eps=eps_f, seed=seed)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    rows = [
        c
        for c in result.checks
        if c.name.startswith(("distribution-", "correlation-"))
    ]
    ok = all(c.ok for c in rows)
    _emit(
        {
            "k": k,
            "eps": _rational(eps_f),
            "all_pass": ok,
            "checks": [
                {
                    "name": c.name,
                    "claim": c.claim,
                    "status": c.status,
                    "measured": c.measured,
                    "expected": c.expected,
                    "tolerance": c.tolerance,
                }
                for c in rows
            ],
        }
    )
    sys.exit(0 if ok else 1)


# -- predicate ----------------------------------------------------------------


@main.group("predicate")
def cmd_predicate_group() -> None:
    """Inspect the accepting predicate."""


@cmd_predicate_group.command("dump")
@click.option("--k", default=7, show_default=True, type=int)
def cmd_predicate(k) -> None:
    """Dump the accepting strings and basic structure of the predicate."""
    try:
        pred = build_Pk(m_from_k(k))
    except ValueError as exc:
        raise click.UsageError(str(exc))
    pf = fourier_of_predicate(pred)
    _emit(
        {
            "k": k,
            "m": pred.m,
            "size": pred.size,
            "mean": _rational(pf.coeff(0)),
            "strings": [
                {
                    "string": _bits_string(b, k),
                    "bits": b,
                    "weight": bin(b).count("1"),
                }
                for b in sorted(pred.accepted_strings)
            ],
        }
    )


# -- gauss --------------------------------------------------------------------


@main.group("gauss")
def cmd_gauss() -> None:
    """Correlated Gaussian construction and its checks."""


@cmd_gauss.command("verify")
@click.option("--k", default=None, type=int, help="default: both 7 and 15")
@click.option(
    "--deltas", default="0,1e-4,1e-3,1e-2,2/43", show_default=True
)
def cmd_gauss_verify(k, deltas) -> None:
    """Square-root residuals and beta <= delta over a parameter grid."""
    ks = [k] if k is not None else [7, 15]
    try:
        dvals = [float(Fraction(t)) for t in deltas.split(",")]
    except (ValueError, ZeroDivisionError):
        raise click.BadParameter("--deltas must be comma-separated rationals")
    rows = []
    ok = True
    for kk in ks:
        for d in dvals:
            try:
                m = make_sqrt(kk, d)
                res = mm_residual(kk, d)
                passed = res <= 1e-12 and m.beta <= d + 1e-15
            except (AssertionError, ValueError) as exc:
                raise click.UsageError(f"k={kk} delta={d}: {exc}")
            ok &= passed
            rows.append(
                {
                    "k": kk,
                    "delta": d,
                    "beta": m.beta,
                    "residual": res,
                    "status": "pass" if passed else "fail",
                }
            )
    _emit({"all_pass": ok, "tolerance": 1e-12, "grid": rows})
    sys.exit(0 if ok else 1)


@cmd_gauss.command("perturb")
@click.option("--degree", default=2, show_default=True, type=int)
@click.option("--delta", default=0.01, show_default=True, type=float)
@click.option("--n", default=12, show_default=True, type=int)
@click.option("--trials", default=200_000, show_default=True, type=int)
@click.option("--seed", default=None, type=int)
def cmd_gauss_perturb(degree, delta, n, trials, seed) -> None:
    """Second moment of P(x) - P(z) for a resampled correlated pair."""
    seed = _default_seed() if seed is None else seed
    rng = np.random.default_rng(seed)
    poly = MultilinearPoly.random(n, degree, rng, unit_norm=True)
    rep = perturbation_check(poly, delta, trials, rng)
    _emit(
        {
            "degree": degree,
            "delta": delta,
            "n": n,
            "trials": trials,
            "seed": seed,
            "estimate": rep.estimate,
            "sigma": rep.sigma,
            "ci99": rep.ci99,
            "closed_form": rep.closed_form,
            "bound": rep.bound,
            "passes": rep.passes,
        }
    )
    sys.exit(0 if rep.passes else 1)


@cmd_gauss.command("gap")
@click.option("--k", default=7, show_default=True, type=int)
@click.option("--delta", default=None, type=float, help="default: 2 eps/(1-alpha) at eps=1/k^2")
@click.option("--t", default=3, show_default=True, type=int)
@click.option("--degree", default=2, show_default=True, type=int)
@click.option("--n", default=8, show_default=True, type=int)
@click.option("--trials", default=100_000, show_default=True, type=int)
@click.option("--seed", default=None, type=int)
def cmd_gauss_gap(k, delta, t, degree, n, trials, seed) -> None:
    """Correlated-vs-independent product-expectation gap, variance reduced."""
    seed = _default_seed() if seed is None else seed
    if delta is None:
        eps = Fraction(1, k * k)
        delta = float(2 * eps / (1 - (k - 1) * eps))
    rng = np.random.default_rng(seed)
    poly = MultilinearPoly.random(n, degree, rng, unit_norm=True)
    try:
        m = make_sqrt(k, delta)
        rep = product_gap_check(poly, t=t, m=m, trials=trials, rng=rng)
    except (AssertionError, ValueError) as exc:
        raise click.UsageError(str(exc))
    _emit(
        {
            "k": k,
            "delta": delta,
            "t": t,
            "degree": degree,
            "n": n,
            "trials": trials,
            "seed": seed,
            "gap": rep.gap_estimate,
            "gap_sigma": rep.gap_sigma,
            "bound": rep.bound,
            "independent_mean": rep.eh_mean,
            "independent_sigma": rep.eh_sigma,
            "independent_expected": rep.expected_eh,
            "passes": rep.passes,
        }
    )
    sys.exit(0 if rep.passes else 1)


# -- fourier ------------------------------------------------------------------


@main.command("fourier")
@click.option("--fn", required=True)
@click.option("--n", default=None, type=int)
@click.option("--top", default=32, show_default=True, type=int)
@click.option("--d", default=3, show_default=True, type=int, help="degree cap for degree-d influences")
def cmd_fourier(fn, n, top, d) -> None:
    """Exact Fourier expansion, influences, and the Parseval identity."""
    f, label = _parse_fn(fn, n, 7)
    expansion = wht(f)
    num, den = expansion.parseval_exact()
    nonzero = [
        (int(mask), expansion.coeff_fraction(mask))
        for mask in np.nonzero(expansion.num)[0]
    ]
    nonzero.sort(key=lambda mc: (-abs(mc[1]), mc[0]))
    _emit(
        {
            "fn": label,
            "n": f.n,
            "degree": expansion.degree,
            "folded": is_folded(f),
            "parseval": {
                "sum_of_squares": _rational(Fraction(num, den)),
                "holds": num == den,
            },
            "coefficients": [
                {
                    "coords": [i + 1 for i in range(f.n) if (mask >> i) & 1],
                    "value": _rational(coeff),
                }
                for mask, coeff in nonzero[:top]
            ],
            "influences": [influence(expansion, i) for i in range(1, f.n + 1)],
            "degree_influences": {
                "d": d,
                "values": [
                    degree_influence(expansion, i, d) for i in range(1, f.n + 1)
                ],
            },
        }
    )


# -- experiment ---------------------------------------------------------------

_CONFIG_FIELDS = {
    "k": int,
    "eps": str,
    "n": int,
    "trials": int,
    "seed": int,
    "output": str,
    "format": str,
    "corpus": str,
    "random_count": int,
    "d_influence": int,
    "exact": (bool, str),
}

_CONFIG_DEFAULTS = {
    "k": 7,
    "eps": "1/49",
    "n": 10,
    "trials": 100_000,
    "seed": 0,
    "output": "-",
    "format": "csv",
    "corpus": "default",
    "random_count": 3,
    "d_influence": 3,
    "exact": "auto",
}


def _load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise click.UsageError(f"cannot read config {path!r}: {exc}")
    except json.JSONDecodeError as exc:
        raise click.UsageError(f"config {path!r} is not valid JSON: {exc}")
    if not isinstance(raw, dict):
        raise click.UsageError("config must be a flat JSON object")
    unknown = sorted(set(raw) - set(_CONFIG_FIELDS))
    if unknown:
        raise click.UsageError(f"unknown config fields: {', '.join(unknown)}")
    config = dict(_CONFIG_DEFAULTS)
    config.update(raw)
    for key, expected in _CONFIG_FIELDS.items():
        if not isinstance(config[key], expected):
            raise click.UsageError(
                f"config field {key!r} must be {expected}, got {config[key]!r}"
            )
    if config["format"] not in ("csv", "json"):
        raise click.UsageError("config format must be 'csv' or 'json'")
    if config["exact"] not in (True, False, "auto"):
        raise click.UsageError("config exact must be true, false or 'auto'")
    return config


def _corpus(config) -> list[tuple[str, BooleanFunction]]:
    n = config["n"]
    seed = config["seed"]
    if config["corpus"] != "default":
        specs = [s.strip() for s in config["corpus"].split(",") if s.strip()]
        resolved = [_parse_fn(s, n, config["k"]) for s in specs]
        return [(label, f) for f, label in resolved]
    out = [("dictator:1", BooleanFunction.dictator(n, 1))]
    if n >= 2:
        out.append(("dictator:2", BooleanFunction.dictator(n, 2)))
    if n >= 3:
        f3, _ = _parse_fn("builtin:majority:3", n, config["k"])
        out.append(("majority:3", f3))
    out.append(("parity", BooleanFunction.parity(n)))
    if n % 2 == 1:
        out.append(("majority", BooleanFunction.majority(n)))
    if n >= 2:
        out.append(("tribes:2", BooleanFunction.tribes(n, 2)))
    for j in range(config["random_count"]):
        s = seed + 1000 + j
        out.append(
            (f"random:{s}", BooleanFunction.random_folded(n, np.random.default_rng(s)))
        )
    return out


@main.group("experiment")
def cmd_experiment() -> None:
    """Run the function corpus through the test and tabulate results."""


@cmd_experiment.command("run")
@click.option("--config", "config_path", required=True, type=str)
def cmd_experiment_run(config_path) -> None:
    """Acceptance table for a corpus of functions (CSV or JSON)."""
    config = _load_config(config_path)
    k = config["k"]
    eps = _parse_fraction(config["eps"], "eps")
    n = config["n"]
    trials = config["trials"]
    d_inf = config["d_influence"]
    want_exact = config["exact"]
    if want_exact == "auto":
        want_exact = (2 * k + 1) ** n <= EXACT_AUTO_BUDGET
    corpus = _corpus(config)
    rows = []
    streams = np.random.SeedSequence(config["seed"]).spawn(len(corpus))
    for (label, f), stream in zip(corpus, streams):
        rng = np.random.Generator(np.random.PCG64(stream))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            rep = run_T(f, k, eps, trials, rng)
            exact_val = exact_acceptance(f, k, eps) if want_exact else None
        expansion = wht(f)
        max_inf = max(degree_influence(expansion, i, d_inf) for i in range(1, n + 1))
        rows.append(
            {
                "function": label,
                "n": n,
                "k": k,
                "eps": f"{eps.numerator}/{eps.denominator}",
                "estimate": rep.estimate,
                "ci": rep.ci99,
                "exact": (
                    f"{exact_val.numerator}/{exact_val.denominator}"
                    if exact_val is not None
                    else ""
                ),
                "baseline": f"{rep.baseline.numerator}/{rep.baseline.denominator}",
                "max_degree_influence": max_inf,
            }
        )
    if config["format"] == "json":
        payload = json.dumps(rows, indent=2) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        payload = buf.getvalue()
    if config["output"] == "-":
        click.echo(payload, nl=False)
    else:
        with open(config["output"], "w", encoding="utf-8", newline="") as fh:
            fh.write(payload)
        click.echo(f"wrote {len(rows)} rows to {config['output']}")


if __name__ == "__main__":
    main()
